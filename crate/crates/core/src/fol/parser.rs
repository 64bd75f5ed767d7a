use std::collections::HashSet;

use thiserror::Error;

use super::lexer::{lex, Spanned, Token};
use super::{is_simple_var_name, FolRule, Formula, Literal, QuantifiedVar, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {position}: {kind}")]
pub struct SyntaxError {
    /// Character offset into the input.
    pub position: usize,
    pub kind: SyntaxErrorKind,
}

impl SyntaxError {
    pub(crate) fn new(position: usize, kind: SyntaxErrorKind) -> Self {
        SyntaxError { position, kind }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SyntaxErrorKind {
    #[error("empty input")]
    Empty,
    #[error("symbol '{0}' is not allowed")]
    BannedSymbol(char),
    #[error("unexpected character '{0}'")]
    UnexpectedChar(char),
    #[error("unexpected '{found}', expected {expected}")]
    Unexpected { found: String, expected: &'static str },
    #[error("unexpected end of input, expected {0}")]
    UnexpectedEnd(&'static str),
    #[error("quantifiers must appear at the beginning of the rule")]
    EmbeddedQuantifier,
    #[error("variable '{0}' is quantified twice")]
    DuplicateQuantifier(String),
    #[error("'{0}' is not a valid variable name")]
    BadVariable(String),
}

struct Parser {
    tokens: Vec<Spanned>,
    idx: usize,
    end: usize,
    bound: HashSet<String>,
}

/// Parses FOL text into a rule. Connective precedence is
/// `∧ > ∨ > ⊕ > → > ↔`; `→` is right-associative, the rest left.
pub fn parse(input: &str) -> Result<FolRule, SyntaxError> {
    let tokens = lex(input)?;
    let end = input.chars().count();
    if tokens.is_empty() {
        return Err(SyntaxError::new(0, SyntaxErrorKind::Empty));
    }
    let mut p = Parser {
        tokens,
        idx: 0,
        end,
        bound: HashSet::new(),
    };
    let prefix = p.prefix()?;
    p.bound = prefix.iter().map(|q| q.var.clone()).collect();
    let body = p.expr(0)?;
    if let Some(tok) = p.peek() {
        return Err(p.unexpected(tok.clone(), "a connective or end of input"));
    }
    Ok(FolRule { prefix, body })
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.tokens.get(self.idx)
    }

    fn pos(&self) -> usize {
        self.peek().map_or(self.end, |s| s.pos)
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.tokens.get(self.idx).cloned();
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn unexpected(&self, found: Spanned, expected: &'static str) -> SyntaxError {
        SyntaxError::new(
            found.pos,
            SyntaxErrorKind::Unexpected {
                found: found.token.to_string(),
                expected,
            },
        )
    }

    fn expect(&mut self, want: Token, expected: &'static str) -> Result<(), SyntaxError> {
        match self.bump() {
            Some(s) if s.token == want => Ok(()),
            Some(s) => Err(self.unexpected(s, expected)),
            None => Err(SyntaxError::new(self.end, SyntaxErrorKind::UnexpectedEnd(expected))),
        }
    }

    fn prefix(&mut self) -> Result<Vec<QuantifiedVar>, SyntaxError> {
        let mut prefix: Vec<QuantifiedVar> = Vec::new();
        while let Some(Spanned {
            token: Token::Quant(q),
            ..
        }) = self.peek().cloned()
        {
            self.bump();
            let pos = self.pos();
            let var = match self.bump() {
                Some(Spanned {
                    token: Token::Ident(name),
                    ..
                }) => name,
                Some(s) => return Err(self.unexpected(s, "a variable")),
                None => return Err(SyntaxError::new(self.end, SyntaxErrorKind::UnexpectedEnd("a variable"))),
            };
            if !var.starts_with(|c: char| c.is_lowercase()) && !is_simple_var_name(&var) {
                return Err(SyntaxError::new(pos, SyntaxErrorKind::BadVariable(var)));
            }
            if prefix.iter().any(|b| b.var == var) {
                return Err(SyntaxError::new(pos, SyntaxErrorKind::DuplicateQuantifier(var)));
            }
            prefix.push(QuantifiedVar { quantifier: q, var });
        }
        Ok(prefix)
    }

    fn expr(&mut self, min_prec: u8) -> Result<Formula, SyntaxError> {
        let mut lhs = self.primary()?;
        while let Some(Spanned {
            token: Token::Op(op), ..
        }) = self.peek().cloned()
        {
            if op.precedence() < min_prec {
                break;
            }
            self.bump();
            let next_min = if op.is_right_assoc() {
                op.precedence()
            } else {
                op.precedence() + 1
            };
            let rhs = self.expr(next_min)?;
            lhs = Formula::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<Formula, SyntaxError> {
        let Some(tok) = self.bump() else {
            return Err(SyntaxError::new(self.end, SyntaxErrorKind::UnexpectedEnd("a formula")));
        };
        match tok.token {
            Token::Not => match self.peek().map(|s| s.token.clone()) {
                Some(Token::LParen) => {
                    self.bump();
                    let inner = self.expr(0)?;
                    self.expect(Token::RParen, "')'")?;
                    Ok(Formula::Not(Box::new(inner)))
                }
                Some(Token::Ident(name)) => {
                    self.bump();
                    self.literal(true, name)
                }
                Some(_) => {
                    let s = self.bump().expect("peeked");
                    Err(self.unexpected(s, "'(' or a predicate after '¬'"))
                }
                None => Err(SyntaxError::new(
                    self.end,
                    SyntaxErrorKind::UnexpectedEnd("'(' or a predicate after '¬'"),
                )),
            },
            Token::LParen => {
                let inner = self.expr(0)?;
                self.expect(Token::RParen, "')'")?;
                Ok(Formula::Group(Box::new(inner)))
            }
            Token::Ident(name) => self.literal(false, name),
            Token::Quant(_) => Err(SyntaxError::new(tok.pos, SyntaxErrorKind::EmbeddedQuantifier)),
            _ => Err(self.unexpected(tok, "a formula")),
        }
    }

    fn literal(&mut self, negated: bool, predicate: String) -> Result<Formula, SyntaxError> {
        self.expect(Token::LParen, "'(' after predicate name")?;
        let mut args = Vec::new();
        loop {
            match self.bump() {
                Some(Spanned {
                    token: Token::Ident(name),
                    ..
                }) => args.push(if self.bound.contains(&name) || is_simple_var_name(&name) {
                    Term::Var(name)
                } else {
                    Term::Const(name)
                }),
                Some(s) => return Err(self.unexpected(s, "a term")),
                None => return Err(SyntaxError::new(self.end, SyntaxErrorKind::UnexpectedEnd("a term"))),
            }
            match self.bump() {
                Some(Spanned {
                    token: Token::Comma, ..
                }) => continue,
                Some(Spanned {
                    token: Token::RParen,
                    ..
                }) => break,
                Some(s) => return Err(self.unexpected(s, "',' or ')'")),
                None => return Err(SyntaxError::new(self.end, SyntaxErrorKind::UnexpectedEnd("',' or ')'"))),
            }
        }
        Ok(Formula::Literal(Literal {
            negated,
            predicate,
            args,
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Connective, Quantifier};
    use super::*;

    fn lit(name: &str, args: &[&str]) -> Formula {
        Formula::Literal(Literal {
            negated: false,
            predicate: name.into(),
            args: args
                .iter()
                .map(|a| {
                    if is_simple_var_name(a) {
                        Term::Var((*a).into())
                    } else {
                        Term::Const((*a).into())
                    }
                })
                .collect(),
        })
    }

    #[test]
    fn doctor_rule_structure() {
        let r = parse("∀x (Doctor(x) → HasMedicalDegree(x))").unwrap();
        assert_eq!(
            r.prefix,
            [QuantifiedVar {
                quantifier: Quantifier::Forall,
                var: "x".into()
            }]
        );
        assert_eq!(
            r.body,
            Formula::Group(Box::new(Formula::binary(
                Connective::Implies,
                lit("Doctor", &["x"]),
                lit("HasMedicalDegree", &["x"])
            )))
        );
    }

    #[test]
    fn minimal_rule() {
        let r = parse("P(A)").unwrap();
        assert!(r.prefix.is_empty());
        assert_eq!(r.body, lit("P", &["A"]));
    }

    #[test]
    fn precedence_and_associativity() {
        let r = parse("A(a) ∧ B(a) ∨ C(a)").unwrap();
        assert!(matches!(r.body, Formula::Binary { op: Connective::Or, .. }));
        let r = parse("A(a) → B(a) → C(a)").unwrap();
        match r.body {
            Formula::Binary {
                op: Connective::Implies,
                left,
                right,
            } => {
                assert_eq!(*left, lit("A", &["a"]));
                assert!(matches!(*right, Formula::Binary { op: Connective::Implies, .. }));
            }
            other => panic!("{other:?}"),
        }
        let r = parse("A(a) ∧ B(a) ∧ C(a)").unwrap();
        match r.body {
            Formula::Binary { left, .. } => {
                assert!(matches!(*left, Formula::Binary { op: Connective::And, .. }))
            }
            other => panic!("{other:?}"),
        }
        let r = parse("A(a) ⊕ B(a) → C(a) ↔ D(a)").unwrap();
        assert!(matches!(r.body, Formula::Binary { op: Connective::Iff, .. }));
    }

    #[test]
    fn rejects_ungrammatical_input() {
        for bad in [
            "y = a ∨ y = b",
            "a ∧ b ∧ c",
            "P()",
            "∀x P(x) ∧",
            "∀x (P(x)",
            "P(x))",
            "¬¬P(x)",
            "∀x ∃x P(x)",
            "∀X P(X)",
            "P(x) → ∃y Q(y)",
            "∀x",
            "",
            "   ",
            "P(x,)",
        ] {
            assert!(parse(bad).is_err(), "accepted {bad:?}");
        }
    }

    #[test]
    fn error_positions_point_at_offender() {
        let e = parse("∀x P(x) ∧").unwrap_err();
        assert_eq!(e.position, 9);
        assert!(matches!(e.kind, SyntaxErrorKind::UnexpectedEnd(_)));
        let e = parse("∀x ∃x P(x)").unwrap_err();
        assert_eq!(e.position, 4);
        let e = parse("P(x) → ∃y Q(y)").unwrap_err();
        assert_eq!(e, SyntaxError::new(7, SyntaxErrorKind::EmbeddedQuantifier));
    }
}
