use std::fmt;

use super::parser::{SyntaxError, SyntaxErrorKind};
use super::{Connective, Quantifier};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Quant(Quantifier),
    Not,
    Op(Connective),
    LParen,
    RParen,
    Comma,
    Ident(String),
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Quant(q) => f.write_str(q.symbol()),
            Token::Not => f.write_str("¬"),
            Token::Op(op) => f.write_str(op.symbol()),
            Token::LParen => f.write_str("("),
            Token::RParen => f.write_str(")"),
            Token::Comma => f.write_str(","),
            Token::Ident(s) => f.write_str(s),
        }
    }
}

/// A token with its character offset in the source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Spanned {
    pub token: Token,
    pub pos: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Lexes FOL text, accepting Unicode connectives and ASCII aliases
/// (`forall`, `exists`, `~`, `&`, `|`, `->`, `<->`, `xor`).
pub(crate) fn lex(input: &str) -> Result<Vec<Spanned>, SyntaxError> {
    let chars: Vec<char> = input.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let pos = i;
        let simple = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '∀' => Some(Token::Quant(Quantifier::Forall)),
            '∃' => Some(Token::Quant(Quantifier::Exists)),
            '¬' | '~' => Some(Token::Not),
            '∧' | '&' => Some(Token::Op(Connective::And)),
            '∨' | '|' => Some(Token::Op(Connective::Or)),
            '→' => Some(Token::Op(Connective::Implies)),
            '↔' => Some(Token::Op(Connective::Iff)),
            '⊕' => Some(Token::Op(Connective::Xor)),
            '(' => Some(Token::LParen),
            ')' => Some(Token::RParen),
            ',' => Some(Token::Comma),
            '=' | '≠' | '%' | '!' => {
                return Err(SyntaxError::new(pos, SyntaxErrorKind::BannedSymbol(c)));
            }
            _ => None,
        };
        if let Some(token) = simple {
            out.push(Spanned { token, pos });
            i += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            out.push(Spanned {
                token: Token::Op(Connective::Implies),
                pos,
            });
            i += 2;
            continue;
        }
        if c == '<' && chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') {
            out.push(Spanned {
                token: Token::Op(Connective::Iff),
                pos,
            });
            i += 3;
            continue;
        }
        if is_ident_char(c) {
            let start = i;
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let token = match word.as_str() {
                "forall" => Token::Quant(Quantifier::Forall),
                "exists" => Token::Quant(Quantifier::Exists),
                "xor" => Token::Op(Connective::Xor),
                _ => Token::Ident(word),
            };
            out.push(Spanned { token, pos: start });
            continue;
        }
        return Err(SyntaxError::new(pos, SyntaxErrorKind::UnexpectedChar(c)));
    }
    Ok(out)
}

/// Raw lexical tokens of `input`, with aliases normalized.
pub fn tokenize(input: &str) -> Result<Vec<Token>, SyntaxError> {
    Ok(lex(input)?.into_iter().map(|s| s.token).collect())
}
