use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fol::{Connective, FolRule, Formula, Literal, NodePath, QuantifiedVar, Quantifier, Term};

/// The nine atomic perturbation kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PerturbKind {
    ChangePredicate,
    ChangeTerm,
    ChangeOperator,
    InsertTerm,
    InsertNegation,
    InsertFormula,
    DeleteTerm,
    DeleteNegation,
    DeleteFormula,
}

impl PerturbKind {
    pub const ALL: [PerturbKind; 9] = [
        PerturbKind::ChangePredicate,
        PerturbKind::ChangeTerm,
        PerturbKind::ChangeOperator,
        PerturbKind::InsertTerm,
        PerturbKind::InsertNegation,
        PerturbKind::InsertFormula,
        PerturbKind::DeleteTerm,
        PerturbKind::DeleteNegation,
        PerturbKind::DeleteFormula,
    ];

    /// Insert and Delete swap; Change kinds are their own dual.
    pub fn dual(self) -> Self {
        use PerturbKind::*;
        match self {
            InsertTerm => DeleteTerm,
            DeleteTerm => InsertTerm,
            InsertNegation => DeleteNegation,
            DeleteNegation => InsertNegation,
            InsertFormula => DeleteFormula,
            DeleteFormula => InsertFormula,
            other => other,
        }
    }
}

/// Which operand of the new binary node holds the inserted formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

/// One atomic, exactly invertible edit. Paths address nodes of the rule
/// body; quantifier edits address positions in the prefix.
///
/// `InsertNegation`/`DeleteNegation` work on the flattened chain of `op`
/// rooted at `path` (a non-`op` node is a chain of one), so
/// `P(A) ∧ P(B) ∧ P(C)` can become `P(A) ∧ ¬(P(B) ∧ P(C))` in one step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum EditStep {
    ChangePredicate { path: NodePath, from: String, to: String },
    ChangeArgument { path: NodePath, index: usize, from: Term, to: Term },
    ChangeBoundVariable { index: usize, from: String, to: String },
    ChangeConnective { path: NodePath, from: Connective, to: Connective },
    ChangeQuantifier { index: usize, from: Quantifier, to: Quantifier },
    InsertArgument { path: NodePath, index: usize, term: Term },
    DeleteArgument { path: NodePath, index: usize, term: Term },
    InsertQuantifier { index: usize, binding: QuantifiedVar },
    DeleteQuantifier { index: usize, binding: QuantifiedVar },
    InsertLiteralNegation { path: NodePath },
    DeleteLiteralNegation { path: NodePath },
    /// `(F)` becomes `¬(F)`.
    InsertGroupNegation { path: NodePath },
    /// `¬(F)` becomes `(F)`.
    DeleteGroupNegation { path: NodePath },
    InsertNegation { path: NodePath, chain_op: Connective, start: usize, end: usize },
    DeleteNegation { path: NodePath, chain_op: Connective, index: usize, width: usize },
    InsertFormula { path: NodePath, connective: Connective, side: Side, formula: Formula },
    DeleteFormula { path: NodePath, connective: Connective, side: Side, formula: Formula },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("invalid location: {0}")]
    InvalidLocation(String),
    #[error("edit would produce an invalid rule: {0}")]
    WouldProduceInvalid(String),
}

impl EditStep {
    pub fn kind(&self) -> PerturbKind {
        use EditStep::*;
        match self {
            ChangePredicate { .. } => PerturbKind::ChangePredicate,
            ChangeArgument { .. } | ChangeBoundVariable { .. } => PerturbKind::ChangeTerm,
            ChangeConnective { .. } | ChangeQuantifier { .. } => PerturbKind::ChangeOperator,
            InsertArgument { .. } | InsertQuantifier { .. } => PerturbKind::InsertTerm,
            DeleteArgument { .. } | DeleteQuantifier { .. } => PerturbKind::DeleteTerm,
            InsertLiteralNegation { .. } | InsertGroupNegation { .. } | InsertNegation { .. } => {
                PerturbKind::InsertNegation
            }
            DeleteLiteralNegation { .. } | DeleteGroupNegation { .. } | DeleteNegation { .. } => {
                PerturbKind::DeleteNegation
            }
            InsertFormula { .. } => PerturbKind::InsertFormula,
            DeleteFormula { .. } => PerturbKind::DeleteFormula,
        }
    }

    pub fn inverse(&self) -> EditStep {
        use EditStep::*;
        match self.clone() {
            ChangePredicate { path, from, to } => ChangePredicate { path, from: to, to: from },
            ChangeArgument { path, index, from, to } => ChangeArgument { path, index, from: to, to: from },
            ChangeBoundVariable { index, from, to } => ChangeBoundVariable { index, from: to, to: from },
            ChangeConnective { path, from, to } => ChangeConnective { path, from: to, to: from },
            ChangeQuantifier { index, from, to } => ChangeQuantifier { index, from: to, to: from },
            InsertArgument { path, index, term } => DeleteArgument { path, index, term },
            DeleteArgument { path, index, term } => InsertArgument { path, index, term },
            InsertQuantifier { index, binding } => DeleteQuantifier { index, binding },
            DeleteQuantifier { index, binding } => InsertQuantifier { index, binding },
            InsertLiteralNegation { path } => DeleteLiteralNegation { path },
            DeleteLiteralNegation { path } => InsertLiteralNegation { path },
            InsertGroupNegation { path } => DeleteGroupNegation { path },
            DeleteGroupNegation { path } => InsertGroupNegation { path },
            InsertNegation { path, chain_op, start, end } => DeleteNegation {
                path,
                chain_op,
                index: start,
                width: end - start,
            },
            DeleteNegation { path, chain_op, index, width } => InsertNegation {
                path,
                chain_op,
                start: index,
                end: index + width,
            },
            InsertFormula { path, connective, side, formula } => DeleteFormula { path, connective, side, formula },
            DeleteFormula { path, connective, side, formula } => InsertFormula { path, connective, side, formula },
        }
    }
}

/// Operands of the maximal `op` chain at `node`, in source order. Left
/// associative operators chain through the left child, `→` through the right.
pub fn flatten_chain(node: &Formula, op: Connective) -> Vec<Formula> {
    let mut out = Vec::new();
    let mut cur = node;
    loop {
        match cur {
            Formula::Binary { op: o, left, right } if *o == op => {
                if op.is_right_assoc() {
                    out.push((**left).clone());
                    cur = right;
                } else {
                    out.push((**right).clone());
                    cur = left;
                }
            }
            _ => {
                out.push(cur.clone());
                break;
            }
        }
    }
    if !op.is_right_assoc() {
        out.reverse();
    }
    out
}

/// Inverse of [`flatten_chain`]; `items` must be non-empty.
pub fn fold_chain(items: Vec<Formula>, op: Connective) -> Formula {
    if op.is_right_assoc() {
        let mut iter = items.into_iter().rev();
        let last = iter.next().expect("non-empty chain");
        iter.fold(last, |acc, item| Formula::binary(op, item, acc))
    } else {
        let mut iter = items.into_iter();
        let first = iter.next().expect("non-empty chain");
        iter.fold(first, |acc, item| Formula::binary(op, acc, item))
    }
}

fn node_mut<'a>(rule: &'a mut FolRule, path: &NodePath) -> Result<&'a mut Formula, EditError> {
    rule.body
        .at_mut(path)
        .ok_or_else(|| EditError::InvalidLocation(format!("no node at {:?}", path.0)))
}

fn literal_mut<'a>(rule: &'a mut FolRule, path: &NodePath) -> Result<&'a mut Literal, EditError> {
    match node_mut(rule, path)? {
        Formula::Literal(lit) => Ok(lit),
        _ => Err(EditError::InvalidLocation(format!("node at {:?} is not a literal", path.0))),
    }
}

fn mismatch(what: &str) -> EditError {
    EditError::InvalidLocation(format!("{what} does not match the rule"))
}

fn apply_raw(rule: &mut FolRule, step: &EditStep) -> Result<(), EditError> {
    use EditStep::*;
    match step {
        ChangePredicate { path, from, to } => {
            let lit = literal_mut(rule, path)?;
            if &lit.predicate != from {
                return Err(mismatch("predicate"));
            }
            lit.predicate = to.clone();
        }
        ChangeArgument { path, index, from, to } => {
            let lit = literal_mut(rule, path)?;
            match lit.args.get_mut(*index) {
                Some(t) if t == from => *t = to.clone(),
                _ => return Err(mismatch("argument")),
            }
        }
        ChangeBoundVariable { index, from, to } => match rule.prefix.get_mut(*index) {
            Some(q) if &q.var == from => q.var = to.clone(),
            _ => return Err(mismatch("quantified variable")),
        },
        ChangeConnective { path, from, to } => match node_mut(rule, path)? {
            Formula::Binary { op, .. } if op == from => *op = *to,
            _ => return Err(mismatch("connective")),
        },
        ChangeQuantifier { index, from, to } => match rule.prefix.get_mut(*index) {
            Some(q) if &q.quantifier == from => q.quantifier = *to,
            _ => return Err(mismatch("quantifier")),
        },
        InsertArgument { path, index, term } => {
            let lit = literal_mut(rule, path)?;
            if *index > lit.args.len() {
                return Err(mismatch("argument position"));
            }
            lit.args.insert(*index, term.clone());
        }
        DeleteArgument { path, index, term } => {
            let lit = literal_mut(rule, path)?;
            if lit.args.get(*index) != Some(term) {
                return Err(mismatch("argument"));
            }
            lit.args.remove(*index);
        }
        InsertQuantifier { index, binding } => {
            if *index > rule.prefix.len() {
                return Err(mismatch("quantifier position"));
            }
            rule.prefix.insert(*index, binding.clone());
        }
        DeleteQuantifier { index, binding } => {
            if rule.prefix.get(*index) != Some(binding) {
                return Err(mismatch("quantifier"));
            }
            rule.prefix.remove(*index);
        }
        InsertLiteralNegation { path } | DeleteLiteralNegation { path } => {
            let want = matches!(step, DeleteLiteralNegation { .. });
            let lit = literal_mut(rule, path)?;
            if lit.negated != want {
                return Err(mismatch("literal negation"));
            }
            lit.negated = !want;
        }
        InsertGroupNegation { path } => {
            let node = node_mut(rule, path)?;
            match std::mem::replace(node, placeholder()) {
                Formula::Group(inner) => *node = Formula::Not(inner),
                other => {
                    *node = other;
                    return Err(mismatch("group"));
                }
            }
        }
        DeleteGroupNegation { path } => {
            let node = node_mut(rule, path)?;
            match std::mem::replace(node, placeholder()) {
                Formula::Not(inner) => *node = Formula::Group(inner),
                other => {
                    *node = other;
                    return Err(mismatch("negation"));
                }
            }
        }
        InsertNegation { path, chain_op, start, end } => {
            let node = node_mut(rule, path)?;
            let mut items = flatten_chain(node, *chain_op);
            if start >= end || *end > items.len() {
                return Err(mismatch("chain span"));
            }
            let span: Vec<Formula> = items.drain(*start..*end).collect();
            items.insert(*start, Formula::Not(Box::new(fold_chain(span, *chain_op))));
            *node = fold_chain(items, *chain_op);
        }
        DeleteNegation { path, chain_op, index, width } => {
            let node = node_mut(rule, path)?;
            let mut items = flatten_chain(node, *chain_op);
            let inner = match items.get(*index) {
                Some(Formula::Not(inner)) => flatten_chain(inner, *chain_op),
                _ => return Err(mismatch("negation")),
            };
            if inner.len() != *width {
                return Err(mismatch("negation width"));
            }
            items.splice(*index..=*index, inner);
            *node = fold_chain(items, *chain_op);
        }
        InsertFormula { path, connective, side, formula } => {
            let node = node_mut(rule, path)?;
            let old = std::mem::replace(node, placeholder());
            *node = match side {
                Side::Right => Formula::binary(*connective, old, formula.clone()),
                Side::Left => Formula::binary(*connective, formula.clone(), old),
            };
        }
        DeleteFormula { path, connective, side, formula } => {
            let node = node_mut(rule, path)?;
            let kept = match (&*node, side) {
                (Formula::Binary { op, left, right }, Side::Right) if op == connective && **right == *formula => {
                    (**left).clone()
                }
                (Formula::Binary { op, left, right }, Side::Left) if op == connective && **left == *formula => {
                    (**right).clone()
                }
                _ => return Err(mismatch("formula")),
            };
            *node = kept;
        }
    }
    Ok(())
}

fn placeholder() -> Formula {
    Formula::Literal(Literal {
        negated: false,
        predicate: String::new(),
        args: Vec::new(),
    })
}

/// Applies one edit and checks that the result is a valid rule whose
/// canonical text parses back to the same tree.
pub fn apply_step(rule: &FolRule, step: &EditStep) -> Result<FolRule, EditError> {
    let mut out = rule.clone();
    apply_raw(&mut out, step)?;
    if !out.is_canonical() {
        return Err(EditError::WouldProduceInvalid(out.print_canonical()));
    }
    Ok(out)
}

/// Applies edits in order, failing on the first invalid one.
pub fn apply_steps(rule: &FolRule, steps: &[EditStep]) -> Result<FolRule, EditError> {
    steps.iter().try_fold(rule.clone(), |r, s| apply_step(&r, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fol::parse;

    fn rule(s: &str) -> FolRule {
        parse(s).unwrap()
    }

    fn p(v: &[u8]) -> NodePath {
        NodePath(v.to_vec())
    }

    fn check(src: &str, step: EditStep, expected: &str) {
        let r = rule(src);
        let out = apply_step(&r, &step).unwrap();
        assert_eq!(out.print_canonical(), expected);
        assert_eq!(apply_step(&out, &step.inverse()).unwrap(), r, "inverse of {step:?}");
        assert_eq!(step.inverse().kind(), step.kind().dual());
        assert_eq!(step.inverse().inverse(), step);
    }

    #[test]
    fn table_examples() {
        check(
            "P(A) ∧ R(B)",
            EditStep::ChangePredicate { path: p(&[0]), from: "P".into(), to: "R".into() },
            "R(A) ∧ R(B)",
        );
        check(
            "∀x P(x) ∧ P(B)",
            EditStep::ChangeBoundVariable { index: 0, from: "x".into(), to: "y".into() },
            "∀y P(x) ∧ P(B)",
        );
        check(
            "∀x P(x) ∧ P(B)",
            EditStep::ChangeArgument {
                path: p(&[1]),
                index: 0,
                from: Term::Const("B".into()),
                to: Term::Var("x".into()),
            },
            "∀x P(x) ∧ P(x)",
        );
        check(
            "∀x P(x) ∧ P(B)",
            EditStep::ChangeConnective { path: p(&[]), from: Connective::And, to: Connective::Or },
            "∀x P(x) ∨ P(B)",
        );
        check(
            "∀x P(x) ∧ P(B)",
            EditStep::InsertQuantifier {
                index: 1,
                binding: QuantifiedVar { quantifier: Quantifier::Exists, var: "y".into() },
            },
            "∀x ∃y P(x) ∧ P(B)",
        );
        check(
            "∀x P(x) ∧ P(B)",
            EditStep::InsertArgument { path: p(&[1]), index: 0, term: Term::Var("x".into()) },
            "∀x P(x) ∧ P(x, B)",
        );
        check(
            "P(A) ∧ P(B) ∧ P(C)",
            EditStep::InsertNegation { path: p(&[]), chain_op: Connective::And, start: 1, end: 3 },
            "P(A) ∧ ¬(P(B) ∧ P(C))",
        );
        check(
            "P(A) ∧ P(B)",
            EditStep::InsertFormula {
                path: p(&[]),
                connective: Connective::Implies,
                side: Side::Right,
                formula: Formula::Literal(Literal {
                    negated: false,
                    predicate: "R".into(),
                    args: vec![Term::Const("C".into())],
                }),
            },
            "P(A) ∧ P(B) → R(C)",
        );
        check(
            "∀x ∀y P(x) ∧ R(x, y)",
            EditStep::DeleteQuantifier {
                index: 0,
                binding: QuantifiedVar { quantifier: Quantifier::Forall, var: "x".into() },
            },
            "∀y P(x) ∧ R(x, y)",
        );
        check(
            "∀x ∀y P(x) ∧ R(x, y)",
            EditStep::DeleteArgument { path: p(&[1]), index: 0, term: Term::Var("x".into()) },
            "∀x ∀y P(x) ∧ R(y)",
        );
        check(
            "¬(P(A) ∧ P(B))",
            EditStep::DeleteNegation { path: p(&[]), chain_op: Connective::And, index: 0, width: 2 },
            "P(A) ∧ P(B)",
        );
        check(
            "P(A) ∧ P(B) ∧ P(C)",
            EditStep::DeleteFormula {
                path: p(&[0]),
                connective: Connective::And,
                side: Side::Right,
                formula: Formula::Literal(Literal {
                    negated: false,
                    predicate: "P".into(),
                    args: vec![Term::Const("B".into())],
                }),
            },
            "P(A) ∧ P(C)",
        );
    }

    #[test]
    fn negation_variants() {
        check("P(A) ∨ Q(B)", EditStep::InsertLiteralNegation { path: p(&[1]) }, "P(A) ∨ ¬Q(B)");
        check("(P(A) ∨ Q(B)) ∧ R(C)", EditStep::InsertGroupNegation { path: p(&[0]) }, "¬(P(A) ∨ Q(B)) ∧ R(C)");
        check(
            "A(x) → B(x) → C(x)",
            EditStep::InsertNegation { path: p(&[]), chain_op: Connective::Implies, start: 0, end: 2 },
            "¬(A(x) → B(x)) → C(x)",
        );
        check(
            "P(A)",
            EditStep::InsertNegation { path: p(&[]), chain_op: Connective::And, start: 0, end: 1 },
            "¬(P(A))",
        );
    }

    #[test]
    fn invalid_edits_are_rejected() {
        let r = rule("P(A) ∧ P(B) ∧ P(C)");
        // Inner ∧ cannot weaken without parentheses.
        let step = EditStep::ChangeConnective { path: p(&[0]), from: Connective::And, to: Connective::Or };
        assert!(matches!(apply_step(&r, &step), Err(EditError::WouldProduceInvalid(_))));
        let step = EditStep::DeleteArgument { path: p(&[1]), index: 0, term: Term::Const("C".into()) };
        assert!(matches!(apply_step(&r, &step), Err(EditError::WouldProduceInvalid(_))));
        let step = EditStep::ChangePredicate { path: p(&[1]), from: "Q".into(), to: "R".into() };
        assert!(matches!(apply_step(&r, &step), Err(EditError::InvalidLocation(_))));
        let step = EditStep::InsertLiteralNegation { path: p(&[0, 0, 0]) };
        assert!(matches!(apply_step(&r, &step), Err(EditError::InvalidLocation(_))));
        let q = rule("∀x P(x)");
        let dup = EditStep::InsertQuantifier {
            index: 1,
            binding: QuantifiedVar { quantifier: Quantifier::Exists, var: "x".into() },
        };
        assert!(apply_step(&q, &dup).is_err());
    }

    #[test]
    fn chains_round_trip() {
        for s in ["A(x) ∧ B(x) ∧ C(x) ∧ D(x)", "A(x) → B(x) → C(x)", "A(x) ⊕ (B(x) ⊕ C(x))"] {
            let r = rule(s);
            if let Formula::Binary { op, .. } = &r.body {
                assert_eq!(fold_chain(flatten_chain(&r.body, *op), *op), r.body);
            }
        }
        assert_eq!(flatten_chain(&rule("A(x) ∧ B(x) ∧ C(x)").body, Connective::And).len(), 3);
        assert_eq!(flatten_chain(&rule("A(x) → B(x) → C(x)").body, Connective::Implies).len(), 3);
        assert_eq!(flatten_chain(&rule("A(x) ⊕ (B(x) ⊕ C(x))").body, Connective::Xor).len(), 2);
    }
}
