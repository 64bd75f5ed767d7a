use std::fmt;

use super::{FolRule, Formula, Literal, Term};

pub(crate) fn literal_text(negated: bool, predicate: &str, args: &[Term]) -> String {
    let mut s = String::new();
    if negated {
        s.push('¬');
    }
    s.push_str(predicate);
    s.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        s.push_str(a.name());
    }
    s.push(')');
    s
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&literal_text(self.negated, &self.predicate, &self.args))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Binary { op, left, right } => write!(f, "{left} {op} {right}"),
            Formula::Not(inner) => write!(f, "¬({inner})"),
            Formula::Group(inner) => write!(f, "({inner})"),
            Formula::Literal(lit) => lit.fmt(f),
        }
    }
}

impl fmt::Display for FolRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in &self.prefix {
            write!(f, "{q} ")?;
        }
        self.body.fmt(f)
    }
}

/// Leaves of the parse tree in pre-order: quantifiers, variables,
/// connectives, predicate names, terms, parentheses and commas.
pub fn leaves(rule: &FolRule) -> Vec<String> {
    fn go(node: &Formula, out: &mut Vec<String>) {
        match node {
            Formula::Binary { op, left, right } => {
                go(left, out);
                out.push(op.symbol().to_string());
                go(right, out);
            }
            Formula::Not(inner) => {
                out.push("¬".into());
                out.push("(".into());
                go(inner, out);
                out.push(")".into());
            }
            Formula::Group(inner) => {
                out.push("(".into());
                go(inner, out);
                out.push(")".into());
            }
            Formula::Literal(lit) => {
                if lit.negated {
                    out.push("¬".into());
                }
                out.push(lit.predicate.clone());
                out.push("(".into());
                for (i, a) in lit.args.iter().enumerate() {
                    if i > 0 {
                        out.push(",".into());
                    }
                    out.push(a.name().to_string());
                }
                out.push(")".into());
            }
        }
    }
    let mut out = Vec::new();
    for q in &rule.prefix {
        out.push(q.quantifier.symbol().to_string());
        out.push(q.var.clone());
    }
    go(&rule.body, &mut out);
    out
}
