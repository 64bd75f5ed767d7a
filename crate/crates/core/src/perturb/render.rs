use crate::fol::{FolRule, Formula};

use super::edit::{apply_step, flatten_chain, fold_chain, EditStep, Side};

pub const NO_CHANGES: &str = "No changes needed";

fn node_text(rule: &FolRule, path: &crate::fol::NodePath) -> String {
    rule.body.at(path).map(|n| n.to_string()).unwrap_or_default()
}

/// Natural-language text of one step, phrased against `rule`, the state the
/// step is applied to.
pub fn render_step(rule: &FolRule, step: &EditStep) -> String {
    use EditStep::*;
    match step {
        ChangePredicate { path, from, to } => {
            format!("Change the predicate '{from}' to '{to}' in '{}'", node_text(rule, path))
        }
        ChangeArgument { path, from, to, .. } => format!(
            "Change the term '{}' to '{}' in '{}'",
            from.name(),
            to.name(),
            node_text(rule, path)
        ),
        ChangeBoundVariable { index, from, to } => {
            let q = rule.prefix.get(*index).map(|q| q.quantifier.symbol()).unwrap_or_default();
            format!("Change the quantified variable '{q}{from}' to '{q}{to}'")
        }
        ChangeConnective { path, from, to } => {
            format!("Change the operator '{from}' to '{to}' in '{}'", node_text(rule, path))
        }
        ChangeQuantifier { index, from, to } => {
            let var = rule.prefix.get(*index).map(|q| q.var.as_str()).unwrap_or_default();
            format!("Change the quantifier '{from}{var}' to '{to}{var}'")
        }
        InsertArgument { path, index, term } => format!(
            "Insert the term '{}' at position {} in '{}'",
            term.name(),
            index + 1,
            node_text(rule, path)
        ),
        DeleteArgument { path, term, .. } => {
            format!("Remove the term '{}' from '{}'", term.name(), node_text(rule, path))
        }
        InsertQuantifier { index, binding } => match index.checked_sub(1).and_then(|i| rule.prefix.get(i)) {
            Some(prev) => format!("Insert the quantifier '{binding}' after '{prev}'"),
            None => format!("Insert the quantifier '{binding}' at the beginning"),
        },
        DeleteQuantifier { binding, .. } => format!("Remove the quantifier '{binding}'"),
        InsertLiteralNegation { path } => format!("Negate the literal '{}'", node_text(rule, path)),
        DeleteLiteralNegation { path } => format!("Remove the negation from '{}'", node_text(rule, path)),
        InsertGroupNegation { path } => match rule.body.at(path) {
            Some(Formula::Group(inner)) => format!("Negate the parenthesized formula '{inner}'"),
            _ => String::new(),
        },
        DeleteGroupNegation { path } => match rule.body.at(path) {
            Some(Formula::Not(inner)) => format!("Remove the negation around '{inner}' and keep the parentheses"),
            _ => String::new(),
        },
        InsertNegation { path, chain_op, start, end } => {
            let span = rule
                .body
                .at(path)
                .map(|n| flatten_chain(n, *chain_op))
                .filter(|items| start < end && *end <= items.len())
                .map(|items| fold_chain(items[*start..*end].to_vec(), *chain_op).to_string())
                .unwrap_or_default();
            format!("Insert a negation around '{span}'")
        }
        DeleteNegation { path, chain_op, index, .. } => {
            let inner = rule
                .body
                .at(path)
                .map(|n| flatten_chain(n, *chain_op))
                .and_then(|items| match items.get(*index) {
                    Some(Formula::Not(inner)) => Some(inner.to_string()),
                    _ => None,
                })
                .unwrap_or_default();
            format!("Remove the negation around '{inner}'")
        }
        InsertFormula { path, connective, side, formula } => match side {
            Side::Right => format!("Insert '{connective} {formula}' after '{}'", node_text(rule, path)),
            Side::Left => format!("Insert '{formula} {connective}' before '{}'", node_text(rule, path)),
        },
        DeleteFormula { path, connective, side, formula } => match side {
            Side::Right => format!("Remove '{connective} {formula}' from '{}'", node_text(rule, path)),
            Side::Left => format!("Remove '{formula} {connective}' from '{}'", node_text(rule, path)),
        },
    }
}

/// Renders a step sequence starting from `rule`, advancing the rule after
/// each step. An empty sequence renders as the single "No changes needed".
/// Steps that fail to apply are rendered against the last good state.
pub fn render_steps(rule: &FolRule, steps: &[EditStep]) -> Vec<String> {
    if steps.is_empty() {
        return vec![NO_CHANGES.to_string()];
    }
    let mut state = rule.clone();
    steps
        .iter()
        .map(|s| {
            let text = render_step(&state, s);
            if let Ok(next) = apply_step(&state, s) {
                state = next;
            }
            text
        })
        .collect()
}
