//! Reversible atomic perturbations of FOL rules and the correction steps
//! that undo them.
//!
//! Every edit is checked on application: the result must print to a string
//! that parses back to the same tree. Sampling only keeps edits that pass,
//! so perturbed rules are always valid and the inverse sequence always
//! replays.

mod edit;
mod generate;
mod render;

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fol::{Connective, FolRule, Formula, Literal, NodePath, QuantifiedVar, Quantifier, Term};

pub use edit::{apply_step, apply_steps, flatten_chain, fold_chain, EditError, EditStep, PerturbKind, Side};
pub use generate::{random_rule, RuleGenConfig};
pub use render::{render_step, render_steps, NO_CHANGES};

const FRESH_VARS: &[&str] = &["x", "y", "z", "w", "u", "v", "s", "t"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbConfig {
    pub n_perturb_choices: Vec<usize>,
    pub n_correct_choices: Vec<usize>,
    /// Probability that a draw is a negative sample (no perturbation).
    pub negative_prob: f64,
    pub seed: u64,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        PerturbConfig {
            n_perturb_choices: (0..=10).collect(),
            n_correct_choices: vec![0, 1, 2, 3],
            negative_prob: 0.2,
            seed: 0,
        }
    }
}

impl PerturbConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.negative_prob) {
            return Err(format!("negative_prob {} outside [0, 1]", self.negative_prob));
        }
        if self.n_perturb_choices.is_empty() {
            return Err("n_perturb_choices is empty".into());
        }
        if self.n_correct_choices.is_empty() {
            return Err("n_correct_choices is empty".into());
        }
        Ok(())
    }

    /// Draws N_Perturb: zero with probability `negative_prob`, otherwise
    /// uniform over the non-zero choices.
    pub fn draw_n_perturb<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        if rng.gen_bool(self.negative_prob) {
            return 0;
        }
        let nonzero: Vec<usize> = self.n_perturb_choices.iter().copied().filter(|&n| n > 0).collect();
        nonzero.choose(rng).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub original: FolRule,
    pub perturbed: FolRule,
    /// Edits in the order they were applied to `original`.
    pub applied: Vec<EditStep>,
    /// Inverses of `applied`, reversed: replaying them on `perturbed`
    /// yields `original`.
    pub steps_to_fix: Vec<EditStep>,
}

impl Perturbation {
    pub fn n_perturb(&self) -> usize {
        self.applied.len()
    }
}

/// Seeds a generator from `config.seed` and samples one perturbation.
pub fn sample_perturbation(rule: &FolRule, config: &PerturbConfig) -> Perturbation {
    sample_perturbation_with(rule, config, &mut ChaCha8Rng::seed_from_u64(config.seed))
}

pub fn sample_perturbation_with<R: Rng + ?Sized>(rule: &FolRule, config: &PerturbConfig, rng: &mut R) -> Perturbation {
    let n = config.draw_n_perturb(rng);
    perturb_n(rule, n, rng)
}

/// Applies up to `n` random edits. Fewer are applied only if the rule
/// admits no valid edit at some point.
pub fn perturb_n<R: Rng + ?Sized>(rule: &FolRule, n: usize, rng: &mut R) -> Perturbation {
    let mut state = rule.clone();
    let mut applied: Vec<EditStep> = Vec::with_capacity(n);
    for _ in 0..n {
        let undo = applied.last().map(EditStep::inverse);
        match perturb_once(&state, undo.as_ref(), rng) {
            Some((step, next)) => {
                applied.push(step);
                state = next;
            }
            None => break,
        }
    }
    let steps_to_fix = applied.iter().rev().map(EditStep::inverse).collect();
    Perturbation {
        original: rule.clone(),
        perturbed: state,
        applied,
        steps_to_fix,
    }
}

/// One random valid edit: a kind uniformly among those with at least one
/// valid location, then a location uniformly among the valid ones. `avoid`
/// excludes a step that would simply undo the previous edit.
pub fn perturb_once<R: Rng + ?Sized>(
    rule: &FolRule,
    avoid: Option<&EditStep>,
    rng: &mut R,
) -> Option<(EditStep, FolRule)> {
    let mut kinds = PerturbKind::ALL.to_vec();
    kinds.shuffle(rng);
    for kind in kinds {
        let mut steps = candidates(rule, kind, rng);
        steps.shuffle(rng);
        for step in steps {
            if Some(&step) == avoid {
                continue;
            }
            if let Ok(next) = apply_step(rule, &step) {
                return Some((step, next));
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationSplit {
    pub prev: Vec<EditStep>,
    pub target: Vec<EditStep>,
    pub n_correct: usize,
}

/// Samples N_Correct, clamps it to the number of steps, and splits off the
/// last N_Correct steps as the target.
pub fn split_iteration<R: Rng + ?Sized>(steps: &[EditStep], config: &PerturbConfig, rng: &mut R) -> IterationSplit {
    let sampled = config.n_correct_choices.choose(rng).copied().unwrap_or(0);
    split_at_n(steps, sampled)
}

pub fn split_at_n(steps: &[EditStep], n_correct: usize) -> IterationSplit {
    let n = n_correct.min(steps.len());
    let cut = steps.len() - n;
    IterationSplit {
        prev: steps[..cut].to_vec(),
        target: steps[cut..].to_vec(),
        n_correct: n,
    }
}

struct Pools {
    predicates: Vec<String>,
    terms: Vec<Term>,
    names: HashSet<String>,
}

impl Pools {
    fn of(rule: &FolRule) -> Self {
        let mut predicates = Vec::new();
        let mut terms = Vec::new();
        let mut names: HashSet<String> = rule.prefix.iter().map(|q| q.var.clone()).collect();
        for lit in rule.body.literals() {
            if !predicates.contains(&lit.predicate) {
                predicates.push(lit.predicate.clone());
            }
            names.insert(lit.predicate.clone());
            for t in &lit.args {
                if !terms.contains(t) {
                    terms.push(t.clone());
                }
                names.insert(t.name().to_string());
            }
        }
        Pools { predicates, terms, names }
    }

    fn synthetic(&self, stem: &str) -> String {
        (1..)
            .map(|k| format!("{stem}{k}"))
            .find(|n| !self.names.contains(n))
            .expect("unbounded pool")
    }

    fn fresh_var(&self) -> String {
        FRESH_VARS
            .iter()
            .map(|v| v.to_string())
            .find(|v| !self.names.contains(v))
            .unwrap_or_else(|| self.synthetic("v"))
    }

    fn other_predicate<R: Rng + ?Sized>(&self, not: &str, rng: &mut R) -> String {
        let others: Vec<&String> = self.predicates.iter().filter(|p| *p != not).collect();
        match others.choose(rng) {
            Some(p) => (*p).clone(),
            None => self.synthetic("R"),
        }
    }

    fn other_term<R: Rng + ?Sized>(&self, not: &Term, rng: &mut R) -> Term {
        let others: Vec<&Term> = self.terms.iter().filter(|t| *t != not).collect();
        match others.choose(rng) {
            Some(t) => (*t).clone(),
            None if not.is_var() => Term::Const(self.synthetic("C")),
            None => Term::Var(self.fresh_var()),
        }
    }

    fn any_term<R: Rng + ?Sized>(&self, rng: &mut R) -> Term {
        self.terms
            .choose(rng)
            .cloned()
            .unwrap_or_else(|| Term::Const(self.synthetic("C")))
    }
}

fn literal_paths(rule: &FolRule) -> Vec<(NodePath, Literal)> {
    let mut out = Vec::new();
    rule.body.walk(&mut |node, path| {
        if let Formula::Literal(lit) = node {
            out.push((path.clone(), lit.clone()));
        }
    });
    out
}

fn nodes(rule: &FolRule) -> Vec<(NodePath, Formula)> {
    let mut out = Vec::new();
    rule.body.walk(&mut |node, path| out.push((path.clone(), node.clone())));
    out
}

/// True when the node at `path` continues its parent's chain of `op`.
fn continues_chain(rule: &FolRule, path: &NodePath, op: Connective) -> bool {
    match path.parent() {
        Some((parent, side)) => match rule.body.at(&parent) {
            Some(Formula::Binary { op: parent_op, .. }) if *parent_op == op => {
                (side == 1) == op.is_right_assoc()
            }
            _ => false,
        },
        None => false,
    }
}

fn parent_is_binary(rule: &FolRule, path: &NodePath) -> bool {
    path.parent()
        .and_then(|(p, _)| rule.body.at(&p))
        .is_some_and(|n| matches!(n, Formula::Binary { .. }))
}

/// Every location for one kind, each with one randomly chosen payload where
/// the payload is a name.
fn candidates<R: Rng + ?Sized>(rule: &FolRule, kind: PerturbKind, rng: &mut R) -> Vec<EditStep> {
    let pools = Pools::of(rule);
    let mut out = Vec::new();
    match kind {
        PerturbKind::ChangePredicate => {
            for (path, lit) in literal_paths(rule) {
                let to = pools.other_predicate(&lit.predicate, rng);
                out.push(EditStep::ChangePredicate { path, from: lit.predicate, to });
            }
        }
        PerturbKind::ChangeTerm => {
            for (path, lit) in literal_paths(rule) {
                for (index, from) in lit.args.into_iter().enumerate() {
                    let to = pools.other_term(&from, rng);
                    out.push(EditStep::ChangeArgument { path: path.clone(), index, from, to });
                }
            }
            let bound: HashSet<&str> = rule.prefix.iter().map(|q| q.var.as_str()).collect();
            let mut options: Vec<String> = rule
                .free_vars()
                .into_iter()
                .filter(|v| crate::fol::is_simple_var_name(v))
                .collect();
            options.push(pools.fresh_var());
            options.retain(|v| !bound.contains(v.as_str()));
            for (index, q) in rule.prefix.iter().enumerate() {
                if let Some(to) = options.choose(rng) {
                    out.push(EditStep::ChangeBoundVariable { index, from: q.var.clone(), to: to.clone() });
                }
            }
        }
        PerturbKind::ChangeOperator => {
            for (path, node) in nodes(rule) {
                if let Formula::Binary { op, .. } = node {
                    for to in Connective::ALL.into_iter().filter(|c| *c != op) {
                        out.push(EditStep::ChangeConnective { path: path.clone(), from: op, to });
                    }
                }
            }
            for (index, q) in rule.prefix.iter().enumerate() {
                out.push(EditStep::ChangeQuantifier {
                    index,
                    from: q.quantifier,
                    to: q.quantifier.flipped(),
                });
            }
        }
        PerturbKind::InsertTerm => {
            for (path, lit) in literal_paths(rule) {
                for index in 0..=lit.args.len() {
                    let term = pools.any_term(rng);
                    out.push(EditStep::InsertArgument { path: path.clone(), index, term });
                }
            }
            let var = pools.fresh_var();
            for index in 0..=rule.prefix.len() {
                let quantifier = if rng.gen_bool(0.5) { Quantifier::Forall } else { Quantifier::Exists };
                out.push(EditStep::InsertQuantifier {
                    index,
                    binding: QuantifiedVar { quantifier, var: var.clone() },
                });
            }
        }
        PerturbKind::DeleteTerm => {
            for (path, lit) in literal_paths(rule) {
                if lit.args.len() > 1 {
                    for (index, term) in lit.args.into_iter().enumerate() {
                        out.push(EditStep::DeleteArgument { path: path.clone(), index, term });
                    }
                }
            }
            for (index, binding) in rule.prefix.iter().enumerate() {
                out.push(EditStep::DeleteQuantifier { index, binding: binding.clone() });
            }
        }
        PerturbKind::InsertNegation => {
            for (path, node) in nodes(rule) {
                match &node {
                    Formula::Literal(lit) if !lit.negated => {
                        out.push(EditStep::InsertLiteralNegation { path: path.clone() })
                    }
                    Formula::Group(_) => out.push(EditStep::InsertGroupNegation { path: path.clone() }),
                    _ => {}
                }
                match &node {
                    Formula::Binary { op, .. } if !continues_chain(rule, &path, *op) => {
                        let len = flatten_chain(&node, *op).len();
                        for start in 0..len {
                            for end in start + 1..=len {
                                out.push(EditStep::InsertNegation { path: path.clone(), chain_op: *op, start, end });
                            }
                        }
                    }
                    Formula::Binary { .. } => {}
                    _ if !parent_is_binary(rule, &path) => out.push(EditStep::InsertNegation {
                        path: path.clone(),
                        chain_op: Connective::And,
                        start: 0,
                        end: 1,
                    }),
                    _ => {}
                }
            }
        }
        PerturbKind::DeleteNegation => {
            for (path, node) in nodes(rule) {
                match &node {
                    Formula::Literal(lit) if lit.negated => {
                        out.push(EditStep::DeleteLiteralNegation { path: path.clone() })
                    }
                    Formula::Not(inner) => {
                        out.push(EditStep::DeleteGroupNegation { path: path.clone() });
                        if !parent_is_binary(rule, &path) {
                            let op = match **inner {
                                Formula::Binary { op, .. } => op,
                                _ => Connective::And,
                            };
                            out.push(EditStep::DeleteNegation {
                                path: path.clone(),
                                chain_op: op,
                                index: 0,
                                width: flatten_chain(inner, op).len(),
                            });
                        }
                    }
                    Formula::Binary { op, .. } if !continues_chain(rule, &path, *op) => {
                        for (index, item) in flatten_chain(&node, *op).iter().enumerate() {
                            if let Formula::Not(inner) = item {
                                out.push(EditStep::DeleteNegation {
                                    path: path.clone(),
                                    chain_op: *op,
                                    index,
                                    width: flatten_chain(inner, *op).len(),
                                });
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
        PerturbKind::InsertFormula => {
            for (path, _) in nodes(rule) {
                let connective = *Connective::ALL.choose(rng).unwrap();
                let side = if rng.gen_bool(0.5) { Side::Right } else { Side::Left };
                let predicate = pools
                    .predicates
                    .choose(rng)
                    .cloned()
                    .unwrap_or_else(|| pools.synthetic("R"));
                let formula = Formula::Literal(Literal {
                    negated: false,
                    predicate,
                    args: vec![pools.any_term(rng)],
                });
                out.push(EditStep::InsertFormula { path, connective, side, formula });
            }
        }
        PerturbKind::DeleteFormula => {
            for (path, node) in nodes(rule) {
                if let Formula::Binary { op, left, right } = node {
                    if matches!(*right, Formula::Literal(_)) {
                        out.push(EditStep::DeleteFormula {
                            path: path.clone(),
                            connective: op,
                            side: Side::Right,
                            formula: *right,
                        });
                    }
                    if matches!(*left, Formula::Literal(_)) {
                        out.push(EditStep::DeleteFormula { path, connective: op, side: Side::Left, formula: *left });
                    }
                }
            }
        }
    }
    out
}
