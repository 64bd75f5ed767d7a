use std::collections::HashMap;

use crate::fol::FolRule;
use crate::forge::{split_sections, t3_output, FOL_MARKER, PREV_MARKER};
use crate::generator::{Generator, GeneratorError};
use crate::perturb::{apply_step, render_step, EditStep, Perturbation};

struct Case {
    steps: Vec<String>,
    /// Canonical FOL after each step.
    states: Vec<String>,
    start: String,
}

/// A generator that knows the fix for each registered initial FOL and emits
/// it in chunks of at most `chunk` steps, then "No changes needed".
pub struct OracleGenerator {
    cases: HashMap<String, Case>,
    chunk: usize,
}

impl OracleGenerator {
    pub fn new(chunk: usize) -> Self {
        OracleGenerator {
            cases: HashMap::new(),
            chunk: chunk.max(1),
        }
    }

    /// Registers the fix for `start`, keyed by its canonical print.
    pub fn add_case(&mut self, start: &FolRule, fix: &[EditStep]) {
        let mut cur = start.clone();
        let mut steps = Vec::with_capacity(fix.len());
        let mut states = Vec::with_capacity(fix.len());
        for s in fix {
            steps.push(render_step(&cur, s));
            cur = apply_step(&cur, s).expect("fix steps replay");
            states.push(cur.print_canonical());
        }
        let key = start.print_canonical();
        self.cases.insert(key.clone(), Case { steps, states, start: key });
    }

    pub fn add_perturbation(&mut self, p: &Perturbation) {
        self.add_case(&p.perturbed, &p.steps_to_fix);
    }
}

impl Generator for OracleGenerator {
    fn generate(&mut self, _system: &str, user: &str) -> Result<String, GeneratorError> {
        let sections = split_sections(user);
        let get = |m: &str| sections.iter().find(|(k, _)| *k == m).map(|(_, b)| b.clone());
        let fol = get(FOL_MARKER).ok_or_else(|| GeneratorError::Unavailable("prompt has no FOL".into()))?;
        let done = get(PREV_MARKER)
            .map(|b| b.lines().filter(|l| !l.trim().is_empty()).count())
            .unwrap_or(0);
        let case = self
            .cases
            .get(fol.trim())
            .ok_or_else(|| GeneratorError::Unavailable(format!("no oracle case for {fol}")))?;
        if done >= case.steps.len() {
            let last = case.states.last().unwrap_or(&case.start);
            return Ok(t3_output(&[], last));
        }
        let end = (done + self.chunk).min(case.steps.len());
        Ok(t3_output(&case.steps[done..end], &case.states[end - 1]))
    }
}
