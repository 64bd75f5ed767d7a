//! Iterative correction sessions: repeatedly ask a generator for the next
//! correction steps until it answers "No changes needed" or a limit is hit,
//! recording one reward-scored experience tuple per generation.

mod oracle;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fol::parse;
use crate::forge::{parse_t3_output, split_sections, t2_input, t3_input, FOL_MARKER};
use crate::generator::{Generator, GeneratorError};
use crate::metrics::{reward, MetricsError, RewardConfig};
use crate::perturb::NO_CHANGES;

pub use oracle::OracleGenerator;

pub const CORRECTION_SYSTEM: &str =
    "Correct the FOL translation of the NL statement. List the next correction steps, then the corrected FOL.";
pub const REPAIR_SYSTEM: &str = "Rewrite the FOL so that it is a valid translation of the NL statement.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub max_generations: usize,
    /// Whitespace-separated units allowed in one generator output.
    pub max_output_units: usize,
    pub reward: RewardConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            max_generations: 10,
            max_output_units: 256,
            reward: RewardConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionStatus {
    Running,
    DoneNoChanges,
    DoneLimit,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub nl: String,
    pub fol_initial: String,
    pub prev_steps: Vec<String>,
    pub current_fol: String,
    pub generation: usize,
    pub status: SessionStatus,
    /// Outputs without a corrections section.
    pub malformed: usize,
    /// Outputs whose FOL did not parse.
    pub violations: usize,
}

impl SessionState {
    pub fn new(nl: &str, fol_initial: &str) -> Self {
        SessionState {
            nl: nl.to_string(),
            fol_initial: fol_initial.to_string(),
            prev_steps: Vec::new(),
            current_fol: fol_initial.to_string(),
            generation: 0,
            status: SessionStatus::Running,
            malformed: 0,
            violations: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperienceTuple {
    pub corrected_fol: String,
    pub nl: String,
    /// Steps accumulated before this generation.
    pub prev_steps: Vec<String>,
    pub fol_initial: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
    pub generation: usize,
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("could not repair the prediction into a parseable FOL")]
    RepairFailed,
    #[error("session is not running")]
    NotRunning,
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

fn extract_fol(text: &str) -> String {
    split_sections(text)
        .into_iter()
        .rev()
        .find(|(m, _)| *m == FOL_MARKER)
        .map(|(_, b)| b)
        .unwrap_or_else(|| text.trim().to_string())
}

/// Returns `fol_pred` unchanged when it parses; otherwise asks the
/// generator for a one-shot rewrite in the naive-correction format.
pub fn pre_repair(nl: &str, fol_pred: &str, generator: &mut dyn Generator) -> Result<String, SessionError> {
    if parse(fol_pred).is_ok() {
        return Ok(fol_pred.to_string());
    }
    let out = generator.generate(REPAIR_SYSTEM, &t2_input(nl, fol_pred))?;
    let fixed = extract_fol(&out);
    if parse(&fixed).is_ok() {
        Ok(fixed)
    } else {
        Err(SessionError::RepairFailed)
    }
}

/// Runs one generation. The prompt carries the NL, the initial FOL and the
/// steps so far; the output's steps are appended and its FOL becomes
/// current when it parses.
pub fn step(
    state: &mut SessionState,
    generator: &mut dyn Generator,
    gold: Option<&str>,
    config: &SessionConfig,
) -> Result<ExperienceTuple, SessionError> {
    if state.status != SessionStatus::Running {
        return Err(SessionError::NotRunning);
    }
    let prompt = t3_input(&state.nl, &state.fol_initial, &state.prev_steps);
    let output = generator.generate(CORRECTION_SYSTEM, &prompt)?;
    state.generation += 1;
    let prev_steps = state.prev_steps.clone();
    let mut corrected = state.current_fol.clone();

    if output.split_whitespace().count() > config.max_output_units {
        log::warn!("generation {} exceeded the output cap", state.generation);
        state.status = SessionStatus::DoneLimit;
    } else {
        match parse_t3_output(&output) {
            None => {
                state.malformed += 1;
                log::warn!("generation {}: output has no corrections section", state.generation);
            }
            Some((steps, fol)) => {
                if let Some(f) = &fol {
                    corrected = f.clone();
                }
                if steps.is_empty() || steps.iter().any(|s| s == NO_CHANGES) {
                    state.status = SessionStatus::DoneNoChanges;
                    corrected = state.current_fol.clone();
                } else {
                    state.prev_steps.extend(steps);
                    match fol {
                        Some(f) if parse(&f).is_ok() => state.current_fol = f,
                        _ => {
                            state.violations += 1;
                            log::warn!("generation {}: corrected FOL does not parse", state.generation);
                        }
                    }
                }
            }
        }
    }
    if state.status == SessionStatus::Running && state.generation >= config.max_generations {
        state.status = SessionStatus::DoneLimit;
    }
    let reward = match gold {
        Some(g) => Some(reward(g, &corrected, &config.reward)?.reward),
        None => None,
    };
    Ok(ExperienceTuple {
        corrected_fol: corrected,
        nl: state.nl.clone(),
        prev_steps,
        fol_initial: state.fol_initial.clone(),
        reward,
        generation: state.generation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub final_fol: String,
    pub status: SessionStatus,
    pub generations: usize,
    pub final_reward: Option<f64>,
    pub experiences: Vec<ExperienceTuple>,
}

/// Pre-repair followed by generations until the session stops. A failed
/// repair yields a `Failed` outcome with no experiences.
pub fn run_session(
    nl: &str,
    fol_pred: &str,
    gold: Option<&str>,
    generator: &mut dyn Generator,
    config: &SessionConfig,
) -> Result<SessionOutcome, SessionError> {
    let initial = match pre_repair(nl, fol_pred, generator) {
        Ok(f) => f,
        Err(SessionError::RepairFailed) => {
            return Ok(SessionOutcome {
                final_fol: fol_pred.to_string(),
                status: SessionStatus::Failed,
                generations: 0,
                final_reward: None,
                experiences: Vec::new(),
            })
        }
        Err(e) => return Err(e),
    };
    let mut state = SessionState::new(nl, &initial);
    let mut experiences = Vec::new();
    if config.max_generations == 0 {
        state.status = SessionStatus::DoneLimit;
    }
    while state.status == SessionStatus::Running {
        experiences.push(step(&mut state, generator, gold, config)?);
    }
    let final_reward = match gold {
        Some(g) => Some(reward(g, &state.current_fol, &config.reward)?.reward),
        None => None,
    };
    Ok(SessionOutcome {
        final_fol: state.current_fol,
        status: state.status,
        generations: state.generation,
        final_reward,
        experiences,
    })
}

/// One input row for batch correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCase {
    pub nl: String,
    pub fol_pred: String,
    #[serde(default)]
    pub gold: Option<String>,
}

/// Runs independent sessions in parallel, one generator per case.
pub fn run_batch<G, F>(cases: &[SessionCase], make_generator: F, config: &SessionConfig) -> Vec<Result<SessionOutcome, SessionError>>
where
    G: Generator,
    F: Fn(usize) -> G + Sync,
{
    cases
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            let mut g = make_generator(i);
            run_session(&c.nl, &c.fol_pred, c.gold.as_deref(), &mut g, config)
        })
        .collect()
}
