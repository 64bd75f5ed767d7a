//! Training-record forging for direct translation (T1), naive correction
//! (T2) and step-wise correction (T3), plus corpus statistics and binned
//! score summaries.

mod bins;
mod prompt;
mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derive_seed;
use crate::fol::{parse, FolRule};
use crate::perturb::{apply_steps, render_steps, sample_perturbation_with, split_iteration, EditStep, PerturbConfig, NO_CHANGES};

pub use bins::{bin_scores, BinError, BinSummary, GroupBy, ScoreRow};
pub use prompt::{
    format_prompt, parse_prompt, parse_t3_output, split_sections, t2_input, t3_input, t3_output, ParsedPrompt,
    CORR_MARKER, FOL_MARKER, NL_MARKER, PREV_MARKER,
};
pub use stats::{corpus_stats, CorpusStats, OperatorCounts, StatsBuilder, DEFAULT_TOP_PAIRS, DEFAULT_TOP_TERMS};
pub(crate) use stats::rule_terms;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    T1,
    T2,
    T3,
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "t1" => Ok(Task::T1),
            "t2" => Ok(Task::T2),
            "t3" => Ok(Task::T3),
            other => Err(format!("unknown task {other:?}, expected t1, t2 or t3")),
        }
    }
}

/// One NL-FOL pair. Accepts the upper-case `NL`/`FOL` keys used by
/// released corpora.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NlFolPair {
    #[serde(alias = "NL")]
    pub nl: String,
    #[serde(alias = "FOL")]
    pub fol: String,
    /// A model's translation of `nl`, used for T2.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prediction: Option<String>,
}

impl NlFolPair {
    pub fn new(nl: impl Into<String>, fol: impl Into<String>) -> Self {
        NlFolPair {
            nl: nl.into(),
            fol: fol.into(),
            prediction: None,
        }
    }
}

/// A correction step as rendered text plus the structural edit behind it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub text: String,
    pub edit: EditStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub n_perturb: usize,
    pub n_correct: usize,
    pub seed: u64,
    pub source: String,
    pub task: Task,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionRecord {
    pub nl: String,
    pub fol_gold: String,
    /// Perturbed gold (T3) or a model prediction (T2); empty for T1.
    pub fol_input: String,
    pub prev_steps: Vec<StepRecord>,
    pub target_steps: Vec<StepRecord>,
    pub meta: RecordMeta,
}

impl CorrectionRecord {
    pub fn prev_texts(&self) -> Vec<String> {
        self.prev_steps.iter().map(|s| s.text.clone()).collect()
    }

    /// Target step texts; an empty target reads "No changes needed".
    pub fn target_texts(&self) -> Vec<String> {
        if self.target_steps.is_empty() {
            vec![NO_CHANGES.to_string()]
        } else {
            self.target_steps.iter().map(|s| s.text.clone()).collect()
        }
    }

    /// For T3 records: replaying previous then target steps on the input
    /// reproduces the gold rule.
    pub fn replays(&self) -> bool {
        let (Ok(input), Ok(gold)) = (parse(&self.fol_input), parse(&self.fol_gold)) else {
            return false;
        };
        let steps: Vec<EditStep> = self
            .prev_steps
            .iter()
            .chain(&self.target_steps)
            .map(|s| s.edit.clone())
            .collect();
        apply_steps(&input, &steps).is_ok_and(|r| r == gold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForgeConfig {
    pub task: Task,
    pub count: usize,
    pub perturb: PerturbConfig,
    /// T2 without predictions: use a perturbed gold as the prediction.
    pub simulate_predictions: bool,
    pub source: String,
}

impl Default for ForgeConfig {
    fn default() -> Self {
        ForgeConfig {
            task: Task::T3,
            count: 0,
            perturb: PerturbConfig::default(),
            simulate_predictions: false,
            source: "input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForgeError {
    #[error("no parseable pairs in the input")]
    EmptyInput,
    #[error("pair {0} has no prediction (required for t2)")]
    MissingPrediction(usize),
    #[error("invalid perturbation config: {0}")]
    InvalidConfig(String),
}

struct Row<'a> {
    pair: &'a NlFolPair,
    gold: FolRule,
}

fn steps_with_text(start: &FolRule, steps: &[EditStep]) -> (Vec<StepRecord>, FolRule) {
    if steps.is_empty() {
        return (Vec::new(), start.clone());
    }
    let texts = render_steps(start, steps);
    let end = apply_steps(start, steps).expect("steps come from a valid perturbation");
    let records = texts
        .into_iter()
        .zip(steps)
        .map(|(text, edit)| StepRecord { text, edit: edit.clone() })
        .collect();
    (records, end)
}

fn forge_one(row: &Row, config: &ForgeConfig, seed: u64) -> CorrectionRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gold_text = row.gold.print_canonical();
    let meta = |n_perturb, n_correct| RecordMeta {
        n_perturb,
        n_correct,
        seed,
        source: config.source.clone(),
        task: config.task,
    };
    match config.task {
        Task::T1 => CorrectionRecord {
            nl: row.pair.nl.clone(),
            fol_gold: gold_text,
            fol_input: String::new(),
            prev_steps: Vec::new(),
            target_steps: Vec::new(),
            meta: meta(0, 0),
        },
        Task::T2 => {
            let (input, n) = match &row.pair.prediction {
                Some(p) => (p.clone(), 0),
                None => {
                    let p = sample_perturbation_with(&row.gold, &config.perturb, &mut rng);
                    (p.perturbed.print_canonical(), p.n_perturb())
                }
            };
            CorrectionRecord {
                nl: row.pair.nl.clone(),
                fol_gold: gold_text,
                fol_input: input,
                prev_steps: Vec::new(),
                target_steps: Vec::new(),
                meta: meta(n, 0),
            }
        }
        Task::T3 => {
            let p = sample_perturbation_with(&row.gold, &config.perturb, &mut rng);
            let split = split_iteration(&p.steps_to_fix, &config.perturb, &mut rng);
            let (prev_steps, mid) = steps_with_text(&p.perturbed, &split.prev);
            let (target_steps, _) = steps_with_text(&mid, &split.target);
            CorrectionRecord {
                nl: row.pair.nl.clone(),
                fol_gold: gold_text,
                fol_input: p.perturbed.print_canonical(),
                prev_steps,
                target_steps,
                meta: meta(p.n_perturb(), split.n_correct),
            }
        }
    }
}

/// Forges `config.count` records by sampling input rows with replacement.
/// Record `k` uses its own seed derived from `(config.perturb.seed, k)`, so
/// output is identical for any worker count. Unparseable gold rows are
/// skipped with a warning.
pub fn forge_sft(pairs: &[NlFolPair], config: &ForgeConfig) -> Result<Vec<CorrectionRecord>, ForgeError> {
    config.perturb.validate().map_err(ForgeError::InvalidConfig)?;
    if config.count == 0 {
        return Ok(Vec::new());
    }
    let mut rows = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.iter().enumerate() {
        match parse(&pair.fol) {
            Ok(gold) => {
                if config.task == Task::T2 && pair.prediction.is_none() && !config.simulate_predictions {
                    return Err(ForgeError::MissingPrediction(i));
                }
                rows.push(Row { pair, gold });
            }
            Err(e) => log::warn!("skipping pair {i}: gold FOL does not parse: {e}"),
        }
    }
    if rows.is_empty() {
        return Err(ForgeError::EmptyInput);
    }
    let base = config.perturb.seed;
    Ok((0..config.count as u64)
        .into_par_iter()
        .map(|k| {
            let seed = derive_seed(base, k);
            let pick = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5_A5A5).gen_range(0..rows.len());
            forge_one(&rows[pick], config, seed)
        })
        .collect())
}
