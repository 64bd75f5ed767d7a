//! NL-FOL pair collection: n-gram gating, prompt assembly, generator calls,
//! response parsing, verification and alignment filtering.

mod gate;
mod prompt;
mod response;

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::derive_seed;
use crate::fol::{camel_words, parse, validate, Verdict};
use crate::forge::NlFolPair;
use crate::generator::{Generator, GeneratorError};
use crate::jsonl::{append_jsonl, read_jsonl, JsonlError};

pub use gate::{ngram_tokens, NgramGate, DEFAULT_TRIGRAM_THRESHOLD, DEFAULT_UNIGRAM_THRESHOLD};
pub use prompt::{
    assemble_prompt, bootstrap_corpus, negative_clause, FolShape, InsufficientCorpus, PromptBundle, BOOTSTRAP_PAIRS,
    BREAKDOWN_CLAUSE, DIVERSITY_CLAUSE, FEW_SHOT_COUNT, SYSTEM_PROMPT,
};
pub use response::{alignment_score, parse_response, MalformedBlock};

pub const DEFAULT_ALIGN_THRESHOLD: f64 = 0.5;
/// Predicate names with at least this many CamelCase words trigger the
/// break-down clause.
pub const LONG_PREDICATE_WORDS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", content = "detail", rename_all = "snake_case")]
pub enum Rejection {
    Syntax(String),
    Alignment(f64),
    Blocked(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Acceptance {
    Accepted,
    Rejected(Rejection),
}

/// Verifier: the FOL must validate, the NL must avoid blocked n-grams, and
/// the FOL's term words must align with the NL.
pub fn accept_pair(pair: &NlFolPair, gate: &NgramGate, align_threshold: f64) -> Acceptance {
    if let Verdict::Invalid(reason) = validate(&pair.fol) {
        return Acceptance::Rejected(Rejection::Syntax(reason));
    }
    if let Some(gram) = gate.blocked_in(&pair.nl) {
        return Acceptance::Rejected(Rejection::Blocked(gram));
    }
    let score = alignment_score(&pair.nl, &pair.fol);
    if score < align_threshold {
        return Acceptance::Rejected(Rejection::Alignment(score));
    }
    Acceptance::Accepted
}

/// True when some predicate name has at least [`LONG_PREDICATE_WORDS`] words.
pub fn has_long_predicate(fol: &str) -> bool {
    parse(fol).is_ok_and(|r| {
        r.atoms()
            .iter()
            .any(|a| camel_words(&a.predicate).len() >= LONG_PREDICATE_WORDS)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollectConfig {
    pub target: usize,
    /// Maximum generator calls for this run, counting resumed calls.
    pub max_calls: u64,
    pub align_threshold: f64,
    pub seed: u64,
    pub unigram_threshold: u64,
    pub trigram_threshold: u64,
}

impl Default for CollectConfig {
    fn default() -> Self {
        CollectConfig {
            target: 100,
            max_calls: 1000,
            align_threshold: DEFAULT_ALIGN_THRESHOLD,
            seed: 0,
            unigram_threshold: DEFAULT_UNIGRAM_THRESHOLD,
            trigram_threshold: DEFAULT_TRIGRAM_THRESHOLD,
        }
    }
}

/// Everything needed to continue a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectorState {
    pub gate: NgramGate,
    /// Bootstrap pairs the few-shot pool started from.
    pub bootstrap: Vec<NlFolPair>,
    pub accepted: Vec<NlFolPair>,
    pub calls: u64,
    pub last_batch_long_predicate: bool,
}

impl CollectorState {
    pub fn new(bootstrap: Vec<NlFolPair>, config: &CollectConfig) -> Self {
        CollectorState {
            gate: NgramGate::new(config.unigram_threshold, config.trigram_threshold),
            bootstrap,
            accepted: Vec::new(),
            calls: 0,
            last_batch_long_predicate: false,
        }
    }

    /// Few-shot pool: bootstrap pairs followed by accepted ones.
    pub fn corpus(&self) -> Vec<NlFolPair> {
        self.bootstrap.iter().chain(&self.accepted).cloned().collect()
    }
}

/// One line of the rejection log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RejectionRecord {
    pub call: u64,
    pub stage: String,
    pub detail: String,
    pub nl: Option<String>,
    pub fol: Option<String>,
}

#[derive(Debug, Error)]
pub enum CollectError {
    #[error(transparent)]
    InsufficientCorpus(#[from] InsufficientCorpus),
    #[error("endpoint unavailable: {0}")]
    EndpointUnavailable(String),
    #[error("budget of {calls} calls spent with {accepted} of {target} pairs accepted")]
    BudgetExceeded { calls: u64, accepted: usize, target: usize },
    #[error(transparent)]
    Io(#[from] JsonlError),
    #[error("state file: {0}")]
    State(String),
}

/// Where a run persists its output.
#[derive(Debug, Clone)]
pub struct OutputPaths {
    pub accepted: PathBuf,
    pub rejections: PathBuf,
    pub state: PathBuf,
}

impl OutputPaths {
    pub fn in_dir(dir: &Path) -> Self {
        OutputPaths {
            accepted: dir.join("accepted.jsonl"),
            rejections: dir.join("rejections.jsonl"),
            state: dir.join("gate_state.json"),
        }
    }

    fn save_state(&self, state: &CollectorState) -> Result<(), CollectError> {
        #[derive(Serialize)]
        struct Snapshot<'a> {
            gate: &'a NgramGate,
            calls: u64,
            last_batch_long_predicate: bool,
            bootstrap: &'a [NlFolPair],
        }
        let snap = Snapshot {
            gate: &state.gate,
            calls: state.calls,
            last_batch_long_predicate: state.last_batch_long_predicate,
            bootstrap: &state.bootstrap,
        };
        let text = serde_json::to_string_pretty(&snap).map_err(|e| CollectError::State(e.to_string()))?;
        std::fs::write(&self.state, text + "\n").map_err(|e| CollectError::State(e.to_string()))
    }

    /// Restores a run from its snapshot and accepted-pairs file, or `None`
    /// when no snapshot exists.
    pub fn load_state(&self) -> Result<Option<CollectorState>, CollectError> {
        if !self.state.exists() {
            return Ok(None);
        }
        #[derive(Deserialize)]
        struct Snapshot {
            gate: NgramGate,
            calls: u64,
            last_batch_long_predicate: bool,
            bootstrap: Vec<NlFolPair>,
        }
        let text = std::fs::read_to_string(&self.state).map_err(|e| CollectError::State(e.to_string()))?;
        let snap: Snapshot = serde_json::from_str(&text).map_err(|e| CollectError::State(e.to_string()))?;
        let accepted = if self.accepted.exists() {
            read_jsonl(&self.accepted)?
        } else {
            Vec::new()
        };
        Ok(Some(CollectorState {
            gate: snap.gate,
            bootstrap: snap.bootstrap,
            accepted,
            calls: snap.calls,
            last_batch_long_predicate: snap.last_batch_long_predicate,
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionReport {
    pub accepted: usize,
    pub rejected: usize,
    pub calls: u64,
    /// The replay source ran out before the target was met.
    pub exhausted: bool,
}

/// Runs assemble, generate, parse and verify until `config.target` pairs
/// are accepted. Call `k` draws its randomness from a seed derived from
/// `(config.seed, k)`, so a resumed run continues exactly where it stopped.
/// With `out` set, accepted pairs and rejections are appended as they
/// happen and the gate snapshot is rewritten after every call.
pub fn run_collection(
    config: &CollectConfig,
    state: &mut CollectorState,
    generator: &mut dyn Generator,
    out: Option<&OutputPaths>,
) -> Result<CollectionReport, CollectError> {
    let mut rejected = 0;
    let mut exhausted = false;
    let mut record_rejection = |r: RejectionRecord| -> Result<(), CollectError> {
        rejected += 1;
        if let Some(o) = out {
            append_jsonl(&o.rejections, &r)?;
        }
        Ok(())
    };

    while state.accepted.len() < config.target {
        if state.calls >= config.max_calls {
            return Err(CollectError::BudgetExceeded {
                calls: state.calls,
                accepted: state.accepted.len(),
                target: config.target,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, state.calls));
        let corpus = state.corpus();
        let bundle = assemble_prompt(&state.gate, &corpus, state.last_batch_long_predicate, &mut rng)?;
        let text = match generator.generate(&bundle.system, &bundle.user_message()) {
            Ok(t) => t,
            Err(GeneratorError::Exhausted) => {
                exhausted = true;
                break;
            }
            Err(e) => return Err(CollectError::EndpointUnavailable(e.to_string())),
        };
        let call = state.calls;
        state.calls += 1;

        let (candidates, malformed) = parse_response(&text);
        for m in malformed {
            record_rejection(RejectionRecord {
                call,
                stage: "parse".into(),
                detail: m.reason,
                nl: None,
                fol: Some(m.text),
            })?;
        }
        let mut long_predicate = false;
        for pair in candidates {
            if state.accepted.len() >= config.target {
                break;
            }
            match accept_pair(&pair, &state.gate, config.align_threshold) {
                Acceptance::Accepted => {
                    long_predicate |= has_long_predicate(&pair.fol);
                    state.gate.update(&pair.nl);
                    if let Some(o) = out {
                        append_jsonl(&o.accepted, &pair)?;
                    }
                    state.accepted.push(pair);
                }
                Acceptance::Rejected(reason) => {
                    let (stage, detail) = match reason {
                        Rejection::Syntax(d) => ("syntax", d),
                        Rejection::Alignment(s) => ("alignment", format!("{s:.4}")),
                        Rejection::Blocked(g) => ("blocked", g),
                    };
                    record_rejection(RejectionRecord {
                        call,
                        stage: stage.into(),
                        detail,
                        nl: Some(pair.nl),
                        fol: Some(pair.fol),
                    })?;
                }
            }
        }
        state.last_batch_long_predicate = long_predicate;
        if let Some(o) = out {
            o.save_state(state)?;
        }
    }
    Ok(CollectionReport {
        accepted: state.accepted.len(),
        rejected,
        calls: state.calls,
        exhausted,
    })
}
