use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gate::NgramGate;
use crate::forge::NlFolPair;

pub const SYSTEM_PROMPT: &str = r#"I want to create a dataset for translating natural language (NL) statements into first-order logic (FOL) rules.
You will help me to create a diverse set of NL-FOL pairs.

For natural language (NL) generation, you should:
    1. Come up with a statement stating either complex or simple real-world commonsense facts
    2. The statements are meaningful, and diverse from each other

For FOL rule generation:
    1. You SHOULD USE the following logical operators: ⊕ (either or), ∨ (disjunction),
        ∧ (conjunction), → (implication), ∀ (universal), ∃ (existential), ¬ (negation),
        ↔ (equivalence)
    2. You *SHOULD NEVER USE* the following symbols for FOL: "!", "≠", "%", "="
    3. The literals in FOL SHOULD ALWAYS have predicate and entities, e.g., "Rounded(x, y)" or "City(guilin)";
        expressions such as "y = a ∨ y = b" or "a ∧ b ∧ c" are NOT ALLOWED
    4. The FOL rule SHOULD ACCURATELY reflect the meaning of the NL statement
    5. You SHOULD ALWAYS put quantifiers and variables at the beginning of the FOL
    6. You SHOULD generate FOL rules with either: (1) no variables; (2) one variable "x"; (3) two variables "x",
        "y"; or (4) three variables "x", "y" and "z"

Generation Format: you SHOULD ALWAYS generate the NL and FOL pairs in the following format
"""
--- NL:
{your generated NL}
---
--- FOL:
{your generated FOL}
---
""""#;

pub const DIVERSITY_CLAUSE: &str =
    "The statement involves diverse logical operators such as logical negation, logical xor and disjunction";

pub const BREAKDOWN_CLAUSE: &str =
    r#"[IMPORTANT] AVOID making long predicate names like "MoonShinesAtNight","SunShinesDuringDay""#;

/// Few-shot pairs used before any pair has been collected.
pub const BOOTSTRAP_PAIRS: [(&str, &str); 5] = [
    ("If someone is entire, then he is not serious, and vice versa.", "∃x entire(x) ↔ ¬serious(x)"),
    (
        "If there is at least one people who is both not excited and not timid, then Jonathan is elderly.",
        "∀x (¬excited(x) ∧ ¬timid(x)) → elderly(Jonathan)",
    ),
    (
        "Someone who is eithor not fresh or entire is always not serious.",
        "∀x (¬concerned(x) ∨ fresh(x)) → entire(John)",
    ),
    ("If Nathalie is not blue, then Collier is entire.", "¬blue(Nathalie) → entire(Collier)"),
    (
        "Someone is courteous and not elderly if and only if he is not excited and not various.",
        "∃x (courteous(x) ∧ ¬elderly(x)) ↔ (¬excited(x) ∧ ¬various(x))",
    ),
];

pub const FEW_SHOT_COUNT: usize = 5;

pub fn bootstrap_corpus() -> Vec<NlFolPair> {
    BOOTSTRAP_PAIRS.iter().map(|(nl, fol)| NlFolPair::new(*nl, *fol)).collect()
}

pub fn negative_clause(blocked: &[String]) -> String {
    let quoted: Vec<String> = blocked.iter().map(|g| format!("\"{g}\"")).collect();
    format!(
        "They DO NOT involve concepts and terms (and the synonyms) such as {}",
        quoted.join(",")
    )
}

/// The FOL shape requested by one prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FolShape {
    pub complex: bool,
    pub variables: u8,
    pub diverse_operators: bool,
}

impl FolShape {
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        FolShape {
            complex: rng.gen_bool(0.5),
            variables: rng.gen_range(0..=3),
            diverse_operators: rng.gen_bool(0.5),
        }
    }

    pub fn clause(&self) -> String {
        let kind = if self.complex { "complex" } else { "simple" };
        if self.variables == 0 {
            format!("They are {kind} statements involving no logical variables")
        } else {
            format!(
                "They are {kind} statements involving at least {} logical variables",
                self.variables
            )
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system: String,
    pub few_shot: Vec<NlFolPair>,
    pub negative_clause: Option<String>,
    pub shape: FolShape,
    pub breakdown: bool,
}

impl PromptBundle {
    pub fn few_shot_block(&self) -> String {
        self.few_shot
            .iter()
            .map(|p| format!("--- NL:\n{}\n--- FOL:\n{}\n", p.nl, p.fol))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn clauses(&self) -> Vec<String> {
        let mut out = Vec::new();
        out.extend(self.negative_clause.clone());
        out.push(self.shape.clause());
        if self.shape.diverse_operators {
            out.push(DIVERSITY_CLAUSE.to_string());
        }
        if self.breakdown {
            out.push(BREAKDOWN_CLAUSE.to_string());
        }
        out
    }

    /// The user message: few-shot block followed by one clause per line.
    pub fn user_message(&self) -> String {
        format!("{}\n{}", self.few_shot_block(), self.clauses().join("\n"))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("few-shot corpus has {have} pairs, need {need}")]
pub struct InsufficientCorpus {
    pub have: usize,
    pub need: usize,
}

/// Samples 5 few-shot pairs uniformly without replacement and a random FOL
/// shape; the negative clause mirrors the gate's blocked list.
pub fn assemble_prompt<R: Rng + ?Sized>(
    gate: &NgramGate,
    corpus: &[NlFolPair],
    breakdown: bool,
    rng: &mut R,
) -> Result<PromptBundle, InsufficientCorpus> {
    if corpus.len() < FEW_SHOT_COUNT {
        return Err(InsufficientCorpus {
            have: corpus.len(),
            need: FEW_SHOT_COUNT,
        });
    }
    let few_shot = corpus.choose_multiple(rng, FEW_SHOT_COUNT).cloned().collect();
    let blocked = gate.blocked();
    Ok(PromptBundle {
        system: SYSTEM_PROMPT.to_string(),
        few_shot,
        negative_clause: (!blocked.is_empty()).then(|| negative_clause(blocked)),
        shape: FolShape::random(rng),
        breakdown,
    })
}
