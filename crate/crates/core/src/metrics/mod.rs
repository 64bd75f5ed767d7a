//! FOL similarity metrics: truth-table logical equivalence (LE) under a
//! greedy atom binding, BLEU over parse-tree leaves, and their weighted mix
//! used as the correction reward.

mod binding;
mod bleu;
mod le;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fol::{parse, SyntaxError};

pub use binding::{bind_atoms, distance_matrix, normalized_text, Binding, Slot, DEFAULT_SEARCH_CAP};
pub use bleu::{bleu, fol_bleu, fol_tokenize, MAX_NGRAM};
pub use le::{le_score, rows_matched, LeResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("truth table needs {atoms} atoms, limit is {max}")]
    TooManyAtoms { atoms: usize, max: usize },
    #[error("gold FOL does not parse: {0}")]
    GoldUnparseable(SyntaxError),
    #[error("invalid reward config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RewardConfig {
    /// Weight of LE in the reward; BLEU gets `1 - omega`.
    pub omega: f64,
    /// Largest truth table evaluated (`2^max_atoms` rows).
    pub max_atoms: usize,
    /// Maximum number of candidate bindings scored per pair.
    pub search_cap: usize,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            omega: 0.7,
            max_atoms: 16,
            search_cap: DEFAULT_SEARCH_CAP,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(MetricsError::InvalidConfig(format!("omega {} outside [0, 1]", self.omega)));
        }
        if self.max_atoms == 0 || self.max_atoms > 24 {
            return Err(MetricsError::InvalidConfig(format!(
                "max_atoms {} outside [1, 24]",
                self.max_atoms
            )));
        }
        if self.search_cap == 0 {
            return Err(MetricsError::InvalidConfig("search_cap must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub le: f64,
    pub bleu: f64,
    pub reward: f64,
    /// Present when LE was computed.
    pub le_detail: Option<LeResult>,
}

pub fn mix(le: f64, bleu: f64, omega: f64) -> f64 {
    omega * le + (1.0 - omega) * bleu
}

/// `omega * LE + (1 - omega) * BLEU`. LE is zero when the prediction does
/// not parse or its truth table would exceed `max_atoms`.
pub fn reward(gold: &str, pred: &str, config: &RewardConfig) -> Result<RewardBreakdown, MetricsError> {
    let gold_rule = parse(gold).map_err(MetricsError::GoldUnparseable)?;
    let (le, le_detail) = match parse(pred) {
        Ok(pred_rule) => match le_score(&gold_rule, &pred_rule, config) {
            Ok(r) => (r.score, Some(r)),
            Err(e) => {
                log::warn!("LE skipped for {pred:?}: {e}");
                (0.0, None)
            }
        },
        Err(_) => (0.0, None),
    };
    let bleu = fol_bleu(gold, pred);
    Ok(RewardBreakdown {
        le,
        bleu,
        reward: mix(le, bleu, config.omega),
        le_detail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixing_arithmetic() {
        assert_eq!(mix(1.0, 1.0, 0.7), 1.0);
        assert!((mix(0.875, 0.5, 0.7) - 0.7625).abs() < 1e-12);
    }

    #[test]
    fn reward_edge_cases() {
        let cfg = RewardConfig::default();
        let same = reward("∀x P(x) ∧ P(B)", "∀x P(x) ∧ P(B)", &cfg).unwrap();
        assert_eq!(same.reward, 1.0);
        let broken = reward("∀x P(x)", "∀x P(x", &cfg).unwrap();
        assert_eq!((broken.le, broken.bleu, broken.reward), (0.0, 0.0, 0.0));
        assert!(matches!(
            reward("P(x", "P(x)", &cfg),
            Err(MetricsError::GoldUnparseable(_))
        ));
    }

    #[test]
    fn too_many_atoms_folds_le_to_zero() {
        let cfg = RewardConfig {
            max_atoms: 1,
            ..RewardConfig::default()
        };
        let r = reward("A(x) ∧ B(x)", "A(x) ∧ B(x)", &cfg).unwrap();
        assert_eq!(r.le, 0.0);
        assert_eq!(r.bleu, 1.0);
        assert!((r.reward - 0.3).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(RewardConfig::default().validate().is_ok());
        let bad = RewardConfig {
            omega: 1.5,
            ..RewardConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
