use std::path::Path;

use folkit::collector::CollectConfig;
use folkit::generator::EndpointConfig;
use folkit::metrics::RewardConfig;
use folkit::perturb::PerturbConfig;
use folkit::session::SessionConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Jsonl,
    Tsv,
}

/// Settings shared by all subcommands. Loaded from `--config` (TOML), then
/// overridden by command-line flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GlobalConfig {
    pub seed: u64,
    pub workers: Option<usize>,
    pub format: OutputFormat,
    pub reward: RewardConfig,
    pub perturb: PerturbConfig,
    pub endpoint: EndpointConfig,
    pub collect: CollectConfig,
    pub session: SessionConfig,
}

impl GlobalConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(GlobalConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_keeps_defaults() {
        let cfg: GlobalConfig = toml::from_str("seed = 9\n[reward]\nomega = 0.5\n[perturb]\nnegative_prob = 0.1\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.reward.omega, 0.5);
        assert_eq!(cfg.reward.max_atoms, 16);
        assert_eq!(cfg.perturb.negative_prob, 0.1);
        assert_eq!(cfg.session.max_generations, 10);
    }
}
