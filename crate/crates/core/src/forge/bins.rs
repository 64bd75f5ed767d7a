use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Scores of one sample: a reference model's LE/BLEU and the evaluated
/// model's LE/BLEU.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub gpt_le: f64,
    pub gpt_bleu: f64,
    pub model_le: f64,
    pub model_bleu: f64,
}

/// Which reference score assigns rows to bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupBy {
    GptLe,
    GptBleu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    /// Inclusive lower edge.
    pub lo: f64,
    /// Exclusive upper edge, except the top bin which includes 1.0.
    pub hi: f64,
    pub count: usize,
    pub mean_gpt_le: f64,
    pub mean_gpt_bleu: f64,
    pub mean_model_le: f64,
    pub mean_model_bleu: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BinError {
    #[error("bin edges must start at 1.0 and strictly decrease, with at least two edges")]
    BadEdges,
}

/// Per-bin means. Bin `k` covers `[edges[k+1], edges[k])`; the top bin is
/// closed at 1.0. Rows below the last edge fall outside every bin. Empty
/// bins are omitted.
pub fn bin_scores(rows: &[ScoreRow], edges: &[f64], by: GroupBy) -> Result<Vec<BinSummary>, BinError> {
    if edges.len() < 2 || edges[0] != 1.0 || edges.windows(2).any(|w| w[1] >= w[0]) {
        return Err(BinError::BadEdges);
    }
    let mut out = Vec::new();
    for k in 0..edges.len() - 1 {
        let (hi, lo) = (edges[k], edges[k + 1]);
        let members: Vec<&ScoreRow> = rows
            .iter()
            .filter(|r| {
                let s = match by {
                    GroupBy::GptLe => r.gpt_le,
                    GroupBy::GptBleu => r.gpt_bleu,
                };
                s >= lo && (s < hi || (k == 0 && s <= hi))
            })
            .collect();
        if members.is_empty() {
            continue;
        }
        let n = members.len() as f64;
        let mean = |f: fn(&ScoreRow) -> f64| members.iter().map(|r| f(r)).sum::<f64>() / n;
        out.push(BinSummary {
            lo,
            hi,
            count: members.len(),
            mean_gpt_le: mean(|r| r.gpt_le),
            mean_gpt_bleu: mean(|r| r.gpt_bleu),
            mean_model_le: mean(|r| r.model_le),
            mean_model_bleu: mean(|r| r.model_bleu),
        });
    }
    Ok(out)
}
