use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use crate::CliError;

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// One FOL string per non-blank line. Lines that are JSON objects
/// contribute their `fol` (or `FOL`) field.
pub fn read_rules(path: &Path) -> Result<Vec<String>, CliError> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if t.starts_with('{') {
            let v: Value = serde_json::from_str(t)
                .map_err(|e| CliError::Input(format!("{}:{}: {e}", path.display(), i + 1)))?;
            let fol = v
                .get("fol")
                .or_else(|| v.get("FOL"))
                .and_then(Value::as_str)
                .ok_or_else(|| CliError::Input(format!("{}:{}: no \"fol\" field", path.display(), i + 1)))?;
            out.push(fol.to_string());
        } else {
            out.push(t.to_string());
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
struct PairLine {
    gold: String,
    pred: String,
}

/// `(gold, pred)` pairs from a JSONL file or `gold<TAB>pred` lines.
pub fn read_score_pairs(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = read_text(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let loc = || format!("{}:{}", path.display(), i + 1);
        if t.starts_with('{') {
            let p: PairLine = serde_json::from_str(t).map_err(|e| CliError::Input(format!("{}: {e}", loc())))?;
            out.push((p.gold, p.pred));
        } else {
            let (g, p) = t
                .split_once('\t')
                .ok_or_else(|| CliError::Input(format!("{}: expected gold<TAB>pred", loc())))?;
            out.push((g.trim().to_string(), p.trim().to_string()));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Deserialize)]
pub struct CorrectInput {
    #[serde(alias = "NL")]
    pub nl: String,
    #[serde(alias = "fol", alias = "prediction")]
    pub fol_pred: String,
}
