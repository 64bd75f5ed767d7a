use std::collections::HashMap;

use crate::fol::{leaves, parse, SyntaxError};

pub const MAX_NGRAM: usize = 4;

/// FOL tokenizer: the parse tree's leaves in pre-order, so every quantifier,
/// variable, connective, predicate, term, parenthesis and comma is a token.
pub fn fol_tokenize(text: &str) -> Result<Vec<String>, SyntaxError> {
    Ok(leaves(&parse(text)?))
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    counts
}

/// BLEU over token sequences: uniform 1..4-gram weights, clipped counts,
/// brevity penalty. An n-gram order with no matches contributes
/// `1 / (total + 1)` instead of zero.
pub fn bleu(reference: &[String], hypothesis: &[String]) -> f64 {
    if hypothesis.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=MAX_NGRAM {
        let hyp = ngram_counts(hypothesis, n);
        let refc = ngram_counts(reference, n);
        let total: usize = hyp.values().sum();
        let matched: usize = hyp
            .iter()
            .map(|(g, c)| (*c).min(refc.get(g).copied().unwrap_or(0)))
            .sum();
        let precision = if matched == 0 {
            1.0 / (total as f64 + 1.0)
        } else {
            matched as f64 / total as f64
        };
        log_sum += precision.ln() / MAX_NGRAM as f64;
    }
    let (c, r) = (hypothesis.len() as f64, reference.len() as f64);
    let bp = if c < r { (1.0 - r / c).exp() } else { 1.0 };
    bp * log_sum.exp()
}

/// BLEU between two FOL strings under [`fol_tokenize`]; zero when either
/// side fails to parse.
pub fn fol_bleu(gold: &str, pred: &str) -> f64 {
    match (fol_tokenize(gold), fol_tokenize(pred)) {
        (Ok(g), Ok(p)) => bleu(&g, &p),
        _ => 0.0,
    }
}
