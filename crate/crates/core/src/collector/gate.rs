use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

pub const DEFAULT_UNIGRAM_THRESHOLD: u64 = 500;
pub const DEFAULT_TRIGRAM_THRESHOLD: u64 = 250;

/// Lowercase tokens split on non-alphanumerics.
pub fn ngram_tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn grams(tokens: &[String]) -> impl Iterator<Item = String> + '_ {
    tokens.iter().cloned().chain(tokens.windows(3).map(|w| w.join(" ")))
}

/// Frequency counter over accepted statements that blocks 1-grams and
/// 3-grams once they reach their thresholds. The blocked list only grows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramGate {
    pub unigram_threshold: u64,
    pub trigram_threshold: u64,
    unigrams: BTreeMap<String, u64>,
    trigrams: BTreeMap<String, u64>,
    /// In the order they crossed the threshold.
    blocked: Vec<String>,
}

impl Default for NgramGate {
    fn default() -> Self {
        NgramGate::new(DEFAULT_UNIGRAM_THRESHOLD, DEFAULT_TRIGRAM_THRESHOLD)
    }
}

impl NgramGate {
    pub fn new(unigram_threshold: u64, trigram_threshold: u64) -> Self {
        NgramGate {
            unigram_threshold,
            trigram_threshold,
            unigrams: BTreeMap::new(),
            trigrams: BTreeMap::new(),
            blocked: Vec::new(),
        }
    }

    /// Counts every 1-gram and 3-gram occurrence of an accepted statement.
    pub fn update(&mut self, nl: &str) {
        let tokens = ngram_tokens(nl);
        for t in &tokens {
            let c = self.unigrams.entry(t.clone()).or_insert(0);
            *c += 1;
            if *c >= self.unigram_threshold && !self.blocked.contains(t) {
                self.blocked.push(t.clone());
            }
        }
        for w in tokens.windows(3) {
            let g = w.join(" ");
            let c = self.trigrams.entry(g.clone()).or_insert(0);
            *c += 1;
            if *c >= self.trigram_threshold && !self.blocked.contains(&g) {
                self.blocked.push(g);
            }
        }
    }

    pub fn blocked(&self) -> &[String] {
        &self.blocked
    }

    pub fn count(&self, gram: &str) -> u64 {
        let map = if gram.contains(' ') { &self.trigrams } else { &self.unigrams };
        map.get(gram).copied().unwrap_or(0)
    }

    /// First blocked n-gram occurring in `nl`.
    pub fn blocked_in(&self, nl: &str) -> Option<String> {
        if self.blocked.is_empty() {
            return None;
        }
        let set: HashSet<&str> = self.blocked.iter().map(String::as_str).collect();
        let tokens = ngram_tokens(nl);
        let found = grams(&tokens).find(|g| set.contains(g.as_str()));
        found
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_gate_blocks_nothing() {
        let g = NgramGate::default();
        assert!(g.blocked().is_empty());
        assert_eq!(g.blocked_in("an animal eats food"), None);
    }

    #[test]
    fn unigram_blocks_at_threshold() {
        let mut g = NgramGate::default();
        for i in 0..499 {
            g.update(&format!("The animal number {i} sleeps."));
        }
        assert!(!g.blocked().contains(&"animal".to_string()));
        g.update("One more animal.");
        assert!(g.blocked().contains(&"animal".to_string()));
        assert_eq!(g.blocked_in("Every ANIMAL breathes"), Some("animal".into()));
    }

    #[test]
    fn trigram_blocks_before_its_unigrams() {
        let mut g = NgramGate::default();
        for _ in 0..250 {
            g.update("if it has wings");
        }
        assert!(g.blocked().contains(&"if it has".to_string()));
        assert_eq!(g.count("if"), 250);
        assert!(!g.blocked().contains(&"if".to_string()));
        assert_eq!(g.blocked_in("Birds fly if it has wings"), Some("if it has".into()));
    }
}
