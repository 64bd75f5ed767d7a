use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::NlFolPair;
use crate::fol::{parse, Connective, FolRule, Formula, Quantifier, Term};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorCounts {
    pub forall: u64,
    pub exists: u64,
    pub not: u64,
    pub and: u64,
    pub or: u64,
    pub implies: u64,
    pub iff: u64,
    pub xor: u64,
}

impl OperatorCounts {
    /// Counts from the AST: prefix quantifiers, negated literals plus `¬(..)`
    /// nodes, and binary connective nodes.
    pub fn of(rule: &FolRule) -> Self {
        let mut c = OperatorCounts::default();
        for q in &rule.prefix {
            match q.quantifier {
                Quantifier::Forall => c.forall += 1,
                Quantifier::Exists => c.exists += 1,
            }
        }
        rule.body.walk(&mut |node, _| match node {
            Formula::Not(_) => c.not += 1,
            Formula::Literal(l) if l.negated => c.not += 1,
            Formula::Binary { op, .. } => match op {
                Connective::And => c.and += 1,
                Connective::Or => c.or += 1,
                Connective::Implies => c.implies += 1,
                Connective::Iff => c.iff += 1,
                Connective::Xor => c.xor += 1,
            },
            _ => {}
        });
        c
    }

    fn add(&mut self, o: &OperatorCounts) {
        self.forall += o.forall;
        self.exists += o.exists;
        self.not += o.not;
        self.and += o.and;
        self.or += o.or;
        self.implies += o.implies;
        self.iff += o.iff;
        self.xor += o.xor;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    /// Pairs whose FOL parsed; all other fields cover these only.
    pub pairs: usize,
    pub unparseable: usize,
    pub nl_vocab_size: usize,
    pub nl_avg_words: f64,
    pub fol_avg_literals: f64,
    pub operators: OperatorCounts,
    pub term_vocab_size: usize,
    /// Literal occurrences per rule -> number of rules.
    pub literal_histogram: BTreeMap<usize, usize>,
    /// Number of rules mentioning each term.
    pub top_terms: Vec<(String, usize)>,
    /// Number of rules mentioning both terms of each unordered pair.
    pub top_term_pairs: Vec<((String, String), usize)>,
}

/// Mergeable partial statistics.
#[derive(Debug, Clone, Default)]
pub struct StatsBuilder {
    pairs: usize,
    unparseable: usize,
    vocab: HashSet<String>,
    words: u64,
    literals: u64,
    operators: OperatorCounts,
    histogram: BTreeMap<usize, usize>,
    terms: HashMap<String, usize>,
    term_pairs: HashMap<(String, String), usize>,
}

fn nl_tokens(nl: &str) -> impl Iterator<Item = String> + '_ {
    nl.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Terms of a rule: predicate names and constants, each listed once.
pub(crate) fn rule_terms(rule: &FolRule) -> Vec<String> {
    let mut seen = Vec::new();
    for lit in rule.body.literals() {
        let names = std::iter::once(lit.predicate.as_str()).chain(lit.args.iter().filter_map(|t| match t {
            Term::Const(c) => Some(c.as_str()),
            Term::Var(_) => None,
        }));
        for n in names {
            if !seen.iter().any(|s: &String| s == n) {
                seen.push(n.to_string());
            }
        }
    }
    seen
}

impl StatsBuilder {
    pub fn add(&mut self, nl: &str, fol: &str) {
        let Ok(rule) = parse(fol) else {
            self.unparseable += 1;
            return;
        };
        self.pairs += 1;
        for tok in nl_tokens(nl) {
            self.words += 1;
            if tok.chars().all(char::is_alphabetic) {
                self.vocab.insert(tok);
            }
        }
        let n_lit = rule.literal_count();
        self.literals += n_lit as u64;
        *self.histogram.entry(n_lit).or_insert(0) += 1;
        self.operators.add(&OperatorCounts::of(&rule));
        let mut terms = rule_terms(&rule);
        terms.sort();
        for (i, a) in terms.iter().enumerate() {
            *self.terms.entry(a.clone()).or_insert(0) += 1;
            for b in &terms[i + 1..] {
                *self.term_pairs.entry((a.clone(), b.clone())).or_insert(0) += 1;
            }
        }
    }

    pub fn merge(mut self, other: StatsBuilder) -> StatsBuilder {
        self.pairs += other.pairs;
        self.unparseable += other.unparseable;
        self.vocab.extend(other.vocab);
        self.words += other.words;
        self.literals += other.literals;
        self.operators.add(&other.operators);
        for (k, v) in other.histogram {
            *self.histogram.entry(k).or_insert(0) += v;
        }
        for (k, v) in other.terms {
            *self.terms.entry(k).or_insert(0) += v;
        }
        for (k, v) in other.term_pairs {
            *self.term_pairs.entry(k).or_insert(0) += v;
        }
        self
    }

    pub fn finish(self, top_terms: usize, top_pairs: usize) -> CorpusStats {
        fn top<K: Ord + Clone>(map: HashMap<K, usize>, k: usize) -> Vec<(K, usize)> {
            let mut v: Vec<(K, usize)> = map.into_iter().collect();
            v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            v.truncate(k);
            v
        }
        let avg = |total: u64| if self.pairs == 0 { 0.0 } else { total as f64 / self.pairs as f64 };
        CorpusStats {
            pairs: self.pairs,
            unparseable: self.unparseable,
            nl_vocab_size: self.vocab.len(),
            nl_avg_words: avg(self.words),
            fol_avg_literals: avg(self.literals),
            operators: self.operators,
            term_vocab_size: self.terms.len(),
            literal_histogram: self.histogram,
            top_terms: top(self.terms, top_terms),
            top_term_pairs: top(self.term_pairs, top_pairs),
        }
    }
}

pub const DEFAULT_TOP_TERMS: usize = 40;
pub const DEFAULT_TOP_PAIRS: usize = 200;

/// Statistics over a corpus, accumulated in parallel.
pub fn corpus_stats(pairs: &[NlFolPair]) -> CorpusStats {
    pairs
        .par_iter()
        .fold(StatsBuilder::default, |mut b, p| {
            b.add(&p.nl, &p.fol);
            b
        })
        .reduce(StatsBuilder::default, StatsBuilder::merge)
        .finish(DEFAULT_TOP_TERMS, DEFAULT_TOP_PAIRS)
}
