use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::binding::{bind_atoms, Binding, Slot};
use super::{MetricsError, RewardConfig};
use crate::fol::{Atom, FolRule, Formula};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeResult {
    pub score: f64,
    pub binding: Binding,
    /// `(gold atom, predicted atom)` per truth-table column; `None` is a dummy.
    pub bound_pairs: Vec<(Option<String>, Option<String>)>,
    pub rows_total: u64,
    pub rows_matched: u64,
}

/// A truth-table column set: one bit per row, `2^arity` rows.
#[derive(Clone)]
struct Table {
    words: usize,
    mask_last: u64,
}

impl Table {
    fn new(arity: usize) -> Self {
        let rows = 1u64 << arity;
        let words = rows.div_ceil(64) as usize;
        let mask_last = if rows >= 64 { u64::MAX } else { (1u64 << rows) - 1 };
        Table { words, mask_last }
    }

    /// Bit pattern of input column `k`: row `r` is true iff bit `k` of `r` is set.
    fn column(&self, k: usize) -> Vec<u64> {
        (0..self.words)
            .map(|w| {
                if k < 6 {
                    const PATTERNS: [u64; 6] = [
                        0xAAAA_AAAA_AAAA_AAAA,
                        0xCCCC_CCCC_CCCC_CCCC,
                        0xF0F0_F0F0_F0F0_F0F0,
                        0xFF00_FF00_FF00_FF00,
                        0xFFFF_0000_FFFF_0000,
                        0xFFFF_FFFF_0000_0000,
                    ];
                    PATTERNS[k]
                } else if (w >> (k - 6)) & 1 == 1 {
                    u64::MAX
                } else {
                    0
                }
            })
            .collect()
    }

    fn count_equal(&self, a: &[u64], b: &[u64]) -> u64 {
        let last = self.words - 1;
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(w, (x, y))| {
                let eq = !(x ^ y);
                let eq = if w == last { eq & self.mask_last } else { eq };
                u64::from(eq.count_ones())
            })
            .sum()
    }
}

/// Evaluates the formula on all rows at once; `columns[i]` holds the
/// inputs of atom `i` (indexed by canonical text through `index`).
fn eval_bits(node: &Formula, index: &HashMap<&str, usize>, columns: &[Vec<u64>]) -> Vec<u64> {
    match node {
        Formula::Binary { op, left, right } => {
            let l = eval_bits(left, index, columns);
            let r = eval_bits(right, index, columns);
            use crate::fol::Connective::*;
            l.iter()
                .zip(&r)
                .map(|(&a, &b)| match op {
                    And => a & b,
                    Or => a | b,
                    Xor => a ^ b,
                    Implies => !a | b,
                    Iff => !(a ^ b),
                })
                .collect()
        }
        Formula::Not(inner) => eval_bits(inner, index, columns).into_iter().map(|w| !w).collect(),
        Formula::Group(inner) => eval_bits(inner, index, columns),
        Formula::Literal(lit) => {
            let atom = lit.atom();
            let col = &columns[index[atom.canonical_text.as_str()]];
            if lit.negated {
                col.iter().map(|w| !w).collect()
            } else {
                col.clone()
            }
        }
    }
}

fn atom_index(atoms: &[Atom]) -> HashMap<&str, usize> {
    atoms
        .iter()
        .enumerate()
        .map(|(i, a)| (a.canonical_text.as_str(), i))
        .collect()
}

/// Matching truth-table rows under a fixed binding.
pub fn rows_matched(gold: &FolRule, pred: &FolRule, binding: &Binding) -> (u64, u64) {
    let p = gold.atoms();
    let q = pred.atoms();
    let table = Table::new(binding.arity());
    let mut p_cols = vec![Vec::new(); p.len()];
    let mut q_cols = vec![Vec::new(); q.len()];
    for (k, (l, r)) in binding.pairs.iter().enumerate() {
        let col = table.column(k);
        if let Slot::Atom(i) = l {
            p_cols[*i] = col.clone();
        }
        if let Slot::Atom(j) = r {
            q_cols[*j] = col;
        }
    }
    let a = eval_bits(&gold.body, &atom_index(&p), &p_cols);
    let b = eval_bits(&pred.body, &atom_index(&q), &q_cols);
    (table.count_equal(&a, &b), 1u64 << binding.arity())
}

/// Logical-equivalence score: the best truth-table overlap ratio over the
/// candidate bindings explored by [`bind_atoms`]. Quantifier prefixes are
/// ignored; atoms are the truth-table inputs and negation stays in the circuit.
pub fn le_score(gold: &FolRule, pred: &FolRule, config: &RewardConfig) -> Result<LeResult, MetricsError> {
    let p = gold.atoms();
    let q = pred.atoms();
    let arity = p.len().max(q.len());
    if arity > config.max_atoms {
        return Err(MetricsError::TooManyAtoms {
            atoms: arity,
            max: config.max_atoms,
        });
    }
    let table = Table::new(arity);
    let columns: Vec<Vec<u64>> = (0..arity).map(|k| table.column(k)).collect();

    // Gold atom i always sits in column i; dummies on the gold side take
    // the columns after |P|.
    let gold_bits = eval_bits(&gold.body, &atom_index(&p), &columns[..p.len()]);
    let q_index = atom_index(&q);

    let mut best: Option<(u64, Binding)> = None;
    for candidate in bind_atoms(&p, &q, config.search_cap) {
        let mut q_cols = vec![Vec::new(); q.len()];
        let mut canonical = Vec::with_capacity(arity);
        let mut next_left_dummy = p.len();
        for (l, r) in &candidate.pairs {
            let col = match l {
                Slot::Atom(i) => *i,
                Slot::Dummy(_) => {
                    next_left_dummy += 1;
                    next_left_dummy - 1
                }
            };
            if let Slot::Atom(j) = r {
                q_cols[*j] = columns[col].clone();
            }
            canonical.push((col, (*l, *r)));
        }
        let pred_bits = eval_bits(&pred.body, &q_index, &q_cols);
        let matched = table.count_equal(&gold_bits, &pred_bits);
        if best.as_ref().is_none_or(|(m, _)| matched > *m) {
            canonical.sort_by_key(|(c, _)| *c);
            let binding = Binding {
                pairs: canonical.into_iter().map(|(_, pair)| pair).collect(),
            };
            best = Some((matched, binding));
        }
        if matched == 1u64 << arity {
            break;
        }
    }
    let (rows_matched, binding) = best.expect("bind_atoms yields at least one binding");
    let rows_total = 1u64 << arity;
    Ok(LeResult {
        score: rows_matched as f64 / rows_total as f64,
        bound_pairs: binding.describe(&p, &q),
        binding,
        rows_total,
        rows_matched,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fol::parse;

    fn le(a: &str, b: &str) -> LeResult {
        le_score(&parse(a).unwrap(), &parse(b).unwrap(), &RewardConfig::default()).unwrap()
    }

    /// Independent row-by-row oracle using the tree evaluator.
    fn brute_rows(gold: &str, pred: &str, binding: &Binding) -> u64 {
        let g = parse(gold).unwrap();
        let h = parse(pred).unwrap();
        let (p, q) = (g.atoms(), h.atoms());
        let n = binding.arity();
        (0..1u64 << n)
            .filter(|row| {
                let bit = |k: usize| (row >> k) & 1 == 1;
                let lookup_p = |lit: &crate::fol::Literal| {
                    let i = p.iter().position(|a| *a == lit.atom()).unwrap();
                    let k = binding.pairs.iter().position(|(l, _)| *l == Slot::Atom(i)).unwrap();
                    bit(k)
                };
                let lookup_q = |lit: &crate::fol::Literal| {
                    let j = q.iter().position(|a| *a == lit.atom()).unwrap();
                    let k = binding.pairs.iter().position(|(_, r)| *r == Slot::Atom(j)).unwrap();
                    bit(k)
                };
                g.body.eval(&lookup_p) == h.body.eval(&lookup_q)
            })
            .count() as u64
    }

    #[test]
    fn eu_country_pair_scores_seven_eighths() {
        let r = le(
            "∀x (Country(x) ∧ InEU(x) → EUCountry(x))",
            "∀y (LocatedInEU(y) → EUCountry(y))",
        );
        assert_eq!(r.score, 0.875);
        assert_eq!((r.rows_matched, r.rows_total), (7, 8));
        assert_eq!(
            r.bound_pairs,
            vec![
                (Some("Country(x)".into()), None),
                (Some("InEU(x)".into()), Some("LocatedInEU(y)".into())),
                (Some("EUCountry(x)".into()), Some("EUCountry(y)".into())),
            ]
        );
    }

    #[test]
    fn de_morgan_is_equivalent() {
        assert_eq!(le("¬(P(A) ∧ P(B))", "¬P(A) ∨ ¬P(B)").score, 1.0);
    }

    #[test]
    fn dummy_bound_extra_atom() {
        // Rows (P,Q): (0,0) (0,1) (1,1) agree, (1,0) does not.
        let r = le("∀x P(x)", "∀x ∀y P(x) ∧ Q(y)");
        assert_eq!(r.score, 0.75);
        assert_eq!(r.rows_total, 4);
    }

    #[test]
    fn complement_scores_zero() {
        assert_eq!(le("P(A)", "¬P(A)").score, 0.0);
    }

    #[test]
    fn identity_scores_one() {
        for s in ["P(A)", "∀x (A(x) ⊕ B(x)) → ¬(C(x) ↔ D(x, y))", "P(a) ∧ P(b) ∧ P(c) ∨ Q(a)"] {
            assert_eq!(le(s, s).score, 1.0);
        }
    }

    #[test]
    fn bitset_rows_agree_with_tree_evaluation() {
        let cases = [
            ("∀x (Country(x) ∧ InEU(x) → EUCountry(x))", "∀y (LocatedInEU(y) → EUCountry(y))"),
            ("A(x) ⊕ B(x) ↔ C(x)", "¬A(x) ∨ B(x)"),
            ("P1(a) ∧ P2(a) ∧ P3(a) ∧ P4(a) ∧ P5(a) ∧ P6(a) ∧ P7(a)", "P1(a) ∨ P7(a)"),
        ];
        for (g, h) in cases {
            let gr = parse(g).unwrap();
            let hr = parse(h).unwrap();
            for b in bind_atoms(&gr.atoms(), &hr.atoms(), 50) {
                let (m, _) = rows_matched(&gr, &hr, &b);
                assert_eq!(m, brute_rows(g, h, &b), "{g} / {h}");
            }
        }
    }

    #[test]
    fn too_many_atoms_is_an_error() {
        let cfg = RewardConfig {
            max_atoms: 2,
            ..RewardConfig::default()
        };
        let r = le_score(&parse("A(x) ∧ B(x) ∧ C(x)").unwrap(), &parse("A(x)").unwrap(), &cfg);
        assert!(matches!(r, Err(MetricsError::TooManyAtoms { atoms: 3, max: 2 })));
    }
}
