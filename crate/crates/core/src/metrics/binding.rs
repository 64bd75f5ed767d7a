use serde::{Deserialize, Serialize};

use crate::fol::{Atom, Term};

/// Default cap on the number of candidate bindings evaluated.
pub const DEFAULT_SEARCH_CAP: usize = 1000;

/// One side of a binding pair: an atom index or a padding input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slot {
    Atom(usize),
    Dummy(usize),
}

impl Slot {
    pub fn atom(self) -> Option<usize> {
        match self {
            Slot::Atom(i) => Some(i),
            Slot::Dummy(_) => None,
        }
    }
}

/// A total one-to-one pairing of two atom lists. Each pair is one
/// truth-table column; the left slot indexes the first list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binding {
    pub pairs: Vec<(Slot, Slot)>,
}

impl Binding {
    pub fn arity(&self) -> usize {
        self.pairs.len()
    }

    /// Human-readable pairs, `None` standing for a dummy input.
    pub fn describe(&self, p: &[Atom], q: &[Atom]) -> Vec<(Option<String>, Option<String>)> {
        self.pairs
            .iter()
            .map(|(l, r)| {
                (
                    l.atom().map(|i| p[i].canonical_text.clone()),
                    r.atom().map(|j| q[j].canonical_text.clone()),
                )
            })
            .collect()
    }

    /// Partner of left atom `i`, if bound to a real atom.
    pub fn partner_of_left(&self, i: usize) -> Option<usize> {
        self.pairs
            .iter()
            .find(|(l, _)| *l == Slot::Atom(i))
            .and_then(|(_, r)| r.atom())
    }
}

/// Atom text with every variable replaced by `_`, so `InEU(x)` and
/// `InEU(y)` compare equal.
pub fn normalized_text(atom: &Atom) -> String {
    let args: Vec<&str> = atom
        .args
        .iter()
        .map(|t| match t {
            Term::Var(_) => "_",
            Term::Const(c) => c.as_str(),
        })
        .collect();
    format!("{}({})", atom.predicate, args.join(", "))
}

pub fn distance_matrix(p: &[Atom], q: &[Atom]) -> Vec<Vec<usize>> {
    let qn: Vec<String> = q.iter().map(normalized_text).collect();
    p.iter()
        .map(|a| {
            let an = normalized_text(a);
            qn.iter().map(|b| strsim::levenshtein(&an, b)).collect()
        })
        .collect()
}

/// Greedy matching: repeatedly claim the globally closest unclaimed pair
/// (ties broken by left index, then right index). Returns the left atoms
/// in the order they were matched followed by the unmatched ones.
fn greedy_order(dist: &[Vec<usize>], q_len: usize) -> Vec<usize> {
    let p_len = dist.len();
    let mut edges: Vec<(usize, usize, usize)> = (0..p_len)
        .flat_map(|i| (0..q_len).map(move |j| (i, j)))
        .map(|(i, j)| (dist[i][j], i, j))
        .collect();
    edges.sort_unstable();
    let mut p_used = vec![false; p_len];
    let mut q_used = vec![false; q_len];
    let mut order = Vec::with_capacity(p_len);
    for (_, i, j) in edges {
        if !p_used[i] && !q_used[j] {
            p_used[i] = true;
            q_used[j] = true;
            order.push(i);
        }
    }
    order.extend((0..p_len).filter(|&i| !p_used[i]));
    order
}

struct Search<'a> {
    dist: &'a [Vec<usize>],
    order: Vec<usize>,
    q_len: usize,
    cap: usize,
    chosen: Vec<Option<usize>>,
    claimed: Vec<bool>,
    out: Vec<Binding>,
}

impl Search<'_> {
    fn run(&mut self, depth: usize, dummies_left: usize) {
        if self.out.len() >= self.cap {
            return;
        }
        if depth == self.order.len() {
            self.out.push(self.finish());
            return;
        }
        let i = self.order[depth];
        let mut cands: Vec<(usize, usize)> = (0..self.q_len)
            .filter(|&j| !self.claimed[j])
            .map(|j| (self.dist[i][j], j))
            .collect();
        cands.sort_unstable();
        for (_, j) in cands {
            self.claimed[j] = true;
            self.chosen[i] = Some(j);
            self.run(depth + 1, dummies_left);
            self.claimed[j] = false;
            self.chosen[i] = None;
            if self.out.len() >= self.cap {
                return;
            }
        }
        if dummies_left > 0 {
            self.run(depth + 1, dummies_left - 1);
        }
    }

    fn finish(&self) -> Binding {
        let mut pairs = Vec::new();
        let mut left_dummy = 0;
        let mut right_dummy = 0;
        for (i, c) in self.chosen.iter().enumerate() {
            let right = match c {
                Some(j) => Slot::Atom(*j),
                None => {
                    right_dummy += 1;
                    Slot::Dummy(right_dummy - 1)
                }
            };
            pairs.push((Slot::Atom(i), right));
        }
        for j in (0..self.q_len).filter(|&j| !self.claimed[j]) {
            left_dummy += 1;
            pairs.push((Slot::Dummy(left_dummy - 1), Slot::Atom(j)));
        }
        Binding { pairs }
    }
}

/// Candidate bindings between two deduplicated atom lists, in exploration
/// order. The first is the greedy minimum-edit-distance matching; the rest
/// come from a depth-first search that tries closer partners (then dummy
/// placement) first, until `search_cap` bindings have been produced.
pub fn bind_atoms(p: &[Atom], q: &[Atom], search_cap: usize) -> Vec<Binding> {
    let dist = distance_matrix(p, q);
    let order = greedy_order(&dist, q.len());
    let mut search = Search {
        dist: &dist,
        order,
        q_len: q.len(),
        cap: search_cap.max(1),
        chosen: vec![None; p.len()],
        claimed: vec![false; q.len()],
        out: Vec::new(),
    };
    search.run(0, p.len().saturating_sub(q.len()));
    search.out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fol::parse;

    fn atoms(s: &str) -> Vec<Atom> {
        parse(s).unwrap().atoms()
    }

    fn is_total_one_to_one(b: &Binding, p: usize, q: usize) -> bool {
        let n = p.max(q);
        let lefts: Vec<_> = b.pairs.iter().map(|x| x.0).collect();
        let rights: Vec<_> = b.pairs.iter().map(|x| x.1).collect();
        let uniq = |v: &Vec<Slot>| v.iter().collect::<std::collections::HashSet<_>>().len() == v.len();
        b.arity() == n
            && uniq(&lefts)
            && uniq(&rights)
            && (0..p).all(|i| lefts.contains(&Slot::Atom(i)))
            && (0..q).all(|j| rights.contains(&Slot::Atom(j)))
    }

    #[test]
    fn eu_country_greedy_binding() {
        let p = atoms("∀x (Country(x) ∧ InEU(x) → EUCountry(x))");
        let q = atoms("∀y (LocatedInEU(y) → EUCountry(y))");
        let all = bind_atoms(&p, &q, DEFAULT_SEARCH_CAP);
        let first = &all[0];
        let mut described = first.describe(&p, &q);
        described.sort();
        assert_eq!(
            described,
            vec![
                (Some("Country(x)".into()), None),
                (Some("EUCountry(x)".into()), Some("EUCountry(y)".into())),
                (Some("InEU(x)".into()), Some("LocatedInEU(y)".into())),
            ]
        );
        assert!(all.iter().all(|b| is_total_one_to_one(b, 3, 2)));
    }

    #[test]
    fn identical_lists_bind_identity_first() {
        let p = atoms("P(A) ∧ Q(B) ∨ R(C, D)");
        let first = &bind_atoms(&p, &p, 10)[0];
        for (l, r) in &first.pairs {
            assert_eq!(l, r);
        }
    }

    #[test]
    fn shorter_left_pads_right_with_dummy_side() {
        // A(x) may bind to B(y) or A(y); the minimum-distance choice wins.
        let p = atoms("A(x)");
        let q = atoms("B(y) ∧ A(y)");
        let all = bind_atoms(&p, &q, 10);
        assert_eq!(all[0].describe(&p, &q), vec![
            (Some("A(x)".into()), Some("A(y)".into())),
            (None, Some("B(y)".into())),
        ]);
        assert_eq!(all.len(), 2);
        assert!(all.iter().all(|b| is_total_one_to_one(b, 1, 2)));
    }

    #[test]
    fn cap_limits_candidates() {
        let p = atoms("P1(x) ∧ P2(x) ∧ P3(x) ∧ P4(x) ∧ P5(x)");
        let q = atoms("P6(x) ∧ P7(x) ∧ P8(x) ∧ P9(x) ∧ P0(x)");
        assert_eq!(bind_atoms(&p, &q, 7).len(), 7);
        assert_eq!(bind_atoms(&p, &q, 1000).len(), 120);
        assert_eq!(bind_atoms(&p, &q, 0).len(), 1);
    }

    #[test]
    fn normalization_hides_variable_names() {
        let a = &atoms("R(x, Caffeine)")[0];
        assert_eq!(normalized_text(a), "R(_, Caffeine)");
    }
}
