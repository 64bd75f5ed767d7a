use rand::seq::SliceRandom;
use rand::Rng;

use crate::fol::{Connective, FolRule, Formula, Literal, QuantifiedVar, Quantifier, Term};

const PREDICATES: &[&str] = &[
    "P", "Q", "R", "Doctor", "HasMedicalDegree", "Country", "InEU", "Likes", "Owns", "Student", "Teaches",
    "Mammal", "CanFly",
];
const CONSTANTS: &[&str] = &["A", "B", "C", "Alice", "Bob", "Paris", "Caffeine", "Moon"];
const VARIABLES: &[&str] = &["x", "y", "z", "w"];

/// Shape limits for [`random_rule`].
#[derive(Debug, Clone)]
pub struct RuleGenConfig {
    pub max_depth: usize,
    pub max_prefix: usize,
    pub max_args: usize,
    /// Chance of wrapping a node in redundant parentheses.
    pub group_prob: f64,
}

impl Default for RuleGenConfig {
    fn default() -> Self {
        RuleGenConfig {
            max_depth: 4,
            max_prefix: 3,
            max_args: 3,
            group_prob: 0.1,
        }
    }
}

/// A random well-formed rule whose tree is exactly what its canonical text
/// parses to: parentheses are added wherever precedence requires them.
pub fn random_rule<R: Rng + ?Sized>(rng: &mut R, config: &RuleGenConfig) -> FolRule {
    let n_prefix = rng.gen_range(0..=config.max_prefix.min(VARIABLES.len()));
    let mut vars = VARIABLES.to_vec();
    vars.shuffle(rng);
    let prefix = vars[..n_prefix]
        .iter()
        .map(|v| QuantifiedVar {
            quantifier: if rng.gen_bool(0.5) { Quantifier::Forall } else { Quantifier::Exists },
            var: v.to_string(),
        })
        .collect();
    let body = formula(rng, config, config.max_depth);
    FolRule { prefix, body }
}

fn literal<R: Rng + ?Sized>(rng: &mut R, config: &RuleGenConfig) -> Formula {
    let arity = rng.gen_range(1..=config.max_args.max(1));
    let args = (0..arity)
        .map(|_| {
            if rng.gen_bool(0.6) {
                Term::Var(VARIABLES.choose(rng).unwrap().to_string())
            } else {
                Term::Const(CONSTANTS.choose(rng).unwrap().to_string())
            }
        })
        .collect();
    Formula::Literal(Literal {
        negated: rng.gen_bool(0.25),
        predicate: PREDICATES.choose(rng).unwrap().to_string(),
        args,
    })
}

fn needs_group(child: &Formula, parent: Connective, is_left: bool) -> bool {
    match child {
        Formula::Binary { op, .. } => {
            op.precedence() < parent.precedence()
                || (*op == parent && parent.is_right_assoc() == is_left)
        }
        _ => false,
    }
}

fn formula<R: Rng + ?Sized>(rng: &mut R, config: &RuleGenConfig, depth: usize) -> Formula {
    let node = if depth == 0 || rng.gen_bool(0.3) {
        literal(rng, config)
    } else {
        match rng.gen_range(0..10) {
            0 => Formula::Not(Box::new(formula(rng, config, depth - 1))),
            _ => {
                let op = *Connective::ALL.choose(rng).unwrap();
                let mut left = formula(rng, config, depth - 1);
                let mut right = formula(rng, config, depth - 1);
                if needs_group(&left, op, true) {
                    left = Formula::Group(Box::new(left));
                }
                if needs_group(&right, op, false) {
                    right = Formula::Group(Box::new(right));
                }
                Formula::binary(op, left, right)
            }
        }
    };
    if rng.gen_bool(config.group_prob) {
        Formula::Group(Box::new(node))
    } else {
        node
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_rules_are_canonical() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let r = random_rule(&mut rng, &RuleGenConfig::default());
            assert!(r.is_canonical(), "{}", r.print_canonical());
        }
    }

    #[test]
    fn same_seed_same_rule() {
        let a = random_rule(&mut ChaCha8Rng::seed_from_u64(3), &RuleGenConfig::default());
        let b = random_rule(&mut ChaCha8Rng::seed_from_u64(3), &RuleGenConfig::default());
        assert_eq!(a, b);
    }
}
