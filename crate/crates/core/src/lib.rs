//! First-order-logic toolkit: a parser for a compact FOL dialect,
//! truth-table equivalence and BLEU scoring, reversible rule perturbations,
//! dataset forging, an NL-FOL collection pipeline and an iterative
//! correction harness.

pub mod collector;
pub mod fol;
pub mod generator;
pub mod forge;
pub mod jsonl;
pub mod metrics;
pub mod perturb;
pub mod session;

/// Independent per-item seed from a base seed (splitmix64 finalizer), so
/// parallel work is reproducible regardless of scheduling.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
