//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when an evaluated criterion fails. A criterion whose input data
//! is not available is reported as FAIL (not evaluated) without failing the
//! run.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use folkit::collector::{
    accept_pair, assemble_prompt, bootstrap_corpus, ngram_tokens, run_collection, Acceptance, CollectConfig,
    CollectorState, OutputPaths, Rejection,
};
use folkit::fol::{parse, validate, FolRule};
use folkit::forge::{corpus_stats, forge_sft, t3_output, ForgeConfig, NlFolPair, Task};
use folkit::generator::{FnGenerator, ReplayGenerator};
use folkit::metrics::{fol_bleu, le_score, mix, reward, RewardConfig};
use folkit::perturb::{
    apply_steps, perturb_n, random_rule, sample_perturbation, PerturbConfig, RuleGenConfig,
};
use folkit::session::{run_session, OracleGenerator, SessionConfig, SessionStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

enum Outcome {
    Pass(String),
    Fail(String),
    /// The criterion's input is missing, so it could not be evaluated.
    Unavailable(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

const GOLD_EU: &str = "∀x (Country(x) ∧ InEU(x) → EUCountry(x))";
const PRED_EU: &str = "∀y (LocatedInEU(y) → EUCountry(y))";

fn rule(text: &str) -> FolRule {
    parse(text).unwrap_or_else(|e| panic!("{text}: {e}"))
}

/// Random rules with at most `max_atoms` distinct atoms.
fn random_rules(n: usize, max_atoms: usize, depth: usize, seed: u64) -> Vec<FolRule> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = RuleGenConfig {
        max_depth: depth,
        ..RuleGenConfig::default()
    };
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let r = random_rule(&mut rng, &cfg);
        if r.atoms().len() <= max_atoms {
            out.push(r);
        }
    }
    out
}

fn c1_eu_example() -> Outcome {
    let (g, p) = (rule(GOLD_EU), rule(PRED_EU));
    let cfg = RewardConfig::default();
    let start = Instant::now();
    let r = le_score(&g, &p, &cfg).unwrap();
    let elapsed = start.elapsed();
    let expected = vec![
        (Some("Country(x)".to_string()), None),
        (Some("InEU(x)".to_string()), Some("LocatedInEU(y)".to_string())),
        (Some("EUCountry(x)".to_string()), Some("EUCountry(y)".to_string())),
    ];
    let mut got = r.bound_pairs.clone();
    got.sort();
    let mut want = expected;
    want.sort();
    check(
        r.score == 0.875 && got == want && elapsed < Duration::from_millis(10),
        format!("LE {} in {:?}, binding {:?}", r.score, elapsed, r.bound_pairs),
    )
}

fn c2_de_morgan() -> Outcome {
    let r = le_score(&rule("¬(P(A) ∧ P(B))"), &rule("¬P(A) ∨ ¬P(B)"), &RewardConfig::default()).unwrap();
    check(r.score == 1.0, format!("LE {}", r.score))
}

fn c3_identity() -> Outcome {
    let cfg = RewardConfig::default();
    let rules = random_rules(1000, 8, 4, 3);
    let bad = rules
        .par_iter()
        .filter(|r| le_score(r, r, &cfg).unwrap().score != 1.0)
        .count();
    let neg = le_score(&rule("P(A)"), &rule("¬P(A)"), &cfg).unwrap().score;
    check(bad == 0 && neg == 0.0, format!("{bad}/1000 self-pairs below 1.0; LE(P(A), ¬P(A)) = {neg}"))
}

/// Best row-agreement over every one-to-one binding of the padded atom
/// lists, evaluated directly on the syntax trees.
fn exhaustive_le(gold: &FolRule, pred: &FolRule) -> f64 {
    let ga = gold.atoms();
    let pa = pred.atoms();
    let n = ga.len().max(pa.len());
    let col_of = |atoms: &[folkit::fol::Atom], cols: &[usize], lit: &folkit::fol::Literal| {
        let a = lit.atom();
        cols[atoms.iter().position(|x| x.canonical_text == a.canonical_text).unwrap()]
    };
    let gold_cols: Vec<usize> = (0..ga.len()).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = 0u64;
    loop {
        // Pred atom j sits in column perm[j].
        let pred_cols: Vec<usize> = perm[..pa.len()].to_vec();
        let mut agree = 0u64;
        for row in 0u64..(1 << n) {
            let bit = |c: usize| row >> c & 1 == 1;
            let g = gold.body.eval(&|l| bit(col_of(&ga, &gold_cols, l)));
            let p = pred.body.eval(&|l| bit(col_of(&pa, &pred_cols, l)));
            agree += u64::from(g == p);
        }
        best = best.max(agree);
        if !next_permutation(&mut perm) {
            break;
        }
    }
    best as f64 / (1u64 << n) as f64
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else {
        return false;
    };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).unwrap();
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

fn c4_greedy_vs_exhaustive() -> Outcome {
    let cfg = RewardConfig::default();
    let golds = random_rules(1000, 4, 3, 4);
    let results: Vec<(f64, f64)> = golds
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
            // Half the predictions are edits of the gold rule, half unrelated.
            let pred = loop {
                let p = if i % 2 == 0 {
                    perturb_n(g, rng.gen_range(1..=3), &mut rng).perturbed
                } else {
                    random_rules(1, 4, 3, rng.gen())[0].clone()
                };
                if p.atoms().len() <= 4 {
                    break p;
                }
            };
            (le_score(g, &pred, &cfg).unwrap().score, exhaustive_le(g, &pred))
        })
        .collect();
    let exceed = results.iter().filter(|(g, e)| g > e).count();
    let equal = results.iter().filter(|(g, e)| g == e).count();
    let eu_greedy = le_score(&rule(GOLD_EU), &rule(PRED_EU), &cfg).unwrap().score;
    let eu_exh = exhaustive_le(&rule(GOLD_EU), &rule(PRED_EU));
    let rate = equal as f64 / results.len() as f64;
    check(
        exceed == 0 && rate >= 0.95 && eu_greedy == eu_exh,
        format!("greedy above exhaustive: {exceed}; match rate {:.1}%; EU pair {eu_greedy} vs {eu_exh}", rate * 100.0),
    )
}

fn c5_round_trip() -> Outcome {
    let rules = random_rules(1000, 16, 4, 5);
    let cfg = RewardConfig::default();
    let start = Instant::now();
    let failures: usize = rules
        .par_iter()
        .enumerate()
        .map(|(i, r)| {
            let original = r.print_canonical();
            let mut bad = 0;
            for n in 1..=10 {
                let mut rng = ChaCha8Rng::seed_from_u64(folkit::derive_seed(i as u64, n as u64));
                let p = perturb_n(r, n, &mut rng);
                let text = p.perturbed.print_canonical();
                let valid = validate(&text).is_valid();
                let restored_ok = apply_steps(&p.perturbed, &p.steps_to_fix).is_ok_and(|f| {
                    f.print_canonical() == original && le_score(r, &f, &cfg).is_ok_and(|l| l.score == 1.0)
                });
                if !valid || !restored_ok {
                    bad += 1;
                }
            }
            bad
        })
        .sum();
    let elapsed = start.elapsed();
    check(
        failures == 0 && elapsed < Duration::from_secs(30),
        format!("{failures}/10000 failed round trips in {elapsed:.1?}"),
    )
}

fn c6_negative_rate() -> Outcome {
    let rules = random_rules(200, 16, 4, 6);
    let unchanged = (0..10_000u64)
        .into_par_iter()
        .filter(|&k| {
            let r = &rules[k as usize % rules.len()];
            let cfg = PerturbConfig {
                seed: folkit::derive_seed(6, k),
                ..PerturbConfig::default()
            };
            sample_perturbation(r, &cfg).perturbed == *r
        })
        .count();
    let frac = unchanged as f64 / 10_000.0;
    check((0.18..=0.22).contains(&frac), format!("unchanged fraction {frac:.4}"))
}

fn c7_grammar() -> Outcome {
    let accepted = [
        // Perturbation table.
        "P(A) ∧ R(B)",
        "R(A) ∧ R(B)",
        "∀x P(x) ∧ P(B)",
        "∀y P(x) ∧ P(B)",
        "∀x P(x) ∧ P(x)",
        "∀x P(x) ∨ P(B)",
        "∀x ∃y P(x) ∧ P(B)",
        "∀x P(x) ∧ P(x, B)",
        "P(A) ∧ P(B) ∧ P(C)",
        "P(A) ∧ ¬(P(B) ∧ P(C))",
        "P(A) ∧ P(B)",
        "P(A) ∧ P(B) → R(C)",
        "∀x ∀y P(x) ∧ R(x, y)",
        "∀y P(x) ∧ R(x, y)",
        "∀x ∀y P(x) ∧ R(y)",
        "¬(P(A) ∧ P(B))",
        "P(A) ∧ P(C)",
        // Few-shot block of the collection prompt.
        "∃x entire(x) ↔ ¬serious(x)",
        "∀x (¬excited(x) ∧ ¬timid(x)) → elderly(Jonathan)",
        "∀x (¬concerned(x) ∨ fresh(x)) → entire(John)",
        "¬blue(Nathalie) → entire(Collier)",
        "∃x (courteous(x) ∧ ¬elderly(x)) ↔ (¬excited(x) ∧ ¬various(x))",
        // Ripe fruit, term example and parse-tree examples.
        "∀x (Fruit(x) ∧ Mature(x) ∧ ColorChangedToRed(x) → Ripe(x))",
        "∀x ((Person(x) ∧ Drinks(x)) → DependentOn(x, Caffeine))",
        "∀x (Athlete(x) ∧ WinsGold(x, Olympics) → OlympicChampion(x))",
        "∀x (Doctor(x) → HasMedicalDegree(x))",
    ];
    let rejected = [
        "y = a ∨ y = b",
        "a ∧ b ∧ c",
        "P(A) = P(B)",
        "P(A) ≠ P(B)",
        "P(A) % P(B)",
        "!P(A)",
        "∀x (P(x) → x = A)",
    ];
    let bad_accept: Vec<&str> = accepted.iter().copied().filter(|s| !validate(s).is_valid()).collect();
    let bad_reject: Vec<&str> = rejected.iter().copied().filter(|s| validate(s).is_valid()).collect();
    check(
        bad_accept.is_empty() && bad_reject.is_empty(),
        format!(
            "{} accepted, {} rejected; wrongly rejected {:?}, wrongly accepted {:?}",
            accepted.len(),
            rejected.len(),
            bad_accept,
            bad_reject
        ),
    )
}

fn c8_corpus_stats() -> Outcome {
    let Some(path) = std::env::var_os("FOLKIT_CORPUS") else {
        return Outcome::Unavailable("FOLKIT_CORPUS is not set; the 34K-pair corpus file is needed".into());
    };
    let path = Path::new(&path);
    if !path.exists() {
        return Outcome::Unavailable(format!("{} does not exist", path.display()));
    }
    let start = Instant::now();
    let pairs: Vec<NlFolPair> = match folkit::jsonl::read_json_records(path) {
        Ok(p) => p,
        Err(e) => return Outcome::Fail(format!("cannot read corpus: {e}")),
    };
    let s = corpus_stats(&pairs);
    let elapsed = start.elapsed();
    let o = s.operators;
    let ops = [o.forall, o.exists, o.not, o.and, o.or, o.implies, o.iff, o.xor];
    let want = [32865, 2036, 4567, 30143, 6402, 30667, 3726, 2150];
    let ok = (s.pairs + 500) / 1000 == 34
        && ops == want
        && (s.fol_avg_literals - 4.6).abs() <= 0.05
        && (s.nl_vocab_size as f64 - 22715.0).abs() <= 0.05 * 22715.0
        && (s.nl_avg_words - 16.1).abs() <= 0.3
        && elapsed < Duration::from_secs(120);
    check(
        ok,
        format!(
            "pairs {} (+{} unparseable), operators {:?}, literals {:.3}, vocab {}, words {:.2}, {:.1?}",
            s.pairs, s.unparseable, ops, s.fol_avg_literals, s.nl_vocab_size, s.nl_avg_words, elapsed
        ),
    )
}

fn c9_reward_arithmetic() -> Outcome {
    let grid = [0.0, 0.125, 0.25, 0.5, 0.75, 0.875, 1.0];
    let mut worst: f64 = 0.0;
    for le in grid {
        for bleu in grid {
            worst = worst.max((mix(le, bleu, 0.7) - (0.7 * le + 0.3 * bleu)).abs());
        }
    }
    let fixture = (mix(0.875, 0.5, 0.7) - 0.7625).abs();
    let end_to_end = reward(GOLD_EU, PRED_EU, &RewardConfig::default()).unwrap();
    let e2e = (end_to_end.reward - (0.7 * 0.875 + 0.3 * fol_bleu(GOLD_EU, PRED_EU))).abs();
    check(
        worst < 1e-12 && fixture < 1e-12 && e2e < 1e-12,
        format!("max grid error {worst:e}; (0.875, 0.5) error {fixture:e}; end-to-end error {e2e:e}"),
    )
}

fn synthetic_pairs(n: usize, seed: u64) -> Vec<NlFolPair> {
    random_rules(n, 16, 4, seed)
        .into_iter()
        .enumerate()
        .map(|(i, r)| NlFolPair::new(format!("Synthetic statement number {i}."), r.print_canonical()))
        .collect()
}

fn c10_sessions() -> Outcome {
    let pairs = synthetic_pairs(50, 10);
    let config = ForgeConfig {
        task: Task::T3,
        count: 100,
        perturb: PerturbConfig {
            seed: 10,
            ..PerturbConfig::default()
        },
        ..ForgeConfig::default()
    };
    let records = forge_sft(&pairs, &config).unwrap();
    let scfg = SessionConfig::default();
    let mut oracle_ok = 0;
    for rec in &records {
        let mut oracle = OracleGenerator::new(3);
        let fix: Vec<_> = rec.prev_steps.iter().chain(&rec.target_steps).map(|s| s.edit.clone()).collect();
        oracle.add_case(&rule(&rec.fol_input), &fix);
        let out = run_session(&rec.nl, &rec.fol_input, Some(&rec.fol_gold), &mut oracle, &scfg).unwrap();
        if out.final_reward == Some(1.0) && out.final_fol == rec.fol_gold && out.generations <= 10 {
            oracle_ok += 1;
        }
    }
    let mut limit_ok = 0;
    for rec in &records {
        let mut never = FnGenerator(|_: &str| t3_output(&["Change the predicate 'P' to 'Q' in 'P(A)'".into()], "P(A)"));
        let out = run_session(&rec.nl, &rec.fol_input, Some(&rec.fol_gold), &mut never, &scfg).unwrap();
        if out.generations == 10 && out.status == SessionStatus::DoneLimit && out.experiences.len() == 10 {
            limit_ok += 1;
        }
    }
    let mut done = FnGenerator(|_: &str| t3_output(&[], PRED_EU));
    let one = run_session("nl", PRED_EU, None, &mut done, &scfg).unwrap();
    let stop_ok = one.generations == 1 && one.status == SessionStatus::DoneNoChanges;
    check(
        oracle_ok == records.len() && limit_ok == records.len() && stop_ok,
        format!(
            "oracle reached gold in {oracle_ok}/{}; mock stopped at 10 in {limit_ok}/{}; no-changes stop {stop_ok}",
            records.len(),
            records.len()
        ),
    )
}

fn zebra_replay() -> Vec<String> {
    (0..8)
        .map(|i| {
            format!(
                "--- NL:\nThe zebra number {i} runs.\n---\n--- FOL:\nRuns(Zebra{i})\n---\n\
                 --- NL:\nLamp{i} is bright.\n---\n--- FOL:\nBright(Lamp{i})\n---\n"
            )
        })
        .collect()
}

fn c11_gate_and_replay() -> Outcome {
    let config = CollectConfig {
        target: 8,
        seed: 11,
        ..CollectConfig::default()
    };
    let mut state = CollectorState::new(bootstrap_corpus(), &config);
    for _ in 0..500 {
        state.gate.update("A zebra grazes on grass.");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let bundle = assemble_prompt(&state.gate, &state.corpus(), false, &mut rng).unwrap();
    let clause_ok = bundle.negative_clause.as_deref().is_some_and(|c| c.contains("\"zebra\""));

    let mut gen = ReplayGenerator::new(zebra_replay());
    run_collection(&config, &mut state, &mut gen, None).unwrap();
    let leaked = state
        .accepted
        .iter()
        .filter(|p| ngram_tokens(&p.nl).iter().any(|t| t == "zebra"))
        .count();
    let verdict = accept_pair(&NlFolPair::new("The zebra sleeps.", "Sleeps(Zebra)"), &state.gate, 0.5);
    let blocked_ok = matches!(verdict, Acceptance::Rejected(Rejection::Blocked(_)));

    let run_once = |dir: &Path| -> Vec<Vec<u8>> {
        let cfg = CollectConfig {
            target: 6,
            seed: 11,
            ..CollectConfig::default()
        };
        let mut st = CollectorState::new(bootstrap_corpus(), &cfg);
        let mut g = ReplayGenerator::new(zebra_replay());
        let paths = OutputPaths::in_dir(dir);
        run_collection(&cfg, &mut st, &mut g, Some(&paths)).unwrap();
        [&paths.accepted, &paths.rejections, &paths.state]
            .iter()
            .map(|p| std::fs::read(p).unwrap_or_default())
            .collect()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ra, rb) = (run_once(a.path()), run_once(b.path()));
    let reproducible = ra == rb && !ra[0].is_empty();
    check(
        clause_ok && leaked == 0 && blocked_ok && state.accepted.len() == 8 && reproducible,
        format!(
            "clause lists unigram {clause_ok}; accepted with it {leaked}/{}; later pair blocked {blocked_ok}; replay byte-identical {reproducible}",
            state.accepted.len()
        ),
    )
}

fn c12_forge_scale() -> Outcome {
    let pairs = synthetic_pairs(34_000, 12);
    let config = ForgeConfig {
        task: Task::T3,
        count: 150_000,
        perturb: PerturbConfig {
            seed: 12,
            ..PerturbConfig::default()
        },
        ..ForgeConfig::default()
    };
    let start = Instant::now();
    let records = forge_sft(&pairs, &config).unwrap();
    let forged = start.elapsed();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let sample: Vec<usize> = rand::seq::index::sample(&mut rng, records.len(), 1000).into_vec();
    let replayed = sample.par_iter().filter(|&&i| records[i].replays()).count();
    let total = start.elapsed();
    check(
        records.len() == 150_000 && replayed == 1000 && total < Duration::from_secs(600),
        format!("{} records in {forged:.1?}; {replayed}/1000 sampled records replay", records.len()),
    )
}

type Criterion = (u8, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 12] = [
        (1, "EU example LE and binding", c1_eu_example),
        (2, "De Morgan equivalence", c2_de_morgan),
        (3, "LE identity", c3_identity),
        (4, "greedy vs exhaustive binding", c4_greedy_vs_exhaustive),
        (5, "perturbation round trip", c5_round_trip),
        (6, "negative-sample rate", c6_negative_rate),
        (7, "grammar fidelity", c7_grammar),
        (8, "released corpus statistics", c8_corpus_stats),
        (9, "reward arithmetic", c9_reward_arithmetic),
        (10, "session protocol", c10_sessions),
        (11, "collector gate and replay", c11_gate_and_replay),
        (12, "forge at scale", c12_forge_scale),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut unavailable = 0;
    let mut passed = 0;
    for (id, name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || f == &id.to_string()) {
            continue;
        }
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::Fail(format!("panicked: {msg}"))
        });
        match outcome {
            Outcome::Pass(d) => {
                passed += 1;
                println!("criterion {id:>2} PASS {name}: {d}");
            }
            Outcome::Fail(d) => {
                failed += 1;
                println!("criterion {id:>2} FAIL {name}: {d}");
            }
            Outcome::Unavailable(d) => {
                unavailable += 1;
                println!("criterion {id:>2} FAIL {name} (not evaluated): {d}");
            }
        }
    }
    println!("acceptance: {passed} passed, {failed} failed, {unavailable} not evaluated");
    if failed > 0 {
        std::process::exit(1);
    }
}
