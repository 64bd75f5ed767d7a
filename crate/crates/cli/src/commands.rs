use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::path::Path;

use folkit::collector::{
    assemble_prompt, bootstrap_corpus, run_collection, CollectError, CollectorState, OutputPaths,
};
use folkit::derive_seed;
use folkit::fol::{parse, validate, Verdict};
use folkit::forge::{
    bin_scores, forge_sft, CorrectionRecord, ForgeConfig, ForgeError, GroupBy, NlFolPair, ScoreRow, StatsBuilder, Task,
};
use folkit::generator::{Generator, HttpGenerator, ReplayGenerator};
use folkit::jsonl::read_json_records;
use folkit::metrics::{reward, MetricsError};
use folkit::perturb::{render_steps, sample_perturbation_with, split_iteration};
use folkit::session::{run_batch, run_session, OracleGenerator, SessionCase, SessionError, SessionOutcome, SessionStatus};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{GlobalConfig, OutputFormat};
use crate::input::{read_rules, read_score_pairs, CorrectInput};
use crate::{CliError, Command, GroupByArg};

/// Copies subcommand flags into the config so the logged config is the
/// one actually used.
pub fn apply_overrides(cmd: &Command, cfg: &mut GlobalConfig) {
    match cmd {
        Command::Score { omega, max_atoms, .. } => {
            if let Some(o) = omega {
                cfg.reward.omega = *o;
            }
            if let Some(m) = max_atoms {
                cfg.reward.max_atoms = *m;
            }
        }
        Command::Perturb {
            n_perturb,
            n_correct,
            negative_prob,
            ..
        } => {
            if let Some(n) = n_perturb {
                cfg.perturb.n_perturb_choices = vec![*n];
            }
            if let Some(n) = n_correct {
                cfg.perturb.n_correct_choices = vec![*n];
            }
            if let Some(p) = negative_prob {
                cfg.perturb.negative_prob = *p;
            }
        }
        Command::Forge {
            n_correct, negative_prob, ..
        } => {
            if let Some(n) = n_correct {
                cfg.perturb.n_correct_choices = vec![*n];
            }
            if let Some(p) = negative_prob {
                cfg.perturb.negative_prob = *p;
            }
        }
        Command::Collect {
            target,
            endpoint,
            model,
            align_threshold,
            max_calls,
            ..
        } => {
            if let Some(t) = target {
                cfg.collect.target = *t;
            }
            if let Some(e) = endpoint {
                cfg.endpoint.base_url = e.clone();
            }
            if let Some(m) = model {
                cfg.endpoint.model = m.clone();
            }
            if let Some(a) = align_threshold {
                cfg.collect.align_threshold = *a;
            }
            if let Some(m) = max_calls {
                cfg.collect.max_calls = *m;
            }
        }
        Command::Correct {
            endpoint,
            model,
            max_generations,
            ..
        } => {
            if let Some(e) = endpoint {
                cfg.endpoint.base_url = e.clone();
            }
            if let Some(m) = model {
                cfg.endpoint.model = m.clone();
            }
            if let Some(g) = max_generations {
                cfg.session.max_generations = *g;
            }
        }
        _ => {}
    }
    cfg.session.reward = cfg.reward;
}

fn summary(v: Value) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("summary serializes"));
}

fn write_file(path: Option<&Path>, dry: bool, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) if !dry => std::fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        _ => Ok(()),
    }
}

fn jsonl_text<T: Serialize>(items: &[T]) -> String {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(it).expect("record serializes"));
        s.push('\n');
    }
    s
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

pub fn dispatch(cmd: Command, cfg: &GlobalConfig, dry: bool) -> Result<(), CliError> {
    match cmd {
        Command::Validate { input, out } => cmd_validate(&input, out.as_deref(), cfg, dry),
        Command::Score { gold, pred, pairs, out, .. } => {
            let pairs = match (gold, pred, pairs) {
                (Some(g), Some(p), None) => {
                    let g = read_rules(&g)?;
                    let p = read_rules(&p)?;
                    if g.len() != p.len() {
                        return Err(CliError::Input(format!("{} gold rules but {} predictions", g.len(), p.len())));
                    }
                    g.into_iter().zip(p).collect()
                }
                (None, None, Some(f)) => read_score_pairs(&f)?,
                _ => return Err(CliError::Usage("score needs --gold and --pred, or --pairs".into())),
            };
            cmd_score(&pairs, out.as_deref(), cfg, dry)
        }
        Command::Perturb { input, out, .. } => cmd_perturb(&input, out.as_deref(), cfg, dry),
        Command::Forge {
            task,
            count,
            input,
            out,
            simulate_predictions,
            ..
        } => cmd_forge(task, count, &input, out.as_deref(), simulate_predictions, cfg, dry),
        Command::Stats {
            input,
            out,
            top_terms,
            top_pairs,
        } => cmd_stats(&input, out.as_deref(), top_terms, top_pairs, dry),
        Command::Bins { input, edges, by, out } => cmd_bins(&input, &edges, by, out.as_deref(), dry),
        Command::Collect {
            endpoint,
            replay,
            bootstrap,
            out_dir,
            ..
        } => cmd_collect(endpoint.is_some(), replay.as_deref(), bootstrap.as_deref(), out_dir.as_deref(), cfg, dry),
        Command::Correct {
            nl_fol_pred,
            gold,
            endpoint,
            replay,
            oracle,
            out,
            ..
        } => cmd_correct(
            &nl_fol_pred,
            gold.as_deref(),
            endpoint.is_some(),
            replay.as_deref(),
            oracle.as_deref(),
            out.as_deref(),
            cfg,
            dry,
        ),
    }
}

fn cmd_validate(input: &Path, out: Option<&Path>, cfg: &GlobalConfig, dry: bool) -> Result<(), CliError> {
    let rules = read_rules(input)?;
    let verdicts: Vec<Verdict> = rules.par_iter().map(|r| validate(r)).collect();
    let valid = verdicts.iter().filter(|v| v.is_valid()).count();
    let text = match cfg.format {
        OutputFormat::Jsonl => {
            let rows: Vec<Value> = rules
                .iter()
                .zip(&verdicts)
                .enumerate()
                .map(|(i, (r, v))| json!({"index": i, "fol": r, "verdict": v}))
                .collect();
            jsonl_text(&rows)
        }
        OutputFormat::Tsv => rules
            .iter()
            .zip(&verdicts)
            .enumerate()
            .map(|(i, (r, v))| match v {
                Verdict::Valid => format!("{i}\tvalid\t{r}\t\n"),
                Verdict::Invalid(why) => format!("{i}\tinvalid\t{r}\t{why}\n"),
            })
            .collect(),
    };
    write_file(out, dry, &text)?;
    summary(json!({"rules": rules.len(), "valid": valid, "invalid": rules.len() - valid, "dry_run": dry}));
    Ok(())
}

#[derive(Serialize)]
struct ScoreLine {
    index: usize,
    gold: String,
    pred: String,
    le: Option<f64>,
    bleu: Option<f64>,
    reward: Option<f64>,
    binding: Option<Vec<(Option<String>, Option<String>)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn cmd_score(pairs: &[(String, String)], out: Option<&Path>, cfg: &GlobalConfig, dry: bool) -> Result<(), CliError> {
    cfg.reward.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    if dry {
        let bad_gold = pairs.iter().filter(|(g, _)| parse(g).is_err()).count();
        summary(json!({"pairs": pairs.len(), "unparseable_gold": bad_gold, "dry_run": true}));
        return Ok(());
    }
    let lines: Vec<ScoreLine> = pairs
        .par_iter()
        .enumerate()
        .map(|(index, (gold, pred))| {
            let mut line = ScoreLine {
                index,
                gold: gold.clone(),
                pred: pred.clone(),
                le: None,
                bleu: None,
                reward: None,
                binding: None,
                error: None,
            };
            match reward(gold, pred, &cfg.reward) {
                Ok(r) => {
                    line.le = Some(r.le);
                    line.bleu = Some(r.bleu);
                    line.reward = Some(r.reward);
                    line.binding = r.le_detail.map(|d| d.bound_pairs);
                }
                Err(e) => line.error = Some(e.to_string()),
            }
            line
        })
        .collect();
    let text = match cfg.format {
        OutputFormat::Jsonl => jsonl_text(&lines),
        OutputFormat::Tsv => lines
            .iter()
            .map(|l| match (l.le, l.bleu, l.reward) {
                (Some(le), Some(b), Some(r)) => format!("{}\t{le}\t{b}\t{r}\n", l.index),
                _ => format!("{}\t\t\t\t{}\n", l.index, l.error.as_deref().unwrap_or("")),
            })
            .collect(),
    };
    write_file(out, dry, &text)?;
    let scored: Vec<&ScoreLine> = lines.iter().filter(|l| l.error.is_none()).collect();
    let col = |f: fn(&ScoreLine) -> Option<f64>| mean(&scored.iter().filter_map(|l| f(l)).collect::<Vec<_>>());
    let mut s = json!({
        "pairs": lines.len(),
        "scored": scored.len(),
        "errors": lines.len() - scored.len(),
        "mean_le": col(|l| l.le),
        "mean_bleu": col(|l| l.bleu),
        "mean_reward": col(|l| l.reward),
    });
    if let [only] = lines.as_slice() {
        s["binding"] = json!(only.binding);
    }
    summary(s);
    Ok(())
}

fn cmd_perturb(input: &Path, out: Option<&Path>, cfg: &GlobalConfig, dry: bool) -> Result<(), CliError> {
    cfg.perturb.validate().map_err(CliError::Usage)?;
    let rules = read_rules(input)?;
    let results: Vec<Result<Value, String>> = rules
        .par_iter()
        .enumerate()
        .map(|(index, text)| {
            let rule = parse(text).map_err(|e| format!("rule {index}: {e}"))?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.perturb.seed, index as u64));
            let p = sample_perturbation_with(&rule, &cfg.perturb, &mut rng);
            let split = split_iteration(&p.steps_to_fix, &cfg.perturb, &mut rng);
            Ok(json!({
                "index": index,
                "original": p.original.print_canonical(),
                "perturbed": p.perturbed.print_canonical(),
                "n_perturb": p.n_perturb(),
                "n_correct": split.n_correct,
                "applied": p.applied,
                "steps_to_fix": p.steps_to_fix,
                "fix_texts": render_steps(&p.perturbed, &p.steps_to_fix),
            }))
        })
        .collect();
    let mut records = Vec::new();
    let mut skipped = 0;
    for r in results {
        match r {
            Ok(v) => records.push(v),
            Err(e) => {
                log::warn!("skipping {e}");
                skipped += 1;
            }
        }
    }
    write_file(out, dry, &jsonl_text(&records))?;
    let negatives = records.iter().filter(|r| r["n_perturb"] == 0).count();
    summary(json!({"rules": rules.len(), "perturbed": records.len(), "skipped": skipped, "negatives": negatives, "dry_run": dry}));
    Ok(())
}

fn cmd_forge(
    task: Task,
    count: Option<usize>,
    input: &Path,
    out: Option<&Path>,
    simulate_predictions: bool,
    cfg: &GlobalConfig,
    dry: bool,
) -> Result<(), CliError> {
    let pairs: Vec<NlFolPair> = read_json_records(input)?;
    let config = ForgeConfig {
        task,
        count: count.unwrap_or(pairs.len()),
        perturb: cfg.perturb.clone(),
        simulate_predictions,
        source: input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default(),
    };
    if dry {
        config.perturb.validate().map_err(CliError::Usage)?;
        let parseable = pairs.par_iter().filter(|p| parse(&p.fol).is_ok()).count();
        summary(json!({"pairs": pairs.len(), "parseable": parseable, "count": config.count, "dry_run": true}));
        return Ok(());
    }
    let records = forge_sft(&pairs, &config).map_err(|e| match e {
        ForgeError::InvalidConfig(m) => CliError::Usage(m),
        other => CliError::Input(other.to_string()),
    })?;
    write_file(out, dry, &jsonl_text(&records))?;
    let negatives = records.iter().filter(|r| task != Task::T1 && r.meta.n_perturb == 0).count();
    summary(json!({"records": records.len(), "task": task, "seed": cfg.seed, "negatives": negatives}));
    Ok(())
}

fn cmd_stats(input: &Path, out: Option<&Path>, top_terms: usize, top_pairs: usize, dry: bool) -> Result<(), CliError> {
    let pairs: Vec<NlFolPair> = read_json_records(input)?;
    let stats = pairs
        .par_iter()
        .fold(StatsBuilder::default, |mut b, p| {
            b.add(&p.nl, &p.fol);
            b
        })
        .reduce(StatsBuilder::default, StatsBuilder::merge)
        .finish(top_terms, top_pairs);
    let full = serde_json::to_string_pretty(&stats).expect("stats serialize") + "\n";
    write_file(out, dry, &full)?;
    summary(json!({
        "pairs": stats.pairs,
        "unparseable": stats.unparseable,
        "nl_vocab_size": stats.nl_vocab_size,
        "nl_avg_words": stats.nl_avg_words,
        "fol_avg_literals": stats.fol_avg_literals,
        "operators": stats.operators,
        "term_vocab_size": stats.term_vocab_size,
    }));
    Ok(())
}

fn cmd_bins(input: &Path, edges: &[f64], by: GroupByArg, out: Option<&Path>, dry: bool) -> Result<(), CliError> {
    let rows: Vec<ScoreRow> = read_json_records(input)?;
    let by = match by {
        GroupByArg::GptLe => GroupBy::GptLe,
        GroupByArg::GptBleu => GroupBy::GptBleu,
    };
    let bins = bin_scores(&rows, edges, by).map_err(|e| CliError::Usage(e.to_string()))?;
    let text = serde_json::to_string_pretty(&bins).expect("bins serialize") + "\n";
    write_file(out, dry, &text)?;
    summary(json!({"rows": rows.len(), "bins": bins}));
    Ok(())
}

fn endpoint_generator(cfg: &GlobalConfig) -> Result<HttpGenerator, CliError> {
    HttpGenerator::new(cfg.endpoint.clone()).map_err(|e| CliError::Endpoint(e.to_string()))
}

fn cmd_collect(
    use_endpoint: bool,
    replay: Option<&Path>,
    bootstrap: Option<&Path>,
    out_dir: Option<&Path>,
    cfg: &GlobalConfig,
    dry: bool,
) -> Result<(), CliError> {
    let config = &cfg.collect;
    let paths = out_dir.map(OutputPaths::in_dir);
    let resumed = match &paths {
        Some(p) => p.load_state().map_err(|e| CliError::Input(e.to_string()))?,
        None => None,
    };
    let is_resume = resumed.is_some();
    let mut state = match resumed {
        Some(s) => s,
        None => {
            let boot = match bootstrap {
                Some(b) => read_json_records(b)?,
                None => bootstrap_corpus(),
            };
            CollectorState::new(boot, config)
        }
    };
    if dry {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, state.calls));
        let bundle = assemble_prompt(&state.gate, &state.corpus(), state.last_batch_long_predicate, &mut rng)
            .map_err(|e| CliError::Input(e.to_string()))?;
        summary(json!({
            "resumed": is_resume,
            "accepted": state.accepted.len(),
            "calls": state.calls,
            "next_user_message": bundle.user_message(),
            "dry_run": true,
        }));
        return Ok(());
    }
    let Some(paths) = paths else {
        return Err(CliError::Usage("collect needs --out-dir".into()));
    };
    std::fs::create_dir_all(out_dir.expect("paths imply a directory"))
        .map_err(|e| CliError::Input(e.to_string()))?;
    let mut generator: Box<dyn Generator> = match (use_endpoint, replay) {
        (true, _) => Box::new(endpoint_generator(cfg)?),
        (false, Some(r)) => {
            let mut g = ReplayGenerator::from_file(r).map_err(|e| CliError::Input(e.to_string()))?;
            g.skip(state.calls as usize);
            Box::new(g)
        }
        (false, None) => return Err(CliError::Usage("collect needs --endpoint or --replay".into())),
    };
    let report = run_collection(config, &mut state, generator.as_mut(), Some(&paths)).map_err(|e| match e {
        CollectError::EndpointUnavailable(_) | CollectError::BudgetExceeded { .. } => CliError::Endpoint(e.to_string()),
        other => CliError::Input(other.to_string()),
    })?;
    summary(json!({
        "resumed": is_resume,
        "accepted": report.accepted,
        "rejected": report.rejected,
        "calls": report.calls,
        "exhausted": report.exhausted,
        "blocked": state.gate.blocked(),
    }));
    Ok(())
}

fn oracle_index(path: &Path) -> Result<HashMap<String, CorrectionRecord>, CliError> {
    let records: Vec<CorrectionRecord> = read_json_records(path)?;
    Ok(records
        .into_iter()
        .filter(|r| r.meta.task == Task::T3)
        .map(|r| (r.fol_input.clone(), r))
        .collect())
}

fn oracle_for(index: &HashMap<String, CorrectionRecord>, fol: &str) -> OracleGenerator {
    let mut g = OracleGenerator::new(3);
    if let Some(rec) = index.get(fol) {
        if let Ok(start) = parse(&rec.fol_input) {
            let fix: Vec<_> = rec.prev_steps.iter().chain(&rec.target_steps).map(|s| s.edit.clone()).collect();
            g.add_case(&start, &fix);
        }
    }
    g
}

#[allow(clippy::too_many_arguments)]
fn cmd_correct(
    input: &Path,
    gold: Option<&Path>,
    use_endpoint: bool,
    replay: Option<&Path>,
    oracle: Option<&Path>,
    out: Option<&Path>,
    cfg: &GlobalConfig,
    dry: bool,
) -> Result<(), CliError> {
    cfg.reward.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let rows: Vec<CorrectInput> = read_json_records(input)?;
    let golds = match gold {
        Some(g) => {
            let g = read_rules(g)?;
            if g.len() != rows.len() {
                return Err(CliError::Input(format!("{} gold rules but {} inputs", g.len(), rows.len())));
            }
            g.into_iter().map(Some).collect()
        }
        None => vec![None; rows.len()],
    };
    let cases: Vec<SessionCase> = rows
        .into_iter()
        .zip(golds)
        .map(|(r, g)| SessionCase {
            nl: r.nl,
            fol_pred: r.fol_pred,
            gold: g,
        })
        .collect();
    if dry {
        let unparseable = cases.iter().filter(|c| parse(&c.fol_pred).is_err()).count();
        summary(json!({"sessions": cases.len(), "unparseable_predictions": unparseable, "dry_run": true}));
        return Ok(());
    }
    let session = &cfg.session;
    let outcomes: Vec<Result<SessionOutcome, SessionError>> = match (use_endpoint, replay, oracle) {
        (true, _, _) => {
            endpoint_generator(cfg)?;
            run_batch(
                &cases,
                |_| HttpGenerator::new(cfg.endpoint.clone()).expect("client already built once"),
                session,
            )
        }
        (false, Some(r), _) => {
            let mut g = ReplayGenerator::from_file(r).map_err(|e| CliError::Input(e.to_string()))?;
            cases
                .iter()
                .map(|c| run_session(&c.nl, &c.fol_pred, c.gold.as_deref(), &mut g, session))
                .collect()
        }
        (false, None, Some(o)) => {
            let index = oracle_index(o)?;
            run_batch(&cases, |i| oracle_for(&index, &cases[i].fol_pred), session)
        }
        (false, None, None) => {
            return Err(CliError::Usage("correct needs --endpoint, --replay or --oracle".into()));
        }
    };
    let mut done = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        done.push(o.map_err(|e| match e {
            SessionError::Generator(g) => CliError::Endpoint(g.to_string()),
            SessionError::Metrics(MetricsError::InvalidConfig(m)) => CliError::Usage(m),
            other => CliError::Input(other.to_string()),
        })?);
    }
    let experiences: Vec<_> = done.iter().flat_map(|o| o.experiences.iter()).collect();
    write_file(out, dry, &jsonl_text(&experiences))?;
    let mut statuses: BTreeMap<&str, usize> = BTreeMap::new();
    for o in &done {
        let name = match o.status {
            SessionStatus::Running => "running",
            SessionStatus::DoneNoChanges => "done_no_changes",
            SessionStatus::DoneLimit => "done_limit",
            SessionStatus::Failed => "failed",
        };
        *statuses.entry(name).or_default() += 1;
    }
    let rewards: Vec<f64> = done.iter().filter_map(|o| o.final_reward).collect();
    let gens: Vec<f64> = done.iter().map(|o| o.generations as f64).collect();
    summary(json!({
        "sessions": done.len(),
        "experiences": experiences.len(),
        "statuses": statuses,
        "mean_generations": mean(&gens),
        "mean_final_reward": mean(&rewards),
    }));
    Ok(())
}
