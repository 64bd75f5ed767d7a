mod commands;
mod config;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use folkit::forge::Task;

use config::{GlobalConfig, OutputFormat};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Input(String),
    Endpoint(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Endpoint(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Input(_) => "input",
            CliError::Endpoint(_) => "endpoint",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Endpoint(m) => m,
        }
    }
}

impl From<folkit::jsonl::JsonlError> for CliError {
    fn from(e: folkit::jsonl::JsonlError) -> Self {
        CliError::Input(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "folkit", version, about = "First-order-logic parsing, scoring, perturbation and dataset tools")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Check inputs and report what would be done without writing files.
    #[arg(long, global = true)]
    dry_run: bool,
    /// Worker threads for parallel subcommands (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Per-record output format where a subcommand supports both.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// More logging (-v debug, -vv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate FOL rules, one per line (or JSONL with a "fol" field).
    Validate {
        #[arg(long = "in")]
        input: PathBuf,
        /// Per-rule verdicts.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score predictions against gold rules with LE, BLEU and the mixed reward.
    Score {
        #[arg(long, requires = "pred", conflicts_with = "pairs")]
        gold: Option<PathBuf>,
        #[arg(long, requires = "gold")]
        pred: Option<PathBuf>,
        /// Tab-separated `gold<TAB>pred` lines, or JSONL with "gold" and "pred".
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long)]
        omega: Option<f64>,
        #[arg(long)]
        max_atoms: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Perturb rules and emit the edits and the steps that undo them.
    Perturb {
        #[arg(long = "in")]
        input: PathBuf,
        /// Fix the number of perturbations instead of sampling it.
        #[arg(long)]
        n_perturb: Option<usize>,
        /// Fix the number of correction steps per generation.
        #[arg(long)]
        n_correct: Option<usize>,
        #[arg(long)]
        negative_prob: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Forge training records from NL-FOL pairs.
    Forge {
        #[arg(long, default_value = "t3")]
        task: Task,
        /// Records to forge (default: one per input pair).
        #[arg(long)]
        count: Option<usize>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// For t2, use perturbed gold rules where pairs lack a prediction.
        #[arg(long)]
        simulate_predictions: bool,
        #[arg(long)]
        n_correct: Option<usize>,
        #[arg(long)]
        negative_prob: Option<f64>,
    },
    /// Corpus statistics for NL-FOL pairs.
    Stats {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = folkit::forge::DEFAULT_TOP_TERMS)]
        top_terms: usize,
        #[arg(long, default_value_t = folkit::forge::DEFAULT_TOP_PAIRS)]
        top_pairs: usize,
    },
    /// Group score rows into bins and average the model scores per bin.
    Bins {
        #[arg(long = "in")]
        input: PathBuf,
        /// Descending bin edges.
        #[arg(long, value_delimiter = ',', default_value = "1.0,0.9,0.8,0.7,0.6,0.5,0.4,0.3,0.2,0.1,0.0")]
        edges: Vec<f64>,
        #[arg(long, value_enum, default_value = "gpt-le")]
        by: GroupByArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collect NL-FOL pairs from a generator. Resumes when the output
    /// directory already holds a gate snapshot.
    Collect {
        #[arg(long)]
        target: Option<usize>,
        #[arg(long, conflicts_with = "replay")]
        endpoint: Option<String>,
        #[arg(long)]
        model: Option<String>,
        /// JSONL of canned responses.
        #[arg(long)]
        replay: Option<PathBuf>,
        #[arg(long)]
        align_threshold: Option<f64>,
        #[arg(long)]
        max_calls: Option<u64>,
        /// Few-shot pairs to start from (default: built-in examples).
        #[arg(long)]
        bootstrap: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Run iterative correction sessions and write experience tuples.
    Correct {
        /// JSONL with "nl" and "fol_pred" (or "fol") fields.
        #[arg(long)]
        nl_fol_pred: PathBuf,
        /// Gold rules aligned with the input rows; enables rewards.
        #[arg(long)]
        gold: Option<PathBuf>,
        #[arg(long, conflicts_with_all = ["replay", "oracle"])]
        endpoint: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long, conflicts_with = "oracle")]
        replay: Option<PathBuf>,
        /// Forged t3 records whose fixes answer each session.
        #[arg(long)]
        oracle: Option<PathBuf>,
        #[arg(long)]
        max_generations: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum GroupByArg {
    GptLe,
    GptBleu,
}

fn init_logging(g: &GlobalArgs) {
    let level = match (g.quiet, g.verbose) {
        (true, _) => log::LevelFilter::Warn,
        (false, 0) => log::LevelFilter::Info,
        (false, 1) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn resolve(g: &GlobalArgs) -> Result<GlobalConfig, CliError> {
    let mut cfg = GlobalConfig::load(g.config.as_deref())?;
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if g.workers.is_some() {
        cfg.workers = g.workers;
    }
    if let Some(f) = g.format {
        cfg.format = f;
    }
    cfg.perturb.seed = cfg.seed;
    cfg.collect.seed = cfg.seed;
    if let Some(n) = cfg.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = resolve(&cli.global)?;
    let dry = cli.global.dry_run;
    commands::apply_overrides(&cli.command, &mut cfg);
    log::info!(
        "resolved config: {}",
        serde_json::to_string(&cfg).expect("config serializes")
    );
    commands::dispatch(cli.command, &cfg, dry)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    init_logging(&cli.global);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let body = serde_json::json!({"error": e.kind(), "message": e.message()});
            eprintln!("{body}");
            ExitCode::from(e.code())
        }
    }
}
