use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ftclean::cli::{inspect, run_curate, run_eval_command, EvalSource, InspectFilter};
use ftclean::config::{Config, Overrides};
use ftclean::error::Error;
use ftclean_core::{TaskKind, Verdict};

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_GATE: u8 = 3;

/// Detect, relabel and filter noisy labels in fine-tuning datasets.
#[derive(Parser)]
#[command(name = "ftclean", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for cached responses and indexes.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Fraction of relabeled samples to keep, in (0, 1].
    #[arg(long)]
    beta: Option<f64>,
    /// Number of clean exemplars retrieved per noisy sample.
    #[arg(long)]
    k: Option<usize>,
    /// Seed for the simulated backend and noise injection.
    #[arg(long)]
    seed: Option<u64>,
    /// Maximum in-flight backend requests.
    #[arg(long)]
    concurrency: Option<usize>,
    #[arg(long, value_enum)]
    task_kind: Option<KindArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    MultipleChoice,
    ShortAnswer,
    FreeText,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerdictArg {
    Clean,
    Noisy,
}

#[derive(Subcommand)]
enum Command {
    /// Curate a dataset into a fine-tuning set.
    Curate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Inject noise into a labeled corpus and measure the pipeline.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Corpus with ground truth; omit to use --synthetic.
        #[arg(long, conflicts_with = "synthetic")]
        input: Option<PathBuf>,
        /// Generate a synthetic multiple-choice corpus of this size.
        #[arg(long)]
        synthetic: Option<usize>,
        /// Comma-separated noise rates.
        #[arg(long, value_delimiter = ',')]
        rates: Option<Vec<f64>>,
        /// Comma-separated selection ratios.
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
        /// Machine-readable report file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print per-sample records of a finished curate run.
    Inspect {
        /// Curate output path or its `.records.jsonl` sidecar.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        id: Option<String>,
        #[arg(long, value_enum)]
        verdict: Option<VerdictArg>,
        /// Emit raw JSON lines.
        #[arg(long)]
        json: bool,
    },
}

fn load_config(common: &Common) -> Result<Config, Error> {
    let mut config = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    config.apply(&Overrides {
        beta: common.beta,
        k: common.k,
        seed: common.seed,
        concurrency: common.concurrency,
        cache_dir: common.cache_dir.clone(),
    });
    if let Some(kind) = common.task_kind {
        config.task_kind = match kind {
            KindArg::MultipleChoice => TaskKind::MultipleChoice,
            KindArg::ShortAnswer => TaskKind::ShortAnswer,
            KindArg::FreeText => TaskKind::FreeText,
        };
    }
    config.validate()?;
    Ok(config)
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Curate { common, input, output } => {
            let config = load_config(&common)?;
            let report = run_curate(&input, &output, &config)?;
            eprint!("{}", report.render());
            Ok(0)
        }
        Command::Eval { common, input, synthetic, rates, betas, output } => {
            let mut config = load_config(&common)?;
            if let Some(r) = rates {
                config.eval.rates = r;
            }
            if let Some(b) = betas {
                config.eval.betas = Some(b);
            }
            let source = match (&input, synthetic) {
                (Some(p), _) => EvalSource::File(p),
                (None, Some(n)) => EvalSource::Synthetic { n, options: 4, seed: config.eval.noise_seed },
                (None, None) => {
                    return Err(Error::Config("eval needs --input or --synthetic".into()))
                }
            };
            let report = run_eval_command(source, &config, output.as_deref())?;
            print!("{}", report.render_table());
            Ok(if report.passed { 0 } else { EXIT_GATE })
        }
        Command::Inspect { input, id, verdict, json } => {
            let filter = InspectFilter {
                id,
                verdict: verdict.map(|v| match v {
                    VerdictArg::Clean => Verdict::Clean,
                    VerdictArg::Noisy => Verdict::Noisy,
                }),
            };
            let stdout = std::io::stdout();
            inspect(&input, &filter, json, &mut stdout.lock())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
