use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use latentem::Variant;
use latentem_cli::{inspect, run, AlphabetPolicy, Command, InputFormat, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Alphabet {
    Observed,
    Full,
}

/// Latent, co-latent and network clustering of contingency tables by
/// Kullback-Leibler EM.
#[derive(Debug, Parser)]
#[command(name = "latentem", version)]
struct Args {
    #[arg(value_enum)]
    command: Command,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: InputFormat,
    /// Number of groups (row groups for fit-colatent).
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Column groups for fit-colatent.
    #[arg(long)]
    m2: Option<usize>,
    #[arg(long, default_value = "general", value_parser = parse_variant)]
    variant: Variant,
    /// Diagonal inflation factor for fit-network.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Output directory (fit commands).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Symbols indexing a text bigram table.
    #[arg(long, value_enum, default_value = "observed")]
    alphabet: Alphabet,
    /// Project C onto marginal homogeneity every k cycles (mh variant).
    #[arg(long)]
    mh_projection_every: Option<usize>,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    s.parse().map_err(|_| format!("unknown variant {s:?}; expected general, symmetric or mh"))
}

impl From<Args> for RunConfig {
    fn from(a: Args) -> Self {
        RunConfig {
            command: a.command,
            input_path: a.input,
            input_format: a.format,
            m: a.m,
            m2: a.m2,
            variant: a.variant,
            lambda: a.lambda,
            restarts: a.restarts,
            seed: a.seed,
            max_iter: a.max_iter,
            tol: a.tol,
            output_dir: a.out,
            alphabet: match a.alphabet {
                Alphabet::Observed => AlphabetPolicy::Observed,
                Alphabet::Full => AlphabetPolicy::Full,
            },
            mh_projection_every: a.mh_projection_every,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let config = RunConfig::from(Args::parse());
    let result = if config.command == Command::Inspect {
        inspect(&config).map(|report| print!("{report}"))
    } else {
        run(&config).map(|report| {
            println!(
                "best K = {:e} (restart {} of {}); outputs in {}",
                report.best_kl,
                report.best_restart,
                report.restarts,
                config.output_dir.display()
            )
        })
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("latentem: {e}");
            ExitCode::FAILURE
        }
    }
}
