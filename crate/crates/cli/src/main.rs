//! Config-driven experiment runner.

mod config;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_seed, ExperimentConfig};
use run::{build_model, export_model, Runner};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation: {0}")]
    Validation(String),
    #[error("numerical: {0}")]
    Numerical(semistab::Error),
    #[error("internal: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<semistab::Error> for CliError {
    fn from(e: semistab::Error) -> Self {
        match e {
            semistab::Error::Io(msg) => CliError::Internal(msg),
            e => CliError::Numerical(e),
        }
    }
}

#[derive(Parser)]
#[command(name = "semistab", version, about = "Polynomial stability experiments on finite-dimensional semigroups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured analyses (a dimension sweep if `sweep` is listed).
    Run(Common),
    /// Run every analysis for each dimension in `sweep.dims` and add ratio tables.
    Sweep(Common),
    /// Check the configuration without computing anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write the model matrices as Matrix Market files.
    ExportModel {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Probe seed in hexadecimal; overrides `params.seed`.
    #[arg(long)]
    seed: Option<String>,
    /// Worker threads; falls back to SEMISTAB_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

fn load(path: &Path) -> Result<ExperimentConfig, CliError> {
    let config = ExperimentConfig::load(path)?;
    config.validate()?;
    Ok(config)
}

fn out_dir(flag: Option<PathBuf>, config: &ExperimentConfig) -> PathBuf {
    flag.or_else(|| config.output.clone()).unwrap_or_else(|| PathBuf::from("semistab-out"))
}

fn init_threads(flag: Option<usize>) -> Result<(), CliError> {
    let threads = match flag {
        Some(t) => Some(t),
        None => match std::env::var("SEMISTAB_THREADS") {
            Ok(v) => Some(
                v.trim().parse().map_err(|_| CliError::Validation(format!("SEMISTAB_THREADS=`{v}` is not an integer")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Validation("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| CliError::Internal(e.to_string()))?;
    }
    Ok(())
}

fn execute(args: Common, force_sweep: bool) -> Result<i32, CliError> {
    let config = load(&args.config)?;
    let seed = match args.seed.as_deref().or(config.params.seed.as_deref()) {
        Some(s) => parse_seed(s)?,
        None => semistab::orbits::DEFAULT_SEED,
    };
    init_threads(args.threads)?;
    let dims = if force_sweep || config.wants_sweep() { Some(config.require_sweep()?.to_vec()) } else { None };
    let out = out_dir(args.out, &config);
    let report = Runner::new(&config, out.clone(), seed).execute(dims.as_deref())?;
    for run in &report.runs {
        for a in &run.analyses {
            match &a.error {
                None => println!("n = {:<5} {:<14} ok", run.n, a.analysis),
                Some(e) => println!("n = {:<5} {:<14} error: {e}", run.n, a.analysis),
            }
        }
    }
    for t in &report.ratio_tables {
        println!(
            "{} beta = {:?}: ratios {:?}, growth exponent {:?}",
            t.quantity, t.beta, t.table.ratios, t.table.growth_exponent
        );
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    println!("report: {}", out.join("report.json").display());
    Ok(report.exit_code())
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run(args) => execute(args, false),
        Command::Sweep(args) => execute(args, true),
        Command::Validate { config } => {
            load(&config)?;
            println!("config ok");
            Ok(0)
        }
        Command::ExportModel { config, out } => {
            let config = load(&config)?;
            let model = build_model(&config.model, None)?;
            for path in export_model(&model, &out_dir(out, &config))? {
                println!("{}", path.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("semistab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
