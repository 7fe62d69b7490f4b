use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use emergent_cli::{run, CliError, Format, Scenario, Verb};

/// Emergent velocity and force fields of n-slit systems.
#[derive(Debug, Parser)]
#[command(name = "emergent", version)]
struct Args {
    /// What to run.
    #[arg(value_enum)]
    verb: Verb,
    /// Scenario file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[outputs] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `[ensemble] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `[ensemble] tol`.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads; all cores when absent. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Format of the table files.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn execute(args: &Args) -> Result<bool, CliError> {
    let mut scenario = Scenario::load(&args.config)?;
    if let Some(seed) = args.seed {
        scenario.ensemble.seed = seed;
    }
    if let Some(tol) = args.tol {
        scenario.ensemble.tol = tol;
    }
    scenario.validate()?;
    if let Some(threads) = args.threads {
        if threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let out = args.out.clone().unwrap_or_else(|| scenario.outputs.dir.clone());
    let (summary, _) = run(args.verb, &scenario, &out, args.format)?;
    print!("{}", summary.to_json());
    Ok(summary.passed)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
