use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lie_radon_cli::{execute, ExperimentConfig, CliError, DEFAULT_OUT_DIR, EXIT_INVALID};

/// Runs one lie-radon experiment described by a JSON config.
#[derive(Parser, Debug)]
#[command(name = "lie-radon", version)]
struct Args {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `outputs.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = "LIE_RADON_THREADS")]
    threads: Option<usize>,
    /// Contract tolerance; overrides `tolerances.defect`.
    #[arg(long)]
    tolerance: Option<f64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(args: &Args) -> Result<i32, CliError> {
    let mut config = ExperimentConfig::from_path(&args.config)?;
    if let Some(t) = args.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Validation("--tolerance must be positive and finite".into()));
        }
        config.tolerances.defect = t;
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.outputs.dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    let report = execute(&config, &out, args.threads)?;
    println!("{}", report.headline);
    for f in &report.files {
        println!("wrote {}", out.join(f).display());
    }
    debug_assert!(report.exit_code() != EXIT_INVALID);
    Ok(report.exit_code())
}
