//! `capa <experiment> --config <path> [--out <dir>] [--seed <u64>] [--trials <n>] [--threads <n>]`
//!
//! Exit codes: 0 success, 1 configuration or I/O error, 2 numerical failure.

use capa_core::config::parse_config;
use capa_core::experiments::{run_experiment, Experiment};
use capa_core::CapaError;
use clap::Parser;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "capa", version, about = "Aperture selection experiments for continuous aperture arrays")]
struct Cli {
    /// fig2a, fig2b, fig3a, fig3b, fig4a, fig4b or verify
    experiment: String,
    /// `key = value` config file; an empty file gives the reference scenario
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config's `output`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config's `seed`
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides both `trials` and `op_trials`
    #[arg(long)]
    trials: Option<u64>,
    /// Worker threads (results do not depend on it)
    #[arg(long)]
    threads: Option<usize>,
}

enum Failure {
    Config(String),
    Numeric(String),
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Numeric(_) => 2,
        }
    }
}

impl From<CapaError> for Failure {
    fn from(e: CapaError) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Numeric(e.to_string())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let experiment: Experiment = cli.experiment.parse()?;
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", cli.config.display())))?;
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = cli.trials {
        if trials == 0 {
            return Err(Failure::Config("--trials must be at least 1".into()));
        }
        cfg.trials = trials;
        cfg.op_trials = trials;
    }
    let out_dir = cli.out.unwrap_or_else(|| PathBuf::from(&cfg.output));
    cfg.output = out_dir.display().to_string();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Config(format!("cannot start thread pool: {e}")))?;
    let output = pool.install(|| run_experiment(experiment, &cfg))?;

    std::fs::create_dir_all(&out_dir).map_err(|e| Failure::Config(format!("cannot create {}: {e}", out_dir.display())))?;
    for table in &output.tables {
        let path = out_dir.join(&table.file_name);
        std::fs::write(&path, table.render(experiment, &cfg))
            .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {}", path.display());
    }
    if output.failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Numeric(output.failures.join("\n")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(msg) => eprintln!("error: {msg}"),
                Failure::Numeric(msg) => eprintln!("numerical failure: {msg}"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn errors_map_to_exit_codes() {
        let config = [
            CapaError::Config { line: 3, message: "x".into() },
            CapaError::Domain("bad".into()),
            CapaError::ApertureTooLarge { axis: 'x', side: 3.0, limit: 2.0 },
        ];
        for e in config {
            assert_eq!(Failure::from(e).exit_code(), 1);
        }
        let numeric = [
            CapaError::Convergence { value: capa_core::Complex64::new(1.0, 0.0), error: 0.5 },
            CapaError::Singular("s".into()),
            CapaError::NonFinite { x: 0.0, z: 0.0 },
            CapaError::Model("m".into()),
        ];
        for e in numeric {
            assert_eq!(Failure::from(e).exit_code(), 2);
        }
    }
}
