//! `varfrac run <config.json>`: configuration-driven experiments for the
//! variable-order fractional Laplacian.

mod config;
mod error;
mod output;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::Provenance;

#[derive(Debug, Parser)]
#[command(name = "varfrac", version, about = "Variable-order fractional Laplacian experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the task described by a JSON configuration file.
    Run {
        config: PathBuf,
        /// Directory receiving the output files.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        /// Worker threads; defaults to all cores.
        #[arg(long, env = "VARFRAC_THREADS")]
        threads: Option<usize>,
    },
}

fn run(config_path: &Path, out_dir: &Path, threads: Option<usize>) -> Result<(), CliError> {
    let bytes = std::fs::read(config_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config_path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Config("configuration is not UTF-8".into()))?;
    let cfg = RunConfig::parse(&text)?;
    let config_dir = config_path.parent().unwrap_or(Path::new("."));
    let resolved = cfg.resolve(config_dir)?;
    for w in &resolved.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(k) = threads {
        if k == 0 {
            return Err(CliError::Config("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot size thread pool: {e}")))?;
    }

    let artifacts = tasks::run(&resolved)?;
    let prov = Provenance::new(&bytes, resolved.cfg.task.name());
    for path in artifacts.write(out_dir, &resolved.cfg.outputs, &prov)? {
        eprintln!("wrote {path}");
    }
    match tasks::suite_failures(&artifacts.report) {
        Some((failed, total)) if failed > 0 => Err(CliError::InequalityFailed(failed, total)),
        _ => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Command::Run {
        config,
        out_dir,
        threads,
    } = cli.command;
    match run(&config, &out_dir, threads) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
