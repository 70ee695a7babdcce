use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use crmgp::config::{ExperimentConfig, ModelKind, Overrides};
use crmgp::experiment;
use crmgp::Result;

/// Consensus-based recursive multi-output GP experiments on a synthetic wind field.
#[derive(Debug, Parser)]
#[command(name = "crmgp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured model suite and write metrics, grids, trace and ledger CSVs.
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Check a config without running it and print the resolved settings.
    Validate {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
}

#[derive(Debug, Args)]
struct OverrideArgs {
    /// Write outputs here instead of the config's `output_dir`.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Replace every seed in the config with this value.
    #[arg(long)]
    seed_override: Option<u64>,
    /// Comma-separated subset of sogp, mogp, rmgp, crmgp.
    #[arg(long)]
    models: Option<String>,
}

impl OverrideArgs {
    fn to_overrides(&self) -> Result<Overrides> {
        let models = self
            .models
            .as_deref()
            .map(|s| s.split(',').filter(|m| !m.trim().is_empty()).map(ModelKind::parse).collect::<Result<Vec<_>>>())
            .transpose()?;
        Ok(Overrides { output_dir: self.output_dir.clone(), seed: self.seed_override, models })
    }
}

fn load(config: &Path, overrides: &OverrideArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(config)?;
    cfg.apply(&overrides.to_overrides()?);
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { config, overrides } => {
            let cfg = load(&config, &overrides)?.resolve()?;
            println!("# config_hash={}", cfg.hash());
            print!("{}", cfg.to_toml());
            Ok(())
        }
        Command::Run { config, overrides } => {
            let cfg = load(&config, &overrides)?;
            let outcome = experiment::run(cfg)?;
            let dir = outcome.config.output_dir();
            let written = experiment::write_outputs(&outcome, &dir)?;
            for r in &outcome.runs {
                let m = &r.report;
                println!(
                    "{:<6} nlpd_u={:.4} nlpd_v={:.4} ci_u={:.1} ci_v={:.1} rmse={:.5}",
                    r.model.name(),
                    m.nlpd_per_output[0],
                    m.nlpd_per_output[1],
                    m.ci95_coverage_per_output[0],
                    m.ci95_coverage_per_output[1],
                    m.rmse
                );
            }
            println!("wrote {} files to {}", written.len(), dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
