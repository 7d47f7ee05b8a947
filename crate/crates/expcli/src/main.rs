use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use ual_expcli::{configs, emit, run_experiment, ExperimentConfig};

#[derive(Parser)]
#[command(name = "ual-lab", version, about = "Active-learning experiments: run, validate, list")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its artifacts.
    Run {
        /// Config file path, or the name of a shipped config.
        #[arg(long)]
        config: String,
        /// Output directory (default: config `output_dir`, else $UAL_LAB_OUT/<id>, else out/<id>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = all cores); overrides the config.
        #[arg(long)]
        parallel: Option<usize>,
        /// Master seed; overrides the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a config without running it.
    Validate {
        #[arg(long)]
        config: String,
    },
    /// List shipped configs.
    ListExperiments,
}

/// Loads a config and the directory relative dataset paths resolve against.
fn load(config: &str) -> anyhow::Result<(ExperimentConfig, Option<PathBuf>)> {
    let path = Path::new(config);
    if path.exists() {
        let cfg = ExperimentConfig::from_path(path)?;
        return Ok((cfg, path.parent().map(Path::to_path_buf)));
    }
    match configs::get(config) {
        Some(cfg) => Ok((cfg?, None)),
        None => bail!("no config file or shipped experiment named '{config}' (see `list-experiments`)"),
    }
}

fn output_dir(cfg: &ExperimentConfig, out: Option<PathBuf>) -> PathBuf {
    out.or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| {
        let root = std::env::var_os("UAL_LAB_OUT").map_or_else(|| PathBuf::from("out"), PathBuf::from);
        root.join(&cfg.experiment_id)
    })
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run { config, out, parallel, seed } => {
            let (mut cfg, base) = load(&config)?;
            if let Some(p) = parallel {
                cfg.parallelism = p;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let dir = output_dir(&cfg, out);
            log::info!("running {} ({} seeds) into {}", cfg.experiment_id, cfg.n_seeds, dir.display());
            let start = Instant::now();
            let results = run_experiment(&cfg, base.as_deref()).with_context(|| format!("experiment {}", cfg.experiment_id))?;
            let elapsed = start.elapsed().as_secs_f64();
            for path in emit(&cfg, &results, &dir, elapsed)? {
                println!("{}", path.display());
            }
            log::info!("finished in {elapsed:.1} s");
        }
        Command::Validate { config } => {
            let (cfg, _) = load(&config)?;
            println!("ok: {} ({} seeds, {} models, {} strategies)", cfg.experiment_id, cfg.n_seeds, cfg.models.len(), cfg.strategies.len());
        }
        Command::ListExperiments => {
            for name in configs::names() {
                println!("{name}");
            }
        }
    }
    Ok(())
}
