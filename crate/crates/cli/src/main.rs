use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rough_gauss_cli::config::{RunConfig, SweepConfig, EXPERIMENTS};
use rough_gauss_cli::error::CliError;
use rough_gauss_cli::{config_from_flags, run, sweep, Finished, Overrides, OUT_DIR_ENV};

#[derive(Parser)]
#[command(name = "rough-gauss", version, about = "Lifted Gaussian process experiments")]
struct Cli {
    /// Seed for randomized experiments; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory. Falls back to the config, then the environment.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file, or an experiment by name with `--field value` flags.
    Run {
        /// `config.json` or an experiment name.
        target: String,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "FLAGS")]
        flags: Vec<String>,
    },
    /// Sweep one parameter and write one CSV row per point.
    Table { sweep: PathBuf },
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn merge(cli: &Overrides, flags: Overrides) -> Overrides {
    Overrides {
        seed: flags.seed.or(cli.seed),
        workers: flags.workers.or(cli.workers),
        out_dir: flags.out_dir.or_else(|| cli.out_dir.clone()),
    }
}

fn execute(cli: Cli) -> Result<Finished, CliError> {
    let o = Overrides { seed: cli.seed, workers: cli.workers, out_dir: cli.out_dir };
    match cli.command {
        Command::Run { target, flags } => {
            if EXPERIMENTS.contains(&target.as_str()) {
                let (cfg, extra) = config_from_flags(&target, &flags)?;
                run(cfg, &merge(&o, extra))
            } else {
                if !flags.is_empty() {
                    return Err(CliError::Config(format!("unexpected arguments after config file: {flags:?}")));
                }
                let path = PathBuf::from(&target);
                if !path.exists() {
                    return Err(CliError::Config(format!(
                        "{target} is neither a config file nor an experiment ({})",
                        EXPERIMENTS.join(", ")
                    )));
                }
                run(RunConfig::from_json(&read(&path)?)?, &o)
            }
        }
        Command::Table { sweep: path } => sweep::table(&SweepConfig::from_json(&read(&path)?)?, &o),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let finished = execute(cli).and_then(|f| f.write().map(|paths| (f, paths)));
    match finished {
        Ok((f, paths)) => {
            for line in &f.console {
                println!("{line}");
            }
            for c in &f.checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            for p in &paths {
                println!("wrote {}", p.display());
            }
            ExitCode::from(f.exit_code() as u8)
        }
        Err(e) => {
            let reason = serde_json::json!({"error": e.kind(), "message": e.to_string(), "out_dir_env": OUT_DIR_ENV});
            eprintln!("{reason}");
            ExitCode::from(1)
        }
    }
}
