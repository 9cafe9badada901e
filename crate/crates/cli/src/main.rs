use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hvtucb::runner::{self, Algorithm, ExperimentConfig};
use hvtucb::Error;

#[derive(Parser)]
#[command(name = "hvtucb", version, about = "Heavy-tailed linear bandit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write per-round and summary CSVs.
    Run {
        /// JSON experiment config. Omitted keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        algo: Option<Algorithm>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the runtime of two summary CSVs.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the default config as JSON.
    Defaults,
}

enum Failure {
    Config(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e)
        } else {
            Failure::Runtime(e)
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<ExperimentConfig, Failure> {
    match path {
        None => Ok(ExperimentConfig::default()),
        // A missing or unreadable config file is a config problem, not a runtime one.
        Some(p) => ExperimentConfig::from_path(p).map_err(Failure::Config),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { config, algo, seed, trials, horizon, out } => {
            let mut cfg = load_config(config.as_ref())?;
            if let Some(a) = algo {
                cfg.algo = a;
            }
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(k) = trials {
                cfg.trials = k;
            }
            if let Some(t) = horizon {
                cfg.horizon = t;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            cfg.validate().map_err(Failure::Config)?;
            log::info!("running {} for {} trial(s) of {} rounds", cfg.algo, cfg.trials, cfg.horizon);
            let summary = runner::run_experiment(&cfg)?;
            for (k, diag) in summary.diagnostics().enumerate() {
                if diag.coverage_violations > 0 || diag.schedule_violations > 0 {
                    log::warn!(
                        "trial {k}: {} coverage violation(s), {} schedule violation(s)",
                        diag.coverage_violations,
                        diag.schedule_violations
                    );
                }
            }
            println!(
                "{}: mean final regret {:.4}, mean total time {:.3} ms",
                summary.algo,
                summary.mean_final_regret(),
                summary.mean_total_time_ns() / 1e6
            );
            println!("wrote {}", summary.rounds_path.display());
            println!("wrote {}", summary.summary_path.display());
        }
        Command::Compare { a, b, out } => {
            let sa = runner::read_summary(&a)?;
            let sb = runner::read_summary(&b)?;
            let cmp = runner::compare_runtimes(&sa, &sb)?;
            runner::write_compare(&out, &cmp.to_rows())?;
            println!("time ratio b/a: {:.2}", cmp.ratio_b_over_a);
            println!(
                "per-round slope a: {:.4e} ns/round (p = {:.3e}); b: {:.4e} ns/round (p = {:.3e})",
                cmp.a.trend.slope, cmp.a.trend.p_value, cmp.b.trend.slope, cmp.b.trend.p_value
            );
            println!("wrote {}", out.display());
        }
        Command::Defaults => println!("{}", ExperimentConfig::default().to_json_pretty()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}
