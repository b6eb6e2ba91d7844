use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use isac_core::baselines::FixedPolicy;
use isac_core::cdrl::run_training;
use isac_core::config::RunConfig;
use isac_core::harness::{
    compare_policies, eval_scenarios, eval_seed, nees_study, run_episode, summary_csv, Policy,
};
use isac_core::metrics::export_csv;
use isac_core::qnet::{load_checkpoint, save_checkpoint};
use isac_core::scenario::{Scenario, Script};

/// Radar dwell-time versus communication-time allocation: training,
/// evaluation and baselines.
#[derive(Parser, Debug)]
#[command(name = "isac", version)]
struct Cli {
    /// `key = value` configuration file; unspecified keys keep defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one configuration key, e.g. `--set snr0=50`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Master seed; overrides the configuration's `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the shared Q-network; writes a checkpoint and per-slot metrics.
    Train {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        metrics: PathBuf,
    },
    /// Run a trained network greedily on one scenario.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Scenario script; a seed-generated scenario is used otherwise.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long)]
        metrics: PathBuf,
    },
    /// Run a fixed-dwell policy on one scenario.
    Baseline {
        /// Dwell per target as a fraction of the revisit interval.
        #[arg(long)]
        fraction: f64,
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long)]
        metrics: PathBuf,
    },
    /// Compare a trained network with fixed policies on paired scenarios.
    Compare {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3")]
        fractions: Vec<f64>,
        /// Summary CSV; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tracking-only consistency run: per-slot mean NEES over many runs.
    Simulate {
        #[arg(long, default_value_t = 500)]
        runs: usize,
        #[arg(long, default_value_t = 50)]
        slots: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the effective configuration.
    Config,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn scenario(cfg: &RunConfig, script: Option<&Path>) -> Result<Scenario> {
    Ok(match script {
        Some(path) => Scenario::Scripted {
            cfg: cfg.scenario(),
            script: Script::load(path)?,
        },
        None => Scenario::Random(cfg.scenario()),
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let n = cfg.max_targets;
    match cli.command {
        Command::Train { checkpoint, metrics } => {
            let run = run_training(&cfg)?;
            save_checkpoint(&run.net, &checkpoint)?;
            export_csv(&run.metrics, n, &metrics)?;
            let tail = run.metrics.records.len() / 10;
            let from = run.metrics.records.len() - tail;
            println!(
                "trained {} slots; final lambda {:.4}; mean dwell sum over last 10%: {:.4} s",
                cfg.t_max_slots,
                run.dual.lambda,
                run.metrics.mean_dwell_sum(cfg.t0, from, usize::MAX)
            );
        }
        Command::Eval {
            checkpoint,
            script,
            metrics,
        } => {
            let policy = Policy::Learned(load_checkpoint(&checkpoint)?);
            let m = run_episode(&policy, scenario(&cfg, script.as_deref())?, &cfg, eval_seed(cfg.seed, 0))?;
            export_csv(&m, n, &metrics)?;
            println!("mean sum rate {:.4}", m.mean_sum_rate());
        }
        Command::Baseline {
            fraction,
            script,
            metrics,
        } => {
            let policy = Policy::Fixed(FixedPolicy::new(fraction)?);
            let m = run_episode(&policy, scenario(&cfg, script.as_deref())?, &cfg, eval_seed(cfg.seed, 0))?;
            export_csv(&m, n, &metrics)?;
            println!("mean sum rate {:.4}", m.mean_sum_rate());
        }
        Command::Compare {
            checkpoint,
            fractions,
            out,
        } => {
            let mut policies = Vec::new();
            if let Some(path) = checkpoint {
                policies.push(Policy::Learned(load_checkpoint(&path)?));
            }
            for f in fractions {
                policies.push(Policy::Fixed(FixedPolicy::new(f)?));
            }
            if policies.is_empty() {
                bail!("nothing to compare: give --checkpoint or --fractions");
            }
            let text = summary_csv(&compare_policies(&policies, &eval_scenarios(&cfg), &cfg)?);
            match out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
        }
        Command::Simulate { runs, slots, out } => {
            if runs == 0 || slots == 0 {
                bail!("runs and slots must be positive");
            }
            let per_slot = nees_study(&cfg, runs, slots, cfg.seed)?;
            let mean = per_slot.iter().sum::<f64>() / slots as f64;
            if let Some(path) = out {
                let mut text = String::from("slot,mean_nees\n");
                for (i, v) in per_slot.iter().enumerate() {
                    text.push_str(&format!("{i},{v:.9e}\n"));
                }
                write(&path, &text)?;
            }
            println!("mean NEES over {runs} runs x {slots} slots: {mean:.4}");
        }
        Command::Config => print!("{}", cfg.to_text()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
