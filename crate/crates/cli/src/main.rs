use std::path::PathBuf;
use std::process::ExitCode;

use aerial_irs::Algorithm;
use aerial_irs_cli::acceptance::{self, CheckResult};
use aerial_irs_cli::runner::{self, Overrides};
use anyhow::Result;
use clap::{Args, Parser, Subcommand};

/// UAV-carried IRS simulator with option-critic and MADDPG learners.
///
/// Log verbosity follows RUST_LOG (default `info`).
#[derive(Parser)]
#[command(name = "aerial-irs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed and write metrics and checkpoints.
    Train(Common),
    /// Roll out each seed's checkpoint without exploration noise.
    Eval(Common),
    /// Run the full acceptance suite.
    Accept {
        /// Scratch directory for smoke-training and determinism artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the channel and propulsion checks and write physics-report.json.
    PhysicsReport(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed to run; repeat for several. Replaces the config's seed list.
    #[arg(long = "seed")]
    seeds: Vec<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// ct_maddpg, maddpoc, maddpoc_nm or ddpoc; also selects the matching mode.
    #[arg(long)]
    algo: Option<Algorithm>,
    /// Number of training episodes.
    #[arg(long)]
    episodes: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<aerial_irs::ExperimentConfig> {
        let overrides = Overrides {
            seeds: self.seeds.clone(),
            out: self.out.clone(),
            algorithm: self.algo,
            episodes: self.episodes,
        };
        runner::load_config(self.config.as_deref(), &overrides)
    }
}

fn report(checks: &[CheckResult]) -> ExitCode {
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} of {} checks passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Train(c) => {
            let cfg = c.load()?;
            for t in runner::train(&cfg)? {
                let n = t.rewards.len();
                let tail = &t.rewards[n.saturating_sub(50)..];
                println!(
                    "seed {}: {} episodes, mean reward of last {} = {:.2}",
                    t.seed,
                    n,
                    tail.len(),
                    tail.iter().sum::<f64>() / tail.len().max(1) as f64
                );
            }
            println!("artifacts in {}", runner::run_dir(&cfg).display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval(c) => {
            let cfg = c.load()?;
            for r in runner::evaluate(&cfg)? {
                println!(
                    "seed {}: N = {} slots, charging {}, E_M {:.1}%, E_A {:.1}%, throughput {:.2} bit/Hz, \
                     efficiency {:.4e} bit/Hz/J",
                    r.seed, r.slots, r.charging_count, r.e_m_percent, r.e_a_percent, r.throughput, r.energy_efficiency
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::PhysicsReport(c) => {
            let cfg = c.load()?;
            let checks = runner::physics_report(&cfg)?;
            for check in &checks {
                println!("{check}");
            }
            Ok(report(&checks))
        }
        Command::Accept { out } => {
            let tmp;
            let scratch = match out {
                Some(p) => p,
                None => {
                    tmp = tempfile::tempdir()?;
                    tmp.path().to_path_buf()
                }
            };
            let checks = acceptance::run_all(&scratch, |c| println!("{c}"));
            Ok(report(&checks))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
