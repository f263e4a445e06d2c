//! Train, eval and physics-report drivers and their on-disk layout.
//!
//! A run lives in `<output_dir>/<run_id>/`:
//!
//! - `config-resolved.toml`: the fully defaulted config
//! - `metrics-<seed>.jsonl`: one [`EpisodeMetrics`] object per training episode
//! - `timing-<seed>.json`: wall-clock time of the training loop
//! - `checkpoint-<seed>.json`: final learner state
//! - `trajectory-<seed>.csv`: evaluation rollout, one row per slot plus the initial row
//! - `eval-<seed>.json`: evaluation summary

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use aerial_irs::agents::{consumed_energy, energy_efficiency, Checkpoint, EpisodeMetrics, Learner};
use aerial_irs::env::{SlotRecord, CSV_HEADER};
use aerial_irs::{Algorithm, Environment, ExperimentConfig, Mode};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::io::write_atomic;

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seeds: Vec<u64>,
    pub out: Option<PathBuf>,
    pub algorithm: Option<Algorithm>,
    pub episodes: Option<usize>,
}

impl Overrides {
    /// Choosing an algorithm also picks its mode: CT-MADDPG only runs
    /// without charging, the option learners only with it.
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if !self.seeds.is_empty() {
            cfg.seeds = self.seeds.clone();
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.to_string_lossy().into_owned();
        }
        if let Some(a) = self.algorithm {
            cfg.algorithm = a;
            cfg.mode = if a == Algorithm::CtMaddpg { Mode::P1 } else { Mode::P2 };
        }
        if let Some(n) = self.episodes {
            cfg.train.episodes = n;
        }
    }
}

/// Reads a config file (or the defaults) and applies overrides.
pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => String::new(),
    };
    let mut cfg = ExperimentConfig::from_toml_str(&text)
        .with_context(|| format!("in {}", path.map_or("<defaults>".into(), |p| p.display().to_string())))?;
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

pub fn run_dir(cfg: &ExperimentConfig) -> PathBuf {
    Path::new(&cfg.output_dir).join(cfg.run_id())
}

fn seed_file(dir: &Path, stem: &str, seed: u64, ext: &str) -> PathBuf {
    dir.join(format!("{stem}-{seed}.{ext}"))
}

pub fn metrics_path(dir: &Path, seed: u64) -> PathBuf {
    seed_file(dir, "metrics", seed, "jsonl")
}

pub fn checkpoint_path(dir: &Path, seed: u64) -> PathBuf {
    seed_file(dir, "checkpoint", seed, "json")
}

pub fn trajectory_path(dir: &Path, seed: u64) -> PathBuf {
    seed_file(dir, "trajectory", seed, "csv")
}

pub fn eval_path(dir: &Path, seed: u64) -> PathBuf {
    seed_file(dir, "eval", seed, "json")
}

pub fn timing_path(dir: &Path, seed: u64) -> PathBuf {
    seed_file(dir, "timing", seed, "json")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timing {
    pub seed: u64,
    pub episodes: usize,
    pub wall_seconds: f64,
}

/// What a finished training seed hands back to the caller.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub seed: u64,
    pub rewards: Vec<f64>,
    pub learner: Learner,
}

fn write_resolved_config(cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
    write_atomic(&dir.join("config-resolved.toml"), cfg.to_toml_string().as_bytes())
        .with_context(|| format!("writing config to {}", dir.display()))
}

/// Trains every seed of `cfg` on its own thread.
pub fn train(cfg: &ExperimentConfig) -> Result<Vec<TrainOutcome>> {
    cfg.validate()?;
    if cfg.seeds.is_empty() {
        bail!("no seeds to run");
    }
    let dir = run_dir(cfg);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_resolved_config(cfg, &dir)?;
    log::info!("training {} seed(s) into {}", cfg.seeds.len(), dir.display());
    std::thread::scope(|s| {
        let handles: Vec<_> = cfg.seeds.iter().map(|&seed| s.spawn({
            let dir = &dir;
            move || train_seed(cfg, seed, dir)
        })).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| bail!("training thread panicked")))
            .collect()
    })
}

fn train_seed(cfg: &ExperimentConfig, seed: u64, dir: &Path) -> Result<TrainOutcome> {
    let mut env = Environment::new(cfg, seed);
    let mut learner = Learner::new(cfg, seed);
    let path = metrics_path(dir, seed);
    // Lines are appended to a temporary file that is renamed into place at the end.
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    let mut rewards = Vec::with_capacity(cfg.train.episodes);
    let mut write_err = None;
    let start = Instant::now();
    learner
        .train_episodes(&mut env, cfg.train.episodes, |m: &EpisodeMetrics| {
            rewards.push(m.reward);
            if m.episode % 50 == 0 {
                log::info!(
                    "seed {seed} episode {} reward {:.2} throughput {:.2} slots {}",
                    m.episode,
                    m.reward,
                    m.throughput,
                    m.slots
                );
            }
            if write_err.is_none() {
                let line = serde_json::to_string(m).expect("metrics serialize");
                if let Err(e) = writeln!(tmp, "{line}") {
                    write_err = Some(e);
                }
            }
        })
        .with_context(|| format!("seed {seed}"))?;
    let wall_seconds = start.elapsed().as_secs_f64();
    if let Some(e) = write_err {
        return Err(e).context(format!("writing {}", path.display()));
    }
    tmp.as_file().sync_all()?;
    tmp.persist(&path).map_err(|e| e.error)?;

    let ck = learner.checkpoint(&cfg.run_hash());
    write_atomic(&checkpoint_path(dir, seed), &serde_json::to_vec(&ck)?)?;
    let timing = Timing {
        seed,
        episodes: cfg.train.episodes,
        wall_seconds,
    };
    write_atomic(&timing_path(dir, seed), &serde_json::to_vec_pretty(&timing)?)?;
    log::info!("seed {seed} done in {wall_seconds:.1} s");
    Ok(TrainOutcome { seed, rewards, learner })
}

/// Deployment-phase summary of one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub algorithm: Algorithm,
    pub mode: Mode,
    /// Number of slots `N_τ`.
    pub slots: usize,
    pub charging_count: usize,
    pub e_m_percent: f64,
    pub e_a_percent: f64,
    /// Accumulated throughput (bit/Hz).
    pub throughput: f64,
    /// `E_Mmax + E_Amax − E_M[N_τ] − E_A[N_τ]` (J).
    pub consumed_energy: f64,
    /// Throughput per consumed joule (bit/Hz/J).
    pub energy_efficiency: f64,
    pub reward: f64,
    pub power_off: bool,
}

/// Noise-free rollout of a trained learner.
pub fn evaluate_learner(cfg: &ExperimentConfig, learner: &mut Learner, seed: u64) -> Result<(EvalReport, Vec<SlotRecord>)> {
    let mut env = Environment::new(cfg, seed);
    let mut log = Vec::new();
    let s = learner.evaluate(&mut env, seed, Some(&mut log))?;
    let e = &cfg.env;
    let consumed = consumed_energy(e.e_m_max, e.e_a_max, s.final_e_m, s.final_e_a);
    let report = EvalReport {
        seed,
        algorithm: cfg.algorithm,
        mode: cfg.mode,
        slots: s.slots,
        charging_count: s.charging_count,
        e_m_percent: s.e_m_percent(e.e_m_max),
        e_a_percent: s.e_a_percent(e.e_a_max),
        throughput: s.throughput,
        consumed_energy: consumed,
        energy_efficiency: energy_efficiency(s.throughput, consumed),
        reward: s.reward,
        power_off: s.power_off,
    };
    Ok((report, log))
}

pub fn trajectory_csv(rows: &[SlotRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

/// Evaluates the checkpoint of every seed in the run directory.
pub fn evaluate(cfg: &ExperimentConfig) -> Result<Vec<EvalReport>> {
    cfg.validate()?;
    let dir = run_dir(cfg);
    let mut reports = Vec::new();
    for &seed in &cfg.seeds {
        let ck = load_checkpoint(&checkpoint_path(&dir, seed))?;
        let mut learner = Learner::new(cfg, seed);
        learner
            .restore(ck, &cfg.run_hash())
            .with_context(|| format!("checkpoint of seed {seed}"))?;
        let (report, rows) = evaluate_learner(cfg, &mut learner, seed)?;
        write_atomic(&trajectory_path(&dir, seed), trajectory_csv(&rows).as_bytes())?;
        write_atomic(&eval_path(&dir, seed), &serde_json::to_vec_pretty(&report)?)?;
        log::info!(
            "seed {seed}: {} slots, throughput {:.2} bit/Hz, efficiency {:.4e} bit/Hz/J",
            report.slots,
            report.throughput,
            report.energy_efficiency
        );
        reports.push(report);
    }
    Ok(reports)
}

/// Runs the physics checks and writes `physics-report.json` under the output directory.
pub fn physics_report(cfg: &ExperimentConfig) -> Result<Vec<crate::acceptance::CheckResult>> {
    cfg.validate()?;
    let checks = crate::acceptance::physics_suite(cfg);
    let path = Path::new(&cfg.output_dir).join("physics-report.json");
    write_atomic(&path, &serde_json::to_vec_pretty(&checks)?)?;
    Ok(checks)
}
