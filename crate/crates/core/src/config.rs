//! Experiment configuration.
//!
//! A config file is TOML. Every field has a default, so an empty file is a
//! valid configuration; unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::channel::{ArrayConfig, Point, PropagationParams};
use crate::energy::{max_efficiency_velocity, RotorParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("failed to parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Which problem is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// No charging between the UAVs; the episode ends through the return guard.
    P1,
    /// Charging enabled; options chosen by the learner.
    P2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    CtMaddpg,
    Maddpoc,
    /// MADDPOC without option masking.
    MaddpocNm,
    /// MADDPOC with one joint actor for both UAVs.
    Ddpoc,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::CtMaddpg => "ct_maddpg",
            Algorithm::Maddpoc => "maddpoc",
            Algorithm::MaddpocNm => "maddpoc_nm",
            Algorithm::Ddpoc => "ddpoc",
        }
    }

    pub fn uses_options(&self) -> bool {
        !matches!(self, Algorithm::CtMaddpg)
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ct_maddpg" => Ok(Algorithm::CtMaddpg),
            "maddpoc" => Ok(Algorithm::Maddpoc),
            "maddpoc_nm" => Ok(Algorithm::MaddpocNm),
            "ddpoc" => Ok(Algorithm::Ddpoc),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

/// Scenario geometry, power budget and reward constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvParams {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    /// MUAV altitude (m).
    pub h_m: f64,
    /// AUAV altitude (m).
    pub h_a: f64,
    pub charging_station: Point,
    /// Slot duration δτ (s).
    pub slot_duration: f64,
    /// Slots between ground-node switches.
    pub link_switch_slots: usize,
    pub p_t_max: f64,
    /// Charging power radiated by the MUAV (W).
    pub p_c: f64,
    pub v_max: f64,
    /// Coverage radius of the MUAV around the linked ground node (m).
    pub coverage: f64,
    /// RF-to-DC conversion efficiency.
    pub alpha_c: f64,
    /// MUAV energy above which termination is masked (J).
    pub e_th: f64,
    pub e_m_max: f64,
    pub e_a_max: f64,
    pub num_gns: usize,
    /// Explicit ground-node coordinates; sampled from the run seed when absent.
    pub gn_positions: Option<Vec<Point>>,
    pub kappa_th: f64,
    pub kappa_cb: f64,
    pub kappa_dc: f64,
    pub kappa_po: f64,
    /// Horizontal gap under which the charging UAVs hover (m).
    pub overlap_tolerance: f64,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self {
            x_min: -100.0,
            x_max: 100.0,
            y_min: -100.0,
            y_max: 100.0,
            h_m: 100.0,
            h_a: 98.0,
            charging_station: Point::new(-75.0, 0.0),
            slot_duration: 0.5,
            link_switch_slots: 30,
            p_t_max: 10.0,
            p_c: 5000.0,
            v_max: 20.0,
            coverage: 25.0,
            alpha_c: 0.9,
            e_th: 5000.0,
            e_m_max: 35000.0,
            e_a_max: 15000.0,
            num_gns: 10,
            gn_positions: None,
            kappa_th: 1.2,
            kappa_cb: -5.0,
            kappa_dc: -5.0,
            kappa_po: -1000.0,
            overlap_tolerance: 0.5,
        }
    }
}

impl EnvParams {
    pub fn contains(&self, p: &Point) -> bool {
        (self.x_min..=self.x_max).contains(&p.x) && (self.y_min..=self.y_max).contains(&p.y)
    }

    pub fn clip(&self, p: &Point) -> Point {
        Point::new(p.x.clamp(self.x_min, self.x_max), p.y.clamp(self.y_min, self.y_max))
    }
}

/// Learning hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainParams {
    pub gamma: f64,
    /// Soft replace rate.
    pub tau: f64,
    pub batch_size: usize,
    /// Capacity of each replay buffer.
    pub capacity: usize,
    pub episodes: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Hidden layer widths shared by every network.
    pub hidden: Vec<usize>,
    /// Initial noise standard deviations on the normalized action scale.
    pub sigma_velocity: f64,
    pub sigma_azimuth: f64,
    pub sigma_power: f64,
    pub noise_decay_rate: f64,
    pub noise_decay_every: usize,
    pub noise_decay_start: usize,
    /// Magnitude subtracted from the termination value while masked.
    pub q_mask: f64,
    /// Multiplier applied to rewards before they enter any learning target.
    pub reward_scale: f64,
    /// Any loss above this magnitude (or non-finite) aborts training.
    pub loss_abort: f64,
}

impl Default for TrainParams {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            tau: 0.001,
            batch_size: 128,
            capacity: 30000,
            episodes: 1500,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            hidden: vec![64, 64],
            sigma_velocity: 0.15,
            sigma_azimuth: 0.3,
            sigma_power: 0.15,
            noise_decay_rate: 0.99,
            noise_decay_every: 2,
            noise_decay_start: 1000,
            q_mask: 1e6,
            reward_scale: 0.01,
            loss_abort: 1e8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    pub output_dir: String,
    pub propagation: PropagationParams,
    pub arrays: ArrayConfig,
    pub rotor: RotorParams,
    pub env: EnvParams,
    pub train: TrainParams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: Mode::P2,
            algorithm: Algorithm::Maddpoc,
            seeds: vec![0],
            output_dir: "runs".into(),
            propagation: PropagationParams::default(),
            arrays: ArrayConfig::default(),
            rotor: RotorParams::default(),
            env: EnvParams::default(),
            train: TrainParams::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// SHA-256 of the canonical TOML rendering, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }

    /// Hash of everything that shapes a single seed's run: the seed list and
    /// output directory are cleared first, so every seed of a run and every
    /// output location share one identity.
    pub fn run_hash(&self) -> String {
        let mut c = self.clone();
        c.seeds.clear();
        c.output_dir.clear();
        c.hash()
    }

    /// Directory name of a run: `<algorithm>-<mode>-<first 8 hex of run_hash>`.
    pub fn run_id(&self) -> String {
        let mode = match self.mode {
            Mode::P1 => "p1",
            Mode::P2 => "p2",
        };
        format!("{}-{}-{}", self.algorithm.name(), mode, &self.run_hash()[..8])
    }

    /// The desk-scale training setup used by the learning smoke checks.
    pub fn smoke(algorithm: Algorithm) -> Self {
        let mut cfg = Self {
            algorithm,
            mode: if algorithm == Algorithm::CtMaddpg { Mode::P1 } else { Mode::P2 },
            seeds: vec![1, 2, 3],
            ..Self::default()
        };
        cfg.env.num_gns = 4;
        cfg.env.e_m_max = 15000.0;
        cfg.env.e_a_max = 8000.0;
        cfg.train.episodes = 300;
        cfg.train.capacity = 1000;
        cfg.train.noise_decay_start = 150;
        cfg.train.noise_decay_every = 2;
        cfg.train.noise_decay_rate = 0.97;
        cfg
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.propagation.validate().map_err(|m| invalid("propagation", m))?;
        self.arrays.validate().map_err(|m| invalid("arrays", m))?;
        self.rotor.validate().map_err(|m| invalid("rotor", m))?;
        let e = &self.env;
        if !(e.x_min < e.x_max && e.y_min < e.y_max) {
            return Err(invalid("env.x_min", "area bounds must satisfy min < max"));
        }
        if !(e.h_m > e.h_a && e.h_a > 0.0) {
            return Err(invalid("env.h_m", "altitudes must satisfy h_m > h_a > 0"));
        }
        if !e.contains(&e.charging_station) {
            return Err(invalid("env.charging_station", "must lie inside the area"));
        }
        let positive = [
            ("env.slot_duration", e.slot_duration),
            ("env.p_t_max", e.p_t_max),
            ("env.p_c", e.p_c),
            ("env.v_max", e.v_max),
            ("env.coverage", e.coverage),
            ("env.e_m_max", e.e_m_max),
            ("env.e_a_max", e.e_a_max),
        ];
        for (field, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(invalid(field, "must be positive"));
            }
        }
        if !(e.alpha_c > 0.0 && e.alpha_c <= 1.0) {
            return Err(invalid("env.alpha_c", "must lie in (0, 1]"));
        }
        if e.link_switch_slots == 0 {
            return Err(invalid("env.link_switch_slots", "must be at least 1"));
        }
        if !(e.e_th >= 0.0 && e.e_th <= e.e_a_max) {
            return Err(invalid("env.e_th", "must satisfy 0 <= e_th <= e_a_max"));
        }
        if e.num_gns == 0 {
            return Err(invalid("env.num_gns", "must be at least 1"));
        }
        if let Some(gns) = &e.gn_positions {
            if gns.len() != e.num_gns {
                return Err(invalid(
                    "env.gn_positions",
                    format!("expected {} positions, got {}", e.num_gns, gns.len()),
                ));
            }
            if gns.iter().any(|p| !e.contains(p)) {
                return Err(invalid("env.gn_positions", "every ground node must lie inside the area"));
            }
        }
        if e.overlap_tolerance < 0.0 {
            return Err(invalid("env.overlap_tolerance", "must be non-negative"));
        }
        let v_mee = max_efficiency_velocity(&self.rotor, e.v_max);
        if v_mee > e.v_max {
            return Err(invalid("env.v_max", "max-efficiency velocity exceeds v_max"));
        }
        let t = &self.train;
        if !(0.0..=1.0).contains(&t.gamma) {
            return Err(invalid("train.gamma", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&t.tau) {
            return Err(invalid("train.tau", "must lie in [0, 1]"));
        }
        if t.batch_size == 0 || t.capacity < t.batch_size {
            return Err(invalid("train.capacity", "must be at least batch_size (> 0)"));
        }
        if t.hidden.is_empty() || t.hidden.contains(&0) {
            return Err(invalid("train.hidden", "needs at least one non-empty hidden layer"));
        }
        if t.noise_decay_every == 0 {
            return Err(invalid("train.noise_decay_every", "must be at least 1"));
        }
        if !(t.learning_rate >= 0.0 && t.reward_scale > 0.0 && t.q_mask > 0.0 && t.loss_abort > 0.0) {
            return Err(invalid("train", "learning_rate >= 0, reward_scale, q_mask, loss_abort > 0"));
        }
        if self.mode == Mode::P2 && self.algorithm == Algorithm::CtMaddpg {
            return Err(invalid("algorithm", "ct_maddpg runs the non-charging mode p1"));
        }
        if self.mode == Mode::P1 && self.algorithm != Algorithm::CtMaddpg {
            return Err(invalid("mode", "option-based algorithms run the charging mode p2"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert_eq!(cfg.env.slot_duration, 0.5);
        assert_eq!(cfg.train.episodes, 1500);
    }

    #[test]
    fn threshold_above_auav_capacity_rejected() {
        let err = ExperimentConfig::from_toml_str("[env]\ne_th = 20000.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref field, .. } if field == "env.e_th"), "{err}");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            ExperimentConfig::from_toml_str("[env]\nbogus = 1\n"),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn gn_override() {
        let cfg = ExperimentConfig::from_toml_str("[env]\nnum_gns = 4\n").unwrap();
        assert_eq!(cfg.env.num_gns, 4);
        let bad = "[env]\nnum_gns = 2\ngn_positions = [{ x = 0.0, y = 0.0 }]\n";
        assert!(ExperimentConfig::from_toml_str(bad).is_err());
    }

    #[test]
    fn round_trip_is_idempotent() {
        let cfg = ExperimentConfig::smoke(Algorithm::Maddpoc);
        let once = cfg.to_toml_string();
        let twice = ExperimentConfig::from_toml_str(&once).unwrap().to_toml_string();
        assert_eq!(once, twice);
        assert_eq!(ExperimentConfig::from_toml_str(&once).unwrap(), cfg);
    }

    #[test]
    fn mode_algorithm_pairing() {
        assert!(ExperimentConfig::from_toml_str("mode = \"p1\"\n").is_err());
        assert!(ExperimentConfig::from_toml_str("mode = \"p1\"\nalgorithm = \"ct_maddpg\"\n").is_ok());
    }
}
