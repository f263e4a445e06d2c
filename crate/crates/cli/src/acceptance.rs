//! The acceptance suite: physics, gradients, environment invariants,
//! learning smoke runs and determinism.

use std::fmt;
use std::path::Path;

use aerial_irs::agents::{
    actor_loss, beta_loss, critic_loss, masked_argmax, q_omega_loss, select_option, Learner,
};
use aerial_irs::channel::{channel_mr, channel_rg, end_to_end_channel, optimal_snr_closed_form, CascadedLink};
use aerial_irs::energy::{max_efficiency_velocity, propulsion_power};
use aerial_irs::env::{AgentAction, SlotRecord, ACTION_DIM, MUAV_ACTION_DIM, NUM_OPTIONS, OBS_DIM};
use aerial_irs::nn::{Activation, Mlp};
use aerial_irs::{Algorithm, Environment, ExperimentConfig, Geometry, Mode, OptionId, Point};
use anyhow::{Context, Result};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::runner;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(id: u32, name: &str, passed: bool, detail: String) -> Self {
        Self {
            id,
            name: name.to_string(),
            passed,
            detail,
        }
    }

    fn error(id: u32, name: &str, err: anyhow::Error) -> Self {
        Self::new(id, name, false, format!("error: {err:#}"))
    }

    pub fn errored(&self) -> bool {
        self.detail.starts_with("error:")
    }
}

/// Criteria whose outcome depends on RL training luck. Their verdicts are
/// printed like any other, but only an error inside them fails the test target.
pub const STOCHASTIC: [u32; 2] = [8, 9];

/// Whether a result should fail the `acceptance` test target.
pub fn gates(r: &CheckResult) -> bool {
    !r.passed && (!STOCHASTIC.contains(&r.id) || r.errored())
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{verdict}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Hover power against the sum of blade-profile and induced power.
pub fn hover_power(cfg: &ExperimentConfig) -> CheckResult {
    let p0 = propulsion_power(0.0, &cfg.rotor);
    let expected = cfg.rotor.profile_power + cfg.rotor.induced_power;
    let passed = (p0 - 168.49).abs() <= 0.01 && (p0 - expected).abs() <= 1e-9;
    CheckResult::new(1, "hover power", passed, format!("P(0) = {p0:.4} W (target 168.49 ± 0.01)"))
}

/// Grid search for the speed that minimizes energy per metre.
pub fn max_efficiency_speed(cfg: &ExperimentConfig) -> CheckResult {
    let (mut best_v, mut best_cost) = (0.0, f64::INFINITY);
    for k in 1..=2000 {
        let v = k as f64 * 0.01;
        let cost = propulsion_power(v, &cfg.rotor) / v;
        if cost < best_cost {
            (best_v, best_cost) = (v, cost);
        }
    }
    let lib = max_efficiency_velocity(&cfg.rotor, 20.0);
    let passed = (17.8..=18.8).contains(&best_v) && (lib - best_v).abs() < 1e-9;
    CheckResult::new(
        2,
        "max-efficiency velocity",
        passed,
        format!("v_mee = {best_v:.2} m/s (library {lib:.2}, window [17.8, 18.8])"),
    )
}

fn random_point<R: Rng>(cfg: &ExperimentConfig, rng: &mut R) -> Point {
    let e = &cfg.env;
    Point::new(rng.random_range(e.x_min..=e.x_max), rng.random_range(e.y_min..=e.y_max))
}

/// Matrix-pipeline SNR with optimal phases against the closed form, and
/// against the best beamformer for each of many random phase vectors.
pub fn irs_phase_optimality(cfg: &ExperimentConfig, geometries: usize, random_phases: usize, seed: u64) -> CheckResult {
    const NAME: &str = "optimal IRS phase";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (p_t, noise) = (cfg.env.p_t_max, cfg.propagation.noise_power);
    let mut worst_rel = 0.0f64;
    let mut worst_ratio = 0.0f64;
    let mut done = 0;
    while done < geometries {
        let g = Geometry {
            muav: random_point(cfg, &mut rng),
            auav: random_point(cfg, &mut rng),
            gn: random_point(cfg, &mut rng),
            h_m: cfg.env.h_m,
            h_a: cfg.env.h_a,
        };
        let link = match CascadedLink::optimal(&g, &cfg.arrays, &cfg.propagation) {
            Ok(l) => l,
            Err(_) => continue,
        };
        let (h_mr, h_rg) = match (
            channel_mr(&g, &cfg.arrays, &cfg.propagation),
            channel_rg(&g, &cfg.arrays, &cfg.propagation),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return CheckResult::error(3, NAME, e.into()),
        };
        let optimal = link.snr(p_t, noise);
        let closed = optimal_snr_closed_form(p_t, &cfg.arrays, link.alpha_mr, link.alpha_rg, noise);
        worst_rel = worst_rel.max(rel(optimal, closed));
        let mut phases = vec![0.0; cfg.arrays.s_r()];
        for _ in 0..random_phases {
            phases.iter_mut().for_each(|p| *p = rng.random_range(0.0..std::f64::consts::TAU));
            let h = match end_to_end_channel(&h_rg, &phases, &h_mr) {
                Ok(h) => h,
                Err(e) => return CheckResult::error(3, NAME, e.into()),
            };
            // MRT on the resulting channel is the best any beamformer can do.
            let best = p_t * h.iter().map(|c| c.norm_sqr()).sum::<f64>() / noise;
            worst_ratio = worst_ratio.max(best / optimal);
        }
        done += 1;
    }
    let passed = worst_rel <= 1e-9 && worst_ratio <= 1.0 + 1e-9;
    CheckResult::new(
        3,
        NAME,
        passed,
        format!(
            "{geometries} geometries, S_R = {}: max rel. err vs closed form {worst_rel:.2e}, \
             best random/optimal SNR ratio {worst_ratio:.4}",
            cfg.arrays.s_r()
        ),
    )
}

fn finite_difference(theta: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let h = 1e-6;
    let mut p = theta.to_vec();
    (0..theta.len())
        .map(|i| {
            p[i] = theta[i] + h;
            let plus = f(&p);
            p[i] = theta[i] - h;
            let minus = f(&p);
            p[i] = theta[i];
            (plus - minus) / (2.0 * h)
        })
        .collect()
}

fn normwise_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / na.max(nb).max(1e-12)
}

fn with_params(net: &Mlp, theta: &[f64]) -> Mlp {
    let mut n = net.clone();
    n.set_params(theta).expect("same parameter count");
    n
}

fn uniform<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-1.0..1.0))
}

/// Analytic against central-difference gradients for every network role
/// (parameters and inputs) and every training loss.
pub fn gradient_oracle(instances: usize, seed: u64) -> CheckResult {
    const NAME: &str = "gradient oracle";
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hidden = [24, 24];
    let batch = 6;
    let sizes = |i: usize, o: usize| [i, hidden[0], hidden[1], o];
    let roles: [(&str, [usize; 4], Activation); 4] = [
        ("actor", sizes(OBS_DIM, MUAV_ACTION_DIM), Activation::Tanh),
        ("critic", sizes(OBS_DIM + ACTION_DIM, 1), Activation::Identity),
        ("option value", sizes(OBS_DIM, NUM_OPTIONS), Activation::Identity),
        ("termination", sizes(OBS_DIM, NUM_OPTIONS), Activation::Sigmoid),
    ];
    let mut worst: Vec<(String, f64)> = Vec::new();
    let mut record = |name: &str, err: f64| match worst.iter_mut().find(|(n, _)| n == name) {
        Some(w) => w.1 = w.1.max(err),
        None => worst.push((name.to_string(), err)),
    };

    for _ in 0..instances {
        for (name, s, out) in &roles {
            let net = Mlp::new(s, Activation::Relu, *out, &mut rng);
            let x = uniform(batch, s[0], &mut rng);
            let up = uniform(batch, s[3], &mut rng);
            let cache = net.forward_cached(&x).expect("shape");
            let (g, dx) = net.backward(&cache, &up);
            let fd = finite_difference(&net.params(), |t| (with_params(&net, t).forward(&x).unwrap() * &up).sum());
            record(name, normwise_error(&g.flatten(), &fd));
            let x_flat: Vec<f64> = x.iter().copied().collect();
            let fd_x = finite_difference(&x_flat, |v| {
                let xi = Array2::from_shape_vec((batch, s[0]), v.to_vec()).unwrap();
                (net.forward(&xi).unwrap() * &up).sum()
            });
            let dx_flat: Vec<f64> = dx.iter().copied().collect();
            record(&format!("{name} input"), normwise_error(&dx_flat, &fd_x));
        }

        let obs = uniform(batch, OBS_DIM, &mut rng);
        let actions = uniform(batch, ACTION_DIM, &mut rng);
        let critic = Mlp::new(&roles[1].1, Activation::Relu, Activation::Identity, &mut rng);
        let actor = Mlp::new(&roles[0].1, Activation::Relu, Activation::Tanh, &mut rng);
        let q = Mlp::new(&roles[2].1, Activation::Relu, Activation::Identity, &mut rng);
        let beta = Mlp::new(&roles[3].1, Activation::Relu, Activation::Sigmoid, &mut rng);
        let y = Array1::from_shape_simple_fn(batch, || rng.random_range(-2.0..2.0));
        let options: Vec<usize> = (0..batch).map(|_| rng.random_range(0..NUM_OPTIONS)).collect();
        let adv = Array1::from_shape_simple_fn(batch, || rng.random_range(-2.0..0.0));
        let dones: Vec<bool> = (0..batch).map(|_| rng.random_bool(0.2)).collect();

        let (_, g) = critic_loss(&critic, &obs, &actions, &y).expect("shape");
        let fd = finite_difference(&critic.params(), |t| critic_loss(&with_params(&critic, t), &obs, &actions, &y).unwrap().0);
        record("critic loss", normwise_error(&g.flatten(), &fd));

        let cols = 0..MUAV_ACTION_DIM;
        let (_, g) = actor_loss(&critic, &actor, cols.clone(), &obs, &actions).expect("shape");
        let fd = finite_difference(&actor.params(), |t| {
            actor_loss(&critic, &with_params(&actor, t), cols.clone(), &obs, &actions).unwrap().0
        });
        record("actor loss", normwise_error(&g.flatten(), &fd));

        let (_, g) = q_omega_loss(&q, &obs, &options, &y).expect("shape");
        let fd = finite_difference(&q.params(), |t| q_omega_loss(&with_params(&q, t), &obs, &options, &y).unwrap().0);
        record("option-value loss", normwise_error(&g.flatten(), &fd));

        let (_, g) = beta_loss(&beta, &obs, &options, &adv, &dones).expect("shape");
        let fd = finite_difference(&beta.params(), |t| beta_loss(&with_params(&beta, t), &obs, &options, &adv, &dones).unwrap().0);
        record("termination loss", normwise_error(&g.flatten(), &fd));
    }
    let max = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    let (arg, _) = worst.iter().find(|w| w.1 == max).cloned().unwrap_or_default();
    CheckResult::new(
        4,
        NAME,
        max < 1e-4,
        format!("{} gradients x {instances} instances, max normwise rel. err {max:.2e} ({arg})", worst.len()),
    )
}

fn random_action<R: Rng>(rng: &mut R) -> [f64; ACTION_DIM] {
    std::array::from_fn(|_| rng.random_range(-1.0..=1.0))
}

/// Random-policy episodes with charging: battery ledgers, capacity clamp and
/// the power-off penalty.
pub fn energy_ledger(cfg: &ExperimentConfig, episodes: usize, seed: u64) -> CheckResult {
    const NAME: &str = "energy ledger";
    let mut cfg = cfg.clone();
    cfg.mode = Mode::P2;
    cfg.algorithm = Algorithm::Maddpoc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut over_capacity = 0usize;
    let (mut power_offs, mut bad_penalty) = (0usize, 0usize);
    let kappa_po = cfg.env.kappa_po;
    for ep in 0..episodes {
        let mut env = Environment::new(&cfg, seed.wrapping_add(ep as u64));
        env.reset();
        let mut penalties = 0usize;
        let mut ended_by_power_off = false;
        while !env.is_done() {
            let before = env.state().clone();
            let prev = env.prev_option();
            let n = if env.termination_masked() { 2 } else { 3 };
            let option = OptionId::from_index(rng.random_range(0..n)).expect("index");
            let action = AgentAction::from_normalized(&random_action(&mut rng), &env.params);
            let out = match env.step(option, &action) {
                Ok(o) => o,
                Err(e) => return CheckResult::error(5, NAME, e.into()),
            };
            let after = env.state();
            let e_m_expected = before.e_m - out.flows.muav_spent();
            let e_a_expected = before.e_a + out.flows.auav_net();
            worst = worst
                .max((after.e_m - e_m_expected).abs() / cfg.env.e_m_max)
                .max((after.e_a - e_a_expected).abs() / cfg.env.e_a_max);
            over_capacity += out.slots.iter().filter(|s| s.e_a > cfg.env.e_a_max).count();
            let switched = prev == OptionId::Communicate && option != OptionId::Communicate;
            let r_dc = if out.terminal || switched { cfg.env.kappa_dc } else { 0.0 };
            let residual = out.option_reward - out.reward - r_dc;
            if (residual - kappa_po).abs() < 1e-9 {
                penalties += 1;
            } else if residual.abs() > 1e-9 {
                bad_penalty += 1;
            }
            ended_by_power_off = out.terminal && (after.e_m <= 0.0 || after.e_a <= 0.0);
        }
        if ended_by_power_off {
            power_offs += 1;
        }
        if penalties != usize::from(ended_by_power_off) {
            bad_penalty += 1;
        }
    }
    let passed = worst <= 1e-6 && over_capacity == 0 && bad_penalty == 0;
    CheckResult::new(
        5,
        NAME,
        passed,
        format!(
            "{episodes} episodes, max ledger residual {worst:.2e} (rel.), {over_capacity} slots above E_Amax, \
             {power_offs} power-offs, {bad_penalty} penalty mismatches"
        ),
    )
}

fn leftover_at(env: &Environment, r: &SlotRecord) -> (f64, f64) {
    let station = env.params.charging_station;
    let e_ml = r.e_m - env.energy.return_energy(Point::new(r.x_m, r.y_m).distance(&station));
    let e_al = r.e_a - env.energy.return_energy(Point::new(r.x_a, r.y_a).distance(&station));
    (e_ml, e_al)
}

/// Episodes without charging under random actions: each must end back at
/// the station with the return paid for.
pub fn p1_guard(cfg: &ExperimentConfig, episodes: usize, seed: u64) -> CheckResult {
    const NAME: &str = "P1 guard";
    let mut cfg = cfg.clone();
    cfg.mode = Mode::P1;
    cfg.algorithm = Algorithm::CtMaddpg;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut not_home, mut negative, mut outside) = (0usize, 0usize, 0usize);
    let mut min_leftover = f64::INFINITY;
    for ep in 0..episodes {
        let mut env = Environment::new(&cfg, seed.wrapping_add(ep as u64));
        env.reset();
        let mut rows = vec![env.initial_record()];
        while !env.is_done() {
            let action = AgentAction::from_normalized(&random_action(&mut rng), &env.params);
            match env.step(OptionId::Communicate, &action) {
                Ok(out) => rows.extend(out.slots),
                Err(e) => return CheckResult::error(6, NAME, e.into()),
            }
        }
        outside += rows
            .iter()
            .filter(|r| !env.params.contains(&Point::new(r.x_m, r.y_m)) || !env.params.contains(&Point::new(r.x_a, r.y_a)))
            .count();
        let first_return = rows.iter().position(|r| r.option == Some(OptionId::Terminate));
        match first_return {
            Some(i) if i > 0 => {
                let (m, a) = leftover_at(&env, &rows[i - 1]);
                min_leftover = min_leftover.min(m.min(a));
                if m < 0.0 || a < 0.0 {
                    negative += 1;
                }
            }
            _ => not_home += 1,
        }
        let last = rows.last().expect("initial row");
        let station = env.params.charging_station;
        let home = Point::new(last.x_m, last.y_m) == station && Point::new(last.x_a, last.y_a) == station;
        if !home || last.e_m < 0.0 || last.e_a < 0.0 {
            not_home += 1;
        }
    }
    let passed = not_home == 0 && negative == 0 && outside == 0;
    CheckResult::new(
        6,
        NAME,
        passed,
        format!(
            "{episodes} episodes: {not_home} not home, {negative} negative leftovers at firing \
             (min {min_leftover:.1} J), {outside} rows outside the area"
        ),
    )
}

/// Greedy and probabilistic option selection with the termination mask on,
/// over synthetic states and value vectors and through a real option critic.
pub fn option_mask(cfg: &ExperimentConfig, states: usize, seed: u64) -> CheckResult {
    let mut cfg = cfg.clone();
    cfg.mode = Mode::P2;
    cfg.algorithm = Algorithm::Maddpoc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut env = Environment::new(&cfg, seed);
    let learner = Learner::new(&cfg, seed);
    let e = cfg.env.clone();
    let mut violations = 0usize;
    for i in 0..states {
        let e_m = rng.random_range(e.e_th..=e.e_m_max).max(e.e_th + 1e-9);
        let e_a = rng.random_range(0.0..=e.e_a_max);
        env.set_state(random_point(&cfg, &mut rng), random_point(&cfg, &mut rng), e_m, e_a, i % 300);
        let masked = env.termination_masked();
        let q: [f64; NUM_OPTIONS] = match i % 4 {
            0 => std::array::from_fn(|_| rng.random_range(-10.0..10.0)),
            1 => [rng.random_range(-1e3..0.0), rng.random_range(-1e3..0.0), rng.random_range(0.0..1e300)],
            2 => [-1e300, -1e300, 1e300],
            _ => std::array::from_fn(|_| rng.random_range(-1e6..1e6)),
        };
        let beta = rng.random_range(0.0..=1.0);
        let prev = rng.random_range(0..2);
        let chosen_net = learner.choose_option(&env.observe(), prev, masked, &mut rng);
        if !masked
            || masked_argmax(&q, masked) == 2
            || select_option(&q, beta, prev, masked, &mut rng) == 2
            || select_option(&q, 1.0, prev, masked, &mut rng) == 2
            || chosen_net.map_or(true, |o| o == 2)
        {
            violations += 1;
        }
    }
    CheckResult::new(
        7,
        "option-mask invariance",
        violations == 0,
        format!("{states} masked states, termination returned {violations} times"),
    )
}

/// Per-seed results of the smoke training runs.
#[derive(Debug, Clone)]
pub struct SmokeRun {
    pub seed: u64,
    pub first50: f64,
    pub last50: f64,
    pub eval_throughput: f64,
}

#[derive(Debug, Clone)]
pub struct SmokeResults {
    pub maddpoc: Vec<SmokeRun>,
    pub ct_maddpg: Vec<SmokeRun>,
}

fn window_mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn smoke_algorithm(algorithm: Algorithm, out: &Path) -> Result<Vec<SmokeRun>> {
    let mut cfg = ExperimentConfig::smoke(algorithm);
    cfg.output_dir = out.to_string_lossy().into_owned();
    let mut runs = Vec::new();
    for mut t in runner::train(&cfg)? {
        let (report, _) = runner::evaluate_learner(&cfg, &mut t.learner, t.seed)?;
        let n = t.rewards.len();
        runs.push(SmokeRun {
            seed: t.seed,
            first50: window_mean(&t.rewards[..n.min(50)]),
            last50: window_mean(&t.rewards[n.saturating_sub(50)..]),
            eval_throughput: report.throughput,
        });
    }
    Ok(runs)
}

/// Trains MADDPOC and CT-MADDPG on the smoke configuration.
pub fn smoke_training(out: &Path) -> Result<SmokeResults> {
    Ok(SmokeResults {
        maddpoc: smoke_algorithm(Algorithm::Maddpoc, out)?,
        ct_maddpg: smoke_algorithm(Algorithm::CtMaddpg, out)?,
    })
}

/// "At least doubles" for a possibly negative baseline: the gain must be at
/// least the baseline's magnitude.
pub fn doubled(first: f64, last: f64) -> bool {
    last - first >= first.abs()
}

pub fn reward_growth(r: &SmokeResults) -> CheckResult {
    let detail = r
        .maddpoc
        .iter()
        .map(|s| format!("seed {}: {:.1} -> {:.1}", s.seed, s.first50, s.last50))
        .collect::<Vec<_>>()
        .join(", ");
    let passed = !r.maddpoc.is_empty() && r.maddpoc.iter().all(|s| doubled(s.first50, s.last50));
    CheckResult::new(8, "RL smoke reward growth", passed, detail)
}

pub fn charging_advantage(r: &SmokeResults) -> CheckResult {
    let mean = |v: &[SmokeRun]| window_mean(&v.iter().map(|s| s.eval_throughput).collect::<Vec<_>>());
    let (m, c) = (mean(&r.maddpoc), mean(&r.ct_maddpg));
    CheckResult::new(
        9,
        "charging advantage",
        !r.maddpoc.is_empty() && m >= c,
        format!("mean eval throughput MADDPOC {m:.1} vs CT-MADDPG {c:.1} bit/Hz"),
    )
}

fn files_equal(a: &Path, b: &Path) -> Result<bool> {
    let read = |p: &Path| std::fs::read(p).with_context(|| format!("reading {}", p.display()));
    Ok(read(a)? == read(b)?)
}

fn determinism_inner(base: &Path) -> Result<(usize, Vec<String>)> {
    let mut cfg = ExperimentConfig::smoke(Algorithm::Maddpoc);
    cfg.seeds = vec![11, 12];
    cfg.train.episodes = 40;
    cfg.train.capacity = 200;
    cfg.train.batch_size = 32;
    let live = base.join("out");
    cfg.output_dir = live.to_string_lossy().into_owned();
    let run = runner::run_dir(&cfg);
    let mut names = vec!["config-resolved.toml".to_string()];
    for &s in &cfg.seeds {
        for (stem, ext) in [("metrics", "jsonl"), ("checkpoint", "json"), ("trajectory", "csv"), ("eval", "json")] {
            names.push(format!("{stem}-{s}.{ext}"));
        }
    }
    // Both invocations write to the same place; the first is moved aside.
    let first = base.join("first");
    for pass in 0..2 {
        runner::train(&cfg)?;
        runner::evaluate(&cfg)?;
        runner::physics_report(&cfg)?;
        if pass == 0 {
            std::fs::rename(&live, &first)?;
        }
    }
    let first_run = first.join(run.file_name().expect("run id"));
    let mut differ = Vec::new();
    for n in &names {
        if !files_equal(&first_run.join(n), &run.join(n))? {
            differ.push(n.clone());
        }
    }
    let report = "physics-report.json";
    if !files_equal(&first.join(report), &live.join(report))? {
        differ.push(report.to_string());
    }
    Ok((names.len() + 1, differ))
}

/// Two identical train, eval and physics-report invocations must write
/// byte-identical artifacts (wall-clock timing files excepted).
pub fn determinism(base: &Path) -> CheckResult {
    const NAME: &str = "determinism";
    match determinism_inner(base) {
        Ok((n, differ)) if differ.is_empty() => {
            CheckResult::new(10, NAME, true, format!("{n} artifacts from train, eval and physics-report byte-identical"))
        }
        Ok((n, differ)) => CheckResult::new(10, NAME, false, format!("{} of {n} artifacts differ: {}", differ.len(), differ.join(", "))),
        Err(e) => CheckResult::error(10, NAME, e),
    }
}

/// Criteria 1 to 3 on the given configuration.
pub fn physics_suite(cfg: &ExperimentConfig) -> Vec<CheckResult> {
    vec![
        hover_power(cfg),
        max_efficiency_speed(cfg),
        irs_phase_optimality(cfg, 200, 1000, 3),
    ]
}

/// Every criterion, in order, on the default configuration. Smoke runs and
/// determinism artifacts go under `scratch`.
pub fn run_all(scratch: &Path, mut on_result: impl FnMut(&CheckResult)) -> Vec<CheckResult> {
    let cfg = ExperimentConfig::default();
    let mut results = Vec::new();
    let mut push = |r: CheckResult| {
        on_result(&r);
        results.push(r);
    };
    for r in physics_suite(&cfg) {
        push(r);
    }
    push(gradient_oracle(20, 4));
    push(energy_ledger(&cfg, 100, 5));
    push(p1_guard(&cfg, 100, 6));
    push(option_mask(&cfg, 100_000, 7));
    match smoke_training(&scratch.join("smoke")) {
        Ok(s) => {
            push(reward_growth(&s));
            push(charging_advantage(&s));
        }
        Err(e) => {
            let msg = format!("{e:#}");
            push(CheckResult::error(8, "RL smoke reward growth", anyhow::anyhow!(msg.clone())));
            push(CheckResult::error(9, "charging advantage", anyhow::anyhow!(msg)));
        }
    }
    push(determinism(&scratch.join("determinism")));
    results
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stochastic_failures_do_not_gate() {
        let fail = |id| CheckResult::new(id, "x", false, "measured".into());
        assert!(gates(&fail(3)));
        assert!(!gates(&fail(8)));
        assert!(gates(&CheckResult::error(9, "x", anyhow::anyhow!("boom"))));
        assert!(!gates(&CheckResult::new(1, "x", true, String::new())));
    }

    #[test]
    fn doubling_rule() {
        assert!(doubled(10.0, 20.0));
        assert!(!doubled(10.0, 19.9));
        assert!(doubled(-100.0, 0.0));
        assert!(!doubled(-100.0, -1.0));
        assert!(doubled(0.0, 0.0));
    }

    #[test]
    fn display_line() {
        let r = CheckResult::new(3, "x", false, "y".into());
        assert_eq!(r.to_string(), "[FAIL]  3 x: y");
    }

    #[test]
    fn fast_checks_pass_on_defaults() {
        let cfg = ExperimentConfig::default();
        assert!(hover_power(&cfg).passed);
        assert!(max_efficiency_speed(&cfg).passed);
        assert!(irs_phase_optimality(&cfg, 3, 20, 1).passed);
        assert!(gradient_oracle(1, 1).passed);
        assert!(option_mask(&cfg, 200, 1).passed);
    }
}
