//! CT-MADDPG and MADDPOC learners.
//!
//! Both share the actor-critic core: one actor per UAV (or a single joint
//! actor for DDPOC) and a global critic over the observation and the joint
//! action. MADDPOC adds the option-value network `Q_Ω` and the termination
//! network `β`, trained from a separate replay buffer.
//!
//! Every network sees the normalized observation from
//! [`Environment::normalize`] and acts on the `[-1, 1]` action scale.

use std::ops::Range;

use ndarray::{s, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{Algorithm, ExperimentConfig, TrainParams};
use crate::env::{
    AgentAction, EnvError, Environment, OptionId, SlotRecord, ACTION_DIM, AUAV_ACTION_DIM, MUAV_ACTION_DIM,
    NUM_OPTIONS, OBS_DIM,
};
use crate::nn::{stack_rows, Activation, Adam, Gradients, Mlp, NnError, NoiseSchedule, ReplayBuffer};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("{loss} loss diverged to {value} in episode {episode}")]
    Diverged {
        loss: &'static str,
        value: f64,
        episode: usize,
    },
    #[error("checkpoint does not match: {0}")]
    Checkpoint(String),
}

/// Record of one communication slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionTransition {
    pub obs: [f64; OBS_DIM],
    /// Joint action on the normalized scale.
    pub action: [f64; ACTION_DIM],
    pub reward: f64,
    pub next_obs: [f64; OBS_DIM],
    pub done: bool,
}

/// Record of one option decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionTransition {
    pub obs: [f64; OBS_DIM],
    pub reward: f64,
    pub next_obs: [f64; OBS_DIM],
    pub option: usize,
    pub prev_option: usize,
    pub done: bool,
    /// Termination masked at `obs` / `next_obs`.
    pub masked: bool,
    pub next_masked: bool,
}

/// `Q_Ω` with the termination option pushed down by `q_m` while masked.
pub fn masked_q(q: &[f64; NUM_OPTIONS], masked: bool, q_m: f64) -> [f64; NUM_OPTIONS] {
    let mut out = *q;
    if masked {
        out[OptionId::Terminate.index()] -= q_m;
    }
    out
}

/// Index of the largest value; ties go to the lowest index. A masked
/// termination option is excluded outright, so the result never depends on
/// how large `q_m` is relative to the values.
pub fn masked_argmax(q: &[f64; NUM_OPTIONS], masked: bool) -> usize {
    let limit = if masked { OptionId::Terminate.index() } else { NUM_OPTIONS };
    let mut best = 0;
    for i in 1..limit {
        if q[i] > q[best] {
            best = i;
        }
    }
    best
}

pub fn masked_max(q: &[f64; NUM_OPTIONS], masked: bool) -> f64 {
    q[masked_argmax(q, masked)]
}

/// Probabilistic over-option policy: keep `prev` with probability
/// `1 − β(o, prev)`, otherwise pick greedily over the masked values.
pub fn select_option<R: Rng + ?Sized>(q: &[f64; NUM_OPTIONS], beta_prev: f64, prev: usize, masked: bool, rng: &mut R) -> usize {
    let terminate: f64 = rng.random();
    if terminate < beta_prev {
        masked_argmax(q, masked)
    } else {
        prev
    }
}

/// `y = r + γ·Q'(o', μ'(o'))·(1 − ξ_d)`.
pub fn critic_target(reward: f64, q_next: f64, gamma: f64, done: bool) -> f64 {
    reward + if done { 0.0 } else { gamma * q_next }
}

/// Mixed-probability option target with the double-Q continuation:
/// the new option is chosen by the online values and scored by the target
/// values at the next observation.
#[allow(clippy::too_many_arguments)]
pub fn option_target(
    reward: f64,
    q_online_next: &[f64; NUM_OPTIONS],
    q_target_next: &[f64; NUM_OPTIONS],
    beta_target_next: f64,
    option: usize,
    next_masked: bool,
    gamma: f64,
    done: bool,
) -> f64 {
    if done {
        return reward;
    }
    let new = masked_argmax(q_online_next, next_masked);
    let cont = (1.0 - beta_target_next) * q_target_next[option] + beta_target_next * q_target_next[new];
    reward + gamma * cont
}

/// Option value in probabilistic form:
/// `V = (1 − β(o, ω_prev))·Q(o, ω) + β(o, ω_prev)·max Q(o)`.
pub fn option_value(q: &[f64; NUM_OPTIONS], beta_prev: f64, option: usize, masked: bool) -> f64 {
    (1.0 - beta_prev) * q[option] + beta_prev * masked_max(q, masked)
}

fn row3(a: &Array2<f64>, i: usize) -> [f64; NUM_OPTIONS] {
    [a[[i, 0]], a[[i, 1]], a[[i, 2]]]
}

/// `½·mean (y − Q(o, a))²` and its gradient.
pub fn critic_loss(critic: &Mlp, obs: &Array2<f64>, actions: &Array2<f64>, y: &Array1<f64>) -> Result<(f64, Gradients), NnError> {
    let input = ndarray::concatenate![ndarray::Axis(1), *obs, *actions];
    let cache = critic.forward_cached(&input)?;
    let b = y.len() as f64;
    let diff = &cache.output().column(0) - y;
    let loss = 0.5 * diff.mapv(|d| d * d).sum() / b;
    let grad_out = (diff / b).insert_axis(ndarray::Axis(1));
    Ok((loss, critic.backward(&cache, &grad_out).0))
}

/// `−mean Q(o, a)` where columns `cols` of `a` come from `actor(o)` and the
/// rest from the batch. Only the actor's parameters receive gradient.
pub fn actor_loss(
    critic: &Mlp,
    actor: &Mlp,
    cols: Range<usize>,
    obs: &Array2<f64>,
    actions: &Array2<f64>,
) -> Result<(f64, Gradients), NnError> {
    let actor_cache = actor.forward_cached(obs)?;
    let mut joint = actions.clone();
    joint.slice_mut(s![.., cols.clone()]).assign(actor_cache.output());
    let input = ndarray::concatenate![ndarray::Axis(1), *obs, joint];
    let critic_cache = critic.forward_cached(&input)?;
    let b = obs.nrows() as f64;
    let loss = -critic_cache.output().sum() / b;
    let upstream = Array2::from_elem((obs.nrows(), 1), -1.0 / b);
    let (_, d_input) = critic.backward(&critic_cache, &upstream);
    let d_action = d_input.slice(s![.., OBS_DIM + cols.start..OBS_DIM + cols.end]).to_owned();
    Ok((loss, actor.backward(&actor_cache, &d_action).0))
}

/// `½·mean (y_Ω − Q_Ω(o, ω))²` and its gradient.
pub fn q_omega_loss(q: &Mlp, obs: &Array2<f64>, options: &[usize], y: &Array1<f64>) -> Result<(f64, Gradients), NnError> {
    let cache = q.forward_cached(obs)?;
    let b = y.len() as f64;
    let mut grad_out = Array2::zeros(cache.output().raw_dim());
    let mut loss = 0.0;
    for (i, &w) in options.iter().enumerate() {
        let d = cache.output()[[i, w]] - y[i];
        loss += 0.5 * d * d / b;
        grad_out[[i, w]] = d / b;
    }
    Ok((loss, q.backward(&cache, &grad_out).0))
}

/// `mean β(o, ω_prev)·A_Ω·(1 − ξ_d)` with the advantages held constant.
pub fn beta_loss(
    beta: &Mlp,
    obs: &Array2<f64>,
    prev_options: &[usize],
    advantages: &Array1<f64>,
    dones: &[bool],
) -> Result<(f64, Gradients), NnError> {
    let cache = beta.forward_cached(obs)?;
    let b = advantages.len() as f64;
    let mut grad_out = Array2::zeros(cache.output().raw_dim());
    let mut loss = 0.0;
    for (i, &w) in prev_options.iter().enumerate() {
        let weight = if dones[i] { 0.0 } else { advantages[i] / b };
        loss += cache.output()[[i, w]] * weight;
        grad_out[[i, w]] = weight;
    }
    Ok((loss, beta.backward(&cache, &grad_out).0))
}

fn check_loss(loss: &'static str, value: f64, limit: f64, episode: usize) -> Result<(), AgentError> {
    if !value.is_finite() || value.abs() > limit {
        return Err(AgentError::Diverged { loss, value, episode });
    }
    Ok(())
}

/// Online network, its target copy and its optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackedNet {
    pub online: Mlp,
    pub target: Mlp,
    pub opt: Adam,
}

impl TrackedNet {
    fn new<R: Rng + ?Sized>(sizes: &[usize], output: Activation, tp: &TrainParams, rng: &mut R) -> Self {
        let online = Mlp::new(sizes, Activation::Relu, output, rng);
        Self {
            target: online.clone(),
            opt: Adam::new(&online, tp.learning_rate, tp.adam_beta1, tp.adam_beta2, tp.adam_epsilon),
            online,
        }
    }

    fn apply(&mut self, g: &Gradients, tau: f64) -> Result<(), NnError> {
        self.opt.step(&mut self.online, g);
        self.target.soft_update(&self.online, tau)
    }
}

fn sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut v = vec![input];
    v.extend_from_slice(hidden);
    v.push(output);
    v
}

/// Actors (one per UAV, or one joint actor) and the global critic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub actors: Vec<TrackedNet>,
    /// Columns of the joint action produced by each actor.
    pub splits: Vec<Range<usize>>,
    pub critic: TrackedNet,
}

/// Losses of one gradient step, for diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepLosses {
    pub critic: f64,
    pub actor: f64,
    pub q_omega: f64,
    pub beta: f64,
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(joint_actor: bool, tp: &TrainParams, rng: &mut R) -> Self {
        let splits = if joint_actor {
            vec![0..ACTION_DIM]
        } else {
            vec![0..MUAV_ACTION_DIM, MUAV_ACTION_DIM..MUAV_ACTION_DIM + AUAV_ACTION_DIM]
        };
        let actors = splits
            .iter()
            .map(|r| TrackedNet::new(&sizes(OBS_DIM, &tp.hidden, r.len()), Activation::Tanh, tp, rng))
            .collect();
        let critic = TrackedNet::new(&sizes(OBS_DIM + ACTION_DIM, &tp.hidden, 1), Activation::Identity, tp, rng);
        Self { actors, splits, critic }
    }

    /// Deterministic joint action on the normalized scale.
    pub fn act(&self, obs: &[f64; OBS_DIM]) -> Result<[f64; ACTION_DIM], NnError> {
        let mut a = [0.0; ACTION_DIM];
        for (net, cols) in self.actors.iter().zip(&self.splits) {
            a[cols.clone()].copy_from_slice(&net.online.forward_one(obs)?);
        }
        Ok(a)
    }

    fn target_actions(&self, obs: &Array2<f64>) -> Result<Array2<f64>, NnError> {
        let mut a = Array2::zeros((obs.nrows(), ACTION_DIM));
        for (net, cols) in self.actors.iter().zip(&self.splits) {
            a.slice_mut(s![.., cols.clone()]).assign(&net.target.forward(obs)?);
        }
        Ok(a)
    }

    /// One critic step and one step per actor, then soft updates.
    pub fn train(&mut self, batch: &[&ActionTransition], tp: &TrainParams, episode: usize) -> Result<(f64, f64), AgentError> {
        let obs = stack_rows(batch.iter().map(|t| &t.obs[..]), OBS_DIM);
        let next = stack_rows(batch.iter().map(|t| &t.next_obs[..]), OBS_DIM);
        let actions = stack_rows(batch.iter().map(|t| &t.action[..]), ACTION_DIM);
        let next_actions = self.target_actions(&next)?;
        let q_next = self
            .critic
            .target
            .forward(&ndarray::concatenate![ndarray::Axis(1), next, next_actions])?;
        let y: Array1<f64> = batch
            .iter()
            .enumerate()
            .map(|(i, t)| critic_target(t.reward * tp.reward_scale, q_next[[i, 0]], tp.gamma, t.done))
            .collect();
        let (c_loss, c_grad) = critic_loss(&self.critic.online, &obs, &actions, &y)?;
        check_loss("critic", c_loss, tp.loss_abort, episode)?;
        self.critic.opt.step(&mut self.critic.online, &c_grad);

        let mut a_loss = 0.0;
        let mut grads = Vec::with_capacity(self.actors.len());
        for (net, cols) in self.actors.iter().zip(&self.splits) {
            let (l, g) = actor_loss(&self.critic.online, &net.online, cols.clone(), &obs, &actions)?;
            check_loss("actor", l, tp.loss_abort, episode)?;
            a_loss += l;
            grads.push(g);
        }
        for (net, g) in self.actors.iter_mut().zip(&grads) {
            net.apply(g, tp.tau)?;
        }
        self.critic.target.soft_update(&self.critic.online, tp.tau)?;
        Ok((c_loss, a_loss / self.actors.len() as f64))
    }
}

/// `Q_Ω` and `β` with their targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionCritic {
    pub q: TrackedNet,
    pub beta: TrackedNet,
}

impl OptionCritic {
    pub fn new<R: Rng + ?Sized>(tp: &TrainParams, rng: &mut R) -> Self {
        Self {
            q: TrackedNet::new(&sizes(OBS_DIM, &tp.hidden, NUM_OPTIONS), Activation::Identity, tp, rng),
            beta: TrackedNet::new(&sizes(OBS_DIM, &tp.hidden, NUM_OPTIONS), Activation::Sigmoid, tp, rng),
        }
    }

    pub fn option_values(&self, obs: &[f64; OBS_DIM]) -> Result<[f64; NUM_OPTIONS], NnError> {
        let v = self.q.online.forward_one(obs)?;
        Ok([v[0], v[1], v[2]])
    }

    pub fn termination_probs(&self, obs: &[f64; OBS_DIM]) -> Result<[f64; NUM_OPTIONS], NnError> {
        let v = self.beta.online.forward_one(obs)?;
        Ok([v[0], v[1], v[2]])
    }

    /// One `Q_Ω` step and one `β` step, then soft updates. `masking` turns
    /// the termination mask on in every max and argmax.
    pub fn train(
        &mut self,
        batch: &[&OptionTransition],
        tp: &TrainParams,
        masking: bool,
        episode: usize,
    ) -> Result<(f64, f64), AgentError> {
        let obs = stack_rows(batch.iter().map(|t| &t.obs[..]), OBS_DIM);
        let next = stack_rows(batch.iter().map(|t| &t.next_obs[..]), OBS_DIM);
        let q_online_next = self.q.online.forward(&next)?;
        let q_target_next = self.q.target.forward(&next)?;
        let beta_target_next = self.beta.target.forward(&next)?;
        let y: Array1<f64> = batch
            .iter()
            .enumerate()
            .map(|(i, t)| {
                option_target(
                    t.reward * tp.reward_scale,
                    &row3(&q_online_next, i),
                    &row3(&q_target_next, i),
                    beta_target_next[[i, t.option]],
                    t.option,
                    masking && t.next_masked,
                    tp.gamma,
                    t.done,
                )
            })
            .collect();

        // Advantages come from the pre-update networks.
        let q_now = self.q.online.forward(&obs)?;
        let beta_now = self.beta.online.forward(&obs)?;
        let advantages: Array1<f64> = batch
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let q = row3(&q_now, i);
                q[t.option] - option_value(&q, beta_now[[i, t.prev_option]], t.option, masking && t.masked)
            })
            .collect();

        let options: Vec<usize> = batch.iter().map(|t| t.option).collect();
        let prevs: Vec<usize> = batch.iter().map(|t| t.prev_option).collect();
        let dones: Vec<bool> = batch.iter().map(|t| t.done).collect();
        let (q_loss, q_grad) = q_omega_loss(&self.q.online, &obs, &options, &y)?;
        check_loss("q_omega", q_loss, tp.loss_abort, episode)?;
        let (b_loss, b_grad) = beta_loss(&self.beta.online, &obs, &prevs, &advantages, &dones)?;
        check_loss("beta", b_loss, tp.loss_abort, episode)?;
        self.q.apply(&q_grad, tp.tau)?;
        self.beta.apply(&b_grad, tp.tau)?;
        Ok((q_loss, b_loss))
    }
}

/// Aggregates of one episode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    /// Accumulated `r_ω` (option learners) or `r` (CT-MADDPG).
    pub reward: f64,
    /// Accumulated throughput (bit/Hz).
    pub throughput: f64,
    pub slots: usize,
    /// Number of charging phases (entries into the charging option).
    pub charging_count: usize,
    pub final_e_m: f64,
    pub final_e_a: f64,
    pub power_off: bool,
}

impl EpisodeSummary {
    pub fn e_m_percent(&self, e_m_max: f64) -> f64 {
        100.0 * self.final_e_m / e_m_max
    }

    pub fn e_a_percent(&self, e_a_max: f64) -> f64 {
        100.0 * self.final_e_a / e_a_max
    }
}

/// Energy consumed by both UAVs over an episode that started with full batteries.
pub fn consumed_energy(e_m_max: f64, e_a_max: f64, final_e_m: f64, final_e_a: f64) -> f64 {
    e_m_max + e_a_max - final_e_m - final_e_a
}

/// Throughput per joule of net energy drawn from both batteries (bit/Hz/J).
pub fn energy_efficiency(throughput: f64, consumed: f64) -> f64 {
    if consumed > 0.0 {
        throughput / consumed
    } else {
        0.0
    }
}

/// One line of the metrics stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub reward: f64,
    pub throughput: f64,
    pub slots: usize,
    pub charging_count: usize,
    pub e_m_percent: f64,
    pub e_a_percent: f64,
    pub power_off: bool,
    /// Velocity-channel noise standard deviation used in the episode.
    pub sigma: f64,
    /// Whether the episode ran before training started (random behaviour).
    pub warmup: bool,
    pub critic_loss: f64,
    pub q_omega_loss: f64,
}

/// Everything a training run owns: networks, buffers, noise and the RNG.
#[derive(Debug, Clone)]
pub struct Learner {
    pub algorithm: Algorithm,
    pub train: TrainParams,
    pub core: ActorCritic,
    pub options: Option<OptionCritic>,
    pub d_a: ReplayBuffer<ActionTransition>,
    pub d_o: ReplayBuffer<OptionTransition>,
    pub noise: NoiseSchedule,
    pub episode: usize,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Train,
    /// Noise-free rollout without learning.
    Eval,
}

impl Learner {
    pub fn new(cfg: &ExperimentConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tp = cfg.train.clone();
        let core = ActorCritic::new(cfg.algorithm == Algorithm::Ddpoc, &tp, &mut rng);
        let options = cfg.algorithm.uses_options().then(|| OptionCritic::new(&tp, &mut rng));
        let noise = NoiseSchedule::new(
            vec![
                tp.sigma_velocity,
                tp.sigma_azimuth,
                tp.sigma_power,
                tp.sigma_velocity,
                tp.sigma_azimuth,
            ],
            tp.noise_decay_rate,
            tp.noise_decay_every,
            tp.noise_decay_start,
        );
        Self {
            algorithm: cfg.algorithm,
            d_a: ReplayBuffer::new(tp.capacity),
            d_o: ReplayBuffer::new(tp.capacity),
            train: tp,
            core,
            options,
            noise,
            episode: 0,
            rng,
        }
    }

    pub fn masking(&self) -> bool {
        matches!(self.algorithm, Algorithm::Maddpoc | Algorithm::Ddpoc)
    }

    /// Before learning starts every choice is random.
    pub fn warming_up(&self) -> bool {
        if self.options.is_some() {
            !self.d_o.is_full()
        } else {
            !self.d_a.is_full()
        }
    }

    fn random_option(&mut self, masked: bool) -> usize {
        let n = if masked { NUM_OPTIONS - 1 } else { NUM_OPTIONS };
        self.rng.random_range(0..n)
    }

    /// Option chosen by the probabilistic policy, using `rng` for the coin.
    pub fn choose_option<R: Rng + ?Sized>(
        &self,
        obs: &[f64; OBS_DIM],
        prev: usize,
        masked: bool,
        rng: &mut R,
    ) -> Result<usize, NnError> {
        let oc = self.options.as_ref().expect("option learner");
        let q = oc.option_values(obs)?;
        let beta = oc.termination_probs(obs)?;
        Ok(select_option(&q, beta[prev], prev, masked, rng))
    }

    /// Runs one episode. Training episodes explore, store transitions and
    /// take one gradient step per decision once the buffers are full;
    /// evaluation episodes act without noise and leave everything but the
    /// given coin RNG untouched.
    pub fn run_episode(
        &mut self,
        env: &mut Environment,
        phase: Phase,
        eval_rng: &mut ChaCha8Rng,
        mut log: Option<&mut Vec<SlotRecord>>,
    ) -> Result<(EpisodeSummary, StepLosses), AgentError> {
        if phase == Phase::Train {
            self.episode += 1;
            self.noise.set_episode(self.episode - 1);
        }
        env.reset();
        if let Some(l) = log.as_deref_mut() {
            l.push(env.initial_record());
        }
        let dt = env.params.slot_duration;
        let mut summary = EpisodeSummary::default();
        let mut losses = StepLosses::default();
        let mut loss_count = (0usize, 0usize);
        while !env.is_done() {
            let obs = env.observe();
            let masked = self.masking() && env.termination_masked();
            let prev = env.prev_option().index();
            let warmup = phase == Phase::Train && self.warming_up();
            let option = if self.options.is_none() {
                OptionId::Communicate.index()
            } else if warmup {
                self.random_option(masked)
            } else if phase == Phase::Train {
                let mut rng = std::mem::replace(&mut self.rng, ChaCha8Rng::seed_from_u64(0));
                let choice = self.choose_option(&obs, prev, masked, &mut rng);
                self.rng = rng;
                choice?
            } else {
                self.choose_option(&obs, prev, masked, eval_rng)?
            };
            let option = OptionId::from_index(option).expect("valid option index");

            let action = if option != OptionId::Communicate {
                [0.0; ACTION_DIM]
            } else if warmup {
                std::array::from_fn(|_| self.rng.random_range(-1.0..=1.0))
            } else {
                let a = self.core.act(&obs)?;
                if phase == Phase::Train {
                    let noisy = self.noise.perturb(&a, &mut self.rng);
                    std::array::from_fn(|i| noisy[i])
                } else {
                    a
                }
            };
            let physical = AgentAction::from_normalized(&action, &env.params);
            let out = env.step(option, &physical)?;

            summary.reward += out.option_reward;
            summary.throughput += out.throughput(dt);
            summary.slots += out.slots.len();
            if option == OptionId::Charge && prev != OptionId::Charge.index() {
                summary.charging_count += 1;
            }
            summary.power_off |= out.power_off;
            if let Some(l) = log.as_deref_mut() {
                l.extend(out.slots.iter().cloned());
            }

            if phase == Phase::Train {
                let next_obs = env.observe();
                if self.options.is_some() {
                    self.d_o.push(OptionTransition {
                        obs,
                        reward: out.option_reward,
                        next_obs,
                        option: option.index(),
                        prev_option: prev,
                        done: out.terminal,
                        masked,
                        next_masked: self.masking() && env.state().e_m > env.params.e_th,
                    });
                }
                if out.option == OptionId::Communicate {
                    self.d_a.push(ActionTransition {
                        obs,
                        action,
                        reward: out.reward,
                        next_obs,
                        done: out.terminal,
                    });
                }
                let step = self.learn()?;
                if let Some((c, a)) = step.0 {
                    losses.critic += c;
                    losses.actor += a;
                    loss_count.0 += 1;
                }
                if let Some((q, b)) = step.1 {
                    losses.q_omega += q;
                    losses.beta += b;
                    loss_count.1 += 1;
                }
            }
        }
        summary.final_e_m = env.state().e_m;
        summary.final_e_a = env.state().e_a;
        if loss_count.0 > 0 {
            losses.critic /= loss_count.0 as f64;
            losses.actor /= loss_count.0 as f64;
        }
        if loss_count.1 > 0 {
            losses.q_omega /= loss_count.1 as f64;
            losses.beta /= loss_count.1 as f64;
        }
        Ok((summary, losses))
    }

    /// One gradient step on each network family whose data is ready.
    #[allow(clippy::type_complexity)]
    fn learn(&mut self) -> Result<(Option<(f64, f64)>, Option<(f64, f64)>), AgentError> {
        let b = self.train.batch_size;
        let masking = self.masking();
        let mut option_losses = None;
        if let Some(oc) = self.options.as_mut() {
            if !self.d_o.is_full() {
                return Ok((None, None));
            }
            let batch = self.d_o.sample(b, &mut self.rng)?;
            option_losses = Some(oc.train(&batch, &self.train, masking, self.episode)?);
        }
        // Option learners train the actors as soon as the option buffer is
        // full, drawing from whatever communication records exist.
        let action_batch = if self.options.is_some() {
            (self.d_a.len() >= b).then(|| self.d_a.sample_filled(b, &mut self.rng)).transpose()?
        } else {
            self.d_a.is_full().then(|| self.d_a.sample(b, &mut self.rng)).transpose()?
        };
        let mut action_losses = None;
        if let Some(batch) = action_batch {
            action_losses = Some(self.core.train(&batch, &self.train, self.episode)?);
        }
        Ok((action_losses, option_losses))
    }

    /// Trains for `episodes` episodes, reporting each one to `on_episode`.
    pub fn train_episodes<F>(&mut self, env: &mut Environment, episodes: usize, mut on_episode: F) -> Result<(), AgentError>
    where
        F: FnMut(&EpisodeMetrics),
    {
        let mut unused = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..episodes {
            let warmup = self.warming_up();
            let (s, l) = self.run_episode(env, Phase::Train, &mut unused, None)?;
            on_episode(&EpisodeMetrics {
                episode: self.episode,
                reward: s.reward,
                throughput: s.throughput,
                slots: s.slots,
                charging_count: s.charging_count,
                e_m_percent: s.e_m_percent(env.params.e_m_max),
                e_a_percent: s.e_a_percent(env.params.e_a_max),
                power_off: s.power_off,
                sigma: if warmup { 0.0 } else { self.noise.sigma[0] },
                warmup,
                critic_loss: l.critic,
                q_omega_loss: l.q_omega,
            });
        }
        Ok(())
    }

    /// Noise-free rollout; option coins come from a generator seeded with `seed`.
    pub fn evaluate(&mut self, env: &mut Environment, seed: u64, log: Option<&mut Vec<SlotRecord>>) -> Result<EpisodeSummary, AgentError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(self.run_episode(env, Phase::Eval, &mut rng, log)?.0)
    }

    pub fn checkpoint(&self, config_hash: &str) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            config_hash: config_hash.to_string(),
            algorithm: self.algorithm,
            episode: self.episode,
            core: self.core.clone(),
            options: self.options.clone(),
            noise: self.noise.clone(),
        }
    }

    /// Restores networks, optimizer state and noise schedule. Replay buffers
    /// and the RNG are not part of a checkpoint.
    pub fn restore(&mut self, ck: Checkpoint, config_hash: &str) -> Result<(), AgentError> {
        if ck.format != CHECKPOINT_FORMAT {
            return Err(AgentError::Checkpoint(format!("unknown format `{}`", ck.format)));
        }
        if ck.config_hash != config_hash {
            return Err(AgentError::Checkpoint(format!(
                "written for config {}, current config is {}",
                ck.config_hash, config_hash
            )));
        }
        if ck.algorithm != self.algorithm {
            return Err(AgentError::Checkpoint(format!("written by {}", ck.algorithm.name())));
        }
        self.core = ck.core;
        self.options = ck.options;
        self.noise = ck.noise;
        self.episode = ck.episode;
        Ok(())
    }
}

pub const CHECKPOINT_FORMAT: &str = "aerial-irs-checkpoint-v1";

/// Serialized learner state; see the crate README for the layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub config_hash: String,
    pub algorithm: Algorithm,
    pub episode: usize,
    pub core: ActorCritic,
    pub options: Option<OptionCritic>,
    pub noise: NoiseSchedule,
}
