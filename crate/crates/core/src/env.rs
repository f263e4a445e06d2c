//! The cooperative two-UAV game.
//!
//! One [`Environment`] simulates the MUAV and the IRS-carrying AUAV over a
//! rectangular area with a fixed set of ground nodes served in rotation.
//! Each call to [`Environment::step`] executes one option decision:
//!
//! * communicate: one slot driven by the agents' continuous actions;
//! * charge: one slot of the fixed approach-and-hover strategy;
//! * terminate: the straight-line return to the charging station, which may
//!   span several slots and always ends the episode.
//!
//! In the non-charging mode the caller always communicates and the
//! environment forces the return as soon as one more slot could leave a UAV
//! without enough energy to get home.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{received_charge_power, ArrayConfig, CascadedLink, ChannelError, Geometry, Point, PropagationParams};
use crate::config::{EnvParams, ExperimentConfig, Mode};
use crate::energy::{return_slot_update, step_energy_update, BatteryState, EnergyFlows, EnergyModel, SlotEnergyInput};

pub const OBS_DIM: usize = 12;
/// `[v_M, a_M, p_t, v_A, a_A]`
pub const ACTION_DIM: usize = 5;
pub const MUAV_ACTION_DIM: usize = 3;
pub const AUAV_ACTION_DIM: usize = 2;
pub const NUM_OPTIONS: usize = 3;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("episode already terminated; call reset")]
    Terminal,
    #[error("option {0:?} is not available in the non-charging mode")]
    OptionUnavailable(OptionId),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptionId {
    Charge = 0,
    Communicate = 1,
    Terminate = 2,
}

impl OptionId {
    pub const ALL: [OptionId; NUM_OPTIONS] = [OptionId::Charge, OptionId::Communicate, OptionId::Terminate];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

/// Full physical state; its observation vector has [`OBS_DIM`] entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub muav: Point,
    pub auav: Point,
    pub h_m: f64,
    pub h_a: f64,
    pub gn: Point,
    pub gn_index: usize,
    pub e_m: f64,
    pub e_a: f64,
    pub e_ml: f64,
    pub e_al: f64,
    pub slot: usize,
}

impl WorldState {
    /// `[l_M, H_M, l_A, H_A, l_G, E_M, E_A, E_Ml, E_Al]` in physical units.
    pub fn observation(&self) -> [f64; OBS_DIM] {
        [
            self.muav.x,
            self.muav.y,
            self.h_m,
            self.auav.x,
            self.auav.y,
            self.h_a,
            self.gn.x,
            self.gn.y,
            self.e_m,
            self.e_a,
            self.e_ml,
            self.e_al,
        ]
    }
}

/// Physical action of both UAVs for one communication slot.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentAction {
    pub v_m: f64,
    pub azimuth_m: f64,
    pub p_t: f64,
    pub v_a: f64,
    pub azimuth_a: f64,
}

fn to_unit(x: f64, lo: f64, hi: f64) -> f64 {
    2.0 * (x - lo) / (hi - lo) - 1.0
}

fn from_unit(u: f64, lo: f64, hi: f64) -> f64 {
    lo + (u.clamp(-1.0, 1.0) + 1.0) * 0.5 * (hi - lo)
}

impl AgentAction {
    /// Maps a joint action in `[-1, 1]^5` onto physical ranges.
    pub fn from_normalized(a: &[f64; ACTION_DIM], env: &EnvParams) -> Self {
        use std::f64::consts::PI;
        Self {
            v_m: from_unit(a[0], 0.0, env.v_max),
            azimuth_m: from_unit(a[1], -PI, PI),
            p_t: from_unit(a[2], 0.0, env.p_t_max),
            v_a: from_unit(a[3], 0.0, env.v_max),
            azimuth_a: from_unit(a[4], -PI, PI),
        }
    }

    pub fn to_normalized(&self, env: &EnvParams) -> [f64; ACTION_DIM] {
        use std::f64::consts::PI;
        [
            to_unit(self.v_m, 0.0, env.v_max),
            to_unit(self.azimuth_m, -PI, PI),
            to_unit(self.p_t, 0.0, env.p_t_max),
            to_unit(self.v_a, 0.0, env.v_max),
            to_unit(self.azimuth_a, -PI, PI),
        ]
    }

    /// Clips speeds to `[0, v_max]` and power to `[0, p_tmax]`.
    pub fn clipped(&self, env: &EnvParams) -> Self {
        Self {
            v_m: self.v_m.clamp(0.0, env.v_max),
            p_t: self.p_t.clamp(0.0, env.p_t_max),
            v_a: self.v_a.clamp(0.0, env.v_max),
            ..*self
        }
    }
}

/// Constraint flags for one slot; `true` means violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Violations {
    pub muav_out_of_area: bool,
    pub auav_out_of_area: bool,
    pub velocity: bool,
    pub power: bool,
    /// Same-side constraint of the simulated problem.
    pub same_side: bool,
    /// Strict same-side test, which gates throughput in both problems.
    pub reflection_blocked: bool,
    pub coverage: bool,
    pub muav_energy: bool,
    pub auav_energy: bool,
}

impl Violations {
    /// Whether the throughput mask `ξ_th` is zero.
    pub fn blocks_throughput(&self) -> bool {
        self.reflection_blocked || self.coverage
    }

    pub fn power_off(&self) -> bool {
        self.muav_energy || self.auav_energy
    }
}

/// Ground-node index linked during `slot`: the order advances every
/// `switch_every` slots and wraps around.
pub fn linked_gn(slot: usize, switch_every: usize, order: &[usize]) -> usize {
    order[(slot / switch_every) % order.len()]
}

/// Ground-node indices sorted by ascending distance from the charging station.
pub fn gn_order(gns: &[Point], station: &Point) -> Vec<usize> {
    let mut order: Vec<usize> = (0..gns.len()).collect();
    order.sort_by(|&a, &b| gns[a].distance(station).total_cmp(&gns[b].distance(station)));
    order
}

/// Same-side test of the reflected link: the MUAV and the ground node must lie
/// on the same side of the AUAV along y. Strict in the non-charging mode.
pub fn same_side_ok(y_m: f64, y_a: f64, y_g: f64, mode: Mode) -> bool {
    let product = (y_m - y_a) * (y_g - y_a);
    match mode {
        Mode::P1 => product > 0.0,
        Mode::P2 => product >= 0.0,
    }
}

/// Per-slot quantities the constraint check looks at.
#[derive(Debug, Clone, Copy)]
pub struct SlotSnapshot {
    /// Positions after moving, before clipping to the area.
    pub muav_unclipped: Point,
    pub auav_unclipped: Point,
    pub gn: Point,
    pub action: AgentAction,
    pub e_m: f64,
    pub e_a: f64,
}

/// Checks every per-slot constraint. Same-side and coverage only apply to
/// communication slots in the charging mode; in the non-charging mode every
/// slot communicates.
pub fn check_constraints(s: &SlotSnapshot, option: OptionId, env: &EnvParams, mode: Mode) -> Violations {
    let muav = env.clip(&s.muav_unclipped);
    let auav = env.clip(&s.auav_unclipped);
    let communicating = option == OptionId::Communicate || mode == Mode::P1;
    let a = &s.action;
    Violations {
        muav_out_of_area: !env.contains(&s.muav_unclipped),
        auav_out_of_area: !env.contains(&s.auav_unclipped),
        velocity: !(0.0..=env.v_max).contains(&a.v_m) || !(0.0..=env.v_max).contains(&a.v_a),
        power: !(0.0..=env.p_t_max).contains(&a.p_t),
        same_side: communicating && !same_side_ok(muav.y, auav.y, s.gn.y, mode),
        reflection_blocked: communicating && !same_side_ok(muav.y, auav.y, s.gn.y, Mode::P1),
        coverage: communicating && muav.distance(&s.gn) > env.coverage,
        muav_energy: s.e_m <= 0.0,
        auav_energy: s.e_a <= 0.0,
    }
}

/// Action-level reward `r = r_cb + r_th`.
///
/// `rate` is the raw achievable rate; it only pays off on a non-terminal
/// communication slot that satisfies the same-side and coverage constraints.
pub fn reward_action(v: &Violations, option: OptionId, rate: f64, terminal: bool, env: &EnvParams) -> f64 {
    let r_cb = env.kappa_cb * (v.muav_out_of_area as u8 + v.auav_out_of_area as u8) as f64;
    let r_th = if option == OptionId::Communicate && !terminal && !v.blocks_throughput() {
        rate.powf(env.kappa_th)
    } else {
        0.0
    };
    r_cb + r_th
}

/// Option-level reward: `r` plus the deliberation cost (terminal step, or
/// leaving communication) and the power-off penalty.
pub fn reward_option(
    r: f64,
    option: OptionId,
    prev_option: OptionId,
    terminal: bool,
    power_off: bool,
    env: &EnvParams,
) -> f64 {
    let switched_away = prev_option == OptionId::Communicate && option != OptionId::Communicate;
    let r_dc = if terminal || switched_away { env.kappa_dc } else { 0.0 };
    let r_po = if power_off { env.kappa_po } else { 0.0 };
    r + r_dc + r_po
}

/// Fires when one more worst-case slot (full speed, full transmit power,
/// flying straight away from the station) could leave either UAV unable to
/// pay for its return.
pub fn p1_guard_fires(state: &WorldState, env: &EnvParams, energy: &EnergyModel) -> bool {
    let dt = env.slot_duration;
    let growth = energy.return_energy(env.v_max * dt);
    let worst_m = state.e_ml - dt * (energy.p_max + env.p_t_max) - growth;
    let worst_a = state.e_al - dt * energy.p_max - growth;
    worst_m <= 0.0 || worst_a <= 0.0
}

/// One row of the trajectory log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub n: usize,
    /// Option executed in the slot that led to this row; `None` on the initial row.
    pub option: Option<OptionId>,
    pub x_m: f64,
    pub y_m: f64,
    pub x_a: f64,
    pub y_a: f64,
    pub v_m: f64,
    pub v_a: f64,
    pub p_t: f64,
    /// Served rate (bit/s/Hz): zero unless the slot contributes throughput.
    pub rate: f64,
    pub e_m: f64,
    pub e_a: f64,
    pub r: f64,
    pub r_option: f64,
    pub terminal: bool,
}

pub const CSV_HEADER: &str = "n,option,x_M,y_M,x_A,y_A,v_M,v_A,p_t,rate,E_M,E_A,r,r_omega,xi_d";

impl SlotRecord {
    pub fn csv_row(&self) -> String {
        let option = self.option.map_or(String::new(), |o| o.index().to_string());
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.n,
            option,
            self.x_m,
            self.y_m,
            self.x_a,
            self.y_a,
            self.v_m,
            self.v_a,
            self.p_t,
            self.rate,
            self.e_m,
            self.e_a,
            self.r,
            self.r_option,
            self.terminal as u8
        )
    }
}

/// Result of one option decision.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: WorldState,
    pub option: OptionId,
    /// Action-level reward `r`.
    pub reward: f64,
    /// Option-level reward `r_ω`; equals `reward` in the non-charging mode.
    pub option_reward: f64,
    pub terminal: bool,
    pub power_off: bool,
    /// Raw achievable rate of the communication slot (0 otherwise).
    pub rate: f64,
    /// Rate that counts toward throughput.
    pub served_rate: f64,
    pub violations: Violations,
    pub flows: EnergyFlows,
    /// Rows of every slot executed, in order.
    pub slots: Vec<SlotRecord>,
}

impl StepOutcome {
    /// Throughput (bit/Hz) delivered by this decision.
    pub fn throughput(&self, slot_duration: f64) -> f64 {
        self.slots.iter().map(|s| s.rate).sum::<f64>() * slot_duration
    }
}

/// Draws `k` ground nodes uniformly in the area from a stream of `seed`
/// separate from the training stream.
pub fn sample_gn_layout(k: usize, env: &EnvParams, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0x6e6f6465);
    (0..k)
        .map(|_| Point::new(rng.random_range(env.x_min..=env.x_max), rng.random_range(env.y_min..=env.y_max)))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Environment {
    pub params: EnvParams,
    pub propagation: PropagationParams,
    pub arrays: ArrayConfig,
    pub mode: Mode,
    pub energy: EnergyModel,
    gns: Vec<Point>,
    order: Vec<usize>,
    state: WorldState,
    prev_option: OptionId,
    done: bool,
}

impl Environment {
    /// Builds the environment of one run; the ground-node layout comes from
    /// the config or, when absent, from `seed`.
    pub fn new(cfg: &ExperimentConfig, seed: u64) -> Self {
        let gns = cfg
            .env
            .gn_positions
            .clone()
            .unwrap_or_else(|| sample_gn_layout(cfg.env.num_gns, &cfg.env, seed));
        Self::with_gns(cfg, gns)
    }

    pub fn with_gns(cfg: &ExperimentConfig, gns: Vec<Point>) -> Self {
        assert!(!gns.is_empty(), "at least one ground node is required");
        let order = gn_order(&gns, &cfg.env.charging_station);
        let energy = EnergyModel::new(cfg.rotor, cfg.env.v_max);
        let mut env = Self {
            params: cfg.env.clone(),
            propagation: cfg.propagation,
            arrays: cfg.arrays,
            mode: cfg.mode,
            energy,
            state: WorldState {
                muav: cfg.env.charging_station,
                auav: cfg.env.charging_station,
                h_m: cfg.env.h_m,
                h_a: cfg.env.h_a,
                gn: gns[order[0]],
                gn_index: order[0],
                e_m: cfg.env.e_m_max,
                e_a: cfg.env.e_a_max,
                e_ml: cfg.env.e_m_max,
                e_al: cfg.env.e_a_max,
                slot: 0,
            },
            gns,
            order,
            prev_option: OptionId::Communicate,
            done: false,
        };
        env.reset();
        env
    }

    pub fn gn_positions(&self) -> &[Point] {
        &self.gns
    }

    pub fn gn_order(&self) -> &[usize] {
        &self.order
    }

    pub fn state(&self) -> &WorldState {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn prev_option(&self) -> OptionId {
        self.prev_option
    }

    /// Both UAVs at the station with full batteries, slot 0, primal option
    /// set to communication.
    pub fn reset(&mut self) -> &WorldState {
        let station = self.params.charging_station;
        let gn_index = linked_gn(0, self.params.link_switch_slots, &self.order);
        self.state = self.make_state(
            station,
            station,
            gn_index,
            self.params.e_m_max,
            self.params.e_a_max,
            0,
        );
        self.prev_option = OptionId::Communicate;
        self.done = false;
        &self.state
    }

    /// Places the episode in an arbitrary state (tests and diagnostics).
    pub fn set_state(&mut self, muav: Point, auav: Point, e_m: f64, e_a: f64, slot: usize) {
        let gn_index = linked_gn(slot, self.params.link_switch_slots, &self.order);
        self.state = self.make_state(muav, auav, gn_index, e_m, e_a, slot);
        self.done = false;
    }

    fn make_state(&self, muav: Point, auav: Point, gn_index: usize, e_m: f64, e_a: f64, slot: usize) -> WorldState {
        let station = self.params.charging_station;
        WorldState {
            muav,
            auav,
            h_m: self.params.h_m,
            h_a: self.params.h_a,
            gn: self.gns[gn_index],
            gn_index,
            e_m,
            e_a,
            e_ml: self.energy.conditional_leftover(e_m, muav.distance(&station)),
            e_al: self.energy.conditional_leftover(e_a, auav.distance(&station)),
            slot,
        }
    }

    /// Observation scaled to O(1) for the networks: positions relative to the
    /// area centre over the half extents, altitudes over `h_m`, energies over
    /// the capacities.
    pub fn normalize(&self, s: &WorldState) -> [f64; OBS_DIM] {
        let p = &self.params;
        let (cx, cy) = ((p.x_min + p.x_max) / 2.0, (p.y_min + p.y_max) / 2.0);
        let (hx, hy) = ((p.x_max - p.x_min) / 2.0, (p.y_max - p.y_min) / 2.0);
        [
            (s.muav.x - cx) / hx,
            (s.muav.y - cy) / hy,
            s.h_m / p.h_m,
            (s.auav.x - cx) / hx,
            (s.auav.y - cy) / hy,
            s.h_a / p.h_m,
            (s.gn.x - cx) / hx,
            (s.gn.y - cy) / hy,
            s.e_m / p.e_m_max,
            s.e_a / p.e_a_max,
            s.e_ml / p.e_m_max,
            s.e_al / p.e_a_max,
        ]
    }

    pub fn observe(&self) -> [f64; OBS_DIM] {
        self.normalize(&self.state)
    }

    /// Whether the termination option is currently masked (`E_M > E_th`).
    pub fn termination_masked(&self) -> bool {
        self.state.e_m > self.params.e_th
    }

    pub fn guard_fires(&self) -> bool {
        p1_guard_fires(&self.state, &self.params, &self.energy)
    }

    /// Row describing the current state with no slot attached (row 0 of a log).
    pub fn initial_record(&self) -> SlotRecord {
        let s = &self.state;
        SlotRecord {
            n: s.slot,
            option: None,
            x_m: s.muav.x,
            y_m: s.muav.y,
            x_a: s.auav.x,
            y_a: s.auav.y,
            v_m: 0.0,
            v_a: 0.0,
            p_t: 0.0,
            rate: 0.0,
            e_m: s.e_m,
            e_a: s.e_a,
            r: 0.0,
            r_option: 0.0,
            terminal: false,
        }
    }

    fn battery(&self) -> BatteryState {
        BatteryState {
            e_m: self.state.e_m,
            e_a: self.state.e_a,
            e_m_max: self.params.e_m_max,
            e_a_max: self.params.e_a_max,
        }
    }

    fn geometry(&self, muav: Point, auav: Point, gn: Point) -> Geometry {
        Geometry {
            muav,
            auav,
            gn,
            h_m: self.params.h_m,
            h_a: self.params.h_a,
        }
    }

    /// Executes one option decision. In the non-charging mode only
    /// communication is accepted, and the return is forced by the guard.
    pub fn step(&mut self, option: OptionId, action: &AgentAction) -> Result<StepOutcome, EnvError> {
        if self.done {
            return Err(EnvError::Terminal);
        }
        let mut out = match (self.mode, option) {
            (Mode::P1, OptionId::Communicate) if self.guard_fires() => self.return_home(),
            (Mode::P1, OptionId::Communicate) => {
                let mut out = self.communicate(action)?;
                if !out.terminal && self.guard_fires() {
                    let ret = self.return_home();
                    out.terminal = true;
                    out.power_off = ret.power_off;
                    out.violations.muav_energy |= ret.violations.muav_energy;
                    out.violations.auav_energy |= ret.violations.auav_energy;
                    out.flows.accumulate(&ret.flows);
                    out.slots.extend(ret.slots);
                    out.state = ret.state;
                }
                out
            }
            (Mode::P1, other) => return Err(EnvError::OptionUnavailable(other)),
            (Mode::P2, OptionId::Communicate) => self.communicate(action)?,
            (Mode::P2, OptionId::Charge) => self.charge()?,
            (Mode::P2, OptionId::Terminate) => self.return_home(),
        };
        out.option_reward = match self.mode {
            Mode::P1 => out.reward,
            Mode::P2 => reward_option(
                out.reward,
                option,
                self.prev_option,
                out.terminal,
                out.power_off,
                &self.params,
            ),
        };
        let extra = out.option_reward - out.reward;
        if let Some(last) = out.slots.last_mut() {
            last.r_option += extra;
        }
        self.prev_option = option;
        self.done = out.terminal;
        Ok(out)
    }

    fn finish_slot(&mut self, muav: Point, auav: Point, battery: &BatteryState) {
        let slot = self.state.slot + 1;
        let gn_index = linked_gn(slot, self.params.link_switch_slots, &self.order);
        self.state = self.make_state(muav, auav, gn_index, battery.e_m, battery.e_a, slot);
    }

    fn record(&self, option: OptionId, v_m: f64, v_a: f64, p_t: f64, rate: f64, r: f64, terminal: bool) -> SlotRecord {
        let s = &self.state;
        SlotRecord {
            n: s.slot,
            option: Some(option),
            x_m: s.muav.x,
            y_m: s.muav.y,
            x_a: s.auav.x,
            y_a: s.auav.y,
            v_m,
            v_a,
            p_t,
            rate,
            e_m: s.e_m,
            e_a: s.e_a,
            r,
            r_option: r,
            terminal,
        }
    }

    fn communicate(&mut self, raw: &AgentAction) -> Result<StepOutcome, EnvError> {
        let p = self.params.clone();
        let action = raw.clipped(&p);
        let dt = p.slot_duration;
        let advance = |from: Point, v: f64, azimuth: f64| {
            Point::new(from.x + v * dt * azimuth.cos(), from.y + v * dt * azimuth.sin())
        };
        let muav_raw = advance(self.state.muav, action.v_m, action.azimuth_m);
        let auav_raw = advance(self.state.auav, action.v_a, action.azimuth_a);
        let (muav, auav) = (p.clip(&muav_raw), p.clip(&auav_raw));
        let gn = self.gns[linked_gn(self.state.slot, p.link_switch_slots, &self.order)];

        let (battery, flows) = step_energy_update(
            &self.battery(),
            &SlotEnergyInput {
                option: OptionId::Communicate,
                v_m: action.v_m,
                v_a: action.v_a,
                p_t: action.p_t,
                p_c: p.p_c,
                p_r: 0.0,
                slot_duration: dt,
                alpha_c: p.alpha_c,
            },
            &self.energy,
        );
        let mut violations = check_constraints(
            &SlotSnapshot {
                muav_unclipped: muav_raw,
                auav_unclipped: auav_raw,
                gn,
                action: *raw,
                e_m: battery.e_m,
                e_a: battery.e_a,
            },
            OptionId::Communicate,
            &p,
            self.mode,
        );
        // The non-charging mode treats energy through the return guard, not as power-off.
        if self.mode == Mode::P1 {
            violations.muav_energy = battery.e_m <= 0.0;
            violations.auav_energy = battery.e_a <= 0.0;
        }
        let power_off = violations.power_off();
        let terminal = power_off;
        let rate = CascadedLink::optimal(&self.geometry(muav, auav, gn), &self.arrays, &self.propagation)?
            .rate(action.p_t, self.propagation.noise_power);
        let served = if terminal || violations.blocks_throughput() { 0.0 } else { rate };
        let reward = reward_action(&violations, OptionId::Communicate, rate, terminal, &p);

        self.finish_slot(muav, auav, &battery);
        let row = self.record(OptionId::Communicate, action.v_m, action.v_a, action.p_t, served, reward, terminal);
        Ok(StepOutcome {
            state: self.state.clone(),
            option: OptionId::Communicate,
            reward,
            option_reward: reward,
            terminal,
            power_off,
            rate,
            served_rate: served,
            violations,
            flows,
            slots: vec![row],
        })
    }

    /// Fixed charging strategy: close the horizontal gap at up to `v_mee`
    /// (meeting halfway), hover once within the overlap tolerance, and beam
    /// `p_c` to the AUAV during the slot.
    fn charge(&mut self) -> Result<StepOutcome, EnvError> {
        let p = self.params.clone();
        let dt = p.slot_duration;
        let (m0, a0) = (self.state.muav, self.state.auav);
        let gap = m0.distance(&a0);
        let (muav, auav, v) = if gap <= p.overlap_tolerance {
            (m0, a0, 0.0)
        } else {
            let step = (self.energy.v_mee * dt).min(gap / 2.0);
            let (ux, uy) = ((a0.x - m0.x) / gap, (a0.y - m0.y) / gap);
            (
                Point::new(m0.x + ux * step, m0.y + uy * step),
                Point::new(a0.x - ux * step, a0.y - uy * step),
                step / dt,
            )
        };
        let gn = self.state.gn;
        let p_r = received_charge_power(p.p_c, &self.geometry(muav, auav, gn), &self.arrays, &self.propagation)?;
        let (battery, flows) = step_energy_update(
            &self.battery(),
            &SlotEnergyInput {
                option: OptionId::Charge,
                v_m: v,
                v_a: v,
                p_t: 0.0,
                p_c: p.p_c,
                p_r,
                slot_duration: dt,
                alpha_c: p.alpha_c,
            },
            &self.energy,
        );
        let violations = check_constraints(
            &SlotSnapshot {
                muav_unclipped: muav,
                auav_unclipped: auav,
                gn,
                action: AgentAction {
                    v_m: v,
                    v_a: v,
                    ..AgentAction::default()
                },
                e_m: battery.e_m,
                e_a: battery.e_a,
            },
            OptionId::Charge,
            &p,
            self.mode,
        );
        let power_off = violations.power_off();
        let reward = reward_action(&violations, OptionId::Charge, 0.0, power_off, &p);
        self.finish_slot(muav, auav, &battery);
        let row = self.record(OptionId::Charge, v, v, 0.0, 0.0, reward, power_off);
        Ok(StepOutcome {
            state: self.state.clone(),
            option: OptionId::Charge,
            reward,
            option_reward: reward,
            terminal: power_off,
            power_off,
            rate: 0.0,
            served_rate: 0.0,
            violations,
            flows,
            slots: vec![row],
        })
    }

    /// Straight-line return of both UAVs at `v_mee`. Each slot moves a UAV by
    /// `min(v_mee·δτ, remaining)`; a UAV that has arrived waits on the ground.
    /// Takes at least one slot, even from the station itself.
    fn return_home(&mut self) -> StepOutcome {
        let p = self.params.clone();
        let dt = p.slot_duration;
        let station = p.charging_station;
        let max_step = self.energy.v_mee * dt;
        let mut flows = EnergyFlows::default();
        let mut slots = Vec::new();
        let power_off = loop {
            let (m0, a0) = (self.state.muav, self.state.auav);
            let (dm, da) = (m0.distance(&station), a0.distance(&station));
            let (sm, sa) = (max_step.min(dm), max_step.min(da));
            let toward = |from: Point, dist: f64, step: f64| {
                if step >= dist {
                    station
                } else {
                    Point::new(
                        from.x + (station.x - from.x) * step / dist,
                        from.y + (station.y - from.y) * step / dist,
                    )
                }
            };
            let (muav, auav) = (toward(m0, dm, sm), toward(a0, da, sa));
            let (battery, f) = return_slot_update(&self.battery(), sm, sa, &self.energy);
            flows.accumulate(&f);
            self.finish_slot(muav, auav, &battery);
            let dead = battery.e_m <= 0.0 || battery.e_a <= 0.0;
            let arrived = muav == station && auav == station;
            let last = arrived || dead;
            slots.push(self.record(OptionId::Terminate, sm / dt, sa / dt, 0.0, 0.0, 0.0, last));
            if last {
                break dead;
            }
        };
        let violations = Violations {
            muav_energy: self.state.e_m <= 0.0,
            auav_energy: self.state.e_a <= 0.0,
            ..Violations::default()
        };
        StepOutcome {
            state: self.state.clone(),
            option: OptionId::Terminate,
            reward: 0.0,
            option_reward: 0.0,
            terminal: true,
            power_off,
            rate: 0.0,
            served_rate: 0.0,
            violations,
            flows,
            slots,
        }
    }
}
