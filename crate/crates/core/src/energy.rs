//! Quad-rotor propulsion power and battery bookkeeping.

use serde::{Deserialize, Serialize};

use crate::env::OptionId;

/// Rotor and airframe constants of the propulsion model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RotorParams {
    /// Blade angular velocity (rad/s).
    pub blade_angular_velocity: f64,
    /// Rotor radius (m).
    pub rotor_radius: f64,
    /// Air density (kg/m³).
    pub air_density: f64,
    pub rotor_solidity: f64,
    /// Rotor disc area (m²).
    pub disc_area: f64,
    /// Mean induced velocity in hover (m/s).
    pub induced_velocity: f64,
    pub fuselage_drag_ratio: f64,
    /// Blade profile power in hover (W).
    pub profile_power: f64,
    /// Induced power in hover (W).
    pub induced_power: f64,
}

impl Default for RotorParams {
    fn default() -> Self {
        Self {
            blade_angular_velocity: 300.0,
            rotor_radius: 0.4,
            air_density: 1.225,
            rotor_solidity: 0.05,
            disc_area: 0.503,
            induced_velocity: 4.03,
            fuselage_drag_ratio: 0.6,
            profile_power: 79.86,
            induced_power: 88.63,
        }
    }
}

impl RotorParams {
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            self.blade_angular_velocity,
            self.rotor_radius,
            self.air_density,
            self.rotor_solidity,
            self.disc_area,
            self.induced_velocity,
            self.fuselage_drag_ratio,
            self.profile_power,
            self.induced_power,
        ];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err("rotor parameters must all be strictly positive".into())
        }
    }
}

/// Blade profile, induced and parasite power at forward speed `v`.
pub fn propulsion_components(v: f64, rp: &RotorParams) -> [f64; 3] {
    let tip = rp.blade_angular_velocity * rp.rotor_radius;
    let v2 = v * v;
    let v0_2 = rp.induced_velocity * rp.induced_velocity;
    let profile = rp.profile_power * (1.0 + 3.0 * v2 / (tip * tip));
    let induced_ratio = (1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)).sqrt() - v2 / (2.0 * v0_2);
    let induced = rp.induced_power * induced_ratio.max(0.0).sqrt();
    let parasite = 0.5 * rp.fuselage_drag_ratio * rp.air_density * rp.rotor_solidity * rp.disc_area * v2 * v;
    [profile, induced, parasite]
}

/// Propulsion power (W) at forward speed `v` (m/s).
pub fn propulsion_power(v: f64, rp: &RotorParams) -> f64 {
    propulsion_components(v, rp).iter().sum()
}

/// Grid resolution of the efficiency search (m/s).
pub const VELOCITY_GRID_STEP: f64 = 0.01;

fn velocity_grid(v_max: f64) -> impl Iterator<Item = f64> {
    let n = (v_max / VELOCITY_GRID_STEP).round().max(1.0) as usize;
    (1..=n).map(|k| k as f64 * VELOCITY_GRID_STEP)
}

/// Speed in `(0, v_max]` maximizing distance per joule, `argmax v/P(v)`,
/// on a 0.01 m/s grid.
pub fn max_efficiency_velocity(rp: &RotorParams, v_max: f64) -> f64 {
    velocity_grid(v_max)
        .map(|v| (v, v / propulsion_power(v, rp)))
        .fold((0.0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0
}

/// Largest propulsion power over `[0, v_max]`, on the same grid plus hover.
pub fn max_propulsion_power(rp: &RotorParams, v_max: f64) -> f64 {
    velocity_grid(v_max)
        .map(|v| propulsion_power(v, rp))
        .fold(propulsion_power(0.0, rp), f64::max)
}

/// Propulsion model with the derived cruise quantities cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    pub rotor: RotorParams,
    pub v_max: f64,
    /// Max-energy-efficiency speed.
    pub v_mee: f64,
    /// Propulsion power at `v_mee`.
    pub p_mee: f64,
    /// Worst-case propulsion power over `[0, v_max]`.
    pub p_max: f64,
}

impl EnergyModel {
    pub fn new(rotor: RotorParams, v_max: f64) -> Self {
        let v_mee = max_efficiency_velocity(&rotor, v_max);
        Self {
            rotor,
            v_max,
            v_mee,
            p_mee: propulsion_power(v_mee, &rotor),
            p_max: max_propulsion_power(&rotor, v_max),
        }
    }

    pub fn power(&self, v: f64) -> f64 {
        propulsion_power(v, &self.rotor)
    }

    /// Energy to fly `distance` metres at `v_mee`.
    pub fn return_energy(&self, distance: f64) -> f64 {
        self.p_mee * distance / self.v_mee
    }

    /// Energy left if the UAV returned to the charging station now.
    pub fn conditional_leftover(&self, energy: f64, distance: f64) -> f64 {
        energy - self.return_energy(distance)
    }
}

/// Energies (J) of both UAVs and their capacities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub e_m: f64,
    pub e_a: f64,
    pub e_m_max: f64,
    pub e_a_max: f64,
}

impl BatteryState {
    pub fn full(e_m_max: f64, e_a_max: f64) -> Self {
        Self {
            e_m: e_m_max,
            e_a: e_a_max,
            e_m_max,
            e_a_max,
        }
    }
}

/// Per-slot energy flows (J), kept so episode ledgers can be audited.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyFlows {
    pub muav_propulsion: f64,
    pub muav_comm: f64,
    pub muav_charge_tx: f64,
    pub auav_propulsion: f64,
    /// Energy credited to the AUAV before the capacity clamp.
    pub auav_harvested: f64,
    /// Harvested energy discarded by the capacity clamp.
    pub auav_discarded: f64,
}

impl EnergyFlows {
    pub fn muav_spent(&self) -> f64 {
        self.muav_propulsion + self.muav_comm + self.muav_charge_tx
    }

    pub fn auav_net(&self) -> f64 {
        self.auav_harvested - self.auav_discarded - self.auav_propulsion
    }

    pub fn accumulate(&mut self, other: &EnergyFlows) {
        self.muav_propulsion += other.muav_propulsion;
        self.muav_comm += other.muav_comm;
        self.muav_charge_tx += other.muav_charge_tx;
        self.auav_propulsion += other.auav_propulsion;
        self.auav_harvested += other.auav_harvested;
        self.auav_discarded += other.auav_discarded;
    }
}

/// Slot-level inputs of [`step_energy_update`].
#[derive(Debug, Clone, Copy)]
pub struct SlotEnergyInput {
    pub option: OptionId,
    pub v_m: f64,
    pub v_a: f64,
    pub p_t: f64,
    pub p_c: f64,
    pub p_r: f64,
    pub slot_duration: f64,
    pub alpha_c: f64,
}

/// One charging or communication slot.
///
/// The MUAV pays propulsion plus transmit power (communication) or charging
/// power (charging); the AUAV pays propulsion and, when charging, harvests
/// `δτ·α_c·p_r` up to its capacity. Termination slots go through
/// [`return_slot_update`] instead and are treated here as propulsion only.
pub fn step_energy_update(
    b: &BatteryState,
    input: &SlotEnergyInput,
    model: &EnergyModel,
) -> (BatteryState, EnergyFlows) {
    let dt = input.slot_duration;
    let mut flows = EnergyFlows {
        muav_propulsion: dt * model.power(input.v_m),
        auav_propulsion: dt * model.power(input.v_a),
        ..EnergyFlows::default()
    };
    match input.option {
        OptionId::Communicate => flows.muav_comm = dt * input.p_t,
        OptionId::Charge => {
            flows.muav_charge_tx = dt * input.p_c;
            flows.auav_harvested = dt * input.alpha_c * input.p_r;
        }
        OptionId::Terminate => {}
    }
    let e_m = b.e_m - flows.muav_spent();
    let uncapped = b.e_a - flows.auav_propulsion + flows.auav_harvested;
    let e_a = uncapped.min(b.e_a_max);
    flows.auav_discarded = uncapped - e_a;
    (BatteryState { e_m, e_a, ..*b }, flows)
}

/// Straight-line return leg: each UAV pays `P(v_mee)·distance/v_mee`.
pub fn return_slot_update(
    b: &BatteryState,
    dist_m: f64,
    dist_a: f64,
    model: &EnergyModel,
) -> (BatteryState, EnergyFlows) {
    let flows = EnergyFlows {
        muav_propulsion: model.return_energy(dist_m),
        auav_propulsion: model.return_energy(dist_a),
        ..EnergyFlows::default()
    };
    let next = BatteryState {
        e_m: b.e_m - flows.muav_propulsion,
        e_a: b.e_a - flows.auav_propulsion,
        ..*b
    };
    (next, flows)
}
