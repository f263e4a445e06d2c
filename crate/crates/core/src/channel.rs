//! Air-to-ground propagation and the IRS-assisted link.
//!
//! Covers the probabilistic line-of-sight path loss, uniform planar array
//! steering vectors, the three rank-one channels (MUAV to IRS, MUAV to the
//! AUAV's harvesting array, IRS to ground node), maximum ratio transmission
//! beamformers, the phase configuration that coherently combines every IRS
//! path, and the resulting achievable rate and wireless charging power.
//!
//! All functions are pure; linear-domain math is carried out in `f64`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("path-loss domain error: distance {distance} m, altitude difference {altitude_diff} m")]
    Domain { distance: f64, altitude_diff: f64 },
    #[error("degenerate geometry: {0} coincide in 3-D")]
    Degenerate(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

pub type Result<T> = std::result::Result<T, ChannelError>;

/// Horizontal position in metres.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Bearing of `other` as seen from `self`, in `[-π, π]`.
    pub fn bearing_to(&self, other: &Point) -> f64 {
        (other.y - self.y).atan2(other.x - self.x)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Positions of the two UAVs and the linked ground node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    pub muav: Point,
    pub auav: Point,
    pub gn: Point,
    pub h_m: f64,
    pub h_a: f64,
}

impl Geometry {
    /// Slant distance MUAV to AUAV.
    pub fn d_ma(&self) -> f64 {
        self.muav.distance(&self.auav).hypot(self.h_m - self.h_a)
    }

    /// Slant distance AUAV to ground node.
    pub fn d_ag(&self) -> f64 {
        self.auav.distance(&self.gn).hypot(self.h_a)
    }

    fn validate(&self) -> Result<()> {
        let finite = self.muav.is_finite()
            && self.auav.is_finite()
            && self.gn.is_finite()
            && self.h_m.is_finite()
            && self.h_a.is_finite();
        if !finite {
            return Err(ChannelError::Degenerate("non-finite coordinates"));
        }
        if self.d_ma() <= 0.0 {
            return Err(ChannelError::Degenerate("MUAV and AUAV"));
        }
        if self.d_ag() <= 0.0 {
            return Err(ChannelError::Degenerate("AUAV and ground node"));
        }
        Ok(())
    }
}

/// Vertical (`theta_*`) and horizontal (`xi_*`) arrival/departure angles.
///
/// Vertical angles are elevations in `[0, π/2]`; horizontal angles are
/// bearings in `[-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleSet {
    pub theta_mr_arrival: f64,
    pub xi_mr_arrival: f64,
    pub theta_mr_departure: f64,
    pub xi_mr_departure: f64,
    pub theta_ma_arrival: f64,
    pub theta_ma_departure: f64,
    pub theta_rg_departure: f64,
    pub xi_rg_departure: f64,
}

/// Element counts of the three planar arrays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrayConfig {
    pub muav_x: usize,
    pub muav_y: usize,
    pub auav_x: usize,
    pub auav_y: usize,
    pub irs_x: usize,
    pub irs_y: usize,
    /// Element spacing over carrier wavelength.
    pub spacing_ratio: f64,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            muav_x: 16,
            muav_y: 8,
            auav_x: 16,
            auav_y: 8,
            irs_x: 16,
            irs_y: 8,
            spacing_ratio: 0.5,
        }
    }
}

impl ArrayConfig {
    pub fn s_m(&self) -> usize {
        self.muav_x * self.muav_y
    }

    pub fn s_a(&self) -> usize {
        self.auav_x * self.auav_y
    }

    pub fn s_r(&self) -> usize {
        self.irs_x * self.irs_y
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let counts = [
            self.muav_x,
            self.muav_y,
            self.auav_x,
            self.auav_y,
            self.irs_x,
            self.irs_y,
        ];
        if counts.iter().any(|&c| c == 0) {
            return Err("array element counts must be positive".into());
        }
        if !(self.spacing_ratio.is_finite() && self.spacing_ratio > 0.0) {
            return Err("spacing_ratio must be positive".into());
        }
        Ok(())
    }
}

/// Parameters of the probabilistic line-of-sight model and the receiver noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationParams {
    pub eta_a: f64,
    pub eta_b: f64,
    /// Excess loss of line-of-sight links (dB).
    pub eta_los_db: f64,
    /// Excess loss of non-line-of-sight links (dB).
    pub eta_nlos_db: f64,
    pub carrier_hz: f64,
    /// Receiver noise power (W).
    pub noise_power: f64,
}

impl Default for PropagationParams {
    /// Dense urban environment at 2.4 GHz.
    fn default() -> Self {
        Self {
            eta_a: 12.08,
            eta_b: 0.11,
            eta_los_db: 1.6,
            eta_nlos_db: 23.0,
            carrier_hz: 2.4e9,
            noise_power: 1e-13,
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(self.eta_los_db >= 0.0 && self.eta_nlos_db >= self.eta_los_db) {
            return Err("excess losses must satisfy 0 <= eta_los_db <= eta_nlos_db".into());
        }
        if !(self.carrier_hz > 0.0 && self.carrier_hz.is_finite()) {
            return Err("carrier_hz must be positive".into());
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err("noise_power must be positive".into());
        }
        if !(self.eta_a.is_finite() && self.eta_b.is_finite()) {
            return Err("sigmoid constants must be finite".into());
        }
        Ok(())
    }
}

fn check_domain(d: f64, dh: f64) -> Result<()> {
    if !(d > 0.0 && dh > 0.0 && dh <= d && d.is_finite()) {
        return Err(ChannelError::Domain {
            distance: d,
            altitude_diff: dh,
        });
    }
    Ok(())
}

/// Line-of-sight probability; the elevation angle enters the sigmoid in degrees.
pub fn los_probability(d: f64, dh: f64, p: &PropagationParams) -> Result<f64> {
    check_domain(d, dh)?;
    let elevation_deg = (dh / d).asin().to_degrees();
    Ok(1.0 / (1.0 + p.eta_a * (-p.eta_b * (elevation_deg - p.eta_a)).exp()))
}

/// Free-space loss in dB at slant distance `d`.
pub fn free_space_loss_db(d: f64, p: &PropagationParams) -> f64 {
    20.0 * (4.0 * PI * p.carrier_hz * d / SPEED_OF_LIGHT).log10()
}

/// Average path loss (dB): free-space loss plus the LoS/NLoS excess weighted
/// by the line-of-sight probability.
pub fn avg_path_loss_db(d: f64, dh: f64, p: &PropagationParams) -> Result<f64> {
    let g = los_probability(d, dh, p)?;
    Ok(free_space_loss_db(d, p) + g * p.eta_los_db + (1.0 - g) * p.eta_nlos_db)
}

/// Linear power gain `10^(-PL/10)`.
pub fn path_gain(d: f64, dh: f64, p: &PropagationParams) -> Result<f64> {
    Ok(db_to_gain(avg_path_loss_db(d, dh, p)?))
}

pub fn db_to_gain(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

pub fn compute_angles(g: &Geometry) -> Result<AngleSet> {
    g.validate()?;
    let theta_ma = ((g.h_m - g.h_a) / g.d_ma()).clamp(-1.0, 1.0).asin();
    let theta_rg = (g.h_a / g.d_ag()).clamp(-1.0, 1.0).asin();
    Ok(AngleSet {
        theta_mr_arrival: theta_ma,
        xi_mr_arrival: g.auav.bearing_to(&g.muav),
        theta_mr_departure: theta_ma,
        xi_mr_departure: g.muav.bearing_to(&g.auav),
        theta_ma_arrival: theta_ma,
        theta_ma_departure: theta_ma,
        theta_rg_departure: theta_rg,
        xi_rg_departure: g.auav.bearing_to(&g.gn),
    })
}

/// Phase progression `-2π·(Δd/λ)·u` per element of a linear array.
fn phase_step(u: f64, spacing_ratio: f64) -> f64 {
    -TAU * spacing_ratio * u
}

/// Direction cosines of the two array axes.
fn direction_cosines(theta: f64, xi: f64) -> (f64, f64) {
    (theta.sin() * xi.cos(), theta.sin() * xi.sin())
}

/// Planar-array steering vector `f_Kx(sinθ cosξ) ⊗ f_Ky(sinθ sinξ)`.
///
/// Element `m·Ky + l` has phase `-2π·(Δd/λ)·(m·u_x + l·u_y)`.
pub fn steering_vector(theta: f64, xi: f64, kx: usize, ky: usize, spacing_ratio: f64) -> Array1<Complex64> {
    let (ux, uy) = direction_cosines(theta, xi);
    let (sx, sy) = (phase_step(ux, spacing_ratio), phase_step(uy, spacing_ratio));
    Array1::from_shape_fn(kx * ky, |idx| {
        let (m, l) = (idx / ky, idx % ky);
        Complex64::from_polar(1.0, m as f64 * sx + l as f64 * sy)
    })
}

/// `√α · a_rx · a_txᴴ`
fn rank_one(alpha: f64, rx: &Array1<Complex64>, tx: &Array1<Complex64>) -> Array2<Complex64> {
    let scale = alpha.sqrt();
    Array2::from_shape_fn((rx.len(), tx.len()), |(r, t)| rx[r] * tx[t].conj() * scale)
}

fn muav_comm_steering(a: &AngleSet, cfg: &ArrayConfig) -> Array1<Complex64> {
    steering_vector(
        FRAC_PI_2 - a.theta_mr_departure,
        a.xi_mr_departure,
        cfg.muav_x,
        cfg.muav_y,
        cfg.spacing_ratio,
    )
}

fn muav_charge_steering(a: &AngleSet, cfg: &ArrayConfig) -> Array1<Complex64> {
    steering_vector(
        a.theta_ma_departure,
        a.xi_mr_departure,
        cfg.muav_x,
        cfg.muav_y,
        cfg.spacing_ratio,
    )
}

fn irs_incident_steering(a: &AngleSet, cfg: &ArrayConfig) -> Array1<Complex64> {
    steering_vector(
        a.theta_mr_arrival,
        a.xi_mr_arrival,
        cfg.irs_x,
        cfg.irs_y,
        cfg.spacing_ratio,
    )
}

fn irs_reflect_steering(a: &AngleSet, cfg: &ArrayConfig) -> Array1<Complex64> {
    steering_vector(
        a.theta_rg_departure,
        a.xi_rg_departure,
        cfg.irs_x,
        cfg.irs_y,
        cfg.spacing_ratio,
    )
}

/// Path gain shared by the MUAV→IRS and MUAV→AUAV links.
pub fn alpha_ma(g: &Geometry, p: &PropagationParams) -> Result<f64> {
    path_gain(g.d_ma(), g.h_m - g.h_a, p)
}

/// Path gain of the IRS→GN link.
pub fn alpha_rg(g: &Geometry, p: &PropagationParams) -> Result<f64> {
    path_gain(g.d_ag(), g.h_a, p)
}

/// MUAV to IRS channel, `S_R × S_M`.
pub fn channel_mr(g: &Geometry, cfg: &ArrayConfig, p: &PropagationParams) -> Result<Array2<Complex64>> {
    let a = compute_angles(g)?;
    let alpha = alpha_ma(g, p)?;
    Ok(rank_one(alpha, &irs_incident_steering(&a, cfg), &muav_comm_steering(&a, cfg)))
}

/// MUAV to the AUAV's harvesting array, `S_A × S_M`.
pub fn channel_ma(g: &Geometry, cfg: &ArrayConfig, p: &PropagationParams) -> Result<Array2<Complex64>> {
    let a = compute_angles(g)?;
    let alpha = alpha_ma(g, p)?;
    let rx = steering_vector(
        a.theta_ma_arrival,
        a.xi_mr_arrival,
        cfg.auav_x,
        cfg.auav_y,
        cfg.spacing_ratio,
    );
    Ok(rank_one(alpha, &rx, &muav_charge_steering(&a, cfg)))
}

/// IRS to ground node channel, length `S_R`.
pub fn channel_rg(g: &Geometry, cfg: &ArrayConfig, p: &PropagationParams) -> Result<Array1<Complex64>> {
    let a = compute_angles(g)?;
    let alpha = alpha_rg(g, p)?;
    Ok(irs_reflect_steering(&a, cfg) * Complex64::new(alpha.sqrt(), 0.0))
}

fn normalized(v: Array1<Complex64>) -> Array1<Complex64> {
    let scale = 1.0 / (v.len() as f64).sqrt();
    v.mapv(|c| c * scale)
}

/// Unit-norm MRT beamformer matched to the MUAV→IRS transmit response.
pub fn mrt_beamformer_comm(a: &AngleSet, cfg: &ArrayConfig) -> Array1<Complex64> {
    normalized(muav_comm_steering(a, cfg))
}

/// Unit-norm MRT beamformer matched to the MUAV→AUAV transmit response.
pub fn mrt_beamformer_charge(a: &AngleSet, cfg: &ArrayConfig) -> Array1<Complex64> {
    normalized(muav_charge_steering(a, cfg))
}

/// IRS phases (radians, `[0, 2π)`) that cancel the incident and reflected
/// array phases element by element, so every cascaded path adds in phase.
pub fn optimal_irs_phases(a: &AngleSet, cfg: &ArrayConfig) -> Vec<f64> {
    let (inc_x, inc_y) = direction_cosines(a.theta_mr_arrival, a.xi_mr_arrival);
    let (ref_x, ref_y) = direction_cosines(a.theta_rg_departure, a.xi_rg_departure);
    // arg(h_RG*) = -step(ref), arg(a_inc) = step(inc); the unit phase is minus their sum.
    let sx = phase_step(ref_x, cfg.spacing_ratio) - phase_step(inc_x, cfg.spacing_ratio);
    let sy = phase_step(ref_y, cfg.spacing_ratio) - phase_step(inc_y, cfg.spacing_ratio);
    (0..cfg.s_r())
        .map(|idx| {
            let (m, l) = (idx / cfg.irs_y, idx % cfg.irs_y);
            (m as f64 * sx + l as f64 * sy).rem_euclid(TAU)
        })
        .collect()
}

/// Cascaded channel as a row vector, `h_RGᴴ · diag(e^{jφ}) · H_MR`.
pub fn end_to_end_channel(
    h_rg: &Array1<Complex64>,
    phases: &[f64],
    h_mr: &Array2<Complex64>,
) -> Result<Array1<Complex64>> {
    let s_r = h_mr.nrows();
    if h_rg.len() != s_r {
        return Err(ChannelError::Dimension {
            what: "h_RG length vs H_MR rows",
            expected: s_r,
            got: h_rg.len(),
        });
    }
    if phases.len() != s_r {
        return Err(ChannelError::Dimension {
            what: "phase vector length vs H_MR rows",
            expected: s_r,
            got: phases.len(),
        });
    }
    let weights: Array1<Complex64> = h_rg
        .iter()
        .zip(phases)
        .map(|(h, &phi)| h.conj() * Complex64::from_polar(1.0, phi))
        .collect();
    Ok(weights.dot(h_mr))
}

/// `p_t · |hᴴ w|² / σ²` for a cascaded row channel.
pub fn snr(p_t: f64, h_e2e: &Array1<Complex64>, w: &Array1<Complex64>, noise_power: f64) -> f64 {
    let gain: Complex64 = h_e2e.iter().zip(w.iter()).map(|(h, w)| h * w).sum();
    p_t * gain.norm_sqr() / noise_power
}

/// Achievable rate in bit/s/Hz.
pub fn data_rate(p_t: f64, h_e2e: &Array1<Complex64>, w: &Array1<Complex64>, noise_power: f64) -> f64 {
    snr(p_t, h_e2e, w, noise_power).ln_1p() / std::f64::consts::LN_2
}

/// SNR reached by MRT plus optimal IRS phases: `p_t·S_M·S_R²·α_MR·α_RG/σ²`.
pub fn optimal_snr_closed_form(
    p_t: f64,
    cfg: &ArrayConfig,
    alpha_mr: f64,
    alpha_rg: f64,
    noise_power: f64,
) -> f64 {
    let s_r = cfg.s_r() as f64;
    p_t * cfg.s_m() as f64 * s_r * s_r * alpha_mr * alpha_rg / noise_power
}

/// Received charging power `S_M·S_A·p_c·α_MA`.
pub fn received_charge_power(p_c: f64, g: &Geometry, cfg: &ArrayConfig, p: &PropagationParams) -> Result<f64> {
    Ok(cfg.s_m() as f64 * cfg.s_a() as f64 * p_c * alpha_ma(g, p)?)
}

/// Everything the environment needs to serve one communication slot.
#[derive(Debug, Clone)]
pub struct CascadedLink {
    pub angles: AngleSet,
    pub alpha_mr: f64,
    pub alpha_rg: f64,
    pub phases: Vec<f64>,
    pub h_e2e: Array1<Complex64>,
    pub beamformer: Array1<Complex64>,
}

impl CascadedLink {
    /// Builds the full matrix pipeline with MRT and optimal IRS phases.
    pub fn optimal(g: &Geometry, cfg: &ArrayConfig, p: &PropagationParams) -> Result<Self> {
        let angles = compute_angles(g)?;
        let alpha_mr = alpha_ma(g, p)?;
        let alpha_rg = alpha_rg(g, p)?;
        let h_mr = rank_one(
            alpha_mr,
            &irs_incident_steering(&angles, cfg),
            &muav_comm_steering(&angles, cfg),
        );
        let h_rg = irs_reflect_steering(&angles, cfg) * Complex64::new(alpha_rg.sqrt(), 0.0);
        let phases = optimal_irs_phases(&angles, cfg);
        let h_e2e = end_to_end_channel(&h_rg, &phases, &h_mr)?;
        let beamformer = mrt_beamformer_comm(&angles, cfg);
        Ok(Self {
            angles,
            alpha_mr,
            alpha_rg,
            phases,
            h_e2e,
            beamformer,
        })
    }

    pub fn rate(&self, p_t: f64, noise_power: f64) -> f64 {
        data_rate(p_t, &self.h_e2e, &self.beamformer, noise_power)
    }

    pub fn snr(&self, p_t: f64, noise_power: f64) -> f64 {
        snr(p_t, &self.h_e2e, &self.beamformer, noise_power)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> PropagationParams {
        PropagationParams::default()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    #[test]
    fn los_probability_overhead() {
        let g = los_probability(5.0, 5.0, &params()).unwrap();
        assert!((g - 0.99772).abs() < 1e-5, "{g}");
    }

    #[test]
    fn los_probability_zero_exponent() {
        let p = params();
        // Elevation equal to eta_a degrees.
        let d = 10.0;
        let dh = d * p.eta_a.to_radians().sin();
        let g = los_probability(d, dh, &p).unwrap();
        assert!((g - 1.0 / 13.08).abs() < 1e-12);
        assert!((g - 0.076453).abs() < 1e-6);
    }

    #[test]
    fn los_probability_monotone_in_elevation() {
        let p = params();
        let g30 = los_probability(2.0, 1.0, &p).unwrap();
        let g60 = los_probability(2.0, 3f64.sqrt(), &p).unwrap();
        assert!(g30 < g60);
    }

    #[test]
    fn domain_errors() {
        let p = params();
        assert!(matches!(los_probability(1.0, 2.0, &p), Err(ChannelError::Domain { .. })));
        assert!(los_probability(0.0, 0.0, &p).is_err());
        assert!(avg_path_loss_db(-1.0, 1.0, &p).is_err());
        assert!(path_gain(1.0, 1.5, &p).is_err());
    }

    #[test]
    fn path_loss_overlapped_hover() {
        // 46.0726 dB free space + 0.99772*1.6 + 0.00228*23.
        let pl = avg_path_loss_db(2.0, 2.0, &params()).unwrap();
        assert!((pl - 47.7215).abs() < 1e-3, "{pl}");
        let alpha = path_gain(2.0, 2.0, &params()).unwrap();
        assert!(close(alpha, 1.68986e-5, 1e-4), "{alpha}");
    }

    #[test]
    fn equal_excess_losses_collapse() {
        let p = PropagationParams {
            eta_los_db: 7.0,
            eta_nlos_db: 7.0,
            ..params()
        };
        for (d, dh) in [(3.0, 1.0), (50.0, 49.0), (120.0, 98.0)] {
            let pl = avg_path_loss_db(d, dh, &p).unwrap();
            assert!((pl - free_space_loss_db(d, &p) - 7.0).abs() < 1e-12);
        }
    }

    #[test]
    fn doubling_distance_adds_six_db_free_space() {
        let p = params();
        let diff = free_space_loss_db(80.0, &p) - free_space_loss_db(40.0, &p);
        assert!((diff - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!((diff - 6.0206).abs() < 1e-4);
    }

    #[test]
    fn gain_decade_law() {
        assert_eq!(db_to_gain(0.0), 1.0);
        assert!((db_to_gain(30.0) - 1e-3).abs() < 1e-15);
    }

    #[test]
    fn overhead_angles() {
        let g = Geometry {
            muav: Point::new(3.0, -4.0),
            auav: Point::new(3.0, -4.0),
            gn: Point::new(3.0, -4.0),
            h_m: 100.0,
            h_a: 98.0,
        };
        let a = compute_angles(&g).unwrap();
        assert!((a.theta_ma_departure - FRAC_PI_2).abs() < 1e-12);
        assert!((a.theta_rg_departure - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn degenerate_geometry_rejected() {
        let g = Geometry {
            muav: Point::new(0.0, 0.0),
            auav: Point::new(0.0, 0.0),
            gn: Point::new(1.0, 0.0),
            h_m: 50.0,
            h_a: 50.0,
        };
        assert!(matches!(compute_angles(&g), Err(ChannelError::Degenerate(_))));
    }

    #[test]
    fn steering_broadside_is_all_ones() {
        let a = steering_vector(0.0, 1.234, 4, 3, 0.5);
        assert!(a.iter().all(|c| (c - Complex64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn steering_two_by_two_endfire() {
        let a = steering_vector(FRAC_PI_2, 0.0, 2, 2, 0.5);
        let e = Complex64::from_polar(1.0, -PI);
        let want = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), e, e];
        for (got, want) in a.iter().zip(want) {
            assert!((got - want).norm() < 1e-12);
        }
    }

    #[test]
    fn channel_entry_zero_is_sqrt_alpha() {
        let g = Geometry {
            muav: Point::new(10.0, 5.0),
            auav: Point::new(-3.0, 7.0),
            gn: Point::new(20.0, -30.0),
            h_m: 100.0,
            h_a: 98.0,
        };
        let cfg = ArrayConfig::default();
        let p = params();
        let am = alpha_ma(&g, &p).unwrap().sqrt();
        let ar = alpha_rg(&g, &p).unwrap().sqrt();
        assert!((channel_mr(&g, &cfg, &p).unwrap()[(0, 0)] - Complex64::new(am, 0.0)).norm() < 1e-15);
        assert!((channel_ma(&g, &cfg, &p).unwrap()[(0, 0)] - Complex64::new(am, 0.0)).norm() < 1e-15);
        assert!((channel_rg(&g, &cfg, &p).unwrap()[0] - Complex64::new(ar, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn single_irs_element_ignores_phase() {
        let cfg = ArrayConfig {
            irs_x: 1,
            irs_y: 1,
            ..ArrayConfig::default()
        };
        let g = Geometry {
            muav: Point::new(1.0, 2.0),
            auav: Point::new(4.0, -1.0),
            gn: Point::new(9.0, 9.0),
            h_m: 100.0,
            h_a: 98.0,
        };
        let p = params();
        let a = compute_angles(&g).unwrap();
        let h_mr = channel_mr(&g, &cfg, &p).unwrap();
        let h_rg = channel_rg(&g, &cfg, &p).unwrap();
        let w = mrt_beamformer_comm(&a, &cfg);
        let rates: Vec<f64> = [0.0, 1.0, 4.0]
            .iter()
            .map(|&phi| data_rate(5.0, &end_to_end_channel(&h_rg, &[phi], &h_mr).unwrap(), &w, p.noise_power))
            .collect();
        assert!((rates[0] - rates[1]).abs() < 1e-9 && (rates[0] - rates[2]).abs() < 1e-9);
    }

    #[test]
    fn end_to_end_dimension_mismatch() {
        let h_mr = Array2::<Complex64>::zeros((4, 3));
        let h_rg = Array1::<Complex64>::zeros(3);
        assert!(matches!(
            end_to_end_channel(&h_rg, &[0.0; 4], &h_mr),
            Err(ChannelError::Dimension { .. })
        ));
        let h_rg = Array1::<Complex64>::zeros(4);
        assert!(end_to_end_channel(&h_rg, &[0.0; 3], &h_mr).is_err());
    }

    #[test]
    fn zero_power_gives_zero_rate() {
        let h = Array1::from_elem(4, Complex64::new(1.0, 1.0));
        let w = Array1::from_elem(4, Complex64::new(0.5, 0.0));
        assert_eq!(data_rate(0.0, &h, &w, 1e-13), 0.0);
    }

    #[test]
    fn unit_snr_gives_one_bit() {
        let h = Array1::from_elem(1, Complex64::new(1.0, 0.0));
        let w = Array1::from_elem(1, Complex64::new(1.0, 0.0));
        assert!((data_rate(2.0, &h, &w, 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn charge_power_overlapped_hover() {
        let g = Geometry {
            muav: Point::new(-75.0, 0.0),
            auav: Point::new(-75.0, 0.0),
            gn: Point::new(0.0, 0.0),
            h_m: 100.0,
            h_a: 98.0,
        };
        let p_r = received_charge_power(5000.0, &g, &ArrayConfig::default(), &params()).unwrap();
        assert!((p_r - 1384.34).abs() < 0.05, "{p_r}");
        assert_eq!(received_charge_power(0.0, &g, &ArrayConfig::default(), &params()).unwrap(), 0.0);
    }
}
