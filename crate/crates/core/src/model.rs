//! Thermostatically controlled load model and its flexibility polytope.
//!
//! A cooling TCL follows `θ(t) = a·θ(t−1) + (1−a)(θ_a − b·p(t))` and must keep
//! `θ(t)` inside the dead-band `[θ_r − Δ/2, θ_r + Δ/2]`. With
//! `x(t) = (θ_a − θ(t)) / ((1−a)·b)` and `u(t) = p(t)` the dynamics become the
//! leaky storage `x(t) = a·x(t−1) + u(t)`, and the dead-band turns into bounds on
//! the discounted cumulative input `Σ_{s≤t} a^{t−s} u(s)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::polytope::{unit, HRep, Row};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("retention factor a = {0} outside [0, 1)")]
    RetentionOutOfRange(f64),
    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("initial temperature {theta_0} outside dead-band [{lo}, {hi}]")]
    InitialOutsideBand { theta_0: f64, lo: f64, hi: f64 },
    #[error("parameter `{0}` is not finite")]
    NonFinite(&'static str),
    #[error("horizon must be at least one period")]
    EmptyHorizon,
    #[error("power profile has length {found}, expected {expected}")]
    ProfileLength { expected: usize, found: usize },
    #[error("power p({t}) = {value} outside [0, {p_max}]")]
    PowerOutOfRange { t: usize, value: f64, p_max: f64 },
}

/// Physical parameters of one cooling TCL.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TclParams {
    /// Per-period retention factor.
    pub a: f64,
    /// Thermal gain, °C per kW.
    pub b: f64,
    /// Ambient temperature, °C.
    pub theta_a: f64,
    /// Set-point, °C.
    pub theta_r: f64,
    /// Dead-band width, °C.
    pub delta: f64,
    /// Power rating, kW.
    pub p_max: f64,
    /// Initial temperature, °C.
    pub theta_0: f64,
}

impl TclParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("a", self.a),
            ("b", self.b),
            ("theta_a", self.theta_a),
            ("theta_r", self.theta_r),
            ("delta", self.delta),
            ("p_max", self.p_max),
            ("theta_0", self.theta_0),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(ModelError::NonFinite(name));
            }
        }
        if !(0.0..1.0).contains(&self.a) {
            return Err(ModelError::RetentionOutOfRange(self.a));
        }
        for (name, value) in [("b", self.b), ("delta", self.delta), ("p_max", self.p_max)] {
            if value <= 0.0 {
                return Err(ModelError::NonPositive { name, value });
            }
        }
        let (lo, hi) = self.dead_band();
        if self.theta_0 < lo || self.theta_0 > hi {
            return Err(ModelError::InitialOutsideBand { theta_0: self.theta_0, lo, hi });
        }
        Ok(())
    }

    pub fn dead_band(&self) -> (f64, f64) {
        (self.theta_r - self.delta / 2.0, self.theta_r + self.delta / 2.0)
    }

    /// `(1−a)·b`, the temperature-to-state scale.
    fn state_scale(&self) -> f64 {
        (1.0 - self.a) * self.b
    }

    pub fn temperature_to_state(&self, theta: f64) -> f64 {
        (self.theta_a - theta) / self.state_scale()
    }

    pub fn state_to_temperature(&self, x: f64) -> f64 {
        self.theta_a - x * self.state_scale()
    }
}

/// Normalized leaky-storage form of a TCL over a fixed horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransformedDevice {
    pub a: f64,
    pub horizon: usize,
    pub u_min: f64,
    pub u_max: f64,
    /// Bounds on `Σ_{s≤t} a^{t−s} u(s)`, already shifted by `a^t·x0`.
    pub x_lb: Vec<f64>,
    pub x_ub: Vec<f64>,
    pub x0: f64,
}

pub fn transform(params: &TclParams, horizon: usize) -> Result<TransformedDevice, ModelError> {
    params.validate()?;
    if horizon == 0 {
        return Err(ModelError::EmptyHorizon);
    }
    let (lo, hi) = params.dead_band();
    // higher temperature ↔ lower state
    let x_min = params.temperature_to_state(hi);
    let x_max = params.temperature_to_state(lo);
    let x0 = params.temperature_to_state(params.theta_0);
    let mut x_lb = Vec::with_capacity(horizon);
    let mut x_ub = Vec::with_capacity(horizon);
    let mut decay = 1.0;
    for _ in 0..horizon {
        decay *= params.a;
        x_lb.push(x_min - decay * x0);
        x_ub.push(x_max - decay * x0);
    }
    Ok(TransformedDevice { a: params.a, horizon, u_min: 0.0, u_max: params.p_max, x_lb, x_ub, x0 })
}

impl TransformedDevice {
    /// Builds a device directly from normalized data (constant input bounds).
    pub fn from_bounds(a: f64, u_min: f64, u_max: f64, x_lb: Vec<f64>, x_ub: Vec<f64>) -> Self {
        assert_eq!(x_lb.len(), x_ub.len());
        assert!(u_min <= u_max);
        Self { a, horizon: x_lb.len(), u_min, u_max, x_lb, x_ub, x0: 0.0 }
    }

    /// Coefficients `a^{t−s}` of the discounted cumulative row ending at
    /// period `t` (1-based), padded with zeros to `dim`.
    pub fn discount_row(&self, t: usize, dim: usize) -> Vec<f64> {
        let mut row = vec![0.0; dim];
        let mut w = 1.0;
        for s in (0..t).rev() {
            row[s] = w;
            w *= self.a;
        }
        row
    }

    /// Box rows and discounted cumulative rows of the first `t` periods.
    pub fn prefix_halfspaces(&self, t: usize) -> HRep {
        assert!(t <= self.horizon);
        let mut rows = Vec::with_capacity(4 * t);
        for s in 0..t {
            rows.push(Row::ge(unit(t, s), self.u_min));
        }
        for s in 0..t {
            rows.push(Row::le(unit(t, s), self.u_max));
        }
        for s in 1..=t {
            rows.push(Row::ge(self.discount_row(s, t), self.x_lb[s - 1]));
        }
        for s in 1..=t {
            rows.push(Row::le(self.discount_row(s, t), self.x_ub[s - 1]));
        }
        HRep::from_rows(t, rows).expect("well-formed rows")
    }

    /// Row order: box-lower, box-upper, cumulative-lower, cumulative-upper,
    /// each by ascending period.
    pub fn flexibility_halfspaces(&self) -> HRep {
        self.prefix_halfspaces(self.horizon)
    }

    /// Exact emptiness test by propagating the reachable state interval.
    pub fn reachable_state_intervals(&self) -> Option<Vec<(f64, f64)>> {
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        let mut out = Vec::with_capacity(self.horizon);
        for t in 0..self.horizon {
            lo = (self.a * lo + self.u_min).max(self.x_lb[t]);
            hi = (self.a * hi + self.u_max).min(self.x_ub[t]);
            if lo > hi {
                return None;
            }
            out.push((lo, hi));
        }
        Some(out)
    }

    /// State trajectory `x(1..T)` induced by `u`, starting from `x0`.
    pub fn states(&self, u: &[f64]) -> Vec<f64> {
        let mut x = self.x0;
        u.iter()
            .map(|&ut| {
                x = self.a * x + ut;
                x
            })
            .collect()
    }
}

/// Temperature trajectory `θ(1..T)` under the power profile `p`.
pub fn simulate_temperature(params: &TclParams, power: &[f64]) -> Result<Vec<f64>, ModelError> {
    params.validate()?;
    let mut theta = params.theta_0;
    let mut out = Vec::with_capacity(power.len());
    for (t, &p) in power.iter().enumerate() {
        if !(0.0..=params.p_max).contains(&p) {
            return Err(ModelError::PowerOutOfRange { t: t + 1, value: p, p_max: params.p_max });
        }
        theta = params.a * theta + (1.0 - params.a) * (params.theta_a - params.b * p);
        out.push(theta);
    }
    Ok(out)
}

/// Like [`simulate_temperature`] but clamps tiny negative or excess power
/// values produced by floating-point dispatch.
pub fn simulate_temperature_clamped(params: &TclParams, power: &[f64], slack: f64) -> Result<Vec<f64>, ModelError> {
    let clamped: Vec<f64> = power
        .iter()
        .enumerate()
        .map(|(t, &p)| {
            if p < -slack || p > params.p_max + slack {
                Err(ModelError::PowerOutOfRange { t: t + 1, value: p, p_max: params.p_max })
            } else {
                Ok(p.clamp(0.0, params.p_max))
            }
        })
        .collect::<Result<_, _>>()?;
    simulate_temperature(params, &clamped)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{contains_point, FEAS_TOL};

    fn reference() -> TclParams {
        TclParams { a: 0.9, b: 2.0, theta_a: 32.0, theta_r: 20.0, delta: 1.0, p_max: 5.0, theta_0: 20.0 }
    }

    #[test]
    fn transform_reference_instance() {
        let dev = transform(&reference(), 2).unwrap();
        assert!((dev.x0 - 60.0).abs() < 1e-9);
        assert!((dev.x_lb[0] - 3.5).abs() < 1e-9);
        assert!((dev.x_ub[0] - 8.5).abs() < 1e-9);
        assert_eq!((dev.u_min, dev.u_max), (0.0, 5.0));
        // unshifted range [57.5, 62.5]
        let p = reference();
        assert!((p.temperature_to_state(20.5) - 57.5).abs() < 1e-9);
        assert!((p.temperature_to_state(19.5) - 62.5).abs() < 1e-9);
    }

    #[test]
    fn start_at_cold_edge() {
        let p = TclParams { theta_0: 19.5, ..reference() };
        let dev = transform(&p, 1).unwrap();
        assert!((dev.x0 - 62.5).abs() < 1e-9);
        assert!((dev.x_ub[0] - 6.25).abs() < 1e-9);
        // with enough power, u(1) = x_ub(1) lands exactly on the cold edge
        let strong = TclParams { p_max: 10.0, ..p };
        let theta = simulate_temperature(&strong, &[6.25]).unwrap();
        assert!((theta[0] - 19.5).abs() < 1e-12);
    }

    #[test]
    fn memoryless_device_ignores_initial_state() {
        let mut p = reference();
        p.a = 0.0;
        let d1 = transform(&p, 3).unwrap();
        p.theta_0 = 19.7;
        let d2 = transform(&p, 3).unwrap();
        assert_eq!(d1.x_lb, d2.x_lb);
        assert_eq!(d1.x_ub, d2.x_ub);
        assert_eq!(d1.discount_row(3, 3), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn width_is_constant() {
        let p = reference();
        let dev = transform(&p, 6).unwrap();
        let width = p.delta / ((1.0 - p.a) * p.b);
        for t in 0..6 {
            assert!((dev.x_ub[t] - dev.x_lb[t] - width).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = reference();
        p.a = 1.0;
        assert_eq!(transform(&p, 2), Err(ModelError::RetentionOutOfRange(1.0)));
        p.a = -0.1;
        assert!(transform(&p, 2).is_err());
        assert_eq!(transform(&reference(), 0), Err(ModelError::EmptyHorizon));
        let p = TclParams { theta_0: 25.0, ..reference() };
        assert!(matches!(p.validate(), Err(ModelError::InitialOutsideBand { .. })));
        let p = TclParams { delta: 0.0, ..reference() };
        assert!(matches!(p.validate(), Err(ModelError::NonPositive { name: "delta", .. })));
    }

    #[test]
    fn relaxation_and_fixed_point() {
        let theta = simulate_temperature(&reference(), &[0.0; 5]).unwrap();
        assert!((theta[0] - 21.2).abs() < 1e-12);
        assert!(theta.windows(2).all(|w| w[1] > w[0] && w[1] < 32.0));

        let p = TclParams { p_max: 7.0, ..reference() };
        let hold = (p.theta_a - p.theta_r) / p.b;
        let theta = simulate_temperature(&p, &[hold; 4]).unwrap();
        assert!(theta.iter().all(|t| (t - 20.0).abs() < 1e-12));

        assert!(matches!(
            simulate_temperature(&reference(), &[6.0]),
            Err(ModelError::PowerOutOfRange { t: 1, .. })
        ));
    }

    #[test]
    fn halfspace_layout() {
        let dev = TransformedDevice::from_bounds(0.7, 0.0, 1.0, vec![0.3, 0.3], vec![1.3, 1.3]);
        let h = dev.flexibility_halfspaces();
        assert_eq!(h.len(), 8);
        assert_eq!(h.rows()[5].normal, vec![0.7, 1.0]);
        assert_eq!(h.rows()[7].normal, vec![0.7, 1.0]);
        assert!(contains_point(&h, &[1.0, 0.6], FEAS_TOL));
        assert!((h.rows()[7].activity(&[1.0, 0.6]) - 1.3).abs() < 1e-12);
        assert!(!contains_point(&h, &[0.0, 0.0], FEAS_TOL));

        let lossless = TransformedDevice::from_bounds(1.0, 0.0, 1.0, vec![0.0; 3], vec![3.0; 3]);
        assert_eq!(lossless.flexibility_halfspaces().rows()[11].normal, vec![1.0, 1.0, 1.0]);
    }
}
