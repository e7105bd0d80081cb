//! Maximal inner approximations of TCL flexibility by prefix-sum base
//! polytopes, their generating set functions, and aggregation by function
//! addition.
//!
//! For each period `t` the upper prefix bound is the smallest total
//! consumption `Σ_{s≤t} u(s)` among profiles of the first `t` periods that sit
//! on the level set `Σ_{s≤t} a^{t−s} u(s) = z_ub(t)`, where `z_ub(t)` is the
//! tighter of the state bound and the discounted input capacity. The lower
//! bound is the mirror image with the largest total on `z_lb(t)`. The
//! resulting base polytope `B(y_lb, y_ub)` is a g-polymatroid, and sums of
//! such polytopes are obtained by adding their generating functions.

mod chain;
mod greedy;
mod setfn;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chain::ChainPolytope;
pub use greedy::{greedy_linmax, greedy_linmin, greedy_order, greedy_vertex, GreedyVertex};
pub use setfn::{
    aggregate, paramodularity_violation, reflect, AggregateGPoly, DeviceFunctions, Provenance, Reflected,
    SetFunctionPair, Subset, SupportMethod, MAX_HORIZON, MEMO_MAX_HORIZON,
};

use crate::model::TransformedDevice;
use crate::polytope::{is_feasible, lp_solve, unit, HRep, LpStatus, OptSense, PolytopeError, Row};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GPolyError {
    #[error("flexibility set is empty; first contradictory period t = {first_t}")]
    InfeasibleDevice { first_t: usize },
    #[error("level-set problem for period t = {t} is infeasible")]
    LevelSetInfeasible { t: usize },
    #[error("horizon mismatch: expected {expected}, found {found}")]
    HorizonMismatch { expected: usize, found: usize },
    #[error("base polytope is empty")]
    EmptyBase,
    #[error("level-set bounds leave no feasible prefix sum at period t = {t}")]
    EmptyApproximation { t: usize },
    #[error("cannot aggregate an empty member list")]
    EmptyAggregate,
    #[error("horizon {0} exceeds the supported maximum")]
    HorizonTooLarge(usize),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

/// Optimal prefix-sum bounds of the base polytope for one device.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerApprox {
    pub device_id: usize,
    pub a: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub y_lb: Vec<f64>,
    pub y_ub: Vec<f64>,
    /// Level of the lower hyperplane per period (diagnostic).
    #[serde(skip)]
    pub z_lb: Vec<f64>,
    /// Level of the upper hyperplane per period (diagnostic).
    #[serde(skip)]
    pub z_ub: Vec<f64>,
    /// Level-set optima before tightening to attainable prefix sums (diagnostic).
    #[serde(skip)]
    pub raw_y_lb: Vec<f64>,
    #[serde(skip)]
    pub raw_y_ub: Vec<f64>,
}

impl InnerApprox {
    pub fn horizon(&self) -> usize {
        self.y_lb.len()
    }

    pub fn with_id(mut self, id: usize) -> Self {
        self.device_id = id;
        self
    }

    pub fn chain(&self) -> ChainPolytope {
        ChainPolytope::new(self.u_min, self.u_max, self.y_lb.clone(), self.y_ub.clone())
    }

    /// Box rows, then lower and upper unweighted prefix rows.
    pub fn base_hrep(&self) -> HRep {
        base_hrep(self)
    }

    /// Replaces the prefix bounds by the range of prefix sums actually attained
    /// in `B`. The polytope is unchanged; implied rows become tight, so the bounds
    /// satisfy the chain inequalities.
    pub fn tighten(&mut self) -> Result<(), GPolyError> {
        let k = self.chain().prefix_intervals().ok_or(GPolyError::EmptyBase)?;
        for (t, (lo, hi)) in k.into_iter().enumerate() {
            self.y_lb[t] = lo;
            self.y_ub[t] = hi;
        }
        Ok(())
    }

    /// Base polytope of the first `t` periods.
    pub fn truncated(&self, t: usize) -> ChainPolytope {
        ChainPolytope::new(self.u_min, self.u_max, self.y_lb[..t].to_vec(), self.y_ub[..t].to_vec())
    }

    /// Largest violation of `y_lb(t) + u_min ≤ y_lb(t+1) ≤ y_lb(t) + u_max`
    /// (and likewise for `y_ub`), including the step from the empty prefix.
    pub fn chain_inconsistency(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for y in [&self.y_lb, &self.y_ub] {
            let mut prev = 0.0;
            for &cur in y.iter() {
                worst = worst.max(prev + self.u_min - cur).max(cur - prev - self.u_max);
                prev = cur;
            }
        }
        worst
    }
}

pub fn base_hrep(apx: &InnerApprox) -> HRep {
    let n = apx.horizon();
    let prefix = |t: usize| -> Vec<f64> { (0..n).map(|s| if s < t { 1.0 } else { 0.0 }).collect() };
    let mut rows = Vec::with_capacity(4 * n);
    for s in 0..n {
        rows.push(Row::ge(unit(n, s), apx.u_min));
    }
    for s in 0..n {
        rows.push(Row::le(unit(n, s), apx.u_max));
    }
    for t in 1..=n {
        rows.push(Row::ge(prefix(t), apx.y_lb[t - 1]));
    }
    for t in 1..=n {
        rows.push(Row::le(prefix(t), apx.y_ub[t - 1]));
    }
    HRep::from_rows(n, rows).expect("well-formed rows")
}

/// Solves the two level-set LPs per period.
pub fn compute_bounds(dev: &TransformedDevice) -> Result<InnerApprox, GPolyError> {
    let n = dev.horizon;
    if n > MAX_HORIZON {
        return Err(GPolyError::HorizonTooLarge(n));
    }
    if !is_feasible(&dev.flexibility_halfspaces())? {
        let first_t = (1..=n).find(|&t| !is_feasible(&dev.prefix_halfspaces(t)).unwrap_or(false)).unwrap_or(n);
        return Err(GPolyError::InfeasibleDevice { first_t });
    }

    let mut apx = InnerApprox {
        device_id: 0,
        a: dev.a,
        u_min: dev.u_min,
        u_max: dev.u_max,
        y_lb: Vec::with_capacity(n),
        y_ub: Vec::with_capacity(n),
        z_lb: Vec::with_capacity(n),
        z_ub: Vec::with_capacity(n),
        raw_y_lb: Vec::new(),
        raw_y_ub: Vec::new(),
    };
    let mut geometric = 0.0;
    for t in 1..=n {
        geometric = dev.a * geometric + 1.0;
        let z_ub = dev.x_ub[t - 1].min(geometric * dev.u_max);
        let z_lb = dev.x_lb[t - 1].max(geometric * dev.u_min);
        let restricted = dev.prefix_halfspaces(t);
        let ones = vec![1.0; t];
        let level = dev.discount_row(t, t);

        let mut upper = restricted.clone();
        upper.push(Row::eq(level.clone(), z_ub))?;
        let sol = lp_solve(&upper, &ones, OptSense::Min)?;
        if sol.status != LpStatus::Optimal {
            return Err(GPolyError::LevelSetInfeasible { t });
        }
        apx.y_ub.push(sol.value);

        let mut lower = restricted;
        lower.push(Row::eq(level, z_lb))?;
        let sol = lp_solve(&lower, &ones, OptSense::Max)?;
        if sol.status != LpStatus::Optimal {
            return Err(GPolyError::LevelSetInfeasible { t });
        }
        apx.y_lb.push(sol.value);
        apx.z_ub.push(z_ub);
        apx.z_lb.push(z_lb);
    }
    apx.raw_y_lb = apx.y_lb.clone();
    apx.raw_y_ub = apx.y_ub.clone();
    if let Err(e) = apx.tighten() {
        let t = (1..=n).find(|&t| apx.truncated(t).prefix_intervals().is_none()).unwrap_or(n);
        return Err(match e {
            GPolyError::EmptyBase => GPolyError::EmptyApproximation { t },
            other => other,
        });
    }
    Ok(apx)
}

/// LP oracle for `b(A)`.
pub fn support_b(apx: &InnerApprox, set: Subset) -> Result<f64, PolytopeError> {
    crate::polytope::support(&apx.base_hrep(), &set.indicator(apx.horizon()))
}

/// LP oracle for `p(A)`.
pub fn support_p(apx: &InnerApprox, set: Subset) -> Result<f64, PolytopeError> {
    let neg: Vec<f64> = set.indicator(apx.horizon()).iter().map(|v| -v).collect();
    crate::polytope::support(&apx.base_hrep(), &neg).map(|v| -v)
}

/// `b(A)` of a single approximation (memo-free convenience wrapper).
pub fn eval_b(apx: &InnerApprox, set: Subset) -> f64 {
    DeviceFunctions::new(apx).eval_b(set)
}

/// `p(A)` of a single approximation (memo-free convenience wrapper).
pub fn eval_p(apx: &InnerApprox, set: Subset) -> f64 {
    DeviceFunctions::new(apx).eval_p(set)
}
