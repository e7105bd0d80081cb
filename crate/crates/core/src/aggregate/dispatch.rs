//! Exact per-device optimization and disaggregation of aggregate profiles.
//!
//! Disaggregation is solved by column generation on the stacked feasibility
//! problem: the master LP mixes known extreme profiles of each member set to
//! match the target up to slack, and each pricing step is a linear
//! maximization over one member set with the coupling duals as costs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AggregateError, Population};
use crate::gpoly::{ChainPolytope, InnerApprox};
use crate::model::TransformedDevice;
use crate::polytope::{lp_solve, LinearProgram, LpStatus, OptSense, Row};

/// Default absolute per-coordinate disaggregation tolerance (kW).
pub const DISAGGREGATION_TOL: f64 = 1e-6;
const MAX_ROUNDS: usize = 500;
const PRICING_EPS: f64 = 1e-9;

/// `Σ_i opt { c·u : u ∈ F_i }`, members summed in ascending order.
pub fn exact_linear_cost(pop: &Population, c: &[f64], sense: OptSense) -> Result<f64, AggregateError> {
    Ok(exact_linear_solutions(pop, c, sense)?.iter().map(|(_, v)| v).sum())
}

/// Per-device optimizers and values behind [`exact_linear_cost`].
pub fn exact_linear_solutions(
    pop: &Population,
    c: &[f64],
    sense: OptSense,
) -> Result<Vec<(Vec<f64>, f64)>, AggregateError> {
    if c.len() != pop.horizon {
        return Err(AggregateError::LengthMismatch { expected: pop.horizon, found: c.len() });
    }
    pop.members
        .par_iter()
        .map(|m| {
            let sol = lp_solve(&m.device.flexibility_halfspaces(), c, sense)?;
            match sol.status {
                LpStatus::Optimal => Ok((sol.point, sol.value)),
                _ => Err(AggregateError::DeviceInfeasible(m.approx.device_id)),
            }
        })
        .collect()
}

/// A bounded set of device profiles accessed through linear maximization.
pub trait MemberSet: Sync {
    fn horizon(&self) -> usize;
    fn maximize(&self, c: &[f64]) -> Result<Vec<f64>, AggregateError>;
}

impl MemberSet for TransformedDevice {
    fn horizon(&self) -> usize {
        self.horizon
    }

    fn maximize(&self, c: &[f64]) -> Result<Vec<f64>, AggregateError> {
        let sol = lp_solve(&self.flexibility_halfspaces(), c, OptSense::Max)?;
        match sol.status {
            LpStatus::Optimal => Ok(sol.point),
            _ => Err(AggregateError::DeviceInfeasible(0)),
        }
    }
}

impl MemberSet for InnerApprox {
    fn horizon(&self) -> usize {
        self.y_lb.len()
    }

    fn maximize(&self, c: &[f64]) -> Result<Vec<f64>, AggregateError> {
        self.chain().maximize(c).map(|(u, _)| u).ok_or(AggregateError::DeviceInfeasible(self.device_id))
    }
}

impl MemberSet for ChainPolytope {
    fn horizon(&self) -> usize {
        self.y_lb.len()
    }

    fn maximize(&self, c: &[f64]) -> Result<Vec<f64>, AggregateError> {
        ChainPolytope::maximize(self, c).map(|(u, _)| u).ok_or(AggregateError::DeviceInfeasible(0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Disaggregation {
    Feasible { profiles: Vec<Vec<f64>>, max_residual: f64 },
    Infeasible { residual: f64 },
}

impl Disaggregation {
    pub fn profiles(&self) -> Option<&[Vec<f64>]> {
        match self {
            Disaggregation::Feasible { profiles, .. } => Some(profiles),
            Disaggregation::Infeasible { .. } => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        matches!(self, Disaggregation::Feasible { .. })
    }
}

/// Splits `target` into profiles `u_i ∈ F_i` with `Σ u_i = target` up to `tol`
/// per coordinate.
pub fn disaggregate(pop: &Population, target: &[f64], tol: f64) -> Result<Disaggregation, AggregateError> {
    let devices: Vec<&TransformedDevice> = pop.members.iter().map(|m| &m.device).collect();
    disaggregate_over(&devices, target, tol, &[])
}

/// Column generation over arbitrary member sets. `seed_columns[i]` may hold
/// known points of member `i` to start from.
pub fn disaggregate_over<S: MemberSet>(
    members: &[&S],
    target: &[f64],
    tol: f64,
    seed_columns: &[Vec<Vec<f64>>],
) -> Result<Disaggregation, AggregateError> {
    let n = target.len();
    if members.is_empty() {
        return Err(AggregateError::EmptyPopulation);
    }
    if let Some(m) = members.iter().find(|m| m.horizon() != n) {
        return Err(AggregateError::LengthMismatch { expected: m.horizon(), found: n });
    }

    let ones = vec![1.0; n];
    let neg_ones = vec![-1.0; n];
    let mut columns: Vec<(usize, Vec<f64>)> = Vec::new();
    let starts: Vec<Vec<Vec<f64>>> = members
        .par_iter()
        .map(|m| Ok(vec![m.maximize(&ones)?, m.maximize(&neg_ones)?]))
        .collect::<Result<_, AggregateError>>()?;
    for (i, pts) in starts.into_iter().enumerate() {
        for p in pts.into_iter().chain(seed_columns.get(i).cloned().unwrap_or_default()) {
            columns.push((i, p));
        }
    }

    for _ in 0..MAX_ROUNDS {
        let (x, duals) = solve_master(members.len(), n, &columns, target)?;
        let pi = &duals[..n];
        let mu = &duals[n..];
        let price: Vec<f64> = pi.iter().map(|v| -v).collect();
        let candidates: Vec<(usize, Vec<f64>, f64)> = members
            .par_iter()
            .enumerate()
            .map(|(i, m)| {
                let v = m.maximize(&price)?;
                let rc = price.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() - mu[i];
                Ok((i, v, rc))
            })
            .collect::<Result<_, AggregateError>>()?;
        let scale = 1.0 + pi.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let before = columns.len();
        for (i, v, rc) in candidates {
            if rc > PRICING_EPS * scale * (1.0 + mu[i].abs()) {
                columns.push((i, v));
            }
        }
        if columns.len() == before {
            return Ok(finish(members.len(), n, &columns, &x, target, tol));
        }
    }
    Err(AggregateError::NotConverged("disaggregation column generation"))
}

/// Master LP: `max −Σ(s⁺ + s⁻)` over convex weights per member.
fn solve_master(
    num_members: usize,
    n: usize,
    columns: &[(usize, Vec<f64>)],
    target: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), AggregateError> {
    let k = columns.len();
    let nvars = k + 2 * n;
    let mut objective = vec![0.0; nvars];
    for v in &mut objective[k..] {
        *v = -1.0;
    }
    let mut lp = LinearProgram::new(nvars, objective);
    for t in 0..n {
        let mut row = vec![0.0; nvars];
        for (j, (_, p)) in columns.iter().enumerate() {
            row[j] = p[t];
        }
        row[k + t] = 1.0;
        row[k + n + t] = -1.0;
        lp.add_row(Row::eq(row, target[t]));
    }
    for i in 0..num_members {
        let mut row = vec![0.0; nvars];
        for (j, (owner, _)) in columns.iter().enumerate() {
            if *owner == i {
                row[j] = 1.0;
            }
        }
        lp.add_row(Row::eq(row, 1.0));
    }
    let sol = lp.solve()?;
    if sol.status != LpStatus::Optimal {
        return Err(AggregateError::NotConverged("disaggregation master"));
    }
    Ok((sol.x, sol.duals))
}

fn finish(
    num_members: usize,
    n: usize,
    columns: &[(usize, Vec<f64>)],
    x: &[f64],
    target: &[f64],
    tol: f64,
) -> Disaggregation {
    let mut profiles = vec![vec![0.0; n]; num_members];
    for (j, (i, p)) in columns.iter().enumerate() {
        if x[j] != 0.0 {
            for (acc, v) in profiles[*i].iter_mut().zip(p) {
                *acc += x[j] * v;
            }
        }
    }
    let residual = (0..n)
        .map(|t| (profiles.iter().map(|u| u[t]).sum::<f64>() - target[t]).abs())
        .fold(0.0, f64::max);
    if residual <= tol {
        Disaggregation::Feasible { profiles, max_residual: residual }
    } else {
        Disaggregation::Infeasible { residual }
    }
}
