//! Independent oracles and generators shared by the integration tests.
#![allow(dead_code)]

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use flexsum::aggregate::{Population, SamplerConfig};
use flexsum::gpoly::{compute_bounds, InnerApprox};
use flexsum::model::{transform, TclParams, TransformedDevice};
use flexsum::polytope::{HRep, Sense};

/// Vertices by brute force: every `dim`-subset of rows is solved as an
/// equality system and the feasible solutions are kept.
pub fn brute_vertices(h: &HRep) -> Vec<Vec<f64>> {
    let n = h.dim();
    let rows = h.rows();
    let mut out: Vec<Vec<f64>> = Vec::new();
    for pick in (0..rows.len()).combinations(n) {
        let a = DMatrix::from_fn(n, n, |i, j| rows[pick[i]].normal[j]);
        let b = DVector::from_fn(n, |i, _| rows[pick[i]].bound);
        let lu = a.full_piv_lu();
        if !lu.is_invertible() {
            continue;
        }
        let Some(x) = lu.solve(&b) else { continue };
        let x: Vec<f64> = x.iter().copied().collect();
        let ok = rows.iter().all(|r| {
            let v: f64 = r.normal.iter().zip(&x).map(|(p, q)| p * q).sum();
            let tol = 1e-9 * (1.0 + r.bound.abs());
            match r.sense {
                Sense::Le => v <= r.bound + tol,
                Sense::Ge => v >= r.bound - tol,
                Sense::Eq => (v - r.bound).abs() <= tol,
            }
        });
        if ok && !out.iter().any(|y| y.iter().zip(&x).all(|(p, q)| (p - q).abs() < 1e-9)) {
            out.push(x);
        }
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `max c·x` over a vertex list.
pub fn brute_support(vertices: &[Vec<f64>], c: &[f64]) -> f64 {
    vertices.iter().map(|v| dot(v, c)).fold(f64::NEG_INFINITY, f64::max)
}

/// Whether every row of `h` holds at `x` within `tol`.
pub fn satisfies(h: &HRep, x: &[f64], tol: f64) -> bool {
    h.rows().iter().all(|r| r.violation(x) <= tol)
}

/// Euclidean projection of `g` onto `{x : lo_k ≤ a_k·x ≤ hi_k}` by Dykstra's
/// alternating projections.
pub fn dykstra_projection(slabs: &[(Vec<f64>, f64, f64)], g: &[f64], sweeps: usize) -> Vec<f64> {
    let mut x = g.to_vec();
    let mut corr = vec![vec![0.0; g.len()]; slabs.len()];
    for _ in 0..sweeps {
        for (k, (a, lo, hi)) in slabs.iter().enumerate() {
            let y: Vec<f64> = x.iter().zip(&corr[k]).map(|(p, q)| p + q).collect();
            let v = dot(a, &y);
            let nn = dot(a, a);
            let shift = if v > *hi {
                (hi - v) / nn
            } else if v < *lo {
                (lo - v) / nn
            } else {
                0.0
            };
            let proj: Vec<f64> = y.iter().zip(a).map(|(p, q)| p + shift * q).collect();
            corr[k] = y.iter().zip(&proj).map(|(p, q)| p - q).collect();
            x = proj;
        }
    }
    x
}

pub fn default_config() -> SamplerConfig {
    SamplerConfig::default()
}

/// Physical parameters drawn from the default sampler ranges, with the
/// initial temperature anywhere in the dead-band.
pub fn params_strategy() -> impl Strategy<Value = TclParams> {
    (0.85f64..0.98, 1.5f64..2.5, 18.0f64..22.0, 0.5f64..2.0, 2.0f64..6.0, 0.0f64..1.0).prop_map(
        |(a, b, theta_r, delta, p_max, pos)| TclParams {
            a,
            b,
            theta_a: 32.0,
            theta_r,
            delta,
            p_max,
            theta_0: theta_r - delta / 2.0 + pos * delta,
        },
    )
}

/// A device with a nonempty inner approximation over `horizon`.
pub fn device_strategy(horizon: usize) -> impl Strategy<Value = (TclParams, TransformedDevice, InnerApprox)> {
    params_strategy().prop_filter_map("empty flexibility or approximation", move |p| {
        let dev = transform(&p, horizon).ok()?;
        dev.reachable_state_intervals()?;
        let apx = compute_bounds(&dev).ok()?;
        Some((p, dev, apx))
    })
}

/// Abstract leaky-storage device with generic state bounds.
pub fn abstract_device_strategy(horizon: usize) -> impl Strategy<Value = (TransformedDevice, InnerApprox)> {
    (0.5f64..1.0, 0.2f64..2.0, 0.0f64..1.0, 0.5f64..3.0).prop_filter_map(
        "empty flexibility or approximation",
        move |(a, u_max, lo_frac, width)| {
            let lo = lo_frac * u_max;
            let dev = TransformedDevice::from_bounds(a, 0.0, u_max, vec![lo; horizon], vec![lo + width; horizon]);
            dev.reachable_state_intervals()?;
            let apx = compute_bounds(&dev).ok()?;
            Some((dev, apx))
        },
    )
}

/// Stacks the flexibility sets of a population into one block-diagonal HRep
/// over `N·T` variables.
pub fn stacked_flexibility(pop: &Population) -> HRep {
    let t = pop.horizon;
    let n = pop.len();
    let mut h = HRep::new(n * t);
    for (i, m) in pop.members.iter().enumerate() {
        for r in m.device.flexibility_halfspaces().rows() {
            let mut normal = vec![0.0; n * t];
            normal[i * t..(i + 1) * t].copy_from_slice(&r.normal);
            h.push(flexsum::polytope::Row::new(normal, r.sense, r.bound)).unwrap();
        }
    }
    h
}
