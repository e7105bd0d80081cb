//! ℓ² tracking of a reference signal over an aggregate set that is only
//! accessible through a linear maximization oracle.
//!
//! The solver is Frank–Wolfe with exact line search, in three flavours: plain,
//! with away steps, and fully corrective (the default). Plain Frank–Wolfe
//! zig-zags near faces of the polytope and stalls well above small gap
//! tolerances. Every iterate is kept as a convex combination of oracle atoms,
//! and each atom carries its member decomposition, so per-device profiles come
//! for free.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::AggregateError;
use crate::baseline_homothet::Homothet;
use crate::gpoly::{greedy_order, greedy_vertex, AggregateGPoly};

/// An extreme point of the aggregate together with one point per member
/// summing to it.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub aggregate: Vec<f64>,
    pub members: Vec<Vec<f64>>,
}

impl Atom {
    fn from_members(members: Vec<Vec<f64>>, horizon: usize) -> Self {
        let mut aggregate = vec![0.0; horizon];
        for m in &members {
            for (acc, v) in aggregate.iter_mut().zip(m) {
                *acc += v;
            }
        }
        Self { aggregate, members }
    }
}

/// Linear maximization over an aggregate with member decomposition.
pub trait LinearOracle: Sync {
    fn horizon(&self) -> usize;
    fn num_members(&self) -> usize;
    fn maximize(&self, c: &[f64]) -> Atom;
}

impl LinearOracle for AggregateGPoly {
    fn horizon(&self) -> usize {
        crate::gpoly::SetFunctionPair::horizon(self)
    }

    fn num_members(&self) -> usize {
        self.len()
    }

    /// The greedy vertex of a sum is the sum of the members' greedy vertices
    /// for the same chain.
    fn maximize(&self, c: &[f64]) -> Atom {
        let (order, flip) = greedy_order(c);
        let members = self.member_functions().iter().map(|f| greedy_vertex(f, &order, flip)).collect();
        Atom::from_members(members, LinearOracle::horizon(self))
    }
}

/// Fitted homothets of a fleet; the aggregate is their Minkowski sum.
pub struct HomothetFleet {
    pub fits: Vec<Homothet>,
}

impl LinearOracle for HomothetFleet {
    fn horizon(&self) -> usize {
        self.fits.first().map_or(0, |h| h.horizon())
    }

    fn num_members(&self) -> usize {
        self.fits.len()
    }

    fn maximize(&self, c: &[f64]) -> Atom {
        let proto = self.fits[0].prototype().maximize(c);
        let members = self.fits.iter().map(|h| h.map_point(&proto)).collect();
        Atom::from_members(members, self.horizon())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FwVariant {
    Vanilla,
    AwaySteps,
    /// Fully corrective steps: after each oracle call the iterate is moved to
    /// the nearest point of the hull of the active atoms (Wolfe's
    /// minimum-norm-point scheme).
    MinNormPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackingConfig {
    pub max_iter: usize,
    pub gap_tol: f64,
    pub variant: FwVariant,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self { max_iter: 500, gap_tol: 1e-4, variant: FwVariant::MinNormPoint }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackingResult {
    /// `Σ_i members[i]`.
    pub aggregate: Vec<f64>,
    pub members: Vec<Vec<f64>>,
    /// `‖aggregate − g‖₂`.
    pub objective: f64,
    pub rmse: f64,
    /// Final Frank–Wolfe duality gap of `‖u − g‖₂²`.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gap_history: Vec<f64>,
}

const WEIGHT_EPS: f64 = 1e-12;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `‖u − g‖₂²` over the oracle's aggregate set.
pub fn track_signal<O: LinearOracle + ?Sized>(
    oracle: &O,
    g: &[f64],
    cfg: &TrackingConfig,
) -> Result<TrackingResult, AggregateError> {
    let n = oracle.horizon();
    if g.len() != n {
        return Err(AggregateError::LengthMismatch { expected: n, found: g.len() });
    }
    if oracle.num_members() == 0 {
        return Err(AggregateError::EmptyPopulation);
    }

    let norm = dot(g, g).sqrt();
    let start: Vec<f64> = if norm > 0.0 { g.iter().map(|v| v / norm).collect() } else { vec![0.0; n] };
    let mut atoms = vec![oracle.maximize(&start)];
    let mut weights = vec![1.0];
    let mut u = atoms[0].aggregate.clone();
    let mut gap = f64::INFINITY;
    let mut gap_history = Vec::new();
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        let grad = gradient(&u, g);
        let neg: Vec<f64> = grad.iter().map(|v| -v).collect();
        let s = oracle.maximize(&neg);
        let d_fw: Vec<f64> = s.aggregate.iter().zip(&u).map(|(a, b)| a - b).collect();
        gap = (-dot(&grad, &d_fw)).max(0.0);
        gap_history.push(gap);
        if gap <= cfg.gap_tol {
            break;
        }
        iterations += 1;

        match cfg.variant {
            FwVariant::Vanilla => fw_step(&mut atoms, &mut weights, s, &grad, &d_fw),
            FwVariant::AwaySteps => {
                let k = (0..atoms.len())
                    .max_by(|&i, &j| dot(&grad, &atoms[i].aggregate).total_cmp(&dot(&grad, &atoms[j].aggregate)))
                    .expect("active set is nonempty");
                let away_gap = dot(&grad, &atoms[k].aggregate) - dot(&grad, &u);
                if away_gap > gap && weights[k] < 1.0 {
                    away_step(&mut atoms, &mut weights, k, &grad, &u);
                } else {
                    fw_step(&mut atoms, &mut weights, s, &grad, &d_fw);
                }
            }
            FwVariant::MinNormPoint => {
                let fallback = (atoms.clone(), weights.clone());
                if !atoms.iter().any(|a| a.aggregate == s.aggregate) {
                    atoms.push(s.clone());
                    weights.push(0.0);
                }
                if !corral(&mut atoms, &mut weights, g) {
                    (atoms, weights) = fallback;
                    fw_step(&mut atoms, &mut weights, s, &grad, &d_fw);
                }
            }
        }
        prune(&mut atoms, &mut weights);
        u = combine(&atoms, &weights, n);
        if iterations == cfg.max_iter {
            gap = fw_gap(oracle, &u, g);
            gap_history.push(gap);
        }
    }

    let members: Vec<Vec<f64>> = (0..oracle.num_members())
        .map(|i| {
            let mut p = vec![0.0; n];
            for (a, w) in atoms.iter().zip(&weights) {
                for (acc, v) in p.iter_mut().zip(&a.members[i]) {
                    *acc += w * v;
                }
            }
            p
        })
        .collect();
    let mut aggregate = vec![0.0; n];
    for m in &members {
        for (acc, v) in aggregate.iter_mut().zip(m) {
            *acc += v;
        }
    }
    let err: f64 = aggregate.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(TrackingResult {
        aggregate,
        members,
        objective: err.sqrt(),
        rmse: (err / n as f64).sqrt(),
        gap,
        iterations,
        converged: gap <= cfg.gap_tol,
        gap_history,
    })
}

fn gradient(u: &[f64], g: &[f64]) -> Vec<f64> {
    u.iter().zip(g).map(|(a, b)| 2.0 * (a - b)).collect()
}

/// `max_{s} ⟨−∇f(u), s − u⟩` over the oracle's set.
fn fw_gap<O: LinearOracle + ?Sized>(oracle: &O, u: &[f64], g: &[f64]) -> f64 {
    let neg: Vec<f64> = gradient(u, g).iter().map(|v| -v).collect();
    let s = oracle.maximize(&neg);
    let d: Vec<f64> = s.aggregate.iter().zip(u).map(|(a, b)| a - b).collect();
    dot(&neg, &d).max(0.0)
}

fn fw_step(atoms: &mut Vec<Atom>, weights: &mut Vec<f64>, s: Atom, grad: &[f64], d: &[f64]) {
    let gamma = line_search(grad, d, 1.0);
    if gamma >= 1.0 {
        *atoms = vec![s];
        *weights = vec![1.0];
        return;
    }
    for w in weights.iter_mut() {
        *w *= 1.0 - gamma;
    }
    match atoms.iter().position(|a| a.aggregate == s.aggregate) {
        Some(k) => weights[k] += gamma,
        None => {
            atoms.push(s);
            weights.push(gamma);
        }
    }
}

fn away_step(atoms: &mut Vec<Atom>, weights: &mut Vec<f64>, k: usize, grad: &[f64], u: &[f64]) {
    let d: Vec<f64> = u.iter().zip(&atoms[k].aggregate).map(|(a, b)| a - b).collect();
    let gamma_max = weights[k] / (1.0 - weights[k]);
    let gamma = line_search(grad, &d, gamma_max);
    for w in weights.iter_mut() {
        *w *= 1.0 + gamma;
    }
    weights[k] -= gamma;
    if gamma >= gamma_max {
        atoms.remove(k);
        weights.remove(k);
    }
}

/// Wolfe's minor cycle: moves the weights to the point of the active hull
/// nearest to `g`, dropping atoms that leave the support. Returns `false` if
/// the active atoms are numerically affinely dependent.
fn corral(atoms: &mut Vec<Atom>, weights: &mut Vec<f64>, g: &[f64]) -> bool {
    loop {
        let Some(alpha) = affine_minimizer(atoms, g) else { return false };
        if alpha.iter().all(|&a| a > WEIGHT_EPS) {
            *weights = alpha;
            return true;
        }
        let mut theta: f64 = 1.0;
        for (l, a) in weights.iter().zip(&alpha) {
            if *a <= WEIGHT_EPS {
                theta = theta.min(l / (l - a));
            }
        }
        for (l, a) in weights.iter_mut().zip(&alpha) {
            *l = theta * a + (1.0 - theta) * *l;
        }
        let before = atoms.len();
        let mut k = 0;
        while k < atoms.len() {
            if weights[k] <= WEIGHT_EPS {
                atoms.remove(k);
                weights.remove(k);
            } else {
                k += 1;
            }
        }
        if atoms.len() == before {
            // the smallest weight is the one that should have vanished
            let k = (0..weights.len()).min_by(|&i, &j| weights[i].total_cmp(&weights[j])).expect("nonempty");
            atoms.remove(k);
            weights.remove(k);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
    }
}

/// Weights `α` with `Σα = 1` minimizing `‖Σ α_k a_k − g‖`.
fn affine_minimizer(atoms: &[Atom], g: &[f64]) -> Option<Vec<f64>> {
    let m = atoms.len();
    let shifted: Vec<Vec<f64>> =
        atoms.iter().map(|a| a.aggregate.iter().zip(g).map(|(x, y)| x - y).collect()).collect();
    let scale = shifted.iter().map(|p| dot(p, p)).fold(1.0, f64::max);
    let mut k = DMatrix::<f64>::zeros(m + 1, m + 1);
    for i in 0..m {
        for j in 0..=i {
            let v = dot(&shifted[i], &shifted[j]) / scale;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
        k[(i, m)] = 1.0;
        k[(m, i)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m + 1);
    rhs[m] = 1.0;
    let lu = k.clone().full_piv_lu();
    let sol = lu.solve(&rhs)?;
    let resid = (&k * &sol - &rhs).amax();
    if !sol.iter().all(|v| v.is_finite()) || resid > 1e-9 {
        return None;
    }
    Some(sol.iter().take(m).copied().collect())
}

/// Exact minimizer of `γ ↦ ‖u + γd − g‖²` on `[0, γ_max]`.
fn line_search(grad: &[f64], d: &[f64], gamma_max: f64) -> f64 {
    let dd = dot(d, d);
    if dd <= 0.0 {
        return 0.0;
    }
    (-dot(grad, d) / (2.0 * dd)).clamp(0.0, gamma_max)
}

fn prune(atoms: &mut Vec<Atom>, weights: &mut Vec<f64>) {
    let mut k = 0;
    while k < atoms.len() {
        if weights[k] <= 1e-15 && atoms.len() > 1 {
            atoms.remove(k);
            weights.remove(k);
        } else {
            k += 1;
        }
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
}

fn combine(atoms: &[Atom], weights: &[f64], n: usize) -> Vec<f64> {
    let mut u = vec![0.0; n];
    for (a, w) in atoms.iter().zip(weights) {
        for (acc, v) in u.iter_mut().zip(&a.aggregate) {
            *acc += w * v;
        }
    }
    u
}
