//! Oracle suites over a population: bound consistency, containment,
//! maximality, set-function equality and greedy-versus-LP agreement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aggregate::Population;
use crate::gpoly::{
    aggregate, compute_bounds, greedy_linmax, support_b, support_p, DeviceFunctions, InnerApprox, SetFunctionPair,
    Subset,
};
use crate::model::TransformedDevice;
use crate::polytope::{containment_slack, lp_solve, support, OptSense, PolytopeError, FEAS_TOL};

pub const PERTURBATION: f64 = 1e-4;
const ENLARGE_TOL: f64 = 1e-9;
const SETFN_TOL: f64 = 1e-7;
const GREEDY_REL_TOL: f64 = 1e-6;
const BOUND_TOL: f64 = 1e-7;
/// Horizons up to this size are checked on all subsets.
const EXHAUSTIVE_MAX_HORIZON: usize = 8;
const SAMPLED_SUBSETS: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub device_id: Option<usize>,
    pub detail: String,
    /// Seed reproducing randomized checks, when one was used.
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub checked: usize,
    pub failed: usize,
    pub failures: Vec<Failure>,
}

impl SuiteReport {
    fn new(name: &str) -> Self {
        Self { name: name.into(), checked: 0, failed: 0, failures: Vec::new() }
    }

    fn fail(&mut self, device_id: Option<usize>, detail: String, seed: Option<u64>) {
        self.failed += 1;
        self.failures.push(Failure { device_id, detail, seed });
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
}

/// Runs every suite. `seed` drives the randomized checks.
pub fn validate_population(pop: &Population, seed: u64, greedy_trials: usize) -> Result<ValidationReport, PolytopeError> {
    let suites = vec![
        consistency_suite(pop),
        containment_suite(pop)?,
        maximality_suite(pop)?,
        set_function_suite(pop, seed)?,
        greedy_suite(pop, seed, greedy_trials)?,
    ];
    let passed = suites.iter().all(SuiteReport::passed);
    Ok(ValidationReport { suites, passed })
}

/// Stored bounds agree with bounds recomputed from the device.
pub fn consistency_suite(pop: &Population) -> SuiteReport {
    let mut r = SuiteReport::new("consistency");
    for m in &pop.members {
        r.checked += 1;
        let id = Some(m.approx.device_id);
        if let Some(bad) = chain_violation(&m.approx) {
            r.fail(id, bad, None);
            continue;
        }
        match compute_bounds(&m.device) {
            Ok(fresh) => {
                let dev = fresh
                    .y_lb
                    .iter()
                    .zip(&m.approx.y_lb)
                    .chain(fresh.y_ub.iter().zip(&m.approx.y_ub))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if dev > BOUND_TOL || fresh.horizon() != m.approx.horizon() {
                    r.fail(id, format!("stored bounds differ from recomputed ones by {dev:e}"), None);
                }
            }
            Err(e) => r.fail(id, format!("recomputation failed: {e}"), None),
        }
    }
    r
}

fn chain_violation(apx: &InnerApprox) -> Option<String> {
    if let Some(t) = (0..apx.horizon()).find(|&t| apx.y_lb[t] > apx.y_ub[t] + BOUND_TOL) {
        return Some(format!("y_lb > y_ub at t = {}", t + 1));
    }
    let worst = apx.chain_inconsistency();
    (worst > BOUND_TOL).then(|| format!("chain inconsistency {worst:e}"))
}

/// `B_i ⊆ F_i` by support comparison.
pub fn containment_suite(pop: &Population) -> Result<SuiteReport, PolytopeError> {
    let mut r = SuiteReport::new("containment");
    for m in &pop.members {
        r.checked += 1;
        let slack = containment_slack(&m.approx.base_hrep(), &m.device.flexibility_halfspaces())?;
        if slack < -FEAS_TOL {
            r.fail(Some(m.approx.device_id), format!("B leaves F by {:e}", -slack), None);
        }
    }
    Ok(r)
}

/// A single-bound relaxation of `B` together with whether it keeps `B ⊆ F`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    /// 1-based period.
    pub t: usize,
    pub upper: bool,
    pub keeps_containment: bool,
}

/// Relaxes each bound by `delta` in turn and keeps the relaxations that
/// actually enlarge `B` (support along the prefix indicator grows).
pub fn enlarging_perturbations(
    apx: &InnerApprox,
    dev: &TransformedDevice,
    delta: f64,
) -> Result<Vec<Perturbation>, PolytopeError> {
    let n = apx.horizon();
    let f = dev.flexibility_halfspaces();
    let base = apx.base_hrep();
    let mut out = Vec::new();
    for t in 0..n {
        for upper in [true, false] {
            let sign = if upper { 1.0 } else { -1.0 };
            let dir: Vec<f64> = (0..n).map(|s| if s <= t { sign } else { 0.0 }).collect();
            let mut relaxed = apx.clone();
            if upper {
                relaxed.y_ub[t] += delta;
            } else {
                relaxed.y_lb[t] -= delta;
            }
            let grown = support(&relaxed.base_hrep(), &dir)? - support(&base, &dir)?;
            if grown <= ENLARGE_TOL {
                continue;
            }
            let keeps = containment_slack(&relaxed.base_hrep(), &f)? >= -FEAS_TOL;
            out.push(Perturbation { t: t + 1, upper, keeps_containment: keeps });
        }
    }
    Ok(out)
}

/// Every enlarging single-bound relaxation must break containment.
pub fn maximality_suite(pop: &Population) -> Result<SuiteReport, PolytopeError> {
    let mut r = SuiteReport::new("maximality");
    for m in &pop.members {
        for p in enlarging_perturbations(&m.approx, &m.device, PERTURBATION)? {
            r.checked += 1;
            if p.keeps_containment {
                let which = if p.upper { "y_ub" } else { "y_lb" };
                r.fail(
                    Some(m.approx.device_id),
                    format!("relaxing {which}({}) by {PERTURBATION:e} keeps B inside F", p.t),
                    None,
                );
            }
        }
    }
    Ok(r)
}

fn subsets_to_check(horizon: usize, rng: &mut ChaCha8Rng) -> Vec<Subset> {
    if horizon <= EXHAUSTIVE_MAX_HORIZON {
        Subset::all(horizon).collect()
    } else {
        (0..SAMPLED_SUBSETS).map(|_| Subset::from_indices((0..horizon).filter(|_| rng.gen_bool(0.5)))).collect()
    }
}

/// Chain evaluation of `b`, `p` equals the LP support functions.
pub fn set_function_suite(pop: &Population, seed: u64) -> Result<SuiteReport, PolytopeError> {
    let mut r = SuiteReport::new("set-function");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for m in &pop.members {
        let f = DeviceFunctions::new(&m.approx);
        for a in subsets_to_check(pop.horizon, &mut rng) {
            r.checked += 1;
            let (b_lp, p_lp) = (support_b(&m.approx, a)?, support_p(&m.approx, a)?);
            let (b, p) = (f.eval_b(a), f.eval_p(a));
            if (b - b_lp).abs() > SETFN_TOL || (p - p_lp).abs() > SETFN_TOL {
                r.fail(
                    Some(m.approx.device_id),
                    format!("A = {a:?}: b {b} vs {b_lp}, p {p} vs {p_lp}"),
                    (pop.horizon > EXHAUSTIVE_MAX_HORIZON).then_some(seed),
                );
            }
        }
    }
    Ok(r)
}

/// Greedy on each member and on the aggregate equals LP over the base
/// polytopes for random sign-mixed costs.
pub fn greedy_suite(pop: &Population, seed: u64, trials: usize) -> Result<SuiteReport, PolytopeError> {
    let mut r = SuiteReport::new("greedy-vs-lp");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6EED);
    let agg = aggregate(&pop.approximations()).map_err(|e| PolytopeError::Numerical(e.to_string()))?;
    let hreps: Vec<_> = pop.members.iter().map(|m| m.approx.base_hrep()).collect();
    for _ in 0..trials {
        let c: Vec<f64> = (0..pop.horizon).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let mut total = 0.0;
        for (m, h) in pop.members.iter().zip(&hreps) {
            r.checked += 1;
            let lp = lp_solve(h, &c, OptSense::Max)?.value;
            total += lp;
            let g = greedy_linmax(&DeviceFunctions::new(&m.approx), &c).value;
            if (g - lp).abs() > GREEDY_REL_TOL * (1.0 + lp.abs()) {
                r.fail(Some(m.approx.device_id), format!("greedy {g} vs LP {lp}"), Some(seed));
            }
        }
        r.checked += 1;
        let g = greedy_linmax(&agg, &c).value;
        if (g - total).abs() > GREEDY_REL_TOL * (1.0 + total.abs()) {
            r.fail(None, format!("aggregate greedy {g} vs summed LP {total}"), Some(seed));
        }
    }
    Ok(r)
}
