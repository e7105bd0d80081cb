//! Benchmark harness: linear-cost approximation error across horizons and
//! signal tracking, for the g-polymatroid method and the homothet baseline.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregate::{
    exact_linear_cost, sample_population, track_signal, AggregateError, HomothetFleet, Population, SamplerConfig,
    TrackingConfig, TrackingResult,
};
use crate::baseline_homothet::{aggregate_homothets, fit_all, HomothetError};
use crate::gpoly::{aggregate, greedy_linmin, GPolyError};
use crate::polytope::OptSense;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    GPoly(#[from] GPolyError),
    #[error(transparent)]
    Homothet(#[from] HomothetError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gpoly,
    Homothet,
    Exact,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Gpoly => "gpoly",
            Method::Homothet => "homothet",
            Method::Exact => "exact",
        }
    }
}

/// One method's result on one (horizon, trial) instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub seed: u64,
    pub n: usize,
    pub horizon: usize,
    pub trial: usize,
    pub method: Method,
    pub j_approx: f64,
    pub j_exact: f64,
    /// `(j_approx − j_exact) / j_exact`.
    pub error: f64,
    pub wall_ms: f64,
}

pub const RECORD_CSV_HEADER: &str = "experiment,seed,n,horizon,trial,method,j_approx,j_exact,error,wall_ms";

impl ExperimentRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.12e},{:.12e},{:.12e},{:.3}",
            self.experiment,
            self.seed,
            self.n,
            self.horizon,
            self.trial,
            self.method.label(),
            self.j_approx,
            self.j_exact,
            self.error,
            self.wall_ms
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxErrorConfig {
    pub n: usize,
    pub horizons: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub sampler: SamplerConfig,
}

impl Default for ApproxErrorConfig {
    fn default() -> Self {
        Self { n: 100, horizons: (1..=12).map(|k| 2 * k).collect(), trials: 50, seed: 1, sampler: SamplerConfig::default() }
    }
}

/// Seed of the population drawn for one (horizon, trial) cell.
pub fn trial_seed(seed: u64, horizon: usize, trial: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((horizon as u64) << 32 | trial as u64)
}

/// Cost vector with entries uniform on `[0, 1]`.
pub fn uniform_cost(horizon: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xC057);
    (0..horizon).map(|_| rng.gen_range(0.0..=1.0)).collect()
}

/// Minimization of a random linear cost over a fresh population per trial.
/// Records are ordered by horizon, trial, then method.
pub fn run_approx_error(cfg: &ApproxErrorConfig) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    let cells: Vec<(usize, usize)> =
        cfg.horizons.iter().flat_map(|&t| (0..cfg.trials).map(move |k| (t, k))).collect();
    let per_cell: Vec<Vec<ExperimentRecord>> =
        cells.par_iter().map(|&(t, k)| approx_error_cell(cfg, t, k)).collect::<Result<_, _>>()?;
    Ok(per_cell.into_iter().flatten().collect())
}

fn approx_error_cell(cfg: &ApproxErrorConfig, horizon: usize, trial: usize) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    let seed = trial_seed(cfg.seed, horizon, trial);
    let pop = sample_population(cfg.n, horizon, &cfg.sampler, seed)?;
    let c = uniform_cost(horizon, seed);
    let record = |method, j_approx: f64, j_exact: f64, wall_ms| ExperimentRecord {
        experiment: "approx-error".into(),
        seed: cfg.seed,
        n: cfg.n,
        horizon,
        trial,
        method,
        j_approx,
        j_exact,
        error: (j_approx - j_exact) / j_exact,
        wall_ms,
    };

    let clock = Instant::now();
    let j_exact = exact_linear_cost(&pop, &c, OptSense::Min)?;
    let exact_ms = ms(clock);

    let clock = Instant::now();
    let agg = aggregate(&pop.approximations())?;
    let j_gpoly = greedy_linmin(&agg, &c).value;
    let gpoly_ms = ms(clock);

    let clock = Instant::now();
    let hom = aggregate_homothets(&fit_all(&pop.devices())?)?;
    let j_hom = hom.minimum(&c);
    let hom_ms = ms(clock);

    Ok(vec![
        record(Method::Gpoly, j_gpoly, j_exact, gpoly_ms),
        record(Method::Homothet, j_hom, j_exact, hom_ms),
        record(Method::Exact, j_exact, j_exact, exact_ms),
    ])
}

fn ms(clock: Instant) -> f64 {
    clock.elapsed().as_secs_f64() * 1e3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub horizon: usize,
    pub method: Method,
    pub trials: usize,
    pub mean_error: f64,
    pub max_error: f64,
}

/// Mean and max error per (horizon, method), in ascending order of both.
pub fn summarize(records: &[ExperimentRecord]) -> Vec<ErrorSummary> {
    let mut keys: Vec<(usize, Method)> = records.iter().map(|r| (r.horizon, r.method)).collect();
    keys.sort();
    keys.dedup();
    keys.into_iter()
        .map(|(horizon, method)| {
            let errs: Vec<f64> =
                records.iter().filter(|r| r.horizon == horizon && r.method == method).map(|r| r.error).collect();
            ErrorSummary {
                horizon,
                method,
                trials: errs.len(),
                mean_error: errs.iter().sum::<f64>() / errs.len() as f64,
                max_error: errs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

/// Least-squares slope of `ys` against `xs`.
pub fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackingReport {
    pub signal: Vec<f64>,
    pub gpoly: TrackingResult,
    pub homothet: TrackingResult,
}

/// Tracks `signal` with both methods over the same population.
pub fn run_tracking(pop: &Population, signal: &[f64], cfg: &TrackingConfig) -> Result<TrackingReport, ExperimentError> {
    let agg = aggregate(&pop.approximations())?;
    let fleet = HomothetFleet { fits: fit_all(&pop.devices())? };
    Ok(TrackingReport {
        signal: signal.to_vec(),
        gpoly: track_signal(&agg, signal, cfg)?,
        homothet: track_signal(&fleet, signal, cfg)?,
    })
}
