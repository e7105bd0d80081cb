//! Reference signals for tracking experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tracking::LinearOracle;

/// `g(t) = mid(t) + amplitude · half(t) · sin(2π·cycles·t/T + phase)`, where
/// `mid` and `half` come from the aggregate's extreme profiles for all-ones
/// and all-minus-ones costs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalConfig {
    pub amplitude: f64,
    pub cycles: f64,
    pub phase: f64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self { amplitude: 0.8, cycles: 1.0, phase: 0.0 }
    }
}

pub fn synth_signal<O: LinearOracle + ?Sized>(oracle: &O, cfg: &SignalConfig) -> Vec<f64> {
    let n = oracle.horizon();
    let hi = oracle.maximize(&vec![1.0; n]).aggregate;
    let lo = oracle.maximize(&vec![-1.0; n]).aggregate;
    (0..n)
        .map(|t| {
            let mid = 0.5 * (hi[t] + lo[t]);
            let half = 0.5 * (hi[t] - lo[t]);
            let angle = 2.0 * std::f64::consts::PI * cfg.cycles * (t as f64) / (n as f64) + cfg.phase;
            mid + cfg.amplitude * half * angle.sin()
        })
        .collect()
}

/// Average of `k` extreme points for random costs in `[−1, 1]^T`; lies in the
/// aggregate set by convexity.
pub fn inside_signal<O: LinearOracle + ?Sized>(oracle: &O, k: usize, seed: u64) -> Vec<f64> {
    let n = oracle.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = vec![0.0; n];
    for _ in 0..k.max(1) {
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        for (acc, v) in g.iter_mut().zip(oracle.maximize(&c).aggregate) {
            *acc += v;
        }
    }
    let k = k.max(1) as f64;
    g.iter_mut().for_each(|v| *v /= k);
    g
}
