use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AggregateError;
use crate::gpoly::{compute_bounds, GPolyError, InnerApprox};
use crate::model::{transform, TclParams, TransformedDevice};
use crate::polytope::is_feasible;

/// Closed interval sampled uniformly; serialized as `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        if self.hi == self.lo {
            self.lo
        } else {
            self.lo + (self.hi - self.lo) * u
        }
    }

    fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }
}

impl From<[f64; 2]> for Range {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Range> for [f64; 2] {
    fn from(r: Range) -> Self {
        [r.lo, r.hi]
    }
}

/// Parameter distributions for sampled fleets. Defaults are typical
/// residential air-conditioning magnitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub a: Range,
    pub b: Range,
    pub theta_a: Range,
    pub theta_r: Range,
    pub delta: Range,
    pub p_max: Range,
    /// Resample budget per device before giving up.
    pub max_resamples: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            a: Range::new(0.85, 0.98),
            b: Range::new(1.5, 2.5),
            theta_a: Range::fixed(32.0),
            theta_r: Range::new(18.0, 22.0),
            delta: Range::new(0.5, 2.0),
            p_max: Range::new(2.0, 6.0),
            max_resamples: 100,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), AggregateError> {
        let named = [
            ("a", self.a),
            ("b", self.b),
            ("theta_a", self.theta_a),
            ("theta_r", self.theta_r),
            ("delta", self.delta),
            ("p_max", self.p_max),
        ];
        for (name, r) in named {
            if !r.is_valid() {
                return Err(AggregateError::InvalidRange(name));
            }
        }
        if self.a.lo < 0.0 || self.a.hi >= 1.0 {
            return Err(AggregateError::InvalidRange("a"));
        }
        for (name, r) in [("b", self.b), ("delta", self.delta), ("p_max", self.p_max)] {
            if r.lo <= 0.0 {
                return Err(AggregateError::InvalidRange(name));
            }
        }
        Ok(())
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> TclParams {
        let a = self.a.sample(rng);
        let b = self.b.sample(rng);
        let theta_a = self.theta_a.sample(rng);
        let theta_r = self.theta_r.sample(rng);
        let delta = self.delta.sample(rng);
        let p_max = self.p_max.sample(rng);
        let theta_0 = Range::new(theta_r - delta / 2.0, theta_r + delta / 2.0).sample(rng);
        TclParams { a, b, theta_a, theta_r, delta, p_max, theta_0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Member {
    pub params: TclParams,
    pub device: TransformedDevice,
    pub approx: InnerApprox,
}

impl Member {
    pub fn build(id: usize, params: TclParams, horizon: usize) -> Result<Self, AggregateError> {
        let device = transform(&params, horizon)?;
        let approx = compute_bounds(&device)?.with_id(id);
        Ok(Self { params, device, approx })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Population {
    pub horizon: usize,
    pub seed: u64,
    pub config: SamplerConfig,
    pub members: Vec<Member>,
    /// Draws discarded because the flexibility set or its inner approximation
    /// was empty.
    pub rejected: usize,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn approximations(&self) -> Vec<InnerApprox> {
        self.members.iter().map(|m| m.approx.clone()).collect()
    }

    pub fn devices(&self) -> Vec<TransformedDevice> {
        self.members.iter().map(|m| m.device.clone()).collect()
    }

    /// Population from explicit parameters (ids follow list order).
    pub fn from_params(params: Vec<TclParams>, horizon: usize) -> Result<Self, AggregateError> {
        let members = params
            .into_iter()
            .enumerate()
            .map(|(i, p)| Member::build(i, p, horizon))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { horizon, seed: 0, config: SamplerConfig::default(), members, rejected: 0 })
    }
}

/// Draws `n` devices whose flexibility sets are nonempty over `horizon`.
/// Devices whose level-set bounds cross (empty inner approximation) are
/// redrawn as well. Deterministic under `seed`.
pub fn sample_population(
    n: usize,
    horizon: usize,
    config: &SamplerConfig,
    seed: u64,
) -> Result<Population, AggregateError> {
    if n == 0 {
        return Err(AggregateError::EmptyPopulation);
    }
    if horizon == 0 {
        return Err(AggregateError::Model(crate::model::ModelError::EmptyHorizon));
    }
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members = Vec::with_capacity(n);
    let mut rejected = 0;
    for id in 0..n {
        let mut attempts = 0;
        let member = loop {
            if attempts > config.max_resamples {
                return Err(AggregateError::SamplerExhausted { device: id, attempts });
            }
            attempts += 1;
            let params = config.draw(&mut rng);
            let device = transform(&params, horizon)?;
            if !is_feasible(&device.flexibility_halfspaces())? {
                rejected += 1;
                continue;
            }
            match compute_bounds(&device) {
                Ok(approx) => break Member { params, device, approx: approx.with_id(id) },
                Err(GPolyError::EmptyApproximation { .. }) => rejected += 1,
                Err(e) => return Err(e.into()),
            }
        };
        members.push(member);
    }
    Ok(Population { horizon, seed, config: config.clone(), members, rejected })
}

/// On-disk form of a population. Devices are rebuilt from their parameters on
/// load; the stored approximations are kept as written.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationFile {
    pub version: String,
    pub seed: u64,
    pub horizon: usize,
    pub config: SamplerConfig,
    #[serde(default)]
    pub rejected: usize,
    pub devices: Vec<DeviceRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviceRecord {
    pub device_id: usize,
    pub params: TclParams,
    pub approx: InnerApprox,
}

impl PopulationFile {
    pub fn from_population(pop: &Population, version: &str) -> Self {
        Self {
            version: version.into(),
            seed: pop.seed,
            horizon: pop.horizon,
            config: pop.config.clone(),
            rejected: pop.rejected,
            devices: pop
                .members
                .iter()
                .map(|m| DeviceRecord { device_id: m.approx.device_id, params: m.params.clone(), approx: m.approx.clone() })
                .collect(),
        }
    }

    pub fn into_population(self) -> Result<Population, AggregateError> {
        if self.devices.is_empty() {
            return Err(AggregateError::EmptyPopulation);
        }
        let members = self
            .devices
            .into_iter()
            .map(|d| {
                if d.approx.horizon() != self.horizon {
                    return Err(AggregateError::LengthMismatch { expected: self.horizon, found: d.approx.horizon() });
                }
                let device = transform(&d.params, self.horizon)?;
                let approx = InnerApprox { device_id: d.device_id, ..d.approx };
                Ok(Member { params: d.params, device, approx })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Population { horizon: self.horizon, seed: self.seed, config: self.config, members, rejected: self.rejected })
    }
}
