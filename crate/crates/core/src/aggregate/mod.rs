//! Population-level workflows: fleet sampling, exact per-device optimization,
//! disaggregation and signal tracking.

mod dispatch;
mod population;
mod signal;
mod tracking;

use thiserror::Error;

pub use dispatch::{
    disaggregate, disaggregate_over, exact_linear_cost, exact_linear_solutions, Disaggregation, MemberSet,
    DISAGGREGATION_TOL,
};
pub use population::{sample_population, DeviceRecord, Member, Population, PopulationFile, Range, SamplerConfig};
pub use signal::{inside_signal, synth_signal, SignalConfig};
pub use tracking::{track_signal, Atom, FwVariant, HomothetFleet, LinearOracle, TrackingConfig, TrackingResult};

use crate::gpoly::GPolyError;
use crate::model::ModelError;
use crate::polytope::PolytopeError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AggregateError {
    #[error("population must contain at least one device")]
    EmptyPopulation,
    #[error("invalid sampler range for `{0}`")]
    InvalidRange(&'static str),
    #[error("sampler exhausted for device {device} after {attempts} draws")]
    SamplerExhausted { device: usize, attempts: usize },
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("device {0} has an empty flexibility set")]
    DeviceInfeasible(usize),
    #[error("{0} did not converge")]
    NotConverged(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    GPoly(#[from] GPolyError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}
