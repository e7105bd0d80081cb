//! Aggregation of thermostatically controlled load flexibility through inner
//! g-polymatroid approximations.

pub mod aggregate;
pub mod baseline_homothet;
pub mod experiment;
pub mod validation;
pub mod gpoly;
pub mod model;
pub mod polytope;
