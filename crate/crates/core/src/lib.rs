//! Simulation and numerical verification for bivariate stochastic recurrence
//! equations `W_t = A_t W_{t-1} + B_t` with upper-triangular coefficient
//! matrices: tail indices, Goldie-type tail constants, spectral measures and
//! the CCC-GARCH(1,1) specialization.

pub mod coeff_model;
pub mod error;
pub mod export;
pub mod garch;
pub mod goldie;
mod quadrature;
pub mod rng;
pub mod spectral;
pub mod sre_engine;
pub mod tail_stats;
pub mod verify;

pub use coeff_model::{CoefficientLaw, Coefficients, MomentValue, PositiveDistribution, TailIndexSolution};
pub use error::{Error, Result};
pub use garch::GarchParams;
pub use rng::StreamKey;
pub use sre_engine::{PathSample, ProductChain, SimConfig};
pub use tail_stats::{TailConstantEstimate, TailEstimate};
