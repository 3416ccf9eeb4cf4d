//! Observability decomposition of bilinear quantum control systems and the
//! heat, work, entropy and dissipation accounting built on it.
//!
//! The numeric modules are generic over the real scalar (`f32` or `f64`);
//! the aliases below fix it to `f64`, which is what the configuration,
//! experiment runner and CLI use.

// `!(x > 0)` is deliberate: NaN must fail parameter checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod invariants;
pub mod lie;
pub mod models;
pub mod observability;
pub mod operator;
pub mod pulse;
pub mod sampling;
pub mod scalar;
pub mod thermo;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Operator = operator::OperatorMatrix<f64>;
pub type Spectrum = operator::Spectrum<f64>;
pub type Basis = lie::OperatorBasis<f64>;
pub type Density = observability::DensityState<f64>;
pub type Decomposition = observability::StateDecomposition<f64>;
pub type Split = observability::HamiltonianSplit<f64>;
pub type ControlSystem = dynamics::BilinearControlSystem<f64>;
pub type Schedule = dynamics::ControlSchedule<f64>;
pub type Trajectory = dynamics::ThermoTrajectory<f64>;
pub type Fisher = thermo::FisherMatrix<f64>;
pub type Optimization = pulse::OptimizationResult<f64>;
