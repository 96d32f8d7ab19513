//! Joint unsharp measurements of a qubit and the classical (separable
//! hidden-variable) bounds on their statistics.

pub mod classical;
pub mod detector;
pub mod error;
pub mod measurement;
pub mod outcome;
pub mod parallel;
pub mod qubit;
pub mod sampling;
pub mod young;

pub use classical::{InequalityReport, Verdict};
pub use error::{Error, Result};
pub use measurement::{Gammas, JointDistribution, MeasurementModel, MomentTriple};
pub use outcome::{Outcome, Sign};
pub use parallel::Execution;
pub use qubit::{BlochState, DensityMatrix, Direction};
