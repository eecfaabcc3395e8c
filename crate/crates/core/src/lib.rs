//! Stability criteria and a method-of-steps integrator for scalar linear
//! neutral delay differential equations with variable coefficients and delays.

pub mod criteria;
pub mod equation;
pub mod error;
pub mod funcmodel;
pub mod harness;
pub mod simulator;

pub use equation::{DelayTerm, EquationFile, Finding, HistorySpec, Kernel, NeutralEquation, NeutralTerm};
pub use error::{Error, Result};
pub use funcmodel::{BoundCertificate, Coefficient, Delay};
