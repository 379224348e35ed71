//! Benchmark harness for the `variational` integrator library: trajectory
//! runs, convergence studies with order estimation, energy and momentum
//! diagnostics, and the free rigid body four-method comparison, all emitting
//! CSV or JSON.

pub mod error;
pub mod experiments;
pub mod methods;
pub mod output;
pub mod rigidbody;
pub mod spec;

pub use error::{HarnessError, Result};
