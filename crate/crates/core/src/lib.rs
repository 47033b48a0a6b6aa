//! Deterministic library for communication-skipping federated optimization
//! with variance-reduced gradient estimators.
//!
//! The crate simulates the proximal-skip family on consensus-lifted finite
//! sums: exact-gradient and minibatch baselines, the loopless control-variate
//! estimator, and the compressed hub estimator for a server-hubs-clients
//! topology. Alongside the solver it ships the total-cost model for the
//! communication/computation trade-off and an empirical verification harness
//! that certifies the estimator variance model and the convergence bounds on
//! desk-scale instances.
//!
//! Everything randomized flows through a seeded, platform-independent stream,
//! so runs, sweeps and checks replay bit-for-bit.

pub mod costmodel;
pub mod dataio;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod problem;
pub mod rng;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{BlockVector, DenseVector};
pub use rng::Rng;
