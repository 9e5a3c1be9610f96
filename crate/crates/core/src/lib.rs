//! Semiparametric Bayesian inference for linear regression with stationary
//! Gaussian time-series errors.
//!
//! The error process is handled in the frequency domain through the Whittle
//! likelihood, with a Bernstein–Dirichlet process prior on its spectral
//! density. Alongside the sampler the crate carries exact computations of the
//! asymptotic covariances involved in Bernstein–von Mises statements, closed-form
//! Gaussian distances, and a simulation-study harness.

pub mod asymptotics;
pub mod distances;
pub mod error;
pub mod fourier;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod sampler;
pub mod spectral;
pub mod whittle;

pub use error::{Error, Result};
