//! Eigenvector estimation from elementwise-subsampled symmetric matrices.
//!
//! Sampling (`subsample`), incoherence-based error bounds (`incoherence`),
//! perturbative eigenvector corrections (`perturbation`), the averaged
//! estimator with its variance bounds (`estimator`), the sparse-regime
//! degree blow-up analysis (`blowup`) and the experiment drivers
//! (`experiments`).

pub mod blowup;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod incoherence;
pub mod matrix;
pub mod perturbation;
pub mod rng;
pub mod subsample;

pub use error::{Error, Result};
