//! Generalized Wendland and Matérn covariance kernels for spatial
//! statistics: kernel evaluation, spectral densities, sparse covariance
//! assembly, Gaussian random-field simulation, maximum-likelihood fitting,
//! kriging and proper scoring rules.

pub mod covmat;
pub mod error;
pub mod inference;
pub mod kernels;
pub mod montecarlo;
pub mod predict;
pub mod quad;
pub mod specfun;
pub mod spectral;

pub use error::{Error, Result};
