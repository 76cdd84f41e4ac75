//! Bergman approximations of Monge-Ampère geodesics between torus-invariant
//! metrics on CP^1.
//!
//! - [`potentials`]: symplectic potentials, Legendre duality, exact geodesics.
//! - [`quadrature`]: phase functions and log-domain Laplace integrals.
//! - [`norming`]: norming-constant tables, `q`, `R` and `Omega`.
//! - [`geodesics`]: the height-`N` free energy, its moments, `E_N`, `Π_N`.
//! - [`lab`]: configuration, convergence sweeps and reports.

pub mod error;
pub mod geodesics;
pub mod lab;
pub mod norming;
pub mod poly;
pub mod potentials;
pub mod quadrature;
pub mod roots;

pub use error::{Error, Result};
pub use potentials::{GeodesicFamily, MetricPotential};
