//! Classical and modified Euler schemes for stochastic differential equations
//! driven by fractional Brownian motion with Hurst parameter in `(1/2, 1)`,
//! together with the Monte Carlo and deterministic experiments that measure
//! their strong and weak convergence rates.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod fbm;
mod linalg;
pub mod model;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
