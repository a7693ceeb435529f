//! Deterministic numeric foundation shared by every other module.

mod data;
mod quantile;
mod rng;
mod sym;

pub use data::DataMatrix;
pub(crate) use data::dot;
pub use quantile::gaussian_tail_quantile;
pub use rng::SeedStream;
pub use sym::{Cholesky, SymMatrix};

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}
