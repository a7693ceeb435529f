//! Sparse Gaussian graphical model estimation by per-node Lasso regression.
//!
//! Every variable is regressed on all others with an ℓ₁ penalty; the nonzero
//! coefficients form that node's estimated neighborhood, and neighborhoods are
//! combined into an undirected edge set with an AND or OR rule. The crate
//! contains the certified coordinate-descent solver, penalty selection
//! (fixed, level-based, cross-validated), the synthetic geometric-graph model,
//! an IPF forward-selection baseline, file formats and experiment drivers.

pub mod baseline;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod lasso;
pub mod neighborhood;
pub mod numeric;
mod parallel;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{ComponentPartition, EdgeRule, EdgeSet, Metrics};
pub use lasso::{Design, LassoFit, LassoProblem};
pub use neighborhood::{NeighborhoodSet, PenaltyRule, PenaltyValue};
pub use numeric::{DataMatrix, SeedStream, SymMatrix};
pub use synth::{GgmModel, Kernel, Pruning, TrueGraph};
