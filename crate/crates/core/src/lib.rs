//! Sparse convex models over the implicit space of all multiplicative
//! feature interactions, fitted by dual screening over the itemset poset.

pub mod data;
pub mod duality;
pub mod error;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod objectives;
pub mod path;
pub mod screening;
pub mod solver;
pub mod synth;

pub use data::{AtomicMatrix, Column, DualWeights, FeatureSet, MatrixKind};
pub use duality::{ObjectiveKind, PrimalModel};
pub use error::{FckError, Result};
pub use screening::{PenaltySchedule, PenaltyShape, ScreenConfig, ScreenMode, ScreenResult};
pub use solver::{ActiveDesign, DualObjective, SolveOutcome, SolverConfig};
