//! Selecting and applying abstractions.

mod apply;
pub mod cop;
pub mod solver;

pub use apply::{apply_refactoring, ApplyError};
pub use cop::{build_cop, Assignment, CopError, CopModel, ObjectiveBreakdown, Weights, REFACTORED_SIZE};
pub use solver::{solve, Solution, SolveStats};
