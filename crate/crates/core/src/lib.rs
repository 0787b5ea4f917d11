//! Higher-order refactoring of definite logic programs.
//!
//! The pipeline discovers candidate higher-order abstractions shared by
//! several definitions ([`abstractor`]), selects an optimal subset with an
//! exact constraint optimisation search ([`compressor`]), rewrites the program
//! and checks that the least model on the target predicates is unchanged
//! ([`evaluator`]).

pub mod abstractor;
pub mod ast;
pub mod compressor;
pub mod evaluator;
pub mod parser;
pub mod pipeline;
pub mod report;

pub use ast::{Program, Size};
pub use pipeline::{refactor, RefactorConfig, RefactorOutcome};
