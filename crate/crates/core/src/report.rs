//! Machine-readable summary of a refactoring run.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::compressor::{ObjectiveBreakdown, Weights};
use crate::evaluator::Side;

/// How the candidate counts are obtained.
pub const CANDIDATE_COUNT_CONVENTION: &str = "candidates_enumerated counts every (definition, symbol subset) \
pair before alpha-equivalent candidates are merged; candidates_before_filter counts distinct candidates after \
merging; candidates_after_filter counts those usable by at least two definitions";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelectedAbstraction {
    pub name: String,
    pub canonical_text: String,
    pub ho_vars: usize,
    pub num_definitions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Verification {
    Skipped,
    Equivalent,
    Counterexample { atom: String, derived_by: Side },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RefactorReport {
    pub input_size: u64,
    pub output_size: u64,
    pub objective_value: u64,
    pub objective_breakdown: ObjectiveBreakdown,
    pub weights: Weights,
    pub proved_optimal: bool,
    /// Smallest program size over all feasible assignments, when requested.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size_optimum: Option<u64>,
    pub selected_abstractions: Vec<SelectedAbstraction>,
    /// `name/arity` to the abstraction used, or null when kept.
    pub assignments: BTreeMap<String, Option<String>>,
    pub candidates_enumerated: usize,
    pub candidates_before_filter: usize,
    pub candidates_after_filter: usize,
    pub candidate_count_convention: String,
    pub verification: Verification,
    pub solver_nodes: u64,
    pub solve_millis: u64,
    pub total_millis: u64,
}

impl RefactorReport {
    pub fn verification_failed(&self) -> bool {
        matches!(self.verification, Verification::Counterexample { .. })
    }
}

/// Pretty-printed JSON with a trailing newline.
pub fn emit_report(r: &RefactorReport) -> String {
    let mut text = serde_json::to_string_pretty(r).expect("report serializes");
    text.push('\n');
    text
}
