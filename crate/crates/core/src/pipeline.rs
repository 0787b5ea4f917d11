//! The full abstract, compress, apply and verify pipeline.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use log::info;
use thiserror::Error;

use crate::abstractor::{build_candidate_pool, CandidatePool, PoolOptions};
use crate::ast::{AstError, PredicateSymbol, Program, Size};
use crate::compressor::{apply_refactoring, build_cop, solve, ApplyError, CopError, Solution, Weights};
use crate::evaluator::{check_equivalence, Equivalence, EvalError, Universe};
use crate::report::{RefactorReport, SelectedAbstraction, Verification, CANDIDATE_COUNT_CONVENTION};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ast(#[from] AstError),
    #[error(transparent)]
    Cop(#[from] CopError),
    #[error(transparent)]
    Apply(#[from] ApplyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone)]
pub struct RefactorConfig {
    /// Overrides the program's default targets.
    pub targets: Option<Vec<PredicateSymbol>>,
    pub pool: PoolOptions,
    pub weights: Weights,
    pub timeout: Option<Duration>,
    /// Universe for verification; `None` skips it.
    pub universe: Option<Universe>,
    /// Also solve without the penalty term and report the smallest size.
    pub size_optimum: bool,
}

impl Default for RefactorConfig {
    fn default() -> Self {
        Self {
            targets: None,
            pool: PoolOptions::default(),
            weights: Weights::default(),
            timeout: None,
            universe: Some(Universe::standard()),
            size_optimum: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefactorOutcome {
    pub program: Program,
    pub pool: CandidatePool,
    pub solution: Solution,
    pub report: RefactorReport,
}

pub fn refactor(p: &Program, config: &RefactorConfig) -> Result<RefactorOutcome, PipelineError> {
    let start = Instant::now();
    let p = match &config.targets {
        Some(t) => p.clone().with_targets(t.iter().cloned())?,
        None => p.clone(),
    };
    let pool = build_candidate_pool(&p, config.pool);
    let model = build_cop(&p, &pool, config.weights)?;
    let solution = solve(&model, config.timeout);
    let asg = &solution.assignment;
    info!(
        "objective {} with {} abstraction(s), optimal: {}",
        asg.objective_value,
        asg.selected.len(),
        asg.proved_optimal
    );
    let program = apply_refactoring(&p, &pool, asg)?;

    let size_optimum = if config.size_optimum {
        let unpenalized = Weights {
            penalty: 0,
            ..config.weights
        };
        let m = build_cop(&p, &pool, unpenalized)?;
        Some(solve(&m, config.timeout).assignment.breakdown.program_size())
    } else {
        None
    };

    let verification = match &config.universe {
        None => Verification::Skipped,
        Some(u) => match check_equivalence(&p, &program, &pool.abstractions, u, p.targets())? {
            Equivalence::Equivalent => Verification::Equivalent,
            Equivalence::Counterexample { atom, side } => Verification::Counterexample {
                atom: atom.to_string(),
                derived_by: side,
            },
        },
    };

    let mut selected_abstractions = Vec::new();
    for &a in &asg.selected {
        let abstraction = &pool.abstractions[a];
        selected_abstractions.push(SelectedAbstraction {
            name: abstraction.name().name().to_string(),
            canonical_text: abstraction.canonical_key().to_string(),
            ho_vars: abstraction.ho_var_count(),
            num_definitions: asg.choices.iter().filter(|c| **c == Some(a)).count(),
        });
    }
    let assignments: BTreeMap<String, Option<String>> = p
        .definitions()
        .iter()
        .zip(&asg.choices)
        .map(|(d, c)| {
            (
                d.symbol().to_string(),
                c.map(|a| pool.abstractions[a].name().name().to_string()),
            )
        })
        .collect();

    let report = RefactorReport {
        input_size: p.size() as u64,
        output_size: program.size() as u64,
        objective_value: asg.objective_value,
        objective_breakdown: asg.breakdown,
        weights: config.weights,
        proved_optimal: asg.proved_optimal,
        size_optimum,
        selected_abstractions,
        assignments,
        candidates_enumerated: pool.stats.enumerated,
        candidates_before_filter: pool.stats.distinct,
        candidates_after_filter: pool.stats.retained,
        candidate_count_convention: CANDIDATE_COUNT_CONVENTION.to_string(),
        verification,
        solver_nodes: solution.stats.nodes,
        solve_millis: solution.stats.elapsed.as_millis() as u64,
        total_millis: start.elapsed().as_millis() as u64,
    };
    Ok(RefactorOutcome {
        program,
        pool,
        solution,
        report,
    })
}
