//! Abstraction selection as a 0-1 constraint optimisation problem.
//!
//! Decision variables: `r[d][a]` (definition `d` is rewritten with `a`),
//! `n[d]` (`d` is kept as is) and `s[a]` (`a` is part of the output).
//!
//! Constraints: `sum_a r[d][a] + n[d] = 1` for every `d`, and
//! `s[a] <-> OR_d r[d][a]` for every `a`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::abstractor::CandidatePool;
use crate::ast::{PredicateSymbol, Program, Size};

/// Literal count of a rewritten definition: one head, one call.
pub const REFACTORED_SIZE: u64 = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CopError {
    #[error("abstraction `{abstraction}` refers to unknown definition `{definition}`")]
    UnknownDefinition {
        abstraction: PredicateSymbol,
        definition: PredicateSymbol,
    },
    #[error("assignment covers {found} definitions, model has {expected}")]
    WrongLength { expected: usize, found: usize },
    #[error("definition `{definition}` assigned abstraction #{abstraction}, which is not one of its candidates")]
    NotACandidate { definition: PredicateSymbol, abstraction: usize },
    #[error("selected set does not match the abstractions in use")]
    Linking,
}

/// Coefficients of the four objective components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Weights {
    pub unabstracted: u64,
    pub abstraction: u64,
    pub refactored: u64,
    pub penalty: u64,
}

impl Default for Weights {
    fn default() -> Self {
        Self::new(1, 1, 1, 1)
    }
}

impl Weights {
    pub fn new(unabstracted: u64, abstraction: u64, refactored: u64, penalty: u64) -> Self {
        Self {
            unabstracted,
            abstraction,
            refactored,
            penalty,
        }
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.unabstracted, self.abstraction, self.refactored, self.penalty
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefinitionEntry {
    pub symbol: PredicateSymbol,
    pub size: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AbstractionEntry {
    pub name: PredicateSymbol,
    pub size: u64,
    pub ho_vars: u64,
    pub canonical_key: String,
    /// Indices of the definitions in D(a).
    pub definitions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CopModel {
    pub definitions: Vec<DefinitionEntry>,
    pub abstractions: Vec<AbstractionEntry>,
    /// A(d): applicable abstraction indices per definition.
    pub candidates: Vec<Vec<usize>>,
    pub weights: Weights,
}

/// The unweighted objective components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct ObjectiveBreakdown {
    pub unabstracted_size: u64,
    pub abstraction_size: u64,
    pub refactored_size: u64,
    pub penalty: u64,
}

impl ObjectiveBreakdown {
    pub fn objective(&self, w: &Weights) -> u64 {
        w.unabstracted * self.unabstracted_size
            + w.abstraction * self.abstraction_size
            + w.refactored * self.refactored_size
            + w.penalty * self.penalty
    }

    /// Literal count of the rewritten program.
    pub fn program_size(&self) -> u64 {
        self.unabstracted_size + self.abstraction_size + self.refactored_size
    }
}

/// A solution: the abstraction chosen for each definition, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub choices: Vec<Option<usize>>,
    pub selected: BTreeSet<usize>,
    pub breakdown: ObjectiveBreakdown,
    pub objective_value: u64,
    pub proved_optimal: bool,
}

impl CopModel {
    pub fn num_refactoring_vars(&self) -> usize {
        self.candidates.iter().map(Vec::len).sum()
    }

    pub fn num_keep_vars(&self) -> usize {
        self.definitions.len()
    }

    pub fn num_selection_vars(&self) -> usize {
        self.abstractions.len()
    }

    /// Cost of including abstraction `a` in the output.
    pub fn abstraction_cost(&self, a: usize) -> u64 {
        let e = &self.abstractions[a];
        self.weights.abstraction * e.size + self.weights.penalty * e.ho_vars
    }

    pub fn keep_cost(&self, d: usize) -> u64 {
        self.weights.unabstracted * self.definitions[d].size
    }

    pub fn refactor_cost(&self) -> u64 {
        self.weights.refactored * REFACTORED_SIZE
    }

    /// Components of the objective for per-definition choices, with the
    /// selected set derived from the choices.
    pub fn breakdown(&self, choices: &[Option<usize>]) -> ObjectiveBreakdown {
        let selected: BTreeSet<usize> = choices.iter().flatten().copied().collect();
        let mut b = ObjectiveBreakdown::default();
        for (d, c) in choices.iter().enumerate() {
            match c {
                Some(_) => b.refactored_size += REFACTORED_SIZE,
                None => b.unabstracted_size += self.definitions[d].size,
            }
        }
        for &a in &selected {
            b.abstraction_size += self.abstractions[a].size;
            b.penalty += self.abstractions[a].ho_vars;
        }
        b
    }

    /// Builds the assignment for the given choices, checking both constraint
    /// families.
    pub fn assignment(&self, choices: Vec<Option<usize>>, proved_optimal: bool) -> Result<Assignment, CopError> {
        if choices.len() != self.definitions.len() {
            return Err(CopError::WrongLength {
                expected: self.definitions.len(),
                found: choices.len(),
            });
        }
        for (d, c) in choices.iter().enumerate() {
            if let Some(a) = c {
                if !self.candidates[d].contains(a) {
                    return Err(CopError::NotACandidate {
                        definition: self.definitions[d].symbol.clone(),
                        abstraction: *a,
                    });
                }
            }
        }
        let breakdown = self.breakdown(&choices);
        let selected = choices.iter().flatten().copied().collect();
        Ok(Assignment {
            objective_value: breakdown.objective(&self.weights),
            choices,
            selected,
            breakdown,
            proved_optimal,
        })
    }

    pub fn all_none(&self) -> Assignment {
        self.assignment(vec![None; self.definitions.len()], false)
            .expect("keeping every definition is feasible")
    }

    /// Checks the exactly-one and linking constraints on the 0-1 encoding of
    /// `asg` and recomputes its objective.
    pub fn check(&self, asg: &Assignment) -> Result<(), CopError> {
        if asg.choices.len() != self.definitions.len() {
            return Err(CopError::WrongLength {
                expected: self.definitions.len(),
                found: asg.choices.len(),
            });
        }
        for (d, choice) in asg.choices.iter().enumerate() {
            let r: u32 = self.candidates[d]
                .iter()
                .map(|a| u32::from(*choice == Some(*a)))
                .sum();
            let n = u32::from(choice.is_none());
            if r + n != 1 {
                return Err(CopError::NotACandidate {
                    definition: self.definitions[d].symbol.clone(),
                    abstraction: choice.unwrap_or_default(),
                });
            }
        }
        for a in 0..self.abstractions.len() {
            let used = self.abstractions[a]
                .definitions
                .iter()
                .any(|&d| asg.choices[d] == Some(a));
            if used != asg.selected.contains(&a) {
                return Err(CopError::Linking);
            }
        }
        if self.breakdown(&asg.choices) != asg.breakdown
            || asg.breakdown.objective(&self.weights) != asg.objective_value
        {
            return Err(CopError::Linking);
        }
        Ok(())
    }
}

/// One exactly-one group per definition and one linking constraint per pool
/// abstraction.
pub fn build_cop(p: &Program, pool: &CandidatePool, weights: Weights) -> Result<CopModel, CopError> {
    let definitions: Vec<DefinitionEntry> = p
        .definitions()
        .iter()
        .map(|d| DefinitionEntry {
            symbol: d.symbol().clone(),
            size: d.size() as u64,
        })
        .collect();
    let index: HashMap<&PredicateSymbol, usize> = definitions
        .iter()
        .enumerate()
        .map(|(i, d)| (&d.symbol, i))
        .collect();
    let mut candidates = vec![Vec::new(); definitions.len()];
    let mut abstractions = Vec::with_capacity(pool.len());
    for (ai, a) in pool.abstractions.iter().enumerate() {
        let mut defs = Vec::with_capacity(a.origins().len());
        for o in a.origins() {
            let &d = index.get(&o.definition).ok_or_else(|| CopError::UnknownDefinition {
                abstraction: a.name().clone(),
                definition: o.definition.clone(),
            })?;
            defs.push(d);
            candidates[d].push(ai);
        }
        abstractions.push(AbstractionEntry {
            name: a.name().clone(),
            size: a.size() as u64,
            ho_vars: a.ho_var_count() as u64,
            canonical_key: a.canonical_key().to_string(),
            definitions: defs,
        });
    }
    Ok(CopModel {
        definitions,
        abstractions,
        candidates,
        weights,
    })
}

/// Small hand-built model for unit tests.
#[cfg(test)]
pub(crate) fn toy_model(def_sizes: &[u64], abstractions: &[(u64, u64, &[usize])], weights: Weights) -> CopModel {
    let definitions = def_sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| DefinitionEntry {
            symbol: PredicateSymbol::new(format!("d{i}"), 1).unwrap(),
            size,
        })
        .collect();
    let mut candidates = vec![Vec::new(); def_sizes.len()];
    let abstractions = abstractions
        .iter()
        .enumerate()
        .map(|(i, &(size, ho_vars, defs))| {
            for &d in defs {
                candidates[d].push(i);
            }
            AbstractionEntry {
                name: PredicateSymbol::new(format!("ho_{i}"), 2).unwrap(),
                size,
                ho_vars,
                canonical_key: format!("k{i}"),
                definitions: defs.to_vec(),
            }
        })
        .collect();
    CopModel {
        definitions,
        abstractions,
        candidates,
        weights,
    }
}
