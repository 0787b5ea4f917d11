//! Bottom-up evaluation and semantic equivalence checking.

mod engine;
mod specialize;
pub mod universe;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

pub use engine::{facts_by_predicate, restricted_model, GroundAtom, RestrictedModel};
pub use specialize::specialize;
pub use universe::{Universe, UniverseConfig, UniverseError};

use crate::abstractor::Abstraction;
use crate::ast::{PredicateSymbol, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unresolved predicate symbol(s): {}", join(.0))]
    Unresolved(Vec<PredicateSymbol>),
    #[error("higher-order variable `{variable}` is unbound in `{definition}`")]
    UnboundHigherOrder {
        definition: PredicateSymbol,
        variable: String,
    },
    #[error("program is not first-order")]
    NotFirstOrder,
    #[error("cannot specialize: {0}")]
    Specialization(String),
}

fn join(symbols: &[PredicateSymbol]) -> String {
    symbols.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
}

/// Which program derives the distinguishing fact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Original,
    Refactored,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Original => "original",
            Side::Refactored => "refactored",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    /// The smallest fact (in lexicographic order) derived by exactly one side.
    Counterexample { atom: GroundAtom, side: Side },
}

impl Equivalence {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Equivalence::Equivalent)
    }
}

/// Compares the least models of `p` and `q` on `targets` over `universe`.
///
/// Higher-order definitions of either program, and abstractions from
/// `library`, are specialized away before evaluation.
pub fn check_equivalence(
    p: &Program,
    q: &Program,
    library: &[Abstraction],
    universe: &Universe,
    targets: &BTreeSet<PredicateSymbol>,
) -> Result<Equivalence, EvalError> {
    let p = specialize(p, library)?;
    let q = specialize(q, library)?;
    let (mp, mq) = rayon::join(
        || restricted_model(&p, universe, targets),
        || restricted_model(&q, universe, targets),
    );
    let (mp, mq) = (mp?, mq?);
    Ok(match mp.facts.symmetric_difference(&mq.facts).next() {
        None => Equivalence::Equivalent,
        Some(atom) => Equivalence::Counterexample {
            atom: atom.clone(),
            side: if mp.facts.contains(atom) {
                Side::Original
            } else {
                Side::Refactored
            },
        },
    })
}
