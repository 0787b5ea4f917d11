//! Candidate higher-order abstractions of a first-order program.
//!
//! For every definition, each subset of its non-recursive body symbols (up to
//! a size bound) is replaced by fresh higher-order variables, which are
//! appended to every head. The head symbol, including recursive calls, is
//! replaced by an invented symbol. Candidates that are equal modulo renaming
//! are merged, and those usable by a single definition are dropped.

pub mod canon;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use log::debug;
use rayon::prelude::*;
use thiserror::Error;

use crate::ast::{
    Atom, Callee, Clause, Definition, PredicateSymbol, Program, Size, Term, VarOrder, Variable,
};
use crate::parser::HoSignature;

pub use canon::{canonical_key, canonical_program, canonicalize_definition, programs_alpha_equivalent};

/// Bound on the number of abstracted symbols per candidate, unless configured.
pub const DEFAULT_MAX_HO_VARS: usize = 3;

const PLACEHOLDER: &str = "ho__candidate";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbstractionError {
    #[error("definition `{0}` has no higher-order head argument")]
    NoHigherOrderHead(PredicateSymbol),
    #[error("clauses of `{0}` disagree on which head arguments are higher-order")]
    InconsistentHeads(PredicateSymbol),
    #[error("higher-order variable `{var}` of `{symbol}` is never called")]
    UncalledVariable { symbol: PredicateSymbol, var: String },
}

/// Predicate symbols bound to an abstraction's higher-order variables, in
/// canonical variable order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InstantiationTuple {
    bindings: Vec<PredicateSymbol>,
}

impl InstantiationTuple {
    pub fn new(bindings: Vec<PredicateSymbol>) -> Self {
        Self { bindings }
    }

    pub fn bindings(&self) -> &[PredicateSymbol] {
        &self.bindings
    }
}

impl fmt::Display for InstantiationTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.bindings.iter().map(|b| b.name()).collect();
        write!(f, "[{}]", names.join(","))
    }
}

/// A source definition that an abstraction can replace, with its bindings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Origin {
    pub definition: PredicateSymbol,
    pub tuple: InstantiationTuple,
}

/// A canonical higher-order definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Abstraction {
    definition: Definition,
    /// Head argument positions holding higher-order variables, in variable order.
    ho_positions: Vec<usize>,
    /// Arity expected of the predicate bound at each higher-order position.
    ho_arities: Vec<usize>,
    canonical_key: String,
    origins: Vec<Origin>,
}

impl Abstraction {
    /// Wraps a higher-order definition, canonicalizing its variables. The
    /// result has no origins.
    pub fn from_definition(d: Definition) -> Result<Self, AbstractionError> {
        let d = canonicalize_definition(&d);
        let positions = |c: &Clause| -> Vec<usize> {
            c.head()
                .args()
                .iter()
                .enumerate()
                .filter(|(_, t)| t.is_higher_order())
                .map(|(i, _)| i)
                .collect()
        };
        let ho_positions = positions(&d.clauses()[0]);
        if ho_positions.is_empty() {
            return Err(AbstractionError::NoHigherOrderHead(d.symbol().clone()));
        }
        if d.clauses().iter().any(|c| positions(c) != ho_positions) {
            return Err(AbstractionError::InconsistentHeads(d.symbol().clone()));
        }
        let mut ho_arities = Vec::with_capacity(ho_positions.len());
        for &pos in &ho_positions {
            let arity = d.clauses().iter().find_map(|c| {
                let var = c.head().args()[pos].as_var()?;
                c.body().iter().find_map(|a| match a.callee() {
                    Callee::Var(v) if v == var => Some(a.args().len()),
                    _ => None,
                })
            });
            match arity {
                Some(a) => ho_arities.push(a),
                None => {
                    return Err(AbstractionError::UncalledVariable {
                        symbol: d.symbol().clone(),
                        var: d.clauses()[0].head().args()[pos].to_string(),
                    })
                }
            }
        }
        let canonical_key = canonical_key(&d);
        Ok(Self {
            definition: d,
            ho_positions,
            ho_arities,
            canonical_key,
            origins: Vec::new(),
        })
    }

    pub fn name(&self) -> &PredicateSymbol {
        self.definition.symbol()
    }

    pub fn definition(&self) -> &Definition {
        &self.definition
    }

    pub fn ho_var_count(&self) -> usize {
        self.ho_positions.len()
    }

    pub fn ho_positions(&self) -> &[usize] {
        &self.ho_positions
    }

    pub fn ho_signature(&self) -> HoSignature {
        self.ho_positions
            .iter()
            .copied()
            .zip(self.ho_arities.iter().copied())
            .collect()
    }

    pub fn canonical_key(&self) -> &str {
        &self.canonical_key
    }

    pub fn origins(&self) -> &[Origin] {
        &self.origins
    }

    pub fn origin(&self, definition: &PredicateSymbol) -> Option<&InstantiationTuple> {
        self.origins
            .iter()
            .find(|o| &o.definition == definition)
            .map(|o| &o.tuple)
    }

    /// Same abstraction under a new head name.
    pub fn renamed(&self, name: &str) -> Self {
        let old = self.name().clone();
        let new = PredicateSymbol::new(name, old.arity()).expect("valid invented name");
        let clauses = self
            .definition
            .clauses()
            .iter()
            .map(|c| {
                let swap = |a: &Atom| match a.callee() {
                    Callee::Pred(p) if *p == old => {
                        Atom::new(Callee::Pred(new.clone()), a.args().to_vec()).expect("same arity")
                    }
                    _ => a.clone(),
                };
                Clause::new(swap(c.head()), c.body().iter().map(swap).collect()).expect("head kept")
            })
            .collect();
        Self {
            definition: Definition::new(new, clauses).expect("renamed consistently"),
            ..self.clone()
        }
    }

    /// Replaces the higher-order variables by `tuple` and the invented head
    /// symbol by `head`, dropping the higher-order head arguments. This is the
    /// inverse of abstraction for the tuple recorded in an origin.
    pub fn instantiate(&self, tuple: &InstantiationTuple, head: &PredicateSymbol) -> Definition {
        let own = self.name();
        let clauses = self
            .definition
            .clauses()
            .iter()
            .map(|c| {
                let bound: HashMap<&Variable, &PredicateSymbol> = self
                    .ho_positions
                    .iter()
                    .zip(tuple.bindings())
                    .filter_map(|(&pos, p)| c.head().args()[pos].as_var().map(|v| (v, p)))
                    .collect();
                let strip = |args: &[Term]| -> Vec<Term> {
                    args.iter()
                        .enumerate()
                        .filter(|(i, _)| !self.ho_positions.contains(i))
                        .map(|(_, t)| t.clone())
                        .collect()
                };
                let rewrite = |a: &Atom| -> Atom {
                    match a.callee() {
                        Callee::Var(v) if bound.contains_key(v) => {
                            Atom::new(Callee::Pred(bound[v].clone()), a.args().to_vec())
                                .expect("binding arity checked by origin")
                        }
                        Callee::Pred(p) if p == own => {
                            Atom::new(Callee::Pred(head.clone()), strip(a.args())).expect("head arity")
                        }
                        _ => a.clone(),
                    }
                };
                Clause::new(rewrite(c.head()), c.body().iter().map(rewrite).collect())
                    .expect("head stays a predicate")
            })
            .collect();
        Definition::new(head.clone(), clauses).expect("all heads renamed")
    }
}

impl Size for Abstraction {
    fn size(&self) -> usize {
        self.definition.size()
    }
}

impl fmt::Display for Abstraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.definition)
    }
}

/// Candidate abstractions of one first-order definition, each with the tuple
/// that instantiates it back to `d`. At most `max_ho_vars` distinct
/// non-recursive body symbols are abstracted per candidate.
pub fn enumerate_abstractions(
    d: &Definition,
    max_ho_vars: usize,
) -> Vec<(Abstraction, InstantiationTuple)> {
    let symbols: Vec<&PredicateSymbol> = d
        .body_symbols()
        .into_iter()
        .filter(|s| *s != d.symbol())
        .collect();
    let mut out = Vec::new();
    for k in 1..=max_ho_vars.min(symbols.len()) {
        for subset in combinations(symbols.len(), k) {
            let chosen: Vec<&PredicateSymbol> = subset.iter().map(|&i| symbols[i]).collect();
            out.push(abstract_symbols(d, &chosen));
        }
    }
    out
}

/// Index subsets of size `k` of `0..n`, in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn abstract_symbols(d: &Definition, chosen: &[&PredicateSymbol]) -> (Abstraction, InstantiationTuple) {
    // Variables follow the first body occurrence of their symbol.
    let order: Vec<&PredicateSymbol> = d
        .body_symbols()
        .into_iter()
        .filter(|s| chosen.contains(s))
        .collect();
    let vars: Vec<Variable> = (0..order.len())
        .map(|i| {
            Variable::higher_order(canon::canonical_var_name(VarOrder::Higher, i))
                .expect("canonical name")
        })
        .collect();
    let var_of: HashMap<&PredicateSymbol, &Variable> =
        order.iter().copied().zip(vars.iter()).collect();
    let ho_args: Vec<Term> = vars.iter().cloned().map(Term::Var).collect();
    let base_arity = d.symbol().arity();
    let invented = PredicateSymbol::new(PLACEHOLDER, base_arity + vars.len()).expect("valid");

    let extend = |a: &Atom| -> Vec<Term> {
        let mut args = a.args().to_vec();
        args.extend(ho_args.iter().cloned());
        args
    };
    let clauses = d
        .clauses()
        .iter()
        .map(|c| {
            let head = Atom::new(Callee::Pred(invented.clone()), extend(c.head())).expect("arity");
            let body = c
                .body()
                .iter()
                .map(|a| match a.callee() {
                    Callee::Pred(p) if p == d.symbol() => {
                        Atom::new(Callee::Pred(invented.clone()), extend(a)).expect("arity")
                    }
                    Callee::Pred(p) => match var_of.get(p) {
                        Some(v) => Atom::new(Callee::Var((*v).clone()), a.args().to_vec()).expect("var callee"),
                        None => a.clone(),
                    },
                    Callee::Var(_) => a.clone(),
                })
                .collect();
            Clause::new(head, body).expect("head is a predicate")
        })
        .collect();
    let definition = Definition::new(invented, clauses).expect("single head symbol");
    let tuple = InstantiationTuple::new(order.into_iter().cloned().collect());
    let mut abstraction =
        Abstraction::from_definition(definition).expect("every abstracted symbol is called");
    abstraction.origins.push(Origin {
        definition: d.symbol().clone(),
        tuple: tuple.clone(),
    });
    (abstraction, tuple)
}

/// Candidate counts at each stage of pool construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PoolStats {
    /// Candidates produced across all definitions before merging.
    pub enumerated: usize,
    /// Distinct candidates after merging alpha-equivalent ones.
    pub distinct: usize,
    /// Candidates surviving the filter.
    pub retained: usize,
}

#[derive(Debug, Clone, Default)]
pub struct CandidatePool {
    pub abstractions: Vec<Abstraction>,
    pub stats: PoolStats,
}

impl CandidatePool {
    pub fn get(&self, name: &PredicateSymbol) -> Option<&Abstraction> {
        self.abstractions.iter().find(|a| a.name() == name)
    }

    pub fn is_empty(&self) -> bool {
        self.abstractions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.abstractions.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PoolOptions {
    pub max_ho_vars: usize,
    /// Keep candidates that only one definition can use.
    pub keep_singletons: bool,
}

impl Default for PoolOptions {
    fn default() -> Self {
        Self {
            max_ho_vars: DEFAULT_MAX_HO_VARS,
            keep_singletons: false,
        }
    }
}

/// Enumerates candidates for every first-order definition, merges
/// alpha-equivalent ones and drops those with fewer than two origins. Pool
/// entries are named `ho_0`, `ho_1`, ... in order of first enumeration,
/// skipping names already used by `p`.
pub fn build_candidate_pool(p: &Program, options: PoolOptions) -> CandidatePool {
    let per_definition: Vec<Vec<(Abstraction, InstantiationTuple)>> = p
        .definitions()
        .par_iter()
        .map(|d| {
            if d.is_higher_order() {
                debug!("skipping higher-order definition {}", d.symbol());
                Vec::new()
            } else {
                enumerate_abstractions(d, options.max_ho_vars)
            }
        })
        .collect();

    let enumerated = per_definition.iter().map(Vec::len).sum();
    let mut merged: Vec<Abstraction> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (abstraction, _) in per_definition.into_iter().flatten() {
        match index.get(abstraction.canonical_key()) {
            Some(&i) => {
                let target = &mut merged[i];
                for origin in abstraction.origins {
                    if target.origin(&origin.definition).is_none() {
                        target.origins.push(origin);
                    }
                }
            }
            None => {
                index.insert(abstraction.canonical_key.clone(), merged.len());
                merged.push(abstraction);
            }
        }
    }
    let distinct = merged.len();

    let taken: HashSet<&str> = p.symbols().into_iter().map(|s| s.name()).collect();
    let mut counter = 0usize;
    let mut fresh_name = || loop {
        let name = format!("ho_{counter}");
        counter += 1;
        if !taken.contains(name.as_str()) {
            return name;
        }
    };
    let abstractions: Vec<Abstraction> = merged
        .into_iter()
        .filter(|a| options.keep_singletons || a.origins.len() >= 2)
        .map(|a| a.renamed(&fresh_name()))
        .collect();
    let stats = PoolStats {
        enumerated,
        distinct,
        retained: abstractions.len(),
    };
    debug!("candidate pool: {stats:?}");
    CandidatePool { abstractions, stats }
}

/// Pool abstractions applicable to each definition, keyed by definition.
pub fn candidates_by_definition(pool: &CandidatePool) -> BTreeMap<&PredicateSymbol, Vec<&Abstraction>> {
    let mut out: BTreeMap<&PredicateSymbol, Vec<&Abstraction>> = BTreeMap::new();
    for a in &pool.abstractions {
        for o in &a.origins {
            out.entry(&o.definition).or_default().push(a);
        }
    }
    out
}
