//! Immutable representation of first-order and higher-order definite programs.
//!
//! Programs are built from [`Definition`]s, each grouping the clauses that share
//! a head predicate symbol. Size is always measured in literals: every head and
//! every body atom counts as one, independent of arity.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AstError {
    #[error("invalid predicate symbol name `{0}`")]
    InvalidSymbol(String),
    #[error("invalid variable name `{0}`")]
    InvalidVariable(String),
    #[error("atom `{callee}` expects {expected} arguments, got {found}")]
    ArityMismatch { callee: String, expected: usize, found: usize },
    #[error("clause head must be a predicate symbol, found variable `{0}`")]
    VariableHead(String),
    #[error("definition of `{expected}` contains a clause for `{found}`")]
    ForeignClause { expected: PredicateSymbol, found: PredicateSymbol },
    #[error("definition of `{0}` has no clauses")]
    EmptyDefinition(PredicateSymbol),
    #[error("predicate `{0}` is defined more than once")]
    DuplicateDefinition(PredicateSymbol),
    #[error("target `{0}` is not the head of any definition")]
    UnknownTarget(PredicateSymbol),
}

/// A predicate symbol: a lowercase-initial name paired with an arity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PredicateSymbol {
    name: String,
    arity: usize,
}

impl PredicateSymbol {
    pub fn new(name: impl Into<String>, arity: usize) -> Result<Self, AstError> {
        let name = name.into();
        if !is_symbol_name(&name) {
            return Err(AstError::InvalidSymbol(name));
        }
        Ok(Self { name, arity })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
}

impl fmt::Display for PredicateSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

pub(crate) fn is_symbol_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub(crate) fn is_variable_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Constants are lowercase identifiers or (possibly negative) integers.
pub(crate) fn is_constant_name(name: &str) -> bool {
    if is_symbol_name(name) {
        return true;
    }
    let digits = name.strip_prefix('-').unwrap_or(name);
    !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarOrder {
    First,
    Higher,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable {
    name: String,
    order: VarOrder,
}

impl Variable {
    pub fn new(name: impl Into<String>, order: VarOrder) -> Result<Self, AstError> {
        let name = name.into();
        if !is_variable_name(&name) {
            return Err(AstError::InvalidVariable(name));
        }
        Ok(Self { name, order })
    }

    pub fn first_order(name: impl Into<String>) -> Result<Self, AstError> {
        Self::new(name, VarOrder::First)
    }

    pub fn higher_order(name: impl Into<String>) -> Result<Self, AstError> {
        Self::new(name, VarOrder::Higher)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> VarOrder {
        self.order
    }

    pub fn is_higher_order(&self) -> bool {
        self.order == VarOrder::Higher
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Argument of an atom.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(String),
    Var(Variable),
    /// A predicate symbol passed to a higher-order argument position.
    PredRef(PredicateSymbol),
}

impl Term {
    pub fn is_higher_order(&self) -> bool {
        match self {
            Term::Const(_) => false,
            Term::Var(v) => v.is_higher_order(),
            Term::PredRef(_) => true,
        }
    }

    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            Term::Var(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => f.write_str(c),
            Term::Var(v) => write!(f, "{v}"),
            Term::PredRef(p) => f.write_str(p.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Callee {
    Pred(PredicateSymbol),
    Var(Variable),
}

impl Callee {
    pub fn as_pred(&self) -> Option<&PredicateSymbol> {
        match self {
            Callee::Pred(p) => Some(p),
            Callee::Var(_) => None,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Callee::Pred(p) => p.name(),
            Callee::Var(v) => v.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    callee: Callee,
    args: Vec<Term>,
}

impl Atom {
    pub fn new(callee: Callee, args: Vec<Term>) -> Result<Self, AstError> {
        if let Callee::Pred(p) = &callee {
            if p.arity() != args.len() {
                return Err(AstError::ArityMismatch {
                    callee: p.name().to_string(),
                    expected: p.arity(),
                    found: args.len(),
                });
            }
        }
        Ok(Self { callee, args })
    }

    /// Builds `pred(args)` with the arity taken from `args`.
    pub fn pred(name: &str, args: Vec<Term>) -> Result<Self, AstError> {
        let symbol = PredicateSymbol::new(name, args.len())?;
        Self::new(Callee::Pred(symbol), args)
    }

    pub fn callee(&self) -> &Callee {
        &self.callee
    }

    pub fn args(&self) -> &[Term] {
        &self.args
    }

    pub fn symbol(&self) -> Option<&PredicateSymbol> {
        self.callee.as_pred()
    }

    pub fn is_higher_order(&self) -> bool {
        matches!(self.callee, Callee::Var(_)) || self.args.iter().any(Term::is_higher_order)
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        let callee = match &self.callee {
            Callee::Var(v) => Some(v),
            Callee::Pred(_) => None,
        };
        callee.into_iter().chain(self.args.iter().filter_map(Term::as_var))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.callee.name())?;
        if self.args.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, arg) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{arg}")?;
        }
        f.write_str(")")
    }
}

/// A definite clause `head :- body`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    head: Atom,
    body: Vec<Atom>,
}

impl Clause {
    pub fn new(head: Atom, body: Vec<Atom>) -> Result<Self, AstError> {
        if let Callee::Var(v) = head.callee() {
            return Err(AstError::VariableHead(v.name().to_string()));
        }
        Ok(Self { head, body })
    }

    pub fn head(&self) -> &Atom {
        &self.head
    }

    pub fn body(&self) -> &[Atom] {
        &self.body
    }

    pub fn head_symbol(&self) -> &PredicateSymbol {
        self.head.symbol().expect("clause heads are predicate symbols")
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        std::iter::once(&self.head).chain(self.body.iter())
    }

    pub fn is_higher_order(&self) -> bool {
        self.atoms().any(Atom::is_higher_order)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.head)?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, atom) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{atom}")?;
            }
        }
        f.write_str(".")
    }
}

/// All clauses sharing one head predicate symbol, in source order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Definition {
    symbol: PredicateSymbol,
    clauses: Vec<Clause>,
}

impl Definition {
    pub fn new(symbol: PredicateSymbol, clauses: Vec<Clause>) -> Result<Self, AstError> {
        if clauses.is_empty() {
            return Err(AstError::EmptyDefinition(symbol));
        }
        if let Some(c) = clauses.iter().find(|c| *c.head_symbol() != symbol) {
            return Err(AstError::ForeignClause {
                expected: symbol,
                found: c.head_symbol().clone(),
            });
        }
        Ok(Self { symbol, clauses })
    }

    pub fn symbol(&self) -> &PredicateSymbol {
        &self.symbol
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// True iff the head symbol is called from some body.
    pub fn is_recursive(&self) -> bool {
        self.clauses
            .iter()
            .flat_map(|c| c.body())
            .any(|a| a.symbol() == Some(&self.symbol))
    }

    pub fn is_higher_order(&self) -> bool {
        self.clauses.iter().any(Clause::is_higher_order)
    }

    /// Distinct predicate symbols called from bodies, in first-occurrence order.
    /// True iff some head takes a higher-order argument, as abstractions do.
    pub fn has_higher_order_head(&self) -> bool {
        self.clauses.iter().any(|c| c.head().args().iter().any(Term::is_higher_order))
    }

    pub fn body_symbols(&self) -> Vec<&PredicateSymbol> {
        let mut seen = HashSet::new();
        self.clauses
            .iter()
            .flat_map(|c| c.body())
            .filter_map(Atom::symbol)
            .filter(|s| seen.insert(*s))
            .collect()
    }
}

impl fmt::Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for clause in &self.clauses {
            writeln!(f, "{clause}")?;
        }
        Ok(())
    }
}

/// A definite program: definitions with distinct heads plus the target set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    definitions: Vec<Definition>,
    targets: BTreeSet<PredicateSymbol>,
}

impl Program {
    /// Builds a program whose targets are its root definitions (never called
    /// from the body of another definition).
    pub fn new(definitions: Vec<Definition>) -> Result<Self, AstError> {
        let mut seen = HashSet::new();
        for d in &definitions {
            if !seen.insert(d.symbol()) {
                return Err(AstError::DuplicateDefinition(d.symbol().clone()));
            }
        }
        let targets = root_symbols(&definitions);
        Ok(Self { definitions, targets })
    }

    /// Partitions clauses by head symbol, ordering definitions by first appearance.
    pub fn from_clauses(clauses: Vec<Clause>) -> Result<Self, AstError> {
        Self::new(defs(clauses)?)
    }

    pub fn with_targets(
        self,
        targets: impl IntoIterator<Item = PredicateSymbol>,
    ) -> Result<Self, AstError> {
        let targets: BTreeSet<_> = targets.into_iter().collect();
        if let Some(t) = targets.iter().find(|t| self.definition(t).is_none()) {
            return Err(AstError::UnknownTarget(t.clone()));
        }
        Ok(Self { targets, ..self })
    }

    pub fn empty() -> Self {
        Self {
            definitions: Vec::new(),
            targets: BTreeSet::new(),
        }
    }

    pub fn definitions(&self) -> &[Definition] {
        &self.definitions
    }

    pub fn targets(&self) -> &BTreeSet<PredicateSymbol> {
        &self.targets
    }

    pub fn definition(&self, symbol: &PredicateSymbol) -> Option<&Definition> {
        self.definitions.iter().find(|d| d.symbol() == symbol)
    }

    pub fn clauses(&self) -> impl Iterator<Item = &Clause> {
        self.definitions.iter().flat_map(|d| d.clauses())
    }

    pub fn is_empty(&self) -> bool {
        self.definitions.is_empty()
    }

    /// True iff no clause contains a higher-order variable, a predicate
    /// reference or a variable callee.
    pub fn is_first_order(&self) -> bool {
        !self.clauses().any(Clause::is_higher_order)
    }

    /// Every predicate symbol that appears as a head or a callee.
    pub fn symbols(&self) -> BTreeSet<&PredicateSymbol> {
        self.clauses()
            .flat_map(Clause::atoms)
            .filter_map(Atom::symbol)
            .collect()
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.definitions {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// Groups clauses into definitions by head symbol, preserving first-appearance
/// order of definitions and source order of clauses within each.
pub fn defs(clauses: Vec<Clause>) -> Result<Vec<Definition>, AstError> {
    let mut order: Vec<PredicateSymbol> = Vec::new();
    let mut groups: HashMap<PredicateSymbol, Vec<Clause>> = HashMap::new();
    for clause in clauses {
        let symbol = clause.head_symbol().clone();
        groups
            .entry(symbol.clone())
            .or_insert_with(|| {
                order.push(symbol);
                Vec::new()
            })
            .push(clause);
    }
    order
        .into_iter()
        .map(|s| {
            let clauses = groups.remove(&s).unwrap_or_default();
            Definition::new(s, clauses)
        })
        .collect()
}

fn root_symbols(definitions: &[Definition]) -> BTreeSet<PredicateSymbol> {
    let called: HashSet<&PredicateSymbol> = definitions
        .iter()
        .flat_map(|d| {
            d.clauses()
                .iter()
                .flat_map(Clause::body)
                .filter_map(Atom::symbol)
                .filter(move |s| *s != d.symbol())
        })
        .collect();
    definitions
        .iter()
        .filter(|d| !called.contains(d.symbol()) && !d.has_higher_order_head())
        .map(|d| d.symbol().clone())
        .collect()
}

/// Literal count: heads and body atoms count one each.
pub trait Size {
    fn size(&self) -> usize;
}

impl Size for Clause {
    fn size(&self) -> usize {
        1 + self.body.len()
    }
}

impl Size for Definition {
    fn size(&self) -> usize {
        self.clauses.iter().map(Size::size).sum()
    }
}

impl Size for Program {
    fn size(&self) -> usize {
        self.definitions.iter().map(Size::size).sum()
    }
}
