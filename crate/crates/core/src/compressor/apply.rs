use std::collections::BTreeSet;

use thiserror::Error;

use super::cop::Assignment;
use crate::abstractor::{canon::canonical_var_name, Abstraction, CandidatePool};
use crate::ast::{Atom, Clause, Definition, PredicateSymbol, Program, Term, VarOrder, Variable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApplyError {
    #[error("assignment has {found} entries for {expected} definitions")]
    WrongLength { expected: usize, found: usize },
    #[error("abstraction #{0} is not in the pool")]
    UnknownAbstraction(usize),
    #[error("abstraction `{abstraction}` has no instantiation for `{definition}`")]
    MissingOrigin {
        abstraction: PredicateSymbol,
        definition: PredicateSymbol,
    },
    #[error("abstraction `{abstraction}` takes {expected} first-order arguments, `{definition}` has arity {found}")]
    ArityMismatch {
        abstraction: PredicateSymbol,
        definition: PredicateSymbol,
        expected: usize,
        found: usize,
    },
}

/// Rewrites every assigned definition into a single call of its abstraction.
///
/// Each selected abstraction is emitted once, followed by the definitions it
/// replaces; unassigned definitions follow verbatim, in input order.
pub fn apply_refactoring(p: &Program, pool: &CandidatePool, asg: &Assignment) -> Result<Program, ApplyError> {
    let defs = p.definitions();
    if asg.choices.len() != defs.len() {
        return Err(ApplyError::WrongLength {
            expected: defs.len(),
            found: asg.choices.len(),
        });
    }
    let mut rewritten: Vec<Option<Definition>> = vec![None; defs.len()];
    let mut first_use: Vec<usize> = Vec::new();
    for (d, choice) in asg.choices.iter().enumerate() {
        let Some(a) = *choice else { continue };
        let abstraction = pool.abstractions.get(a).ok_or(ApplyError::UnknownAbstraction(a))?;
        rewritten[d] = Some(call_definition(&defs[d], abstraction)?);
        if !first_use.contains(&a) {
            first_use.push(a);
        }
    }

    let mut out = Vec::with_capacity(defs.len() + first_use.len());
    for &a in &first_use {
        out.push(pool.abstractions[a].definition().clone());
        for (d, choice) in asg.choices.iter().enumerate() {
            if *choice == Some(a) {
                out.push(rewritten[d].take().expect("rewritten above"));
            }
        }
    }
    out.extend(
        defs.iter()
            .zip(&asg.choices)
            .filter(|(_, c)| c.is_none())
            .map(|(d, _)| d.clone()),
    );
    let targets: BTreeSet<PredicateSymbol> = p.targets().clone();
    let program = Program::new(out).expect("pool names are fresh");
    Ok(program.with_targets(targets).expect("targets keep their definitions"))
}

/// `d(A,B,..) :- a(A,B,..,p1,..)` with the bindings recorded for `d`.
fn call_definition(d: &Definition, a: &Abstraction) -> Result<Definition, ApplyError> {
    let tuple = a.origin(d.symbol()).ok_or_else(|| ApplyError::MissingOrigin {
        abstraction: a.name().clone(),
        definition: d.symbol().clone(),
    })?;
    let arity = d.symbol().arity();
    let first_order = a.name().arity() - a.ho_var_count();
    if first_order != arity {
        return Err(ApplyError::ArityMismatch {
            abstraction: a.name().clone(),
            definition: d.symbol().clone(),
            expected: first_order,
            found: arity,
        });
    }
    let vars: Vec<Term> = (0..arity)
        .map(|i| Term::Var(Variable::first_order(canonical_var_name(VarOrder::First, i)).expect("canonical")))
        .collect();
    let mut fo = vars.iter().cloned();
    let mut ho = tuple.bindings().iter().cloned();
    let args: Vec<Term> = (0..a.name().arity())
        .map(|i| {
            if a.ho_positions().contains(&i) {
                Term::PredRef(ho.next().expect("tuple has one binding per variable"))
            } else {
                fo.next().expect("arity checked")
            }
        })
        .collect();
    let head = Atom::pred(d.symbol().name(), vars).expect("same arity");
    let call = Atom::pred(a.name().name(), args).expect("abstraction arity");
    let clause = Clause::new(head, vec![call]).expect("predicate head");
    Ok(Definition::new(d.symbol().clone(), vec![clause]).expect("single clause"))
}
