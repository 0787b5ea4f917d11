//! Alpha-canonical forms for clauses, abstractions and whole programs.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::ast::{Atom, Callee, Clause, Definition, PredicateSymbol, Program, Term, VarOrder, Variable};

const FIRST_ORDER_LETTERS: &[u8] = b"ABCDEFGHIJKLMNO";
const HIGHER_ORDER_LETTERS: &[u8] = b"PQRSTUVWXYZ";

/// The `index`-th canonical variable name of the given order. The two
/// sequences never overlap.
pub fn canonical_var_name(order: VarOrder, index: usize) -> String {
    let letters = match order {
        VarOrder::First => FIRST_ORDER_LETTERS,
        VarOrder::Higher => HIGHER_ORDER_LETTERS,
    };
    let letter = letters[index % letters.len()] as char;
    match index / letters.len() {
        0 => letter.to_string(),
        round => format!("{letter}{round}"),
    }
}

/// Renames the variables of a clause by first occurrence (head, then body,
/// left to right); first-order and higher-order variables are numbered
/// separately.
pub fn canonicalize_clause(clause: &Clause) -> Clause {
    let mut names: HashMap<&Variable, Variable> = HashMap::new();
    let mut counts = [0usize; 2];
    for v in clause.atoms().flat_map(Atom::variables) {
        names.entry(v).or_insert_with(|| {
            let slot = match v.order() {
                VarOrder::First => 0,
                VarOrder::Higher => 1,
            };
            let name = canonical_var_name(v.order(), counts[slot]);
            counts[slot] += 1;
            Variable::new(name, v.order()).expect("canonical names are valid")
        });
    }
    let rename_var = |v: &Variable| names[v].clone();
    let rename = |a: &Atom| {
        let callee = match a.callee() {
            Callee::Var(v) => Callee::Var(rename_var(v)),
            c => c.clone(),
        };
        let args = a
            .args()
            .iter()
            .map(|t| match t {
                Term::Var(v) => Term::Var(rename_var(v)),
                t => t.clone(),
            })
            .collect();
        Atom::new(callee, args).expect("renaming preserves arity")
    };
    Clause::new(rename(clause.head()), clause.body().iter().map(rename).collect())
        .expect("renaming preserves head")
}

pub fn canonicalize_definition(d: &Definition) -> Definition {
    Definition::new(d.symbol().clone(), d.clauses().iter().map(canonicalize_clause).collect())
        .expect("renaming preserves the head symbol")
}

/// Serializes a clause, replacing callees found in `rename` by their mapped text.
fn clause_text(clause: &Clause, rename: &dyn Fn(&PredicateSymbol) -> Option<String>) -> String {
    let atom_text = |a: &Atom| -> String {
        let callee = match a.callee() {
            Callee::Pred(p) => rename(p).unwrap_or_else(|| p.name().to_string()),
            Callee::Var(v) => v.name().to_string(),
        };
        if a.args().is_empty() {
            return callee;
        }
        let args: Vec<String> = a.args().iter().map(|t| t.to_string()).collect();
        format!("{callee}({})", args.join(","))
    };
    let mut s = atom_text(clause.head());
    if !clause.body().is_empty() {
        s.push_str(":-");
        let body: Vec<String> = clause.body().iter().map(atom_text).collect();
        s.push_str(&body.join(","));
    }
    s.push('.');
    s
}

/// Key invariant under renaming of variables and of the head symbol, which is
/// written as `@`.
pub fn canonical_key(d: &Definition) -> String {
    let own = d.symbol().clone();
    let rename = move |p: &PredicateSymbol| (*p == own).then(|| "@".to_string());
    d.clauses()
        .iter()
        .map(|c| clause_text(&canonicalize_clause(c), &rename))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Canonical form of a whole program: one entry per definition, independent
/// of definition order, variable names and the names of abstractions (higher-
/// order definitions), which are identified by their canonical key.
pub fn canonical_program(p: &Program) -> BTreeSet<String> {
    let keys: BTreeMap<&PredicateSymbol, String> = p
        .definitions()
        .iter()
        .filter(|d| d.is_higher_order() && d.clauses()[0].head().args().iter().any(Term::is_higher_order))
        .map(|d| (d.symbol(), canonical_key(d)))
        .collect();
    let rename = |s: &PredicateSymbol| keys.get(s).map(|k| format!("{{{k}}}"));
    p.definitions()
        .iter()
        .map(|d| match keys.get(d.symbol()) {
            Some(k) => format!("abstraction {k}"),
            None => d
                .clauses()
                .iter()
                .map(|c| clause_text(&canonicalize_clause(c), &rename))
                .collect::<Vec<_>>()
                .join(" "),
        })
        .collect()
}

/// Structural equality modulo variable renaming, definition order and
/// invented-name numbering.
pub fn programs_alpha_equivalent(p: &Program, q: &Program) -> bool {
    canonical_program(p) == canonical_program(q)
}
