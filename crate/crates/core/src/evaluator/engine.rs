//! Semi-naive bottom-up evaluation of first-order programs over a finite universe.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use log::debug;

use super::universe::Universe;
use super::EvalError;
use crate::ast::{Callee, Clause, PredicateSymbol, Program, Term};

/// A ground atom `p(c1,..,cn)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtom {
    pub predicate: PredicateSymbol,
    pub args: Vec<String>,
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.predicate.name())?;
        if !self.args.is_empty() {
            write!(f, "({})", self.args.join(","))?;
        }
        Ok(())
    }
}

/// Least Herbrand model of the program restricted to the target predicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestrictedModel {
    pub facts: BTreeSet<GroundAtom>,
    /// Number of derived facts (all program predicates) after each iteration.
    pub trace: Vec<usize>,
}

impl RestrictedModel {
    pub fn facts_of<'m>(&'m self, symbol: &'m PredicateSymbol) -> impl Iterator<Item = &'m GroundAtom> {
        self.facts.iter().filter(move |a| &a.predicate == symbol)
    }
}

type Row = Box<[u32]>;

struct Relation {
    rows: Vec<Row>,
    set: HashSet<Row>,
    index: Vec<HashMap<u32, Vec<u32>>>,
}

impl Relation {
    fn new(arity: usize) -> Self {
        Self {
            rows: Vec::new(),
            set: HashSet::new(),
            index: vec![HashMap::new(); arity],
        }
    }

    fn insert(&mut self, row: Row) -> bool {
        if self.set.contains(&row) {
            return false;
        }
        let id = self.rows.len() as u32;
        for (col, &v) in row.iter().enumerate() {
            self.index[col].entry(v).or_default().push(id);
        }
        self.set.insert(row.clone());
        self.rows.push(row);
        true
    }

    fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Var(usize),
    Const(u32),
}

struct Rule {
    head: usize,
    head_args: Vec<Slot>,
    body: Vec<(usize, Vec<Slot>)>,
    vars: usize,
}

struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(s.to_string(), id);
        self.names.push(s.to_string());
        id
    }
}

/// Computes the least model of a first-order program and keeps the facts of `targets`.
///
/// Head variables that do not occur in the body range over every constant of
/// the universe and of the program.
pub fn restricted_model(
    p: &Program,
    universe: &Universe,
    targets: &BTreeSet<PredicateSymbol>,
) -> Result<RestrictedModel, EvalError> {
    if !p.is_first_order() {
        return Err(EvalError::NotFirstOrder);
    }
    let mut interner = Interner {
        ids: HashMap::new(),
        names: Vec::new(),
    };
    for c in universe.constants() {
        interner.intern(c);
    }

    let mut preds: Vec<PredicateSymbol> = Vec::new();
    let mut pred_ids: HashMap<PredicateSymbol, usize> = HashMap::new();
    let mut pred_id = |s: &PredicateSymbol, preds: &mut Vec<PredicateSymbol>| -> usize {
        *pred_ids.entry(s.clone()).or_insert_with(|| {
            preds.push(s.clone());
            preds.len() - 1
        })
    };

    let defined: HashSet<&PredicateSymbol> = p.definitions().iter().map(|d| d.symbol()).collect();
    let unresolved: BTreeSet<PredicateSymbol> = p
        .clauses()
        .flat_map(|c| c.body().iter())
        .filter_map(|a| a.symbol())
        .filter(|s| !defined.contains(s) && universe.relation(s).is_none())
        .cloned()
        .collect();
    if !unresolved.is_empty() {
        return Err(EvalError::Unresolved(unresolved.into_iter().collect()));
    }

    let mut rules = Vec::new();
    for clause in p.clauses() {
        rules.push(compile(clause, &mut interner, &mut |s| pred_id(s, &mut preds)));
    }
    let idb: Vec<usize> = p.definitions().iter().map(|d| pred_id(d.symbol(), &mut preds)).collect();
    for t in targets {
        pred_id(t, &mut preds);
    }

    let mut full: Vec<Relation> = preds.iter().map(|s| Relation::new(s.arity())).collect();
    let mut delta: Vec<Relation> = preds.iter().map(|s| Relation::new(s.arity())).collect();
    for (id, s) in preds.iter().enumerate() {
        if let Some(tuples) = universe.relation(s) {
            for t in tuples {
                let row: Row = t.iter().map(|c| interner.intern(c)).collect();
                full[id].insert(row.clone());
                if idb.contains(&id) {
                    delta[id].insert(row);
                }
            }
        }
    }
    let all_constants: Vec<u32> = (0..interner.names.len() as u32).collect();
    let is_idb: Vec<bool> = (0..preds.len()).map(|i| idb.contains(&i)).collect();

    let mut derived = Vec::new();
    for rule in &rules {
        let plan = join_plan(rule, None);
        eval_rule(rule, &plan, &full, None, &all_constants, &mut derived);
    }
    let mut trace = Vec::new();
    let mut total = merge(&mut full, &mut delta, derived, &is_idb);
    trace.push(total);

    let plans: Vec<Vec<(usize, Vec<usize>)>> = rules
        .iter()
        .map(|r| {
            (0..r.body.len())
                .filter(|&i| is_idb[r.body[i].0])
                .map(|i| (i, join_plan(r, Some(i))))
                .collect()
        })
        .collect();
    while delta.iter().any(|r| !r.is_empty()) {
        let mut derived = Vec::new();
        for (rule, rule_plans) in rules.iter().zip(&plans) {
            for (pos, plan) in rule_plans {
                if delta[rule.body[*pos].0].is_empty() {
                    continue;
                }
                eval_rule(rule, plan, &full, Some((*pos, &delta)), &all_constants, &mut derived);
            }
        }
        delta = preds.iter().map(|s| Relation::new(s.arity())).collect();
        total += merge(&mut full, &mut delta, derived, &is_idb);
        trace.push(total);
    }
    debug!("fixpoint after {} iterations, {} derived facts", trace.len(), total);

    let mut facts = BTreeSet::new();
    for t in targets {
        let id = pred_ids_lookup(&preds, t);
        for row in &full[id].rows {
            facts.insert(GroundAtom {
                predicate: t.clone(),
                args: row.iter().map(|&c| interner.names[c as usize].clone()).collect(),
            });
        }
    }
    Ok(RestrictedModel { facts, trace })
}

fn pred_ids_lookup(preds: &[PredicateSymbol], s: &PredicateSymbol) -> usize {
    preds.iter().position(|p| p == s).expect("targets are registered")
}

fn merge(full: &mut [Relation], delta: &mut [Relation], derived: Vec<(usize, Row)>, is_idb: &[bool]) -> usize {
    let mut added = 0;
    for (pred, row) in derived {
        debug_assert!(is_idb[pred]);
        if full[pred].insert(row.clone()) {
            delta[pred].insert(row);
            added += 1;
        }
    }
    added
}

fn compile(clause: &Clause, interner: &mut Interner, pred_id: &mut dyn FnMut(&PredicateSymbol) -> usize) -> Rule {
    let mut vars: HashMap<String, usize> = HashMap::new();
    let mut slots = |args: &[Term], interner: &mut Interner| -> Vec<Slot> {
        args.iter()
            .map(|t| match t {
                Term::Const(c) => Slot::Const(interner.intern(c)),
                Term::Var(v) => {
                    let next = vars.len();
                    Slot::Var(*vars.entry(v.name().to_string()).or_insert(next))
                }
                Term::PredRef(_) => unreachable!("first-order program"),
            })
            .collect()
    };
    let callee = |c: &Callee| c.as_pred().expect("first-order program").clone();
    let body: Vec<(usize, Vec<Slot>)> = clause
        .body()
        .iter()
        .map(|a| (pred_id(&callee(a.callee())), slots(a.args(), interner)))
        .collect();
    let head_args = slots(clause.head().args(), interner);
    let head = pred_id(clause.head_symbol());
    Rule {
        head,
        head_args,
        body,
        vars: vars.len(),
    }
}

/// Body atoms in evaluation order: the delta atom first, then repeatedly the
/// atom with the most bound arguments.
fn join_plan(rule: &Rule, delta: Option<usize>) -> Vec<usize> {
    let mut bound = vec![false; rule.vars];
    let mut remaining: Vec<usize> = (0..rule.body.len()).collect();
    let mut plan = Vec::with_capacity(remaining.len());
    let take = |i: usize, bound: &mut Vec<bool>, plan: &mut Vec<usize>| {
        for s in &rule.body[i].1 {
            if let Slot::Var(v) = s {
                bound[*v] = true;
            }
        }
        plan.push(i);
    };
    if let Some(d) = delta {
        remaining.retain(|&i| i != d);
        take(d, &mut bound, &mut plan);
    }
    while !remaining.is_empty() {
        let score = |i: usize| {
            rule.body[i]
                .1
                .iter()
                .filter(|s| match s {
                    Slot::Const(_) => true,
                    Slot::Var(v) => bound[*v],
                })
                .count()
        };
        let best = (0..remaining.len())
            .max_by(|&a, &b| score(remaining[a]).cmp(&score(remaining[b])).then(b.cmp(&a)))
            .expect("non-empty");
        let i = remaining.remove(best);
        take(i, &mut bound, &mut plan);
    }
    plan
}

fn eval_rule(
    rule: &Rule,
    plan: &[usize],
    full: &[Relation],
    delta: Option<(usize, &[Relation])>,
    all_constants: &[u32],
    out: &mut Vec<(usize, Row)>,
) {
    let mut env: Vec<Option<u32>> = vec![None; rule.vars];
    join(rule, plan, 0, full, delta, all_constants, &mut env, out);
}

#[allow(clippy::too_many_arguments)]
fn join(
    rule: &Rule,
    plan: &[usize],
    step: usize,
    full: &[Relation],
    delta: Option<(usize, &[Relation])>,
    all_constants: &[u32],
    env: &mut Vec<Option<u32>>,
    out: &mut Vec<(usize, Row)>,
) {
    if step == plan.len() {
        emit_head(rule, 0, all_constants, env, &mut Vec::new(), out);
        return;
    }
    let atom = plan[step];
    let (pred, slots) = &rule.body[atom];
    let relation = match delta {
        Some((pos, d)) if pos == atom => &d[*pred],
        _ => &full[*pred],
    };
    let value = |s: &Slot, env: &[Option<u32>]| match s {
        Slot::Const(c) => Some(*c),
        Slot::Var(v) => env[*v],
    };
    let lookup = slots
        .iter()
        .enumerate()
        .find_map(|(col, s)| value(s, env).map(|v| (col, v)));
    let candidates: Box<dyn Iterator<Item = &Row>> = match lookup {
        Some((col, v)) => match relation.index[col].get(&v) {
            Some(ids) => Box::new(ids.iter().map(|&i| &relation.rows[i as usize])),
            None => return,
        },
        None => Box::new(relation.rows.iter()),
    };
    let mut newly_bound = Vec::new();
    for row in candidates {
        newly_bound.clear();
        let mut ok = true;
        for (s, &c) in slots.iter().zip(row.iter()) {
            match value(s, env) {
                Some(v) if v != c => {
                    ok = false;
                    break;
                }
                Some(_) => {}
                None => {
                    if let Slot::Var(v) = s {
                        env[*v] = Some(c);
                        newly_bound.push(*v);
                    }
                }
            }
        }
        if ok {
            join(rule, plan, step + 1, full, delta, all_constants, env, out);
        }
        for &v in &newly_bound {
            env[v] = None;
        }
    }
}

fn emit_head(
    rule: &Rule,
    col: usize,
    all_constants: &[u32],
    env: &mut Vec<Option<u32>>,
    row: &mut Vec<u32>,
    out: &mut Vec<(usize, Row)>,
) {
    if col == rule.head_args.len() {
        out.push((rule.head, row.clone().into_boxed_slice()));
        return;
    }
    match rule.head_args[col] {
        Slot::Const(c) => {
            row.push(c);
            emit_head(rule, col + 1, all_constants, env, row, out);
            row.pop();
        }
        Slot::Var(v) => match env[v] {
            Some(c) => {
                row.push(c);
                emit_head(rule, col + 1, all_constants, env, row, out);
                row.pop();
            }
            None => {
                for &c in all_constants {
                    env[v] = Some(c);
                    row.push(c);
                    emit_head(rule, col + 1, all_constants, env, row, out);
                    row.pop();
                }
                env[v] = None;
            }
        },
    }
}

/// Groups facts by predicate, for display and inspection.
pub fn facts_by_predicate(model: &RestrictedModel) -> BTreeMap<&PredicateSymbol, Vec<&GroundAtom>> {
    let mut out: BTreeMap<&PredicateSymbol, Vec<&GroundAtom>> = BTreeMap::new();
    for a in &model.facts {
        out.entry(&a.predicate).or_default().push(a);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, ParseOptions};

    fn program(text: &str) -> Program {
        parse_program(text, &ParseOptions::first_order()).unwrap().value
    }

    fn sym(name: &str, arity: usize) -> PredicateSymbol {
        PredicateSymbol::new(name, arity).unwrap()
    }

    fn model(text: &str, target: PredicateSymbol) -> BTreeSet<String> {
        let p = program(text);
        let m = restricted_model(&p, &Universe::standard(), &BTreeSet::from([target])).unwrap();
        m.facts.iter().map(ToString::to_string).collect()
    }

    #[test]
    fn member_zero() {
        let facts = model(
            "mz(A) :- head(A,B),zero(B).\nmz(A) :- tail(A,B),mz(B).\n",
            sym("mz", 1),
        );
        assert!(facts.contains("mz([0])"));
        assert!(facts.contains("mz([1,2,0])"));
        assert!(!facts.contains("mz([1,2])"));
        // Lists over {0,1,2} of length 1..=4 that contain a 0.
        assert_eq!(facts.len(), (3 + 9 + 27 + 81) - (2 + 4 + 8 + 16));
    }

    #[test]
    fn map_increment() {
        let facts = model(
            "mi(A,B) :- empty(A),empty(B).\nmi(A,B) :- head(A,C),tail(A,D),head(B,E),tail(B,F),increment(C,E),mi(D,F).\n",
            sym("mi", 2),
        );
        assert!(facts.contains("mi([],[])"));
        assert!(facts.contains("mi([0,1],[1,2])"));
        assert!(!facts.contains("mi([2],[3])"));
    }

    #[test]
    fn unbound_head_variables_range_over_constants() {
        let facts = model("any(A,b).\n", sym("any", 2));
        assert_eq!(facts.len(), Universe::standard().constants().len() + 1);
        assert!(facts.contains("any(b,b)"));
    }

    #[test]
    fn unresolved_symbols_are_reported() {
        let p = program("f(A) :- g(A),head(A,B).\n");
        let err = restricted_model(&p, &Universe::standard(), &BTreeSet::new()).unwrap_err();
        assert!(matches!(err, EvalError::Unresolved(s) if s == vec![sym("g", 1)]));
    }

    #[test]
    fn transitive_closure_trace_grows_monotonically() {
        let text = "e(a,b).\ne(b,c).\ne(c,d).\nt(A,B) :- e(A,B).\nt(A,C) :- e(A,B),t(B,C).\n";
        let p = program(text);
        let m = restricted_model(&p, &Universe::standard(), &BTreeSet::from([sym("t", 2)])).unwrap();
        assert_eq!(m.facts.len(), 6);
        assert!(m.trace.windows(2).all(|w| w[0] <= w[1]));
    }
}
