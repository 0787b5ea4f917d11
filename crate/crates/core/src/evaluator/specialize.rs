//! Turns a higher-order program into an equivalent first-order one by
//! instantiating each abstraction call with its concrete predicate arguments.

use std::collections::{BTreeSet, HashMap, VecDeque};

use super::EvalError;
use crate::abstractor::Abstraction;
use crate::ast::{Atom, Callee, Clause, Definition, PredicateSymbol, Program, Term, Variable};

struct Template<'a> {
    definition: &'a Definition,
    ho_positions: Vec<usize>,
}

struct Specializer<'a> {
    templates: HashMap<PredicateSymbol, Template<'a>>,
    taken: BTreeSet<String>,
    memo: HashMap<(PredicateSymbol, Vec<PredicateSymbol>), PredicateSymbol>,
    queue: VecDeque<(PredicateSymbol, Vec<PredicateSymbol>, PredicateSymbol)>,
}

/// Replaces every call `a(.., p, ..)` of an abstraction by a call to a
/// first-order copy `a__p(..)`. Abstractions come from the program's own
/// higher-order definitions and from `library`. First-order input is returned
/// unchanged.
pub fn specialize(q: &Program, library: &[Abstraction]) -> Result<Program, EvalError> {
    if q.is_first_order() {
        return Ok(q.clone());
    }
    let mut templates = HashMap::new();
    for d in q.definitions().iter().filter(|d| d.is_higher_order()) {
        if let Some(positions) = head_ho_positions(d) {
            templates.insert(
                d.symbol().clone(),
                Template {
                    definition: d,
                    ho_positions: positions,
                },
            );
        }
    }
    for a in library {
        templates.entry(a.name().clone()).or_insert_with(|| Template {
            definition: a.definition(),
            ho_positions: a.ho_positions().to_vec(),
        });
    }
    let mut taken: BTreeSet<String> = q.symbols().iter().map(|s| s.name().to_string()).collect();
    taken.extend(templates.keys().map(|s| s.name().to_string()));
    let mut s = Specializer {
        templates,
        taken,
        memo: HashMap::new(),
        queue: VecDeque::new(),
    };

    let mut out = Vec::new();
    let empty = HashMap::new();
    for d in q.definitions() {
        if s.templates.contains_key(d.symbol()) {
            continue;
        }
        let clauses = d
            .clauses()
            .iter()
            .map(|c| {
                let body = c
                    .body()
                    .iter()
                    .map(|a| s.rewrite(a, &empty, d.symbol()))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Clause::new(c.head().clone(), body).expect("predicate head"))
            })
            .collect::<Result<Vec<_>, EvalError>>()?;
        out.push(Definition::new(d.symbol().clone(), clauses).expect("same head"));
    }
    while let Some((name, bindings, target)) = s.queue.pop_front() {
        out.push(s.instantiate(&name, &bindings, &target)?);
    }
    let targets = q.targets().clone();
    let program = Program::new(out).expect("fresh names");
    program
        .with_targets(targets)
        .map_err(|e| EvalError::Specialization(e.to_string()))
}

fn head_ho_positions(d: &Definition) -> Option<Vec<usize>> {
    let head = d.clauses().first()?.head();
    let positions: Vec<usize> = head
        .args()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.is_higher_order())
        .map(|(i, _)| i)
        .collect();
    (!positions.is_empty()).then_some(positions)
}

impl<'a> Specializer<'a> {
    fn target(&mut self, name: &PredicateSymbol, bindings: Vec<PredicateSymbol>) -> PredicateSymbol {
        let key = (name.clone(), bindings);
        if let Some(t) = self.memo.get(&key) {
            return t.clone();
        }
        let mut base = name.name().to_string();
        for b in &key.1 {
            base.push_str("__");
            base.push_str(b.name());
        }
        let mut candidate = base.clone();
        let mut n = 1;
        while self.taken.contains(&candidate) {
            candidate = format!("{base}_{n}");
            n += 1;
        }
        self.taken.insert(candidate.clone());
        let arity = name.arity() - key.1.len();
        let target = PredicateSymbol::new(candidate, arity).expect("mangled names are valid");
        self.queue.push_back((key.0.clone(), key.1.clone(), target.clone()));
        self.memo.insert(key, target.clone());
        target
    }

    fn rewrite(
        &mut self,
        atom: &Atom,
        env: &HashMap<Variable, PredicateSymbol>,
        within: &PredicateSymbol,
    ) -> Result<Atom, EvalError> {
        let resolve = |v: &Variable| {
            env.get(v).cloned().ok_or_else(|| EvalError::UnboundHigherOrder {
                definition: within.clone(),
                variable: v.name().to_string(),
            })
        };
        let callee = match atom.callee() {
            Callee::Var(v) => {
                let p = resolve(v)?;
                if p.arity() != atom.args().len() {
                    return Err(EvalError::Specialization(format!(
                        "`{p}` bound to `{v}` is called with {} arguments in `{within}`",
                        atom.args().len()
                    )));
                }
                p
            }
            Callee::Pred(p) => p.clone(),
        };
        let ho_positions = self.templates.get(&callee).map(|t| t.ho_positions.clone());
        let Some(positions) = ho_positions else {
            if let Some(t) = atom.args().iter().find(|t| t.is_higher_order()) {
                return Err(EvalError::Specialization(format!(
                    "`{t}` passed to first-order predicate `{callee}` in `{within}`"
                )));
            }
            return Ok(Atom::new(Callee::Pred(callee), atom.args().to_vec()).expect("arity kept"));
        };
        let mut bindings = Vec::with_capacity(positions.len());
        let mut args = Vec::new();
        for (i, t) in atom.args().iter().enumerate() {
            if positions.contains(&i) {
                bindings.push(match t {
                    Term::PredRef(p) => p.clone(),
                    Term::Var(v) => resolve(v)?,
                    Term::Const(c) => {
                        return Err(EvalError::Specialization(format!(
                            "constant `{c}` passed to a higher-order argument of `{callee}`"
                        )))
                    }
                });
            } else {
                args.push(t.clone());
            }
        }
        let target = self.target(&callee, bindings);
        Ok(Atom::new(Callee::Pred(target), args).expect("arity computed"))
    }

    fn instantiate(
        &mut self,
        name: &PredicateSymbol,
        bindings: &[PredicateSymbol],
        target: &PredicateSymbol,
    ) -> Result<Definition, EvalError> {
        let template = &self.templates[name];
        let definition = template.definition;
        let positions = template.ho_positions.clone();
        let mut clauses = Vec::new();
        for c in definition.clauses() {
            let mut env = HashMap::new();
            let mut head_args = Vec::new();
            for (i, t) in c.head().args().iter().enumerate() {
                if let Some(k) = positions.iter().position(|&p| p == i) {
                    if let Term::Var(v) = t {
                        env.insert(v.clone(), bindings[k].clone());
                    }
                } else {
                    head_args.push(t.clone());
                }
            }
            let head = Atom::new(Callee::Pred(target.clone()), head_args).expect("arity computed");
            let body = c
                .body()
                .iter()
                .map(|a| self.rewrite(a, &env, name))
                .collect::<Result<Vec<_>, _>>()?;
            clauses.push(Clause::new(head, body).expect("predicate head"));
        }
        Ok(Definition::new(target.clone(), clauses).expect("same head"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::{parse_program, ParseOptions};

    fn program(text: &str) -> Program {
        parse_program(text, &ParseOptions::default()).unwrap().value
    }

    #[test]
    fn first_order_programs_are_unchanged() {
        let p = program("f(A) :- g(A).\ng(a).\n");
        assert_eq!(specialize(&p, &[]).unwrap(), p);
    }

    #[test]
    fn calls_are_instantiated_once_per_binding() {
        let p = program(
            "ho(A,P) :- head(A,B),P(B).\nho(A,P) :- tail(A,B),ho(B,P).\n\
             mz(A) :- ho(A,zero).\nmo(A) :- ho(A,one).\nmz2(A) :- ho(A,zero).\n",
        );
        let q = specialize(&p, &[]).unwrap();
        assert!(q.is_first_order());
        let text = q.to_string();
        assert!(text.contains("mz(A) :- ho__zero(A)."), "{text}");
        assert!(text.contains("ho__zero(A) :- tail(A,B),ho__zero(B)."), "{text}");
        assert!(text.contains("ho__one(A) :- head(A,B),one(B)."), "{text}");
        assert_eq!(q.definitions().len(), 5);
        assert_eq!(q.targets(), p.targets());
    }

    #[test]
    fn nested_abstractions_pass_variables_through() {
        let p = program(
            "inner(A,P) :- P(A).\nouter(A,Q) :- inner(A,Q).\nf(A) :- outer(A,zero).\n",
        );
        let q = specialize(&p, &[]).unwrap();
        assert!(q.to_string().contains("inner__zero(A) :- zero(A)."));
    }

    #[test]
    fn unbound_variables_are_reported() {
        let p = program("ho(A,P) :- P(A).\nf(A) :- ho(A,P).\n");
        let err = specialize(&p, &[]).unwrap_err();
        assert!(matches!(err, EvalError::UnboundHigherOrder { .. }), "{err}");
    }
}
