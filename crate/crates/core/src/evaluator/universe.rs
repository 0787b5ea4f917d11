//! Finite universes: ground constants plus background relations.
//!
//! Lists are ground constants written `[]`, `[0,1]`, ...; integers are written
//! in decimal. The standard background predicates are generated over the
//! configured list and integer domains:
//!
//! | predicate | meaning |
//! |---|---|
//! | `head(L,X)`, `tail(L,T)`, `empty(L)` | list destructuring |
//! | `zero`, `one`, `even`, `odd`, `positive`, `negative` | tests on integers |
//! | `increment`, `decrement` | `Y = X + 1`, `Y = X - 1` |
//! | `cube(X,Y)` | `Y = X^3` |
//! | `ord(X,Y)` | `Y = 2X` |
//! | `bin(X,Y)` | `Y = X mod 2` |
//! | `sum(X,Y,Z)` | `Z = X + Y` |
//! | `geq(X,Y)`, `eq(X,Y)` | comparisons |
//!
//! Functional relations only contain tuples whose result lies in the integer
//! domain.

use std::collections::{BTreeMap, BTreeSet};

use serde::Deserialize;
use thiserror::Error;

use crate::ast::{is_constant_name, PredicateSymbol};

#[derive(Debug, Error)]
pub enum UniverseError {
    #[error("invalid universe file: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("unknown builtin generator `{0}`")]
    UnknownGenerator(String),
    #[error("relation `{name}` has tuples of arities {first} and {second}")]
    MixedArity { name: String, first: usize, second: usize },
    #[error("invalid relation name `{0}`")]
    InvalidName(String),
    #[error("invalid constant `{0}`")]
    InvalidConstant(String),
    #[error("integer range {min}..{max} is empty")]
    EmptyRange { min: i64, max: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ListDomain {
    pub elements: Vec<i64>,
    pub max_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntRange {
    pub min: i64,
    pub max: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationConfig {
    pub name: String,
    pub tuples: Vec<Vec<String>>,
}

/// Contents of a universe description file (TOML).
///
/// ```toml
/// constants = ["alice", "bob"]
/// builtins = ["head", "tail", "empty", "zero"]   # omit for all of them
///
/// [lists]
/// elements = [0, 1, 2]
/// max_len = 4
///
/// [ints]
/// min = 0
/// max = 5
///
/// [[relations]]
/// name = "parent"
/// tuples = [["alice", "bob"]]
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniverseConfig {
    pub lists: Option<ListDomain>,
    pub ints: Option<IntRange>,
    #[serde(default)]
    pub constants: Vec<String>,
    pub builtins: Option<Vec<String>>,
    #[serde(default)]
    pub relations: Vec<RelationConfig>,
}

impl UniverseConfig {
    /// Lists of length at most 4 over {0,1,2} and integers 0..=5.
    pub fn standard() -> Self {
        Self {
            lists: Some(ListDomain {
                elements: vec![0, 1, 2],
                max_len: 4,
            }),
            ints: Some(IntRange { min: 0, max: 5 }),
            ..Self::default()
        }
    }
}

pub const STANDARD_BUILTINS: &[(&str, usize)] = &[
    ("head", 2),
    ("tail", 2),
    ("empty", 1),
    ("zero", 1),
    ("one", 1),
    ("even", 1),
    ("odd", 1),
    ("positive", 1),
    ("negative", 1),
    ("increment", 2),
    ("decrement", 2),
    ("sum", 3),
    ("geq", 2),
    ("eq", 2),
    ("ord", 2),
    ("bin", 2),
    ("cube", 2),
];

pub type Tuple = Vec<String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Universe {
    constants: BTreeSet<String>,
    relations: BTreeMap<PredicateSymbol, BTreeSet<Tuple>>,
}

impl Universe {
    pub fn standard() -> Self {
        Self::from_config(&UniverseConfig::standard()).expect("standard config is valid")
    }

    pub fn from_toml(text: &str) -> Result<Self, UniverseError> {
        let config: UniverseConfig = toml::from_str(text)?;
        Self::from_config(&config)
    }

    pub fn from_config(config: &UniverseConfig) -> Result<Self, UniverseError> {
        let mut ints: BTreeSet<i64> = BTreeSet::new();
        if let Some(r) = config.ints {
            if r.min > r.max {
                return Err(UniverseError::EmptyRange { min: r.min, max: r.max });
            }
            ints.extend(r.min..=r.max);
        }
        let mut lists: Vec<Vec<i64>> = Vec::new();
        if let Some(l) = &config.lists {
            ints.extend(l.elements.iter().copied());
            lists = all_lists(&l.elements, l.max_len);
        }

        let mut constants: BTreeSet<String> = ints.iter().map(i64::to_string).collect();
        constants.extend(lists.iter().map(|l| list_name(l)));
        for c in &config.constants {
            if !is_constant_name(c) {
                return Err(UniverseError::InvalidConstant(c.clone()));
            }
            constants.insert(c.clone());
        }

        let mut relations: BTreeMap<PredicateSymbol, BTreeSet<Tuple>> = BTreeMap::new();
        let names: Vec<&str> = match &config.builtins {
            Some(names) => names.iter().map(String::as_str).collect(),
            None => STANDARD_BUILTINS.iter().map(|(n, _)| *n).collect(),
        };
        for name in names {
            let (_, arity) = STANDARD_BUILTINS
                .iter()
                .find(|(n, _)| *n == name)
                .ok_or_else(|| UniverseError::UnknownGenerator(name.to_string()))?;
            let tuples = generate(name, &ints, &lists);
            let symbol = PredicateSymbol::new(name, *arity).expect("builtin names are valid");
            relations.insert(symbol, tuples);
        }

        for rel in &config.relations {
            let Some(first) = rel.tuples.first() else { continue };
            let arity = first.len();
            if let Some(t) = rel.tuples.iter().find(|t| t.len() != arity) {
                return Err(UniverseError::MixedArity {
                    name: rel.name.clone(),
                    first: arity,
                    second: t.len(),
                });
            }
            let symbol = PredicateSymbol::new(rel.name.clone(), arity)
                .map_err(|_| UniverseError::InvalidName(rel.name.clone()))?;
            for t in &rel.tuples {
                for c in t {
                    if !is_constant_name(c) && !c.starts_with('[') {
                        return Err(UniverseError::InvalidConstant(c.clone()));
                    }
                    constants.insert(c.clone());
                }
            }
            relations
                .entry(symbol)
                .or_default()
                .extend(rel.tuples.iter().cloned());
        }
        Ok(Self { constants, relations })
    }

    pub fn constants(&self) -> &BTreeSet<String> {
        &self.constants
    }

    pub fn relations(&self) -> &BTreeMap<PredicateSymbol, BTreeSet<Tuple>> {
        &self.relations
    }

    pub fn relation(&self, symbol: &PredicateSymbol) -> Option<&BTreeSet<Tuple>> {
        self.relations.get(symbol)
    }
}

pub fn list_name(elements: &[i64]) -> String {
    let parts: Vec<String> = elements.iter().map(i64::to_string).collect();
    format!("[{}]", parts.join(","))
}

fn all_lists(elements: &[i64], max_len: usize) -> Vec<Vec<i64>> {
    let elements: Vec<i64> = elements.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * elements.len());
        for l in &frontier {
            for &e in &elements {
                let mut longer = l.clone();
                longer.push(e);
                next.push(longer);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn generate(name: &str, ints: &BTreeSet<i64>, lists: &[Vec<i64>]) -> BTreeSet<Tuple> {
    let s = |x: i64| x.to_string();
    let unary = |f: &dyn Fn(i64) -> bool| -> BTreeSet<Tuple> {
        ints.iter().copied().filter(|&x| f(x)).map(|x| vec![s(x)]).collect()
    };
    let function = |f: &dyn Fn(i64) -> Option<i64>| -> BTreeSet<Tuple> {
        ints.iter()
            .filter_map(|&x| f(x).filter(|y| ints.contains(y)).map(|y| vec![s(x), s(y)]))
            .collect()
    };
    let binary = |f: &dyn Fn(i64, i64) -> bool| -> BTreeSet<Tuple> {
        ints.iter()
            .flat_map(|&x| ints.iter().map(move |&y| (x, y)))
            .filter(|&(x, y)| f(x, y))
            .map(|(x, y)| vec![s(x), s(y)])
            .collect()
    };
    match name {
        "head" => lists
            .iter()
            .filter_map(|l| l.first().map(|h| vec![list_name(l), s(*h)]))
            .collect(),
        "tail" => lists
            .iter()
            .filter(|l| !l.is_empty())
            .map(|l| vec![list_name(l), list_name(&l[1..])])
            .collect(),
        "empty" => lists.iter().filter(|l| l.is_empty()).map(|l| vec![list_name(l)]).collect(),
        "zero" => unary(&|x| x == 0),
        "one" => unary(&|x| x == 1),
        "even" => unary(&|x| x % 2 == 0),
        "odd" => unary(&|x| x % 2 != 0),
        "positive" => unary(&|x| x > 0),
        "negative" => unary(&|x| x < 0),
        "increment" => function(&|x| x.checked_add(1)),
        "decrement" => function(&|x| x.checked_sub(1)),
        "cube" => function(&|x| x.checked_pow(3)),
        "ord" => function(&|x| x.checked_mul(2)),
        "bin" => function(&|x| Some(x.rem_euclid(2))),
        "geq" => binary(&|x, y| x >= y),
        "eq" => binary(&|x, y| x == y),
        "sum" => ints
            .iter()
            .flat_map(|&x| ints.iter().map(move |&y| (x, y)))
            .filter_map(|(x, y)| {
                let z = x.checked_add(y)?;
                ints.contains(&z).then(|| vec![s(x), s(y), s(z)])
            })
            .collect(),
        other => unreachable!("generator table covers `{other}`"),
    }
}
