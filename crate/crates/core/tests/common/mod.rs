#![allow(dead_code)]

use std::path::PathBuf;

use horef::ast::Program;
use horef::compressor::CopModel;
use horef::parser::{parse_program, ParseOptions};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn parse(text: &str) -> Program {
    parse_program(text, &ParseOptions::default())
        .unwrap_or_else(|e| panic!("{e}\n{text}"))
        .value
}

pub fn parse_first_order(text: &str) -> Program {
    parse_program(text, &ParseOptions::first_order())
        .unwrap_or_else(|e| panic!("{e}\n{text}"))
        .value
}

pub const UNARY_INT: &[&str] = &["zero", "one", "even", "odd", "positive"];
pub const BINARY_INT: &[&str] = &["increment", "decrement", "ord", "bin", "cube"];

fn member(name: &str, test: &str) -> String {
    format!("{name}(A) :- head(A,B),{test}(B).\n{name}(A) :- tail(A,B),{name}(B).\n")
}

fn map(name: &str, f: &str, rng: &mut impl Rng) -> String {
    let step = if rng.gen_bool(0.5) {
        format!("{name}(A,B) :- head(A,C),tail(A,D),head(B,E),tail(B,F),{f}(C,E),{name}(D,F).\n")
    } else {
        format!("{name}(A,B) :- head(A,D),tail(A,F),head(B,C),tail(B,E),{f}(D,C),{name}(F,E).\n")
    };
    format!("{name}(A,B) :- empty(A),empty(B).\n{step}")
}

fn all(name: &str, test: &str) -> String {
    format!("{name}(A) :- empty(A).\n{name}(A) :- head(A,B),tail(A,C),{test}(B),{name}(C).\n")
}

fn filter(name: &str, keep: &str, drop: &str) -> String {
    format!(
        "{name}(A,B) :- empty(A),empty(B).\n\
         {name}(A,B) :- head(A,C),tail(A,D),{keep}(C),{name}(D,E),head(B,C),tail(B,E).\n\
         {name}(A,B) :- head(A,C),tail(A,D),{drop}(C),{name}(D,B).\n"
    )
}

fn fold(name: &str, base: &str, combine: &str) -> String {
    format!(
        "{name}(A,B) :- empty(A),{base}(B).\n\
         {name}(A,B) :- head(A,C),tail(A,D),{name}(D,E),{combine}(C,E,B).\n"
    )
}

fn chain(name: &str, f: &str, g: &str) -> String {
    format!("{name}(A,B) :- {f}(A,C),{g}(C,B).\n")
}

fn pick<'a>(rng: &mut impl Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty")
}

/// A random first-order program of `n` definitions over the standard
/// background predicates. Definitions follow list-processing shapes so that
/// several of them share abstractions.
pub fn random_program_text(rng: &mut impl Rng, n: usize) -> String {
    let mut text = String::new();
    let mut unary_list_defs: Vec<String> = Vec::new();
    for i in 0..n {
        let name = format!("d{i}");
        let shape = rng.gen_range(0..7);
        let def = match shape {
            0 => member(&name, pick(rng, UNARY_INT)),
            1 => map(&name, pick(rng, BINARY_INT), rng),
            2 => all(&name, pick(rng, UNARY_INT)),
            3 => {
                let keep = pick(rng, UNARY_INT);
                let drop = pick(rng, UNARY_INT);
                filter(&name, keep, drop)
            }
            4 => fold(&name, pick(rng, &["zero", "one"]), "sum"),
            5 => chain(&name, pick(rng, BINARY_INT), pick(rng, BINARY_INT)),
            _ if unary_list_defs.len() >= 2 => {
                let mut callees = unary_list_defs.clone();
                callees.shuffle(rng);
                format!("{name}(A) :- {}(A),{}(A).\n", callees[0], callees[1])
            }
            _ => member(&name, pick(rng, UNARY_INT)),
        };
        if matches!(shape, 0 | 2) || (shape >= 6 && unary_list_defs.len() < 2) {
            unary_list_defs.push(name.clone());
        }
        text.push_str(&def);
    }
    text
}

pub fn random_program(rng: &mut impl Rng, n: usize) -> Program {
    parse_first_order(&random_program_text(rng, n))
}

/// Repeats list-processing shapes over `families` fresh symbol families. Each
/// family `k` gets its own head symbol and its own background symbol `bk<k>`.
pub fn scaled_program_text(families: usize) -> String {
    let mut text = String::new();
    for k in 0..families {
        let name = format!("fam{k}");
        let bk = format!("bk{k}");
        let def = match k % 5 {
            0 => member(&name, &bk),
            1 => format!(
                "{name}(A,B) :- empty(A),empty(B).\n\
                 {name}(A,B) :- head(A,C),tail(A,D),head(B,E),tail(B,F),{bk}(C,E),{name}(D,F).\n"
            ),
            2 => all(&name, &bk),
            3 => filter(&name, &bk, "zero"),
            _ => fold(&name, "zero", &bk),
        };
        text.push_str(&def);
    }
    text
}

/// Minimum objective over every feasible assignment, by dynamic programming
/// over definitions with the set of used abstractions as state.
pub fn exhaustive_optimum(model: &CopModel) -> u64 {
    let n_abs = model.abstractions.len();
    assert!(n_abs <= 16, "oracle limited to small pools");
    let w = model.weights;
    let mut best: Vec<Option<u64>> = vec![None; 1 << n_abs];
    best[0] = Some(0);
    for (d, def) in model.definitions.iter().enumerate() {
        let mut next: Vec<Option<u64>> = vec![None; 1 << n_abs];
        let mut relax = |mask: usize, cost: u64| {
            if next[mask].is_none_or(|c| cost < c) {
                next[mask] = Some(cost);
            }
        };
        for (mask, cost) in best.iter().enumerate() {
            let Some(cost) = *cost else { continue };
            relax(mask, cost + w.unabstracted * def.size);
            for (a, entry) in model.abstractions.iter().enumerate() {
                if entry.definitions.contains(&d) {
                    relax(mask | (1 << a), cost + w.refactored * 2);
                }
            }
        }
        best = next;
    }
    best.iter()
        .enumerate()
        .filter_map(|(mask, cost)| {
            let cost = (*cost)?;
            let selected: u64 = (0..n_abs)
                .filter(|a| mask & (1 << a) != 0)
                .map(|a| {
                    let e = &model.abstractions[a];
                    w.abstraction * e.size + w.penalty * e.ho_vars
                })
                .sum();
            Some(cost + selected)
        })
        .min()
        .expect("all-none is feasible")
}

/// Minimum objective by plain enumeration of every assignment.
pub fn enumerate_optimum(model: &CopModel) -> u64 {
    let options: Vec<Vec<Option<usize>>> = model
        .definitions
        .iter()
        .enumerate()
        .map(|(d, _)| {
            std::iter::once(None)
                .chain(
                    model
                        .abstractions
                        .iter()
                        .enumerate()
                        .filter(|(_, e)| e.definitions.contains(&d))
                        .map(|(a, _)| Some(a)),
                )
                .collect()
        })
        .collect();
    let mut best = u64::MAX;
    let mut choice = vec![0usize; options.len()];
    loop {
        let choices: Vec<Option<usize>> = choice.iter().zip(&options).map(|(&i, o)| o[i]).collect();
        best = best.min(model.breakdown(&choices).objective(&model.weights));
        let mut k = 0;
        loop {
            if k == choice.len() {
                return best;
            }
            choice[k] += 1;
            if choice[k] < options[k].len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

pub fn assignment_space(model: &CopModel) -> f64 {
    (0..model.definitions.len())
        .map(|d| 1.0 + model.abstractions.iter().filter(|e| e.definitions.contains(&d)).count() as f64)
        .product()
}
