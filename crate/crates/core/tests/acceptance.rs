mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use horef::abstractor::{build_candidate_pool, canonical_key, enumerate_abstractions, programs_alpha_equivalent, PoolOptions};
use horef::ast::Size;
use horef::compressor::{build_cop, solve, Weights};
use horef::evaluator::Universe;
use horef::parser::{parse_abstraction_library, ParseOptions};
use horef::report::Verification;
use horef::{refactor, RefactorConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

const CRITERION_1_LIMIT: Duration = Duration::from_secs(5);
const CRITERION_2_LIMIT: Duration = Duration::from_secs(5);
const CRITERION_4_LIMIT: Duration = Duration::from_secs(60);
const CRITERION_5_LIMIT: Duration = Duration::from_secs(300);
const CRITERION_8_LIMIT: Duration = Duration::from_secs(1200);
const ORACLE_INSTANCES: usize = 20;
const SEMANTICS_INSTANCES: usize = 50;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<f64, String> {
    let secs = start.elapsed().as_secs_f64();
    ensure(start.elapsed() < limit, || format!("took {secs:.2}s, limit {}s", limit.as_secs()))?;
    Ok(secs)
}

fn library_keys(name: &str) -> BTreeSet<String> {
    parse_abstraction_library(&fixture(name), &ParseOptions::default())
        .unwrap()
        .iter()
        .map(|a| a.canonical_key().to_string())
        .collect()
}

fn worked_example() -> Outcome {
    let start = Instant::now();
    let p = parse(&fixture("list_programs.pl"));
    ensure(p.definitions().len() == 8, || format!("{} definitions", p.definitions().len()))?;
    ensure(p.size() == 65, || format!("input size {}", p.size()))?;

    let out = refactor(&p, &RefactorConfig::default()).map_err(|e| e.to_string())?;
    let r = &out.report;
    let candidates = parse_abstraction_library(&fixture("list_programs_candidates.pl"), &ParseOptions::default())
        .map_err(|e| e.to_string())?;
    let expected: BTreeSet<&str> = [0, 4].iter().map(|&i| candidates[i].canonical_key()).collect();
    let selected: BTreeSet<&str> = r.selected_abstractions.iter().map(|s| s.canonical_text.as_str()).collect();
    ensure(selected == expected, || format!("selected {selected:?}"))?;
    ensure(r.assignments["allnegative/1"].is_none(), || "allnegative was refactored".into())?;
    ensure(r.output_size == 37, || format!("output size {}", r.output_size))?;
    ensure(r.objective_value == 39, || format!("objective {}", r.objective_value))?;
    ensure(r.proved_optimal, || "optimality not proved".into())?;
    ensure(r.verification == Verification::Equivalent, || format!("{:?}", r.verification))?;
    let figure = parse(&fixture("list_programs_refactored.pl"));
    ensure(programs_alpha_equivalent(&out.program, &figure), || {
        format!("output differs from expected program:\n{}", out.program)
    })?;
    let secs = within(start, CRITERION_1_LIMIT)?;
    Ok(format!(
        "8 definitions, size 65 -> 37, objective 39, member-like and map-like abstractions selected, verified equivalent, {secs:.2}s"
    ))
}

fn candidate_pool() -> Outcome {
    let start = Instant::now();
    let p = parse(&fixture("list_programs.pl"));
    let pool = build_candidate_pool(&p, PoolOptions::default());
    let keys: BTreeSet<String> = pool.abstractions.iter().map(|a| a.canonical_key().to_string()).collect();
    let expected = library_keys("list_programs_candidates.pl");
    ensure(expected.len() == 11, || format!("fixture has {} candidates", expected.len()))?;
    ensure(keys == expected, || {
        let missing: Vec<_> = expected.difference(&keys).collect();
        let extra: Vec<_> = keys.difference(&expected).collect();
        format!("missing {missing:?}, extra {extra:?}")
    })?;
    ensure(pool.stats.distinct == 62, || format!("distinct before filter {}", pool.stats.distinct))?;
    let secs = within(start, CRITERION_2_LIMIT)?;
    Ok(format!(
        "pool of {} equals the 11 expected candidates; before filter {} distinct (target 62), {} enumerated before merging, {secs:.2}s",
        pool.len(),
        pool.stats.distinct,
        pool.stats.enumerated
    ))
}

fn small_examples() -> Outcome {
    let mut counts = Vec::new();
    for (program, library) in [
        ("chain_rule.pl", "chain_rule_abstractions.pl"),
        ("last_element.pl", "last_element_abstractions.pl"),
    ] {
        let p = parse(&fixture(program));
        let d = &p.definitions()[0];
        let keys: Vec<String> = enumerate_abstractions(d, 2)
            .into_iter()
            .map(|(a, _)| a.canonical_key().to_string())
            .collect();
        let got: BTreeSet<String> = keys.iter().cloned().collect();
        let expected = library_keys(library);
        ensure(keys.len() == 3 && got == expected, || format!("{program}: got {keys:?}"))?;
        counts.push(keys.len());
    }
    Ok(format!("non-recursive rule -> {} abstractions, recursive definition -> {} abstractions, exact", counts[0], counts[1]))
}

fn optimality_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut checked = 0;
    let mut attempts = 0;
    let mut largest_pool = 0;
    let mut cross_checked = 0;
    while checked < ORACLE_INSTANCES {
        attempts += 1;
        ensure(attempts < 10_000, || "could not generate enough instances".into())?;
        let n = rng.gen_range(3..=10);
        let p = random_program(&mut rng, n);
        let options = PoolOptions {
            max_ho_vars: rng.gen_range(1..=3),
            keep_singletons: false,
        };
        let pool = build_candidate_pool(&p, options);
        if pool.len() < 2 || pool.len() > 12 || p.definitions().len() > 10 {
            continue;
        }
        let weights = if checked % 2 == 0 {
            Weights::default()
        } else {
            Weights::new(rng.gen_range(1..=3), rng.gen_range(0..=3), rng.gen_range(0..=3), rng.gen_range(0..=3))
        };
        let model = build_cop(&p, &pool, weights).map_err(|e| e.to_string())?;
        let solved = solve(&model, None).assignment;
        model.check(&solved).map_err(|e| e.to_string())?;
        let oracle = exhaustive_optimum(&model);
        ensure(solved.objective_value == oracle, || {
            format!("instance {checked}: solver {} vs oracle {oracle}\n{p}", solved.objective_value)
        })?;
        ensure(solved.proved_optimal, || "optimality not proved".into())?;
        if assignment_space(&model) <= 1e6 {
            let plain = enumerate_optimum(&model);
            ensure(plain == oracle, || format!("oracles disagree: {plain} vs {oracle}"))?;
            cross_checked += 1;
        }
        largest_pool = largest_pool.max(pool.len());
        checked += 1;
    }
    let secs = within(start, CRITERION_4_LIMIT)?;
    Ok(format!(
        "{checked}/{checked} instances match exhaustive optimum (largest pool {largest_pool}, {cross_checked} also by plain enumeration), {secs:.2}s"
    ))
}

fn semantics_and_safety() -> (Outcome, Outcome) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    let mut verified = 0;
    let mut safety = Ok(());
    let mut empty_pools = 0;
    let mut instances = 0;
    let universe = Universe::standard();
    for i in 0..SEMANTICS_INSTANCES {
        let n = rng.gen_range(1..=8);
        let p = random_program(&mut rng, n);
        for weights in [Weights::default(), Weights::new(1, 1, 1, 0)] {
            let config = RefactorConfig {
                weights,
                universe: Some(universe.clone()),
                ..RefactorConfig::default()
            };
            let out = match refactor(&p, &config) {
                Ok(o) => o,
                Err(e) => return (Err(format!("instance {i}: {e}")), Err("not evaluated".into())),
            };
            if out.report.verification != Verification::Equivalent {
                return (
                    Err(format!("instance {i}: {:?}\n{p}\n{}", out.report.verification, out.program)),
                    Err("not evaluated".into()),
                );
            }
            verified += 1;
            if weights == Weights::default() {
                instances += 1;
                if out.report.output_size > out.report.input_size {
                    safety = Err(format!("instance {i}: size grew {} -> {}", out.report.input_size, out.report.output_size));
                }
                if out.pool.is_empty() {
                    empty_pools += 1;
                    if out.solution.assignment.choices.iter().any(Option::is_some) || out.program != p {
                        safety = Err(format!("instance {i}: empty pool but program changed"));
                    }
                }
            }
        }
    }
    let semantics = within(start, CRITERION_5_LIMIT)
        .map(|secs| format!("{verified} optima on {SEMANTICS_INSTANCES} programs, zero counterexamples, {secs:.2}s"));
    let safety = safety.and_then(|_| {
        ensure(empty_pools > 0, || "no instance had an empty pool".into())?;
        Ok(format!("size never grew on {instances} instances; {empty_pools} empty pools returned all-none"))
    });
    (semantics, safety)
}

fn map_pair_example() -> Outcome {
    let p = parse(&fixture("map_pair.pl"));
    ensure(p.size() == 20, || format!("input size {}", p.size()))?;
    let universe = Universe::from_toml(&fixture("map_pair_universe.toml")).map_err(|e| e.to_string())?;
    let config = RefactorConfig {
        universe: Some(universe),
        ..RefactorConfig::default()
    };
    let out = refactor(&p, &config).map_err(|e| e.to_string())?;
    let r = &out.report;
    let map_like = parse(
        "ho(A,B,P) :- empty(A),empty(B).\n\
         ho(A,B,P) :- head(A,C),tail(A,D),P(C,E),ho(D,F,P),head(B,E),tail(B,F).\n",
    );
    let expected = canonical_key(&map_like.definitions()[0]);
    ensure(r.selected_abstractions.len() == 1, || format!("{:?}", r.selected_abstractions))?;
    let a = &r.selected_abstractions[0];
    ensure(a.ho_vars == 1 && a.canonical_text == expected, || format!("selected {}", a.canonical_text))?;
    ensure(r.output_size == 14, || format!("output size {}", r.output_size))?;
    ensure(r.verification == Verification::Equivalent, || format!("{:?}", r.verification))?;
    Ok(format!("map-like abstraction with 1 higher-order variable, size 20 -> {}, verified", r.output_size))
}

fn scalability() -> Outcome {
    let start = Instant::now();
    let p = parse_first_order(&scaled_program_text(30));
    let config = RefactorConfig {
        timeout: Some(CRITERION_8_LIMIT),
        universe: None,
        ..RefactorConfig::default()
    };
    let out = refactor(&p, &config).map_err(|e| e.to_string())?;
    let r = &out.report;
    ensure(r.proved_optimal, || "optimality not proved".into())?;
    let inc = &out.solution.stats.incumbents;
    ensure(inc.windows(2).all(|w| w[0] > w[1]), || format!("incumbents {inc:?}"))?;
    let secs = within(start, CRITERION_8_LIMIT)?;
    Ok(format!(
        "{} literals in {} definitions, pool {}, size -> {}, proved optimal after {} nodes, {} strictly decreasing incumbents, {secs:.2}s",
        r.input_size,
        p.definitions().len(),
        r.candidates_after_filter,
        r.output_size,
        r.solver_nodes,
        inc.len()
    ))
}

fn main() -> ExitCode {
    let (semantics, safety) = semantics_and_safety();
    let results: Vec<(u32, &str, Outcome)> = vec![
        (1, "worked example reproduction", worked_example()),
        (2, "candidate pool reproduction", candidate_pool()),
        (3, "abstraction enumeration examples", small_examples()),
        (4, "optimality oracle", optimality_oracle()),
        (5, "semantics preservation", semantics),
        (6, "compression safety", safety),
        (7, "map pair example", map_pair_example()),
        (8, "scalability smoke", scalability()),
    ];
    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("criterion {n} ({name}): PASS: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
