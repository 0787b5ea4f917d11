use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use horef::parser::{parse_program, print_program, ParseOptions};
use horef::report::emit_report;
use horef::{refactor, RefactorConfig};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
}

fn horef(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_horef"))
        .args(args)
        .env("HOREF_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn without_timings(mut v: Value) -> Value {
    v["solve_millis"] = Value::Null;
    v["total_millis"] = Value::Null;
    v
}

#[test]
fn refactor_writes_program_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.pl");
    let report = dir.path().join("report.json");
    let o = horef(&[
        "refactor",
        path(&fixture("list_programs.pl")),
        "--out",
        path(&out),
        "--report",
        path(&report),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("memberzero(A) :- ho_0(A,zero).\n"));
    assert_eq!(text.lines().count(), 13);
    let r = read_json(&report);
    assert_eq!(r["input_size"], 65);
    assert_eq!(r["output_size"], 37);
    assert_eq!(r["objective_value"], 39);
    assert_eq!(r["verification"]["status"], "equivalent");
}

#[test]
fn refactor_is_deterministic_and_matches_library_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let mut programs = Vec::new();
    let mut reports = Vec::new();
    for i in 0..2 {
        let out = dir.path().join(format!("out{i}.pl"));
        let report = dir.path().join(format!("report{i}.json"));
        let o = horef(&[
            "refactor",
            path(&fixture("list_programs.pl")),
            "--out",
            path(&out),
            "--report",
            path(&report),
        ]);
        assert!(o.status.success());
        programs.push(std::fs::read(&out).unwrap());
        reports.push(without_timings(read_json(&report)));
    }
    assert_eq!(programs[0], programs[1]);
    assert_eq!(reports[0], reports[1]);

    let text = std::fs::read_to_string(fixture("list_programs.pl")).unwrap();
    let p = parse_program(&text, &ParseOptions::default()).unwrap().value;
    let lib = refactor(&p, &RefactorConfig::default()).unwrap();
    assert_eq!(print_program(&lib.program).into_bytes(), programs[0]);
    let lib_report: Value = serde_json::from_str(&emit_report(&lib.report)).unwrap();
    assert_eq!(without_timings(lib_report), reports[0]);
}

#[test]
fn penalty_free_weights_keep_the_selection() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let o = horef(&[
        "refactor",
        path(&fixture("list_programs.pl")),
        "--weights",
        "1,1,1,0",
        "--report",
        path(&report),
        "--size-optimum",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = read_json(&report);
    let names: Vec<&str> = r["selected_abstractions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["ho_0", "ho_4"]);
    assert_eq!(r["objective_value"], 37);
    assert_eq!(r["size_optimum"], 37);
}

#[test]
fn single_definition_passes_through() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("one.pl");
    std::fs::write(&input, "f(A) :- head(A,B),zero(B).\nf(A) :- tail(A,B),f(B).\n").unwrap();
    let report = dir.path().join("r.json");
    let o = horef(&["refactor", path(&input), "--report", path(&report)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), std::fs::read_to_string(&input).unwrap());
    let r = read_json(&report);
    assert_eq!(r["input_size"], r["output_size"]);
    assert_eq!(r["selected_abstractions"].as_array().unwrap().len(), 0);
}

#[test]
fn abstractions_writes_library() {
    let o = horef(&["abstractions", path(&fixture("list_programs.pl"))]);
    assert!(o.status.success());
    let library = stdout(&o);
    assert_eq!(library.lines().filter(|l| l.starts_with('%')).count(), 11);
    assert!(stderr(&o).contains("91 enumerated, 62 distinct, 11 retained"));

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.pl");
    std::fs::write(&empty, "").unwrap();
    let o = horef(&["abstractions", path(&empty)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "");

    let o = horef(&[
        "abstractions",
        path(&fixture("chain_rule.pl")),
        "--max-ho-vars",
        "2",
        "--keep-singletons",
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().filter(|l| !l.starts_with('%')).count(), 3);
}

#[test]
fn check_reports_equivalence_and_counterexamples() {
    let input = fixture("list_programs.pl");
    let o = horef(&["check", path(&input), path(&fixture("list_programs_refactored.pl"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "equivalent\n");

    let o = horef(&["check", path(&input), path(&input)]);
    assert!(o.status.success());

    let dir = tempfile::tempdir().unwrap();
    let wrong = dir.path().join("wrong.pl");
    let text = std::fs::read_to_string(fixture("list_programs_refactored.pl"))
        .unwrap()
        .replace("ho3(A,zero)", "ho3(A,one)");
    std::fs::write(&wrong, text).unwrap();
    let o = horef(&["check", path(&input), path(&wrong)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).starts_with("counterexample: memberzero("), "{}", stdout(&o));
}

#[test]
fn check_accepts_separate_library() {
    let dir = tempfile::tempdir().unwrap();
    let library = dir.path().join("lib.pl");
    std::fs::write(&library, "ho_0(A,P) :- head(A,B),P(B).\nho_0(A,P) :- tail(A,B),ho_0(B,P).\n").unwrap();
    let original = dir.path().join("p.pl");
    std::fs::write(
        &original,
        "mz(A) :- head(A,B),zero(B).\nmz(A) :- tail(A,B),mz(B).\nmo(A) :- head(A,B),one(B).\nmo(A) :- tail(A,B),mo(B).\n",
    )
    .unwrap();
    let refactored = dir.path().join("q.pl");
    std::fs::write(&refactored, "mz(A) :- ho_0(A,zero).\nmo(A) :- ho_0(A,one).\n").unwrap();
    let o = horef(&["check", path(&original), path(&refactored), "--library", path(&library)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = horef(&[
        "check",
        path(&original),
        path(&refactored),
        "--library",
        path(&library),
        "--targets",
        "mz/1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.pl");
    std::fs::write(&bad, "f(A) :- g(A).\nf(A,B) :- g(A).\n").unwrap();
    let o = horef(&["refactor", path(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.pl:2:1"), "{}", stderr(&o));

    let o = horef(&["refactor", path(&fixture("map_pair.pl"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("uppercase/2"));

    let o = horef(&["refactor", path(&dir.path().join("missing.pl"))]);
    assert_eq!(o.status.code(), Some(4));

    let o = horef(&["refactor", path(&fixture("list_programs.pl")), "--targets", "nothing"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn universe_file_and_no_verify() {
    let pair = fixture("map_pair.pl");
    let o = horef(&["refactor", path(&pair), "--no-verify"]);
    assert!(o.status.success());
    let o = horef(&["refactor", path(&pair), "--universe", path(&fixture("map_pair_universe.toml"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("f(A,B) :- ho_0(A,B,uppercase)."), "{}", stdout(&o));
}
