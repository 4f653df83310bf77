use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ghosttrace"))
}

fn corpus(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("GHOSTTRACE_COLOR").output().expect("spawn ghosttrace")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, src: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, src).unwrap();
    p
}

#[test]
fn bisection_report_ends_at_the_constructor() {
    let out = run(&["run", path(&corpus("bisection_analog.mini"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    let last_block = err.lines().rfind(|l| !l.starts_with('\t')).unwrap();
    assert_eq!(last_block, "Field f2 set to null");
    assert!(err.trim_end().ends_with("at SolverImpl.<init>(bisection_analog.mini:13)"), "{err}");
}

#[test]
fn clean_program_prints_only_its_output() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "ok.mini", "class Main { void main() { print(40 + 2); } }\n");
    let out = run(&["run", path(&f)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "42\n");
    assert!(out.stderr.is_empty());
}

#[test]
fn frontend_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "bad.mini", "class Main { void main() { print(x); } }\n");
    let out = run(&["run", path(&f)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).starts_with("error:"));
    let g = write(dir.path(), "syntax.mini", "class Main { void main() { print(1) } }\n");
    assert_eq!(run(&["transform", path(&g)]).status.code(), Some(2));
}

#[test]
fn runtime_failures_other_than_npe_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "div.mini", "class Main { void main() { int z = 0; print(1 / z); } }\n");
    assert_eq!(run(&["run", path(&f)]).status.code(), Some(3));
}

#[test]
fn json_report_lists_links_in_order() {
    let out = run(&["run", "--trace-format", "json", path(&corpus("lang_304.mini"))]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stderr(&out)).expect("json report");
    let kinds: Vec<&str> = v["links"].as_array().unwrap().iter().map(|l| l["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["literal", "assign", "deref"]);
    assert_eq!(v["symptom"]["variable"], "coll");
    assert!(v["display"].is_array());
}

#[test]
fn raw_flag_dumps_links() {
    let out = run(&["run", "--raw", path(&corpus("rrad.mini"))]);
    let err = stderr(&out);
    let raw: Vec<&str> = err.lines().skip_while(|l| *l != "raw causality trace:").skip(1).collect();
    assert_eq!(raw.len(), 5, "{err}");
    assert!(raw[0].contains("literal"));
    assert!(raw[4].contains("deref"));
}

#[test]
fn original_mode_gives_a_plain_report() {
    let out = run(&["run", "--original", path(&corpus("lang_304.mini"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.starts_with("Exception in thread \"main\" NullPointerException"));
    assert!(!err.contains("For variable"), "{err}");
}

#[test]
fn report_counts_one_assign_for_a_call_result() {
    let dir = tempfile::tempdir().unwrap();
    let src =
        "class Main {\n  Main foo() { return this; }\n  void main() {\n    Main o = this;\n    o = foo();\n  }\n}\n";
    let f = write(dir.path(), "assign.mini", src);
    let out = run(&["transform", "--report", path(&f)]);
    assert_eq!(out.status.code(), Some(0));
    let report = stderr(&out);
    let line = report.lines().find(|l| l.contains("nullAssign")).expect(&report);
    assert!(line.split_whitespace().any(|w| w == "1"), "{report}");
    assert!(stdout(&out).contains("o = nullAssign(foo(), \"o, assign.mini:5\");"), "{}", stdout(&out));
}

#[test]
fn transformed_output_is_refused_a_second_time() {
    let dir = tempfile::tempdir().unwrap();
    let out_file = dir.path().join("t.mini");
    let first = run(&["transform", path(&corpus("mckoi.mini")), "-o", path(&out_file)]);
    assert_eq!(first.status.code(), Some(0));
    let again = run(&["transform", path(&out_file)]);
    assert_eq!(again.status.code(), Some(2));
    // Running an instrumented file uses it as is.
    assert_eq!(run(&["run", path(&out_file)]).status.code(), Some(1));
}

#[test]
fn emitted_sources_and_events_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("out.mini");
    let events = dir.path().join("out.events");
    let out = run(&[
        "run",
        path(&corpus("freemarker_107.mini")),
        "--emit-transformed",
        path(&src),
        "--events",
        path(&events),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(fs::read_to_string(&src).unwrap().contains("nullAssign("));
    let log = fs::read_to_string(&events).unwrap();
    assert!(!log.contains("NullDetector#"));
    assert_eq!(log, fs::read_to_string(corpus("freemarker_107.events")).unwrap());
}

#[test]
fn corpus_files_check_equivalent() {
    for name in ["mckoi.mini", "math_290.mini", "callback.mini", "catch_continue.mini"] {
        let out = run(&["check", path(&corpus(name))]);
        assert_eq!(out.status.code(), Some(0), "{name}");
        assert_eq!(stdout(&out), "EQUIVALENT\n");
    }
}

#[test]
fn bypassed_null_check_is_reported_as_divergent() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["guard.mini", "guard_unrewritten.mini"] {
        fs::copy(fixture(name), dir.path().join(name)).unwrap();
    }
    let good = run(&["check", path(&dir.path().join("guard.mini"))]);
    assert_eq!(good.status.code(), Some(0));
    let bad = run(&["check", "--instrumented", path(&dir.path().join("guard_unrewritten.mini"))]);
    assert_eq!(bad.status.code(), Some(1));
    let text = stdout(&bad);
    assert!(text.starts_with("DIVERGENT at event"), "{text}");
    assert!(text.contains("original:") && text.contains("instrumented:"));
}

#[test]
fn bench_on_empty_dir_prints_a_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["bench", "--csv", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "program,orig_ms,instr_ms,ratio\n");
    let table = run(&["bench", path(dir.path())]);
    assert_eq!(stdout(&table).lines().count(), 1);
}

#[test]
fn bench_csv_has_one_row_per_program() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["lang_304.mini", "rrad.mini"] {
        fs::copy(corpus(name), dir.path().join(name)).unwrap();
    }
    let out = run(&["bench", "--csv", "--reps", "1", path(dir.path())]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("lang_304,"));
    for row in rows {
        let ratio: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(ratio.is_finite() && ratio > 0.0);
    }
}

#[test]
fn color_env_adds_escape_codes() {
    let out = bin().args(["run", path(&corpus("lang_304.mini"))]).env("GHOSTTRACE_COLOR", "1").output().unwrap();
    assert!(stderr(&out).contains('\u{1b}'));
    assert!(!stderr(&run(&["run", path(&corpus("lang_304.mini"))])).contains('\u{1b}'));
}
