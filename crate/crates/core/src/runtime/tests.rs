use super::*;
use crate::lang::load;
use crate::trace::LinkKind;
use crate::transform::transform_program;

fn both(src: &str) -> (RunResult, RunResult) {
    let p = load(src, "t.mini").unwrap();
    let (q, _) = transform_program(&p).unwrap();
    (interpret(&p, Mode::Original).unwrap(), interpret(&q, Mode::Instrumented).unwrap())
}

fn kinds(r: &RunResult) -> String {
    r.outcome.report().expect("npe").trace.kinds().iter().map(|k| k.letter()).collect()
}

#[test]
fn prints_and_returns() {
    let (o, i) = both("class A { int sq(int x) { return x * x; }\n void main() { print(sq(7)); } }");
    assert_eq!(o.output, vec!["49"]);
    assert_eq!(i.output, o.output);
    assert_eq!(o.outcome, Outcome::Normal("void".into()));
    assert_eq!(o.events.len(), 4);
}

#[test]
fn assigned_null_is_traced_to_its_literal() {
    let (o, i) = both(
        "class A { A f;\n void main() {\n A o = null;\n o = this.f;\n print(o.me()); } \n A me() { return this; } }",
    );
    assert!(o.outcome.is_npe());
    assert!(o.outcome.report().unwrap().trace.is_empty());
    assert!(i.outcome.is_npe());
    assert_eq!(kinds(&i).chars().last(), Some('D'));
}

#[test]
fn return_then_assign_then_deref() {
    let (_, i) = both(
        "class A {\n A get() {\n return null;\n }\n void main() {\n A o;\n o = get();\n print(o.same());\n }\n boolean same() { return true; } }",
    );
    assert_eq!(kinds(&i), "LRAD");
    let links = i.outcome.report().unwrap().trace.links().to_vec();
    assert_eq!(links[0].location.line, 3);
    assert_eq!(links[1].expr_signature.as_deref(), Some("A.get()"));
    assert_eq!(links[3].location.line, 8);
}

#[test]
fn division_by_zero_is_not_an_npe() {
    let (o, _) = both("class A { void main() { int z = 0; print(1 / z); } }");
    assert!(matches!(o.outcome, Outcome::OtherError(_)));
}

#[test]
fn runaway_loop_hits_step_limit() {
    let p = load("class A { void main() { while (true) { print(1); } } }", "t.mini").unwrap();
    let r = interpret_with(&p, Mode::Original, RunConfig { max_steps: 1000, max_depth: 16 }).unwrap();
    assert!(matches!(r.outcome, Outcome::OtherError(ref m) if m.contains("step")));
}

#[test]
fn caught_npe_lets_the_run_continue() {
    let (o, i) = both(
        "class A { A next;\n void main() {\n try { print(this.next.next); } catch (NullPointerException e) { print(5); }\n print(6); } }",
    );
    assert_eq!(o.output, vec!["5", "6"]);
    assert_eq!(i.output, o.output);
    assert_eq!(i.npe_reports.len(), 1);
}

#[test]
fn empty_box_gives_symptom_only_unbox() {
    let (_, i) = both(
        "extern IntBox peek() = new;\n class A { void main() { IntBox b = lib.peek(); int x = b + 1; print(x); } }",
    );
    let r = i.outcome.report().unwrap();
    assert!(r.is_symptom_only());
    assert_eq!(r.trace.kinds(), vec![LinkKind::Unbox]);
}

#[test]
fn ghosts_never_reach_externs() {
    let (_, i) = both(
        "extern boolean gone(Object o) = isnull;\n class A { void main() { Object o = null; print(lib.gone(o)); } }",
    );
    assert_eq!(i.ghost_leaks, 0);
    assert_eq!(i.output, vec!["true"]);
}

#[test]
fn modes_must_match_program() {
    let p = load("class A { void main() { } }", "t.mini").unwrap();
    assert_eq!(interpret(&p, Mode::Instrumented).unwrap_err(), InterpretError::NotInstrumented);
}
