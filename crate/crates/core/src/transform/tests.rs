use super::*;
use crate::lang::{load, pretty_print};

fn instrument(src: &str) -> (Program, TransformReport) {
    let p = load(src, "t.mini").unwrap();
    transform_program(&p).unwrap()
}

#[test]
fn assignment_from_call_gets_one_null_assign() {
    let (p, report) =
        instrument("class A { Object foo() { return new Object(); }\n void main() { Object o; o = foo(); } }");
    assert_eq!(report.count(Rule::Assign), 1);
    assert_eq!(report.count(Rule::DeclDefault), 1);
    let text = pretty_print(&p);
    assert!(text.contains("o = nullAssign(foo(), \"o, t.mini:2\");"), "{text}");
}

#[test]
fn arithmetic_only_program_is_untouched() {
    let (_, report) = instrument("class A { void main() { int x = 1 + 2; print(x * 3); } }");
    assert_eq!(report.total(), 0);
}

#[test]
fn second_transform_is_refused() {
    let (p, _) = instrument("class A { void main() { Object o = null; } }");
    assert_eq!(transform_program(&p).unwrap_err(), TransformError::AlreadyTransformed);
}

#[test]
fn final_parameter_is_duplicated() {
    let (p, report) =
        instrument("class A { void m(Object a, final Object b) { print(b == a); }\n void main() { m(null, null); } }");
    assert_eq!(report.count(Rule::MethodEntry), 2);
    assert_eq!(report.count(Rule::CallArgs), 2);
    let m = p.classes[0].method("m").unwrap();
    assert_eq!(m.params[1].name, "b_dup");
    let text = pretty_print(&p);
    assert!(text.contains("a = nullPassed(a, \"a, t.mini:1\");"), "{text}");
    assert!(text.contains("final Object b = nullPassed(b_dup, \"b, t.mini:1\");"), "{text}");
}

#[test]
fn this_receiver_and_new_values_are_skipped() {
    let (_, report) = instrument(
        "class A { Object f; A g;\n void main() { this.f = new Object(); this.g = this; Object x = this.g.f; } }",
    );
    assert_eq!(report.count(Rule::Assign), 1);
    assert_eq!(report.count(Rule::FieldAccess), 1);
    assert_eq!(report.count(Rule::DeclDefault), 2);
}

#[test]
fn comparisons_and_extern_calls_are_rewritten() {
    let (p, report) = instrument(
        "extern Object find(Object key, int n) = null;\n\
         class A { void main() { Object o = lib.find(null, 3); if (o != null && o instanceof A) { print(1); } } }",
    );
    assert_eq!(report.count(Rule::ExternCall), 2);
    assert_eq!(report.count(Rule::EqNull), 1);
    assert_eq!(report.count(Rule::InstanceOf), 1);
    let text = pretty_print(&p);
    assert!(text.contains("!(o == null || o instanceof NullGhost)"), "{text}");
    assert!(text.contains("o instanceof A && !(o instanceof NullGhost)"), "{text}");
}

#[test]
fn unbox_sites_are_wrapped() {
    let (p, report) = instrument("class A { void main() { IntBox a = new IntBox(3); int b = a + 3; print(b); } }");
    assert_eq!(report.count(Rule::Unbox), 1);
    assert!(pretty_print(&p).contains("nullUnbox(a, \"a, t.mini:1\") + 3"));
}

#[test]
fn output_round_trips_through_the_printer() {
    let (p, _) = instrument(
        "class B { Object v; Object get() { return this.v; } }\n\
         class A { void main() { B b = new B(); Object x = b.get(); if (x == b.v) { print(1); } } }",
    );
    let text = pretty_print(&p);
    let q = load(&text, "ignored.mini").unwrap();
    assert!(q.instrumented);
    assert!(p.same_structure(&q), "{text}");
}
