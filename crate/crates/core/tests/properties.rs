mod common;

use std::collections::HashSet;

use proptest::prelude::*;

use common::{census, helper_counts, instrument};
use ghosttrace::harness::{
    check_equivalence, filter_instrumentation, generate_program, EventKind, EventLog, GeneratorConfig, Population,
};
use ghosttrace::lang::{load, map_locations, pretty_print, Location, Program};
use ghosttrace::runtime::{interpret, Mode};
use ghosttrace::trace::{
    postprocess, render_text, validate, CausalLink, CausalityTrace, Frame, LinkKind, NPEReport, Property, VariableKind,
};

fn population() -> impl Strategy<Value = Population> {
    prop_oneof![Just(Population::GhostFree), Just(Population::NullBearing)]
}

fn generated(seed: u64, population: Population) -> Program {
    let src = generate_program(seed, GeneratorConfig { population, ..GeneratorConfig::default() });
    load(&src, "gen.mini").unwrap()
}

fn lines(p: &Program) -> HashSet<u32> {
    let mut out = HashSet::new();
    let mut copy = p.clone();
    map_locations(&mut copy, &mut |loc: &mut Location| {
        out.insert(loc.line);
    });
    out
}

fn kind() -> impl Strategy<Value = LinkKind> {
    proptest::sample::select(LinkKind::ALL.to_vec())
}

fn link() -> impl Strategy<Value = CausalLink> {
    (kind(), 1u32..40, proptest::option::of("[a-z]{1,3}"), any::<bool>()).prop_map(|(kind, line, var, lib)| {
        let mut l = CausalLink::new(kind, Location::new("f.mini", line));
        l.stack = vec![Frame { method: "A.m".into(), file: "f.mini".into(), line }];
        if let Some(v) = var {
            l = l.with_variable(v, VariableKind::Local);
        }
        if lib {
            l = l.with_signature("lib.ext()");
        }
        l
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printing_then_parsing_gives_the_same_program(seed in any::<u64>(), pop in population()) {
        let p = generated(seed, pop);
        let again = load(&pretty_print(&p), "gen.mini").unwrap();
        prop_assert!(again.same_structure(&p));
    }

    #[test]
    fn transform_output_resolves_and_round_trips(seed in any::<u64>(), pop in population()) {
        let q = instrument(&generated(seed, pop));
        let again = load(&pretty_print(&q), "ignored").unwrap();
        prop_assert!(again.same_structure(&q));
    }

    #[test]
    fn transformed_locations_come_from_the_source(seed in any::<u64>(), pop in population()) {
        let p = generated(seed, pop);
        let original = lines(&p);
        prop_assert!(lines(&instrument(&p)).is_subset(&original));
    }

    #[test]
    fn each_construct_gets_exactly_one_helper(seed in any::<u64>(), pop in population()) {
        let p = generated(seed, pop);
        prop_assert_eq!(helper_counts(&instrument(&p)), census(&p));
    }

    #[test]
    fn resolver_errors_are_deterministic(seed in any::<u64>(), cut in 0usize..60) {
        let src = generate_program(seed, GeneratorConfig::default());
        let mut kept: Vec<&str> = src.lines().collect();
        if cut < kept.len() {
            kept.remove(cut);
        }
        let mutated = kept.join("\n");
        let a = load(&mutated, "gen.mini");
        let b = load(&mutated, "gen.mini");
        prop_assert_eq!(a, b);
    }

    #[test]
    fn paired_runs_agree(seed in any::<u64>(), pop in population()) {
        let p = generated(seed, pop);
        let verdict = check_equivalence(&p, &instrument(&p)).unwrap();
        prop_assert!(verdict.equal, "{}", verdict.describe());
    }

    #[test]
    fn runtime_traces_are_valid_and_monotone(seed in any::<u64>()) {
        let p = generated(seed, Population::NullBearing);
        let run = interpret(&instrument(&p), Mode::Instrumented).unwrap();
        prop_assert!(run.events.is_well_nested());
        prop_assert_eq!(run.ghost_leaks, 0);
        let traces = run.ghost_traces.iter().chain(run.npe_reports.iter().map(|r| &r.trace));
        for trace in traces {
            prop_assert!(validate(trace).is_ok(), "{:?}", validate(trace));
            let seqs: Vec<u64> = trace.links().iter().map(|l| l.seq).collect();
            prop_assert!(seqs.windows(2).all(|w| w[0] < w[1]));
        }
        for report in &run.npe_reports {
            let covered: usize = report.display.elements.iter().map(|e| e.links.len()).sum();
            prop_assert_eq!(covered, report.trace.len());
        }
    }

    #[test]
    fn appending_keeps_every_link_in_order(links in proptest::collection::vec(link(), 0..12)) {
        let mut trace = CausalityTrace::new();
        for (i, l) in links.iter().enumerate() {
            trace.append_link(l.clone());
            prop_assert_eq!(trace.len(), i + 1);
        }
        prop_assert_eq!(trace.links(), links.as_slice());
    }

    #[test]
    fn postprocessing_conserves_links(links in proptest::collection::vec(link(), 1..12)) {
        let trace = CausalityTrace::from_links(links);
        let display = postprocess(&trace);
        let covered: Vec<usize> = display.elements.iter().flat_map(|e| e.links.clone()).collect();
        prop_assert_eq!(covered, (0..trace.len()).collect::<Vec<_>>());
    }

    #[test]
    fn rendering_shows_each_block_once(links in proptest::collection::vec(link(), 1..10)) {
        let trace = CausalityTrace::from_links(links);
        let report = NPEReport::from_trace(trace, Vec::new());
        let text = render_text(&report);
        let blocks = report.display.elements.len() - 1;
        let lead_lines = text.lines().filter(|l| !l.starts_with('\t')).count();
        // Header, symptom line, one lead line per earlier element.
        prop_assert_eq!(lead_lines, 2 + blocks + usize::from(report.is_symptom_only()));
    }

    #[test]
    fn traces_without_an_origin_are_rejected(first in kind(), rest in proptest::collection::vec(link(), 0..6)) {
        prop_assume!(first != LinkKind::Literal);
        let head = CausalLink::new(first, Location::new("f.mini", 1));
        let symptom_only = rest.is_empty() && matches!(first, LinkKind::Deref | LinkKind::Unbox);
        let mut links = vec![head];
        links.extend(rest);
        let result = validate(&CausalityTrace::from_links(links));
        if symptom_only {
            prop_assert!(result.is_ok());
        } else {
            prop_assert_eq!(result.unwrap_err().property, Property::Origin);
        }
    }

    #[test]
    fn filtering_is_idempotent(methods in proptest::collection::vec(0usize..4, 0..20)) {
        let names = ["A#m", "NullDetector#nullAssign", "NullDetector#exorcise", "lib#f"];
        let mut log = EventLog::new("p", Mode::Instrumented);
        for m in methods {
            log.push(EventKind::Call, names[m], "()");
            log.push(EventKind::Return, names[m], "null");
        }
        let once = filter_instrumentation(&log);
        prop_assert_eq!(filter_instrumentation(&once), once.clone());
        prop_assert!(once.events.iter().enumerate().all(|(i, e)| e.seq == i));
        prop_assert!(once.is_well_nested());
    }
}
