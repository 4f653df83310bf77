mod common;

use common::{census, corpus, golden, helper_counts, instrument, kinds};
use ghosttrace::harness::{check_equivalence, filter_instrumentation};
use ghosttrace::lang::{load, pretty_print, resolve, Helper};
use ghosttrace::runtime::{interpret, Mode, Outcome};
use ghosttrace::trace::{render_text, validate};

#[test]
fn corpus_is_complete() {
    let names: Vec<String> = corpus().into_iter().map(|(n, _)| n).collect();
    for row in common::rows() {
        assert!(names.iter().any(|n| n == row), "missing {row}");
    }
    assert!(names.len() >= 14);
}

#[test]
fn instrumented_traces_match_golden_shapes() {
    for (name, p) in corpus() {
        let run = interpret(&instrument(&p), Mode::Instrumented).unwrap();
        let report = run.outcome.report().unwrap_or_else(|| panic!("{name}: no NPE"));
        assert_eq!(kinds(&report.trace), golden(&name, "trace").trim(), "{name}");
    }
}

#[test]
fn event_logs_match_golden_in_both_modes() {
    for (name, p) in corpus() {
        let expected = golden(&name, "events");
        let original = interpret(&p, Mode::Original).unwrap();
        let instrumented = interpret(&instrument(&p), Mode::Instrumented).unwrap();
        assert_eq!(filter_instrumentation(&original.events).serialize(), expected, "{name} original");
        assert_eq!(filter_instrumentation(&instrumented.events).serialize(), expected, "{name} instrumented");
        assert!(original.events.is_well_nested() && instrumented.events.is_well_nested(), "{name}");
    }
}

#[test]
fn corpus_pairs_are_equivalent() {
    for (name, p) in corpus() {
        let verdict = check_equivalence(&p, &instrument(&p)).unwrap();
        assert!(verdict.equal, "{name}: {}", verdict.describe());
    }
}

#[test]
fn npes_escape_at_the_same_frames() {
    for (name, p) in corpus() {
        let o = interpret(&p, Mode::Original).unwrap();
        let i = interpret(&instrument(&p), Mode::Instrumented).unwrap();
        let (ro, ri) = (o.outcome.report().unwrap(), i.outcome.report().unwrap());
        assert_eq!(ro.stack, ri.stack, "{name}");
        assert_eq!(ro.symptom.location, ri.symptom.location, "{name}");
        assert_eq!(o.output, i.output, "{name}");
    }
}

#[test]
fn every_runtime_trace_validates() {
    for (name, p) in corpus() {
        let run = interpret(&instrument(&p), Mode::Instrumented).unwrap();
        assert_eq!(run.ghost_leaks, 0, "{name}");
        for report in &run.npe_reports {
            validate(&report.trace).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        for trace in &run.ghost_traces {
            validate(trace).unwrap_or_else(|e| panic!("{name} ghost: {e}"));
        }
    }
}

#[test]
fn display_elements_cover_every_raw_link() {
    for (name, p) in corpus() {
        let run = interpret(&instrument(&p), Mode::Instrumented).unwrap();
        let report = run.outcome.report().unwrap();
        let covered: usize = report.display.elements.iter().map(|e| e.links.len()).sum();
        assert_eq!(covered, report.trace.len(), "{name}");
        let text = render_text(report);
        for element in &report.display.elements {
            let line = format!("({}:{})", element.location.file, element.location.line);
            assert!(text.contains(&line), "{name}: {line} missing from\n{text}");
        }
    }
}

#[test]
fn root_cause_is_the_hand_identified_origin() {
    // Line of the statement that introduces the null, found by reading each program.
    let origins = [
        ("bisection_analog", 13),
        ("mckoi", 15),
        ("freemarker_107", 17),
        ("jfreechart_687", 28),
        ("collections_331", 24),
        ("math_305", 36),
        ("math_1117", 22),
        ("lang_304", 12),
        ("lang_587", 12),
        ("lang_703", 14),
        ("math_369", 12),
        ("math_988a", 18),
        ("math_988b", 7),
        ("math_1115", 14),
        ("rrad", 8),
    ];
    let programs = corpus();
    for (name, line) in origins {
        let (_, p) = programs.iter().find(|(n, _)| n == name).unwrap();
        let run = interpret(&instrument(p), Mode::Instrumented).unwrap();
        let report = run.outcome.report().unwrap();
        assert_eq!(report.display.elements[0].location.line, line, "{name}");
    }
}

#[test]
fn helper_census_matches_source_constructs() {
    for (name, p) in corpus() {
        let q = instrument(&p);
        assert_eq!(helper_counts(&q), census(&p), "{name}");
    }
}

#[test]
fn transformed_corpus_reparses_and_round_trips() {
    for (name, p) in corpus() {
        let text = pretty_print(&p);
        let again = load(&text, &p.file).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(again.same_structure(&p), "{name}");
        let q = instrument(&p);
        let reparsed = load(&pretty_print(&q), "ignored").unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(reparsed.same_structure(&q), "{name}");
        assert!(reparsed.instrumented);
        assert!(resolve(q.clone()).is_ok(), "{name}");
        assert_eq!(helper_counts(&reparsed).get(&Helper::NullAssign), helper_counts(&q).get(&Helper::NullAssign));
    }
}

#[test]
fn original_runs_give_plain_reports() {
    for (name, p) in corpus() {
        let run = interpret(&p, Mode::Original).unwrap();
        match run.outcome {
            Outcome::Npe(r) => assert!(r.trace.is_empty(), "{name}"),
            other => panic!("{name}: {other:?}"),
        }
    }
}
