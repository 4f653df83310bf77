//! Paired-run equivalence checks, overhead measurement and random programs.

mod events;
mod generate;

use std::time::Duration;

use crate::lang::{Helper, Program};
use crate::runtime::{interpret, InterpretError, Mode, Outcome};

pub use events::{EventKind, EventLog, EventParseError, ExecutionEvent, HELPER_CLASS};
pub use generate::{generate_program, GeneratorConfig, Population};

/// Runs `program` and returns its event log together with how the run ended.
pub fn record_execution(program: &Program, mode: Mode) -> Result<(EventLog, Outcome), InterpretError> {
    let result = interpret(program, mode)?;
    Ok((result.events, result.outcome))
}

fn is_helper_event(method: &str) -> bool {
    method
        .strip_prefix(HELPER_CLASS)
        .and_then(|rest| rest.strip_prefix('#'))
        .is_some_and(|name| Helper::from_name(name).is_some())
}

/// Drops helper events and renumbers the rest densely.
pub fn filter_instrumentation(log: &EventLog) -> EventLog {
    let mut out = EventLog::new(log.program_id.clone(), log.mode);
    for e in log.events.iter().filter(|e| !is_helper_event(&e.method)) {
        out.push(e.kind, e.method.clone(), e.payload.clone());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub index: usize,
    /// `None` when that log ended first.
    pub left: Option<ExecutionEvent>,
    pub right: Option<ExecutionEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceVerdict {
    pub equal: bool,
    pub first_divergence: Option<Divergence>,
}

impl EquivalenceVerdict {
    pub fn describe(&self) -> String {
        match &self.first_divergence {
            None => "EQUIVALENT".to_string(),
            Some(d) => {
                let show = |e: &Option<ExecutionEvent>| match e {
                    Some(e) => format!("{} {} {}", e.kind.name(), e.method, e.payload),
                    None => "<end of log>".to_string(),
                };
                format!(
                    "DIVERGENT at event {}\n  original:     {}\n  instrumented: {}",
                    d.index,
                    show(&d.left),
                    show(&d.right)
                )
            }
        }
    }
}

/// Positional comparison of kind, method and payload.
pub fn compare(a: &EventLog, b: &EventLog) -> EquivalenceVerdict {
    let len = a.events.len().max(b.events.len());
    for i in 0..len {
        let (x, y) = (a.events.get(i), b.events.get(i));
        let same = matches!((x, y), (Some(x), Some(y)) if x.same_content(y));
        if !same {
            return EquivalenceVerdict {
                equal: false,
                first_divergence: Some(Divergence { index: i, left: x.cloned(), right: y.cloned() }),
            };
        }
    }
    EquivalenceVerdict { equal: true, first_divergence: None }
}

/// Runs the original and its instrumented version and compares the filtered logs.
pub fn check_equivalence(original: &Program, instrumented: &Program) -> Result<EquivalenceVerdict, InterpretError> {
    let (a, _) = record_execution(original, Mode::Original)?;
    let (b, _) = record_execution(instrumented, Mode::Instrumented)?;
    Ok(compare(&filter_instrumentation(&a), &filter_instrumentation(&b)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Overhead {
    /// Median instrumented time over median original time.
    pub ratio: f64,
    pub original: Duration,
    pub instrumented: Duration,
    pub repetitions: usize,
    /// Set when only one sample was taken.
    pub low_confidence: bool,
}

fn median(mut samples: Vec<Duration>) -> Duration {
    samples.sort();
    let n = samples.len();
    if n % 2 == 1 {
        samples[n / 2]
    } else {
        (samples[n / 2 - 1] + samples[n / 2]) / 2
    }
}

/// Times both runs `repetitions` times. The transform is not timed.
pub fn measure_overhead(
    original: &Program,
    instrumented: &Program,
    repetitions: usize,
) -> Result<Overhead, InterpretError> {
    let repetitions = repetitions.max(1);
    let mut orig = Vec::with_capacity(repetitions);
    let mut instr = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        orig.push(interpret(original, Mode::Original)?.wall_time);
        instr.push(interpret(instrumented, Mode::Instrumented)?.wall_time);
    }
    let (o, i) = (median(orig), median(instr));
    let floor = Duration::from_nanos(1);
    Ok(Overhead {
        ratio: i.max(floor).as_secs_f64() / o.max(floor).as_secs_f64(),
        original: o,
        instrumented: i,
        repetitions,
        low_confidence: repetitions == 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn log(methods: &[(&str, EventKind, &str)]) -> EventLog {
        let mut l = EventLog::new("t", Mode::Instrumented);
        for (m, k, p) in methods {
            l.push(*k, *m, *p);
        }
        l
    }

    #[test]
    fn filter_drops_helpers_and_renumbers() {
        use EventKind::*;
        let l = log(&[
            ("A#main", Call, "()"),
            ("NullDetector#nullAssign", Call, "(null)"),
            ("NullDetector#nullAssign", Return, "null"),
            ("NullDetector#exorcise", Call, "(null)"),
            ("NullDetector#exorcise", Return, "null"),
            ("A#main", Return, "void"),
        ]);
        let f = filter_instrumentation(&l);
        assert_eq!(f.len(), 2);
        assert_eq!(f.events[1].seq, 1);
        assert_eq!(filter_instrumentation(&f), f);
    }

    #[test]
    fn compare_reports_first_mismatch() {
        use EventKind::*;
        let a = log(&[("A#main", Call, "()"), ("A#f", Call, "(1)"), ("A#f", Return, "2")]);
        let b = log(&[("A#main", Call, "()"), ("A#f", Call, "(1)"), ("A#f", Return, "3")]);
        let v = compare(&a, &b);
        assert!(!v.equal);
        assert_eq!(v.first_divergence.unwrap().index, 2);
        assert!(compare(&a, &a).equal);
        let short = log(&[("A#main", Call, "()")]);
        assert_eq!(compare(&a, &short).first_divergence.unwrap().index, 1);
    }

    #[test]
    fn median_of_even_count_averages() {
        let d = |ms| Duration::from_millis(ms);
        assert_eq!(median(vec![d(4), d(1), d(3), d(2)]), Duration::from_micros(2500));
        assert_eq!(median(vec![d(5)]), d(5));
    }
}
