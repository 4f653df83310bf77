use serde::Serialize;

use super::display::NPEReport;
use super::link::{Frame, LinkKind, VariableKind};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RenderOptions {
    /// Bold the message line of each block.
    pub color: bool,
}

impl RenderOptions {
    /// Reads `GHOSTTRACE_COLOR`; only `1` turns color on.
    pub fn from_env() -> Self {
        RenderOptions { color: std::env::var("GHOSTTRACE_COLOR").is_ok_and(|v| v == "1") }
    }
}

pub fn render_text(report: &NPEReport) -> String {
    render_text_with(report, RenderOptions::default())
}

/// Stack trace first, then one block per display element, newest first.
///
/// The symptom block carries the conventional stack trace; every other block
/// names the frame its construct executed in.
pub fn render_text_with(report: &NPEReport, options: RenderOptions) -> String {
    let style = |text: &str| if options.color { format!("\x1b[1m{text}\x1b[0m") } else { text.to_string() };
    let mut out = String::from("Exception in thread \"main\" NullPointerException\n");
    let stack_lines = |out: &mut String| {
        for frame in &report.stack {
            out.push_str(&format!("\tat {frame}\n"));
        }
    };
    let elements = &report.display.elements;
    if elements.is_empty() {
        stack_lines(&mut out);
        return out;
    }
    for (n, element) in elements.iter().rev().enumerate() {
        if n == 0 {
            out.push_str(&style(&report.symptom.message()));
            out.push('\n');
            stack_lines(&mut out);
            continue;
        }
        out.push_str(&style(&element.message));
        out.push('\n');
        let at = match &element.method {
            Some(m) => format!("{m}({}:{})", element.location.file, element.location.line),
            None => format!("{}:{}", element.location.file, element.location.line),
        };
        out.push_str(&format!("\tat {at}\n"));
    }
    if report.is_symptom_only() {
        out.push_str("(no causality trace: the null never passed an instrumented site)\n");
    }
    out
}

#[derive(Serialize)]
struct JsonSymptom<'a> {
    kind: LinkKind,
    message: String,
    variable: Option<&'a str>,
    #[serde(rename = "variableKind")]
    variable_kind: Option<VariableKind>,
    file: &'a str,
    line: u32,
    #[serde(rename = "symptomOnly")]
    symptom_only: bool,
    stack: &'a [Frame],
}

#[derive(Serialize)]
struct JsonLink<'a> {
    kind: LinkKind,
    variable: Option<&'a str>,
    #[serde(rename = "exprSignature")]
    expr_signature: Option<&'a str>,
    file: &'a str,
    line: u32,
    thread: &'a str,
    stack: &'a [Frame],
}

#[derive(Serialize)]
struct JsonElement<'a> {
    message: &'a str,
    file: &'a str,
    line: u32,
    method: Option<&'a str>,
    links: &'a [usize],
}

#[derive(Serialize)]
struct JsonReport<'a> {
    symptom: JsonSymptom<'a>,
    links: Vec<JsonLink<'a>>,
    display: Vec<JsonElement<'a>>,
}

/// Deterministic JSON form: `symptom`, `links` in temporal order, `display`.
pub fn render_json(report: &NPEReport) -> String {
    let s = &report.symptom;
    let json = JsonReport {
        symptom: JsonSymptom {
            kind: s.kind,
            message: s.message(),
            variable: s.variable.as_deref(),
            variable_kind: s.variable_kind,
            file: &s.location.file,
            line: s.location.line,
            symptom_only: report.is_symptom_only(),
            stack: &report.stack,
        },
        links: report
            .trace
            .links()
            .iter()
            .map(|l| JsonLink {
                kind: l.kind,
                variable: l.variable.as_deref(),
                expr_signature: l.expr_signature.as_deref(),
                file: &l.location.file,
                line: l.location.line,
                thread: &l.thread,
                stack: &l.stack,
            })
            .collect(),
        display: report
            .display
            .elements
            .iter()
            .map(|e| JsonElement {
                message: &e.message,
                file: &e.location.file,
                line: e.location.line,
                method: e.method.as_deref(),
                links: &e.links,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&json).expect("report serializes")
}
