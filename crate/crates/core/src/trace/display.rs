use crate::lang::Location;

use super::link::{CausalLink, CausalityTrace, Frame, LinkKind, VariableKind};

/// One human-readable entry of a post-processed trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DisplayElement {
    pub message: String,
    pub location: Location,
    /// `Class.method` of the frame the construct executed in.
    pub method: Option<String>,
    /// Indices of the underlying raw links, in order.
    pub links: Vec<usize>,
    pub kinds: Vec<LinkKind>,
}

/// Post-processed trace in temporal order, with the raw trace kept alongside.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DisplayTrace {
    pub elements: Vec<DisplayElement>,
    pub raw: CausalityTrace,
}

/// What was dereferenced, and where.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symptom {
    pub kind: LinkKind,
    pub location: Location,
    pub variable: Option<String>,
    pub variable_kind: Option<VariableKind>,
    pub expr_signature: Option<String>,
}

impl Symptom {
    pub fn from_link(link: &CausalLink) -> Self {
        Symptom {
            kind: link.kind,
            location: link.location.clone(),
            variable: link.variable.clone(),
            variable_kind: link.variable_kind,
            expr_signature: link.expr_signature.clone(),
        }
    }

    /// `For parameter : f`
    pub fn message(&self) -> String {
        symptom_message(self.kind, self.variable.as_deref(), self.variable_kind, self.expr_signature.as_deref())
    }
}

/// Everything known about one null pointer exception.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NPEReport {
    pub symptom: Symptom,
    /// Conventional stack trace at the failure, innermost first.
    pub stack: Vec<Frame>,
    pub trace: CausalityTrace,
    pub display: DisplayTrace,
}

impl NPEReport {
    /// Report for a trace ending in the failing dereference or unboxing.
    pub fn from_trace(trace: CausalityTrace, stack: Vec<Frame>) -> Self {
        let last = trace.last().expect("report needs at least the symptom link");
        let symptom = Symptom::from_link(last);
        let display = postprocess(&trace);
        NPEReport { symptom, stack, trace, display }
    }

    /// Plain report with no causality information, as an uninstrumented run gives.
    pub fn plain(location: Location, stack: Vec<Frame>) -> Self {
        NPEReport {
            symptom: Symptom {
                kind: LinkKind::Deref,
                location,
                variable: None,
                variable_kind: None,
                expr_signature: None,
            },
            stack,
            trace: CausalityTrace::new(),
            display: DisplayTrace::default(),
        }
    }

    pub fn is_symptom_only(&self) -> bool {
        self.trace.is_symptom_only()
    }
}

fn capitalize(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Describes the source of a null from an expression signature.
pub fn describe_source(sig: &str) -> String {
    if sig == "null" {
        "null literal".to_string()
    } else if sig.starts_with("lib.") {
        format!("external call {sig}")
    } else if sig.contains('(') {
        format!("value returned by {sig}")
    } else if let Some((_, name)) = sig.split_once(' ') {
        if name.contains('.') {
            format!("field {name}")
        } else {
            format!("variable {name}")
        }
    } else {
        sig.to_string()
    }
}

fn symptom_message(
    kind: LinkKind,
    variable: Option<&str>,
    variable_kind: Option<VariableKind>,
    sig: Option<&str>,
) -> String {
    let subject = match (variable, variable_kind) {
        (Some(v), Some(k)) => format!("{} : {v}", k.noun()),
        (Some(v), None) => format!("variable : {v}"),
        (None, _) => format!("expression : {}", sig.unwrap_or("?")),
    };
    match kind {
        LinkKind::Unbox => format!("Unboxed null for {subject}"),
        _ => format!("For {subject}"),
    }
}

fn noun_phrase(link: &CausalLink) -> String {
    let noun = capitalize(link.variable_kind.unwrap_or(VariableKind::Local).noun());
    format!("{noun} {}", link.variable.as_deref().unwrap_or("?"))
}

fn single_message(link: &CausalLink) -> String {
    let sig = link.expr_signature.as_deref();
    let var = link.variable.as_deref().unwrap_or("?");
    match link.kind {
        LinkKind::Literal => "Null literal".to_string(),
        LinkKind::Assign => match sig {
            Some(s) => format!("{} assigned null from {}", noun_phrase(link), describe_source(s)),
            None => format!("{} assigned null", noun_phrase(link)),
        },
        LinkKind::Invoke => match sig {
            Some(s) => format!("Null passed as parameter {var} from {}", describe_source(s)),
            None => format!("Null passed as parameter {var}"),
        },
        LinkKind::Entry if link.is_extern_boundary() => {
            format!("Parameter {var} bound to null by {}", sig.unwrap_or("external call"))
        }
        LinkKind::Entry => format!("Parameter {var} received null on entry"),
        LinkKind::Return if link.is_extern_boundary() => {
            format!("Null returned by external call {}", sig.unwrap_or("?"))
        }
        LinkKind::Return => format!("Null returned by {}", link.method().unwrap_or("?")),
        LinkKind::Unbox | LinkKind::Deref => {
            symptom_message(link.kind, link.variable.as_deref(), link.variable_kind, sig)
        }
        LinkKind::Extern => format!("Null passed to external call {}", sig.unwrap_or("?")),
    }
}

fn same_call_site(invoke: &CausalLink, entry: &CausalLink) -> bool {
    match entry.stack.get(1) {
        Some(caller) => caller.line == invoke.location.line && *caller.file == *invoke.location.file,
        None => true,
    }
}

/// Collapses the two redundancies of raw traces: a null literal assigned on
/// the same line, and a call-site/entry pair for one parameter binding.
pub fn postprocess(trace: &CausalityTrace) -> DisplayTrace {
    let links = trace.links();
    let mut elements = Vec::new();
    let mut i = 0;
    while i < links.len() {
        let link = &links[i];
        let next = links.get(i + 1);
        let element = match next {
            Some(n) if link.kind == LinkKind::Literal && n.kind == LinkKind::Assign && n.location == link.location => {
                Some(DisplayElement {
                    message: format!("{} set to null", noun_phrase(n)),
                    location: n.location.clone(),
                    method: n.method().map(str::to_string),
                    links: vec![i, i + 1],
                    kinds: vec![link.kind, n.kind],
                })
            }
            Some(n)
                if matches!(
                    (link.kind, n.kind),
                    (LinkKind::Invoke, LinkKind::Entry) | (LinkKind::Entry, LinkKind::Invoke)
                ) =>
            {
                let (invoke, entry) = if link.kind == LinkKind::Invoke { (link, n) } else { (n, link) };
                if same_call_site(invoke, entry) && !entry.is_extern_boundary() {
                    let var = entry.variable.as_deref().or(invoke.variable.as_deref()).unwrap_or("?");
                    let source = invoke.expr_signature.as_deref().map(describe_source);
                    let message = match source {
                        Some(src) => format!("Parameter {var} bound to {src}"),
                        None => format!("Parameter {var} bound to null"),
                    };
                    Some(DisplayElement {
                        message,
                        location: invoke.location.clone(),
                        method: invoke.method().map(str::to_string),
                        links: vec![i, i + 1],
                        kinds: vec![link.kind, n.kind],
                    })
                } else {
                    None
                }
            }
            _ => None,
        };
        match element {
            Some(e) => {
                elements.push(e);
                i += 2;
            }
            None => {
                elements.push(DisplayElement {
                    message: single_message(link),
                    location: link.location.clone(),
                    method: link.method().map(str::to_string),
                    links: vec![i],
                    kinds: vec![link.kind],
                });
                i += 1;
            }
        }
    }
    DisplayTrace { elements, raw: trace.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn link(kind: LinkKind, line: u32) -> CausalLink {
        CausalLink::new(kind, Location::new("t.mini", line))
    }

    #[test]
    fn literal_and_assign_on_one_line_merge() {
        let t = CausalityTrace::from_links(vec![
            link(LinkKind::Literal, 55),
            link(LinkKind::Assign, 55).with_variable("f2", VariableKind::Field),
            link(LinkKind::Deref, 88),
        ]);
        let d = postprocess(&t);
        assert_eq!(d.elements.len(), 2);
        assert_eq!(d.elements[0].message, "Field f2 set to null");
    }

    #[test]
    fn bisection_shape_gives_three_elements() {
        let t = CausalityTrace::from_links(vec![
            link(LinkKind::Literal, 55),
            link(LinkKind::Assign, 55).with_variable("f2", VariableKind::Field),
            link(LinkKind::Entry, 80).with_variable("f", VariableKind::Parameter),
            link(LinkKind::Invoke, 66).with_variable("f", VariableKind::Parameter),
            link(LinkKind::Deref, 88).with_variable("f", VariableKind::Parameter),
        ]);
        let d = postprocess(&t);
        assert_eq!(d.elements.len(), 3);
        assert_eq!(d.elements[2].message, "For parameter : f");
    }

    #[test]
    fn distinct_lines_do_not_merge() {
        let t = CausalityTrace::from_links(vec![
            link(LinkKind::Literal, 10),
            link(LinkKind::Assign, 12),
            link(LinkKind::Deref, 20),
        ]);
        assert_eq!(postprocess(&t).elements.len(), 3);
    }

    #[test]
    fn returns_stay_separate() {
        let t = CausalityTrace::from_links(vec![
            link(LinkKind::Return, 3),
            link(LinkKind::Return, 7),
            link(LinkKind::Assign, 11),
            link(LinkKind::Deref, 12),
        ]);
        assert_eq!(postprocess(&t).elements.len(), 4);
    }

    #[test]
    fn source_descriptions() {
        assert_eq!(describe_source("Object Solver.f2"), "field Solver.f2");
        assert_eq!(describe_source("Object x"), "variable x");
        assert_eq!(describe_source("A.get()"), "value returned by A.get()");
        assert_eq!(describe_source("lib.find()"), "external call lib.find()");
    }
}
