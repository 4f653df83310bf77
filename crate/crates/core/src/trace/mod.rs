//! Causal links, causality traces and NPE reports.

mod display;
mod link;
mod render;
mod validate;

pub use display::{describe_source, postprocess, DisplayElement, DisplayTrace, NPEReport, Symptom};
pub use link::{format_kinds, parse_kinds, CausalLink, CausalityTrace, Frame, LinkKind, VariableKind};
pub use render::{render_json, render_text, render_text_with, RenderOptions};
pub use validate::{validate, Property, ValidationFailure, Verdict};

/// Appends `link` to `trace`, returning the extended trace.
pub fn append_link(trace: CausalityTrace, link: CausalLink) -> CausalityTrace {
    trace.appended(link)
}
