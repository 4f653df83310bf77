//! Null-ghost causality tracing for MiniLang programs.
//!
//! Programs are parsed and resolved by [`lang`], rewritten by [`transform`] so
//! that every null becomes a ghost carrying its history, executed by
//! [`runtime`], and reported through [`trace`]. [`harness`] checks that the
//! rewrite leaves observable behavior unchanged.

pub mod harness;
pub mod lang;
pub mod runtime;
pub mod trace;
pub mod transform;

pub use harness::{compare, filter_instrumentation, record_execution, EquivalenceVerdict, EventLog, ExecutionEvent};
pub use lang::{load, parse, pretty_print, resolve, FrontendError, Location, Program};
pub use runtime::{interpret, interpret_with, InterpretError, Mode, Outcome, RunConfig, RunResult, Value};
pub use trace::{
    render_json, render_text, validate, CausalLink, CausalityTrace, LinkKind, NPEReport, ValidationFailure, Verdict,
};
pub use transform::{transform_program, Rule, TransformError, TransformReport};
