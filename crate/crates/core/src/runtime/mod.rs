//! Tree-walking interpreter for original and instrumented programs.

mod interp;
mod value;

use std::fmt;
use std::time::Duration;

use crate::harness::EventLog;
use crate::lang::Program;
use crate::trace::{CausalityTrace, NPEReport};

pub use value::{BoxObj, Ghost, Obj, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Original,
    Instrumented,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Original => "original",
            Mode::Instrumented => "instrumented",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunConfig {
    /// Statements plus calls executed before the run is abandoned.
    pub max_steps: u64,
    pub max_depth: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { max_steps: 20_000_000, max_depth: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// Entry method returned; rendered return value (`void` for none).
    Normal(String),
    Npe(NPEReport),
    /// Division by zero, step or depth limit.
    OtherError(String),
}

impl Outcome {
    pub fn is_npe(&self) -> bool {
        matches!(self, Outcome::Npe(_))
    }

    pub fn report(&self) -> Option<&NPEReport> {
        match self {
            Outcome::Npe(r) => Some(r),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome: Outcome,
    pub events: EventLog,
    /// Lines written by `print`.
    pub output: Vec<String>,
    pub wall_time: Duration,
    /// Ghosts that reached an extern stub. Always zero for instrumented
    /// programs produced by the transform.
    pub ghost_leaks: usize,
    /// Final trace of every ghost created during the run.
    pub ghost_traces: Vec<CausalityTrace>,
    /// Every NPE raised, caught or not, in order.
    pub npe_reports: Vec<NPEReport>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InterpretError {
    #[error("instrumented mode needs an instrumented program")]
    NotInstrumented,
    #[error("original mode cannot run an instrumented program")]
    AlreadyInstrumented,
    #[error("program has no entry method")]
    NoEntry,
}

pub fn interpret(program: &Program, mode: Mode) -> Result<RunResult, InterpretError> {
    interpret_with(program, mode, RunConfig::default())
}

/// Runs the entry method. `program` must be resolved.
pub fn interpret_with(program: &Program, mode: Mode, config: RunConfig) -> Result<RunResult, InterpretError> {
    match (mode, program.instrumented) {
        (Mode::Instrumented, false) => return Err(InterpretError::NotInstrumented),
        (Mode::Original, true) => return Err(InterpretError::AlreadyInstrumented),
        _ => {}
    }
    if program.entry().is_none() {
        return Err(InterpretError::NoEntry);
    }
    Ok(interp::Interp::new(program, mode, config).run())
}

#[cfg(test)]
mod tests;
