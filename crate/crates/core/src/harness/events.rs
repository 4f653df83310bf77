use std::fmt;

use crate::runtime::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Call,
    Return,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Call => "call",
            EventKind::Return => "return",
        }
    }
}

/// One method entry or exit. `method` is `Class#method`; helpers are logged
/// as `NullDetector#<helper>` and externs as `lib#<name>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionEvent {
    pub seq: usize,
    pub kind: EventKind,
    pub method: String,
    /// Rendered arguments for calls, rendered result for returns.
    pub payload: String,
}

impl ExecutionEvent {
    /// Equality ignoring `seq`.
    pub fn same_content(&self, other: &ExecutionEvent) -> bool {
        self.kind == other.kind && self.method == other.method && self.payload == other.payload
    }
}

impl fmt::Display for ExecutionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}\t{}", self.seq, self.kind.name(), self.method, self.payload)
    }
}

pub const HELPER_CLASS: &str = "NullDetector";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    pub program_id: String,
    pub mode: Mode,
    pub events: Vec<ExecutionEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed event log line {line}: {message}")]
pub struct EventParseError {
    pub line: usize,
    pub message: String,
}

impl EventLog {
    pub fn new(program_id: impl Into<String>, mode: Mode) -> Self {
        EventLog { program_id: program_id.into(), mode, events: Vec::new() }
    }

    pub fn push(&mut self, kind: EventKind, method: impl Into<String>, payload: impl Into<String>) {
        let seq = self.events.len();
        self.events.push(ExecutionEvent { seq, kind, method: method.into(), payload: payload.into() });
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// One event per line: `seq<TAB>kind<TAB>method<TAB>payload`.
    pub fn serialize(&self) -> String {
        self.events.iter().map(|e| format!("{e}\n")).collect()
    }

    pub fn parse(text: &str, program_id: &str, mode: Mode) -> Result<EventLog, EventParseError> {
        let mut log = EventLog::new(program_id, mode);
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
            let err = |message: &str| EventParseError { line: i + 1, message: message.to_string() };
            let mut parts = line.splitn(4, '\t');
            let seq = parts.next().and_then(|s| s.parse().ok()).ok_or_else(|| err("bad sequence number"))?;
            let kind = match parts.next() {
                Some("call") => EventKind::Call,
                Some("return") => EventKind::Return,
                _ => return Err(err("kind must be call or return")),
            };
            let method = parts.next().ok_or_else(|| err("missing method"))?.to_string();
            let payload = parts.next().unwrap_or_default().to_string();
            log.events.push(ExecutionEvent { seq, kind, method, payload });
        }
        Ok(log)
    }

    /// Every return closes the most recent open call of the same method, and
    /// sequence numbers strictly increase. Open calls may remain at the end
    /// only if the run was cut short.
    pub fn is_well_nested(&self) -> bool {
        let mut open: Vec<&str> = Vec::new();
        let mut last_seq: Option<usize> = None;
        for e in &self.events {
            if last_seq.is_some_and(|s| e.seq <= s) {
                return false;
            }
            last_seq = Some(e.seq);
            match e.kind {
                EventKind::Call => open.push(&e.method),
                EventKind::Return => {
                    if open.pop() != Some(e.method.as_str()) {
                        return false;
                    }
                }
            }
        }
        open.is_empty()
    }
}
