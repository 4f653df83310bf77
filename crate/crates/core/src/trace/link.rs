use std::fmt;

use serde::Serialize;

use crate::lang::Location;

/// The eight null-propagating constructs a causal link can record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Literal,
    Entry,
    Invoke,
    Return,
    Unbox,
    Assign,
    Deref,
    Extern,
}

impl LinkKind {
    pub const ALL: [LinkKind; 8] = [
        LinkKind::Literal,
        LinkKind::Entry,
        LinkKind::Invoke,
        LinkKind::Return,
        LinkKind::Unbox,
        LinkKind::Assign,
        LinkKind::Deref,
        LinkKind::Extern,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LinkKind::Literal => "literal",
            LinkKind::Entry => "entry",
            LinkKind::Invoke => "invoke",
            LinkKind::Return => "return",
            LinkKind::Unbox => "unbox",
            LinkKind::Assign => "assign",
            LinkKind::Deref => "deref",
            LinkKind::Extern => "extern",
        }
    }

    /// One-letter mnemonic: L, E, I, R, U, A, D, X.
    pub fn letter(self) -> char {
        match self {
            LinkKind::Literal => 'L',
            LinkKind::Entry => 'E',
            LinkKind::Invoke => 'I',
            LinkKind::Return => 'R',
            LinkKind::Unbox => 'U',
            LinkKind::Assign => 'A',
            LinkKind::Deref => 'D',
            LinkKind::Extern => 'X',
        }
    }

    pub fn from_name(name: &str) -> Option<LinkKind> {
        LinkKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parses `literal,assign,deref` into kinds.
pub fn parse_kinds(text: &str) -> Option<Vec<LinkKind>> {
    text.trim().split(',').map(|k| LinkKind::from_name(k.trim())).collect()
}

pub fn format_kinds(kinds: &[LinkKind]) -> String {
    kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Parameter,
    Local,
    Field,
}

impl VariableKind {
    pub fn noun(self) -> &'static str {
        match self {
            VariableKind::Parameter => "parameter",
            VariableKind::Local => "variable",
            VariableKind::Field => "field",
        }
    }
}

/// One interpreter stack frame: `method` is `Class.method` or `Class.<init>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Frame {
    pub method: String,
    pub file: String,
    pub line: u32,
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}:{})", self.method, self.file, self.line)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalLink {
    pub kind: LinkKind,
    pub variable: Option<String>,
    pub variable_kind: Option<VariableKind>,
    pub expr_signature: Option<String>,
    pub location: Location,
    pub thread: String,
    /// Innermost frame first.
    pub stack: Vec<Frame>,
    /// Global creation order across all links of a run.
    pub seq: u64,
}

impl CausalLink {
    pub fn new(kind: LinkKind, location: Location) -> Self {
        CausalLink {
            kind,
            variable: None,
            variable_kind: None,
            expr_signature: None,
            location,
            thread: "main".to_string(),
            stack: Vec::new(),
            seq: 0,
        }
    }

    pub fn with_variable(mut self, name: impl Into<String>, kind: VariableKind) -> Self {
        self.variable = Some(name.into());
        self.variable_kind = Some(kind);
        self
    }

    pub fn with_signature(mut self, sig: impl Into<String>) -> Self {
        self.expr_signature = Some(sig.into());
        self
    }

    /// Whether this link sits on a call into or out of an external library.
    pub fn is_extern_boundary(&self) -> bool {
        self.expr_signature.as_deref().is_some_and(|s| s.starts_with("lib."))
    }

    /// Method of the innermost frame, if recorded.
    pub fn method(&self) -> Option<&str> {
        self.stack.first().map(|f| f.method.as_str())
    }
}

/// Temporally ordered links of one null. Links are only ever appended.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CausalityTrace {
    links: Vec<CausalLink>,
}

impl CausalityTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_links(links: Vec<CausalLink>) -> Self {
        CausalityTrace { links }
    }

    pub fn append_link(&mut self, link: CausalLink) {
        self.links.push(link);
    }

    /// Functional form of [`append_link`](Self::append_link).
    pub fn appended(mut self, link: CausalLink) -> Self {
        self.append_link(link);
        self
    }

    pub fn links(&self) -> &[CausalLink] {
        &self.links
    }

    pub fn kinds(&self) -> Vec<LinkKind> {
        self.links.iter().map(|l| l.kind).collect()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn last(&self) -> Option<&CausalLink> {
        self.links.last()
    }

    /// A lone dereference or unboxing with no recorded origin.
    pub fn is_symptom_only(&self) -> bool {
        matches!(self.links.as_slice(), [only] if matches!(only.kind, LinkKind::Deref | LinkKind::Unbox))
    }
}
