use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use crate::lang::{INT_BOX, NULL_GHOST, OBJECT};
use crate::trace::{CausalLink, CausalityTrace, NPEReport};

/// A heap object. `id` is its creation index, used for deterministic printing.
#[derive(Debug)]
pub struct Obj {
    pub class: String,
    pub id: u64,
    pub fields: RefCell<HashMap<String, Value>>,
    /// Report carried by a caught null pointer exception.
    pub report: RefCell<Option<NPEReport>>,
}

#[derive(Debug)]
pub struct BoxObj {
    pub id: u64,
    /// `None` models a box that hides a missing integer.
    pub value: Option<i64>,
}

/// A value that behaves as null but remembers where it has been.
#[derive(Debug)]
pub struct Ghost {
    pub haunted: String,
    trace: RefCell<CausalityTrace>,
}

impl Ghost {
    pub fn new(haunted: impl Into<String>) -> Self {
        Ghost { haunted: haunted.into(), trace: RefCell::new(CausalityTrace::new()) }
    }

    pub fn append(&self, link: CausalLink) {
        self.trace.borrow_mut().append_link(link);
    }

    pub fn trace(&self) -> CausalityTrace {
        self.trace.borrow().clone()
    }

    pub fn trace_len(&self) -> usize {
        self.trace.borrow().len()
    }
}

#[derive(Debug, Clone)]
pub enum Value {
    Object(Rc<Obj>),
    IntBox(Rc<BoxObj>),
    Int(i64),
    Bool(bool),
    Null,
    Ghost(Rc<Ghost>),
}

impl Value {
    pub fn is_null_like(&self) -> bool {
        matches!(self, Value::Null | Value::Ghost(_))
    }

    pub fn is_ghost(&self) -> bool {
        matches!(self, Value::Ghost(_))
    }

    /// Reference identity for references, value equality for primitives.
    pub fn same(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Int(a), Value::Int(b)) => a == b,
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Null, Value::Null) => true,
            (Value::Object(a), Value::Object(b)) => Rc::ptr_eq(a, b),
            (Value::IntBox(a), Value::IntBox(b)) => Rc::ptr_eq(a, b),
            (Value::Ghost(a), Value::Ghost(b)) => Rc::ptr_eq(a, b),
            _ => false,
        }
    }

    /// Runtime class for `instanceof`. A ghost answers with the class it haunts.
    pub fn runtime_class(&self) -> Option<&str> {
        match self {
            Value::Object(o) => Some(&o.class),
            Value::IntBox(_) => Some(INT_BOX),
            Value::Ghost(g) => Some(&g.haunted),
            _ => None,
        }
    }

    /// Raw `instanceof`, given a subclass test over class names.
    pub fn instance_of(&self, class: &str, is_subclass: impl Fn(&str, &str) -> bool) -> bool {
        match self {
            Value::Ghost(_) if class == NULL_GHOST => true,
            Value::Null | Value::Int(_) | Value::Bool(_) => false,
            _ if class == NULL_GHOST => false,
            other => {
                let rc = other.runtime_class().unwrap_or(OBJECT);
                class == OBJECT || is_subclass(rc, class)
            }
        }
    }
}

/// Rendering shared by `print` and the event log. Ghosts print as `null`.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Object(o) => write!(f, "<{}@{}>", o.class, o.id),
            Value::IntBox(b) => match b.value {
                Some(v) => write!(f, "{v}"),
                None => f.write_str("null"),
            },
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::Null | Value::Ghost(_) => f.write_str("null"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghosts_render_as_null_and_answer_the_marker() {
        let g = Value::Ghost(Rc::new(Ghost::new("A")));
        assert_eq!(g.to_string(), "null");
        assert!(g.instance_of(NULL_GHOST, |_, _| false));
        assert!(g.instance_of("A", |a, b| a == b));
        assert!(!Value::Null.instance_of("A", |_, _| true));
    }

    #[test]
    fn identity_is_per_reference() {
        let a = Rc::new(Ghost::new("A"));
        let b = Rc::new(Ghost::new("A"));
        assert!(Value::Ghost(a.clone()).same(&Value::Ghost(a)));
        assert!(!Value::Ghost(b).same(&Value::Null));
    }
}
