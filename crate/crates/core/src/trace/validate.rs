use std::fmt;

use super::link::{CausalityTrace, LinkKind};

/// Trace-shape property a trace can violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    /// The trace has no links at all.
    NonEmpty,
    /// The first link must be a null literal, or a return/entry at an
    /// external-library boundary.
    Origin,
    /// External-call links may only occur at external call sites.
    ExternSite,
    /// A return or entry at a library boundary creates a null, so it can only
    /// be the first link.
    BoundaryRoot,
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::NonEmpty => "non-empty",
            Property::Origin => "origin",
            Property::ExternSite => "extern-site",
            Property::BoundaryRoot => "boundary-root",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("trace violates {property} property at link {index}: {message}")]
pub struct ValidationFailure {
    pub property: Property,
    pub index: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    /// A single dereference or unboxing of a null that never passed an
    /// instrumented site. Accepted, but carries no root cause.
    SymptomOnly,
}

pub fn validate(trace: &CausalityTrace) -> Result<Verdict, ValidationFailure> {
    let links = trace.links();
    let first = match links.first() {
        Some(first) => first,
        None => {
            return Err(ValidationFailure { property: Property::NonEmpty, index: 0, message: "empty trace".into() })
        }
    };
    if trace.is_symptom_only() {
        return Ok(Verdict::SymptomOnly);
    }
    let origin = match first.kind {
        LinkKind::Literal => true,
        LinkKind::Return | LinkKind::Entry => first.is_extern_boundary(),
        _ => false,
    };
    if !origin {
        return Err(ValidationFailure {
            property: Property::Origin,
            index: 0,
            message: format!("trace starts with {} outside a library boundary", first.kind),
        });
    }
    for (index, link) in links.iter().enumerate() {
        if link.kind == LinkKind::Extern && !link.is_extern_boundary() {
            return Err(ValidationFailure {
                property: Property::ExternSite,
                index,
                message: "external-call link without an external signature".into(),
            });
        }
        let boundary_origin = matches!(link.kind, LinkKind::Return | LinkKind::Entry) && link.is_extern_boundary();
        if index > 0 && boundary_origin {
            return Err(ValidationFailure {
                property: Property::BoundaryRoot,
                index,
                message: format!("{} at a library boundary after the null already existed", link.kind),
            });
        }
    }
    Ok(Verdict::Valid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::Location;
    use crate::trace::CausalLink;

    fn trace(kinds: &[(LinkKind, Option<&str>)]) -> CausalityTrace {
        CausalityTrace::from_links(
            kinds
                .iter()
                .map(|(k, sig)| {
                    let link = CausalLink::new(*k, Location::new("t.mini", 1));
                    match sig {
                        Some(s) => link.with_signature(*s),
                        None => link,
                    }
                })
                .collect(),
        )
    }

    #[test]
    fn literal_assign_deref_is_valid() {
        let t = trace(&[(LinkKind::Literal, None), (LinkKind::Assign, None), (LinkKind::Deref, None)]);
        assert_eq!(validate(&t), Ok(Verdict::Valid));
    }

    #[test]
    fn assign_first_is_rejected() {
        let t = trace(&[(LinkKind::Assign, None), (LinkKind::Deref, None)]);
        assert_eq!(validate(&t).unwrap_err().property, Property::Origin);
    }

    #[test]
    fn extern_return_may_start_a_trace() {
        let t = trace(&[(LinkKind::Return, Some("lib.find()")), (LinkKind::Assign, None), (LinkKind::Deref, None)]);
        assert_eq!(validate(&t), Ok(Verdict::Valid));
    }

    #[test]
    fn extern_return_in_the_middle_is_rejected() {
        let t = trace(&[(LinkKind::Literal, None), (LinkKind::Return, Some("lib.find()")), (LinkKind::Deref, None)]);
        assert_eq!(validate(&t).unwrap_err().property, Property::BoundaryRoot);
    }

    #[test]
    fn extern_link_needs_library_signature() {
        let t = trace(&[(LinkKind::Literal, None), (LinkKind::Extern, Some("A.m()"))]);
        assert_eq!(validate(&t).unwrap_err().property, Property::ExternSite);
    }

    #[test]
    fn lone_deref_is_symptom_only() {
        assert_eq!(validate(&trace(&[(LinkKind::Deref, None)])), Ok(Verdict::SymptomOnly));
        assert!(validate(&CausalityTrace::new()).is_err());
    }
}
