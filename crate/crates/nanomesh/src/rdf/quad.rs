use std::fmt;

use super::term::{Iri, Term};

/// One statement in a named graph.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Quad {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
    pub graph: Iri,
}

impl Quad {
    pub fn new(subject: Iri, predicate: Iri, object: impl Into<Term>, graph: Iri) -> Self {
        Quad {
            subject,
            predicate,
            object: object.into(),
            graph,
        }
    }
}

impl fmt::Debug for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", super::line::serialize_quad(self))
    }
}
