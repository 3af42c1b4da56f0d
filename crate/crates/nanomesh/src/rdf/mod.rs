//! Quad model and the two interchange formats.
//!
//! Terms are IRIs and literals only; blank nodes are rejected at parse time
//! because content addressing needs every document to have exactly one
//! spelling.

pub mod grouped;
pub mod line;
mod nanopub;
mod quad;
mod scan;
mod term;

pub use nanopub::{split_document, Nanopub, NanopubBuilder, StructureError};
pub use quad::Quad;
pub use scan::{ParseError, ParseErrorKind};
pub use term::{Iri, Literal, Term, TermError};

/// The two wire formats for quads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// One fully spelled-out statement per line. Canonical for storage and
    /// interchange.
    LineQuads,
    /// Graph-grouped blocks with optional prefixes; for human consumption.
    Grouped,
}

impl Format {
    pub fn media_type(self) -> &'static str {
        match self {
            Format::LineQuads => "text/plain; charset=utf-8",
            Format::Grouped => "application/trig",
        }
    }
}

pub fn parse(format: Format, input: &str) -> Result<Vec<Quad>, ParseError> {
    match format {
        Format::LineQuads => line::parse(input),
        Format::Grouped => grouped::parse(input),
    }
}

pub fn serialize(format: Format, quads: &[Quad]) -> String {
    match format {
        Format::LineQuads => line::serialize(quads),
        Format::Grouped => grouped::serialize(quads),
    }
}
