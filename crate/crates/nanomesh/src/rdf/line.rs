//! Line-oriented quad format: one statement per line, ` .` terminated, all
//! terms spelled out. This is the canonical interchange and storage format,
//! so serialization is byte-deterministic for a given quad sequence.

use super::quad::Quad;
use super::scan::{escape_literal, Cursor, ParseError};
use super::term::{Literal, Term};
use crate::vocab::XSD_STRING;

/// Parses a whole document. Blank lines and lines starting with `#` are
/// skipped; anything else must be a complete statement.
pub fn parse(input: &str) -> Result<Vec<Quad>, ParseError> {
    let mut quads = Vec::new();
    for (idx, raw) in input.split('\n').enumerate() {
        let trimmed = raw.trim_start_matches([' ', '\t']);
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        quads.push(parse_statement(raw, idx + 1)?);
    }
    Ok(quads)
}

fn parse_statement(line: &str, line_no: usize) -> Result<Quad, ParseError> {
    let mut cur = Cursor::with_line(line, line_no);
    cur.skip_inline_ws();
    cur.check_blank_node()?;
    let subject = cur.scan_iri()?;
    cur.skip_inline_ws();
    let predicate = cur.scan_iri()?;
    cur.skip_inline_ws();
    cur.check_blank_node()?;
    let object: Term = match cur.peek() {
        Some('"') => cur.scan_literal()?.into(),
        _ => cur.scan_iri()?.into(),
    };
    cur.skip_inline_ws();
    cur.check_blank_node()?;
    let graph = cur.scan_iri()?;
    cur.skip_inline_ws();
    cur.expect('.')?;
    cur.skip_inline_ws();
    if !cur.eof() {
        return Err(cur.syntax("unexpected content after statement terminator"));
    }
    Ok(Quad {
        subject,
        predicate,
        object,
        graph,
    })
}

/// Serializes quads in order, one line each, with a trailing newline.
pub fn serialize(quads: &[Quad]) -> String {
    let mut out = String::new();
    for quad in quads {
        write_quad(quad, &mut out);
        out.push('\n');
    }
    out
}

pub fn serialize_quad(quad: &Quad) -> String {
    let mut out = String::new();
    write_quad(quad, &mut out);
    out
}

fn write_quad(quad: &Quad, out: &mut String) {
    write_iri(quad.subject.as_str(), out);
    out.push(' ');
    write_iri(quad.predicate.as_str(), out);
    out.push(' ');
    write_term(&quad.object, out);
    out.push(' ');
    write_iri(quad.graph.as_str(), out);
    out.push_str(" .");
}

fn write_iri(value: &str, out: &mut String) {
    out.push('<');
    out.push_str(value);
    out.push('>');
}

pub(crate) fn write_literal(lit: &Literal, out: &mut String) {
    out.push('"');
    escape_literal(lit.value(), out);
    out.push('"');
    if let Some(tag) = lit.language() {
        out.push('@');
        out.push_str(tag);
    } else if lit.datatype().as_str() != XSD_STRING {
        out.push_str("^^");
        write_iri(lit.datatype().as_str(), out);
    }
}

pub(crate) fn write_term(term: &Term, out: &mut String) {
    match term {
        Term::Iri(iri) => write_iri(iri.as_str(), out),
        Term::Literal(lit) => write_literal(lit, out),
    }
}
