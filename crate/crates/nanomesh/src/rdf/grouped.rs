//! Graph-grouped format: a readable TriG subset. Graph blocks wrap triples in
//! braces; `@prefix` declarations and the `a` keyword are accepted on input.
//! Output is always fully spelled out, one block per graph in first-appearance
//! order, so parsing it back yields the same quads grouped by graph.

use std::collections::HashMap;

use super::quad::Quad;
use super::scan::{Cursor, ParseError, ParseErrorKind};
use super::term::{Iri, Term};
use crate::vocab::RDF_TYPE;

pub fn parse(input: &str) -> Result<Vec<Quad>, ParseError> {
    let mut cur = Cursor::new(input);
    let mut prefixes: HashMap<String, String> = HashMap::new();
    let mut quads = Vec::new();
    loop {
        cur.skip_ws_and_comments();
        if cur.eof() {
            return Ok(quads);
        }
        if cur.starts_with("@prefix") {
            parse_prefix(&mut cur, &mut prefixes)?;
            continue;
        }
        parse_graph_block(&mut cur, &prefixes, &mut quads)?;
    }
}

fn parse_prefix(
    cur: &mut Cursor<'_>,
    prefixes: &mut HashMap<String, String>,
) -> Result<(), ParseError> {
    for _ in 0.."@prefix".len() {
        cur.bump();
    }
    cur.skip_ws_and_comments();
    let name = scan_prefix_name(cur)?;
    cur.expect(':')?;
    cur.skip_ws_and_comments();
    let target = cur.scan_iri()?;
    cur.skip_ws_and_comments();
    cur.expect('.')?;
    prefixes.insert(name, target.into_string());
    Ok(())
}

fn scan_prefix_name(cur: &mut Cursor<'_>) -> Result<String, ParseError> {
    let mut name = String::new();
    while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || matches!(c, '_' | '-')) {
        name.push(cur.bump().unwrap());
    }
    Ok(name)
}

fn parse_graph_block(
    cur: &mut Cursor<'_>,
    prefixes: &HashMap<String, String>,
    quads: &mut Vec<Quad>,
) -> Result<(), ParseError> {
    let graph = scan_iri_term(cur, prefixes)?;
    cur.skip_ws_and_comments();
    cur.expect('{')?;
    loop {
        cur.skip_ws_and_comments();
        if matches!(cur.peek(), Some('}')) {
            cur.bump();
            return Ok(());
        }
        if cur.eof() {
            return Err(cur.syntax("unterminated graph block"));
        }
        let subject = scan_iri_term(cur, prefixes)?;
        cur.skip_ws_and_comments();
        let predicate = scan_predicate(cur, prefixes)?;
        cur.skip_ws_and_comments();
        cur.check_blank_node()?;
        let object: Term = match cur.peek() {
            Some('"') => cur.scan_literal()?.into(),
            _ => scan_iri_term(cur, prefixes)?.into(),
        };
        cur.skip_ws_and_comments();
        match cur.peek() {
            Some('.') => {
                cur.bump();
            }
            Some(';' | ',') => {
                return Err(cur.syntax(
                    "predicate and object lists are not supported; write one full triple per statement",
                ));
            }
            _ => return Err(cur.syntax("expected '.' after triple")),
        }
        quads.push(Quad {
            subject,
            predicate,
            object,
            graph: graph.clone(),
        });
    }
}

fn scan_predicate(
    cur: &mut Cursor<'_>,
    prefixes: &HashMap<String, String>,
) -> Result<Iri, ParseError> {
    // Bare `a` abbreviates the type predicate, as in TriG.
    if matches!(cur.peek(), Some('a')) {
        let rest = cur.remaining();
        if rest.len() == 1 || rest[1..].starts_with([' ', '\t', '\n', '\r', '<']) {
            cur.bump();
            return Ok(Iri::new(RDF_TYPE).expect("constant IRI"));
        }
    }
    scan_iri_term(cur, prefixes)
}

fn scan_iri_term(
    cur: &mut Cursor<'_>,
    prefixes: &HashMap<String, String>,
) -> Result<Iri, ParseError> {
    cur.check_blank_node()?;
    match cur.peek() {
        Some('<') => cur.scan_iri(),
        Some(c) if c.is_ascii_alphanumeric() || c == '_' || c == ':' => {
            scan_prefixed(cur, prefixes)
        }
        Some(c) => Err(cur.syntax(format!("expected IRI or prefixed name, found {c:?}"))),
        None => Err(cur.syntax("expected IRI, found end of input")),
    }
}

fn scan_prefixed(
    cur: &mut Cursor<'_>,
    prefixes: &HashMap<String, String>,
) -> Result<Iri, ParseError> {
    let start_line = cur.line();
    let start_col = cur.col();
    let prefix = scan_prefix_name(cur)?;
    cur.expect(':')?;
    let mut local = String::new();
    while matches!(cur.peek(), Some(c) if c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '%' | '~')) {
        local.push(cur.bump().unwrap());
    }
    // A trailing dot terminates the statement rather than the name.
    while local.ends_with('.') {
        local.pop();
        cur.unbump_ascii();
    }
    let Some(base) = prefixes.get(&prefix) else {
        return Err(ParseError {
            line: start_line,
            column: start_col,
            kind: ParseErrorKind::UnknownPrefix(prefix),
        });
    };
    Iri::new(format!("{base}{local}")).map_err(|e| ParseError {
        line: start_line,
        column: start_col,
        kind: ParseErrorKind::Term(e),
    })
}

/// Serializes quads grouped by graph, graphs in first-appearance order,
/// statements in input order within each graph.
pub fn serialize(quads: &[Quad]) -> String {
    let mut order: Vec<&Iri> = Vec::new();
    let mut groups: HashMap<&Iri, Vec<&Quad>> = HashMap::new();
    for quad in quads {
        groups.entry(&quad.graph).or_insert_with(|| {
            order.push(&quad.graph);
            Vec::new()
        });
        groups.get_mut(&quad.graph).unwrap().push(quad);
    }
    let mut out = String::new();
    for (i, graph) in order.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push('<');
        out.push_str(graph.as_str());
        out.push_str("> {\n");
        for quad in &groups[*graph] {
            out.push_str("  <");
            out.push_str(quad.subject.as_str());
            out.push_str("> <");
            out.push_str(quad.predicate.as_str());
            out.push_str("> ");
            super::line::write_term(&quad.object, &mut out);
            out.push_str(" .\n");
        }
        out.push_str("}\n");
    }
    out
}
