//! Assembly of quads into nanopublications and validation of their structure.

use std::collections::HashMap;

use super::quad::Quad;
use super::term::{Iri, Term};
use crate::vocab::{
    DEFAULT_MAX_QUADS, NP_HAS_ASSERTION, NP_HAS_PROVENANCE, NP_HAS_PUBINFO, NP_NANOPUBLICATION,
    RDF_TYPE,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructureError {
    #[error("no head graph found")]
    MissingHead,
    #[error("multiple head graphs found: {0:?}")]
    MultipleHeads(Vec<String>),
    #[error("invalid head graph: {0}")]
    InvalidHead(String),
    #[error("the four graph IRIs are not pairwise distinct")]
    GraphsNotDistinct,
    #[error("empty {0} graph")]
    EmptyGraph(&'static str),
    #[error("quad in foreign graph <{0}>")]
    ForeignGraph(String),
    #[error("nanopublication has {count} quads, cap is {cap}")]
    TooManyQuads { count: usize, cap: usize },
    #[error("graph <{0}> is claimed by more than one nanopublication")]
    OverlappingGraphs(String),
    #[error("quad in graph <{0}> does not belong to any nanopublication")]
    OrphanQuad(String),
}

/// A structurally valid nanopublication: a head graph with exactly the four
/// structural statements, plus non-empty assertion, provenance, and
/// publication-info graphs, within the quad cap. Quads keep document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nanopub {
    uri: Iri,
    head: Iri,
    assertion: Iri,
    provenance: Iri,
    pubinfo: Iri,
    quads: Vec<Quad>,
}

struct HeadInfo {
    uri: Iri,
    assertion: Iri,
    provenance: Iri,
    pubinfo: Iri,
}

impl Nanopub {
    /// Assembles quads that constitute exactly one nanopublication.
    pub fn from_quads(quads: Vec<Quad>) -> Result<Self, StructureError> {
        let heads = head_graph_candidates(&quads);
        let head = match heads.as_slice() {
            [] => return Err(StructureError::MissingHead),
            [one] => (*one).clone(),
            many => {
                return Err(StructureError::MultipleHeads(
                    many.iter().map(|g| g.as_str().to_owned()).collect(),
                ))
            }
        };
        let info = parse_head(&quads, &head)?;
        let mut assertion_n = 0usize;
        let mut provenance_n = 0usize;
        let mut pubinfo_n = 0usize;
        for quad in &quads {
            if quad.graph == head {
                continue;
            } else if quad.graph == info.assertion {
                assertion_n += 1;
            } else if quad.graph == info.provenance {
                provenance_n += 1;
            } else if quad.graph == info.pubinfo {
                pubinfo_n += 1;
            } else {
                return Err(StructureError::ForeignGraph(quad.graph.as_str().to_owned()));
            }
        }
        if assertion_n == 0 {
            return Err(StructureError::EmptyGraph("assertion"));
        }
        if provenance_n == 0 {
            return Err(StructureError::EmptyGraph("provenance"));
        }
        if pubinfo_n == 0 {
            return Err(StructureError::EmptyGraph("publication info"));
        }
        if quads.len() > DEFAULT_MAX_QUADS {
            return Err(StructureError::TooManyQuads {
                count: quads.len(),
                cap: DEFAULT_MAX_QUADS,
            });
        }
        Ok(Nanopub {
            uri: info.uri,
            head,
            assertion: info.assertion,
            provenance: info.provenance,
            pubinfo: info.pubinfo,
            quads,
        })
    }

    pub fn uri(&self) -> &Iri {
        &self.uri
    }

    pub fn head_graph(&self) -> &Iri {
        &self.head
    }

    pub fn assertion_graph(&self) -> &Iri {
        &self.assertion
    }

    pub fn provenance_graph(&self) -> &Iri {
        &self.provenance
    }

    pub fn pubinfo_graph(&self) -> &Iri {
        &self.pubinfo
    }

    /// All quads in document order.
    pub fn quads(&self) -> &[Quad] {
        &self.quads
    }

    /// Assertion-graph quads in document order.
    pub fn assertion_quads(&self) -> impl Iterator<Item = &Quad> {
        self.quads.iter().filter(|q| q.graph == self.assertion)
    }

    /// Publication-info quads in document order.
    pub fn pubinfo_quads(&self) -> impl Iterator<Item = &Quad> {
        self.quads.iter().filter(|q| q.graph == self.pubinfo)
    }

    /// Provenance-graph quads in document order.
    pub fn provenance_quads(&self) -> impl Iterator<Item = &Quad> {
        self.quads.iter().filter(|q| q.graph == self.provenance)
    }

    /// Serializes to the line-based format.
    pub fn to_line_quads(&self) -> String {
        super::line::serialize(&self.quads)
    }

    /// Starts a nanopublication under `uri`, with graphs named by appending
    /// `#head`, `#assertion`, `#provenance`, and `#pubinfo`. Intended for
    /// fragment-free base URIs that will go through the identifier transform.
    pub fn builder(uri: Iri) -> NanopubBuilder {
        let frag = |suffix: &str| {
            Iri::new(format!("{}{suffix}", uri.as_str())).expect("fragment of a valid IRI")
        };
        NanopubBuilder {
            head: frag("#head"),
            assertion: frag("#assertion"),
            provenance: frag("#provenance"),
            pubinfo: frag("#pubinfo"),
            uri,
            body: Vec::new(),
        }
    }
}

/// Accumulates content statements and emits a validated nanopublication.
pub struct NanopubBuilder {
    uri: Iri,
    head: Iri,
    assertion: Iri,
    provenance: Iri,
    pubinfo: Iri,
    body: Vec<Quad>,
}

impl NanopubBuilder {
    pub fn uri(&self) -> &Iri {
        &self.uri
    }

    pub fn assertion_graph(&self) -> &Iri {
        &self.assertion
    }

    pub fn assert(mut self, subject: Iri, predicate: Iri, object: impl Into<Term>) -> Self {
        let graph = self.assertion.clone();
        self.body.push(Quad::new(subject, predicate, object, graph));
        self
    }

    pub fn provenance(mut self, subject: Iri, predicate: Iri, object: impl Into<Term>) -> Self {
        let graph = self.provenance.clone();
        self.body.push(Quad::new(subject, predicate, object, graph));
        self
    }

    pub fn pubinfo(mut self, subject: Iri, predicate: Iri, object: impl Into<Term>) -> Self {
        let graph = self.pubinfo.clone();
        self.body.push(Quad::new(subject, predicate, object, graph));
        self
    }

    /// Head statements first, then content statements in insertion order.
    /// Fails if any content graph stayed empty or the cap is exceeded.
    pub fn build(self) -> Result<Nanopub, StructureError> {
        let iri = |s: &str| Iri::new(s).expect("constant IRI");
        let mut quads = vec![
            Quad::new(
                self.uri.clone(),
                iri(RDF_TYPE),
                iri(NP_NANOPUBLICATION),
                self.head.clone(),
            ),
            Quad::new(
                self.uri.clone(),
                iri(NP_HAS_ASSERTION),
                self.assertion.clone(),
                self.head.clone(),
            ),
            Quad::new(
                self.uri.clone(),
                iri(NP_HAS_PROVENANCE),
                self.provenance.clone(),
                self.head.clone(),
            ),
            Quad::new(
                self.uri.clone(),
                iri(NP_HAS_PUBINFO),
                self.pubinfo.clone(),
                self.head,
            ),
        ];
        quads.extend(self.body);
        Nanopub::from_quads(quads)
    }
}

/// Graphs containing a statement with the assertion-link predicate, in first
/// appearance order. Exactly one of these exists in a well-formed document
/// holding one nanopublication.
fn head_graph_candidates(quads: &[Quad]) -> Vec<&Iri> {
    let mut out: Vec<&Iri> = Vec::new();
    for quad in quads {
        if quad.predicate.as_str() == NP_HAS_ASSERTION && !out.contains(&&quad.graph) {
            out.push(&quad.graph);
        }
    }
    out
}

fn parse_head(quads: &[Quad], head: &Iri) -> Result<HeadInfo, StructureError> {
    let mut typed: Option<&Iri> = None;
    let mut assertion: Option<(&Iri, &Iri)> = None;
    let mut provenance: Option<(&Iri, &Iri)> = None;
    let mut pubinfo: Option<(&Iri, &Iri)> = None;
    let invalid = |msg: String| Err(StructureError::InvalidHead(msg));

    for quad in quads.iter().filter(|q| &q.graph == head) {
        let pred = quad.predicate.as_str();
        if pred == RDF_TYPE {
            match &quad.object {
                Term::Iri(class) if class.as_str() == NP_NANOPUBLICATION => {
                    if typed.replace(&quad.subject).is_some() {
                        return invalid("duplicate type statement".into());
                    }
                }
                _ => return invalid("unexpected type statement in head graph".into()),
            }
        } else if let Some(slot) = match pred {
            NP_HAS_ASSERTION => Some(&mut assertion),
            NP_HAS_PROVENANCE => Some(&mut provenance),
            NP_HAS_PUBINFO => Some(&mut pubinfo),
            _ => None,
        } {
            let Term::Iri(target) = &quad.object else {
                return invalid(format!("object of {pred} must be an IRI"));
            };
            if slot.replace((&quad.subject, target)).is_some() {
                return invalid(format!("duplicate {pred} statement"));
            }
        } else {
            return invalid(format!("unexpected statement with predicate <{pred}>"));
        }
    }

    let Some(subject) = typed else {
        return invalid("missing type statement".into());
    };
    let Some((s_a, assertion)) = assertion else {
        return invalid("missing assertion link".into());
    };
    let Some((s_p, provenance)) = provenance else {
        return invalid("missing provenance link".into());
    };
    let Some((s_i, pubinfo)) = pubinfo else {
        return invalid("missing publication-info link".into());
    };
    if !(subject == s_a && subject == s_p && subject == s_i) {
        return invalid("structural statements disagree on subject".into());
    }

    let graphs = [head, assertion, provenance, pubinfo];
    for (i, a) in graphs.iter().enumerate() {
        for b in &graphs[i + 1..] {
            if a == b {
                return Err(StructureError::GraphsNotDistinct);
            }
        }
    }

    Ok(HeadInfo {
        uri: subject.clone(),
        assertion: assertion.clone(),
        provenance: provenance.clone(),
        pubinfo: pubinfo.clone(),
    })
}

/// Splits a document holding any number of nanopublications. Order follows
/// each nanopublication's first quad. Every quad must belong to exactly one
/// nanopublication; each graph to at most one.
pub fn split_document(quads: Vec<Quad>) -> Result<Vec<Nanopub>, StructureError> {
    if quads.is_empty() {
        return Ok(Vec::new());
    }
    let heads: Vec<Iri> = head_graph_candidates(&quads)
        .into_iter()
        .cloned()
        .collect();
    if heads.is_empty() {
        return Err(StructureError::MissingHead);
    }
    let mut owner: HashMap<Iri, usize> = HashMap::new();
    for (idx, head) in heads.iter().enumerate() {
        let info = parse_head(&quads, head)?;
        for graph in [head, &info.assertion, &info.provenance, &info.pubinfo] {
            if owner.insert(graph.clone(), idx).is_some() {
                return Err(StructureError::OverlappingGraphs(
                    graph.as_str().to_owned(),
                ));
            }
        }
    }
    let mut parts: Vec<Vec<Quad>> = vec![Vec::new(); heads.len()];
    let mut first_seen: Vec<Option<usize>> = vec![None; heads.len()];
    for (pos, quad) in quads.into_iter().enumerate() {
        let Some(&idx) = owner.get(&quad.graph) else {
            return Err(StructureError::OrphanQuad(quad.graph.as_str().to_owned()));
        };
        first_seen[idx].get_or_insert(pos);
        parts[idx].push(quad);
    }
    let mut order: Vec<usize> = (0..heads.len()).collect();
    order.sort_by_key(|&idx| first_seen[idx].unwrap_or(usize::MAX));
    order
        .into_iter()
        .map(|idx| Nanopub::from_quads(std::mem::take(&mut parts[idx])))
        .collect()
}
