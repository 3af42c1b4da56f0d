//! Indexes: nanopublications whose assertion lists other nanopublications.
//!
//! A single index node holds at most [`MAX_REFS`](crate::vocab::MAX_REFS)
//! references, each either a direct element or a delegation to a sub-index.
//! Larger sets become append chains: each node appends to its predecessor,
//! every node but the last is typed incomplete, and the last node carries the
//! title and represents the whole set. Resolution expands predecessors before
//! a node's own entries, so chain order equals insertion order.

use std::collections::HashSet;

use sha2::{Digest, Sha256};

use crate::rdf::{Iri, Literal, Nanopub, Term};
use crate::trusty::{self, TrustyError, TrustyUri};
use crate::vocab::{
    DCT_TITLE, IDX_APPENDS_TO, IDX_HAS_ELEMENT, IDX_HAS_SUB_INDEX, IDX_INCOMPLETE_INDEX,
    IDX_INDEX, MAX_REFS, PROV_WAS_ATTRIBUTED_TO, RDF_TYPE,
};

/// Namespace that minted index nodes live under.
pub const INDEX_BASE: &str = "http://nanomesh.dev/index/";
/// Agent recorded in the provenance of minted index nodes.
pub const INDEX_AGENT: &str = "http://nanomesh.dev/agent/indexer";

#[derive(Debug, thiserror::Error)]
pub enum IndexError {
    #[error("<{0}> is not an index nanopublication")]
    NotAnIndex(String),
    #[error("index node <{uri}> is malformed: {detail}")]
    Malformed { uri: String, detail: String },
    #[error("index node has {count} references, cap is {MAX_REFS}")]
    TooManyRefs { count: usize },
    #[error("an index needs at least one member")]
    NoMembers,
    #[error("member <{0}> is not content-addressed")]
    MemberNotContentAddressed(String),
    #[error(transparent)]
    Trusty(#[from] TrustyError),
    #[error(transparent)]
    Structure(#[from] crate::rdf::StructureError),
    #[error("nanopublication <{0}> failed verification")]
    VerificationFailed(String),
    #[error("fetching <{uri}>: {source}")]
    Fetch {
        uri: String,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("fetched document has URI <{got}>, expected <{want}>")]
    WrongDocument { want: String, got: String },
}

/// One reference in an index node's assertion, in document order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexEntry {
    Element(Iri),
    SubIndex(Iri),
}

/// Parsed view of an index nanopublication.
#[derive(Debug, Clone)]
pub struct IndexNode {
    uri: Iri,
    entries: Vec<IndexEntry>,
    appends_to: Option<Iri>,
    title: Option<String>,
    incomplete: bool,
}

impl IndexNode {
    /// Parses and validates an index node. The publication info must type the
    /// nanopublication as an index; the assertion must contain only element
    /// and sub-index references, at most the cap.
    pub fn from_nanopub(np: &Nanopub) -> Result<Self, IndexError> {
        let uri = np.uri().clone();
        let malformed = |detail: String| IndexError::Malformed {
            uri: uri.as_str().to_owned(),
            detail,
        };

        let mut incomplete = None;
        let mut appends_to = None;
        let mut title = None;
        for quad in np.pubinfo_quads() {
            match quad.predicate.as_str() {
                RDF_TYPE if quad.subject == uri => {
                    let class = match &quad.object {
                        Term::Iri(class) if class.as_str() == IDX_INDEX => false,
                        Term::Iri(class) if class.as_str() == IDX_INCOMPLETE_INDEX => true,
                        _ => continue,
                    };
                    if incomplete.replace(class).is_some() {
                        return Err(malformed("more than one index type statement".into()));
                    }
                }
                IDX_APPENDS_TO if quad.subject == uri => {
                    let Term::Iri(target) = &quad.object else {
                        return Err(malformed("append target must be an IRI".into()));
                    };
                    if appends_to.replace(target.clone()).is_some() {
                        return Err(malformed("more than one append target".into()));
                    }
                }
                DCT_TITLE if quad.subject == uri => {
                    let Term::Literal(lit) = &quad.object else {
                        return Err(malformed("title must be a literal".into()));
                    };
                    if title.replace(lit.value().to_owned()).is_some() {
                        return Err(malformed("more than one title".into()));
                    }
                }
                _ => {}
            }
        }
        let Some(incomplete) = incomplete else {
            return Err(IndexError::NotAnIndex(uri.as_str().to_owned()));
        };

        let mut entries = Vec::new();
        for quad in np.assertion_quads() {
            if quad.subject != uri {
                return Err(malformed(format!(
                    "assertion statement about foreign subject <{}>",
                    quad.subject
                )));
            }
            let entry = match quad.predicate.as_str() {
                IDX_HAS_ELEMENT => IndexEntry::Element,
                IDX_HAS_SUB_INDEX => IndexEntry::SubIndex,
                other => {
                    return Err(malformed(format!(
                        "unexpected assertion predicate <{other}>"
                    )))
                }
            };
            let Term::Iri(target) = &quad.object else {
                return Err(malformed("reference target must be an IRI".into()));
            };
            entries.push(entry(target.clone()));
        }
        if entries.len() > MAX_REFS {
            return Err(IndexError::TooManyRefs {
                count: entries.len(),
            });
        }

        Ok(IndexNode {
            uri,
            entries,
            appends_to,
            title,
            incomplete,
        })
    }

    /// Cheap check whether a nanopublication is typed as an index.
    pub fn is_index(np: &Nanopub) -> bool {
        np.pubinfo_quads().any(|quad| {
            quad.predicate.as_str() == RDF_TYPE
                && quad.subject == *np.uri()
                && matches!(
                    &quad.object,
                    Term::Iri(c) if c.as_str() == IDX_INDEX || c.as_str() == IDX_INCOMPLETE_INDEX
                )
        })
    }

    pub fn uri(&self) -> &Iri {
        &self.uri
    }

    pub fn entries(&self) -> &[IndexEntry] {
        &self.entries
    }

    pub fn elements(&self) -> impl Iterator<Item = &Iri> {
        self.entries.iter().filter_map(|e| match e {
            IndexEntry::Element(iri) => Some(iri),
            IndexEntry::SubIndex(_) => None,
        })
    }

    pub fn sub_indexes(&self) -> impl Iterator<Item = &Iri> {
        self.entries.iter().filter_map(|e| match e {
            IndexEntry::SubIndex(iri) => Some(iri),
            IndexEntry::Element(_) => None,
        })
    }

    pub fn appends_to(&self) -> Option<&Iri> {
        self.appends_to.as_ref()
    }

    pub fn title(&self) -> Option<&str> {
        self.title.as_deref()
    }

    pub fn is_incomplete(&self) -> bool {
        self.incomplete
    }
}

/// Builds one index node. For sets above the per-node cap use
/// [`build_index_chain`].
pub struct IndexBuilder {
    base: Option<String>,
    title: Option<String>,
    entries: Vec<IndexEntry>,
    appends_to: Option<Iri>,
    incomplete: bool,
    agent: String,
}

impl IndexBuilder {
    pub fn new() -> Self {
        IndexBuilder {
            base: None,
            title: None,
            entries: Vec::new(),
            appends_to: None,
            incomplete: false,
            agent: INDEX_AGENT.to_owned(),
        }
    }

    /// Overrides the minted base URI; must end with '#', '/', or '.'.
    pub fn base(mut self, base: impl Into<String>) -> Self {
        self.base = Some(base.into());
        self
    }

    pub fn title(mut self, title: impl Into<String>) -> Self {
        self.title = Some(title.into());
        self
    }

    pub fn element(mut self, uri: Iri) -> Self {
        self.entries.push(IndexEntry::Element(uri));
        self
    }

    pub fn sub_index(mut self, uri: Iri) -> Self {
        self.entries.push(IndexEntry::SubIndex(uri));
        self
    }

    pub fn appends_to(mut self, uri: Iri) -> Self {
        self.appends_to = Some(uri);
        self
    }

    pub fn incomplete(mut self, incomplete: bool) -> Self {
        self.incomplete = incomplete;
        self
    }

    pub fn attributed_to(mut self, agent: impl Into<String>) -> Self {
        self.agent = agent.into();
        self
    }

    /// Mints the node and applies the identifier transform.
    pub fn build(self) -> Result<Nanopub, IndexError> {
        if self.entries.is_empty() {
            return Err(IndexError::NoMembers);
        }
        if self.entries.len() > MAX_REFS {
            return Err(IndexError::TooManyRefs {
                count: self.entries.len(),
            });
        }
        for entry in &self.entries {
            let (IndexEntry::Element(uri) | IndexEntry::SubIndex(uri)) = entry;
            if TrustyUri::parse(uri.as_str()).is_err() {
                return Err(IndexError::MemberNotContentAddressed(
                    uri.as_str().to_owned(),
                ));
            }
        }
        let base = match &self.base {
            Some(base) => base.clone(),
            None => format!("{INDEX_BASE}{}/", content_tag(&self.entries, &self.title)),
        };
        let iri = |s: &str| Iri::new(s).expect("constant IRI");
        let uri = Iri::new(base).map_err(TrustyError::from)?;

        let mut builder = Nanopub::builder(uri.clone());
        let assertion_graph = builder.assertion_graph().clone();
        for entry in &self.entries {
            builder = match entry {
                IndexEntry::Element(target) => {
                    builder.assert(uri.clone(), iri(IDX_HAS_ELEMENT), target.clone())
                }
                IndexEntry::SubIndex(target) => {
                    builder.assert(uri.clone(), iri(IDX_HAS_SUB_INDEX), target.clone())
                }
            };
        }
        builder = builder.provenance(
            assertion_graph,
            iri(PROV_WAS_ATTRIBUTED_TO),
            Iri::new(self.agent.clone()).map_err(TrustyError::from)?,
        );
        let class = if self.incomplete {
            IDX_INCOMPLETE_INDEX
        } else {
            IDX_INDEX
        };
        builder = builder.pubinfo(uri.clone(), iri(RDF_TYPE), iri(class));
        if let Some(target) = &self.appends_to {
            builder = builder.pubinfo(uri.clone(), iri(IDX_APPENDS_TO), target.clone());
        }
        if let Some(title) = &self.title {
            let lit = Literal::string(title.clone()).map_err(TrustyError::from)?;
            builder = builder.pubinfo(uri.clone(), iri(DCT_TITLE), lit);
        }
        let np = builder.build()?;
        Ok(trusty::make_trusty(&np)?)
    }
}

impl Default for IndexBuilder {
    fn default() -> Self {
        Self::new()
    }
}

/// Tag tying a minted node's namespace to its content, so distinct indexes
/// get distinct bases and rebuilding the same index is deterministic.
fn content_tag(entries: &[IndexEntry], title: &Option<String>) -> String {
    let mut hasher = Sha256::new();
    for entry in entries {
        let (IndexEntry::Element(uri) | IndexEntry::SubIndex(uri)) = entry;
        hasher.update(uri.as_str().as_bytes());
        hasher.update(b"\n");
    }
    hasher.update(b"\0");
    if let Some(title) = title {
        hasher.update(title.as_bytes());
    }
    let digest = hasher.finalize();
    digest[..6].iter().map(|b| format!("{b:02x}")).collect()
}

/// Builds the chain of index nodes covering `members` in order: one node per
/// cap-sized chunk, each appending to the one before, only the last complete
/// and titled. Duplicate members are dropped, keeping the first occurrence.
/// Returns the nodes in chain order; the last one identifies the index.
pub fn build_index_chain(
    members: &[Iri],
    title: Option<&str>,
) -> Result<Vec<Nanopub>, IndexError> {
    let mut seen = HashSet::new();
    let members: Vec<Iri> = members
        .iter()
        .filter(|m| seen.insert((*m).clone()))
        .cloned()
        .collect();
    if members.is_empty() {
        return Err(IndexError::NoMembers);
    }
    let tag = {
        let entries: Vec<IndexEntry> = members
            .iter()
            .map(|m| IndexEntry::Element(m.clone()))
            .collect();
        content_tag(&entries, &title.map(str::to_owned))
    };
    let chunks: Vec<&[Iri]> = members.chunks(MAX_REFS).collect();
    let mut nodes: Vec<Nanopub> = Vec::with_capacity(chunks.len());
    for (k, chunk) in chunks.iter().enumerate() {
        let last = k + 1 == chunks.len();
        let mut builder = IndexBuilder::new()
            .base(format!("{INDEX_BASE}{tag}/{}/", k + 1))
            .incomplete(!last);
        for member in *chunk {
            builder = builder.element(member.clone());
        }
        if let Some(prev) = nodes.last() {
            builder = builder.appends_to(prev.uri().clone());
        }
        if last {
            if let Some(title) = title {
                builder = builder.title(title);
            }
        }
        nodes.push(builder.build()?);
    }
    Ok(nodes)
}

/// Builds an index over already content-addressed nanopublications.
pub fn build_index_from_nanopubs(
    nanopubs: &[Nanopub],
    title: Option<&str>,
) -> Result<Vec<Nanopub>, IndexError> {
    let members: Vec<Iri> = nanopubs.iter().map(|np| np.uri().clone()).collect();
    build_index_chain(&members, title)
}

/// Result of expanding an index to its member set.
#[derive(Debug, Clone)]
pub struct ResolvedSet {
    /// Member URIs in first-appearance order.
    pub members: Vec<Iri>,
    /// Index nodes visited, in traversal order.
    pub visited: Vec<Iri>,
    /// Number of references to nodes that had already been visited. Nonzero
    /// for cyclic or diamond-shaped reference structures; traversal always
    /// terminates.
    pub revisits: usize,
}

struct ResolveState<F> {
    fetch: F,
    members: Vec<Iri>,
    member_set: HashSet<Iri>,
    visited: Vec<Iri>,
    visited_set: HashSet<Iri>,
    revisits: usize,
}

/// Expands an index into its full member set by fetching every node through
/// `fetch`. Every fetched nanopublication is verified before use; a
/// verification failure aborts resolution.
///
/// Order: a node's append chain contributes first (oldest node first), then
/// its own entries in document order, sub-indexes expanded in place.
pub fn resolve_index<F>(root: &Iri, fetch: F) -> Result<ResolvedSet, IndexError>
where
    F: FnMut(&Iri) -> Result<Nanopub, Box<dyn std::error::Error + Send + Sync>>,
{
    let mut state = ResolveState {
        fetch,
        members: Vec::new(),
        member_set: HashSet::new(),
        visited: Vec::new(),
        visited_set: HashSet::new(),
        revisits: 0,
    };
    visit(root, &mut state)?;
    Ok(ResolvedSet {
        members: state.members,
        visited: state.visited,
        revisits: state.revisits,
    })
}

fn visit<F>(root: &Iri, state: &mut ResolveState<F>) -> Result<(), IndexError>
where
    F: FnMut(&Iri) -> Result<Nanopub, Box<dyn std::error::Error + Send + Sync>>,
{
    // Walk the append chain iteratively; chains can be long.
    let mut chain: Vec<IndexNode> = Vec::new();
    let mut cursor = Some(root.clone());
    while let Some(uri) = cursor {
        if !state.visited_set.insert(uri.clone()) {
            state.revisits += 1;
            break;
        }
        state.visited.push(uri.clone());
        let np = (state.fetch)(&uri).map_err(|source| IndexError::Fetch {
            uri: uri.as_str().to_owned(),
            source,
        })?;
        if np.uri() != &uri {
            return Err(IndexError::WrongDocument {
                want: uri.as_str().to_owned(),
                got: np.uri().as_str().to_owned(),
            });
        }
        if !trusty::verify(&np)? {
            return Err(IndexError::VerificationFailed(uri.as_str().to_owned()));
        }
        let node = IndexNode::from_nanopub(&np)?;
        cursor = node.appends_to().cloned();
        chain.push(node);
    }
    for node in chain.iter().rev() {
        for entry in node.entries() {
            match entry {
                IndexEntry::Element(member) => {
                    if state.member_set.insert(member.clone()) {
                        state.members.push(member.clone());
                    }
                }
                IndexEntry::SubIndex(sub) => visit(sub, state)?,
            }
        }
    }
    Ok(())
}
