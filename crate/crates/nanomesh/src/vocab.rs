//! IRI constants and protocol-wide limits.

/// `rdf:type`.
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
/// Datatype of language-tagged strings.
pub const RDF_LANG_STRING: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#langString";
/// Default literal datatype; suppressed in serialized form.
pub const XSD_STRING: &str = "http://www.w3.org/2001/XMLSchema#string";

/// Class of well-formed nanopublications.
pub const NP_NANOPUBLICATION: &str = "http://www.nanopub.org/nschema#Nanopublication";
/// Head statement linking a nanopublication to its assertion graph.
pub const NP_HAS_ASSERTION: &str = "http://www.nanopub.org/nschema#hasAssertion";
/// Head statement linking a nanopublication to its provenance graph.
pub const NP_HAS_PROVENANCE: &str = "http://www.nanopub.org/nschema#hasProvenance";
/// Head statement linking a nanopublication to its publication-info graph.
pub const NP_HAS_PUBINFO: &str = "http://www.nanopub.org/nschema#hasPublicationInfo";

/// Class of complete index nanopublications.
pub const IDX_INDEX: &str = "http://nanomesh.dev/x/Index";
/// Class of index nodes that a later node appends to.
pub const IDX_INCOMPLETE_INDEX: &str = "http://nanomesh.dev/x/IncompleteIndex";
/// Assertion statement recording one member of an index.
pub const IDX_HAS_ELEMENT: &str = "http://nanomesh.dev/x/hasElement";
/// Assertion statement delegating members to another index.
pub const IDX_HAS_SUB_INDEX: &str = "http://nanomesh.dev/x/hasSubIndex";
/// Publication-info statement chaining an index node to its predecessor.
pub const IDX_APPENDS_TO: &str = "http://nanomesh.dev/x/appendsTo";

/// Title of an index, on the final node of a chain.
pub const DCT_TITLE: &str = "http://purl.org/dc/terms/title";
/// Creator of a nanopublication.
pub const DCT_CREATOR: &str = "http://purl.org/dc/terms/creator";
/// Agent the assertion is attributed to.
pub const PROV_WAS_ATTRIBUTED_TO: &str = "http://www.w3.org/ns/prov#wasAttributedTo";

/// Hard cap on quads in a single nanopublication.
pub const DEFAULT_MAX_QUADS: usize = 1200;
/// Maximum element plus sub-index references in one index node.
pub const MAX_REFS: usize = 1000;
/// Journal page length used by servers unless configured otherwise.
pub const DEFAULT_PAGE_SIZE: u64 = 1000;
/// Version line reported by the server info endpoint.
pub const PROTOCOL_VERSION: &str = "1.0";
