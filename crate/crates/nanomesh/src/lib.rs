//! Core model for a mesh of nanopublication servers.
//!
//! A nanopublication is a small RDF dataset of four named graphs: a head
//! that declares the other three, an assertion, its provenance, and
//! publication info. Its URI ends in an artifact code derived from a hash
//! over the canonical form of its own content, so holding a reference means
//! being able to verify the referenced artifact byte for byte. Indexes are
//! nanopublications whose assertion lists other nanopublications, giving the
//! same guarantee for whole collections. The store appends verified
//! nanopublications to a journal whose pages replicate between servers.
//!
//! This crate holds the data model and algorithms; serving, replication, and
//! the command-line tools live in `nanomesh-net`. The `book/` directory of
//! the repository walks through each concept with runnable examples.
//!
//! ```
//! use nanomesh::rdf::{Iri, Literal, Nanopub};
//! use nanomesh::trusty;
//!
//! let base = Iri::new("http://example.org/greeting/").unwrap();
//! let np = Nanopub::builder(base.clone())
//!     .assert(
//!         Iri::new("http://example.org/world").unwrap(),
//!         Iri::new("http://example.org/greeted-with").unwrap(),
//!         Literal::string("hello").unwrap(),
//!     )
//!     .provenance(
//!         Iri::new("http://example.org/greeting/#assertion").unwrap(),
//!         Iri::new("http://www.w3.org/ns/prov#wasAttributedTo").unwrap(),
//!         Iri::new("http://example.org/alice").unwrap(),
//!     )
//!     .pubinfo(
//!         base,
//!         Iri::new("http://purl.org/dc/terms/creator").unwrap(),
//!         Iri::new("http://example.org/alice").unwrap(),
//!     )
//!     .build()
//!     .unwrap();
//!
//! let trusty = trusty::make_trusty(&np).unwrap();
//! assert_eq!(trusty::verify(&trusty), Ok(true));
//! assert!(trusty.uri().as_str().starts_with("http://example.org/greeting/RA"));
//! ```

pub mod config;
pub mod index;
pub mod rdf;
pub mod store;
pub mod trusty;
pub mod vocab;

/// The guide's code blocks run as doc-tests so the book can never drift
/// from the library. Chapters about the networked surface are bound in
/// `nanomesh-net` the same way.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/nanopublications.md")]
    mod nanopublications {}
    #[doc = include_str!("../../../book/src/artifact-codes.md")]
    mod artifact_codes {}
    #[doc = include_str!("../../../book/src/indexes.md")]
    mod indexes {}
    #[doc = include_str!("../../../book/src/storage.md")]
    mod storage {}
}
