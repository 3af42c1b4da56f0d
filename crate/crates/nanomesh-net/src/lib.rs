//! Network layer: HTTP server, pull replicator, CLI, monitor, and the
//! experiment harness, all speaking the wire protocol defined by the
//! `nanomesh` core crate's formats.

pub mod client;
pub mod cli;
pub mod harness;
pub mod monitor;
pub mod replicator;
pub mod server;

/// Guide chapters about the networked surface run as doc-tests here;
/// the core-format chapters are bound in the `nanomesh` crate.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/replication.md")]
    mod replication {}
    #[doc = include_str!("../../../book/src/tools.md")]
    mod tools {}
}
