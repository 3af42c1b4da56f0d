//! Experiment harness: deterministic corpus generation, multi-process
//! server orchestration, and the replication and load experiments.

pub mod corpus;
pub mod load;
pub mod procs;
pub mod replicate;

pub use corpus::{gen_corpus, write_corpus_file};
pub use load::{run_load_experiment, LoadMetrics, LoadPlan};
pub use replicate::{run_replication_experiment, ReplicatePlan, ReplicationMetrics};
