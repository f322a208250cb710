//! Corpus construction, compile-and-repair generation and evaluation for
//! caption-conditioned TikZ figures.
//!
//! Shared record types live in [`records`] and are re-exported at the crate
//! root together with the most used entry points of each module.

pub mod analysis;
pub mod augment;
pub mod bws;
pub mod compiler;
pub mod config;
pub mod corpus;
pub mod metrics;
pub mod records;
pub mod repair;
pub mod softprompt;

pub use compiler::{Compile, CompileReport, Diagnostic, Severity, TexCompiler};
pub use config::{Config, ConfigLayer, Provenance, VERSION};
pub use metrics::{Embedder, EmbeddingVector, MockEmbedder};
pub use records::{
    read_jsonl, record_id, write_jsonl, GeneratedRecord, JsonlError, Origin, PredRecord, RefRecord, TikzRecord,
};
pub use repair::{generate_with_repair, AttemptStat, RepairOutcome, Sampler, ScriptedSampler};
