//! Extraction of standalone, caption-aligned TikZ records from TeX source
//! trees and Stack Exchange dumps.

mod environment;
mod include;
mod macros;
mod pipeline;
mod preamble;
mod scan;
mod stackexchange;

use std::path::PathBuf;

use thiserror::Error;

pub use environment::{extract_tikz_environments, Extraction, Snippet, UnbalancedEnvironment};
pub use include::{expand_includes, project_dirs, Expansion, TexProject, MAX_INCLUDE_DEPTH};
pub use macros::{collect_used_macros, parse_macros, used_commands, MacroDef, MacroKind, MacroTable};
pub use pipeline::{
    assemble_document, dedup_records, extract_corpus, extract_project, filter_compilable, ExtractOptions,
    ExtractStats, DOCUMENT_CLASS,
};
pub use preamble::{logical_lines, retain_preamble, Rule, RuleAction, RuleError, RuleSet, DEFAULT_RULES};
pub use scan::mask_comments;
pub use stackexchange::{
    code_blocks, ingest_stackexchange, stackexchange_records, IngestStats, SeAnswer, SeCandidate, DEFAULT_TAG,
    MIN_SCORE,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("include cycle: {}", .0.join(" -> "))]
    CycleDetected(Vec<String>),
    #[error("root file {0} is not part of the project")]
    MissingRoot(String),
    #[error("no file with \\documentclass under {0}")]
    NoRoot(PathBuf),
    #[error("compiler unavailable: {0}")]
    CompilerUnavailable(String),
    #[error(transparent)]
    Compile(#[from] crate::compiler::CompileError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
