//! Memorization and complexity analysis: code n-gram novelty against a
//! training corpus, caption copying into generated code, and token-count
//! statistics.

mod comments;
mod ngram;
mod tokenize;

pub use comments::{comment_start, strip_comments};
pub use ngram::{
    caption_copying, code_tokens, complexity_stats, copy_counts, copying_curve, ngram_novelty,
    novelty_curve, text_tokens, AnalysisError, CopyCounts, NGramIndex,
};
pub use tokenize::{token_count, tokenize};

/// Default n-gram orders for novelty and copying curves.
pub const DEFAULT_ORDERS: std::ops::RangeInclusive<usize> = 1..=10;
