//! Automatic metrics: CLIPScore (text-image and image-image), KID,
//! CrystalBLEU and EED, plus system-level report assembly.

mod bleu;
mod clip;
mod eed;
pub mod embed;
mod kid;
mod report;

use thiserror::Error;

pub use bleu::{bleu_stats, crystal_bleu, trivially_shared_ngrams, BleuStats, DEFAULT_SHARED_K, MAX_ORDER};
pub use clip::{clip_score, clip_score_img, clip_score_with, cosine, ClipScoreVariant};
pub use eed::{eed, eed_chars, eed_with, preprocess as eed_preprocess, EedParams};
pub use embed::{
    open_embedder, CachedEmbedder, Captioner, EmbedError, Embedder, EmbedderCaptioner, EmbeddingSource,
    EmbeddingVector, MockEmbedder, SidecarEmbedder,
};
pub use kid::{kid, polynomial_kernel, KidEstimate, KidOptions};
pub use report::{
    metric_report, ColumnValue, ImageDirs, Metric, MetricOptions, MetricReport, ReportMetadata, SystemRow,
};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("non-finite value in input")]
    NonFinite,
    #[error("need at least 2 samples per side, got {0}")]
    TooFewSamples(usize),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("corpus length mismatch: {0} candidates vs {1} references")]
    LengthMismatch(usize, usize),
    #[error("prediction `{0}` has no reference with the same id")]
    MissingAlignment(String),
    #[error("invalid option: {0}")]
    InvalidOption(&'static str),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
}
