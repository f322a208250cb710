//! Caption augmentation: short captions get the best-ranked generated
//! description of their rendered figure appended.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::token_count;
use crate::metrics::{clip_score, Captioner, EmbedError, Embedder, MetricError};
use crate::records::TikzRecord;

/// Captions with fewer tokens than this are augmented.
pub const MIN_CAPTION_TOKENS: usize = 30;
pub const DEFAULT_CANDIDATES: usize = 5;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("no candidates to rank")]
    NoCandidates,
    #[error("embedder unavailable: {0}")]
    EmbedderUnavailable(#[source] EmbedError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("captioner protocol violation: {0}")]
    Protocol(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<EmbedError> for AugmentError {
    fn from(e: EmbedError) -> Self {
        AugmentError::EmbedderUnavailable(e)
    }
}

pub fn needs_augmentation(caption: &str) -> bool {
    token_count(caption) < MIN_CAPTION_TOKENS
}

/// Candidates with their CLIPScore against `image_embedding`, best first.
/// Equal scores keep input order.
pub fn rank_candidates(
    image_embedding: &[f64],
    candidates: &[String],
    embedder: &mut dyn Embedder,
) -> Result<Vec<(String, f64)>, AugmentError> {
    if candidates.is_empty() {
        return Err(AugmentError::NoCandidates);
    }
    let mut scored = Vec::with_capacity(candidates.len());
    for c in candidates {
        let e = embedder.embed_text(c)?;
        scored.push((c.clone(), clip_score(&e.values, image_embedding)?));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(scored)
}

pub fn augment_caption(original: &str, winner: &str) -> String {
    match (original.is_empty(), winner.is_empty()) {
        (_, true) => original.to_string(),
        (true, false) => winner.to_string(),
        (false, false) => format!("{original} {winner}"),
    }
}

/// Captioner child process using the sampler wire format with an image path
/// in place of a prefix: `{"id","caption","image_path","count"}` in,
/// `{"id","candidates":[...]}` out.
pub struct SubprocessCaptioner {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    next_id: u64,
}

#[derive(Serialize)]
struct CaptionRequest<'a> {
    id: String,
    caption: &'a str,
    image_path: &'a str,
    count: usize,
}

#[derive(Deserialize)]
struct CaptionResponse {
    id: String,
    #[serde(default)]
    candidates: Vec<String>,
    #[serde(default)]
    error: Option<String>,
}

impl SubprocessCaptioner {
    pub fn spawn(cmd: &str) -> Result<Self, AugmentError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(cmd)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().ok_or_else(|| AugmentError::Protocol("no stdin".into()))?;
        let stdout = BufReader::new(child.stdout.take().ok_or_else(|| AugmentError::Protocol("no stdout".into()))?);
        Ok(Self {
            child,
            stdin,
            stdout,
            next_id: 0,
        })
    }

    pub fn candidates(&mut self, caption: &str, image: &Path, count: usize) -> Result<Vec<String>, AugmentError> {
        let id = self.next_id.to_string();
        self.next_id += 1;
        let req = CaptionRequest {
            id: id.clone(),
            caption,
            image_path: &image.to_string_lossy(),
            count,
        };
        let mut line = serde_json::to_string(&req).map_err(|e| AugmentError::Protocol(e.to_string()))?;
        line.push('\n');
        self.stdin.write_all(line.as_bytes())?;
        self.stdin.flush()?;
        let mut reply = String::new();
        if self.stdout.read_line(&mut reply)? == 0 {
            return Err(AugmentError::Protocol("captioner exited".into()));
        }
        let resp: CaptionResponse = serde_json::from_str(reply.trim_end()).map_err(|e| AugmentError::Protocol(e.to_string()))?;
        if resp.id != id {
            return Err(AugmentError::Protocol(format!("response id {:?} for request {id:?}", resp.id)));
        }
        if let Some(err) = resp.error {
            return Err(AugmentError::Protocol(err));
        }
        Ok(resp.candidates)
    }
}

impl Drop for SubprocessCaptioner {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Where candidate descriptions come from.
pub enum CandidateSource<'a> {
    /// Precomputed `{"id", "candidates": [...]}` lines keyed by record id.
    Table(HashMap<String, Vec<String>>),
    Subprocess(SubprocessCaptioner),
    Captioner(&'a mut dyn Captioner),
}

#[derive(Deserialize)]
struct CandidateLine {
    id: String,
    candidates: Vec<String>,
}

impl CandidateSource<'_> {
    pub fn from_file(path: &Path) -> Result<Self, AugmentError> {
        let file = std::fs::File::open(path)?;
        let lines: Vec<CandidateLine> = crate::records::read_jsonl(BufReader::new(file))
            .map_err(|e| AugmentError::Protocol(e.to_string()))?;
        Ok(CandidateSource::Table(lines.into_iter().map(|l| (l.id, l.candidates)).collect()))
    }

    fn candidates(&mut self, rec: &TikzRecord, image: &Path, count: usize) -> Result<Vec<String>, AugmentError> {
        match self {
            CandidateSource::Table(t) => Ok(t.get(&rec.id).cloned().unwrap_or_default()),
            CandidateSource::Subprocess(c) => c.candidates(&rec.caption, image, count),
            CandidateSource::Captioner(c) => Ok(c.caption_image(image, count)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentOptions {
    pub candidates: usize,
    /// Augment every caption regardless of length.
    pub all: bool,
}

impl Default for AugmentOptions {
    fn default() -> Self {
        Self {
            candidates: DEFAULT_CANDIDATES,
            all: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AugmentStats {
    pub records: usize,
    pub augmented: usize,
    pub already_augmented: usize,
    pub long_enough: usize,
    pub missing_image: usize,
    pub no_candidates: usize,
    pub failed: usize,
}

pub fn image_path(images: &Path, id: &str) -> PathBuf {
    images.join(format!("{id}.png"))
}

/// Augments each eligible record once, in place. Records with missing
/// images, no candidates or failing requests are left unchanged and
/// counted.
pub fn augment_records(
    records: &mut [TikzRecord],
    images: &Path,
    embedder: &mut dyn Embedder,
    source: &mut CandidateSource<'_>,
    opts: &AugmentOptions,
) -> AugmentStats {
    let mut stats = AugmentStats {
        records: records.len(),
        ..AugmentStats::default()
    };
    for rec in records.iter_mut() {
        if rec.augmented {
            stats.already_augmented += 1;
            continue;
        }
        if !opts.all && !needs_augmentation(&rec.caption) {
            stats.long_enough += 1;
            continue;
        }
        let image = image_path(images, &rec.id);
        if !image.is_file() {
            stats.missing_image += 1;
            continue;
        }
        let result = (|| -> Result<Option<String>, AugmentError> {
            let mut cands = source.candidates(rec, &image, opts.candidates)?;
            cands.truncate(opts.candidates);
            if cands.is_empty() {
                return Ok(None);
            }
            let img = embedder.embed_image(&image)?;
            Ok(rank_candidates(&img.values, &cands, embedder)?.into_iter().next().map(|(c, _)| c))
        })();
        match result {
            Ok(Some(winner)) => {
                rec.caption = augment_caption(&rec.caption, &winner);
                rec.augmented = true;
                stats.augmented += 1;
            }
            Ok(None) => stats.no_candidates += 1,
            Err(_) => stats.failed += 1,
        }
    }
    stats
}
