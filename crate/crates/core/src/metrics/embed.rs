//! Embedding providers for the CLIP-based metrics.
//!
//! Three implementations of [`Embedder`] exist: [`MockEmbedder`], which
//! derives unit vectors from SHA-256 hashes and needs no model; the sidecar
//! client [`SidecarEmbedder`], which speaks newline-delimited JSON over TCP or
//! a child process's stdio; and [`CachedEmbedder`], which wraps either and
//! persists vectors keyed by content hash.
//!
//! Mock vectors are defined as follows, so other implementations can match
//! them bit for bit. For block `b = 0, 1, ...` compute
//! `SHA-256("tikzlab-mock\0" || seed_u64_le || b_u32_le || kind || "\0" || payload)`
//! and read the digest as four little-endian `u64` words. Each word `u`
//! becomes `2 · (u >> 11) · 2^-53 − 1`. The first `dim` values are L2
//! normalized. `kind` is `text` or `image`; an image file whose bytes start
//! with `MOCKSEED:` is embedded as `text` with the remaining bytes (trailing
//! whitespace trimmed) as payload, which gives matched text/image pairs a
//! cosine of exactly 1.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MOCK_SEED_PREFIX: &[u8] = b"MOCKSEED:";
pub const DEFAULT_MOCK_DIM: usize = 512;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedder unavailable: {0}")]
    Unavailable(String),
    #[error("embedder protocol violation: {0}")]
    Protocol(String),
    #[error("embedder reported error for request {id}: {message}")]
    Remote { id: String, message: String },
    #[error("embedding dimension changed within a session: {expected} -> {actual}")]
    DimensionChanged { expected: usize, actual: usize },
    #[error("captioning not supported by {0}")]
    CaptionUnsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingSource {
    Text,
    Image,
    Mock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    pub values: Vec<f64>,
    pub source: EmbeddingSource,
}

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

impl AsRef<[f64]> for EmbeddingVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

pub trait Embedder {
    fn model_id(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed_text(&mut self, text: &str) -> Result<EmbeddingVector, EmbedError>;
    fn embed_image(&mut self, path: &Path) -> Result<EmbeddingVector, EmbedError>;
}

/// Source of candidate descriptions for a rendered figure.
pub trait Captioner {
    fn caption_image(&mut self, path: &Path, count: usize) -> Result<Vec<String>, EmbedError>;
}

/// Deterministic hash-derived embeddings; see the module docs for the exact
/// construction.
#[derive(Debug, Clone)]
pub struct MockEmbedder {
    seed: u64,
    dim: usize,
    model_id: String,
}

impl MockEmbedder {
    pub fn new(seed: u64) -> Self {
        Self::with_dim(seed, DEFAULT_MOCK_DIM)
    }

    pub fn with_dim(seed: u64, dim: usize) -> Self {
        Self {
            seed,
            dim,
            model_id: format!("mock-sha256-d{dim}-s{seed}"),
        }
    }

    pub fn vector(&self, kind: &str, payload: &[u8]) -> Vec<f64> {
        let mut values = Vec::with_capacity(self.dim);
        let mut block = 0u32;
        while values.len() < self.dim {
            let mut h = Sha256::new();
            h.update(b"tikzlab-mock\0");
            h.update(self.seed.to_le_bytes());
            h.update(block.to_le_bytes());
            h.update(kind.as_bytes());
            h.update(b"\0");
            h.update(payload);
            let digest = h.finalize();
            for word in digest.chunks_exact(8) {
                let u = u64::from_le_bytes(word.try_into().expect("8-byte chunk"));
                values.push(2.0 * ((u >> 11) as f64) * f64::powi(2.0, -53) - 1.0);
            }
            block += 1;
        }
        values.truncate(self.dim);
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        values.iter_mut().for_each(|v| *v /= norm);
        values
    }

    pub fn image_vector(&self, bytes: &[u8]) -> Vec<f64> {
        match bytes.strip_prefix(MOCK_SEED_PREFIX) {
            Some(seed_text) => self.vector("text", seed_text.trim_ascii_end()),
            None => self.vector("image", bytes),
        }
    }
}

impl Embedder for MockEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_text(&mut self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        Ok(EmbeddingVector {
            values: self.vector("text", text.as_bytes()),
            source: EmbeddingSource::Mock,
        })
    }

    fn embed_image(&mut self, path: &Path) -> Result<EmbeddingVector, EmbedError> {
        let bytes = std::fs::read(path)
            .map_err(|e| EmbedError::Unavailable(format!("{}: {e}", path.display())))?;
        Ok(EmbeddingVector {
            values: self.image_vector(&bytes),
            source: EmbeddingSource::Mock,
        })
    }
}

#[derive(Debug, Serialize)]
struct WireRequest<'a> {
    id: String,
    kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    text: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    image_path: Option<String>,
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    id: String,
    #[serde(default)]
    embedding: Option<Vec<f64>>,
    #[serde(default)]
    candidates: Option<Vec<String>>,
    #[serde(default)]
    error: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Hello {
    hello: HelloBody,
}

#[derive(Debug, Deserialize)]
struct HelloBody {
    dim: usize,
    model_id: String,
}

/// Client for the embedding sidecar: a hello line, then one request in
/// flight at a time, each answered by a response echoing its id.
pub struct SidecarEmbedder {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
    dim: usize,
    model_id: String,
    next_id: u64,
}

impl std::fmt::Debug for SidecarEmbedder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SidecarEmbedder")
            .field("dim", &self.dim)
            .field("model_id", &self.model_id)
            .finish()
    }
}

impl SidecarEmbedder {
    pub fn connect_tcp(addr: &str) -> Result<Self, EmbedError> {
        let stream = TcpStream::connect(addr)
            .map_err(|e| EmbedError::Unavailable(format!("connect {addr}: {e}")))?;
        let reader = BufReader::new(stream.try_clone()?);
        Self::handshake(Box::new(reader), Box::new(stream), None)
    }

    /// Spawns `command` through the shell and talks to it over stdio.
    pub fn spawn_stdio(command: &str) -> Result<Self, EmbedError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| EmbedError::Unavailable(format!("spawn `{command}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Self::handshake(Box::new(BufReader::new(stdout)), Box::new(stdin), Some(child))
    }

    fn handshake(
        mut reader: Box<dyn BufRead + Send>,
        writer: Box<dyn Write + Send>,
        child: Option<Child>,
    ) -> Result<Self, EmbedError> {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            return Err(EmbedError::Unavailable("sidecar closed before hello".into()));
        }
        let hello: Hello = serde_json::from_str(line.trim())
            .map_err(|e| EmbedError::Protocol(format!("bad hello `{}`: {e}", line.trim())))?;
        if hello.hello.model_id.is_empty() {
            return Err(EmbedError::Protocol("hello carries empty model_id".into()));
        }
        Ok(Self {
            reader,
            writer,
            child,
            dim: hello.hello.dim,
            model_id: hello.hello.model_id,
            next_id: 0,
        })
    }

    fn roundtrip(&mut self, kind: &str, text: Option<&str>, image: Option<&Path>) -> Result<WireResponse, EmbedError> {
        self.next_id += 1;
        let id = self.next_id.to_string();
        let image_path = image
            .map(|p| std::path::absolute(p).map(|p| p.to_string_lossy().into_owned()))
            .transpose()?;
        let req = WireRequest {
            id: id.clone(),
            kind,
            text,
            image_path,
        };
        let mut line = serde_json::to_string(&req).expect("request serializes");
        line.push('\n');
        self.writer.write_all(line.as_bytes())?;
        self.writer.flush()?;
        let mut resp = String::new();
        if self.reader.read_line(&mut resp)? == 0 {
            return Err(EmbedError::Protocol("sidecar closed the connection".into()));
        }
        let resp: WireResponse = serde_json::from_str(resp.trim())
            .map_err(|e| EmbedError::Protocol(format!("bad response: {e}")))?;
        if resp.id != id {
            return Err(EmbedError::Protocol(format!("response id {} != request id {id}", resp.id)));
        }
        if let Some(message) = resp.error {
            return Err(EmbedError::Remote { id, message });
        }
        Ok(resp)
    }

    fn embedding(&mut self, resp: WireResponse, source: EmbeddingSource) -> Result<EmbeddingVector, EmbedError> {
        let values = resp
            .embedding
            .ok_or_else(|| EmbedError::Protocol("response without embedding".into()))?;
        if values.len() != self.dim {
            return Err(EmbedError::DimensionChanged {
                expected: self.dim,
                actual: values.len(),
            });
        }
        Ok(EmbeddingVector { values, source })
    }
}

impl Drop for SidecarEmbedder {
    fn drop(&mut self) {
        if let Some(child) = self.child.as_mut() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl Embedder for SidecarEmbedder {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_text(&mut self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let resp = self.roundtrip("embed_text", Some(text), None)?;
        self.embedding(resp, EmbeddingSource::Text)
    }

    fn embed_image(&mut self, path: &Path) -> Result<EmbeddingVector, EmbedError> {
        let resp = self.roundtrip("embed_image", None, Some(path))?;
        self.embedding(resp, EmbeddingSource::Image)
    }
}

impl Captioner for SidecarEmbedder {
    fn caption_image(&mut self, path: &Path, count: usize) -> Result<Vec<String>, EmbedError> {
        let resp = self.roundtrip("caption_image", None, Some(path))?;
        let mut candidates = resp
            .candidates
            .ok_or_else(|| EmbedError::Protocol("caption response without candidates".into()))?;
        candidates.truncate(count);
        Ok(candidates)
    }
}

/// Wraps an embedder with a content-addressed JSONL cache on disk. Keys are
/// SHA-256 over model id, kind and payload bytes (file bytes for images).
pub struct CachedEmbedder<E> {
    inner: E,
    entries: HashMap<String, Vec<f64>>,
    log: Option<BufWriter<File>>,
    hits: usize,
}

#[derive(Serialize, Deserialize)]
struct CacheLine {
    key: String,
    values: Vec<f64>,
}

impl<E: Embedder> CachedEmbedder<E> {
    pub fn in_memory(inner: E) -> Self {
        Self {
            inner,
            entries: HashMap::new(),
            log: None,
            hits: 0,
        }
    }

    /// Loads existing entries from `path` (if present) and appends new ones.
    pub fn open(inner: E, path: impl Into<PathBuf>) -> Result<Self, EmbedError> {
        let path = path.into();
        let mut entries = HashMap::new();
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                // a torn trailing line from an interrupted run is ignored
                if let Ok(entry) = serde_json::from_str::<CacheLine>(&line) {
                    entries.insert(entry.key, entry.values);
                }
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            inner,
            entries,
            log: Some(BufWriter::new(file)),
            hits: 0,
        })
    }

    pub fn hits(&self) -> usize {
        self.hits
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn flush(&mut self) -> Result<(), EmbedError> {
        if let Some(log) = self.log.as_mut() {
            log.flush()?;
        }
        Ok(())
    }

    fn key(&self, kind: &str, payload: &[u8]) -> String {
        let mut h = Sha256::new();
        h.update(self.inner.model_id().as_bytes());
        h.update(b"\0");
        h.update(kind.as_bytes());
        h.update(b"\0");
        h.update(payload);
        hex::encode(h.finalize())
    }

    fn lookup_or(
        &mut self,
        key: String,
        source: EmbeddingSource,
        compute: impl FnOnce(&mut E) -> Result<EmbeddingVector, EmbedError>,
    ) -> Result<EmbeddingVector, EmbedError> {
        if let Some(values) = self.entries.get(&key) {
            self.hits += 1;
            return Ok(EmbeddingVector {
                values: values.clone(),
                source,
            });
        }
        let v = compute(&mut self.inner)?;
        if let Some(log) = self.log.as_mut() {
            let line = serde_json::to_string(&CacheLine {
                key: key.clone(),
                values: v.values.clone(),
            })
            .expect("cache line serializes");
            writeln!(log, "{line}")?;
        }
        self.entries.insert(key, v.values.clone());
        Ok(v)
    }
}

impl<E> Drop for CachedEmbedder<E> {
    fn drop(&mut self) {
        if let Some(log) = self.log.as_mut() {
            let _ = log.flush();
        }
    }
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn embed_text(&mut self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let key = self.key("text", text.as_bytes());
        self.lookup_or(key, EmbeddingSource::Text, |e| e.embed_text(text))
    }

    fn embed_image(&mut self, path: &Path) -> Result<EmbeddingVector, EmbedError> {
        let bytes = std::fs::read(path)
            .map_err(|e| EmbedError::Unavailable(format!("{}: {e}", path.display())))?;
        let key = self.key("image", &bytes);
        self.lookup_or(key, EmbeddingSource::Image, |e| e.embed_image(path))
    }
}

/// Opens an embedder from an address string:
/// `mock`, `mock:SEED`, `stdio:COMMAND`, `tcp:HOST:PORT` or `HOST:PORT`.
pub fn open_embedder(addr: &str) -> Result<Box<dyn EmbedderCaptioner>, EmbedError> {
    if addr == "mock" {
        return Ok(Box::new(MockEmbedder::new(0)));
    }
    if let Some(seed) = addr.strip_prefix("mock:") {
        let seed = seed
            .parse()
            .map_err(|_| EmbedError::Unavailable(format!("bad mock seed `{seed}`")))?;
        return Ok(Box::new(MockEmbedder::new(seed)));
    }
    if let Some(cmd) = addr.strip_prefix("stdio:") {
        return Ok(Box::new(SidecarEmbedder::spawn_stdio(cmd)?));
    }
    let addr = addr.strip_prefix("tcp:").unwrap_or(addr);
    Ok(Box::new(SidecarEmbedder::connect_tcp(addr)?))
}

impl<E: Embedder + ?Sized> Embedder for Box<E> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn embed_text(&mut self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        (**self).embed_text(text)
    }

    fn embed_image(&mut self, path: &Path) -> Result<EmbeddingVector, EmbedError> {
        (**self).embed_image(path)
    }
}

impl<C: Captioner + ?Sized> Captioner for Box<C> {
    fn caption_image(&mut self, path: &Path, count: usize) -> Result<Vec<String>, EmbedError> {
        (**self).caption_image(path, count)
    }
}

impl<E: Embedder + Captioner> Captioner for CachedEmbedder<E> {
    fn caption_image(&mut self, path: &Path, count: usize) -> Result<Vec<String>, EmbedError> {
        self.inner.caption_image(path, count)
    }
}

/// An embedder that may also produce candidate captions.
pub trait EmbedderCaptioner: Embedder + Captioner {}
impl<T: Embedder + Captioner> EmbedderCaptioner for T {}

impl Captioner for MockEmbedder {
    fn caption_image(&mut self, _path: &Path, _count: usize) -> Result<Vec<String>, EmbedError> {
        Err(EmbedError::CaptionUnsupported(self.model_id.clone()))
    }
}
