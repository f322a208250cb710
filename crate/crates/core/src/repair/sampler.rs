use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_MAX_NEW: usize = 2048;

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error("sampler protocol violation: {0}")]
    Protocol(String),
    #[error("sampler exited")]
    Closed,
    #[error("no scripted response left for caption {0:?}")]
    Exhausted(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Request sent to a sampler: continue `prefix` for `caption`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerRequest {
    pub id: String,
    pub caption: String,
    pub prefix: String,
    pub max_new: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerResponse {
    pub id: String,
    pub continuation: String,
}

/// A text generator that continues a document prefix.
pub trait Sampler {
    fn sample(&mut self, request: &SamplerRequest) -> Result<String, SamplerError>;
}

impl<S: Sampler + ?Sized> Sampler for &mut S {
    fn sample(&mut self, request: &SamplerRequest) -> Result<String, SamplerError> {
        (**self).sample(request)
    }
}

impl<S: Sampler + ?Sized> Sampler for Box<S> {
    fn sample(&mut self, request: &SamplerRequest) -> Result<String, SamplerError> {
        (**self).sample(request)
    }
}

/// Sampler child process speaking newline-delimited JSON on stdin/stdout.
pub struct SubprocessSampler {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl SubprocessSampler {
    /// Runs `cmd` through `sh -c`.
    pub fn spawn(cmd: &str) -> Result<Self, SamplerError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(cmd)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().ok_or(SamplerError::Closed)?;
        let stdout = BufReader::new(child.stdout.take().ok_or(SamplerError::Closed)?);
        Ok(Self { child, stdin, stdout })
    }
}

impl Sampler for SubprocessSampler {
    fn sample(&mut self, request: &SamplerRequest) -> Result<String, SamplerError> {
        let mut line = serde_json::to_string(request).map_err(|e| SamplerError::Protocol(e.to_string()))?;
        line.push('\n');
        self.stdin.write_all(line.as_bytes())?;
        self.stdin.flush()?;
        let mut reply = String::new();
        if self.stdout.read_line(&mut reply)? == 0 {
            return Err(SamplerError::Closed);
        }
        let resp: SamplerResponse =
            serde_json::from_str(reply.trim_end()).map_err(|e| SamplerError::Protocol(format!("{e}: {reply:?}")))?;
        if resp.id != request.id {
            return Err(SamplerError::Protocol(format!(
                "response id {:?} does not match request id {:?}",
                resp.id, request.id
            )));
        }
        Ok(resp.continuation)
    }
}

impl Drop for SubprocessSampler {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// One transcript line: the continuations returned, in order, for a caption.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub caption: String,
    pub responses: Vec<String>,
}

/// Replays continuations from a transcript. Each caption's responses are
/// served in order; the last one repeats once the list is used up.
#[derive(Debug, Clone, Default)]
pub struct ScriptedSampler {
    scripts: HashMap<String, Vec<String>>,
    served: HashMap<String, usize>,
    /// Every request seen, in order.
    pub requests: Vec<SamplerRequest>,
}

impl ScriptedSampler {
    pub fn new(entries: impl IntoIterator<Item = TranscriptEntry>) -> Self {
        let mut scripts: HashMap<String, Vec<String>> = HashMap::new();
        for e in entries {
            scripts.entry(e.caption).or_default().extend(e.responses);
        }
        Self {
            scripts,
            ..Self::default()
        }
    }

    pub fn single(caption: &str, responses: &[&str]) -> Self {
        Self::new([TranscriptEntry {
            caption: caption.to_string(),
            responses: responses.iter().map(|s| s.to_string()).collect(),
        }])
    }

    /// Fresh sampler holding only `caption`'s script.
    pub fn for_caption(&self, caption: &str) -> ScriptedSampler {
        let scripts = self
            .scripts
            .get(caption)
            .map(|s| HashMap::from([(caption.to_string(), s.clone())]))
            .unwrap_or_default();
        ScriptedSampler {
            scripts,
            ..ScriptedSampler::default()
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, crate::records::JsonlError> {
        let file = std::fs::File::open(path)?;
        Ok(Self::new(crate::records::read_jsonl::<TranscriptEntry, _>(BufReader::new(file))?))
    }
}

impl Sampler for ScriptedSampler {
    fn sample(&mut self, request: &SamplerRequest) -> Result<String, SamplerError> {
        self.requests.push(request.clone());
        let script = self
            .scripts
            .get(&request.caption)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| SamplerError::Exhausted(request.caption.clone()))?;
        let n = self.served.entry(request.caption.clone()).or_insert(0);
        let out = script[(*n).min(script.len() - 1)].clone();
        *n += 1;
        Ok(out)
    }
}

/// Fixed set of samplers shared by parallel runs; each checkout gets
/// exclusive use of one sampler.
pub struct SamplerPool<S> {
    idle: Mutex<Vec<S>>,
    ready: std::sync::Condvar,
}

impl<S> SamplerPool<S> {
    pub fn new(samplers: Vec<S>) -> Self {
        Self {
            idle: Mutex::new(samplers),
            ready: std::sync::Condvar::new(),
        }
    }

    /// Runs `f` with an idle sampler, blocking until one is free.
    pub fn with<R>(&self, f: impl FnOnce(&mut S) -> R) -> R {
        let mut sampler = {
            let mut idle = self.idle.lock().unwrap_or_else(|e| e.into_inner());
            loop {
                if let Some(s) = idle.pop() {
                    break s;
                }
                idle = self.ready.wait(idle).unwrap_or_else(|e| e.into_inner());
            }
        };
        let out = f(&mut sampler);
        self.idle.lock().unwrap_or_else(|e| e.into_inner()).push(sampler);
        self.ready.notify_one();
        out
    }
}
