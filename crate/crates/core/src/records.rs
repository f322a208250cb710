//! Record types shared across the pipeline and their JSON Lines encoding.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::repair::AttemptStat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Arxiv,
    Stackexchange,
    Curated,
    Artificial,
}

impl std::str::FromStr for Origin {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "arxiv" => Ok(Self::Arxiv),
            "stackexchange" => Ok(Self::Stackexchange),
            "curated" => Ok(Self::Curated),
            "artificial" => Ok(Self::Artificial),
            other => Err(format!("unknown origin `{other}`")),
        }
    }
}

/// One caption-aligned, standalone TikZ document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TikzRecord {
    pub id: String,
    pub caption: String,
    pub code: String,
    pub origin: Origin,
    pub license: String,
    pub augmented: bool,
    pub created: Option<String>,
}

/// Hex SHA-256 of the document bytes.
pub fn record_id(code: &str) -> String {
    hex::encode(Sha256::digest(code.as_bytes()))
}

/// Output line of a generation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedRecord {
    pub id: String,
    pub caption: String,
    pub code: String,
    pub success: bool,
    pub sampled_units: f64,
    pub final_errors: usize,
    pub attempts: Vec<AttemptStat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
}

/// Prediction as consumed by evaluation. Extra fields are ignored, so both
/// generation outputs and plain `{id, code}` lines are accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredRecord {
    pub id: String,
    pub code: String,
    #[serde(default)]
    pub system: Option<String>,
    #[serde(default)]
    pub caption: Option<String>,
    #[serde(default)]
    pub sampled_units: Option<f64>,
    #[serde(default)]
    pub final_errors: Option<usize>,
}

impl PredRecord {
    pub fn system_name(&self) -> &str {
        self.system.as_deref().unwrap_or("default")
    }
}

/// Reference side of an evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefRecord {
    pub id: String,
    #[serde(default)]
    pub caption: String,
    pub code: String,
}

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, JsonlError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| JsonlError::Parse { line: idx + 1, source })?);
    }
    Ok(out)
}

/// Writes one compact JSON object per line, LF-terminated.
pub fn write_jsonl<T: Serialize, W: Write>(mut writer: W, items: &[T]) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}
