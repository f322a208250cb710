use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use tikzlab_core::Provenance;

/// Outcome of a command: complete, or completed with per-record failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    Partial,
}

impl Status {
    pub fn from_failures(failures: usize) -> Self {
        if failures == 0 {
            Status::Ok
        } else {
            Status::Partial
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn write_records<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    tikzlab_core::write_jsonl(&mut w, items)?;
    w.flush()?;
    Ok(())
}

pub fn read_records<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    tikzlab_core::read_jsonl(std::io::BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

/// Path of the metadata file written next to a JSONL artifact.
pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    out.with_file_name(name)
}

#[derive(Serialize)]
pub struct Meta<'a, S: Serialize> {
    pub provenance: &'a Provenance,
    pub summary: S,
}

/// Writes `<out>.meta.json` with provenance and a command summary.
pub fn write_meta<S: Serialize>(out: &Path, provenance: &Provenance, summary: S) -> Result<()> {
    write_json(&meta_path(out), &Meta { provenance, summary })
}
