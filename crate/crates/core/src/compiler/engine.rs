use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

use super::log::{anchor_to_file, error_count, parse_log, Diagnostic, Severity};

pub const TEXBIN_ENV: &str = "TIKZLAB_TEXBIN";
pub const DEFAULT_ENGINE: &str = "pdflatex";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
/// Basename of the document written into each scratch directory.
pub const JOB_NAME: &str = "doc";

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("TeX engine `{0}` not found on the search path")]
    EngineMissing(String),
    #[error("scratch directory {0} is not empty")]
    DirtyWorkdir(PathBuf),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Outcome of one compilation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileReport {
    /// Engine exited successfully and a PDF exists.
    pub success: bool,
    /// The PDF has at least one page.
    pub produced_image: bool,
    pub diagnostics: Vec<Diagnostic>,
    pub pdf_path: Option<PathBuf>,
    pub duration: f64,
    pub engine: String,
    pub timed_out: bool,
    /// Retained scratch directory, when kept for inspection.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workdir: Option<PathBuf>,
    #[serde(skip)]
    pub log: String,
}

impl CompileReport {
    pub fn error_count(&self) -> usize {
        error_count(&self.diagnostics)
    }

    pub fn earliest_error_line(&self) -> Option<u32> {
        super::log::earliest_error_line(&self.diagnostics)
    }
}

/// Anything that turns a standalone document into a [`CompileReport`].
pub trait Compile: Sync {
    fn compile(&self, document: &str) -> Result<CompileReport, CompileError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Engine program, optionally followed by extra arguments.
    pub engine_cmd: String,
    pub timeout: Duration,
    /// Keep the scratch directory of failed compiles.
    pub keep_scratch: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            engine_cmd: DEFAULT_ENGINE.to_string(),
            timeout: DEFAULT_TIMEOUT,
            keep_scratch: false,
        }
    }
}

/// Directories searched for tools: `$TIKZLAB_TEXBIN` first, then `$PATH`.
pub fn search_path() -> Vec<PathBuf> {
    let mut dirs = Vec::new();
    if let Some(texbin) = std::env::var_os(TEXBIN_ENV) {
        dirs.extend(std::env::split_paths(&texbin));
    }
    if let Some(path) = std::env::var_os("PATH") {
        dirs.extend(std::env::split_paths(&path));
    }
    dirs
}

fn search_path_var() -> OsString {
    std::env::join_paths(search_path()).unwrap_or_default()
}

/// Resolves a program name against [`search_path`]. Names containing a path
/// separator are taken as paths.
pub fn resolve_program(program: &str) -> Option<PathBuf> {
    if program.contains(std::path::MAIN_SEPARATOR) {
        let p = PathBuf::from(program);
        return p.is_file().then_some(p);
    }
    search_path().into_iter().map(|d| d.join(program)).find(|p| p.is_file())
}

static OUTPUT_WRITTEN: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"Output written on .*?\((?P<pages>\d+) pages?").unwrap());
static PAGE_OBJECT: Lazy<regex::bytes::Regex> =
    Lazy::new(|| regex::bytes::Regex::new(r"/Type\s*/Page[^s]").unwrap());

/// Page count from the log's "Output written" line, else from page objects
/// in the PDF bytes.
fn page_count(log: &str, pdf: &Path) -> usize {
    if let Some(c) = OUTPUT_WRITTEN.captures(&log.replace('\n', "")) {
        return c["pages"].parse().unwrap_or(0);
    }
    std::fs::read(pdf)
        .map(|bytes| PAGE_OBJECT.find_iter(&bytes).count())
        .unwrap_or(0)
}

/// Compiles `document` inside `workdir`, which must exist and be empty.
///
/// The engine runs in nonstop mode with file-line-error output and
/// shell-escape disabled. On timeout the process is killed and the report
/// carries a timeout error diagnostic.
pub fn compile(document: &str, workdir: &Path, cfg: &EngineConfig) -> Result<CompileReport, CompileError> {
    let mut parts = cfg.engine_cmd.split_whitespace();
    let program = parts.next().unwrap_or(DEFAULT_ENGINE);
    let engine = resolve_program(program).ok_or_else(|| CompileError::EngineMissing(program.to_string()))?;
    if std::fs::read_dir(workdir)?.next().is_some() {
        return Err(CompileError::DirtyWorkdir(workdir.to_path_buf()));
    }
    let tex = format!("{JOB_NAME}.tex");
    std::fs::write(workdir.join(&tex), document)?;

    let start = Instant::now();
    let mut child = Command::new(&engine)
        .args(parts)
        .args(["-interaction=nonstopmode", "-file-line-error", "-no-shell-escape"])
        .arg(&tex)
        .current_dir(workdir)
        .env("PATH", search_path_var())
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()?;
    let status = match child.wait_timeout(cfg.timeout)? {
        Some(status) => Some(status),
        None => {
            let _ = child.kill();
            let _ = child.wait();
            None
        }
    };
    let duration = start.elapsed().as_secs_f64();

    let log_bytes = std::fs::read(workdir.join(format!("{JOB_NAME}.log"))).unwrap_or_default();
    let log = String::from_utf8_lossy(&log_bytes).into_owned();
    let mut diagnostics = parse_log(&log);
    anchor_to_file(&mut diagnostics, &tex);
    let timed_out = status.is_none();
    if timed_out {
        diagnostics.push(Diagnostic {
            severity: Severity::Error,
            message: format!("Timeout: engine killed after {:.1}s", cfg.timeout.as_secs_f64()),
            line: None,
            raw: String::new(),
        });
    }
    let pdf = workdir.join(format!("{JOB_NAME}.pdf"));
    let pdf_exists = !timed_out && pdf.is_file();
    let produced_image = pdf_exists && page_count(&log, &pdf) > 0;
    Ok(CompileReport {
        success: status.is_some_and(|s| s.success()) && pdf_exists,
        produced_image,
        diagnostics,
        pdf_path: pdf_exists.then_some(pdf),
        duration,
        engine: engine.to_string_lossy().into_owned(),
        timed_out,
        workdir: None,
        log,
    })
}

/// Compiler that gives every document a fresh scratch directory.
#[derive(Debug, Clone, Default)]
pub struct TexCompiler {
    pub config: EngineConfig,
    /// Parent for scratch directories; the system temp dir when unset.
    pub scratch_root: Option<PathBuf>,
}

impl TexCompiler {
    pub fn new(config: EngineConfig) -> Self {
        Self {
            config,
            scratch_root: None,
        }
    }

    pub fn is_available(&self) -> bool {
        let program = self.config.engine_cmd.split_whitespace().next().unwrap_or(DEFAULT_ENGINE);
        resolve_program(program).is_some()
    }
}

impl Compile for TexCompiler {
    fn compile(&self, document: &str) -> Result<CompileReport, CompileError> {
        let mut builder = tempfile::Builder::new();
        builder.prefix("tikzlab-");
        let dir = match &self.scratch_root {
            Some(root) => builder.tempdir_in(root)?,
            None => builder.tempdir()?,
        };
        let mut report = compile(document, dir.path(), &self.config)?;
        if self.config.keep_scratch && !report.success {
            report.workdir = Some(dir.keep());
        } else {
            // the pdf goes away with the directory
            report.pdf_path = None;
        }
        Ok(report)
    }
}
