use std::collections::BTreeMap;
use std::path::{Component, Path, PathBuf};

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::scan::mask_comments;
use super::CorpusError;
use crate::records::Origin;

/// Include nesting beyond this depth is treated as a cycle.
pub const MAX_INCLUDE_DEPTH: usize = 16;

const TEXT_EXTENSIONS: &[&str] = &["tex", "sty", "cls", "def", "tikz", "pgf", "ltx"];

/// A TeX source tree held in memory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TexProject {
    /// Key of the root document in `files`.
    pub root_file: String,
    /// Relative path (forward slashes) to text.
    pub files: BTreeMap<String, String>,
    pub origin: Origin,
    /// Replacement characters introduced by lossy decoding.
    #[serde(default)]
    pub replacement_chars: usize,
}

impl TexProject {
    pub fn single(name: &str, text: &str, origin: Origin) -> Self {
        Self {
            root_file: name.to_string(),
            files: BTreeMap::from([(name.to_string(), text.to_string())]),
            origin,
            replacement_chars: text.matches('\u{FFFD}').count(),
        }
    }

    /// Loads every TeX-like file below `dir`. The root is `main.tex` when it
    /// contains `\documentclass`, otherwise the first such file in path
    /// order.
    pub fn from_dir(dir: &Path, origin: Origin) -> Result<Self, CorpusError> {
        let mut files = BTreeMap::new();
        let mut replacement_chars = 0;
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for entry in std::fs::read_dir(&d)? {
                let path = entry?.path();
                if path.is_dir() {
                    stack.push(path);
                    continue;
                }
                let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
                if !TEXT_EXTENSIONS.contains(&ext) {
                    continue;
                }
                let bytes = std::fs::read(&path)?;
                let text = String::from_utf8_lossy(&bytes).into_owned();
                replacement_chars += text.matches('\u{FFFD}').count();
                files.insert(rel_key(dir, &path), text);
            }
        }
        let has_class = |t: &String| t.contains("\\documentclass");
        let root_file = match files.get("main.tex") {
            Some(t) if has_class(t) => "main.tex".to_string(),
            _ => files
                .iter()
                .find(|(_, t)| has_class(t))
                .map(|(k, _)| k.clone())
                .ok_or_else(|| CorpusError::NoRoot(dir.to_path_buf()))?,
        };
        Ok(Self {
            root_file,
            files,
            origin,
            replacement_chars,
        })
    }
}

fn rel_key(base: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(base).unwrap_or(path);
    rel.components()
        .filter_map(|c| match c {
            Component::Normal(s) => Some(s.to_string_lossy().into_owned()),
            _ => None,
        })
        .collect::<Vec<_>>()
        .join("/")
}

fn normalize(name: &str) -> String {
    let mut parts: Vec<&str> = Vec::new();
    for p in name.trim().split('/') {
        match p {
            "" | "." => {}
            ".." => {
                parts.pop();
            }
            p => parts.push(p),
        }
    }
    parts.join("/")
}

static INCLUDE: Lazy<Regex> = Lazy::new(|| Regex::new(r"\\(?:input|include|subfile)\s*\{([^{}]*)\}").unwrap());

/// Flattened text plus the directives that could not be resolved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expansion {
    pub text: String,
    pub unresolved: Vec<String>,
}

/// Replaces `\input`, `\include` and `\subfile` directives with the named
/// file's content followed by one space, recursively. A single space or tab
/// after the directive is absorbed. Directives inside comments are left
/// alone, as are names not found in the project (reported).
pub fn expand_includes(project: &TexProject) -> Result<Expansion, CorpusError> {
    let root = project
        .files
        .get(&project.root_file)
        .ok_or_else(|| CorpusError::MissingRoot(project.root_file.clone()))?;
    let mut unresolved = Vec::new();
    let mut stack = vec![project.root_file.clone()];
    let text = expand(project, root, &mut stack, &mut unresolved)?;
    Ok(Expansion { text, unresolved })
}

fn resolve<'a>(project: &'a TexProject, name: &str) -> Option<(String, &'a str)> {
    let base = normalize(name);
    [base.clone(), format!("{base}.tex")]
        .into_iter()
        .find_map(|k| project.files.get(&k).map(|t| (k, t.as_str())))
}

fn expand(
    project: &TexProject,
    text: &str,
    stack: &mut Vec<String>,
    unresolved: &mut Vec<String>,
) -> Result<String, CorpusError> {
    let masked = mask_comments(text);
    let mut out = String::with_capacity(text.len());
    let mut last = 0;
    for cap in INCLUDE.captures_iter(&masked) {
        let whole = cap.get(0).unwrap();
        let name = &cap[1];
        let Some((key, content)) = resolve(project, name) else {
            unresolved.push(name.to_string());
            continue;
        };
        if stack.contains(&key) || stack.len() > MAX_INCLUDE_DEPTH {
            stack.push(key);
            return Err(CorpusError::CycleDetected(stack.clone()));
        }
        stack.push(key);
        let inner = expand(project, content, stack, unresolved)?;
        stack.pop();
        out.push_str(&text[last..whole.start()]);
        out.push_str(&inner);
        out.push(' ');
        last = whole.end();
        if matches!(text.as_bytes().get(last), Some(b' ' | b'\t')) {
            last += 1;
        }
    }
    out.push_str(&text[last..]);
    Ok(out)
}

/// Directories directly below `dir`, in name order; each is one project.
pub fn project_dirs(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}
