use std::collections::HashSet;

use once_cell::sync::Lazy;
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::environment::{enclosing_caption, extract_masked, figure_spans};
use super::include::{expand_includes, TexProject};
use super::macros::{collect_used_macros, parse_macros, MacroDef};
use super::preamble::{retain_preamble, RuleSet};
use super::scan::{group_end, mask_comments, skip_optional, skip_ws};
use super::{extract_tikz_environments, CorpusError};
use crate::compiler::{Compile, CompileError};
use crate::records::{record_id, Origin, TikzRecord};

pub const DOCUMENT_CLASS: &str = r"\documentclass[tikz]{standalone}";

/// Standalone document: class line, preamble, macros, then the snippet
/// wrapped in a document environment. No trailing newline.
pub fn assemble_document(snippet: &str, macros: &[MacroDef], preamble: &str) -> String {
    let mut doc = String::from(DOCUMENT_CLASS);
    doc.push('\n');
    if !preamble.trim().is_empty() {
        doc.push_str(preamble.trim_end_matches('\n'));
        doc.push('\n');
    }
    let at_letter = macros.iter().any(|m| m.source.contains('@'));
    if at_letter {
        doc.push_str("\\makeatletter\n");
    }
    for m in macros {
        doc.push_str(&m.source);
        doc.push('\n');
    }
    if at_letter {
        doc.push_str("\\makeatother\n");
    }
    doc.push_str("\\begin{document}\n");
    doc.push_str(snippet);
    doc.push_str("\n\\end{document}");
    doc
}

#[derive(Debug, Clone)]
pub struct ExtractOptions {
    pub license: String,
    pub rules: RuleSet,
    /// Drop snippets without a figure caption; defaults by origin when unset.
    pub require_caption: Option<bool>,
    pub created: Option<String>,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            license: "unknown".into(),
            rules: RuleSet::shipped().clone(),
            require_caption: None,
            created: None,
        }
    }
}

/// Counters accumulated over an extraction run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractStats {
    pub projects: usize,
    pub failed_projects: usize,
    pub snippets: usize,
    pub unbalanced: usize,
    pub unresolved_includes: usize,
    pub missing_caption: usize,
    pub replacement_chars: usize,
    pub encoding_rejected: usize,
    pub roundtrip_rejected: usize,
    pub duplicates: usize,
    pub macro_redefinitions: usize,
    pub other_macro_forms: usize,
    pub records: usize,
}

impl ExtractStats {
    pub fn merge(&mut self, o: &ExtractStats) {
        self.projects += o.projects;
        self.failed_projects += o.failed_projects;
        self.snippets += o.snippets;
        self.unbalanced += o.unbalanced;
        self.unresolved_includes += o.unresolved_includes;
        self.missing_caption += o.missing_caption;
        self.replacement_chars += o.replacement_chars;
        self.encoding_rejected += o.encoding_rejected;
        self.roundtrip_rejected += o.roundtrip_rejected;
        self.duplicates += o.duplicates;
        self.macro_redefinitions += o.macro_redefinitions;
        self.other_macro_forms += o.other_macro_forms;
        self.records += o.records;
    }
}

static DOCUMENTCLASS: Lazy<Regex> = Lazy::new(|| Regex::new(r"\\documentclass\b").unwrap());
static BEGIN_DOCUMENT: Lazy<Regex> = Lazy::new(|| Regex::new(r"\\begin\s*\{document\}").unwrap());

/// Byte range of the preamble: after the class directive, before the
/// document environment. Empty when either is missing.
fn preamble_range(masked: &str) -> (usize, usize) {
    let Some(begin) = BEGIN_DOCUMENT.find(masked) else { return (0, 0) };
    let Some(dc) = DOCUMENTCLASS.find(&masked[..begin.start()]) else { return (0, 0) };
    let after = skip_optional(masked, dc.end()).unwrap_or(dc.end());
    let open = skip_ws(masked, after);
    let end = group_end(masked, open).unwrap_or(open).min(begin.start());
    (end, begin.start())
}

fn roundtrips(code: &str, snippet: &str) -> bool {
    let e = extract_tikz_environments(code);
    e.snippets.len() == 1 && e.snippets[0].text == snippet && e.unbalanced.is_empty()
}

/// Extracts the records of one project. Records are not deduplicated or
/// compiled here.
pub fn extract_project(project: &TexProject, opts: &ExtractOptions) -> Result<(Vec<TikzRecord>, ExtractStats), CorpusError> {
    let mut stats = ExtractStats {
        projects: 1,
        replacement_chars: project.replacement_chars,
        ..ExtractStats::default()
    };
    let expansion = expand_includes(project)?;
    stats.unresolved_includes = expansion.unresolved.len();
    let tex = expansion.text;
    let masked = mask_comments(&tex);
    let envs = extract_masked(&tex, &masked);
    stats.snippets = envs.snippets.len();
    stats.unbalanced = envs.unbalanced.len();

    let mut table = parse_macros(&masked);
    stats.macro_redefinitions = table.redefinitions;
    stats.other_macro_forms = table.other_forms;
    let inside = |span: (usize, usize)| envs.snippets.iter().any(|s| s.start <= span.0 && span.1 <= s.end);
    table.defs.retain(|d| !inside(d.span));

    let (ps, pe) = preamble_range(&masked);
    let mut preamble_src = String::with_capacity(pe - ps);
    let mut cursor = ps;
    let mut spans: Vec<(usize, usize)> = table.spans.iter().copied().filter(|&(s, e)| s < pe && e > ps).collect();
    spans.sort();
    for (s, e) in spans {
        if s > cursor {
            preamble_src.push_str(&tex[cursor..s.min(pe)]);
        }
        cursor = cursor.max(e);
    }
    if cursor < pe {
        preamble_src.push_str(&tex[cursor..pe]);
    }
    let preamble = retain_preamble(&preamble_src, &opts.rules);

    let require_caption = opts
        .require_caption
        .unwrap_or(matches!(project.origin, Origin::Arxiv | Origin::Curated));
    let figures = figure_spans(&masked);
    let mut records = Vec::new();
    for snip in &envs.snippets {
        let caption = enclosing_caption(&tex, &masked, &figures, snip.start, snip.end);
        if caption.is_none() && require_caption {
            stats.missing_caption += 1;
            continue;
        }
        let macros = collect_used_macros(&snip.text, &table.defs);
        let code = assemble_document(&snip.text, &macros, &preamble);
        if code.contains('\u{FFFD}') {
            stats.encoding_rejected += 1;
            continue;
        }
        if !roundtrips(&code, &snip.text) {
            stats.roundtrip_rejected += 1;
            continue;
        }
        records.push(TikzRecord {
            id: record_id(&code),
            caption: caption.unwrap_or_default(),
            code,
            origin: project.origin,
            license: opts.license.clone(),
            augmented: false,
            created: opts.created.clone(),
        });
    }
    stats.records = records.len();
    Ok((records, stats))
}

/// Extracts every project in parallel and drops records whose code hash
/// was already seen, keeping the first in project order. Projects that fail
/// (for instance on include cycles) are counted and skipped.
pub fn extract_corpus(projects: &[TexProject], opts: &ExtractOptions) -> (Vec<TikzRecord>, ExtractStats) {
    let results: Vec<_> = projects.par_iter().map(|p| extract_project(p, opts)).collect();
    let mut stats = ExtractStats::default();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for r in results {
        match r {
            Ok((records, s)) => {
                stats.merge(&s);
                for rec in records {
                    if seen.insert(rec.id.clone()) {
                        out.push(rec);
                    } else {
                        stats.duplicates += 1;
                    }
                }
            }
            Err(_) => {
                stats.projects += 1;
                stats.failed_projects += 1;
            }
        }
    }
    stats.records = out.len();
    (out, stats)
}

/// Drops duplicate ids, keeping the first occurrence.
pub fn dedup_records(records: Vec<TikzRecord>) -> (Vec<TikzRecord>, usize) {
    let mut seen = HashSet::new();
    let before = records.len();
    let kept: Vec<_> = records.into_iter().filter(|r| seen.insert(r.id.clone())).collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

/// Keeps the records whose code compiles to an image, in input order, and
/// returns them with the rejected count.
pub fn filter_compilable<C: Compile + ?Sized>(
    records: Vec<TikzRecord>,
    compiler: &C,
) -> Result<(Vec<TikzRecord>, usize), CorpusError> {
    let verdicts: Vec<Result<bool, CompileError>> = records
        .par_iter()
        .map(|r| compiler.compile(&r.code).map(|rep| rep.produced_image))
        .collect();
    let mut kept = Vec::new();
    let mut rejected = 0;
    for (rec, v) in records.into_iter().zip(verdicts) {
        match v {
            Ok(true) => kept.push(rec),
            Ok(false) => rejected += 1,
            Err(CompileError::EngineMissing(e)) => return Err(CorpusError::CompilerUnavailable(e)),
            Err(e) => return Err(CorpusError::Compile(e)),
        }
    }
    Ok((kept, rejected))
}
