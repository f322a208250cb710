use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::scan::{group_end, mask_comments, skip_optional};

/// One outermost tikzpicture environment and its byte span in the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snippet {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

/// A `\begin{tikzpicture}` without a matching end, at byte `offset`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnbalancedEnvironment {
    pub offset: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extraction {
    pub snippets: Vec<Snippet>,
    pub unbalanced: Vec<UnbalancedEnvironment>,
}

static TIKZ_DELIM: Lazy<Regex> = Lazy::new(|| Regex::new(r"\\(begin|end)\s*\{tikzpicture\}").unwrap());

/// Every outermost `tikzpicture` span in document order. Nested pictures
/// stay inside their parent. Delimiters in comments are ignored.
pub fn extract_tikz_environments(tex: &str) -> Extraction {
    extract_masked(tex, &mask_comments(tex))
}

pub(crate) fn extract_masked(tex: &str, masked: &str) -> Extraction {
    let mut out = Extraction::default();
    let mut depth = 0usize;
    let mut open = 0usize;
    for cap in TIKZ_DELIM.captures_iter(masked) {
        let m = cap.get(0).unwrap();
        if &cap[1] == "begin" {
            if depth == 0 {
                open = m.start();
            }
            depth += 1;
        } else if depth > 0 {
            depth -= 1;
            if depth == 0 {
                out.snippets.push(Snippet {
                    text: tex[open..m.end()].to_string(),
                    start: open,
                    end: m.end(),
                });
            }
        }
    }
    if depth > 0 {
        out.unbalanced.push(UnbalancedEnvironment { offset: open });
    }
    out
}

static FIGURE_DELIM: Lazy<Regex> = Lazy::new(|| Regex::new(r"\\(begin|end)\s*\{figure\*?\}").unwrap());
static CAPTION: Lazy<Regex> = Lazy::new(|| Regex::new(r"\\caption\b\*?").unwrap());

/// `(start, end)` spans of outermost figure environments.
pub(crate) fn figure_spans(masked: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut depth = 0usize;
    let mut open = 0usize;
    for cap in FIGURE_DELIM.captures_iter(masked) {
        let m = cap.get(0).unwrap();
        if &cap[1] == "begin" {
            if depth == 0 {
                open = m.start();
            }
            depth += 1;
        } else if depth > 0 {
            depth -= 1;
            if depth == 0 {
                spans.push((open, m.end()));
            }
        }
    }
    spans
}

/// `(offset, text)` of each `\caption` argument in `masked[from..to]`,
/// with whitespace runs collapsed.
fn captions_in(tex: &str, masked: &str, from: usize, to: usize) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    for m in CAPTION.find_iter(&masked[from..to]) {
        let at = from + m.end();
        let Some(arg) = skip_optional(masked, at) else { continue };
        let open = super::scan::skip_ws(masked, arg);
        let Some(end) = group_end(masked, open) else { continue };
        let raw = &tex[open + 1..end - 1];
        let masked_raw = &masked[open + 1..end - 1];
        // drop comment text that the mask blanked out
        let kept: String = raw
            .char_indices()
            .filter(|(i, _)| masked_raw.as_bytes()[*i] != b' ' || raw.as_bytes()[*i] == b' ')
            .map(|(_, c)| c)
            .collect();
        out.push((from + m.start(), kept.split_whitespace().collect::<Vec<_>>().join(" ")));
    }
    out
}

/// Caption of the figure enclosing the span `[start, end)`: the first
/// caption after the span, else the last one before it.
pub(crate) fn enclosing_caption(tex: &str, masked: &str, figures: &[(usize, usize)], start: usize, end: usize) -> Option<String> {
    let &(fs, fe) = figures.iter().find(|(fs, fe)| *fs <= start && end <= *fe)?;
    let caps = captions_in(tex, masked, fs, fe);
    caps.iter()
        .find(|(o, _)| *o >= end)
        .or_else(|| caps.iter().rev().find(|(o, _)| *o < start))
        .map(|(_, c)| c.clone())
        .filter(|c| !c.is_empty())
}
