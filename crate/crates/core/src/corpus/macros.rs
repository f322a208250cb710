use std::collections::{BTreeSet, HashMap};

use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::scan::{group_end, skip_optional, skip_ws};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MacroKind {
    Def,
    NewCommand,
    NewEnvironment,
    Other,
}

/// A parsed macro or environment definition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacroDef {
    /// Backslash-prefixed command; `\name` for an environment `name`.
    pub name: String,
    /// Replacement text (begin and end code for environments).
    pub body: String,
    pub kind: MacroKind,
    /// Definition as it should be emitted.
    pub source: String,
    /// Byte span of the definition in the scanned text.
    pub span: (usize, usize),
}

/// Definitions of one document, later definitions replacing earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MacroTable {
    /// In definition order of the surviving definitions.
    pub defs: Vec<MacroDef>,
    /// Spans of every parsed definition, replaced ones included.
    pub spans: Vec<(usize, usize)>,
    pub redefinitions: usize,
    /// Definition forms that are recognized but not parsed.
    pub other_forms: usize,
}

static DEF_HEAD: Lazy<Regex> = Lazy::new(|| {
    Regex::new(
        r"\\(def|newcommand|renewcommand|providecommand|newenvironment|renewenvironment|gdef|edef|xdef|let|DeclareRobustCommand|NewDocumentCommand|RenewDocumentCommand|DeclareMathOperator|newcommandx)(?:[^A-Za-z@]|$)",
    )
    .unwrap()
});

static COMMAND: Lazy<Regex> = Lazy::new(|| Regex::new(r"\\([A-Za-z@]+|[^A-Za-z@\s])").unwrap());
static BEGIN_ENV: Lazy<Regex> = Lazy::new(|| Regex::new(r"\\begin\s*\{([^{}]+)\}").unwrap());

fn command_at(text: &str, at: usize) -> Option<(String, usize)> {
    let pos = skip_ws(text, at);
    if text.as_bytes().get(pos) == Some(&b'{') {
        let end = group_end(text, pos)?;
        let inner = text[pos + 1..end - 1].trim();
        let m = COMMAND.find(inner).filter(|m| m.start() == 0 && m.end() == inner.len())?;
        return Some((m.as_str().to_string(), end));
    }
    let m = COMMAND.find_at(text, pos).filter(|m| m.start() == pos)?;
    Some((m.as_str().to_string(), m.end()))
}

/// Parses `\def`, `\newcommand`, `\renewcommand`, `\providecommand` (and
/// starred forms) and `\newenvironment`/`\renewenvironment` with
/// brace-balanced bodies from comment-masked text. Other definition forms
/// are counted in [`MacroTable::other_forms`].
pub fn parse_macros(masked: &str) -> MacroTable {
    let mut table = MacroTable::default();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut from = 0;
    while let Some(cap) = DEF_HEAD.captures_at(masked, from) {
        let head = cap.get(1).unwrap();
        let start = head.start() - 1;
        from = head.end();
        let parsed = match head.as_str() {
            "def" => parse_def(masked, head.end()),
            "newcommand" | "renewcommand" | "providecommand" => parse_newcommand(masked, head.end()),
            "newenvironment" | "renewenvironment" => parse_newenvironment(masked, head.end()),
            _ => {
                table.other_forms += 1;
                continue;
            }
        };
        let Some((name, body, kind, end)) = parsed else {
            table.other_forms += 1;
            continue;
        };
        let mut source = masked[start..end].lines().map(str::trim_end).collect::<Vec<_>>().join("\n");
        from = end;
        table.spans.push((start, end));
        if let Some(old) = index.remove(&name) {
            let prev = table.defs.remove(old);
            for v in index.values_mut() {
                if *v > old {
                    *v -= 1;
                }
            }
            table.redefinitions += 1;
            // the earlier definition is gone, so a redefinition must create
            if head.as_str() == "renewcommand" && !prev.source.starts_with("\\renewcommand") {
                source = source.replacen("\\renewcommand", "\\newcommand", 1);
            } else if head.as_str() == "renewenvironment" && !prev.source.starts_with("\\renewenvironment") {
                source = source.replacen("\\renewenvironment", "\\newenvironment", 1);
            }
        }
        index.insert(name.clone(), table.defs.len());
        table.defs.push(MacroDef {
            name,
            body,
            kind,
            source,
            span: (start, end),
        });
    }
    table
}

type Parsed = (String, String, MacroKind, usize);

fn parse_def(text: &str, at: usize) -> Option<Parsed> {
    let (name, after) = command_at(text, at)?;
    let open = after + text[after..].find('{')?;
    let params = &text[after..open];
    if params.len() > 64 {
        return None;
    }
    let end = group_end(text, open)?;
    Some((name, text[open + 1..end - 1].to_string(), MacroKind::Def, end))
}

fn parse_newcommand(text: &str, at: usize) -> Option<Parsed> {
    let at = if text.as_bytes().get(at) == Some(&b'*') { at + 1 } else { at };
    let (name, mut pos) = command_at(text, at)?;
    pos = skip_optional(text, pos)?;
    pos = skip_optional(text, pos)?;
    let open = skip_ws(text, pos);
    let end = group_end(text, open)?;
    Some((name, text[open + 1..end - 1].to_string(), MacroKind::NewCommand, end))
}

fn parse_newenvironment(text: &str, at: usize) -> Option<Parsed> {
    let at = if text.as_bytes().get(at) == Some(&b'*') { at + 1 } else { at };
    let open = skip_ws(text, at);
    let name_end = group_end(text, open)?;
    let env = text[open + 1..name_end - 1].trim();
    let mut pos = skip_optional(text, name_end)?;
    pos = skip_optional(text, pos)?;
    let b_open = skip_ws(text, pos);
    let b_end = group_end(text, b_open)?;
    let e_open = skip_ws(text, b_end);
    let e_end = group_end(text, e_open)?;
    let body = format!("{}{}", &text[b_open + 1..b_end - 1], &text[e_open + 1..e_end - 1]);
    Some((format!("\\{env}"), body, MacroKind::NewEnvironment, e_end))
}

/// Command tokens used in `text`, with `\begin{env}` counted as `\env`.
pub fn used_commands(text: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for m in COMMAND.find_iter(text) {
        let tok = m.as_str();
        if let Some(at) = tok.find('@').filter(|&i| i > 1) {
            out.insert(tok[..at].to_string());
        }
        out.insert(tok.to_string());
    }
    for cap in BEGIN_ENV.captures_iter(text) {
        out.insert(format!("\\{}", cap[1].trim()));
    }
    out
}

/// Definitions reachable from tokens in `snippet`, following macro bodies,
/// in definition order.
pub fn collect_used_macros(snippet: &str, defs: &[MacroDef]) -> Vec<MacroDef> {
    let by_name: HashMap<&str, usize> = defs.iter().enumerate().map(|(i, d)| (d.name.as_str(), i)).collect();
    let mut keep = vec![false; defs.len()];
    let mut work: Vec<String> = used_commands(snippet).into_iter().collect();
    while let Some(tok) = work.pop() {
        if let Some(&i) = by_name.get(tok.as_str()) {
            if !keep[i] {
                keep[i] = true;
                work.extend(used_commands(&defs[i].body));
            }
        }
    }
    defs.iter().zip(keep).filter(|(_, k)| *k).map(|(d, _)| d.clone()).collect()
}
