use std::collections::BTreeMap;
use std::io::BufRead;

use once_cell::sync::Lazy;
use quick_xml::escape::{resolve_html5_entity, unescape_with};
use quick_xml::events::Event;
use quick_xml::Reader;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::include::TexProject;
use super::pipeline::{extract_project, ExtractOptions, ExtractStats};
use super::CorpusError;
use crate::records::{Origin, TikzRecord};

pub const DEFAULT_TAG: &str = "tikz-pgf";
pub const MIN_SCORE: i64 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeAnswer {
    pub id: String,
    pub score: i64,
    /// Unescaped contents of each `<pre><code>` block.
    pub code_blocks: Vec<String>,
    /// Date part of the creation timestamp.
    pub created: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeCandidate {
    pub question_id: String,
    pub title: String,
    pub answers: Vec<SeAnswer>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    pub rows: usize,
    pub malformed_rows: usize,
    pub questions: usize,
    pub answers_kept: usize,
}

#[derive(Debug, Default)]
struct Row {
    attrs: BTreeMap<String, String>,
}

fn parse_row(line: &str) -> Result<Option<Row>, String> {
    let mut reader = Reader::from_str(line);
    loop {
        match reader.read_event().map_err(|e| e.to_string())? {
            Event::Empty(e) | Event::Start(e) if e.name().as_ref() == b"row" => {
                let mut row = Row::default();
                for a in e.attributes() {
                    let a = a.map_err(|e| e.to_string())?;
                    let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
                    let value = a.unescape_value().map_err(|e| e.to_string())?.into_owned();
                    row.attrs.insert(key, value);
                }
                return Ok(Some(row));
            }
            Event::Eof => return Ok(None),
            _ => {}
        }
    }
}

static CODE_BLOCK: Lazy<Regex> = Lazy::new(|| Regex::new(r"(?s)<pre[^>]*>\s*<code[^>]*>(.*?)</code>\s*</pre>").unwrap());

fn html_unescape(s: &str) -> String {
    unescape_with(s, resolve_html5_entity)
        .map(|c| c.into_owned())
        .unwrap_or_else(|_| s.to_string())
}

/// Code blocks of an HTML post body.
pub fn code_blocks(body: &str) -> Vec<String> {
    CODE_BLOCK.captures_iter(body).map(|c| html_unescape(&c[1])).collect()
}

fn has_tag(tags: &str, tag: &str) -> bool {
    tags.split(['<', '>', '|']).any(|t| t == tag)
}

/// Reads a Posts.xml dump one line at a time. Keeps questions tagged `tag`
/// with their answers of score at least 1 that have a code block containing
/// a tikzpicture. Questions without qualifying answers are dropped. Rows
/// that fail to parse are skipped and counted.
pub fn ingest_stackexchange<R: BufRead>(dump: R, tag: &str) -> Result<(Vec<SeCandidate>, IngestStats), CorpusError> {
    let mut stats = IngestStats::default();
    let mut questions: BTreeMap<String, String> = BTreeMap::new();
    let mut answers: Vec<(String, SeAnswer)> = Vec::new();
    for line in dump.lines() {
        let line = line?;
        let trimmed = line.trim_start();
        if !trimmed.starts_with("<row") {
            continue;
        }
        stats.rows += 1;
        let row = match parse_row(trimmed) {
            Ok(Some(r)) => r,
            _ => {
                stats.malformed_rows += 1;
                continue;
            }
        };
        let get = |k: &str| row.attrs.get(k).map(String::as_str);
        let Some(id) = get("Id") else {
            stats.malformed_rows += 1;
            continue;
        };
        match get("PostTypeId") {
            Some("1") => {
                if has_tag(get("Tags").unwrap_or(""), tag) {
                    questions.insert(id.to_string(), get("Title").unwrap_or("").to_string());
                }
            }
            Some("2") => {
                let Some(parent) = get("ParentId") else { continue };
                let score: i64 = match get("Score").unwrap_or("0").parse() {
                    Ok(s) => s,
                    Err(_) => {
                        stats.malformed_rows += 1;
                        continue;
                    }
                };
                if score < MIN_SCORE {
                    continue;
                }
                let blocks: Vec<String> = code_blocks(get("Body").unwrap_or(""))
                    .into_iter()
                    .filter(|b| b.contains("\\begin{tikzpicture}"))
                    .collect();
                if blocks.is_empty() {
                    continue;
                }
                answers.push((
                    parent.to_string(),
                    SeAnswer {
                        id: id.to_string(),
                        score,
                        code_blocks: blocks,
                        created: get("CreationDate").map(|d| d.split('T').next().unwrap_or(d).to_string()),
                    },
                ));
            }
            _ => {}
        }
    }
    let mut grouped: BTreeMap<String, Vec<SeAnswer>> = BTreeMap::new();
    for (parent, a) in answers {
        if questions.contains_key(&parent) {
            grouped.entry(parent).or_default().push(a);
        }
    }
    let mut out = Vec::new();
    for (qid, mut ans) in grouped {
        ans.sort_by(|a, b| b.score.cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
        stats.answers_kept += ans.len();
        out.push(SeCandidate {
            title: questions[&qid].clone(),
            question_id: qid,
            answers: ans,
        });
    }
    stats.questions = out.len();
    Ok((out, stats))
}

/// Turns candidates into records with empty captions. Each code block is
/// treated as a one-file project.
pub fn stackexchange_records(candidates: &[SeCandidate], license: &str) -> (Vec<TikzRecord>, ExtractStats) {
    let mut stats = ExtractStats::default();
    let mut out = Vec::new();
    for c in candidates {
        for a in &c.answers {
            for block in &a.code_blocks {
                let project = TexProject::single("answer.tex", block, Origin::Stackexchange);
                let opts = ExtractOptions {
                    license: license.to_string(),
                    require_caption: Some(false),
                    created: a.created.clone(),
                    ..ExtractOptions::default()
                };
                match extract_project(&project, &opts) {
                    Ok((records, s)) => {
                        stats.merge(&s);
                        out.extend(records);
                    }
                    Err(_) => {
                        stats.projects += 1;
                        stats.failed_projects += 1;
                    }
                }
            }
        }
    }
    (out, stats)
}
