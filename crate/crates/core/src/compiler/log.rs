use once_cell::sync::Lazy;
use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// One message from a TeX log, anchored to a line of the compiled document
/// when the log names one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub line: Option<u32>,
    pub raw: String,
}

static FILE_LINE_ERROR: Lazy<Regex> =
    Lazy::new(|| Regex::new(r"^(?P<file>[^\s:!][^:]*\.[A-Za-z]+):(?P<line>\d+): (?P<msg>.*)$").unwrap());

static LINE_ANCHOR: Lazy<Regex> = Lazy::new(|| Regex::new(r"^l\.(?P<line>\d+)").unwrap());

static WARNING: Lazy<Regex> = Lazy::new(|| {
    Regex::new(r"^(?:LaTeX|Package \S+|Class \S+|pdfTeX) [Ww]arning: (?P<msg>.*)$").unwrap()
});

static INPUT_LINE: Lazy<Regex> = Lazy::new(|| Regex::new(r"on input line (?P<line>\d+)").unwrap());

/// Lines searched after a `! ...` message for its `l.<n>` anchor.
const ANCHOR_LOOKAHEAD: usize = 30;

fn parse_line_no(s: &str) -> Option<u32> {
    s.parse().ok()
}

/// Extracts diagnostics from a TeX log.
///
/// Recognizes `file:line: message` records (file-line-error mode), `! message`
/// blocks with a following `l.<n>` anchor, and LaTeX/package warnings.
/// Diagnostics with the same severity, line and message are merged. Never
/// fails; unrecognized lines are skipped.
pub fn parse_log(log: &str) -> Vec<Diagnostic> {
    let lines: Vec<&str> = log.lines().collect();
    let mut out: Vec<Diagnostic> = Vec::new();
    let mut push = |d: Diagnostic| {
        if !out
            .iter()
            .any(|o| o.severity == d.severity && o.line == d.line && o.message == d.message)
        {
            out.push(d);
        }
    };
    let mut idx = 0;
    while idx < lines.len() {
        let line = lines[idx];
        if let Some(c) = FILE_LINE_ERROR.captures(line) {
            push(Diagnostic {
                severity: Severity::Error,
                message: c["msg"].trim().to_string(),
                line: parse_line_no(&c["line"]),
                raw: line.to_string(),
            });
        } else if let Some(msg) = line.strip_prefix("! ").filter(|m| !m.trim_start().starts_with("==>")) {
            let mut anchor = None;
            let mut end = idx + 1;
            while end < lines.len() && end <= idx + ANCHOR_LOOKAHEAD {
                let next = lines[end];
                if next.starts_with("! ") || FILE_LINE_ERROR.is_match(next) {
                    break;
                }
                if let Some(c) = LINE_ANCHOR.captures(next) {
                    anchor = parse_line_no(&c["line"]);
                    end += 1;
                    break;
                }
                end += 1;
            }
            let raw_end = if anchor.is_some() { end } else { idx + 1 };
            push(Diagnostic {
                severity: Severity::Error,
                message: msg.trim().to_string(),
                line: anchor,
                raw: lines[idx..raw_end].join("\n"),
            });
        } else if let Some(c) = WARNING.captures(line) {
            let mut raw = vec![line];
            // package warnings continue on lines starting with "(<pkg>)"
            while let Some(next) = lines.get(idx + raw.len()) {
                if next.starts_with('(') && raw.len() < 8 {
                    raw.push(next);
                } else {
                    break;
                }
            }
            let joined = raw.join("\n");
            let line_no = INPUT_LINE
                .captures(&joined)
                .and_then(|c| parse_line_no(&c["line"]));
            push(Diagnostic {
                severity: Severity::Warning,
                message: c["msg"].trim().to_string(),
                line: line_no,
                raw: joined,
            });
        }
        idx += 1;
    }
    out
}

/// Drops line numbers of file-line-error records that name a file other
/// than `file_name` (for instance a package source), since those do not
/// refer to lines of the compiled document.
pub fn anchor_to_file(diagnostics: &mut [Diagnostic], file_name: &str) {
    for d in diagnostics.iter_mut() {
        if let Some(c) = FILE_LINE_ERROR.captures(&d.raw) {
            let file = &c["file"];
            let base = file.rsplit('/').next().unwrap_or(file);
            if base != file_name {
                d.line = None;
            }
        }
    }
}

pub fn error_count(diagnostics: &[Diagnostic]) -> usize {
    diagnostics.iter().filter(|d| d.severity == Severity::Error).count()
}

/// Smallest line number among error diagnostics.
pub fn earliest_error_line(diagnostics: &[Diagnostic]) -> Option<u32> {
    diagnostics
        .iter()
        .filter(|d| d.severity == Severity::Error)
        .filter_map(|d| d.line)
        .min()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_log() {
        assert!(parse_log("").is_empty());
    }

    #[test]
    fn file_line_error_record() {
        let d = parse_log("./main.tex:12: Undefined control sequence.\nl.12 \\foo\n");
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].severity, Severity::Error);
        assert_eq!(d[0].line, Some(12));
        assert_eq!(d[0].message, "Undefined control sequence.");
    }

    #[test]
    fn bang_block_with_anchor() {
        let log = "! Missing $ inserted.\n<inserted text> \n                $\nl.7 a^\n       b\n";
        let d = parse_log(log);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].line, Some(7));
        assert_eq!(d[0].message, "Missing $ inserted.");
        assert!(d[0].raw.ends_with("l.7 a^"));
    }

    #[test]
    fn anchor_not_stolen_from_next_error() {
        let log = "! First.\n! Second.\nl.3 x\n";
        let d = parse_log(log);
        assert_eq!(d[0].line, None);
        assert_eq!(d[1].line, Some(3));
    }

    #[test]
    fn fatal_trailer_is_not_an_error() {
        let log = "./doc.tex:3: Emergency stop.\n!  ==> Fatal error occurred, no output PDF file produced!\n";
        assert_eq!(error_count(&parse_log(log)), 1);
    }

    #[test]
    fn foreign_file_lines_dropped() {
        let log = "/usr/share/texmf/tex/latex/pgf/pgf.sty:40: Bad thing.\n./doc.tex:5: Other thing.\n";
        let mut d = parse_log(log);
        anchor_to_file(&mut d, "doc.tex");
        assert_eq!(d[0].line, None);
        assert_eq!(d[1].line, Some(5));
    }

    #[test]
    fn duplicates_merged() {
        let log = "./a.tex:4: Undefined control sequence.\n./a.tex:4: Undefined control sequence.\n";
        assert_eq!(parse_log(log).len(), 1);
    }

    #[test]
    fn warnings() {
        let log = "Package pgf Warning: Returning node center instead of a point on node border.\n\
                   (pgf)               Did you specify a point on input line 9.\n\
                   LaTeX Warning: Reference `x' on page 1 undefined on input line 3.\n";
        let d = parse_log(log);
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|x| x.severity == Severity::Warning));
        assert_eq!(d[0].line, Some(9));
        assert_eq!(d[1].line, Some(3));
        assert_eq!(error_count(&d), 0);
    }

    #[test]
    fn earliest_line() {
        let log = "./d.tex:9: A.\n./d.tex:4: B.\n! C.\n";
        let d = parse_log(log);
        assert_eq!(error_count(&d), 3);
        assert_eq!(earliest_error_line(&d), Some(4));
    }

    proptest! {
        #[test]
        fn total_on_arbitrary_input(bytes in prop::collection::vec(any::<u8>(), 0..400)) {
            let text = String::from_utf8_lossy(&bytes);
            let _ = parse_log(&text);
        }

        #[test]
        fn total_on_log_like_input(s in "(! |l\\.[0-9]{0,3}|\\./a\\.tex:[0-9]{1,3}: |Package x Warning: |\\(x\\)|[a-z ]{0,8}|\n){0,40}") {
            let d = parse_log(&s);
            prop_assert!(error_count(&d) <= s.lines().count());
        }
    }
}
