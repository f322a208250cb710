use once_cell::sync::Lazy;
use regex::Regex;
use thiserror::Error;

use super::scan::brace_delta;
use crate::analysis::strip_comments;

/// The shipped rule file.
pub const DEFAULT_RULES: &str = include_str!("../../rules/preamble.rules");

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("rule line {line}: expected `ALLOW <regex>` or `DENY <regex>`")]
    Syntax { line: usize },
    #[error("rule line {line}: {source}")]
    Regex { line: usize, source: regex::Error },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleAction {
    Allow,
    Deny,
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub action: RuleAction,
    pub pattern: Regex,
}

/// Ordered allow/deny patterns; the first match decides and the default is
/// deny.
#[derive(Debug, Clone)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
}

static DEFAULT_SET: Lazy<RuleSet> = Lazy::new(|| RuleSet::parse(DEFAULT_RULES).expect("shipped rules parse"));

impl RuleSet {
    /// Parses one rule per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, RuleError> {
        let mut rules = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (action, pat) = if let Some(p) = line.strip_prefix("ALLOW ") {
                (RuleAction::Allow, p)
            } else if let Some(p) = line.strip_prefix("DENY ") {
                (RuleAction::Deny, p)
            } else {
                return Err(RuleError::Syntax { line: idx + 1 });
            };
            let pattern = Regex::new(pat.trim()).map_err(|source| RuleError::Regex { line: idx + 1, source })?;
            rules.push(Rule { action, pattern });
        }
        Ok(Self { rules })
    }

    pub fn shipped() -> &'static RuleSet {
        &DEFAULT_SET
    }

    pub fn allows(&self, line: &str) -> bool {
        self.rules
            .iter()
            .find(|r| r.pattern.is_match(line))
            .is_some_and(|r| r.action == RuleAction::Allow)
    }
}

/// Comment-free logical lines: a line whose braces stay open absorbs the
/// following lines until they close.
pub fn logical_lines(preamble: &str) -> Vec<String> {
    let stripped = strip_comments(preamble);
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut depth = 0i64;
    for line in stripped.lines() {
        if depth > 0 {
            cur.push('\n');
        }
        cur.push_str(line.trim_end());
        depth += brace_delta(line);
        if depth <= 0 {
            out.push(std::mem::take(&mut cur));
            depth = 0;
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Keeps the logical lines of `preamble` that `rules` allow, in order,
/// joined by newlines.
pub fn retain_preamble(preamble: &str, rules: &RuleSet) -> String {
    logical_lines(preamble)
        .into_iter()
        .filter(|l| rules.allows(l))
        .collect::<Vec<_>>()
        .join("\n")
}
