//! Low-level TeX scanning helpers shared by the extraction passes.

use crate::analysis::comment_start;

/// Copy of `text` with every comment replaced by spaces of the same byte
/// length, so offsets into the mask are offsets into the original.
pub fn mask_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.split_inclusive('\n') {
        let (body, eol) = match line.strip_suffix('\n') {
            Some(b) => (b, "\n"),
            None => (line, ""),
        };
        match comment_start(body) {
            Some(c) => {
                out.push_str(&body[..c]);
                out.extend(std::iter::repeat_n(' ', body.len() - c));
            }
            None => out.push_str(body),
        }
        out.push_str(eol);
    }
    out
}

/// Byte offset just past the brace group opening at `open`, which must be
/// a `{`. Escaped braces do not count. `None` when unbalanced.
pub fn group_end(text: &str, open: usize) -> Option<usize> {
    let bytes = text.as_bytes();
    if bytes.get(open) != Some(&b'{') {
        return None;
    }
    let mut depth = 0usize;
    let mut i = open;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 1,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
        i += 1;
    }
    None
}

/// Offset just past an optional `[...]` argument starting at `at` (after
/// whitespace), or `at` itself when there is none.
pub fn skip_optional(text: &str, at: usize) -> Option<usize> {
    let pos = skip_ws(text, at);
    if text.as_bytes().get(pos) != Some(&b'[') {
        return Some(at);
    }
    let mut depth = 0usize;
    for (i, b) in text.bytes().enumerate().skip(pos) {
        match b {
            b'[' | b'{' => depth += 1,
            b']' | b'}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 && b == b']' {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

pub fn skip_ws(text: &str, at: usize) -> usize {
    at + text[at..].len() - text[at..].trim_start().len()
}

/// Net brace depth change over `text`, ignoring escaped braces.
pub fn brace_delta(text: &str) -> i64 {
    let bytes = text.as_bytes();
    let mut depth = 0i64;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'\\' => i += 1,
            b'{' => depth += 1,
            b'}' => depth -= 1,
            _ => {}
        }
        i += 1;
    }
    depth
}
