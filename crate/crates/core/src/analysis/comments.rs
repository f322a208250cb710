/// Removes TeX comments: on each line, everything from the first `%` that is
/// not escaped by an odd run of backslashes. Line breaks are preserved, so a
/// comment-only line becomes an empty line and line numbers stay stable.
pub fn strip_comments(code: &str) -> String {
    let mut out = String::with_capacity(code.len());
    for line in code.split_inclusive('\n') {
        let (body, eol) = match line.strip_suffix('\n') {
            Some(b) => (b, "\n"),
            None => (line, ""),
        };
        out.push_str(&body[..comment_start(body).unwrap_or(body.len())]);
        out.push_str(eol);
    }
    out
}

/// Byte offset of the first unescaped `%` in `line`, if any.
pub fn comment_start(line: &str) -> Option<usize> {
    let bytes = line.as_bytes();
    let mut backslashes = 0usize;
    for (idx, &b) in bytes.iter().enumerate() {
        match b {
            b'\\' => backslashes += 1,
            b'%' if backslashes % 2 == 0 => return Some(idx),
            _ => backslashes = 0,
        }
    }
    None
}
