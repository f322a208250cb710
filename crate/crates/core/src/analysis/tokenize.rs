//! Moses-compatible tokenizer subset.
//!
//! Rules, applied to each whitespace-delimited chunk:
//! - alphanumerics, `-` and `.` accumulate into the current word;
//! - `,` stays inside a word only between two digits (`1,000`);
//! - `'` stays inside a word only between two letters (`don't`);
//! - every other character becomes a token of its own;
//! - a trailing `.` is split from a word unless the remaining stem contains
//!   a `.` itself (`e.g.`, `U.S.`) or is a single letter (`A.`).
//!
//! Hyphens are never split (Moses' non-aggressive mode) and no HTML escaping
//! is applied.

/// Tokenizes `text`. Deterministic and total.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split(char::is_whitespace).filter(|c| !c.is_empty()) {
        tokenize_chunk(chunk, &mut tokens);
    }
    tokens
}

/// Number of tokens `tokenize` would return, without allocating them.
pub fn token_count(text: &str) -> usize {
    tokenize(text).len()
}

fn tokenize_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut word = String::new();
    for (idx, &ch) in chars.iter().enumerate() {
        let prev = idx.checked_sub(1).map(|p| chars[p]);
        let next = chars.get(idx + 1).copied();
        let keep = if ch.is_alphanumeric() || ch == '-' || ch == '.' {
            true
        } else if ch == ',' {
            !word.is_empty()
                && prev.is_some_and(|c| c.is_numeric())
                && next.is_some_and(|c| c.is_numeric())
        } else if ch == '\'' {
            !word.is_empty()
                && prev.is_some_and(char::is_alphabetic)
                && next.is_some_and(char::is_alphabetic)
        } else {
            false
        };
        if keep {
            word.push(ch);
        } else {
            flush_word(&mut word, out);
            out.push(ch.to_string());
        }
    }
    flush_word(&mut word, out);
}

fn flush_word(word: &mut String, out: &mut Vec<String>) {
    if word.is_empty() {
        return;
    }
    let taken = std::mem::take(word);
    if taken.len() > 1 && taken.ends_with('.') {
        let stem = &taken[..taken.len() - 1];
        let mut stem_chars = stem.chars();
        let single_letter = matches!(
            (stem_chars.next(), stem_chars.next()),
            (Some(c), None) if c.is_alphabetic()
        );
        if !stem.contains('.') && !single_letter {
            out.push(stem.to_string());
            out.push(".".to_string());
            return;
        }
    }
    out.push(taken);
}
