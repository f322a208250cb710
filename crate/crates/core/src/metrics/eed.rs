//! Extended edit distance: character-level CDER-style alignment with long
//! jumps at blanks and a coverage penalty for hypothesis characters that are
//! visited zero or several times.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EedParams {
    /// Cost of a jump, on top of the cheapest cell of the current row.
    pub alpha: f64,
    /// Coverage penalty weight.
    pub rho: f64,
    /// Cost of skipping a hypothesis character.
    pub deletion: f64,
    /// Cost of skipping a reference character.
    pub insertion: f64,
}

impl Default for EedParams {
    fn default() -> Self {
        Self {
            alpha: 2.0,
            rho: 0.3,
            deletion: 0.2,
            insertion: 1.0,
        }
    }
}

/// Collapses whitespace runs to one blank and pads both ends with a blank,
/// so the first and last words can be jump targets.
pub fn preprocess(text: &str) -> Vec<char> {
    let mut out = vec![' '];
    let mut in_space = false;
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !in_space {
                out.push(' ');
            }
            in_space = true;
        } else {
            out.push(ch);
            in_space = false;
        }
    }
    out.push(' ');
    out
}

/// Sentence-level EED in [0, 1]; lower is better and `eed(x, x) == 0`.
pub fn eed(hypothesis: &str, reference: &str) -> f64 {
    eed_with(hypothesis, reference, &EedParams::default())
}

pub fn eed_with(hypothesis: &str, reference: &str, params: &EedParams) -> f64 {
    eed_chars(&preprocess(hypothesis), &preprocess(reference), params)
}

pub fn eed_chars(hyp: &[char], reference: &[char], p: &EedParams) -> f64 {
    let width = hyp.len() + 1;
    // visits[i] counts how often column i held the row minimum, starting at -1
    let mut visits = vec![-1i64; width];
    let mut row = vec![1.0f64; width];
    row[0] = 0.0;
    let mut next = vec![f64::INFINITY; width];
    for &r in reference {
        next[0] = row[0] + 1.0;
        for i in 1..width {
            let sub = if r == hyp[i - 1] { 0.0 } else { 1.0 };
            next[i] = (next[i - 1] + p.deletion)
                .min(row[i - 1] + sub)
                .min(row[i] + p.insertion);
        }
        let (min_idx, min_val) = next
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best });
        visits[min_idx] += 1;
        if r == ' ' {
            let jump = p.alpha + min_val;
            for v in next.iter_mut() {
                *v = v.min(jump);
            }
        }
        std::mem::swap(&mut row, &mut next);
        next.fill(f64::INFINITY);
    }
    // Column 0 is the pre-alignment sentinel and is left out of coverage.
    let coverage = p.rho
        * visits[1..]
            .iter()
            .map(|&v| if v >= 0 { v as f64 } else { 1.0 })
            .sum::<f64>();
    ((row[width - 1] + coverage) / (reference.len() as f64 + coverage)).min(1.0)
}
