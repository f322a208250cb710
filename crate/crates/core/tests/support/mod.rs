//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

pub mod fakes;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Number of positions at which `gram` occurs in `tokens`.
fn occurrences(tokens: &[String], gram: &[String]) -> usize {
    if gram.len() > tokens.len() {
        return 0;
    }
    (0..=tokens.len() - gram.len())
        .filter(|&i| &tokens[i..i + gram.len()] == gram)
        .count()
}

/// Corpus BLEU-4 with clipped counts, uniform weights and the usual brevity
/// penalty, written with plain position scans.
pub fn reference_bleu(candidates: &[Vec<String>], references: &[Vec<String>]) -> f64 {
    let mut log_precision = 0.0;
    for n in 1..=4 {
        let mut matched = 0usize;
        let mut total = 0usize;
        for (cand, reference) in candidates.iter().zip(references) {
            if cand.len() < n {
                continue;
            }
            let mut seen: Vec<&[String]> = Vec::new();
            for i in 0..=cand.len() - n {
                let gram = &cand[i..i + n];
                total += 1;
                if seen.contains(&gram) {
                    continue;
                }
                seen.push(gram);
                matched += occurrences(cand, gram).min(occurrences(reference, gram));
            }
        }
        if matched == 0 {
            return 0.0;
        }
        log_precision += (matched as f64 / total as f64).ln() / 4.0;
    }
    let c: usize = candidates.iter().map(Vec::len).sum();
    let r: usize = references.iter().map(Vec::len).sum();
    if c == 0 {
        return 0.0;
    }
    let bp = if c > r { 1.0 } else { (1.0 - r as f64 / c as f64).exp() };
    bp * log_precision.exp()
}

/// Unique generated n-grams found in no training document, over all unique
/// generated n-grams; `None` when there are none.
pub fn brute_novelty(generated: &[Vec<String>], training: &[Vec<String>], n: usize) -> Option<f64> {
    let mut unique: Vec<&[String]> = Vec::new();
    for doc in generated {
        if doc.len() < n {
            continue;
        }
        for i in 0..=doc.len() - n {
            let g = &doc[i..i + n];
            if !unique.contains(&g) {
                unique.push(g);
            }
        }
    }
    if unique.is_empty() {
        return None;
    }
    let novel = unique
        .iter()
        .filter(|g| training.iter().all(|t| occurrences(t, g) == 0))
        .count();
    Some(novel as f64 / unique.len() as f64)
}

/// Share of caption n-gram positions whose gram appears somewhere in `code`.
pub fn brute_copying(caption: &[String], code: &[String], n: usize) -> Option<f64> {
    if caption.len() < n {
        return None;
    }
    let positions = caption.len() - n + 1;
    let copied = (0..positions)
        .filter(|&i| occurrences(code, &caption[i..i + n]) > 0)
        .count();
    Some(copied as f64 / positions as f64)
}

/// Average rank with ties, counted directly: `less + (equal + 1) / 2`.
pub fn tie_ranks(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let less = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64;
            less + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let vx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let vy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn rank_pearson(xs: &[f64], ys: &[f64]) -> f64 {
    pearson(&tie_ranks(xs), &tie_ranks(ys))
}

/// Standard normal draws by Box-Muller, so the oracle does not lean on the
/// distribution code under test.
pub fn gaussian_samples(seed: u64, n: usize, dim: usize, shift: &[f64]) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|d| {
                    let u1: f64 = 1.0 - rng.random::<f64>();
                    let u2: f64 = rng.random::<f64>();
                    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos() + shift[d]
                })
                .collect()
        })
        .collect()
}

/// Random corpus over a small vocabulary so n-grams repeat often.
pub fn random_corpus(rng: &mut ChaCha8Rng, docs: usize, max_len: usize, vocab: usize) -> Vec<Vec<String>> {
    (0..docs)
        .map(|_| {
            let len = rng.random_range(0..=max_len);
            (0..len).map(|_| format!("w{}", rng.random_range(0..vocab))).collect()
        })
        .collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-12 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Unbiased squared MMD with the cubic polynomial kernel over the full
/// samples, straight from the definition.
pub fn mmd2_unbiased(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let d = x[0].len() as f64;
    let k = |a: &[f64], b: &[f64]| (a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>() / d + 1.0).powi(3);
    let m = x.len();
    assert_eq!(m, y.len());
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                total += k(&x[i], &x[j]) + k(&y[i], &y[j]) - k(&x[i], &y[j]) - k(&x[j], &y[i]);
            }
        }
    }
    total / (m * (m - 1)) as f64
}

/// Root of the bundled fixture tree.
pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

/// `(caption, code)` pairs from a file of `### caption` headers, each
/// followed by the exact document text.
pub fn expected_records(text: &str) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for line in text.lines() {
        if let Some(caption) = line.strip_prefix("### ") {
            out.push((caption.to_string(), String::new()));
        } else {
            let code = &mut out.last_mut().expect("header first").1;
            if !code.is_empty() {
                code.push('\n');
            }
            code.push_str(line);
        }
    }
    out
}
