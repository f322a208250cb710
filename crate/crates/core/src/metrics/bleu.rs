use std::collections::{HashMap, HashSet};

use super::MetricError;

pub const MAX_ORDER: usize = 4;
/// Number of trivially shared n-grams ignored by default.
pub const DEFAULT_SHARED_K: usize = 500;

type Gram = Vec<String>;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for g in tokens.windows(n) {
        *counts.entry(g).or_insert(0) += 1;
    }
    counts
}

/// The `k` most frequent n-grams (orders 1..=4 pooled) of a corpus. Ties are
/// broken by order, then lexicographically, so the set is deterministic.
pub fn trivially_shared_ngrams(corpus: &[Vec<String>], k: usize) -> HashSet<Gram> {
    if k == 0 {
        return HashSet::new();
    }
    let mut freq: HashMap<&[String], usize> = HashMap::new();
    for doc in corpus {
        for n in 1..=MAX_ORDER {
            for g in doc.windows(n) {
                *freq.entry(g).or_insert(0) += 1;
            }
        }
    }
    let mut ranked: Vec<(&[String], usize)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.len().cmp(&b.0.len())).then(a.0.cmp(b.0)));
    ranked.into_iter().take(k).map(|(g, _)| g.to_vec()).collect()
}

/// Modified n-gram precision statistics accumulated over a corpus.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BleuStats {
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    pub candidate_len: usize,
    pub reference_len: usize,
}

impl BleuStats {
    /// Geometric mean of the four precisions (uniform weights) times the
    /// brevity penalty. Any zero precision yields 0.
    pub fn score(&self) -> f64 {
        if self.candidate_len == 0 {
            return 0.0;
        }
        let mut log_sum = 0.0;
        for n in 0..MAX_ORDER {
            if self.matches[n] == 0 || self.totals[n] == 0 {
                return 0.0;
            }
            log_sum += (self.matches[n] as f64 / self.totals[n] as f64).ln();
        }
        let bp = if self.candidate_len > self.reference_len {
            1.0
        } else {
            (1.0 - self.reference_len as f64 / self.candidate_len as f64).exp()
        };
        bp * (log_sum / MAX_ORDER as f64).exp()
    }
}

pub fn bleu_stats(
    candidates: &[Vec<String>],
    references: &[Vec<String>],
    ignored: &HashSet<Gram>,
) -> Result<BleuStats, MetricError> {
    if candidates.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    if candidates.len() != references.len() {
        return Err(MetricError::LengthMismatch(candidates.len(), references.len()));
    }
    let mut stats = BleuStats::default();
    for (cand, reference) in candidates.iter().zip(references) {
        stats.candidate_len += cand.len();
        stats.reference_len += reference.len();
        for n in 1..=MAX_ORDER {
            let ref_counts = ngram_counts(reference, n);
            for (gram, count) in ngram_counts(cand, n) {
                if ignored.contains(gram) {
                    continue;
                }
                stats.totals[n - 1] += count;
                stats.matches[n - 1] += count.min(ref_counts.get(gram).copied().unwrap_or(0));
            }
        }
    }
    Ok(stats)
}

/// Corpus-level BLEU (4-gram, uniform weights, brevity penalty) with the `k`
/// most frequent reference-corpus n-grams removed from all counts. `k = 0`
/// is plain corpus BLEU.
pub fn crystal_bleu(candidates: &[Vec<String>], references: &[Vec<String>], k: usize) -> Result<f64, MetricError> {
    let ignored = trivially_shared_ngrams(references, k);
    Ok(bleu_stats(candidates, references, &ignored)?.score())
}
