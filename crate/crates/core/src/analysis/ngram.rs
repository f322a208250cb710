use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use thiserror::Error;

use super::{strip_comments, tokenize};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("no {n}-grams in input (fewer than {n} tokens)")]
    NoNGrams { n: usize },
    #[error("n-gram order must be at least 1")]
    ZeroOrder,
    #[error("group `{0}` has no documents")]
    EmptyGroup(String),
}

/// Set of all token n-grams of a fixed order seen in a training corpus.
///
/// Tokens are interned so each gram is stored as a short id slice.
#[derive(Debug, Clone)]
pub struct NGramIndex {
    n: usize,
    vocab: HashMap<String, u32>,
    grams: HashSet<Box<[u32]>>,
    source_size: usize,
}

impl NGramIndex {
    pub fn new(n: usize) -> Result<Self, AnalysisError> {
        if n == 0 {
            return Err(AnalysisError::ZeroOrder);
        }
        Ok(Self {
            n,
            vocab: HashMap::new(),
            grams: HashSet::new(),
            source_size: 0,
        })
    }

    /// Builds an index over `docs`; gram extraction runs in parallel and the
    /// per-document sets are merged.
    pub fn from_documents(n: usize, docs: &[Vec<String>]) -> Result<Self, AnalysisError> {
        let mut index = Self::new(n)?;
        for tok in docs.iter().flatten() {
            let next = index.vocab.len() as u32;
            index.vocab.entry(tok.clone()).or_insert(next);
        }
        let vocab = &index.vocab;
        index.grams = docs
            .par_iter()
            .map(|doc| {
                let ids: Vec<u32> = doc.iter().map(|t| vocab[t]).collect();
                ids.windows(n).map(Box::from).collect::<HashSet<_>>()
            })
            .reduce(HashSet::new, |mut a, b| {
                if a.len() < b.len() {
                    return b.into_iter().chain(a).collect();
                }
                a.extend(b);
                a
            });
        index.source_size = docs.iter().map(Vec::len).sum();
        Ok(index)
    }

    pub fn add_document(&mut self, tokens: &[String]) {
        let ids: Vec<u32> = tokens
            .iter()
            .map(|t| {
                let next = self.vocab.len() as u32;
                *self.vocab.entry(t.clone()).or_insert(next)
            })
            .collect();
        self.grams.extend(ids.windows(self.n).map(Box::from));
        self.source_size += tokens.len();
    }

    pub fn contains(&self, gram: &[String]) -> bool {
        if gram.len() != self.n {
            return false;
        }
        let mut ids = Vec::with_capacity(gram.len());
        for tok in gram {
            match self.vocab.get(tok) {
                Some(&id) => ids.push(id),
                None => return false,
            }
        }
        self.grams.contains(ids.as_slice())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    /// Total number of tokens indexed.
    pub fn source_size(&self) -> usize {
        self.source_size
    }
}

/// Fraction of unique generated n-grams that never occur in the training
/// index. Uniqueness is taken on the generated side.
pub fn ngram_novelty(generated: &[Vec<String>], index: &NGramIndex) -> Result<f64, AnalysisError> {
    let n = index.n();
    let unique: HashSet<&[String]> = generated.iter().flat_map(|doc| doc.windows(n)).collect();
    if unique.is_empty() {
        return Err(AnalysisError::NoNGrams { n });
    }
    let novel = unique.iter().filter(|g| !index.contains(g)).count();
    Ok(novel as f64 / unique.len() as f64)
}

/// Raw counts behind [`caption_copying`], so corpus-level rates can be pooled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CopyCounts {
    pub copied: usize,
    pub total: usize,
}

impl CopyCounts {
    pub fn fraction(&self) -> Option<f64> {
        (self.total > 0).then(|| self.copied as f64 / self.total as f64)
    }
}

pub fn copy_counts(caption: &[String], code: &[String], n: usize) -> CopyCounts {
    if n == 0 || caption.len() < n {
        return CopyCounts::default();
    }
    let code_grams: HashSet<&[String]> = code.windows(n).collect();
    let windows = caption.windows(n);
    let total = windows.len();
    let copied = windows.filter(|g| code_grams.contains(g)).count();
    CopyCounts { copied, total }
}

/// Fraction of caption n-gram positions that appear as contiguous token runs
/// in the (comment-stripped, tokenized) code.
pub fn caption_copying(caption: &[String], code: &[String], n: usize) -> Result<f64, AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::ZeroOrder);
    }
    copy_counts(caption, code, n)
        .fraction()
        .ok_or(AnalysisError::NoNGrams { n })
}

/// Comment-strips and tokenizes TikZ code, optionally lowercasing tokens.
pub fn code_tokens(code: &str, lowercase: bool) -> Vec<String> {
    normalize(tokenize(&strip_comments(code)), lowercase)
}

pub fn text_tokens(text: &str, lowercase: bool) -> Vec<String> {
    normalize(tokenize(text), lowercase)
}

fn normalize(tokens: Vec<String>, lowercase: bool) -> Vec<String> {
    if lowercase {
        tokens.into_iter().map(|t| t.to_lowercase()).collect()
    } else {
        tokens
    }
}

/// Novelty for every order in `orders` against a training corpus.
///
/// Orders whose generated side has no n-grams are reported as `None`.
pub fn novelty_curve(
    generated: &[Vec<String>],
    training: &[Vec<String>],
    orders: impl IntoIterator<Item = usize>,
) -> Result<Vec<(usize, Option<f64>)>, AnalysisError> {
    orders
        .into_iter()
        .map(|n| {
            let index = NGramIndex::from_documents(n, training)?;
            match ngram_novelty(generated, &index) {
                Ok(v) => Ok((n, Some(v))),
                Err(AnalysisError::NoNGrams { .. }) => Ok((n, None)),
                Err(e) => Err(e),
            }
        })
        .collect()
}

/// Pooled caption copying over (caption, code) token pairs for each order.
pub fn copying_curve(
    pairs: &[(Vec<String>, Vec<String>)],
    orders: impl IntoIterator<Item = usize>,
) -> Vec<(usize, Option<f64>)> {
    orders
        .into_iter()
        .map(|n| {
            let pooled = pairs.iter().fold(CopyCounts::default(), |acc, (cap, code)| {
                let c = copy_counts(cap, code, n);
                CopyCounts {
                    copied: acc.copied + c.copied,
                    total: acc.total + c.total,
                }
            });
            (n, pooled.fraction())
        })
        .collect()
}

/// Mean comment-stripped token count per system.
pub fn complexity_stats(
    groups: &BTreeMap<String, Vec<String>>,
) -> Result<BTreeMap<String, f64>, AnalysisError> {
    groups
        .iter()
        .map(|(system, docs)| {
            if docs.is_empty() {
                return Err(AnalysisError::EmptyGroup(system.clone()));
            }
            let total: usize = docs.iter().map(|d| code_tokens(d, false).len()).sum();
            Ok((system.clone(), total as f64 / docs.len() as f64))
        })
        .collect()
}
