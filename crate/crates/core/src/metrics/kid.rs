use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MetricError;

/// Feature sets up to this size get their kernel matrices precomputed.
const GRAM_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KidOptions {
    pub subset_size: usize,
    pub subsets: usize,
    pub degree: i32,
    pub seed: u64,
}

impl Default for KidOptions {
    fn default() -> Self {
        Self {
            subset_size: 1000,
            subsets: 100,
            degree: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KidEstimate {
    pub mean: f64,
    pub std: f64,
    pub subset_size: usize,
    pub subsets: usize,
}

/// `(x·y / d + 1)^degree`.
pub fn polynomial_kernel(x: &[f64], y: &[f64], degree: i32) -> f64 {
    let d = x.len() as f64;
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (dot / d + 1.0).powi(degree)
}

/// Kernel Inception Distance between generated and reference features.
///
/// Each of `subsets` rounds draws `m = min(subset_size, |gen|, |ref|)`
/// samples per side and computes the unbiased squared MMD
/// `Σ_{i≠j} [k(x_i,x_j) + k(y_i,y_j) − k(x_i,y_j) − k(x_j,y_i)] / (m(m−1))`.
/// When both sides have the same size the two subsets share their index
/// draw, so identical inputs give exactly zero. The result is the mean over
/// rounds and may be slightly negative.
pub fn kid<F: AsRef<[f64]> + Sync>(gen: &[F], reference: &[F], opts: &KidOptions) -> Result<KidEstimate, MetricError> {
    if gen.len() < 2 || reference.len() < 2 {
        return Err(MetricError::TooFewSamples(gen.len().min(reference.len())));
    }
    if opts.subsets == 0 || opts.subset_size < 2 {
        return Err(MetricError::InvalidOption("kid needs subsets >= 1 and subset_size >= 2"));
    }
    let dim = gen[0].as_ref().len();
    for f in gen.iter().chain(reference) {
        let f = f.as_ref();
        if f.len() != dim {
            return Err(MetricError::DimensionMismatch(dim, f.len()));
        }
        if !f.iter().all(|v| v.is_finite()) {
            return Err(MetricError::NonFinite);
        }
    }
    let m = opts.subset_size.min(gen.len()).min(reference.len());
    let paired = gen.len() == reference.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let draws: Vec<(Vec<usize>, Vec<usize>)> = (0..opts.subsets)
        .map(|_| {
            let ix = sample(&mut rng, gen.len(), m).into_vec();
            let iy = if paired { ix.clone() } else { sample(&mut rng, reference.len(), m).into_vec() };
            (ix, iy)
        })
        .collect();

    let degree = opts.degree;
    let k = |a: &F, b: &F| polynomial_kernel(a.as_ref(), b.as_ref(), degree);
    let values: Vec<f64> = if gen.len().max(reference.len()) <= GRAM_LIMIT {
        let gram = |a: &[F], b: &[F]| -> Vec<Vec<f64>> {
            a.iter().map(|x| b.iter().map(|y| k(x, y)).collect()).collect()
        };
        let (kxx, kyy, kxy) = (gram(gen, gen), gram(reference, reference), gram(gen, reference));
        draws
            .iter()
            .map(|(ix, iy)| subset_mmd(ix, iy, |a, b| kxx[a][b], |a, b| kyy[a][b], |a, b| kxy[a][b]))
            .collect()
    } else {
        draws
            .iter()
            .map(|(ix, iy)| {
                subset_mmd(
                    ix,
                    iy,
                    |a, b| k(&gen[a], &gen[b]),
                    |a, b| k(&reference[a], &reference[b]),
                    |a, b| k(&gen[a], &reference[b]),
                )
            })
            .collect()
    };
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    Ok(KidEstimate {
        mean,
        std: var.sqrt(),
        subset_size: m,
        subsets: opts.subsets,
    })
}

fn subset_mmd(
    ix: &[usize],
    iy: &[usize],
    kxx: impl Fn(usize, usize) -> f64,
    kyy: impl Fn(usize, usize) -> f64,
    kxy: impl Fn(usize, usize) -> f64,
) -> f64 {
    let m = ix.len();
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            sxx += kxx(ix[a], ix[b]);
            syy += kyy(iy[a], iy[b]);
            sxy += kxy(ix[a], iy[b]);
        }
    }
    (sxx + syy - 2.0 * sxy) / (m * (m - 1)) as f64
}
