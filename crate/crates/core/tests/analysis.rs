mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{brute_copying, brute_novelty, random_corpus};
use tikzlab_core::analysis::{caption_copying, copying_curve, ngram_novelty, novelty_curve, AnalysisError, NGramIndex};

#[test]
fn novelty_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..40 {
        let vocab = rng.random_range(2..8);
        let (train_docs, gen_docs) = (rng.random_range(0..10), rng.random_range(1..10));
        let training = random_corpus(&mut rng, train_docs, 100, vocab);
        let generated = random_corpus(&mut rng, gen_docs, 100, vocab);
        for n in 1..=6 {
            let index = NGramIndex::from_documents(n, &training).unwrap();
            let got = match ngram_novelty(&generated, &index) {
                Ok(v) => Some(v),
                Err(AnalysisError::NoNGrams { .. }) => None,
                Err(e) => panic!("{e}"),
            };
            assert_eq!(got, brute_novelty(&generated, &training, n));
        }
    }
}

#[test]
fn incremental_index_agrees() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let docs = random_corpus(&mut rng, 20, 50, 4);
    let bulk = NGramIndex::from_documents(3, &docs).unwrap();
    let mut inc = NGramIndex::new(3).unwrap();
    docs.iter().for_each(|d| inc.add_document(d));
    assert_eq!(bulk.len(), inc.len());
    assert_eq!(bulk.source_size(), inc.source_size());
    let probe = random_corpus(&mut rng, 10, 40, 4);
    assert_eq!(ngram_novelty(&probe, &bulk).ok(), ngram_novelty(&probe, &inc).ok());
}

#[test]
fn curve_reports_each_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let training = random_corpus(&mut rng, 8, 60, 5);
    let generated = random_corpus(&mut rng, 8, 60, 5);
    let curve = novelty_curve(&generated, &training, 1..=10).unwrap();
    for (n, v) in curve {
        assert_eq!(v, brute_novelty(&generated, &training, n));
    }
}

#[test]
fn copying_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut pairs = Vec::new();
    for _ in 0..200 {
        let vocab = rng.random_range(2..6);
        let caption = random_corpus(&mut rng, 1, 30, vocab).remove(0);
        let code = random_corpus(&mut rng, 1, 300, vocab).remove(0);
        for n in 1..=6 {
            let got = caption_copying(&caption, &code, n).ok();
            assert_eq!(got, brute_copying(&caption, &code, n));
        }
        pairs.push((caption, code));
    }
    for (n, pooled) in copying_curve(&pairs, 1..=4) {
        let (mut copied, mut total) = (0.0, 0.0);
        for (cap, code) in &pairs {
            if let Some(f) = brute_copying(cap, code, n) {
                let positions = (cap.len() + 1 - n) as f64;
                copied += f * positions;
                total += positions;
            }
        }
        let want = (total > 0.0).then(|| copied / total);
        let (got, want) = (pooled.unwrap(), want.unwrap());
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn zero_order_rejected() {
    assert!(matches!(NGramIndex::new(0), Err(AnalysisError::ZeroOrder)));
    assert!(matches!(caption_copying(&[], &[], 0), Err(AnalysisError::ZeroOrder)));
}
