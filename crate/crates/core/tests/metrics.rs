mod support;

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{gaussian_samples, mmd2_unbiased, random_corpus, reference_bleu};
use tikzlab_core::analysis::tokenize;
use tikzlab_core::metrics::{clip_score, crystal_bleu, eed, kid, KidOptions};
use tikzlab_core::{read_jsonl, Embedder, MockEmbedder, TikzRecord};

fn fixture_records() -> Vec<TikzRecord> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/records50.jsonl");
    read_jsonl(BufReader::new(File::open(path).unwrap())).unwrap()
}

#[test]
fn identities_over_fixture_records() {
    let records = fixture_records();
    assert_eq!(records.len(), 50);
    let mut embedder = MockEmbedder::new(0);
    let mut features = Vec::new();
    for r in &records {
        assert_eq!(eed(&r.code, &r.code), 0.0, "{}", r.id);
        let toks = vec![tokenize(&r.code)];
        assert_eq!(crystal_bleu(&toks, &toks, 0).unwrap(), 1.0, "{}", r.id);
        let e = embedder.embed_text(&r.caption).unwrap().values;
        assert!((clip_score(&e, &e.clone()).unwrap() - 100.0).abs() < 1e-9);
        features.push(e);
    }
    let opts = KidOptions { subset_size: 50, subsets: 20, ..KidOptions::default() };
    assert!(kid(&features, &features, &opts).unwrap().mean.abs() <= 1e-9);
}

#[test]
fn corpus_bleu_matches_reference_implementation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let docs = rng.random_range(1..12);
        let cands = random_corpus(&mut rng, docs, 30, 5);
        let refs = random_corpus(&mut rng, docs, 30, 5);
        let got = crystal_bleu(&cands, &refs, 0).unwrap();
        let want = reference_bleu(&cands, &refs);
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }
}

#[test]
fn reference_bleu_sanity() {
    // one 5-token candidate against a 6-token reference sharing 4 tokens in order
    let c = vec!["a b c d x".split(' ').map(String::from).collect::<Vec<_>>()];
    let r = vec!["a b c d e f".split(' ').map(String::from).collect::<Vec<_>>()];
    // p1 = 4/5, p2 = 3/4, p3 = 2/3, p4 = 1/2, bp = exp(1 - 6/5)
    let want = (1.0f64 - 6.0 / 5.0).exp() * (0.8f64 * 0.75 * (2.0 / 3.0) * 0.5).powf(0.25);
    assert!((reference_bleu(&c, &r) - want).abs() < 1e-12);
    assert!((crystal_bleu(&c, &r, 0).unwrap() - want).abs() < 1e-12);
}

#[test]
fn shared_ngrams_are_ignored() {
    let doc: Vec<String> = "x y x y x y a b c d".split(' ').map(String::from).collect();
    let other: Vec<String> = "x y x y x y q r s t".split(' ').map(String::from).collect();
    let plain = crystal_bleu(&[other.clone()], &[doc.clone()], 0).unwrap();
    let filtered = crystal_bleu(&[other], &[doc], 10).unwrap();
    assert!(plain > 0.0);
    assert!(filtered < plain);
}

#[test]
fn kid_matches_direct_mmd() {
    let x = gaussian_samples(3, 120, 8, &[0.0; 8]);
    let y = gaussian_samples(4, 120, 8, &[0.5; 8]);
    let opts = KidOptions { subset_size: 1000, subsets: 3, ..KidOptions::default() };
    let got = kid(&x, &y, &opts).unwrap().mean;
    let want = mmd2_unbiased(&x, &y);
    assert!((got - want).abs() < 1e-9 * want.abs().max(1.0), "{got} vs {want}");
}

#[test]
fn kid_separates_gaussians() {
    let single = KidOptions { subsets: 1, ..KidOptions::default() };
    // spread of the same-distribution estimate, from independent draws
    let null: Vec<f64> = (0..30u64)
        .map(|s| {
            let a = gaussian_samples(1000 + 2 * s, 500, 8, &[0.0; 8]);
            let b = gaussian_samples(1001 + 2 * s, 500, 8, &[0.0; 8]);
            kid(&a, &b, &single).unwrap().mean
        })
        .collect();
    let sd = (null.iter().map(|v| v * v).sum::<f64>() / null.len() as f64).sqrt();
    let shift = vec![2.0 / 8f64.sqrt(); 8];
    for seed in 0..5u64 {
        let x = gaussian_samples(seed * 2, 500, 8, &[0.0; 8]);
        let y = gaussian_samples(seed * 2 + 1, 500, 8, &[0.0; 8]);
        let z = gaussian_samples(seed * 2 + 1, 500, 8, &shift);
        let opts = KidOptions { seed, ..KidOptions::default() };
        let same = kid(&x, &y, &opts).unwrap().mean;
        let shifted = kid(&x, &z, &opts).unwrap().mean;
        assert!(same.abs() < 4.0 * sd, "seed {seed}: {same} (null sd {sd})");
        assert!(shifted > 0.1, "seed {seed}: {shifted}");
    }
}

#[test]
fn kid_is_seed_reproducible() {
    let x = gaussian_samples(1, 60, 4, &[0.0; 4]);
    let y = gaussian_samples(2, 80, 4, &[0.0; 4]);
    let opts = KidOptions { subset_size: 30, subsets: 7, degree: 3, seed: 5 };
    assert_eq!(kid(&x, &y, &opts).unwrap(), kid(&x, &y, &opts).unwrap());
}
