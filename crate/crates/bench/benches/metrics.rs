use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tikzlab_core::analysis::{ngram_novelty, tokenize, NGramIndex};
use tikzlab_core::compiler::parse_log;
use tikzlab_core::metrics::{crystal_bleu, eed, kid, KidOptions};

fn picture(rng: &mut ChaCha8Rng, lines: usize) -> String {
    let mut s = String::from("\\begin{tikzpicture}\n");
    for _ in 0..lines {
        let (x, y) = (rng.random_range(0..10), rng.random_range(0..10));
        s.push_str(&format!("\\draw[thick] ({x},{y}) -- ({y},{x}) node[above] {{$p_{x}$}};\n"));
    }
    s.push_str("\\end{tikzpicture}");
    s
}

fn bench(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = picture(&mut rng, 30);
    let b = picture(&mut rng, 30);
    c.bench_function("eed 30 lines", |bench| bench.iter(|| eed(black_box(&a), black_box(&b))));

    let corpus: Vec<Vec<String>> = (0..200).map(|_| tokenize(&picture(&mut rng, 20))).collect();
    let cands: Vec<Vec<String>> = (0..200).map(|_| tokenize(&picture(&mut rng, 20))).collect();
    c.bench_function("crystalbleu 200 docs k=500", |bench| {
        bench.iter(|| crystal_bleu(black_box(&cands), black_box(&corpus), 500).unwrap())
    });

    let x: Vec<Vec<f64>> = (0..500).map(|_| (0..64).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let y: Vec<Vec<f64>> = (0..500).map(|_| (0..64).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let opts = KidOptions { subsets: 10, ..KidOptions::default() };
    c.bench_function("kid 500x64 10 subsets", |bench| bench.iter(|| kid(black_box(&x), black_box(&y), &opts).unwrap()));

    let mut log = String::from("This is pdfTeX, Version 3.141592653\n");
    for i in 0..500 {
        log.push_str(&format!("./doc.tex:{i}: Undefined control sequence.\nl.{i} \\foo\n\n"));
        log.push_str("Package pgfkeys Warning: unknown key on input line 3.\n");
    }
    c.bench_function("parse_log 1000 diagnostics", |bench| bench.iter(|| parse_log(black_box(&log))));

    let index = NGramIndex::from_documents(4, &corpus).unwrap();
    c.bench_function("novelty 4-gram 200 docs", |bench| bench.iter(|| ngram_novelty(black_box(&cands), &index).unwrap()));
}

criterion_group!(benches, bench);
criterion_main!(benches);
