mod support;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::rank_pearson;
use tikzlab_core::bws::{
    bws_scores, fractional_ranks, min_max_normalize, read_annotations, spearman, split_half_reliability,
    split_half_rho, AnnotationRecord, BwsError,
};

fn rec(id: &str, items: [&str; 4], best: &str, worst: &str) -> AnnotationRecord {
    AnnotationRecord {
        tuple_id: id.into(),
        items: items.map(String::from),
        best: best.into(),
        worst: worst.into(),
        annotator: "a1".into(),
    }
}

#[test]
fn hand_computed_scores() {
    // "a" appears in 4 tuples: best 3 times, worst once -> (3 - 1) / 4
    let anns = vec![
        rec("t1", ["a", "b", "c", "d"], "a", "d"),
        rec("t2", ["a", "b", "c", "e"], "a", "b"),
        rec("t3", ["a", "c", "d", "e"], "a", "e"),
        rec("t4", ["a", "b", "d", "e"], "b", "a"),
    ];
    let s = bws_scores(&anns).unwrap();
    assert_eq!(s["a"], 0.5);
    // b: 3 appearances, best once, worst once
    assert_eq!(s["b"], 0.0);
    // c: 3 appearances, never chosen
    assert_eq!(s["c"], 0.0);
    // d: 3 appearances, worst once
    assert_eq!(s["d"], -1.0 / 3.0);
    // e: 3 appearances, worst once
    assert_eq!(s["e"], -1.0 / 3.0);
    let norm = min_max_normalize(&s).unwrap();
    assert_eq!(norm["a"], 1.0);
    assert_eq!(norm["d"], 0.0);
}

#[test]
fn csv_roundtrip_and_validation() {
    let csv = "tuple_id,item1,item2,item3,item4,best,worst,annotator\n\
               t1,a,b,c,d,a,d,x\n\
               t2,a,b,c,d,b,c,y\n";
    let anns = read_annotations(csv.as_bytes()).unwrap();
    assert_eq!(anns.len(), 2);
    assert_eq!(anns[1].best, "b");
    let bad = "tuple_id,item1,item2,item3,item4,best,worst,annotator\nt1,a,b,c,d,z,d,x\n";
    assert!(matches!(read_annotations(bad.as_bytes()), Err(BwsError::InvalidRecord { .. })));
}

#[test]
fn identical_halves_correlate_perfectly() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let anns = random_annotations(&mut rng, 40, 6);
    assert_eq!(split_half_rho(&anns, &anns.clone()).unwrap(), 1.0);
}

fn random_annotations(rng: &mut ChaCha8Rng, items: usize, rounds: usize) -> Vec<AnnotationRecord> {
    let names: Vec<String> = (0..items).map(|i| format!("item{i:04}")).collect();
    let mut out = Vec::new();
    for round in 0..rounds {
        let mut order = names.clone();
        order.shuffle(rng);
        for (k, chunk) in order.chunks_exact(4).enumerate() {
            let b = rng.random_range(0..4);
            let w = (b + rng.random_range(1..4)) % 4;
            out.push(AnnotationRecord {
                tuple_id: format!("r{round}-{k}"),
                items: [chunk[0].clone(), chunk[1].clone(), chunk[2].clone(), chunk[3].clone()],
                best: chunk[b].clone(),
                worst: chunk[w].clone(),
                annotator: "rand".into(),
            });
        }
    }
    out
}

#[test]
fn random_annotations_are_unreliable() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let anns = random_annotations(&mut rng, 1000, 24);
    let r = split_half_reliability(&anns, 7, 10).unwrap();
    assert!(r.rho.abs() < 0.2, "{}", r.rho);
    assert_eq!(r.per_repeat.len(), 10);
    let again = split_half_reliability(&anns, 7, 10).unwrap();
    assert_eq!(r.per_repeat, again.per_repeat);
}

#[test]
fn spearman_matches_rank_pearson_with_ties() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let n = rng.random_range(2..40);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0..5) as f64).collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.random_range(0..5) as f64 * 0.5).collect();
        let want = rank_pearson(&xs, &ys);
        match spearman(&xs, &ys) {
            Ok(got) => assert!((got - want).abs() < 1e-12, "{got} vs {want}"),
            Err(BwsError::DegenerateInput(_)) => assert!(want.is_nan()),
            Err(e) => panic!("{e}"),
        }
        assert_eq!(fractional_ranks(&xs), support::tie_ranks(&xs));
    }
}
