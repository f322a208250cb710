//! Best-worst scaling: per-item scores from 4-tuple judgments, split-half
//! reliability, Spearman correlation and min-max normalization.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TUPLE_SIZE: usize = 4;
pub const DEFAULT_REPEATS: usize = 100;
pub const MAX_SPLIT_RETRIES: usize = 1000;

#[derive(Debug, Error)]
pub enum BwsError {
    #[error("no annotations")]
    EmptyInput,
    #[error("invalid annotation for tuple `{tuple_id}`: {reason}")]
    InvalidRecord { tuple_id: String, reason: String },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("all scores are equal; range is degenerate")]
    DegenerateRange,
    #[error("could not split annotations so every item appears in both halves after {0} retries")]
    Unsplittable(usize),
    #[error("annotation csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One best-worst judgment over a 4-item tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub tuple_id: String,
    pub items: [String; TUPLE_SIZE],
    pub best: String,
    pub worst: String,
    pub annotator: String,
}

impl AnnotationRecord {
    pub fn validate(&self) -> Result<(), BwsError> {
        let invalid = |reason: &str| BwsError::InvalidRecord {
            tuple_id: self.tuple_id.clone(),
            reason: reason.to_string(),
        };
        if !self.items.contains(&self.best) {
            return Err(invalid("best item not in tuple"));
        }
        if !self.items.contains(&self.worst) {
            return Err(invalid("worst item not in tuple"));
        }
        if self.best == self.worst {
            return Err(invalid("best and worst are the same item"));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    tuple_id: String,
    item1: String,
    item2: String,
    item3: String,
    item4: String,
    best: String,
    worst: String,
    annotator: String,
}

/// Reads annotations from CSV with header
/// `tuple_id,item1,item2,item3,item4,best,worst,annotator`.
pub fn read_annotations<R: Read>(reader: R) -> Result<Vec<AnnotationRecord>, BwsError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize::<CsvRow>()
        .map(|row| {
            let row = row?;
            let rec = AnnotationRecord {
                tuple_id: row.tuple_id,
                items: [row.item1, row.item2, row.item3, row.item4],
                best: row.best,
                worst: row.worst,
                annotator: row.annotator,
            };
            rec.validate()?;
            Ok(rec)
        })
        .collect()
}

/// Per-item tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ItemCounts {
    pub appearances: usize,
    pub best: usize,
    pub worst: usize,
}

pub fn item_counts(annotations: &[AnnotationRecord]) -> Result<BTreeMap<String, ItemCounts>, BwsError> {
    if annotations.is_empty() {
        return Err(BwsError::EmptyInput);
    }
    let mut counts: BTreeMap<String, ItemCounts> = BTreeMap::new();
    for rec in annotations {
        rec.validate()?;
        for item in &rec.items {
            counts.entry(item.clone()).or_default().appearances += 1;
        }
        counts.get_mut(&rec.best).expect("validated").best += 1;
        counts.get_mut(&rec.worst).expect("validated").worst += 1;
    }
    Ok(counts)
}

/// score(item) = best/appearances − worst/appearances, in [−1, 1].
pub fn bws_scores(annotations: &[AnnotationRecord]) -> Result<BTreeMap<String, f64>, BwsError> {
    Ok(item_counts(annotations)?
        .into_iter()
        .map(|(item, c)| {
            let n = c.appearances as f64;
            (item, c.best as f64 / n - c.worst as f64 / n)
        })
        .collect())
}

/// Fractional (average-for-ties) ranks, 1-based.
pub fn fractional_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start..end share ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, BwsError> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(BwsError::DegenerateInput("constant input has no defined correlation"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho: Pearson correlation of fractional ranks.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64, BwsError> {
    if xs.len() != ys.len() {
        return Err(BwsError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.is_empty() {
        return Err(BwsError::DegenerateInput("empty input"));
    }
    pearson(&fractional_ranks(xs), &fractional_ranks(ys))
}

/// Spearman correlation between the BWS scores of two annotation halves,
/// over the items both halves contain.
pub fn split_half_rho(first: &[AnnotationRecord], second: &[AnnotationRecord]) -> Result<f64, BwsError> {
    let a = bws_scores(first)?;
    let b = bws_scores(second)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = a
        .iter()
        .filter_map(|(item, &x)| b.get(item).map(|&y| (x, y)))
        .unzip();
    spearman(&xs, &ys)
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitHalfResult {
    pub rho: f64,
    pub repeats: usize,
    pub seed: u64,
    pub per_repeat: Vec<f64>,
    pub resamples: usize,
}

fn items_of(recs: &[&AnnotationRecord]) -> BTreeSet<String> {
    recs.iter().flat_map(|r| r.items.iter().cloned()).collect()
}

/// Mean Spearman rho over `repeats` random half-splits of the annotation
/// records. A split that leaves some item in only one half is redrawn, up to
/// [`MAX_SPLIT_RETRIES`] times. Bit-reproducible for a fixed seed.
pub fn split_half_reliability(
    annotations: &[AnnotationRecord],
    seed: u64,
    repeats: usize,
) -> Result<SplitHalfResult, BwsError> {
    if annotations.is_empty() {
        return Err(BwsError::EmptyInput);
    }
    if repeats == 0 {
        return Err(BwsError::DegenerateInput("repeats must be positive"));
    }
    for rec in annotations {
        rec.validate()?;
    }
    let all_items = items_of(&annotations.iter().collect::<Vec<_>>());
    let mut per_repeat = Vec::with_capacity(repeats);
    let mut resamples = 0;
    for repeat in 0..repeats {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(repeat as u64);
        let mut order: Vec<&AnnotationRecord> = annotations.iter().collect();
        let mut split = None;
        for _ in 0..MAX_SPLIT_RETRIES {
            order.shuffle(&mut rng);
            let (a, b) = order.split_at(order.len() / 2);
            if items_of(a) == all_items && items_of(b) == all_items {
                split = Some((a.to_vec(), b.to_vec()));
                break;
            }
            resamples += 1;
        }
        let (a, b) = split.ok_or(BwsError::Unsplittable(MAX_SPLIT_RETRIES))?;
        let a: Vec<AnnotationRecord> = a.into_iter().cloned().collect();
        let b: Vec<AnnotationRecord> = b.into_iter().cloned().collect();
        per_repeat.push(split_half_rho(&a, &b)?);
    }
    let rho = per_repeat.iter().sum::<f64>() / repeats as f64;
    Ok(SplitHalfResult {
        rho,
        repeats,
        seed,
        per_repeat,
        resamples,
    })
}

/// (x − min) / (max − min).
pub fn min_max_normalize(scores: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>, BwsError> {
    let min = scores.values().copied().fold(f64::INFINITY, f64::min);
    let max = scores.values().copied().fold(f64::NEG_INFINITY, f64::max);
    if scores.len() < 2 || !(max > min) {
        return Err(BwsError::DegenerateRange);
    }
    Ok(scores
        .iter()
        .map(|(k, &v)| (k.clone(), (v - min) / (max - min)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn rec(id: &str, items: [&str; 4], best: &str, worst: &str) -> AnnotationRecord {
        AnnotationRecord {
            tuple_id: id.into(),
            items: items.map(String::from),
            best: best.into(),
            worst: worst.into(),
            annotator: "a1".into(),
        }
    }

    #[test]
    fn always_best_scores_one() {
        let anns: Vec<_> = (0..4)
            .map(|i| rec(&i.to_string(), ["x", "b", "c", "d"], "x", "d"))
            .collect();
        let s = bws_scores(&anns).unwrap();
        assert_eq!(s["x"], 1.0);
        assert_eq!(s["d"], -1.0);
        assert_eq!(s["b"], 0.0);
    }

    #[test]
    fn three_best_one_worst() {
        let anns = vec![
            rec("1", ["x", "b", "c", "d"], "x", "b"),
            rec("2", ["x", "b", "c", "d"], "x", "c"),
            rec("3", ["x", "b", "c", "d"], "x", "d"),
            rec("4", ["x", "b", "c", "d"], "b", "x"),
        ];
        assert_eq!(bws_scores(&anns).unwrap()["x"], 0.5);
    }

    #[test]
    fn invalid_records_rejected() {
        assert!(matches!(bws_scores(&[]), Err(BwsError::EmptyInput)));
        let same = rec("1", ["a", "b", "c", "d"], "a", "a");
        assert!(matches!(bws_scores(&[same]), Err(BwsError::InvalidRecord { .. })));
        let outside = rec("1", ["a", "b", "c", "d"], "z", "a");
        assert!(matches!(bws_scores(&[outside]), Err(BwsError::InvalidRecord { .. })));
    }

    #[test]
    fn spearman_basics() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(spearman(&xs, &xs).unwrap(), 1.0);
        assert_eq!(spearman(&xs, &[4.0, 3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!(matches!(spearman(&xs, &[1.0]), Err(BwsError::LengthMismatch(4, 1))));
        assert!(matches!(
            spearman(&xs, &[2.0; 4]),
            Err(BwsError::DegenerateInput(_))
        ));
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(fractional_ranks(&[1.0, 2.0, 2.0, 3.0]), [1.0, 2.5, 2.5, 4.0]);
        assert_eq!(fractional_ranks(&[5.0, 5.0, 5.0]), [2.0, 2.0, 2.0]);
    }

    #[test]
    fn normalize() {
        let m: BTreeMap<String, f64> = [("a", -1.0), ("b", 0.0), ("c", 1.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let n = min_max_normalize(&m).unwrap();
        assert_eq!((n["a"], n["b"], n["c"]), (0.0, 0.5, 1.0));
        let two: BTreeMap<String, f64> = [("a".to_string(), 0.2), ("b".to_string(), 0.8)].into();
        let n = min_max_normalize(&two).unwrap();
        assert_eq!((n["a"], n["b"]), (0.0, 1.0));
        let flat: BTreeMap<String, f64> = [("a".to_string(), 0.3), ("b".to_string(), 0.3)].into();
        assert!(matches!(min_max_normalize(&flat), Err(BwsError::DegenerateRange)));
    }

    #[test]
    fn csv_roundtrip() {
        let data = "tuple_id,item1,item2,item3,item4,best,worst,annotator\n\
                    t1,a,b,c,d,a,d,ann1\nt2,a,b,c,e,c,b,ann2\n";
        let anns = read_annotations(data.as_bytes()).unwrap();
        assert_eq!(anns.len(), 2);
        assert_eq!(anns[1].items[3], "e");
        let bad = "tuple_id,item1,item2,item3,item4,best,worst,annotator\nt1,a,b,c,d,a,a,x\n";
        assert!(read_annotations(bad.as_bytes()).is_err());
    }

    #[test]
    fn unsplittable_detected() {
        // item "e" appears once, so it can never be in both halves
        let anns = vec![
            rec("1", ["a", "b", "c", "d"], "a", "b"),
            rec("2", ["a", "b", "c", "e"], "a", "b"),
        ];
        assert!(matches!(
            split_half_reliability(&anns, 1, 1),
            Err(BwsError::Unsplittable(_))
        ));
    }
}
