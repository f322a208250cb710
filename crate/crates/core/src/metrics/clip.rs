use serde::{Deserialize, Serialize};

use super::MetricError;

/// Scaling applied to the clamped cosine similarity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipScoreVariant {
    /// `100 · max(cos, 0)`.
    #[default]
    Cosine100,
    /// `100 · 2.5 · max(cos, 0)`, the reweighted form from the CLIPScore
    /// reference implementation.
    Weighted,
}

impl ClipScoreVariant {
    pub fn scale(self) -> f64 {
        match self {
            Self::Cosine100 => 100.0,
            Self::Weighted => 250.0,
        }
    }
}

impl std::str::FromStr for ClipScoreVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cosine100" => Ok(Self::Cosine100),
            "weighted" => Ok(Self::Weighted),
            other => Err(format!("unknown clipscore variant `{other}` (cosine100|weighted)")),
        }
    }
}

pub fn cosine(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::DimensionMismatch(a.len(), b.len()));
    }
    if !a.iter().chain(b).all(|v| v.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(MetricError::ZeroVector);
    }
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Text-image similarity, `100 · max(cos, 0)` in the default variant.
pub fn clip_score(text_emb: &[f64], image_emb: &[f64]) -> Result<f64, MetricError> {
    clip_score_with(text_emb, image_emb, ClipScoreVariant::Cosine100)
}

pub fn clip_score_with(a: &[f64], b: &[f64], variant: ClipScoreVariant) -> Result<f64, MetricError> {
    Ok(variant.scale() * cosine(a, b)?.max(0.0))
}

/// Image-image similarity between a reference and a generated figure.
pub fn clip_score_img(ref_image_emb: &[f64], gen_image_emb: &[f64]) -> Result<f64, MetricError> {
    clip_score(ref_image_emb, gen_image_emb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn extremes() {
        let e1 = [1.0, 0.0, 0.0];
        assert_eq!(clip_score(&e1, &e1).unwrap(), 100.0);
        assert_eq!(clip_score(&e1, &[0.0, 1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(clip_score(&e1, &[-1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(clip_score_img(&e1, &e1).unwrap(), 100.0);
    }

    #[test]
    fn known_cosine_half() {
        // cos(60°) = 0.5
        let a = [1.0, 0.0];
        let b = [0.5, 3f64.sqrt() / 2.0];
        assert!((clip_score_img(&a, &b).unwrap() - 50.0).abs() < 1e-12);
        assert!((clip_score_with(&a, &b, ClipScoreVariant::Weighted).unwrap() - 125.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(clip_score(&[1.0], &[1.0, 2.0]), Err(MetricError::DimensionMismatch(1, 2))));
        assert!(matches!(clip_score(&[0.0, 0.0], &[1.0, 2.0]), Err(MetricError::ZeroVector)));
        assert!(matches!(clip_score(&[f64::NAN], &[1.0]), Err(MetricError::NonFinite)));
    }

    proptest! {
        #[test]
        fn symmetric_and_scale_invariant(
            a in prop::collection::vec(-1.0f64..1.0, 6),
            b in prop::collection::vec(-1.0f64..1.0, 6),
            s in 0.1f64..50.0,
        ) {
            prop_assume!(a.iter().any(|v| v.abs() > 1e-3) && b.iter().any(|v| v.abs() > 1e-3));
            let ab = clip_score(&a, &b).unwrap();
            prop_assert!((ab - clip_score(&b, &a).unwrap()).abs() < 1e-9);
            let scaled: Vec<f64> = a.iter().map(|v| v * s).collect();
            prop_assert!((ab - clip_score(&scaled, &b).unwrap()).abs() < 1e-9);
            prop_assert!((0.0..=100.0).contains(&ab));
        }
    }
}
