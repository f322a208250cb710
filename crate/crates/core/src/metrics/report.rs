use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    clip_score_with, eed_with, kid, ClipScoreVariant, EedParams, EmbedError, Embedder, KidOptions,
    MetricError, DEFAULT_SHARED_K,
};
use crate::analysis::tokenize;
use crate::records::{PredRecord, RefRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Cer,
    Csr,
    Eed,
    Kid,
    ClipImg,
    Clip,
    Crystalbleu,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::Cer,
        Metric::Csr,
        Metric::Eed,
        Metric::Kid,
        Metric::ClipImg,
        Metric::Clip,
        Metric::Crystalbleu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Cer => "cer",
            Metric::Csr => "csr",
            Metric::Eed => "eed",
            Metric::Kid => "kid",
            Metric::ClipImg => "clip_img",
            Metric::Clip => "clip",
            Metric::Crystalbleu => "crystalbleu",
        }
    }

    pub fn needs_embedder(self) -> bool {
        matches!(self, Metric::Kid | Metric::ClipImg | Metric::Clip)
    }

    /// Parses a comma-separated list; `all` selects every metric.
    pub fn parse_list(list: &str) -> Result<Vec<Metric>, MetricError> {
        let mut out = Vec::new();
        for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            if name == "all" {
                out.extend(Self::ALL);
                continue;
            }
            let m = Self::ALL
                .into_iter()
                .find(|m| m.name() == name)
                .ok_or_else(|| MetricError::UnknownMetric(name.to_string()))?;
            out.push(m);
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricOptions {
    pub kid: KidOptions,
    pub crystalbleu_k: usize,
    pub clip_variant: ClipScoreVariant,
    pub eed: EedParams,
    pub dpi: u32,
}

impl Default for MetricOptions {
    fn default() -> Self {
        Self {
            kid: KidOptions::default(),
            crystalbleu_k: DEFAULT_SHARED_K,
            clip_variant: ClipScoreVariant::default(),
            eed: EedParams::default(),
            dpi: 300,
        }
    }
}

/// Rendered figures, looked up as `<dir>/<system>/<id>.png`, then
/// `<dir>/<id>.png`.
#[derive(Debug, Clone, Default)]
pub struct ImageDirs {
    pub pred: Option<PathBuf>,
    pub reference: Option<PathBuf>,
}

fn find_image(dir: Option<&Path>, system: Option<&str>, id: &str) -> Option<PathBuf> {
    let dir = dir?;
    let file = format!("{id}.png");
    system
        .map(|s| dir.join(s).join(&file))
        .into_iter()
        .chain(std::iter::once(dir.join(&file)))
        .find(|p| p.is_file())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ColumnValue {
    pub value: f64,
    /// Number of samples the value was computed over.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemRow {
    pub system: String,
    pub records: usize,
    pub columns: BTreeMap<&'static str, ColumnValue>,
    /// Requested columns that could not be computed, with the reason.
    pub omitted: BTreeMap<&'static str, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMetadata {
    pub provider: Option<String>,
    pub options: MetricOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub metadata: ReportMetadata,
    pub systems: Vec<SystemRow>,
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<ColumnValue> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| ColumnValue { value: sum / n as f64, n })
}

/// Computes the requested metric columns for every system in `preds`.
///
/// Predictions are aligned to references by id. Embedding-based columns are
/// omitted (with a reason) when no embedder is given, the embedder fails, or
/// images are missing; text columns are always produced.
pub fn metric_report(
    preds: &[PredRecord],
    refs: &[RefRecord],
    metrics: &[Metric],
    mut embedder: Option<&mut dyn Embedder>,
    images: &ImageDirs,
    opts: &MetricOptions,
) -> Result<MetricReport, MetricError> {
    let by_id: HashMap<&str, &RefRecord> = refs.iter().map(|r| (r.id.as_str(), r)).collect();
    for p in preds {
        if !by_id.contains_key(p.id.as_str()) {
            return Err(MetricError::MissingAlignment(p.id.clone()));
        }
    }
    let mut systems: BTreeMap<&str, Vec<&PredRecord>> = BTreeMap::new();
    for p in preds {
        systems.entry(p.system_name()).or_default().push(p);
    }

    let needs_bleu = metrics.contains(&Metric::Crystalbleu);
    let shared = if needs_bleu {
        let ref_tokens: Vec<Vec<String>> = refs.iter().map(|r| tokenize(&r.code)).collect();
        Some(super::trivially_shared_ngrams(&ref_tokens, opts.crystalbleu_k))
    } else {
        None
    };

    let mut rows = Vec::new();
    for (system, group) in systems {
        let mut row = SystemRow {
            system: system.to_string(),
            records: group.len(),
            columns: BTreeMap::new(),
            omitted: BTreeMap::new(),
        };
        let pairs: Vec<(&PredRecord, &RefRecord)> = group.iter().map(|p| (*p, by_id[p.id.as_str()])).collect();
        for &metric in metrics {
            let value = match metric {
                Metric::Cer => mean(group.iter().filter_map(|p| p.final_errors.map(|e| e as f64)))
                    .ok_or_else(|| "predictions carry no final_errors".to_string()),
                Metric::Csr => mean(group.iter().filter_map(|p| p.sampled_units))
                    .ok_or_else(|| "predictions carry no sampled_units".to_string()),
                Metric::Eed => {
                    let scores: Vec<f64> = pairs
                        .par_iter()
                        .map(|(p, r)| eed_with(&p.code, &r.code, &opts.eed))
                        .collect();
                    mean(scores).ok_or_else(|| "no pairs".to_string())
                }
                Metric::Crystalbleu => {
                    let (cands, refs): (Vec<_>, Vec<_>) =
                        pairs.iter().map(|(p, r)| (tokenize(&p.code), tokenize(&r.code))).unzip();
                    let stats = super::bleu_stats(&cands, &refs, shared.as_ref().expect("computed above"))?;
                    Ok(ColumnValue { value: stats.score(), n: pairs.len() })
                }
                Metric::Clip | Metric::ClipImg | Metric::Kid => match embedder.as_deref_mut() {
                    None => Err("no embedder configured".to_string()),
                    Some(e) => match embedding_column(metric, system, &pairs, e, images, opts) {
                        Ok(v) => v.ok_or_else(|| "no usable images".to_string()),
                        Err(MetricError::Embed(err)) => Err(format!("embedder unavailable: {err}")),
                        Err(MetricError::TooFewSamples(n)) => Err(format!("too few images for kid ({n})")),
                        Err(other) => return Err(other),
                    },
                },
            };
            match value {
                Ok(v) => {
                    row.columns.insert(metric.name(), v);
                }
                Err(reason) => {
                    row.omitted.insert(metric.name(), reason);
                }
            }
        }
        rows.push(row);
    }
    Ok(MetricReport {
        metadata: ReportMetadata {
            provider: embedder.map(|e| e.model_id().to_string()),
            options: opts.clone(),
        },
        systems: rows,
    })
}

fn embedding_column(
    metric: Metric,
    system: &str,
    pairs: &[(&PredRecord, &RefRecord)],
    embedder: &mut dyn Embedder,
    images: &ImageDirs,
    opts: &MetricOptions,
) -> Result<Option<ColumnValue>, MetricError> {
    let pred_img = |p: &PredRecord| find_image(images.pred.as_deref(), Some(system), &p.id);
    let ref_img = |r: &RefRecord| find_image(images.reference.as_deref(), None, &r.id);
    match metric {
        Metric::Clip => {
            let mut scores = Vec::new();
            for (p, r) in pairs {
                if let Some(img) = pred_img(p) {
                    let caption = p.caption.as_deref().unwrap_or(&r.caption);
                    let t = embedder.embed_text(caption)?;
                    let i = embedder.embed_image(&img)?;
                    scores.push(clip_score_with(&t.values, &i.values, opts.clip_variant)?);
                }
            }
            Ok(mean(scores))
        }
        Metric::ClipImg => {
            let mut scores = Vec::new();
            for (p, r) in pairs {
                if let (Some(pi), Some(ri)) = (pred_img(p), ref_img(r)) {
                    let a = embedder.embed_image(&ri)?;
                    let b = embedder.embed_image(&pi)?;
                    scores.push(clip_score_with(&a.values, &b.values, opts.clip_variant)?);
                }
            }
            Ok(mean(scores))
        }
        Metric::Kid => {
            let gen = pairs
                .iter()
                .filter_map(|(p, _)| pred_img(p))
                .map(|path| embedder.embed_image(&path))
                .collect::<Result<Vec<_>, EmbedError>>()?;
            let reference = pairs
                .iter()
                .filter_map(|(_, r)| ref_img(r))
                .map(|path| embedder.embed_image(&path))
                .collect::<Result<Vec<_>, EmbedError>>()?;
            if gen.is_empty() && reference.is_empty() {
                return Ok(None);
            }
            let est = kid(&gen, &reference, &opts.kid)?;
            Ok(Some(ColumnValue { value: est.mean, n: gen.len().min(reference.len()) }))
        }
        _ => unreachable!("text metric routed to embedding path"),
    }
}
