use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;
use tikzlab_core::metrics::{metric_report, open_embedder, CachedEmbedder, Embedder, ImageDirs, Metric, MetricReport};
use tikzlab_core::{Config, PredRecord, Provenance, RefRecord};

use crate::output::{read_records, write_json, Status};

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Predictions: JSON Lines with `id`, `code` and optional `system`.
    #[arg(long, value_name = "FILE")]
    pred: PathBuf,
    /// References: JSON Lines with `id`, `code` and `caption`.
    #[arg(long = "ref", value_name = "FILE")]
    reference: PathBuf,
    /// Comma-separated metrics (cer, csr, eed, kid, clip_img, clip, crystalbleu) or `all`.
    #[arg(long, default_value = "all")]
    metrics: String,
    /// Rendered predictions, as DIR/<system>/<id>.png or DIR/<id>.png.
    #[arg(long, value_name = "DIR")]
    pred_images: Option<PathBuf>,
    /// Rendered references, as DIR/<id>.png.
    #[arg(long, value_name = "DIR")]
    ref_images: Option<PathBuf>,
    /// JSON Lines cache of embeddings, reused across runs.
    #[arg(long, value_name = "FILE")]
    embed_cache: Option<PathBuf>,
    /// Report file.
    #[arg(long, value_name = "FILE", default_value = "report.json")]
    out: PathBuf,
}

#[derive(Serialize)]
struct Report<'a> {
    provenance: &'a Provenance,
    report: &'a MetricReport,
}

pub fn run(args: EvaluateArgs, config: &Config) -> Result<Status> {
    let mut provenance = Provenance::new("evaluate", config);
    provenance.add_input(&args.pred)?;
    provenance.add_input(&args.reference)?;
    let preds: Vec<PredRecord> = read_records(&args.pred)?;
    let refs: Vec<RefRecord> = read_records(&args.reference)?;
    let metrics = Metric::parse_list(&args.metrics)?;
    let images = ImageDirs {
        pred: args.pred_images.clone(),
        reference: args.ref_images.clone(),
    };
    for dir in [&args.pred_images, &args.ref_images].into_iter().flatten() {
        provenance.add_input(dir)?;
    }

    let needs_embedder = metrics.iter().any(|m| m.needs_embedder());
    let mut embedder: Option<Box<dyn Embedder>> = match (&config.embedder_addr, needs_embedder) {
        (Some(addr), true) => match open_embedder(addr) {
            Ok(e) => Some(match &args.embed_cache {
                Some(path) => Box::new(CachedEmbedder::open(e, path).with_context(|| format!("opening {}", path.display()))?),
                None => Box::new(e),
            }),
            Err(e) => {
                eprintln!("warning: embedder unavailable, embedding metrics omitted: {e}");
                None
            }
        },
        _ => None,
    };
    let report = metric_report(&preds, &refs, &metrics, embedder.as_deref_mut().map(|e| e as &mut dyn Embedder), &images, &config.metrics())?;
    write_json(&args.out, &Report {
        provenance: &provenance,
        report: &report,
    })?;
    let omitted: usize = report.systems.iter().map(|s| s.omitted.len()).sum();
    Ok(Status::from_failures(omitted))
}
