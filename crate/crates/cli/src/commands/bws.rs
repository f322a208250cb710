use std::collections::BTreeMap;
use std::fs::File;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Subcommand};
use serde::Serialize;
use tikzlab_core::bws::{bws_scores, item_counts, min_max_normalize, read_annotations, split_half_reliability, ItemCounts, SplitHalfResult, DEFAULT_REPEATS};
use tikzlab_core::{Config, Provenance};

use crate::output::{write_json, Status};

#[derive(Subcommand, Debug)]
pub enum BwsCommand {
    /// Best-minus-worst scores per item.
    Score(ScoreArgs),
    /// Split-half reliability of the scores (seeded by --seed).
    Shr(ShrArgs),
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    /// CSV with header tuple_id,item1,item2,item3,item4,best,worst,annotator.
    #[arg(long, value_name = "FILE")]
    annotations: PathBuf,
    /// Also write min-max normalized scores.
    #[arg(long)]
    normalize: bool,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ShrArgs {
    #[arg(long, value_name = "FILE")]
    annotations: PathBuf,
    /// Number of random half splits averaged.
    #[arg(long, default_value_t = DEFAULT_REPEATS)]
    repeats: usize,
    /// Output file; printed to stdout when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ScoreReport<'a> {
    provenance: &'a Provenance,
    scores: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    normalized: Option<BTreeMap<String, f64>>,
    counts: BTreeMap<String, ItemCounts>,
}

#[derive(Serialize)]
struct ShrReport<'a> {
    provenance: &'a Provenance,
    shr: SplitHalfResult,
}

fn load(path: &PathBuf) -> Result<Vec<tikzlab_core::bws::AnnotationRecord>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(read_annotations(f)?)
}

pub fn run(command: BwsCommand, config: &Config) -> Result<Status> {
    match command {
        BwsCommand::Score(a) => {
            let mut provenance = Provenance::new("bws score", config);
            provenance.add_input(&a.annotations)?;
            let anns = load(&a.annotations)?;
            let scores = bws_scores(&anns)?;
            let normalized = if a.normalize { Some(min_max_normalize(&scores)?) } else { None };
            write_json(&a.out, &ScoreReport {
                provenance: &provenance,
                scores,
                normalized,
                counts: item_counts(&anns)?,
            })?;
        }
        BwsCommand::Shr(a) => {
            let mut provenance = Provenance::new("bws shr", config);
            provenance.add_input(&a.annotations)?;
            let anns = load(&a.annotations)?;
            let shr = split_half_reliability(&anns, config.seed, a.repeats)?;
            let report = ShrReport {
                provenance: &provenance,
                shr,
            };
            match &a.out {
                Some(path) => write_json(path, &report)?,
                None => println!("{}", serde_json::to_string_pretty(&report)?),
            }
        }
    }
    Ok(Status::Ok)
}
