use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;
use tikzlab_core::augment::{augment_records, AugmentOptions, AugmentStats, CandidateSource, SubprocessCaptioner, DEFAULT_CANDIDATES};
use tikzlab_core::metrics::{open_embedder, Embedder};
use tikzlab_core::{Config, Provenance, TikzRecord};

use crate::output::{read_records, write_meta, write_records, Status};

#[derive(Args, Debug)]
pub struct AugmentArgs {
    /// Records to augment.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Rendered figures as DIR/<id>.png.
    #[arg(long, value_name = "DIR")]
    images: PathBuf,
    /// Precomputed candidates: JSON Lines of `{"id", "candidates": [...]}`.
    #[arg(long, value_name = "FILE", conflicts_with = "captioner_cmd")]
    candidates: Option<PathBuf>,
    /// Captioner command speaking the JSON Lines captioner protocol.
    #[arg(long, value_name = "CMD")]
    captioner_cmd: Option<String>,
    /// Candidates considered per record.
    #[arg(long, default_value_t = DEFAULT_CANDIDATES)]
    num_candidates: usize,
    /// Augment every caption, not only short ones.
    #[arg(long)]
    all: bool,
    /// Output JSON Lines file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Serialize)]
struct Summary {
    stats: AugmentStats,
    model_id: String,
}

pub fn run(args: AugmentArgs, config: &Config) -> Result<Status> {
    let Some(addr) = &config.embedder_addr else {
        bail!("augment needs an embedder (--embedder or TIKZLAB_EMBEDDER_ADDR)");
    };
    let mut provenance = Provenance::new("augment", config);
    provenance.add_input(&args.input)?;
    provenance.add_input(&args.images)?;
    let mut records: Vec<TikzRecord> = read_records(&args.input)?;
    let mut embedder = open_embedder(addr)?;
    let mut captioner = None;
    let mut source = match (&args.candidates, &args.captioner_cmd) {
        (Some(path), _) => {
            provenance.add_input(path)?;
            CandidateSource::from_file(path)?
        }
        (None, Some(cmd)) => CandidateSource::Subprocess(SubprocessCaptioner::spawn(cmd)?),
        (None, None) => CandidateSource::Captioner(captioner.insert(open_embedder(addr)?)),
    };
    let opts = AugmentOptions {
        candidates: args.num_candidates,
        all: args.all,
    };
    let stats = augment_records(&mut records, &args.images, &mut embedder, &mut source, &opts);
    write_records(&args.out, &records)?;
    let failures = stats.failed + stats.missing_image + stats.no_candidates;
    write_meta(
        &args.out,
        &provenance,
        Summary {
            stats,
            model_id: embedder.model_id().to_string(),
        },
    )?;
    Ok(Status::from_failures(failures))
}
