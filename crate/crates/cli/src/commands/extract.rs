use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use tikzlab_core::corpus::{
    dedup_records, extract_corpus, filter_compilable, ingest_stackexchange, project_dirs, stackexchange_records,
    ExtractOptions, ExtractStats, IngestStats, RuleSet, TexProject, DEFAULT_TAG,
};
use tikzlab_core::{Config, Origin, Provenance, TexCompiler};

use crate::output::{write_meta, write_records, Status};

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Directory whose subdirectories are TeX projects (or a single project).
    #[arg(long, value_name = "DIR")]
    tex: Option<PathBuf>,
    /// Stack Exchange Posts.xml dump.
    #[arg(long, value_name = "FILE")]
    se_dump: Option<PathBuf>,
    /// Question tag selecting TikZ posts.
    #[arg(long, default_value = DEFAULT_TAG)]
    se_tag: String,
    /// Origin of the TeX projects: arxiv, curated or artificial.
    #[arg(long, default_value = "arxiv")]
    origin: Origin,
    /// License tag stored on TeX-project records.
    #[arg(long, default_value = "unknown")]
    license: String,
    /// License tag stored on Stack Exchange records.
    #[arg(long, default_value = "cc-by-sa")]
    se_license: String,
    /// Preamble rule file replacing the shipped one.
    #[arg(long, value_name = "FILE")]
    rules: Option<PathBuf>,
    /// Keep only records that compile to an image (needs a TeX engine).
    #[arg(long)]
    compile: bool,
    /// Output JSON Lines file of records.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Serialize)]
struct Summary {
    extract: ExtractStats,
    stackexchange: Option<IngestStats>,
    duplicates_across_sources: usize,
    compile_rejected: Option<usize>,
    records: usize,
}

pub fn run(args: ExtractArgs, config: &Config) -> Result<Status> {
    if args.tex.is_none() && args.se_dump.is_none() {
        bail!("nothing to extract: pass --tex and/or --se-dump");
    }
    let mut provenance = Provenance::new("extract", config);
    let mut opts = ExtractOptions {
        license: args.license.clone(),
        ..ExtractOptions::default()
    };
    if let Some(path) = &args.rules {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        opts.rules = RuleSet::parse(&text)?;
        provenance.add_input(path)?;
    }

    let mut records = Vec::new();
    let mut stats = ExtractStats::default();
    if let Some(dir) = &args.tex {
        provenance.add_input(dir)?;
        let mut dirs = project_dirs(dir)?;
        if dirs.is_empty() {
            dirs.push(dir.clone());
        }
        let mut projects = Vec::new();
        for d in &dirs {
            match TexProject::from_dir(d, args.origin) {
                Ok(p) => projects.push(p),
                Err(e) => {
                    eprintln!("warning: skipping {}: {e}", d.display());
                    stats.projects += 1;
                    stats.failed_projects += 1;
                }
            }
        }
        let (r, s) = extract_corpus(&projects, &opts);
        stats.merge(&s);
        records.extend(r);
    }
    let mut se_stats = None;
    if let Some(dump) = &args.se_dump {
        provenance.add_input(dump)?;
        let f = File::open(dump).with_context(|| format!("opening {}", dump.display()))?;
        let (cands, ingest) = ingest_stackexchange(BufReader::new(f), &args.se_tag)?;
        let (r, s) = stackexchange_records(&cands, &args.se_license);
        stats.merge(&s);
        records.extend(r);
        se_stats = Some(ingest);
    }
    let (records, dups) = dedup_records(records);

    let (records, compile_rejected) = if args.compile {
        let compiler = TexCompiler::new(config.engine(false));
        let (kept, rejected) = filter_compilable(records, &compiler)?;
        (kept, Some(rejected))
    } else {
        (records, None)
    };

    write_records(&args.out, &records)?;
    let failures = stats.failed_projects + se_stats.as_ref().map_or(0, |s| s.malformed_rows);
    write_meta(
        &args.out,
        &provenance,
        Summary {
            extract: stats,
            stackexchange: se_stats,
            duplicates_across_sources: dups,
            compile_rejected,
            records: records.len(),
        },
    )?;
    Ok(Status::from_failures(failures))
}
