use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tikzlab_core::compiler::{rasterize, CompileError};
use tikzlab_core::{Config, Diagnostic, Provenance, TexCompiler};

use crate::output::{read_records, write_meta, write_records, Status};

#[derive(Args, Debug)]
pub struct CompileArgs {
    /// JSON Lines with `id` and `code` fields.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Output JSON Lines of compile reports.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Rasterize the first page of each PDF to DIR/<id>.png.
    #[arg(long, value_name = "DIR")]
    images: Option<PathBuf>,
    /// Keep scratch directories of failed compiles.
    #[arg(long)]
    keep_scratch: bool,
}

#[derive(Deserialize)]
struct Input {
    id: String,
    code: String,
}

#[derive(Serialize)]
struct Row {
    id: String,
    success: bool,
    produced_image: bool,
    errors: usize,
    timed_out: bool,
    diagnostics: Vec<Diagnostic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    image: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    workdir: Option<String>,
}

#[derive(Serialize)]
struct Summary {
    documents: usize,
    produced_image: usize,
    engine: String,
}

pub fn run(args: CompileArgs, config: &Config) -> Result<Status> {
    let mut provenance = Provenance::new("compile", config);
    provenance.add_input(&args.input)?;
    let inputs: Vec<Input> = read_records(&args.input)?;
    let compiler = TexCompiler::new(config.engine(args.keep_scratch));
    if !compiler.is_available() {
        bail!(CompileError::EngineMissing(config.engine_cmd.clone()));
    }
    if let Some(dir) = &args.images {
        std::fs::create_dir_all(dir)?;
    }
    let rows: Vec<Result<Row>> = inputs
        .par_iter()
        .map(|inp| {
            let scratch = tempfile::tempdir()?;
            let mut report = tikzlab_core::compiler::compile(&inp.code, scratch.path(), &config.engine(args.keep_scratch))?;
            let mut image = None;
            if let (Some(dir), Some(pdf)) = (&args.images, &report.pdf_path) {
                let pages_dir = scratch.path().join("pages");
                let pages = rasterize(pdf, config.dpi, &pages_dir, true, &config.raster_cmd)?;
                let dst = dir.join(format!("{}.png", inp.id));
                std::fs::copy(&pages[0], &dst)?;
                image = Some(dst.display().to_string());
            }
            if args.keep_scratch && !report.success {
                report.workdir = Some(scratch.keep());
            }
            Ok(Row {
                id: inp.id.clone(),
                success: report.success,
                produced_image: report.produced_image,
                errors: report.error_count(),
                timed_out: report.timed_out,
                diagnostics: report.diagnostics,
                image,
                workdir: report.workdir.map(|p| p.display().to_string()),
            })
        })
        .collect();
    let rows: Vec<Row> = rows.into_iter().collect::<Result<_>>()?;
    let failures = rows.iter().filter(|r| !r.produced_image).count();
    write_records(&args.out, &rows)?;
    write_meta(
        &args.out,
        &provenance,
        Summary {
            documents: rows.len(),
            produced_image: rows.len() - failures,
            engine: config.engine_cmd.clone(),
        },
    )?;
    Ok(Status::from_failures(failures))
}
