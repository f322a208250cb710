use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tikzlab_core::compiler::CompileError;
use tikzlab_core::repair::{
    cer, csr, RepairError, RepairOutcome, SamplerError, SamplerPool, SamplerRequest, SubprocessSampler,
};
use tikzlab_core::{generate_with_repair, record_id, Config, GeneratedRecord, Provenance, Sampler, ScriptedSampler, TexCompiler};

use crate::output::{write_meta, write_records, Status};

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Captions: JSON Lines with `caption` (and optional `id`), or one caption per line.
    #[arg(long, value_name = "FILE")]
    captions: PathBuf,
    /// Sampler command speaking the JSON Lines sampler protocol.
    #[arg(long, value_name = "CMD", conflicts_with = "transcript")]
    sampler_cmd: Option<String>,
    /// Replay continuations from a transcript instead of running a sampler.
    #[arg(long, value_name = "FILE")]
    transcript: Option<PathBuf>,
    /// System name stored on every output record.
    #[arg(long)]
    system: Option<String>,
    /// Output JSON Lines file.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Deserialize)]
struct CaptionLine {
    id: Option<String>,
    caption: String,
}

fn read_captions(path: &PathBuf) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (id, caption) = match serde_json::from_str::<CaptionLine>(line) {
            Ok(c) => (c.id, c.caption),
            Err(_) if !line.trim_start().starts_with('{') => (None, line.trim().to_string()),
            Err(e) => bail!("{}: {e}", path.display()),
        };
        let id = id.unwrap_or_else(|| record_id(&caption));
        out.push((id, caption));
    }
    Ok(out)
}

/// Sampler process started on first use and restarted after a failure.
struct Slot {
    cmd: String,
    sampler: Option<SubprocessSampler>,
}

impl Sampler for Slot {
    fn sample(&mut self, request: &SamplerRequest) -> Result<String, SamplerError> {
        if self.sampler.is_none() {
            self.sampler = Some(SubprocessSampler::spawn(&self.cmd)?);
        }
        let result = self.sampler.as_mut().expect("spawned").sample(request);
        if result.is_err() {
            self.sampler = None;
        }
        result
    }
}

enum Source {
    Processes(SamplerPool<Slot>),
    Script(ScriptedSampler),
}

impl Source {
    fn run(&self, caption: &str, f: impl FnOnce(&mut dyn Sampler) -> Result<(RepairOutcome, bool)>) -> Result<(RepairOutcome, bool)> {
        match self {
            Source::Processes(pool) => pool.with(|s| f(s)),
            Source::Script(script) => f(&mut script.for_caption(caption)),
        }
    }
}

#[derive(Serialize)]
struct Summary {
    captions: usize,
    succeeded: usize,
    sampler_failures: usize,
    csr: Option<f64>,
    cer: Option<f64>,
}

pub fn run(args: GenerateArgs, config: &Config) -> Result<Status> {
    let mut provenance = Provenance::new("generate", config);
    provenance.add_input(&args.captions)?;
    let captions = read_captions(&args.captions)?;
    let compiler = TexCompiler::new(config.engine(false));
    if !compiler.is_available() {
        bail!(CompileError::EngineMissing(config.engine_cmd.clone()));
    }
    let workers = rayon::current_num_threads().min(captions.len()).max(1);
    let source = match (&args.sampler_cmd, &args.transcript) {
        (Some(cmd), _) => Source::Processes(SamplerPool::new(
            (0..workers)
                .map(|_| Slot {
                    cmd: cmd.clone(),
                    sampler: None,
                })
                .collect(),
        )),
        (None, Some(path)) => {
            provenance.add_input(path)?;
            Source::Script(ScriptedSampler::from_file(path)?)
        }
        (None, None) => bail!("pass --sampler-cmd or --transcript"),
    };
    let opts = config.repair();

    let results: Vec<Result<(RepairOutcome, bool)>> = captions
        .par_iter()
        .map(|(_, caption)| {
            source.run(caption, |s| match generate_with_repair(caption, s, &compiler, &opts) {
                Ok(o) => Ok((o, false)),
                Err(RepairError::SamplerFailure { source, partial }) => {
                    eprintln!("warning: sampler failed for {caption:?}: {source}");
                    Ok((*partial, true))
                }
                Err(e) => Err(e.into()),
            })
        })
        .collect();
    let mut records = Vec::with_capacity(captions.len());
    let mut outcomes = Vec::with_capacity(captions.len());
    let mut sampler_failures = 0;
    for ((id, caption), r) in captions.iter().zip(results) {
        let (o, failed) = r?;
        sampler_failures += failed as usize;
        records.push(GeneratedRecord {
            id: id.clone(),
            caption: caption.clone(),
            code: o.code.clone(),
            success: o.success,
            sampled_units: o.sampled_units,
            final_errors: o.final_errors,
            attempts: o.attempts.clone(),
            system: args.system.clone(),
        });
        outcomes.push(o);
    }
    write_records(&args.out, &records)?;
    let succeeded = records.iter().filter(|r| r.success).count();
    write_meta(
        &args.out,
        &provenance,
        Summary {
            captions: records.len(),
            succeeded,
            sampler_failures,
            csr: csr(&outcomes).ok(),
            cer: cer(&outcomes).ok(),
        },
    )?;
    Ok(Status::from_failures(records.len() - succeeded))
}
