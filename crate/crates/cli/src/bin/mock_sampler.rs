//! Reference sampler for the JSON Lines sampler protocol. Replays
//! continuations from a transcript of `{"caption", "responses": [...]}`
//! lines; each caption's responses are served in order and the last one
//! repeats.

use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use tikzlab_core::repair::{SamplerRequest, SamplerResponse};
use tikzlab_core::{Sampler, ScriptedSampler};

#[derive(Parser)]
#[command(name = "tikzlab-mock-sampler", about)]
struct Args {
    /// Transcript file.
    #[arg(long, value_name = "FILE")]
    transcript: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut sampler = match ScriptedSampler::from_file(&args.transcript) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", args.transcript.display());
            return ExitCode::from(2);
        }
    };
    let stdin = std::io::stdin();
    let mut stdout = std::io::stdout().lock();
    for line in stdin.lock().lines() {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let request: SamplerRequest = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("error: bad request: {e}");
                return ExitCode::from(2);
            }
        };
        let continuation = match sampler.sample(&request) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        };
        let response = SamplerResponse {
            id: request.id,
            continuation,
        };
        let Ok(text) = serde_json::to_string(&response) else { return ExitCode::from(2) };
        if writeln!(stdout, "{text}").and_then(|_| stdout.flush()).is_err() {
            break;
        }
    }
    ExitCode::SUCCESS
}
