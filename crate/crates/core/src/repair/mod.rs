//! Compile-and-repair generation loop and its sampling-cost accounting.

mod sampler;
mod schedule;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compiler::{Compile, CompileError};

pub use sampler::{
    Sampler, SamplerError, SamplerPool, SamplerRequest, SamplerResponse, ScriptedSampler, SubprocessSampler,
    TranscriptEntry, DEFAULT_MAX_NEW,
};
pub use schedule::{truncation_point, truncation_point_with, Schedule};

pub const DEFAULT_MAX_ATTEMPTS: usize = 10;

/// Accounting for one sampler call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttemptStat {
    /// Earliest error line reported when compiling this attempt's document.
    pub error_line: Option<usize>,
    /// Truncation point this attempt resampled from; `None` for the initial sample.
    pub truncate_at: Option<usize>,
    pub regenerated_lines: usize,
    pub total_lines: usize,
    /// Repair iteration counter used for the truncation.
    #[serde(default)]
    pub repair_iter: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairOutcome {
    pub code: String,
    pub attempts: Vec<AttemptStat>,
    pub success: bool,
    pub sampled_units: f64,
    pub final_errors: usize,
}

#[derive(Debug, Error)]
pub enum RepairError {
    #[error("max_attempts must be at least 1")]
    InvalidAttempts,
    #[error("sampler failed after {} attempts: {source}", partial.attempts.len())]
    SamplerFailure {
        source: SamplerError,
        partial: Box<RepairOutcome>,
    },
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error("empty outcome list")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairOptions {
    /// Total sampler calls allowed, the initial sample included.
    pub max_attempts: usize,
    pub schedule: Schedule,
    pub max_new: usize,
}

impl Default for RepairOptions {
    fn default() -> Self {
        Self {
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            schedule: Schedule::JustBefore,
            max_new: DEFAULT_MAX_NEW,
        }
    }
}

/// Number of lines, counting a final line without a newline.
pub fn line_count(text: &str) -> usize {
    text.split_inclusive('\n').count()
}

/// The first `t - 1` lines of `text`, newlines included.
pub fn keep_prefix(text: &str, t: usize) -> &str {
    let keep = t.saturating_sub(1);
    let end: usize = text.split_inclusive('\n').take(keep).map(str::len).sum();
    &text[..end]
}

/// Generates a document for `caption`, repairing compile errors by
/// truncating before the earliest error and resampling.
///
/// The loop stops as soon as a compile produces an image or after
/// `max_attempts` sampler calls. Each resample keeps the lines above the
/// truncation point verbatim. The repair counter grows while the earliest
/// error stays at or below the last truncation point and resets to 1 when
/// an earlier error shows up.
pub fn generate_with_repair<S: Sampler + ?Sized, C: Compile + ?Sized>(
    caption: &str,
    sampler: &mut S,
    compiler: &C,
    opts: &RepairOptions,
) -> Result<RepairOutcome, RepairError> {
    if opts.max_attempts == 0 {
        return Err(RepairError::InvalidAttempts);
    }
    let mut outcome = RepairOutcome {
        code: String::new(),
        attempts: Vec::new(),
        success: false,
        sampled_units: 1.0,
        final_errors: 0,
    };
    let mut prefix = String::new();
    let mut truncate_at: Option<usize> = None;
    let mut repair_iter = 0u32;
    let mut last_truncation: Option<usize> = None;

    for attempt in 0..opts.max_attempts {
        let request = SamplerRequest {
            id: attempt.to_string(),
            caption: caption.to_string(),
            prefix: prefix.clone(),
            max_new: opts.max_new,
        };
        let continuation = match sampler.sample(&request) {
            Ok(c) => c,
            Err(source) => {
                return Err(RepairError::SamplerFailure {
                    source,
                    partial: Box::new(outcome),
                })
            }
        };
        let kept = line_count(&prefix);
        let code = prefix.clone() + &continuation;
        let total_lines = line_count(&code).max(1);
        let regenerated_lines = total_lines.saturating_sub(kept);
        if truncate_at.is_some() {
            outcome.sampled_units += regenerated_lines as f64 / total_lines as f64;
        }

        let report = compiler.compile(&code)?;
        let error_line = report.earliest_error_line().map(|l| l as usize);
        outcome.attempts.push(AttemptStat {
            error_line,
            truncate_at,
            regenerated_lines,
            total_lines,
            repair_iter,
        });
        outcome.final_errors = report.error_count();
        outcome.success = report.produced_image;
        outcome.code = code;
        if report.produced_image {
            break;
        }

        // without a line anchor the whole document is suspect
        let l = error_line.unwrap_or(1).clamp(1, total_lines);
        repair_iter = match last_truncation {
            Some(prev) if l >= prev => repair_iter + 1,
            _ => 1,
        };
        let t = truncation_point_with(opts.schedule, l, repair_iter);
        prefix = keep_prefix(&outcome.code, t).to_string();
        truncate_at = Some(t);
        last_truncation = Some(t);
    }
    Ok(outcome)
}

/// Mean sampled units per caption.
pub fn csr(outcomes: &[RepairOutcome]) -> Result<f64, RepairError> {
    if outcomes.is_empty() {
        return Err(RepairError::EmptyInput);
    }
    Ok(outcomes.iter().map(|o| o.sampled_units).sum::<f64>() / outcomes.len() as f64)
}

/// Mean number of errors left in the final attempt.
pub fn cer(outcomes: &[RepairOutcome]) -> Result<f64, RepairError> {
    if outcomes.is_empty() {
        return Err(RepairError::EmptyInput);
    }
    Ok(outcomes.iter().map(|o| o.final_errors as f64).sum::<f64>() / outcomes.len() as f64)
}
