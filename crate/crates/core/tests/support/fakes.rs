//! In-process stand-ins for the compiler and the sampler.

use std::collections::VecDeque;

use tikzlab_core::compiler::{Compile, CompileError, CompileReport, Diagnostic, Severity};
use tikzlab_core::repair::{Sampler, SamplerError, SamplerRequest};

/// Reports an error on every line containing `BAD`; an image is produced
/// when there is none.
pub struct MarkerCompiler;

impl Compile for MarkerCompiler {
    fn compile(&self, document: &str) -> Result<CompileReport, CompileError> {
        let diagnostics: Vec<Diagnostic> = document
            .lines()
            .enumerate()
            .filter(|(_, l)| l.contains("BAD"))
            .map(|(i, l)| Diagnostic {
                severity: Severity::Error,
                message: "Undefined control sequence.".into(),
                line: Some(i as u32 + 1),
                raw: l.to_string(),
            })
            .collect();
        let ok = diagnostics.is_empty();
        Ok(CompileReport {
            success: ok,
            produced_image: ok,
            diagnostics,
            pdf_path: None,
            duration: 0.0,
            engine: "marker".into(),
            timed_out: false,
            workdir: None,
            log: String::new(),
        })
    }
}

/// Answers each request with a continuation that fills the document up to
/// a fixed number of lines, marking the lines listed for that call as bad.
pub struct PlannedSampler {
    pub plans: VecDeque<(usize, Vec<usize>)>,
    pub seen: Vec<SamplerRequest>,
}

impl PlannedSampler {
    pub fn new(plans: Vec<(usize, Vec<usize>)>) -> Self {
        Self { plans: plans.into(), seen: Vec::new() }
    }
}

impl Sampler for PlannedSampler {
    fn sample(&mut self, request: &SamplerRequest) -> Result<String, SamplerError> {
        self.seen.push(request.clone());
        let (total, bad) = self
            .plans
            .pop_front()
            .ok_or_else(|| SamplerError::Exhausted(request.caption.clone()))?;
        let kept = request.prefix.split_inclusive('\n').count();
        let mut out = String::new();
        for n in kept + 1..=total {
            if bad.contains(&n) {
                out.push_str(&format!("BAD {n}\n"));
            } else {
                out.push_str(&format!("ok {n}\n"));
            }
        }
        Ok(out)
    }
}
