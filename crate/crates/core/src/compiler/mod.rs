//! Compilation of standalone TikZ documents, log diagnostics and PDF
//! rasterization.

mod engine;
mod log;
mod raster;

pub use engine::{
    compile, resolve_program, search_path, Compile, CompileError, CompileReport, EngineConfig, TexCompiler,
    DEFAULT_ENGINE, DEFAULT_TIMEOUT, JOB_NAME, TEXBIN_ENV,
};
pub use log::{anchor_to_file, earliest_error_line, error_count, parse_log, Diagnostic, Severity};
pub use raster::{rasterize, RasterError, DEFAULT_DPI, DEFAULT_RASTER};
