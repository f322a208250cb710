use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use thiserror::Error;

use super::engine::resolve_program;

pub const DEFAULT_RASTER: &str = "pdftoppm";
pub const DEFAULT_DPI: u32 = 300;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("dpi must be positive")]
    InvalidDpi,
    #[error("PDF converter `{0}` not found on the search path")]
    ConverterMissing(String),
    #[error("corrupt PDF {path}: {reason}")]
    CorruptPdf { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Renders `pdf` to PNG files `page-0001.png`, `page-0002.png`, ... in
/// `out_dir` using a pdftoppm-compatible converter. Returns paths in page
/// order.
pub fn rasterize(
    pdf: &Path,
    dpi: u32,
    out_dir: &Path,
    first_page_only: bool,
    raster_cmd: &str,
) -> Result<Vec<PathBuf>, RasterError> {
    if dpi == 0 {
        return Err(RasterError::InvalidDpi);
    }
    let bytes = std::fs::read(pdf)?;
    if !bytes.starts_with(b"%PDF-") {
        return Err(RasterError::CorruptPdf {
            path: pdf.to_path_buf(),
            reason: "missing %PDF- header".into(),
        });
    }
    let converter = resolve_program(raster_cmd).ok_or_else(|| RasterError::ConverterMissing(raster_cmd.into()))?;
    std::fs::create_dir_all(out_dir)?;
    let prefix = out_dir.join("raw");
    let mut cmd = Command::new(converter);
    cmd.arg("-r").arg(dpi.to_string()).arg("-png");
    if first_page_only {
        cmd.args(["-f", "1", "-l", "1"]);
    }
    let output = cmd
        .arg(pdf)
        .arg(&prefix)
        .stdin(Stdio::null())
        .stdout(Stdio::null())
        .stderr(Stdio::piped())
        .output()?;
    if !output.status.success() {
        return Err(RasterError::CorruptPdf {
            path: pdf.to_path_buf(),
            reason: String::from_utf8_lossy(&output.stderr).trim().to_string(),
        });
    }
    // converter names pages raw-1.png or raw-01.png depending on page count
    let mut pages: Vec<(u32, PathBuf)> = std::fs::read_dir(out_dir)?
        .filter_map(Result::ok)
        .filter_map(|e| {
            let name = e.file_name().to_string_lossy().into_owned();
            let num = name.strip_prefix("raw-")?.strip_suffix(".png")?.parse().ok()?;
            Some((num, e.path()))
        })
        .collect();
    pages.sort();
    if pages.is_empty() {
        return Err(RasterError::CorruptPdf {
            path: pdf.to_path_buf(),
            reason: "converter produced no pages".into(),
        });
    }
    pages
        .into_iter()
        .enumerate()
        .map(|(i, (_, src))| {
            let dst = out_dir.join(format!("page-{:04}.png", i + 1));
            std::fs::rename(&src, &dst)?;
            Ok(dst)
        })
        .collect()
}
