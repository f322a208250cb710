use std::path::PathBuf;
use std::time::{Duration, Instant};

use tikzlab_core::compiler::{
    compile, rasterize, resolve_program, Compile, CompileError, EngineConfig, RasterError, TexCompiler,
};

fn fake(tool: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/fake-tex")
        .join(tool)
        .to_string_lossy()
        .into_owned()
}

fn fake_config() -> EngineConfig {
    EngineConfig {
        engine_cmd: fake("pdflatex"),
        timeout: Duration::from_secs(10),
        keep_scratch: false,
    }
}

const GOOD: &str = "\\documentclass[tikz]{standalone}\n\\begin{document}\n\\begin{tikzpicture}\\draw (0,0) -- (1,1);\\end{tikzpicture}\n\\end{document}";

#[test]
fn clean_document_produces_image() {
    let report = TexCompiler::new(fake_config()).compile(GOOD).unwrap();
    assert!(report.success);
    assert!(report.produced_image);
    assert_eq!(report.error_count(), 0);
    assert!(!report.timed_out);
    assert!(report.pdf_path.is_none());
}

#[test]
fn error_is_anchored_to_its_line() {
    let doc = "\\documentclass{standalone}\n\\begin{document}\n\n\\UNDEFINED\n\\end{document}";
    let report = TexCompiler::new(fake_config()).compile(doc).unwrap();
    assert!(!report.success);
    assert!(!report.produced_image);
    assert_eq!(report.error_count(), 1);
    assert_eq!(report.earliest_error_line(), Some(4));
}

#[test]
fn recoverable_error_still_yields_image() {
    let doc = "\\documentclass{standalone}\n\\begin{document}\n\\SOFTERROR\n\\end{document}";
    let report = TexCompiler::new(fake_config()).compile(doc).unwrap();
    assert!(!report.success);
    assert!(report.produced_image);
    assert_eq!(report.earliest_error_line(), Some(3));
}

#[test]
fn runaway_engine_is_killed() {
    let cfg = EngineConfig {
        timeout: Duration::from_millis(500),
        ..fake_config()
    };
    let start = Instant::now();
    let report = TexCompiler::new(cfg).compile("\\loop\\repeat").unwrap();
    assert!(start.elapsed() < Duration::from_secs(10));
    assert!(report.timed_out);
    assert!(!report.produced_image);
    assert!(report.diagnostics.iter().any(|d| d.message.starts_with("Timeout")));
}

#[test]
fn missing_engine_is_reported() {
    let cfg = EngineConfig {
        engine_cmd: "/nonexistent/pdflatex".into(),
        ..fake_config()
    };
    let compiler = TexCompiler::new(cfg);
    assert!(!compiler.is_available());
    assert!(matches!(compiler.compile(GOOD), Err(CompileError::EngineMissing(_))));
}

#[test]
fn dirty_workdir_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("stale.aux"), "").unwrap();
    assert!(matches!(
        compile(GOOD, dir.path(), &fake_config()),
        Err(CompileError::DirtyWorkdir(_))
    ));
}

#[test]
fn failed_scratch_kept_on_request() {
    let cfg = EngineConfig {
        keep_scratch: true,
        ..fake_config()
    };
    let root = tempfile::tempdir().unwrap();
    let compiler = TexCompiler {
        config: cfg,
        scratch_root: Some(root.path().to_path_buf()),
    };
    let report = compiler.compile("\\UNDEFINED").unwrap();
    let kept = report.workdir.expect("scratch kept");
    assert!(kept.join("doc.tex").is_file());
    assert!(kept.join("doc.log").is_file());
    let ok = compiler.compile(GOOD).unwrap();
    assert!(ok.workdir.is_none());
    assert_eq!(std::fs::read_dir(root.path()).unwrap().count(), 1);
}

#[test]
fn rasterize_first_page() {
    let dir = tempfile::tempdir().unwrap();
    let report = compile(GOOD, dir.path(), &fake_config()).unwrap();
    let pdf = report.pdf_path.unwrap();
    let out = tempfile::tempdir().unwrap();
    let pages = rasterize(&pdf, 300, out.path(), true, &fake("pdftoppm")).unwrap();
    assert_eq!(pages.len(), 1);
    assert_eq!(pages[0].file_name().unwrap(), "page-0001.png");
    let bytes = std::fs::read(&pages[0]).unwrap();
    assert!(bytes.starts_with(b"\x89PNG"));
}

#[test]
fn rasterize_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bogus = dir.path().join("x.pdf");
    std::fs::write(&bogus, "not a pdf").unwrap();
    let out = dir.path().join("out");
    std::fs::create_dir(&out).unwrap();
    assert!(matches!(rasterize(&bogus, 0, &out, true, &fake("pdftoppm")), Err(RasterError::InvalidDpi)));
    assert!(matches!(
        rasterize(&bogus, 300, &out, true, &fake("pdftoppm")),
        Err(RasterError::CorruptPdf { .. })
    ));
    std::fs::write(&bogus, "%PDF-1.5\n").unwrap();
    assert!(matches!(
        rasterize(&bogus, 300, &out, true, "/nonexistent/pdftoppm"),
        Err(RasterError::ConverterMissing(_))
    ));
}

#[test]
fn real_engine_when_installed() {
    if resolve_program("pdflatex").is_none() {
        eprintln!("warning: pdflatex not installed, skipping real-engine check");
        return;
    }
    let report = TexCompiler::default().compile(GOOD).unwrap();
    assert!(report.produced_image, "{:?}", report.diagnostics);
    let bad = "\\documentclass{standalone}\n\\begin{document}\n\\nosuchmacro\n\\end{document}";
    let report = TexCompiler::default().compile(bad).unwrap();
    assert_eq!(report.earliest_error_line(), Some(3));
}
