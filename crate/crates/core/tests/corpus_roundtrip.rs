mod support;

use std::time::Duration;

use support::{expected_records, fixture_dir};
use tikzlab_core::compiler::{resolve_program, EngineConfig, TexCompiler};
use tikzlab_core::corpus::{extract_corpus, filter_compilable, project_dirs, ExtractOptions, ExtractStats, TexProject};
use tikzlab_core::records::{record_id, Origin};

fn projects() -> Vec<TexProject> {
    project_dirs(&fixture_dir().join("tex-projects"))
        .unwrap()
        .iter()
        .map(|d| TexProject::from_dir(d, Origin::Arxiv).unwrap())
        .collect()
}

fn expected() -> Vec<(String, String)> {
    expected_records(&std::fs::read_to_string(fixture_dir().join("tex-projects.expected")).unwrap())
}

#[test]
fn extracts_expected_record_set() {
    let projects = projects();
    assert_eq!(projects.len(), 10);
    let (records, stats) = extract_corpus(&projects, &ExtractOptions::default());
    let got: Vec<(String, String)> = records.iter().map(|r| (r.caption.clone(), r.code.clone())).collect();
    let want = expected();
    for (g, w) in got.iter().zip(&want) {
        assert_eq!(g, w);
    }
    assert_eq!(got.len(), want.len());
    for r in &records {
        assert_eq!(r.id, record_id(&r.code));
        assert_eq!(r.origin, Origin::Arxiv);
    }
    assert_eq!(
        stats,
        ExtractStats {
            projects: 10,
            snippets: 12,
            unbalanced: 1,
            unresolved_includes: 1,
            missing_caption: 1,
            duplicates: 1,
            macro_redefinitions: 1,
            records: 10,
            ..ExtractStats::default()
        }
    );
}

#[test]
fn extraction_is_deterministic() {
    let a = extract_corpus(&projects(), &ExtractOptions::default());
    let b = extract_corpus(&projects(), &ExtractOptions::default());
    assert_eq!(a, b);
}

#[test]
fn records_pass_fake_engine() {
    let fake = fixture_dir().join("fake-tex/pdflatex");
    let compiler = TexCompiler::new(EngineConfig {
        engine_cmd: fake.to_string_lossy().into_owned(),
        timeout: Duration::from_secs(10),
        keep_scratch: false,
    });
    let (records, _) = extract_corpus(&projects(), &ExtractOptions::default());
    let n = records.len();
    let (kept, rejected) = filter_compilable(records, &compiler).unwrap();
    assert_eq!((kept.len(), rejected), (n, 0));
}

#[test]
fn records_recompile_with_real_engine() {
    if resolve_program("pdflatex").is_none() {
        eprintln!("warning: pdflatex not installed, skipping recompilation of extracted records");
        return;
    }
    let (records, _) = extract_corpus(&projects(), &ExtractOptions::default());
    let n = records.len();
    let (kept, rejected) = filter_compilable(records, &TexCompiler::default()).unwrap();
    assert_eq!((kept.len(), rejected), (n, 0));
}
