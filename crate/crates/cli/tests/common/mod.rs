//! Helpers for driving the `tikzlab` binary in tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn core_fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

pub fn fake_engine() -> String {
    core_fixtures().join("fake-tex/pdflatex").to_string_lossy().into_owned()
}

/// Runs `tikzlab` with a scrubbed TIKZLAB_* environment.
pub fn tikzlab(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tikzlab"));
    for (k, _) in std::env::vars() {
        if k.starts_with("TIKZLAB_") {
            cmd.env_remove(k);
        }
    }
    cmd.args(args).output().expect("run tikzlab")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

/// Reference and prediction records plus mock-seeded images, so every
/// metric column can be computed with the mock embedder.
pub fn evaluation_inputs(dir: &Path) {
    let mut refs = String::new();
    let mut preds = String::new();
    std::fs::create_dir_all(dir.join("ref_img")).unwrap();
    std::fs::create_dir_all(dir.join("pred_img")).unwrap();
    for i in 0..6 {
        let code = format!("\\begin{{tikzpicture}}\n\\draw (0,0) -- ({i},1) node {{p{i}}};\n\\end{{tikzpicture}}");
        let pred = code.replace("node", "circle (1pt) node");
        let caption = format!("a line to point {i}");
        refs.push_str(&serde_json::json!({"id": format!("r{i}"), "caption": caption, "code": code}).to_string());
        refs.push('\n');
        preds.push_str(
            &serde_json::json!({"id": format!("r{i}"), "code": pred, "system": "sys", "sampled_units": 1.0 + i as f64 / 10.0, "final_errors": i % 2})
                .to_string(),
        );
        preds.push('\n');
        std::fs::write(dir.join(format!("ref_img/r{i}.png")), format!("MOCKSEED:{caption}")).unwrap();
        std::fs::write(dir.join(format!("pred_img/r{i}.png")), format!("rendered prediction {i}")).unwrap();
    }
    std::fs::write(dir.join("ref.jsonl"), refs).unwrap();
    std::fs::write(dir.join("pred.jsonl"), preds).unwrap();
}

/// Captions and a transcript whose third caption needs one repair.
pub fn generation_inputs(dir: &Path) {
    let good = "\\documentclass[tikz]{standalone}\n\\begin{document}\n\\begin{tikzpicture}\n\\draw (0,0) circle (1);\n\\end{tikzpicture}\n\\end{document}";
    let bad = good.replace("\\draw (0,0) circle (1);", "\\UNDEFINED");
    let fixed_tail = "\\draw (0,0) circle (1);\n\\end{tikzpicture}\n\\end{document}";
    std::fs::write(dir.join("captions.txt"), "a circle\na unit circle\na broken circle\n").unwrap();
    let entries = [
        serde_json::json!({"caption": "a circle", "responses": [good]}),
        serde_json::json!({"caption": "a unit circle", "responses": [good]}),
        serde_json::json!({"caption": "a broken circle", "responses": [bad, fixed_tail]}),
    ];
    let text: String = entries.iter().map(|e| format!("{e}\n")).collect();
    std::fs::write(dir.join("transcript.jsonl"), text).unwrap();
}

pub fn bws_inputs(dir: &Path) {
    let mut csv = String::from("tuple_id,item1,item2,item3,item4,best,worst,annotator\n");
    let items = ["a", "b", "c", "d", "e", "f"];
    for t in 0..24 {
        let pick: Vec<&str> = (0..4).map(|k| items[(t + k * (1 + t % 2)) % 6]).collect();
        let mut uniq = pick.clone();
        uniq.sort();
        uniq.dedup();
        if uniq.len() < 4 {
            continue;
        }
        csv.push_str(&format!("t{t},{},{},{},{},{},{},ann{}\n", pick[0], pick[1], pick[2], pick[3], pick[t % 4], pick[(t + 1) % 4], t % 3));
    }
    std::fs::write(dir.join("ann.csv"), csv).unwrap();
}
