use std::fs;
use std::path::Path;

use tikzlab_core::compiler::{anchor_to_file, parse_log, Severity};

fn render(name: &str) -> (String, String) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/logs");
    let log = fs::read_to_string(dir.join(format!("{name}.log"))).unwrap();
    let expected = fs::read_to_string(dir.join(format!("{name}.expected"))).unwrap();
    let file = if name == "undefined_cs" { "main.tex" } else { "doc.tex" };
    let mut diags = parse_log(&log);
    anchor_to_file(&mut diags, file);
    let mut got = String::new();
    for d in diags {
        let sev = match d.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        let line = d.line.map(|l| l.to_string()).unwrap_or_else(|| "-".into());
        got.push_str(&format!("{sev} {line} {}\n", d.message));
    }
    (got, expected)
}

macro_rules! golden {
    ($($name:ident),*) => {$(
        #[test]
        fn $name() {
            let (got, expected) = render(stringify!($name));
            assert_eq!(got, expected);
        }
    )*};
}

golden!(undefined_cs, missing_dollar, pgfkeys, fatal, clean, package_source);
