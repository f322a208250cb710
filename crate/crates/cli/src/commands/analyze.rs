use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};
use tikzlab_core::analysis::{code_tokens, complexity_stats, copying_curve, novelty_curve, text_tokens};
use tikzlab_core::{Config, Provenance};

use crate::output::{read_records, write_json, Status};

#[derive(Subcommand, Debug)]
pub enum AnalyzeCommand {
    /// Fraction of generated code n-grams absent from the training corpus.
    Novelty(NoveltyArgs),
    /// Fraction of caption n-grams that reappear in the generated code.
    Copying(CopyingArgs),
    /// Mean comment-free token count per system.
    Complexity(ComplexityArgs),
}

#[derive(Args, Debug)]
pub struct Orders {
    /// N-gram orders: a range `1-10` or a list `1,2,4`.
    #[arg(long, default_value = "1-10")]
    orders: String,
    /// Lowercase tokens before counting.
    #[arg(long)]
    lowercase: bool,
}

impl Orders {
    fn parse(&self) -> Result<Vec<usize>> {
        let s = self.orders.trim();
        let orders: Vec<usize> = if let Some((a, b)) = s.split_once('-') {
            (a.trim().parse()?..=b.trim().parse()?).collect()
        } else {
            s.split(',').map(|x| x.trim().parse()).collect::<Result<_, _>>()?
        };
        if orders.is_empty() || orders.contains(&0) {
            bail!("orders must be positive: {s:?}");
        }
        Ok(orders)
    }
}

#[derive(Args, Debug)]
pub struct NoveltyArgs {
    /// Training corpus: JSON Lines with `code`.
    #[arg(long, value_name = "FILE")]
    train: PathBuf,
    /// Generated code: JSON Lines with `code`.
    #[arg(long, value_name = "FILE")]
    gen: PathBuf,
    #[command(flatten)]
    orders: Orders,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CopyingArgs {
    /// Generated records: JSON Lines with `caption` and `code`.
    #[arg(long, value_name = "FILE")]
    gen: PathBuf,
    #[command(flatten)]
    orders: Orders,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ComplexityArgs {
    /// JSON Lines with `code` and optional `system`.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Deserialize)]
struct CodeLine {
    code: String,
    #[serde(default)]
    caption: Option<String>,
    #[serde(default)]
    system: Option<String>,
}

#[derive(Serialize)]
struct Point {
    n: usize,
    value: Option<f64>,
}

#[derive(Serialize)]
struct CurveReport<'a> {
    provenance: &'a Provenance,
    metric: &'static str,
    documents: usize,
    curve: Vec<Point>,
}

#[derive(Serialize)]
struct ComplexityReport<'a> {
    provenance: &'a Provenance,
    mean_tokens: BTreeMap<String, f64>,
}

fn points(curve: Vec<(usize, Option<f64>)>) -> Vec<Point> {
    curve.into_iter().map(|(n, value)| Point { n, value }).collect()
}

pub fn run(command: AnalyzeCommand, config: &Config) -> Result<Status> {
    match command {
        AnalyzeCommand::Novelty(a) => {
            let mut provenance = Provenance::new("analyze novelty", config);
            provenance.add_input(&a.train)?;
            provenance.add_input(&a.gen)?;
            let orders = a.orders.parse()?;
            let lc = a.orders.lowercase;
            let train: Vec<Vec<String>> = read_records::<CodeLine>(&a.train)?.iter().map(|l| code_tokens(&l.code, lc)).collect();
            let gen: Vec<Vec<String>> = read_records::<CodeLine>(&a.gen)?.iter().map(|l| code_tokens(&l.code, lc)).collect();
            let curve = novelty_curve(&gen, &train, orders)?;
            let missing = curve.iter().filter(|(_, v)| v.is_none()).count();
            write_json(&a.out, &CurveReport {
                provenance: &provenance,
                metric: "novelty",
                documents: gen.len(),
                curve: points(curve),
            })?;
            Ok(Status::from_failures(missing))
        }
        AnalyzeCommand::Copying(a) => {
            let mut provenance = Provenance::new("analyze copying", config);
            provenance.add_input(&a.gen)?;
            let orders = a.orders.parse()?;
            let lc = a.orders.lowercase;
            let pairs: Vec<(Vec<String>, Vec<String>)> = read_records::<CodeLine>(&a.gen)?
                .iter()
                .map(|l| (text_tokens(l.caption.as_deref().unwrap_or(""), lc), code_tokens(&l.code, lc)))
                .collect();
            let curve = copying_curve(&pairs, orders);
            let missing = curve.iter().filter(|(_, v)| v.is_none()).count();
            write_json(&a.out, &CurveReport {
                provenance: &provenance,
                metric: "copying",
                documents: pairs.len(),
                curve: points(curve),
            })?;
            Ok(Status::from_failures(missing))
        }
        AnalyzeCommand::Complexity(a) => {
            let mut provenance = Provenance::new("analyze complexity", config);
            provenance.add_input(&a.input)?;
            let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
            for l in read_records::<CodeLine>(&a.input)? {
                groups.entry(l.system.unwrap_or_else(|| "default".into())).or_default().push(l.code);
            }
            let mean_tokens = complexity_stats(&groups)?;
            write_json(&a.out, &ComplexityReport {
                provenance: &provenance,
                mean_tokens,
            })?;
            Ok(Status::Ok)
        }
    }
}
