//! `tikzlab`: corpus extraction, compile-repair generation and evaluation
//! for caption-conditioned TikZ figures.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use tikzlab_core::config::{Config, ConfigLayer};
use tikzlab_core::metrics::ClipScoreVariant;
use tikzlab_core::repair::Schedule;

use output::Status;

#[derive(Parser, Debug)]
#[command(name = "tikzlab", disable_version_flag = true, about, long_about = None)]
struct Cli {
    /// Print the toolkit version and exit.
    #[arg(long, global = true)]
    version: bool,

    /// With --version, print machine-readable JSON.
    #[arg(long, requires = "version")]
    json: bool,

    /// TOML file of `key = value` settings (lowest precedence after defaults).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for parallel stages [default: logical cores].
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(flatten)]
    settings: Settings,

    #[command(subcommand)]
    command: Option<Command>,
}

/// Settings shared by all commands. Flags override TIKZLAB_* environment
/// variables, which override the config file.
#[derive(Args, Debug, Default)]
struct Settings {
    /// TeX engine command [default: pdflatex].
    #[arg(long, global = true, value_name = "CMD")]
    engine_cmd: Option<String>,
    /// PDF-to-PNG converter [default: pdftoppm].
    #[arg(long, global = true, value_name = "CMD")]
    raster_cmd: Option<String>,
    /// Embedding provider: mock, mock:SEED, HOST:PORT, tcp:HOST:PORT or stdio:CMD.
    #[arg(long, global = true, value_name = "ADDR")]
    embedder: Option<String>,
    /// Seed for every random choice [default: 0].
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Total sampler calls per caption [default: 10].
    #[arg(long, global = true, value_name = "N")]
    max_attempts: Option<usize>,
    /// Token budget hint sent to samplers [default: 2048].
    #[arg(long, global = true, value_name = "N")]
    max_new: Option<usize>,
    /// Truncation schedule: just-before or offset [default: just-before].
    #[arg(long, global = true)]
    schedule: Option<Schedule>,
    /// Per-compile timeout in seconds [default: 60].
    #[arg(long = "timeout", global = true, value_name = "SECONDS")]
    timeout_s: Option<f64>,
    /// Rasterization resolution [default: 300].
    #[arg(long, global = true)]
    dpi: Option<u32>,
    /// KID subset size [default: 1000].
    #[arg(long, global = true, value_name = "M")]
    kid_subset_size: Option<usize>,
    /// KID subset count [default: 100].
    #[arg(long, global = true, value_name = "S")]
    kid_subsets: Option<usize>,
    /// CrystalBLEU trivially shared n-gram count [default: 500].
    #[arg(long, global = true, value_name = "K")]
    crystalbleu_k: Option<usize>,
    /// CLIPScore scaling: cosine100 or weighted [default: cosine100].
    #[arg(long, global = true, value_name = "VARIANT")]
    clipscore_variant: Option<ClipScoreVariant>,
}

impl Settings {
    fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            engine_cmd: self.engine_cmd.clone(),
            raster_cmd: self.raster_cmd.clone(),
            embedder_addr: self.embedder.clone(),
            seed: self.seed,
            max_attempts: self.max_attempts,
            max_new: self.max_new,
            schedule: self.schedule,
            timeout_s: self.timeout_s,
            dpi: self.dpi,
            kid_subset_size: self.kid_subset_size,
            kid_subsets: self.kid_subsets,
            crystalbleu_k: self.crystalbleu_k,
            clipscore_variant: self.clipscore_variant,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract standalone TikZ records from TeX projects or a Stack Exchange dump.
    Extract(commands::extract::ExtractArgs),
    /// Compile documents and report diagnostics.
    Compile(commands::compile::CompileArgs),
    /// Generate code for captions through a sampler with compile repair.
    Generate(commands::generate::GenerateArgs),
    /// Append the best-ranked candidate description to short captions.
    Augment(commands::augment::AugmentArgs),
    /// Score predictions against references.
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Memorization and complexity analysis.
    #[command(subcommand)]
    Analyze(commands::analyze::AnalyzeCommand),
    /// Best-worst scaling scores and split-half reliability.
    #[command(subcommand)]
    Bws(commands::bws::BwsCommand),
}

fn print_version(json: bool) {
    if json {
        let v = serde_json::json!({
            "name": tikzlab_core::config::TOOLKIT,
            "version": tikzlab_core::VERSION,
        });
        println!("{v}");
    } else {
        println!("{} {}", tikzlab_core::config::TOOLKIT, tikzlab_core::VERSION);
    }
}

fn resolve_config(cli: &Cli) -> Result<Config> {
    let file = match &cli.config {
        Some(p) => ConfigLayer::from_file(p)?,
        None => ConfigLayer::default(),
    };
    Ok(Config::resolve(cli.settings.layer(), ConfigLayer::from_env()?, file)?)
}

fn run(cli: Cli) -> Result<Status> {
    let config = resolve_config(&cli)?;
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global()?;
    }
    let Some(command) = cli.command else {
        anyhow::bail!("no subcommand given; see --help");
    };
    match command {
        Command::Extract(a) => commands::extract::run(a, &config),
        Command::Compile(a) => commands::compile::run(a, &config),
        Command::Generate(a) => commands::generate::run(a, &config),
        Command::Augment(a) => commands::augment::run(a, &config),
        Command::Evaluate(a) => commands::evaluate::run(a, &config),
        Command::Analyze(c) => commands::analyze::run(c, &config),
        Command::Bws(c) => commands::bws::run(c, &config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.version {
        print_version(cli.json);
        return ExitCode::SUCCESS;
    }
    match run(cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
