use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use levelscore::config::PipelineConfig;
use levelscore::pipeline::{run_pipeline, run_stage, AnalyzeKind, Stage};
use levelscore::{Error, Result};

#[derive(Parser)]
#[command(name = "levelscore", version, about = "Basic-to-applied level scores from vocabulary co-occurrence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct Overrides {
    /// Plain-text `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    from: Option<i32>,
    #[arg(long, global = true)]
    to: Option<i32>,
    #[arg(long, global = true)]
    window: Option<u32>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long, global = true)]
    negatives: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<u64>,
    #[arg(long = "bin-width", global = true)]
    bin_width: Option<f64>,
    #[arg(long = "sample-fraction", global = true)]
    sample_fraction: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for every parallel stage; 1 makes runs reproducible.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a planted two-community corpus to <out>/input.
    Synth,
    /// Parse vocabulary, papers, citations and journal fields.
    Ingest,
    /// Count term pairs per sliding window.
    Cooccur,
    /// Train one embedding per window.
    Embed,
    /// Build axes and score terms and papers.
    Score,
    /// Run one downstream analysis.
    Analyze {
        #[arg(value_enum)]
        what: What,
    },
    /// ingest, cooccur, embed, score and every analysis.
    Pipeline,
    /// Print the effective configuration.
    Config,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Heatmap,
    Reach,
    Groups,
    Trials,
    Trajectory,
    Threshold,
    Similarity,
}

impl From<What> for AnalyzeKind {
    fn from(w: What) -> Self {
        match w {
            What::Heatmap => AnalyzeKind::Heatmap,
            What::Reach => AnalyzeKind::Reach,
            What::Groups => AnalyzeKind::Groups,
            What::Trials => AnalyzeKind::Trials,
            What::Trajectory => AnalyzeKind::Trajectory,
            What::Threshold => AnalyzeKind::Threshold,
            What::Similarity => AnalyzeKind::Similarity,
        }
    }
}

fn build_config(o: &Overrides) -> Result<PipelineConfig> {
    let mut c = match &o.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    macro_rules! apply {
        ($($f:ident),*) => { $(if let Some(v) = o.$f.clone() { c.$f = v; })* };
    }
    apply!(from, to, window, dim, negatives, bin_width, sample_fraction, seed, threads, out);
    if let Some(s) = o.samples {
        c.samples = Some(s);
    }
    c.validate()?;
    Ok(c)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = build_config(&cli.overrides)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_threads())
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    match cli.command {
        Command::Synth => run_stage(&cfg, Stage::Synth).map(drop),
        Command::Ingest => run_stage(&cfg, Stage::Ingest).map(drop),
        Command::Cooccur => run_stage(&cfg, Stage::Cooccur).map(drop),
        Command::Embed => run_stage(&cfg, Stage::Embed).map(drop),
        Command::Score => run_stage(&cfg, Stage::Score).map(drop),
        Command::Analyze { what } => run_stage(&cfg, Stage::Analyze(what.into())).map(drop),
        Command::Pipeline => run_pipeline(&cfg),
        Command::Config => {
            print!("{}", cfg.to_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
