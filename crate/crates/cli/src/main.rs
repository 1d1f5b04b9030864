mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use hinprop::propagate::{MixedWeights, DEFAULT_ALPHA, DEFAULT_TOL};
use hinprop::textgraph::DEFAULT_WINDOW;
use hinprop::Error;

#[derive(Debug, Parser)]
#[command(name = "hinprop", version, about = "Personalized-PageRank propagation on news/author graphs")]
struct Cli {
    /// Print machine-readable JSON on stdout instead of text.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Load record files, build the relation mappings and write artifacts.
    Build(BuildArgs),
    /// Cross-validate the classifier on built artifacts.
    Train(TrainArgs),
    /// Time push-out updates against full recomputation.
    BenchUpdate(BenchArgs),
    /// Write a synthetic two-class corpus in the input file formats.
    Synth(SynthArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BuildArgs {
    /// Directory holding news.tsv, authors.tsv, subjects.tsv and sources.tsv.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory for graph.json, features.tsv and the run manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Precomputed node features to validate and copy.
    #[arg(long, conflicts_with = "words")]
    pub features: Option<PathBuf>,
    /// Word embeddings to pool into node features.
    #[arg(long)]
    pub words: Option<PathBuf>,
    /// Word-graph window.
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub q: usize,
    /// Walk probability for word weighting.
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Authorship relation only, 2-hop propagation.
    Dbgnn,
    /// All three relations, mixed propagation.
    Dhgnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rows {
    Labeled,
    All,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PropagationArgs {
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Mixing weights b0,b1,b2 for the authorship, news-news and
    /// author-author matrices.
    #[arg(long, default_value_t = MixedWeights::default())]
    pub betas: MixedWeights,
    /// Propagation rows to compute.
    #[arg(long, value_enum, default_value_t = Rows::Labeled)]
    pub rows: Rows,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Directory written by `build`.
    #[arg(long)]
    pub artifacts: PathBuf,
    #[arg(long, value_enum)]
    pub scheme: ModelKind,
    /// Where metrics.json and the run manifest go; defaults to the artifacts
    /// directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub propagation: PropagationArgs,
    #[arg(long, default_value_t = 4)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchScheme {
    OneHop,
    TwoHop,
    Mixed,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    #[arg(long)]
    pub artifacts: PathBuf,
    /// Lines of `op<TAB>relation<TAB>src_id<TAB>dst_id`, `op` being + or -.
    #[arg(long)]
    pub updates: PathBuf,
    #[arg(long, value_enum, default_value_t = BenchScheme::Mixed)]
    pub scheme: BenchScheme,
    /// Where bench.tsv and the run manifest go; defaults to the artifacts
    /// directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub propagation: PropagationArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub news: usize,
    #[arg(long, default_value_t = 40)]
    pub authors: usize,
    #[arg(long, default_value_t = 2)]
    pub subjects: usize,
    #[arg(long, default_value_t = 2)]
    pub sources: usize,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.5)]
    pub noise: f64,
    /// Also write this many random edge updates to updates.tsv.
    #[arg(long, default_value_t = 0)]
    pub updates: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write outputs here instead of the recorded directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::NotConverged { .. } => 3,
        e if e.is_data_error() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command, cli.json) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
