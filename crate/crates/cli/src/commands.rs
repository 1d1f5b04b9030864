use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::Utc;
use serde::Serialize;

use hinprop::features::{features_from_words, FeatureTable};
use hinprop::graph::{load_graph, read_graph_json, read_updates, write_graph_json, write_records, GraphPaths, UpdateOp};
use hinprop::model::{cross_validate, row_seeds, seeded_rng, MetricsReport, RngStream, RowMode, TrainConfig};
use hinprop::propagate::{DynamicPropagation, Scheme};
use hinprop::synth::{generate, random_updates, CorpusSpec};
use hinprop::{Error, HeteroGraph, Result};

use crate::manifest::RunManifest;
use crate::{BenchArgs, BenchScheme, BuildArgs, Command, ModelKind, ReplayArgs, Rows, SynthArgs, TrainArgs};

pub const GRAPH_FILE: &str = "graph.json";
pub const FEATURES_FILE: &str = "features.tsv";
pub const METRICS_FILE: &str = "metrics.json";
pub const BENCH_FILE: &str = "bench.tsv";
pub const UPDATES_FILE: &str = "updates.tsv";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    writeln!(w).and_then(|_| w.flush()).map_err(io_err(path))
}

/// Writes `text` and a newline to stdout. A closed pipe (`| head`) is not
/// an error; other write failures are.
fn emit(text: impl std::fmt::Display) {
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{text}") {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            panic!("failed writing to stdout: {e}");
        }
    }
}

fn print_json<T: Serialize>(value: &T) {
    emit(serde_json::to_string_pretty(value).expect("plain data serializes"));
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn row_mode(rows: Rows) -> RowMode {
    match rows {
        Rows::Labeled => RowMode::Labeled,
        Rows::All => RowMode::All,
    }
}

pub fn run(command: Command, json: bool) -> Result<()> {
    let started = Utc::now();
    let out = match &command {
        Command::Build(a) => build(a, json)?,
        Command::Train(a) => train(a, json)?,
        Command::BenchUpdate(a) => bench_update(a, json)?,
        Command::Synth(a) => synth(a, json)?,
        Command::Replay(a) => return replay(a, json),
    };
    RunManifest::new(command, started).write(&out)
}

fn replay(args: &ReplayArgs, json: bool) -> Result<()> {
    let manifest = RunManifest::read(&args.manifest)?;
    let mut command = manifest.config;
    if let Some(out) = &args.out {
        match &mut command {
            Command::Build(a) => a.out = out.clone(),
            Command::Synth(a) => a.out = out.clone(),
            Command::Train(a) => a.out = Some(out.clone()),
            Command::BenchUpdate(a) => a.out = Some(out.clone()),
            Command::Replay(_) => {}
        }
    }
    if matches!(command, Command::Replay(_)) {
        return Err(Error::InvalidParameter("a manifest cannot record a replay".into()));
    }
    run(command, json)
}

#[derive(Serialize)]
struct BuildSummary {
    #[serde(flatten)]
    stats: hinprop::graph::GraphStats,
    feature_rows: usize,
    feature_dim: usize,
}

fn build(args: &BuildArgs, json: bool) -> Result<PathBuf> {
    let graph = load_graph(&GraphPaths::in_dir(&args.input))?
        .build_mappings()
        .derive_author_labels();
    let features = match (&args.features, &args.words) {
        (Some(path), _) => Some(FeatureTable::read(path)?),
        (None, Some(path)) => Some(features_from_words(path, args.q, args.alpha, args.tol)?),
        (None, None) => None,
    };
    if let Some(f) = &features {
        f.matrix_for(&graph)?;
    }

    create_dir(&args.out)?;
    write_graph_json(&graph, &args.out.join(GRAPH_FILE))?;
    if let Some(f) = &features {
        f.write(&args.out.join(FEATURES_FILE))?;
    }

    let summary = BuildSummary {
        stats: graph.stats(),
        feature_rows: features.as_ref().map_or(0, FeatureTable::len),
        feature_dim: features.as_ref().map_or(0, FeatureTable::dim),
    };
    if json {
        print_json(&summary);
    } else {
        emit(&summary.stats);
        emit(format_args!("feature_rows={}", summary.feature_rows));
        emit(format_args!("feature_dim={}", summary.feature_dim));
    }
    Ok(args.out.clone())
}

fn load_artifacts(dir: &Path) -> Result<(HeteroGraph, FeatureTable)> {
    let graph = read_graph_json(&dir.join(GRAPH_FILE))?;
    let features = FeatureTable::read(&dir.join(FEATURES_FILE))?;
    Ok((graph, features))
}

#[derive(Serialize)]
struct TrainOutput<'a> {
    scheme: ModelKind,
    folds: &'a [MetricsReport],
    mean: MetricsReport,
    epochs: Vec<usize>,
    propagation_seconds: f64,
}

fn train(args: &TrainArgs, json: bool) -> Result<PathBuf> {
    let cfg = TrainConfig {
        lr: args.lr,
        hidden: args.hidden,
        max_epochs: args.max_epochs,
        patience: args.patience,
        folds: args.folds,
        alpha: args.propagation.alpha,
        tol: args.propagation.tol,
        betas: args.propagation.betas,
        seed: args.seed,
    };
    cfg.validate()?;
    let (graph, features) = load_artifacts(&args.artifacts)?;
    let x = features.matrix_for(&graph)?;
    let scheme = match args.scheme {
        ModelKind::Dbgnn => Scheme::TwoHop,
        ModelKind::Dhgnn => Scheme::Mixed,
    };
    let outcome = cross_validate(&graph, x.view(), scheme, row_mode(args.propagation.rows), &cfg)?;

    let output = TrainOutput {
        scheme: args.scheme,
        folds: &outcome.folds,
        mean: outcome.mean,
        epochs: outcome.histories.iter().map(|h| h.losses.len()).collect(),
        propagation_seconds: outcome.propagation_seconds,
    };
    let out = args.out.clone().unwrap_or_else(|| args.artifacts.clone());
    create_dir(&out)?;
    write_json(&out.join(METRICS_FILE), &output)?;
    if json {
        print_json(&output);
    } else {
        for report in &outcome.folds {
            emit(format_args!("{report}\n"));
        }
        emit(&outcome.mean);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
struct BenchRow {
    step: usize,
    op: &'static str,
    relation: String,
    src_id: String,
    dst_id: String,
    changed: bool,
    pushout_seconds: f64,
    recompute_seconds: f64,
    max_row_l1: f64,
}

const BENCH_HEADER: &str =
    "step\top\trelation\tsrc_id\tdst_id\tchanged\tpushout_seconds\trecompute_seconds\tmax_row_l1";

impl BenchRow {
    fn tsv(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:e}",
            self.step,
            self.op,
            self.relation,
            self.src_id,
            self.dst_id,
            self.changed,
            self.pushout_seconds,
            self.recompute_seconds,
            self.max_row_l1
        )
    }
}

fn bench_update(args: &BenchArgs, json: bool) -> Result<PathBuf> {
    let graph = read_graph_json(&args.artifacts.join(GRAPH_FILE))?;
    let updates = read_updates(&args.updates)?;
    let scheme = match args.scheme {
        BenchScheme::OneHop => Scheme::OneHop,
        BenchScheme::TwoHop => Scheme::TwoHop,
        BenchScheme::Mixed => Scheme::Mixed,
    };
    let p = &args.propagation;
    let seeds = row_seeds(&graph, row_mode(p.rows));
    let mut dp = DynamicPropagation::new(graph.edge_sets().clone(), scheme, p.alpha, p.tol, p.betas, &seeds)?;

    let mut rows = Vec::with_capacity(updates.len());
    for (step, update) in updates.iter().enumerate() {
        let edge = graph.resolve(update)?;
        let t = Instant::now();
        let outcome = dp.apply(update.op, update.relation, edge)?;
        let pushout_seconds = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let fresh = dp.recompute()?;
        let recompute_seconds = t.elapsed().as_secs_f64();
        let current = dp.propagation()?;
        let max_row_l1 = current
            .rows()
            .outer_iter()
            .zip(fresh.rows().outer_iter())
            .map(|(a, b)| a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>())
            .fold(0.0, f64::max);
        rows.push(BenchRow {
            step,
            op: match update.op {
                UpdateOp::Insert => "+",
                UpdateOp::Delete => "-",
            },
            relation: update.relation.to_string(),
            src_id: update.src_id.clone(),
            dst_id: update.dst_id.clone(),
            changed: outcome.changed,
            pushout_seconds,
            recompute_seconds,
            max_row_l1,
        });
    }

    let out = args.out.clone().unwrap_or_else(|| args.artifacts.clone());
    create_dir(&out)?;
    let table: Vec<String> = std::iter::once(BENCH_HEADER.to_string())
        .chain(rows.iter().map(BenchRow::tsv))
        .collect();
    let path = out.join(BENCH_FILE);
    fs::write(&path, table.join("\n") + "\n").map_err(io_err(&path))?;
    if json {
        print_json(&rows);
    } else {
        for line in &table {
            emit(line);
        }
    }
    Ok(out)
}

fn synth(args: &SynthArgs, json: bool) -> Result<PathBuf> {
    let spec = CorpusSpec {
        news: args.news,
        authors: args.authors,
        subjects: args.subjects,
        sources: args.sources,
        dim: args.dim,
        separation: args.separation,
        noise: args.noise,
    };
    let corpus = generate(&spec, &mut seeded_rng(args.seed, RngStream::Data))?;
    create_dir(&args.out)?;
    write_records(&corpus.graph, &GraphPaths::in_dir(&args.out))?;
    corpus.features.write(&args.out.join(FEATURES_FILE))?;
    if args.updates > 0 {
        let updates = random_updates(&corpus.graph, args.updates, &mut seeded_rng(args.seed, RngStream::Updates))?;
        let lines: Vec<String> = updates
            .iter()
            .map(|u| {
                let op = if u.op == UpdateOp::Insert { "+" } else { "-" };
                format!("{op}\t{}\t{}\t{}\n", u.relation, u.src_id, u.dst_id)
            })
            .collect();
        let path = args.out.join(UPDATES_FILE);
        fs::write(&path, lines.concat()).map_err(io_err(&path))?;
    }
    let stats = corpus.graph.stats();
    if json {
        print_json(&stats);
    } else {
        emit(&stats);
    }
    Ok(args.out.clone())
}
