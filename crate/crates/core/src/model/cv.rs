use std::str::FromStr;
use std::time::Instant;

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::train::{train, History, Supervision, TrainConfig};
use super::{evaluate, mean_report, predict, real_probability, MetricsReport};
use crate::error::{Error, Result};
use crate::graph::{HeteroGraph, Label};
use crate::propagate::{DynamicPropagation, PropagationMatrix, Scheme};

/// Independent random streams derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RngStream {
    Split,
    /// Parameter initialization for one fold.
    Init(usize),
    /// Synthetic corpus generation.
    Data,
    /// Random edge updates.
    Updates,
}

impl RngStream {
    fn id(self) -> u64 {
        match self {
            RngStream::Split => 1,
            RngStream::Data => 2,
            RngStream::Updates => 3,
            RngStream::Init(fold) => (1 << 32) | fold as u64,
        }
    }
}

pub fn seeded_rng(seed: u64, stream: RngStream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

/// Shuffles `0..n_items` and deals it into `k` folds whose sizes differ by
/// at most one. Each fold is returned sorted.
pub fn kfold_split(n_items: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > n_items {
        return Err(Error::InvalidParameter(format!(
            "cannot split {n_items} items into {k} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n_items).collect();
    order.shuffle(&mut seeded_rng(seed, RngStream::Split));
    let mut folds = vec![Vec::with_capacity(n_items / k + 1); k];
    for (pos, item) in order.into_iter().enumerate() {
        folds[pos % k].push(item);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Which propagation rows to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowMode {
    /// Only labeled news and authors with at least one labeled news.
    Labeled,
    All,
}

impl FromStr for RowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "labeled" => Ok(RowMode::Labeled),
            "all" => Ok(RowMode::All),
            other => Err(Error::InvalidParameter(format!(
                "rows must be `labeled` or `all`, found `{other}`"
            ))),
        }
    }
}

/// Combined-space seeds whose propagation rows `mode` asks for.
pub fn row_seeds(g: &HeteroGraph, mode: RowMode) -> Vec<usize> {
    match mode {
        RowMode::All => (0..g.n_nodes()).collect(),
        RowMode::Labeled => {
            let news = g.news().iter().enumerate().filter(|(_, n)| n.label.is_some()).map(|(i, _)| i);
            let authors = g
                .author_label_means(|_| true)
                .into_iter()
                .enumerate()
                .filter(|(_, m)| m.is_some())
                .map(|(a, _)| g.author_node(a));
            news.chain(authors).collect()
        }
    }
}

/// Propagation matrix of one scheme for the rows selected by `mode`.
pub fn build_propagation(g: &HeteroGraph, scheme: Scheme, mode: RowMode, cfg: &TrainConfig) -> Result<PropagationMatrix> {
    let dp = DynamicPropagation::new(
        g.edge_sets().clone(),
        scheme,
        cfg.alpha,
        cfg.tol,
        cfg.betas,
        &row_seeds(g, mode),
    )?;
    Ok(dp.propagation()?.into_owned())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub folds: Vec<MetricsReport>,
    pub mean: MetricsReport,
    pub histories: Vec<History>,
    pub propagation_seconds: f64,
}

/// K-fold cross-validation over the labeled news.
///
/// Author targets are recomputed per fold from training news only. Every
/// fold's `train_seconds` includes building the propagation matrix, which is
/// shared by all folds.
pub fn cross_validate(
    g: &HeteroGraph,
    x: ArrayView2<'_, f64>,
    scheme: Scheme,
    mode: RowMode,
    cfg: &TrainConfig,
) -> Result<CvOutcome> {
    cfg.validate()?;
    let labeled: Vec<usize> = g
        .news()
        .iter()
        .enumerate()
        .filter(|(_, n)| n.label.is_some())
        .map(|(i, _)| i)
        .collect();
    if labeled.is_empty() {
        return Err(Error::NoLabeledNodes);
    }
    let folds = kfold_split(labeled.len(), cfg.folds, cfg.seed)?;

    let start = Instant::now();
    let p = build_propagation(g, scheme, mode, cfg)?;
    let propagation_seconds = start.elapsed().as_secs_f64();

    let results: Vec<(MetricsReport, History)> = folds
        .par_iter()
        .enumerate()
        .map(|(f, fold)| {
            let started = Instant::now();
            let mut is_test = vec![false; g.n_news()];
            for &pos in fold {
                is_test[labeled[pos]] = true;
            }
            let sup = Supervision::from_graph(g, |i| !is_test[i])?;
            let mut rng = seeded_rng(cfg.seed, RngStream::Init(f));
            let (model, history) = train(x, &p, &sup, cfg, &mut rng)?;
            let train_seconds = propagation_seconds + started.elapsed().as_secs_f64();

            let test: Vec<usize> = fold.iter().map(|&pos| labeled[pos]).collect();
            let p_test = p.restrict(&test)?;
            let probs = predict(&p_test, model.forward(x)?.view())?;
            // restrict sorts its seeds; fold positions are sorted and map
            // monotonically to news indices, so order is preserved
            let labels: Vec<Label> = test
                .iter()
                .map(|&i| g.news()[i].label.expect("labeled news"))
                .collect();
            let mut report = evaluate(&real_probability(&probs), &labels, 0.5)?;
            report.train_seconds = train_seconds;
            report.fold = Some(f);
            Ok((report, history))
        })
        .collect::<Result<_>>()?;

    let (reports, histories): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok(CvOutcome {
        mean: mean_report(&reports).expect("at least two folds"),
        folds: reports,
        histories,
        propagation_seconds,
    })
}
