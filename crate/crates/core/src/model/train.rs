use std::time::Instant;

use ndarray::{Array2, ArrayView2};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::error::{Error, Result};
use crate::graph::HeteroGraph;
use crate::propagate::{MixedWeights, PropagationMatrix, DEFAULT_ALPHA, DEFAULT_TOL};

/// Smallest loss decrease that counts as an improvement for early stopping.
pub const MIN_IMPROVEMENT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub hidden: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub folds: usize,
    pub alpha: f64,
    pub tol: f64,
    pub betas: MixedWeights,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.01,
            hidden: 64,
            max_epochs: 1000,
            patience: 10,
            folds: 4,
            alpha: DEFAULT_ALPHA,
            tol: DEFAULT_TOL,
            betas: MixedWeights::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let problem = if self.patience < 1 {
            Some("patience must be at least 1")
        } else if self.folds < 2 {
            Some("folds must be at least 2")
        } else if self.hidden < 1 {
            Some("hidden width must be at least 1")
        } else if !(self.lr.is_finite() && self.lr >= 0.0) {
            Some("learning rate must be finite and non-negative")
        } else {
            None
        };
        match problem {
            Some(p) => Err(Error::InvalidParameter(p.into())),
            None => Ok(()),
        }
    }
}

/// Supervised nodes (combined-space indices) and their class distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct Supervision {
    pub nodes: Vec<usize>,
    /// One row `[P(Fake), P(Real)]` per node.
    pub targets: Array2<f64>,
}

impl Supervision {
    /// Labeled news accepted by `include`, plus every author whose label
    /// mean over those same news is defined. Authors equal to 0 or 1 act as
    /// hard labels; fractional means are soft targets.
    pub fn from_graph(g: &HeteroGraph, include: impl Fn(usize) -> bool) -> Result<Self> {
        let mut nodes = Vec::new();
        let mut real = Vec::new();
        for (i, n) in g.news().iter().enumerate() {
            if let (Some(label), true) = (n.label, include(i)) {
                nodes.push(i);
                real.push(label.as_f64());
            }
        }
        for (a, mean) in g.author_label_means(&include).into_iter().enumerate() {
            if let Some(m) = mean {
                nodes.push(g.author_node(a));
                real.push(m);
            }
        }
        if nodes.is_empty() {
            return Err(Error::NoLabeledNodes);
        }
        let targets = Array2::from_shape_fn((nodes.len(), 2), |(r, c)| {
            if c == 1 {
                real[r]
            } else {
                1.0 - real[r]
            }
        });
        Ok(Supervision { nodes, targets })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Rows of `p` for `nodes`, in that order.
pub(crate) fn gather_rows(p: &PropagationMatrix, nodes: &[usize]) -> Result<Array2<f64>> {
    let mut out = Array2::zeros((nodes.len(), p.n()));
    for (r, &node) in nodes.iter().enumerate() {
        let row = p.row(node).ok_or(Error::InvalidSeed { seed: node, n: p.n() })?;
        out.row_mut(r).assign(&row);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    /// Training loss at the start of each epoch.
    pub losses: Vec<f64>,
    /// Wall time of each epoch.
    pub epoch_seconds: Vec<f64>,
    /// Epoch (0-based) whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Full-batch gradient descent on the supervised rows.
///
/// Stops after `max_epochs`, or once `patience` consecutive epochs fail to
/// beat the best loss by [`MIN_IMPROVEMENT`]. Returns the parameters that
/// achieved the best loss.
pub fn train(
    x: ArrayView2<'_, f64>,
    p: &PropagationMatrix,
    sup: &Supervision,
    cfg: &TrainConfig,
    init_rng: &mut ChaCha8Rng,
) -> Result<(Classifier, History)> {
    cfg.validate()?;
    if sup.is_empty() {
        return Err(Error::NoLabeledNodes);
    }
    if x.nrows() != p.n() {
        return Err(Error::DimensionMismatch {
            context: "feature rows vs propagation size",
            expected: p.n(),
            found: x.nrows(),
        });
    }
    let p_rows = gather_rows(p, &sup.nodes)?;
    let mut model = Classifier::init(x.ncols(), cfg.hidden, init_rng);
    let mut best = (f64::INFINITY, model.clone());
    let mut history = History::default();
    let mut stale = 0;

    for epoch in 0..cfg.max_epochs {
        let start = Instant::now();
        let (loss, grads) = model.loss_and_gradients(x, p_rows.view(), sup.targets.view())?;
        if !loss.is_finite() {
            return Err(Error::NotConverged {
                iterations: epoch,
                residual: loss,
            });
        }
        history.losses.push(loss);
        if loss < best.0 - MIN_IMPROVEMENT || epoch == 0 {
            best = (loss, model.clone());
            history.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
        }
        if stale >= cfg.patience {
            history.epoch_seconds.push(start.elapsed().as_secs_f64());
            history.stopped_early = true;
            break;
        }
        model.step(&grads, cfg.lr);
        history.epoch_seconds.push(start.elapsed().as_secs_f64());
    }
    Ok((best.1, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propagate::Scheme;
    use rand::SeedableRng;

    fn identity(n: usize) -> PropagationMatrix {
        PropagationMatrix::identity(n, &(0..n).collect::<Vec<_>>(), 0.5, Scheme::OneHop).unwrap()
    }

    fn two_clusters(n: usize) -> (Array2<f64>, Supervision) {
        let x = Array2::from_shape_fn((n, 2), |(i, j)| {
            let centre = if i % 2 == 0 { 1.0 } else { -1.0 };
            centre * if j == 0 { 1.0 } else { 0.5 } + 0.1 * ((i * 7 + j) as f64).sin()
        });
        let targets = Array2::from_shape_fn((n, 2), |(i, c)| ((i % 2 == 0) == (c == 1)) as u8 as f64);
        (x, Supervision { nodes: (0..n).collect(), targets })
    }

    #[test]
    fn zero_learning_rate_stops_after_patience() {
        let (x, sup) = two_clusters(10);
        let cfg = TrainConfig { lr: 0.0, hidden: 4, ..Default::default() };
        let (_, h) = train(x.view(), &identity(10), &sup, &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(h.losses.len(), 11);
        assert!(h.stopped_early);
        assert_eq!(h.best_epoch, 0);
    }

    #[test]
    fn separable_clusters_are_learned() {
        let (x, sup) = two_clusters(200);
        let cfg = TrainConfig { lr: 0.5, hidden: 8, max_epochs: 300, ..Default::default() };
        let p = identity(200);
        let (model, h) = train(x.view(), &p, &sup, &cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let probs = super::super::predict(&p, model.forward(x.view()).unwrap().view()).unwrap();
        let correct = (0..200).filter(|&i| (probs[[i, 1]] >= 0.5) == (i % 2 == 0)).count();
        assert!(correct as f64 / 200.0 >= 0.95);
        assert!(h.losses.last().unwrap() < &h.losses[0]);
    }

    #[test]
    fn same_seed_same_history() {
        let (x, sup) = two_clusters(40);
        let cfg = TrainConfig { lr: 0.2, hidden: 6, max_epochs: 50, ..Default::default() };
        let run = || train(x.view(), &identity(40), &sup, &cfg, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let (m1, h1) = run();
        let (m2, h2) = run();
        assert_eq!(m1, m2);
        let bits = |h: &History| h.losses.iter().map(|l| l.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&h1), bits(&h2));
    }

    #[test]
    fn config_and_data_errors() {
        let (x, sup) = two_clusters(4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad = TrainConfig { folds: 1, ..Default::default() };
        assert!(train(x.view(), &identity(4), &sup, &bad, &mut rng).is_err());
        let bad = TrainConfig { patience: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let empty = Supervision { nodes: vec![], targets: Array2::zeros((0, 2)) };
        assert!(matches!(
            train(x.view(), &identity(4), &empty, &TrainConfig::default(), &mut rng),
            Err(Error::NoLabeledNodes)
        ));
        assert!(train(x.view(), &identity(5), &sup, &TrainConfig::default(), &mut rng).is_err());
    }
}
