//! Per-node classifier whose outputs are diffused by a propagation matrix.
//!
//! `forward` maps features to two logits per node with a two-layer
//! perceptron. `predict` mixes those logits with the rows of `P` and applies
//! a softmax, so class scores flow along the graph without message passing
//! inside the network.

mod cv;
mod metrics;
mod train;

pub use cv::{
    build_propagation, cross_validate, kfold_split, row_seeds, seeded_rng, CvOutcome, RngStream, RowMode,
};
pub use metrics::{auc, evaluate, mean_report, MetricsReport};
pub use train::{train, History, Supervision, TrainConfig};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::propagate::PropagationMatrix;

pub const N_CLASSES: usize = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Classifier {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

/// Parameter gradients, shaped like the [`Classifier`] fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl Classifier {
    pub fn zeros(d_in: usize, hidden: usize) -> Self {
        Classifier {
            w1: Array2::zeros((d_in, hidden)),
            b1: Array1::zeros(hidden),
            w2: Array2::zeros((hidden, N_CLASSES)),
            b2: Array1::zeros(N_CLASSES),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init(d_in: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut glorot = |rows: usize, cols: usize| {
            let limit = (6.0 / (rows + cols).max(1) as f64).sqrt();
            Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..=limit))
        };
        let w1 = glorot(d_in, hidden);
        let w2 = glorot(hidden, N_CLASSES);
        Classifier {
            w1,
            b1: Array1::zeros(hidden),
            w2,
            b2: Array1::zeros(N_CLASSES),
        }
    }

    pub fn d_in(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.ncols()
    }

    fn check_input(&self, x: &ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.d_in() {
            return Err(Error::DimensionMismatch {
                context: "classifier input features",
                expected: self.d_in(),
                found: x.ncols(),
            });
        }
        Ok(())
    }

    /// `relu(x W1 + b1) W2 + b2`, one row of logits per input row.
    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(&x)?;
        let hidden = (x.dot(&self.w1) + &self.b1).mapv(|v| v.max(0.0));
        Ok(hidden.dot(&self.w2) + &self.b2)
    }

    /// Mean cross-entropy of `softmax(P_S · forward(x))` against `targets`,
    /// where `p_rows` holds one propagation row per supervised node and each
    /// target row is a distribution over the two classes.
    pub fn loss(&self, x: ArrayView2<'_, f64>, p_rows: ArrayView2<'_, f64>, targets: ArrayView2<'_, f64>) -> Result<f64> {
        let logits = self.forward(x)?;
        let z = mix(p_rows, logits.view())?;
        check_targets(&z, &targets)?;
        Ok(cross_entropy(&z, &targets))
    }

    /// Loss and its exact gradient with respect to every parameter.
    pub fn loss_and_gradients(
        &self,
        x: ArrayView2<'_, f64>,
        p_rows: ArrayView2<'_, f64>,
        targets: ArrayView2<'_, f64>,
    ) -> Result<(f64, Gradients)> {
        self.check_input(&x)?;
        let pre = x.dot(&self.w1) + &self.b1;
        let hidden = pre.mapv(|v| v.max(0.0));
        let logits = hidden.dot(&self.w2) + &self.b2;
        let z = mix(p_rows, logits.view())?;
        check_targets(&z, &targets)?;
        let loss = cross_entropy(&z, &targets);

        let n_rows = z.nrows().max(1) as f64;
        let mut dz = softmax_rows(&z);
        dz -= &targets;
        dz /= n_rows;
        let d_logits = p_rows.t().dot(&dz);
        let w2 = hidden.t().dot(&d_logits);
        let b2 = d_logits.sum_axis(Axis(0));
        let mut d_pre = d_logits.dot(&self.w2.t());
        ndarray::Zip::from(&mut d_pre).and(&pre).for_each(|g, &p| {
            if p <= 0.0 {
                *g = 0.0;
            }
        });
        let w1 = x.t().dot(&d_pre);
        let b1 = d_pre.sum_axis(Axis(0));
        Ok((loss, Gradients { w1, b1, w2, b2 }))
    }

    pub(crate) fn step(&mut self, g: &Gradients, lr: f64) {
        self.w1.scaled_add(-lr, &g.w1);
        self.b1.scaled_add(-lr, &g.b1);
        self.w2.scaled_add(-lr, &g.w2);
        self.b2.scaled_add(-lr, &g.b2);
    }

    pub fn is_finite(&self) -> bool {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2).all(|v| v.is_finite())
    }
}

fn mix(p_rows: ArrayView2<'_, f64>, logits: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if p_rows.ncols() != logits.nrows() {
        return Err(Error::DimensionMismatch {
            context: "propagation columns vs logit rows",
            expected: logits.nrows(),
            found: p_rows.ncols(),
        });
    }
    Ok(p_rows.dot(&logits))
}

fn check_targets(z: &Array2<f64>, targets: &ArrayView2<'_, f64>) -> Result<()> {
    if targets.dim() != z.dim() {
        return Err(Error::DimensionMismatch {
            context: "target rows",
            expected: z.nrows(),
            found: targets.nrows(),
        });
    }
    Ok(())
}

fn log_softmax_row(row: ndarray::ArrayView1<'_, f64>) -> Array1<f64> {
    let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    row.mapv(|v| v - lse)
}

fn softmax_rows(z: &Array2<f64>) -> Array2<f64> {
    let mut out = z.clone();
    for mut row in out.outer_iter_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    out
}

fn cross_entropy(z: &Array2<f64>, targets: &ArrayView2<'_, f64>) -> f64 {
    if z.nrows() == 0 {
        return 0.0;
    }
    let total: f64 = z
        .outer_iter()
        .zip(targets.outer_iter())
        .map(|(row, t)| -log_softmax_row(row).dot(&t))
        .sum();
    total / z.nrows() as f64
}

/// Class probabilities `softmax(P · logits)` for every stored row of `p`.
pub fn predict(p: &PropagationMatrix, logits: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    Ok(softmax_rows(&mix(p.rows().view(), logits)?))
}

/// Real-class column of `predict` output.
pub fn real_probability(probs: &Array2<f64>) -> Vec<f64> {
    probs.column(1).to_vec()
}
