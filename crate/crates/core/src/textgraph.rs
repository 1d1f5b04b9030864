//! Word graphs and PageRank-weighted pooling of word embeddings.
//!
//! A sequence of `n` words becomes a graph linking every pair of positions
//! at most `q` apart. A global PageRank over that graph weights each word,
//! and the weighted average of the word vectors is the sequence's feature
//! vector.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::propagate::{accumulate_series, check_params};
use crate::sparse::SparseMatrix;

pub const DEFAULT_WINDOW: usize = 3;

/// Banded 0/1 adjacency: `(i, j)` is an edge iff `0 < |i - j| <= q`.
pub fn build_word_graph(n_words: usize, q: usize) -> Result<SparseMatrix> {
    if q == 0 {
        return Err(Error::InvalidParameter("word window q must be at least 1".into()));
    }
    let coords = (0..n_words).flat_map(move |i| {
        let lo = i.saturating_sub(q);
        let hi = (i + q).min(n_words.saturating_sub(1));
        (lo..=hi).filter(move |&j| j != i).map(move |j| (i, j, 1.0))
    });
    SparseMatrix::from_coordinates(n_words, n_words, coords)
}

/// Stationary distribution of a walk on `adj` that restarts uniformly.
pub fn pagerank_weights(adj: &SparseMatrix, alpha: f64, tol: f64) -> Result<Vec<f64>> {
    check_params(alpha, tol)?;
    let m = adj.column_normalize()?;
    let n = m.n();
    if n == 0 {
        return Ok(Vec::new());
    }
    let uniform = vec![1.0 / n as f64; n];
    let mut w = vec![0.0; n];
    accumulate_series(&m, alpha, uniform, 1.0 - alpha, tol, &mut w)?;
    Ok(w)
}

/// `sum_i weights[i] * features.row(i)`; an empty input gives the zero vector.
pub fn aggregate_embedding(features: ArrayView2<'_, f64>, weights: &[f64]) -> Result<Array1<f64>> {
    if features.nrows() != weights.len() {
        return Err(Error::DimensionMismatch {
            context: "word weights",
            expected: features.nrows(),
            found: weights.len(),
        });
    }
    let mut out = Array1::zeros(features.ncols());
    for (row, &w) in features.outer_iter().zip(weights) {
        out.scaled_add(w, &row);
    }
    Ok(out)
}

/// Pools one sequence of word vectors (rows in word order).
pub fn sequence_embedding(words: ArrayView2<'_, f64>, q: usize, alpha: f64, tol: f64) -> Result<Array1<f64>> {
    let adj = build_word_graph(words.nrows(), q)?;
    let weights = pagerank_weights(&adj, alpha, tol)?;
    aggregate_embedding(words, &weights)
}

/// Pools a document split into several sequences: each sequence is pooled on
/// its own, then the results are averaged weighted by sequence length.
pub fn document_embedding(
    sequences: &[Array2<f64>],
    dim: usize,
    q: usize,
    alpha: f64,
    tol: f64,
) -> Result<Array1<f64>> {
    let mut out = Array1::zeros(dim);
    let total: usize = sequences.iter().map(|s| s.nrows()).sum();
    if total == 0 {
        return Ok(out);
    }
    for seq in sequences {
        if seq.ncols() != dim {
            return Err(Error::DimensionMismatch {
                context: "word embedding dimension",
                expected: dim,
                found: seq.ncols(),
            });
        }
        if seq.nrows() == 0 {
            continue;
        }
        let pooled = sequence_embedding(seq.view(), q, alpha, tol)?;
        out.scaled_add(seq.nrows() as f64 / total as f64, &pooled);
    }
    Ok(out)
}
