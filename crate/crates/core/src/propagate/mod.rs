//! Random-walk-with-restart propagation matrices and their dynamic updates.
//!
//! Row `i` of a [`PropagationMatrix`] is the stationary distribution `p` of
//! a walk restarting at node `i`:
//!
//! ```text
//! p = alpha * M * p + (1 - alpha) * e_i
//! ```
//!
//! with `M` column-stochastic. It is computed by cumulative power iteration,
//! `p = (1 - alpha) * sum_k (alpha M)^k e_i`, stopping once the mass still
//! waiting to be absorbed drops below `tol`.

mod dynamic;
mod mixed;
mod pushout;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{SparseMatrix, StochasticMatrix};

pub use dynamic::{DynamicPropagation, UpdateOutcome};
pub use mixed::{lift_homogeneous, mixed_propagation, MixedWeights};
pub use pushout::{pushout_row, pushout_update, UpdateStats};

pub const DEFAULT_ALPHA: f64 = 0.85;
pub const DEFAULT_TOL: f64 = 1e-9;

/// Hard cap on series length; only reachable for `alpha` extremely close to 1.
pub const MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Walk on the transition matrix itself.
    OneHop,
    /// Walk on `M^2`; on a bipartite graph the walk never changes side.
    TwoHop,
    /// Convex combination of the 2-hop authorship matrix and the 1-hop
    /// news-news and author-author matrices.
    Mixed,
}

pub(crate) fn check_params(alpha: f64, tol: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    Ok(())
}

pub(crate) fn l1(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Accumulates `sum_k weight * (alpha M)^k r` into `acc`, starting from the
/// residual `r`, until `|r|_1 < stop`. Returns the number of terms added.
pub(crate) fn accumulate_series(
    m: &SparseMatrix,
    alpha: f64,
    mut residual: Vec<f64>,
    weight: f64,
    stop: f64,
    acc: &mut [f64],
) -> Result<usize> {
    let mut next = vec![0.0; residual.len()];
    let mut terms = 0;
    loop {
        let mass = l1(&residual);
        if mass < stop {
            return Ok(terms);
        }
        if terms == MAX_ITERATIONS {
            return Err(Error::NotConverged {
                iterations: terms,
                residual: mass,
            });
        }
        for (a, r) in acc.iter_mut().zip(&residual) {
            *a += weight * r;
        }
        m.scaled_matvec_into(alpha, &residual, &mut next)?;
        std::mem::swap(&mut residual, &mut next);
        terms += 1;
    }
}

/// Stationary distribution of a walk restarting at `seed`.
///
/// Truncation leaves out less than `tol / 2` of the probability mass.
pub fn rwr_row(m: &StochasticMatrix, seed: usize, alpha: f64, tol: f64) -> Result<Vec<f64>> {
    check_params(alpha, tol)?;
    rwr_row_unchecked(m, seed, alpha, tol).map(|(row, _)| row)
}

fn rwr_row_unchecked(
    m: &StochasticMatrix,
    seed: usize,
    alpha: f64,
    tol: f64,
) -> Result<(Vec<f64>, usize)> {
    let n = m.n();
    if seed >= n {
        return Err(Error::InvalidSeed { seed, n });
    }
    let mut start = vec![0.0; n];
    start[seed] = 1.0;
    let mut row = vec![0.0; n];
    // half the budget, so rounding never carries a row sum past 1 +- tol
    let terms = accumulate_series(m, alpha, start, 1.0 - alpha, 0.5 * tol, &mut row)?;
    Ok((row, terms))
}

/// Dense rows of stationary distributions, one per seed node.
///
/// Seeds are kept sorted; a matrix whose seeds are `0..n` is "full". The
/// restricted form exists so large graphs only pay for the rows the
/// classifier reads.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationMatrix {
    n: usize,
    seeds: Vec<usize>,
    rows: Array2<f64>,
    alpha: f64,
    scheme: Scheme,
}

impl PropagationMatrix {
    pub(crate) fn from_parts(
        n: usize,
        seeds: Vec<usize>,
        rows: Array2<f64>,
        alpha: f64,
        scheme: Scheme,
    ) -> Self {
        debug_assert_eq!(rows.dim(), (seeds.len(), n));
        debug_assert!(seeds.windows(2).all(|w| w[0] < w[1]));
        PropagationMatrix {
            n,
            seeds,
            rows,
            alpha,
            scheme,
        }
    }

    /// `e_i` rows for the given seeds: the stationary distribution of every
    /// node when it has no edges.
    pub fn identity(n: usize, seeds: &[usize], alpha: f64, scheme: Scheme) -> Result<Self> {
        let seeds = normalize_seeds(n, seeds)?;
        let mut rows = Array2::zeros((seeds.len(), n));
        for (r, &s) in seeds.iter().enumerate() {
            rows[[r, s]] = 1.0;
        }
        Ok(Self::from_parts(n, seeds, rows, alpha, scheme))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seeds(&self) -> &[usize] {
        &self.seeds
    }

    pub fn is_full(&self) -> bool {
        self.seeds.len() == self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Rows in seed order.
    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub(crate) fn rows_mut(&mut self) -> &mut Array2<f64> {
        &mut self.rows
    }

    /// Position of `seed` among the stored rows.
    pub fn position(&self, seed: usize) -> Option<usize> {
        if self.is_full() {
            (seed < self.n).then_some(seed)
        } else {
            self.seeds.binary_search(&seed).ok()
        }
    }

    pub fn row(&self, seed: usize) -> Option<ArrayView1<'_, f64>> {
        self.position(seed).map(|r| self.rows.row(r))
    }

    /// Keeps only the rows of `seeds`, all of which must be present.
    pub fn restrict(&self, seeds: &[usize]) -> Result<Self> {
        let seeds = normalize_seeds(self.n, seeds)?;
        let mut rows = Array2::zeros((seeds.len(), self.n));
        for (r, &s) in seeds.iter().enumerate() {
            let src = self.row(s).ok_or(Error::InvalidSeed { seed: s, n: self.n })?;
            rows.row_mut(r).assign(&src);
        }
        Ok(Self::from_parts(self.n, seeds, rows, self.alpha, self.scheme))
    }

    /// Grows the index space by isolated nodes placed at `positions` (indices
    /// in the new space). Old rows and columns shift accordingly; new nodes
    /// get `e_i` rows when the matrix is full.
    ///
    /// Followed by [`pushout_update`] against a transition matrix padded the
    /// same way, this turns node insertion into pure edge updates.
    pub fn insert_nodes(&self, positions: &[usize]) -> Result<Self> {
        let mut positions = positions.to_vec();
        positions.sort_unstable();
        positions.dedup();
        let new_n = self.n + positions.len();
        if positions.last().is_some_and(|&p| p >= new_n) {
            return Err(Error::InvalidParameter(format!(
                "insert position out of range for {new_n} nodes"
            )));
        }
        let is_new = {
            let mut flags = vec![false; new_n];
            for &p in &positions {
                flags[p] = true;
            }
            flags
        };
        let old_to_new: Vec<usize> = (0..new_n).filter(|&i| !is_new[i]).collect();

        let mut seeds: Vec<usize> = self.seeds.iter().map(|&s| old_to_new[s]).collect();
        if self.is_full() {
            seeds.extend(&positions);
            seeds.sort_unstable();
        }
        let mut rows = Array2::zeros((seeds.len(), new_n));
        for (r, &s) in seeds.iter().enumerate() {
            if is_new[s] {
                rows[[r, s]] = 1.0;
                continue;
            }
            let old_seed = old_to_new.binary_search(&s).expect("old node");
            let src = self.row(old_seed).expect("seed present");
            for (j, &v) in src.iter().enumerate() {
                rows[[r, old_to_new[j]]] = v;
            }
        }
        Ok(Self::from_parts(new_n, seeds, rows, self.alpha, self.scheme))
    }
}

pub(crate) fn normalize_seeds(n: usize, seeds: &[usize]) -> Result<Vec<usize>> {
    let mut seeds = seeds.to_vec();
    seeds.sort_unstable();
    seeds.dedup();
    if let Some(&bad) = seeds.iter().find(|&&s| s >= n) {
        return Err(Error::InvalidSeed { seed: bad, n });
    }
    Ok(seeds)
}

/// Stationary rows for the given seeds over one transition matrix.
pub fn propagation_for_seeds(
    m: &StochasticMatrix,
    seeds: &[usize],
    alpha: f64,
    tol: f64,
) -> Result<PropagationMatrix> {
    check_params(alpha, tol)?;
    let n = m.n();
    let seeds = normalize_seeds(n, seeds)?;
    let computed: Vec<Vec<f64>> = seeds
        .par_iter()
        .map(|&s| rwr_row_unchecked(m, s, alpha, tol).map(|(row, _)| row))
        .collect::<Result<_>>()?;
    let mut rows = Array2::zeros((seeds.len(), n));
    for (mut dst, src) in rows.outer_iter_mut().zip(computed) {
        dst.assign(&ArrayView1::from(&src));
    }
    Ok(PropagationMatrix::from_parts(n, seeds, rows, alpha, Scheme::OneHop))
}

/// `rwr_row` for every node.
pub fn full_propagation(m: &StochasticMatrix, alpha: f64, tol: f64) -> Result<PropagationMatrix> {
    let all: Vec<usize> = (0..m.n()).collect();
    propagation_for_seeds(m, &all, alpha, tol)
}

/// Checks that every entry of `adj` crosses between `[0, n_left)` and the
/// rest of the index space.
pub fn check_bipartite(adj: &SparseMatrix, n_left: usize) -> Result<()> {
    match adj.triplets().find(|&(i, j, v)| v != 0.0 && (i < n_left) == (j < n_left)) {
        Some((row, col, _)) => Err(Error::NotBipartite { row, col }),
        None => Ok(()),
    }
}

/// Transition matrix of the 2-hop walk on a bipartite adjacency.
pub fn two_hop_transition(an_adj: &SparseMatrix, n_left: usize) -> Result<StochasticMatrix> {
    check_bipartite(an_adj, n_left)?;
    Ok(an_adj.column_normalize()?.two_hop())
}

/// Full propagation over `(column_normalize(an_adj))^2`.
///
/// `n_left` is the size of the first partition (news); every row keeps all
/// its mass on the seed's own side.
pub fn bipartite_two_hop_propagation(
    an_adj: &SparseMatrix,
    n_left: usize,
    alpha: f64,
    tol: f64,
) -> Result<PropagationMatrix> {
    let all: Vec<usize> = (0..an_adj.n_rows()).collect();
    bipartite_two_hop_for_seeds(an_adj, n_left, &all, alpha, tol)
}

pub fn bipartite_two_hop_for_seeds(
    an_adj: &SparseMatrix,
    n_left: usize,
    seeds: &[usize],
    alpha: f64,
    tol: f64,
) -> Result<PropagationMatrix> {
    let m2 = two_hop_transition(an_adj, n_left)?;
    Ok(propagation_for_seeds(&m2, seeds, alpha, tol)?.with_scheme(Scheme::TwoHop))
}
