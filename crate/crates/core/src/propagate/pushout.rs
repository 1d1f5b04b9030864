//! Push-out updates after the transition matrix changes from `M` to `M'`.
//!
//! For every row `p`:
//!
//! ```text
//! pushout = alpha (M' - M) p
//! p_new   = p + sum_k (alpha M')^k pushout
//! ```
//!
//! which satisfies `p_new = alpha M' p_new + (1 - alpha) e_i` exactly when
//! `p` solved the old equation. The same update serves 1-hop (`M`) and 2-hop
//! (`M^2`) walks; callers pass whichever transition matrices they use.
//!
//! `(M' - M)` is nonzero only on the columns `C` touched by the edit, so
//! `pushout = alpha * sum_{c in C} p[c] (M' - M)[:, c]`. The series response
//! `z_c = sum_k (alpha M')^k (M' - M)[:, c]` does not depend on the row, so it
//! is computed once per changed column and every row becomes
//! `p + alpha * sum_c p[c] z_c`.

use ndarray::{ArrayView1, Axis};
use rayon::prelude::*;
use serde::Serialize;

use super::{accumulate_series, check_params, PropagationMatrix};
use crate::error::{Error, Result};
use crate::sparse::StochasticMatrix;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct UpdateStats {
    /// Columns where `M'` differs from `M`.
    pub changed_columns: usize,
    /// Longest series evaluated for one changed column.
    pub max_terms: usize,
    /// Rows that had mass on a changed column.
    pub rows_touched: usize,
}

fn check_dims(n: usize, m_old: &StochasticMatrix, m_new: &StochasticMatrix) -> Result<()> {
    for m in [m_old, m_new] {
        if m.n() != n {
            return Err(Error::DimensionMismatch {
                context: "push-out transition matrix",
                expected: n,
                found: m.n(),
            });
        }
    }
    Ok(())
}

/// Truncation may leave entries a hair below zero where the exact value is
/// zero or tiny. Clamp them and rescale so the row keeps its mass.
pub(crate) fn clamp_negative(row: &mut [f64], mass: f64) {
    if !row.iter().any(|&x| x < 0.0) {
        return;
    }
    for x in row.iter_mut() {
        *x = x.max(0.0);
    }
    let sum: f64 = row.iter().sum();
    if sum > 0.0 {
        let scale = mass / sum;
        for x in row.iter_mut() {
            *x *= scale;
        }
    }
}

impl PropagationMatrix {
    /// Updates every stored row in place from `m_old` to `m_new`.
    ///
    /// Each series stops when its pending term is small enough that the
    /// omitted tail is below `tol` in L1.
    pub fn pushout(
        &mut self,
        m_old: &StochasticMatrix,
        m_new: &StochasticMatrix,
        tol: f64,
    ) -> Result<UpdateStats> {
        let alpha = self.alpha();
        check_params(alpha, tol)?;
        check_dims(self.n(), m_old, m_new)?;
        let changed = m_old.changed_columns(m_new)?;
        let mut stats = UpdateStats {
            changed_columns: changed.len(),
            ..Default::default()
        };
        if changed.is_empty() || alpha == 0.0 {
            return Ok(stats);
        }

        let stop = tol * (1.0 - alpha);
        let responses: Vec<(Vec<f64>, usize)> = changed
            .par_iter()
            .map(|&c| {
                let mut z = vec![0.0; self.n()];
                let terms =
                    accumulate_series(m_new, alpha, m_old.column_difference(m_new, c), 1.0, stop, &mut z)?;
                Ok((z, terms))
            })
            .collect::<Result<_>>()?;
        stats.max_terms = responses.iter().map(|(_, t)| *t).max().unwrap_or(0);

        let touched = self
            .rows_mut()
            .axis_iter_mut(Axis(0))
            .into_par_iter()
            .map(|mut row| {
                let coefs: Vec<(usize, f64)> = changed
                    .iter()
                    .enumerate()
                    .filter(|&(_, &c)| row[c] != 0.0)
                    .map(|(k, &c)| (k, alpha * row[c]))
                    .collect();
                if coefs.is_empty() {
                    return 0usize;
                }
                let mass = row.sum();
                for (k, coef) in coefs {
                    row.scaled_add(coef, &ArrayView1::from(&responses[k].0));
                }
                clamp_negative(row.as_slice_mut().expect("rows are contiguous"), mass);
                1
            })
            .sum();
        stats.rows_touched = touched;
        Ok(stats)
    }
}

/// Returns a copy of `p` pushed out from `m_old` to `m_new`.
pub fn pushout_update(
    p: &PropagationMatrix,
    m_old: &StochasticMatrix,
    m_new: &StochasticMatrix,
    tol: f64,
) -> Result<PropagationMatrix> {
    let mut next = p.clone();
    next.pushout(m_old, m_new, tol)?;
    Ok(next)
}

/// One row updated literally: form `alpha (M' - M) p` and run its series.
///
/// Slower than [`PropagationMatrix::pushout`] for many rows; kept as an
/// independent route to the same result.
pub fn pushout_row(
    row: &[f64],
    m_old: &StochasticMatrix,
    m_new: &StochasticMatrix,
    alpha: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    check_params(alpha, tol)?;
    check_dims(row.len(), m_old, m_new)?;
    let n = row.len();
    let mut new_part = vec![0.0; n];
    let mut old_part = vec![0.0; n];
    m_new.scaled_matvec_into(alpha, row, &mut new_part)?;
    m_old.scaled_matvec_into(alpha, row, &mut old_part)?;
    let pushout: Vec<f64> = new_part.iter().zip(&old_part).map(|(a, b)| a - b).collect();

    let mut out = row.to_vec();
    accumulate_series(m_new, alpha, pushout, 1.0, tol * (1.0 - alpha), &mut out)?;
    clamp_negative(&mut out, row.iter().sum());
    Ok(out)
}
