use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array2};
use serde::{Deserialize, Serialize};

use super::{PropagationMatrix, Scheme};
use crate::error::{Error, Result};

/// Weights of the authorship, news-news and author-author propagation
/// matrices in a mixed propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedWeights {
    beta_an: f64,
    beta_nn: f64,
    beta_aa: f64,
}

impl MixedWeights {
    pub fn new(beta_an: f64, beta_nn: f64, beta_aa: f64) -> Result<Self> {
        let all = [beta_an, beta_nn, beta_aa];
        let sum: f64 = all.iter().sum();
        if all.iter().any(|b| !(b.is_finite() && *b >= 0.0)) || (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWeights(beta_an, beta_nn, beta_aa));
        }
        Ok(MixedWeights {
            beta_an,
            beta_nn,
            beta_aa,
        })
    }

    pub fn beta_an(&self) -> f64 {
        self.beta_an
    }

    pub fn beta_nn(&self) -> f64 {
        self.beta_nn
    }

    pub fn beta_aa(&self) -> f64 {
        self.beta_aa
    }
}

impl Default for MixedWeights {
    fn default() -> Self {
        let third = 1.0 / 3.0;
        MixedWeights {
            beta_an: third,
            beta_nn: third,
            beta_aa: third,
        }
    }
}

/// Parses `b0,b1,b2`.
impl FromStr for MixedWeights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| Error::InvalidParameter(format!("betas `{s}`: {e}")))?;
        match parts[..] {
            [a, b, c] => MixedWeights::new(a, b, c),
            _ => Err(Error::InvalidParameter(format!(
                "betas `{s}`: expected three comma-separated values"
            ))),
        }
    }
}

impl fmt::Display for MixedWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.beta_an, self.beta_nn, self.beta_aa)
    }
}

/// Embeds a propagation matrix over one node type into the combined space.
///
/// `p_hom` covers nodes `[offset, offset + p_hom.n())` of an `n_total`-node
/// space. Seeds outside that block get `e_i`, the distribution of a node with
/// no edges of this relation.
pub fn lift_homogeneous(
    p_hom: &PropagationMatrix,
    offset: usize,
    n_total: usize,
    seeds: &[usize],
) -> Result<Array2<f64>> {
    let block = offset..offset + p_hom.n();
    if block.end > n_total {
        return Err(Error::DimensionMismatch {
            context: "lifted propagation block",
            expected: n_total,
            found: block.end,
        });
    }
    let mut out = Array2::zeros((seeds.len(), n_total));
    for (r, &s) in seeds.iter().enumerate() {
        if block.contains(&s) {
            let local = p_hom.row(s - offset).ok_or(Error::InvalidSeed {
                seed: s - offset,
                n: p_hom.n(),
            })?;
            out.slice_mut(s![r, block.clone()]).assign(&local);
        } else {
            out[[r, s]] = 1.0;
        }
    }
    Ok(out)
}

/// `beta_an P_an + beta_nn lift(P_nn) + beta_aa lift(P_aa)`.
///
/// `p_an` spans the combined `[news | authors]` space and fixes the output
/// seeds; `p_nn` spans news and `p_aa` authors, and both must hold rows for
/// the seeds of their type.
pub fn mixed_propagation(
    p_an: &PropagationMatrix,
    p_nn: &PropagationMatrix,
    p_aa: &PropagationMatrix,
    w: MixedWeights,
) -> Result<PropagationMatrix> {
    let n = p_an.n();
    if p_nn.n() + p_aa.n() != n {
        return Err(Error::DimensionMismatch {
            context: "mixed propagation (news + authors)",
            expected: n,
            found: p_nn.n() + p_aa.n(),
        });
    }
    let seeds = p_an.seeds();
    let nn = lift_homogeneous(p_nn, 0, n, seeds)?;
    let aa = lift_homogeneous(p_aa, p_nn.n(), n, seeds)?;
    let mut rows = p_an.rows().clone();
    ndarray::Zip::from(&mut rows)
        .and(&nn)
        .and(&aa)
        .for_each(|x, &b, &c| *x = w.beta_an * *x + w.beta_nn * b + w.beta_aa * c);
    Ok(PropagationMatrix::from_parts(
        n,
        seeds.to_vec(),
        rows,
        p_an.alpha(),
        Scheme::Mixed,
    ))
}
