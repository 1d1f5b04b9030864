use std::borrow::Cow;

use super::{
    mixed_propagation, propagation_for_seeds, two_hop_transition, MixedWeights,
    PropagationMatrix, Scheme, UpdateStats,
};
use crate::error::Result;
use crate::graph::{EdgeSets, Relation, UpdateOp};
use crate::sparse::StochasticMatrix;

struct Component {
    m: StochasticMatrix,
    p: PropagationMatrix,
}

impl Component {
    fn build(m: StochasticMatrix, seeds: &[usize], alpha: f64, tol: f64, scheme: Scheme) -> Result<Self> {
        let p = propagation_for_seeds(&m, seeds, alpha, tol)?.with_scheme(scheme);
        Ok(Component { m, p })
    }

    fn update(&mut self, m_new: StochasticMatrix, tol: f64) -> Result<UpdateStats> {
        let stats = self.p.pushout(&self.m, &m_new, tol)?;
        self.m = m_new;
        Ok(stats)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateOutcome {
    /// False when the update left the edge set as it was.
    pub changed: bool,
    pub stats: UpdateStats,
}

/// A propagation matrix kept current under edge insertions and deletions.
///
/// * `OneHop` walks the union of all three relations over the combined space.
/// * `TwoHop` walks the square of the authorship transition matrix.
/// * `Mixed` combines the `TwoHop` matrix with 1-hop walks on the news-news
///   and author-author relations.
pub struct DynamicPropagation {
    edges: EdgeSets,
    scheme: Scheme,
    alpha: f64,
    tol: f64,
    weights: MixedWeights,
    seeds: Vec<usize>,
    main: Component,
    nn: Option<Component>,
    aa: Option<Component>,
}

fn main_transition(edges: &EdgeSets, scheme: Scheme) -> Result<StochasticMatrix> {
    match scheme {
        Scheme::OneHop => edges.combined_adjacency().column_normalize(),
        Scheme::TwoHop | Scheme::Mixed => {
            two_hop_transition(&edges.adjacency(Relation::An), edges.n_news())
        }
    }
}

fn homogeneous_transition(edges: &EdgeSets, relation: Relation) -> Result<StochasticMatrix> {
    edges.adjacency(relation).column_normalize()
}

impl DynamicPropagation {
    /// Computes the initial matrix for `seeds` (combined-space indices).
    pub fn new(
        edges: EdgeSets,
        scheme: Scheme,
        alpha: f64,
        tol: f64,
        weights: MixedWeights,
        seeds: &[usize],
    ) -> Result<Self> {
        let seeds = super::normalize_seeds(edges.n_nodes(), seeds)?;
        let main = Component::build(main_transition(&edges, scheme)?, &seeds, alpha, tol, scheme)?;
        let (nn, aa) = if scheme == Scheme::Mixed {
            let n_news = edges.n_news();
            let news_seeds: Vec<usize> = seeds.iter().copied().filter(|&s| s < n_news).collect();
            let author_seeds: Vec<usize> =
                seeds.iter().filter(|&&s| s >= n_news).map(|&s| s - n_news).collect();
            let nn = Component::build(
                homogeneous_transition(&edges, Relation::Nn)?,
                &news_seeds,
                alpha,
                tol,
                Scheme::OneHop,
            )?;
            let aa = Component::build(
                homogeneous_transition(&edges, Relation::Aa)?,
                &author_seeds,
                alpha,
                tol,
                Scheme::OneHop,
            )?;
            (Some(nn), Some(aa))
        } else {
            (None, None)
        };
        Ok(DynamicPropagation {
            edges,
            scheme,
            alpha,
            tol,
            weights,
            seeds,
            main,
            nn,
            aa,
        })
    }

    pub fn edges(&self) -> &EdgeSets {
        &self.edges
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn seeds(&self) -> &[usize] {
        &self.seeds
    }

    /// Transition matrix driving the authorship (or, for 1-hop, combined) walk.
    pub fn main_transition(&self) -> &StochasticMatrix {
        &self.main.m
    }

    /// The current propagation matrix over the combined space.
    pub fn propagation(&self) -> Result<Cow<'_, PropagationMatrix>> {
        match (&self.nn, &self.aa) {
            (Some(nn), Some(aa)) => Ok(Cow::Owned(mixed_propagation(
                &self.main.p,
                &nn.p,
                &aa.p,
                self.weights,
            )?)),
            _ => Ok(Cow::Borrowed(&self.main.p)),
        }
    }

    /// Applies one canonical edge update and pushes out every affected
    /// component.
    pub fn apply(&mut self, op: UpdateOp, relation: Relation, edge: (usize, usize)) -> Result<UpdateOutcome> {
        if !self.edges.apply(op, relation, edge) {
            return Ok(UpdateOutcome::default());
        }
        let mut outcome = UpdateOutcome {
            changed: true,
            stats: UpdateStats::default(),
        };
        let (component, m_new) = match (self.scheme, relation) {
            (Scheme::OneHop, _) | (_, Relation::An) => {
                (&mut self.main, main_transition(&self.edges, self.scheme)?)
            }
            (Scheme::TwoHop, _) => return Ok(outcome),
            (Scheme::Mixed, Relation::Nn) => (
                self.nn.as_mut().expect("mixed scheme has nn"),
                homogeneous_transition(&self.edges, Relation::Nn)?,
            ),
            (Scheme::Mixed, Relation::Aa) => (
                self.aa.as_mut().expect("mixed scheme has aa"),
                homogeneous_transition(&self.edges, Relation::Aa)?,
            ),
        };
        outcome.stats = component.update(m_new, self.tol)?;
        Ok(outcome)
    }

    /// Propagation matrix computed from scratch on the current edges.
    pub fn recompute(&self) -> Result<PropagationMatrix> {
        let fresh = DynamicPropagation::new(
            self.edges.clone(),
            self.scheme,
            self.alpha,
            self.tol,
            self.weights,
            &self.seeds,
        )?;
        Ok(fresh.propagation()?.into_owned())
    }
}
