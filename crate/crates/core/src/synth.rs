//! Synthetic corpora with a planted two-class structure, and random edge
//! updates against them.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureTable, NodeType};
use crate::graph::{AuthorRecord, EdgeUpdate, HeteroGraph, Label, NamedRecord, NewsRecord, Relation, UpdateOp};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub news: usize,
    pub authors: usize,
    pub subjects: usize,
    pub sources: usize,
    pub dim: usize,
    /// Distance of each class centre from the origin along every axis.
    pub separation: f64,
    /// Half-width of the uniform noise added to every coordinate.
    pub noise: f64,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            news: 200,
            authors: 40,
            subjects: 2,
            sources: 2,
            dim: 16,
            separation: 1.0,
            noise: 1.5,
        }
    }
}

pub struct Corpus {
    pub graph: HeteroGraph,
    pub features: FeatureTable,
}

/// Authors alternate between the two classes. Each news item inherits its
/// author's class as label; subjects and sources are handed out so that
/// consecutive ids alternate classes too, which makes every shared-subject
/// and shared-source link join nodes of the same class when there are at
/// least two of each. Features are a class centre `±separation` plus
/// uniform noise.
pub fn generate(spec: &CorpusSpec, rng: &mut ChaCha8Rng) -> Result<Corpus> {
    if spec.authors == 0 && spec.news > 0 {
        return Err(Error::InvalidParameter("news need at least one author".into()));
    }
    if spec.dim == 0 {
        return Err(Error::InvalidParameter("feature dimension must be positive".into()));
    }
    let class_of_author = |a: usize| a % 2 == 0;
    let pick = |count: usize, real: bool, i: usize| -> Option<usize> {
        match count {
            0 => None,
            1 => Some(0),
            _ => {
                let same_class: Vec<usize> = (0..count).filter(|k| (k % 2 == 0) == real).collect();
                Some(same_class[i % same_class.len()])
            }
        }
    };

    let subjects: Vec<NamedRecord> = (0..spec.subjects)
        .map(|k| NamedRecord { id: format!("s{k}"), name: format!("subject {k}") })
        .collect();
    let sources: Vec<NamedRecord> = (0..spec.sources)
        .map(|k| NamedRecord { id: format!("src{k}"), name: format!("source {k}") })
        .collect();
    let authors: Vec<AuthorRecord> = (0..spec.authors)
        .map(|a| AuthorRecord {
            id: format!("a{a}"),
            source_id: pick(spec.sources, class_of_author(a), a / 2).map(|k| sources[k].id.clone()),
            derived_label: None,
        })
        .collect();
    let news: Vec<NewsRecord> = (0..spec.news)
        .map(|i| {
            let a = i % spec.authors;
            let real = class_of_author(a);
            NewsRecord {
                id: format!("n{i}"),
                label: Some(Label::from_bool(real)),
                subject_ids: pick(spec.subjects, real, i / 2)
                    .map(|k| vec![subjects[k].id.clone()])
                    .unwrap_or_default(),
                author_id: authors[a].id.clone(),
            }
        })
        .collect();

    let mut features = FeatureTable::new(spec.dim);
    let vector = |real: bool, rng: &mut ChaCha8Rng| -> Vec<f64> {
        let centre = if real { spec.separation } else { -spec.separation };
        (0..spec.dim).map(|_| centre + rng.random_range(-spec.noise..=spec.noise)).collect()
    };
    for n in &news {
        let v = vector(n.label == Some(Label::Real), rng);
        features.insert(NodeType::News, n.id.clone(), v)?;
    }
    for (a, rec) in authors.iter().enumerate() {
        let v = vector(class_of_author(a), rng);
        features.insert(NodeType::Author, rec.id.clone(), v)?;
    }

    let graph = HeteroGraph::new(news, authors, subjects, sources)?
        .build_mappings()
        .derive_author_labels();
    Ok(Corpus { graph, features })
}

/// `count` random single-edge updates, each an insertion of an absent edge
/// or a deletion of a present one with equal odds. They are drawn in
/// sequence against a copy of `graph`, so every update changes the edge set.
pub fn random_updates(graph: &HeteroGraph, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<EdgeUpdate>> {
    let mut g = graph.clone();
    let mut out = Vec::with_capacity(count);
    let relations = [Relation::An, Relation::Nn, Relation::Aa];
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 1000 * (count + 1) {
            return Err(Error::InvalidParameter(format!(
                "could not draw {count} effective updates on this graph"
            )));
        }
        let relation = *relations.choose(rng).expect("non-empty");
        let insert = rng.random_bool(0.5);
        let update = if insert {
            let (src, dst) = match relation {
                Relation::An if g.n_news() > 0 && g.n_authors() > 0 => (
                    g.authors()[rng.random_range(0..g.n_authors())].id.clone(),
                    g.news()[rng.random_range(0..g.n_news())].id.clone(),
                ),
                Relation::Nn if g.n_news() > 1 => {
                    let i = rng.random_range(0..g.n_news());
                    let j = rng.random_range(0..g.n_news());
                    (g.news()[i].id.clone(), g.news()[j].id.clone())
                }
                Relation::Aa if g.n_authors() > 1 => {
                    let i = rng.random_range(0..g.n_authors());
                    let j = rng.random_range(0..g.n_authors());
                    (g.authors()[i].id.clone(), g.authors()[j].id.clone())
                }
                _ => continue,
            };
            EdgeUpdate { op: UpdateOp::Insert, relation, src_id: src, dst_id: dst }
        } else {
            let Some(&(i, j)) = g.edges(relation).choose(rng) else {
                continue;
            };
            let (src, dst) = match relation {
                Relation::An => (g.authors()[j].id.clone(), g.news()[i].id.clone()),
                Relation::Nn => (g.news()[i].id.clone(), g.news()[j].id.clone()),
                Relation::Aa => (g.authors()[i].id.clone(), g.authors()[j].id.clone()),
            };
            EdgeUpdate { op: UpdateOp::Delete, relation, src_id: src, dst_id: dst }
        };
        if update.src_id == update.dst_id {
            continue;
        }
        if g.apply_update(&update)? {
            out.push(update);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{seeded_rng, RngStream};

    #[test]
    fn default_corpus_shape() {
        let c = generate(&CorpusSpec::default(), &mut seeded_rng(1, RngStream::Data)).unwrap();
        let s = c.graph.stats();
        assert_eq!((s.news, s.authors, s.subjects, s.sources), (200, 40, 2, 2));
        assert_eq!(s.news_author_links, 200);
        assert_eq!(c.features.len(), 240);
        let real = c.graph.news().iter().filter(|n| n.label == Some(Label::Real)).count();
        assert_eq!(real, 100);
        // every link joins two nodes of the same class
        let label = |i: usize| c.graph.news()[i].label;
        assert!(c.graph.edges(Relation::Nn).iter().all(|&(i, j)| label(i) == label(j)));
        let author_label = |a: usize| c.graph.authors()[a].derived_label;
        assert!(c.graph.edges(Relation::Aa).iter().all(|&(i, j)| author_label(i) == author_label(j)));
        assert!(c.graph.authors().iter().all(|a| matches!(a.derived_label, Some(l) if l == 0.0 || l == 1.0)));
    }

    #[test]
    fn generation_is_seeded() {
        let spec = CorpusSpec { news: 20, authors: 4, ..Default::default() };
        let a = generate(&spec, &mut seeded_rng(3, RngStream::Data)).unwrap();
        let b = generate(&spec, &mut seeded_rng(3, RngStream::Data)).unwrap();
        assert_eq!(a.features, b.features);
        let c = generate(&spec, &mut seeded_rng(4, RngStream::Data)).unwrap();
        assert_ne!(a.features, c.features);
    }

    #[test]
    fn updates_each_change_the_graph() {
        let spec = CorpusSpec { news: 30, authors: 6, ..Default::default() };
        let corpus = generate(&spec, &mut seeded_rng(0, RngStream::Data)).unwrap();
        let ups = random_updates(&corpus.graph, 25, &mut seeded_rng(0, RngStream::Split)).unwrap();
        assert_eq!(ups.len(), 25);
        let mut g = corpus.graph.clone();
        for u in &ups {
            assert!(g.apply_update(u).unwrap());
        }
    }
}
