//! The news/author heterogeneous information network.
//!
//! News, authors, subjects and sources are stored as ordered record lists.
//! Only news and authors take part in propagation; subjects and sources are
//! attributes that induce the news-news and author-author relations.
//!
//! In the combined index space news occupy `[0, |N|)` and authors
//! `[|N|, |N| + |A|)`.

pub(crate) mod io;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub use io::{load_graph, read_graph_json, read_updates, write_graph_json, write_records, GraphPaths};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Fake = 0,
    Real = 1,
}

impl Label {
    pub fn as_f64(self) -> f64 {
        match self {
            Label::Fake => 0.0,
            Label::Real => 1.0,
        }
    }

    pub fn from_bool(real: bool) -> Self {
        if real {
            Label::Real
        } else {
            Label::Fake
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewsRecord {
    pub id: String,
    pub label: Option<Label>,
    pub subject_ids: Vec<String>,
    pub author_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorRecord {
    pub id: String,
    pub source_id: Option<String>,
    /// Mean label of the author's news, in `[0, 1]`.
    pub derived_label: Option<f64>,
}

/// A subject or a source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedRecord {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    /// authorship, author <-> news
    An,
    /// shared source, author <-> author
    Aa,
    /// shared subject, news <-> news
    Nn,
}

impl FromStr for Relation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "an" => Ok(Relation::An),
            "aa" => Ok(Relation::Aa),
            "nn" => Ok(Relation::Nn),
            other => Err(Error::UnknownRelation(other.to_string())),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::An => "an",
            Relation::Aa => "aa",
            Relation::Nn => "nn",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpdateOp {
    Insert,
    Delete,
}

/// One line of an updates file, ids not yet resolved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeUpdate {
    pub op: UpdateOp,
    pub relation: Relation,
    pub src_id: String,
    pub dst_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub news: usize,
    pub authors: usize,
    pub subjects: usize,
    pub sources: usize,
    pub news_author_links: usize,
    pub news_news_links: usize,
    pub author_author_links: usize,
}

impl fmt::Display for GraphStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "news={}", self.news)?;
        writeln!(f, "authors={}", self.authors)?;
        writeln!(f, "subjects={}", self.subjects)?;
        writeln!(f, "sources={}", self.sources)?;
        writeln!(f, "news_author_links={}", self.news_author_links)?;
        writeln!(f, "news_news_links={}", self.news_news_links)?;
        write!(f, "author_author_links={}", self.author_author_links)
    }
}

/// Edge lists of the three relations over local node indices.
///
/// `an` holds `(news, author)` pairs; `aa` and `nn` hold `(i, j)` with
/// `i < j`, each undirected edge once. All lists are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeSets {
    n_news: usize,
    n_authors: usize,
    an: Vec<(usize, usize)>,
    aa: Vec<(usize, usize)>,
    nn: Vec<(usize, usize)>,
}

impl EdgeSets {
    pub fn empty(n_news: usize, n_authors: usize) -> Self {
        EdgeSets {
            n_news,
            n_authors,
            ..Default::default()
        }
    }

    /// Validates endpoints; homogeneous pairs are canonicalized to `i < j`
    /// and all lists deduplicated.
    pub fn from_lists(
        n_news: usize,
        n_authors: usize,
        an: Vec<(usize, usize)>,
        aa: Vec<(usize, usize)>,
        nn: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let bad = |rel: Relation, (i, j): (usize, usize)| {
            Error::InvalidParameter(format!("invalid {rel} edge ({i}, {j})"))
        };
        if let Some(&e) = an.iter().find(|&&(i, a)| i >= n_news || a >= n_authors) {
            return Err(bad(Relation::An, e));
        }
        let canon = |rel: Relation, n: usize, list: Vec<(usize, usize)>| {
            list.into_iter()
                .map(|(i, j)| {
                    if i == j || i >= n || j >= n {
                        Err(bad(rel, (i, j)))
                    } else {
                        Ok((i.min(j), i.max(j)))
                    }
                })
                .collect::<Result<Vec<_>>>()
        };
        Ok(EdgeSets {
            n_news,
            n_authors,
            an: sorted_unique(an),
            aa: sorted_unique(canon(Relation::Aa, n_authors, aa)?),
            nn: sorted_unique(canon(Relation::Nn, n_news, nn)?),
        })
    }

    pub fn n_news(&self) -> usize {
        self.n_news
    }

    pub fn n_authors(&self) -> usize {
        self.n_authors
    }

    pub fn n_nodes(&self) -> usize {
        self.n_news + self.n_authors
    }

    pub fn get(&self, relation: Relation) -> &[(usize, usize)] {
        match relation {
            Relation::An => &self.an,
            Relation::Aa => &self.aa,
            Relation::Nn => &self.nn,
        }
    }

    pub fn contains(&self, relation: Relation, edge: (usize, usize)) -> bool {
        self.get(relation).binary_search(&edge).is_ok()
    }

    /// Inserts or deletes a canonical edge; returns whether the set changed.
    pub fn apply(&mut self, op: UpdateOp, relation: Relation, edge: (usize, usize)) -> bool {
        let (rows, cols) = match relation {
            Relation::An => (self.n_news, self.n_authors),
            Relation::Aa => (self.n_authors, self.n_authors),
            Relation::Nn => (self.n_news, self.n_news),
        };
        assert!(
            edge.0 < rows && edge.1 < cols && (relation == Relation::An || edge.0 < edge.1),
            "non-canonical {relation} edge {edge:?}"
        );
        let edges = match relation {
            Relation::An => &mut self.an,
            Relation::Aa => &mut self.aa,
            Relation::Nn => &mut self.nn,
        };
        match (op, edges.binary_search(&edge)) {
            (UpdateOp::Insert, Err(pos)) => {
                edges.insert(pos, edge);
                true
            }
            (UpdateOp::Delete, Ok(pos)) => {
                edges.remove(pos);
                true
            }
            _ => false,
        }
    }

    /// 0/1 adjacency of one relation.
    ///
    /// `aa` and `nn` are square over their own node type. `an` is square over
    /// the combined `[news | authors]` space with only off-diagonal blocks.
    pub fn adjacency(&self, relation: Relation) -> SparseMatrix {
        let (n, offset) = match relation {
            Relation::An => (self.n_nodes(), self.n_news),
            Relation::Aa => (self.n_authors, 0),
            Relation::Nn => (self.n_news, 0),
        };
        symmetric_01(n, self.get(relation).iter().map(|&(i, j)| (i, j + offset)))
    }

    /// Union of all three relations over the combined index space.
    pub fn combined_adjacency(&self) -> SparseMatrix {
        let off = self.n_news;
        let an = self.an.iter().map(|&(i, a)| (i, off + a));
        let aa = self.aa.iter().map(|&(i, j)| (off + i, off + j));
        let nn = self.nn.iter().copied();
        symmetric_01(self.n_nodes(), an.chain(aa).chain(nn))
    }
}

fn symmetric_01(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> SparseMatrix {
    SparseMatrix::from_coordinates(n, n, edges.flat_map(|(i, j)| [(i, j, 1.0), (j, i, 1.0)]))
        .expect("edge endpoints are validated on insertion")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct HeteroGraph {
    news: Vec<NewsRecord>,
    authors: Vec<AuthorRecord>,
    subjects: Vec<NamedRecord>,
    sources: Vec<NamedRecord>,
    edges: EdgeSets,
    news_index: HashMap<String, usize>,
    author_index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct GraphRepr {
    news: Vec<NewsRecord>,
    authors: Vec<AuthorRecord>,
    subjects: Vec<NamedRecord>,
    sources: Vec<NamedRecord>,
    edges_an: Vec<(usize, usize)>,
    edges_aa: Vec<(usize, usize)>,
    edges_nn: Vec<(usize, usize)>,
}

impl TryFrom<GraphRepr> for HeteroGraph {
    type Error = Error;

    fn try_from(r: GraphRepr) -> Result<Self> {
        let mut g = HeteroGraph::new(r.news, r.authors, r.subjects, r.sources)?;
        g.edges = EdgeSets::from_lists(
            g.news.len(),
            g.authors.len(),
            r.edges_an,
            r.edges_aa,
            r.edges_nn,
        )?;
        Ok(g)
    }
}

impl From<HeteroGraph> for GraphRepr {
    fn from(g: HeteroGraph) -> Self {
        GraphRepr {
            news: g.news,
            authors: g.authors,
            subjects: g.subjects,
            sources: g.sources,
            edges_an: g.edges.an,
            edges_aa: g.edges.aa,
            edges_nn: g.edges.nn,
        }
    }
}

fn sorted_unique(mut v: Vec<(usize, usize)>) -> Vec<(usize, usize)> {
    v.sort_unstable();
    v.dedup();
    v
}

fn unique_index<'a>(
    kind: &'static str,
    ids: impl Iterator<Item = &'a str>,
) -> Result<HashMap<String, usize>> {
    let mut index = HashMap::new();
    for (i, id) in ids.enumerate() {
        if index.insert(id.to_string(), i).is_some() {
            return Err(Error::InvalidParameter(format!("duplicate {kind} id `{id}`")));
        }
    }
    Ok(index)
}

impl HeteroGraph {
    /// Assembles a graph from records and checks referential integrity.
    /// Edge sets start empty; see [`HeteroGraph::build_mappings`].
    pub fn new(
        news: Vec<NewsRecord>,
        authors: Vec<AuthorRecord>,
        subjects: Vec<NamedRecord>,
        sources: Vec<NamedRecord>,
    ) -> Result<Self> {
        let news_index = unique_index("news", news.iter().map(|r| r.id.as_str()))?;
        let author_index = unique_index("author", authors.iter().map(|r| r.id.as_str()))?;
        let subject_index = unique_index("subject", subjects.iter().map(|r| r.id.as_str()))?;
        let source_index = unique_index("source", sources.iter().map(|r| r.id.as_str()))?;

        for a in &authors {
            if let Some(src) = &a.source_id {
                if !source_index.contains_key(src) {
                    return Err(Error::UnknownNode {
                        kind: "source",
                        id: src.clone(),
                    });
                }
            }
            if let Some(l) = a.derived_label {
                if !(0.0..=1.0).contains(&l) {
                    return Err(Error::InvalidParameter(format!(
                        "author `{}` has derived label {l} outside [0, 1]",
                        a.id
                    )));
                }
            }
        }
        for n in &news {
            if !author_index.contains_key(&n.author_id) {
                return Err(Error::UnknownNode {
                    kind: "author",
                    id: n.author_id.clone(),
                });
            }
            if let Some(s) = n.subject_ids.iter().find(|s| !subject_index.contains_key(*s)) {
                return Err(Error::UnknownNode {
                    kind: "subject",
                    id: s.clone(),
                });
            }
        }
        Ok(HeteroGraph {
            edges: EdgeSets::empty(news.len(), authors.len()),
            news,
            authors,
            subjects,
            sources,
            news_index,
            author_index,
        })
    }

    pub fn news(&self) -> &[NewsRecord] {
        &self.news
    }

    pub fn authors(&self) -> &[AuthorRecord] {
        &self.authors
    }

    pub fn subjects(&self) -> &[NamedRecord] {
        &self.subjects
    }

    pub fn sources(&self) -> &[NamedRecord] {
        &self.sources
    }

    pub fn edges(&self, relation: Relation) -> &[(usize, usize)] {
        self.edges.get(relation)
    }

    pub fn edge_sets(&self) -> &EdgeSets {
        &self.edges
    }

    pub fn n_news(&self) -> usize {
        self.news.len()
    }

    pub fn n_authors(&self) -> usize {
        self.authors.len()
    }

    /// Size of the combined news + author index space.
    pub fn n_nodes(&self) -> usize {
        self.news.len() + self.authors.len()
    }

    pub fn news_index(&self, id: &str) -> Option<usize> {
        self.news_index.get(id).copied()
    }

    pub fn author_index(&self, id: &str) -> Option<usize> {
        self.author_index.get(id).copied()
    }

    /// Combined-space index of author `a`.
    pub fn author_node(&self, a: usize) -> usize {
        self.news.len() + a
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            news: self.news.len(),
            authors: self.authors.len(),
            subjects: self.subjects.len(),
            sources: self.sources.len(),
            news_author_links: self.edges.an.len(),
            news_news_links: self.edges.nn.len(),
            author_author_links: self.edges.aa.len(),
        }
    }

    /// Derives the three relations from the records.
    ///
    /// Authorship comes from each news' author; authors sharing a source are
    /// linked pairwise (authors without a source stay unlinked); news sharing
    /// at least one subject are linked once.
    pub fn build_mappings(mut self) -> Self {
        let mut an: Vec<(usize, usize)> = self
            .news
            .iter()
            .enumerate()
            .map(|(i, n)| (i, self.author_index[&n.author_id]))
            .collect();
        an.sort_unstable();
        self.edges.an = an;

        let mut by_source: HashMap<&str, Vec<usize>> = HashMap::new();
        for (a, rec) in self.authors.iter().enumerate() {
            if let Some(src) = &rec.source_id {
                by_source.entry(src.as_str()).or_default().push(a);
            }
        }
        self.edges.aa = clique_pairs(by_source.values());

        let mut by_subject: HashMap<&str, Vec<usize>> = HashMap::new();
        for (i, rec) in self.news.iter().enumerate() {
            for s in &rec.subject_ids {
                let members = by_subject.entry(s.as_str()).or_default();
                if members.last() != Some(&i) {
                    members.push(i);
                }
            }
        }
        self.edges.nn = clique_pairs(by_subject.values());
        self
    }

    /// Mean news label per author, counting only news accepted by `include`.
    pub fn author_label_means(&self, include: impl Fn(usize) -> bool) -> Vec<Option<f64>> {
        let mut sums = vec![(0.0f64, 0usize); self.authors.len()];
        for (i, n) in self.news.iter().enumerate() {
            if let (Some(label), true) = (n.label, include(i)) {
                let slot = &mut sums[self.author_index[&n.author_id]];
                slot.0 += label.as_f64();
                slot.1 += 1;
            }
        }
        sums.into_iter()
            .map(|(s, c)| (c > 0).then(|| s / c as f64))
            .collect()
    }

    /// Sets every author's label to the mean of its labeled news.
    pub fn derive_author_labels(mut self) -> Self {
        let means = self.author_label_means(|_| true);
        for (author, mean) in self.authors.iter_mut().zip(means) {
            author.derived_label = mean;
        }
        self
    }

    /// 0/1 adjacency of one relation; see [`EdgeSets::adjacency`].
    pub fn relation_adjacency(&self, relation: Relation) -> SparseMatrix {
        self.edges.adjacency(relation)
    }

    /// Resolves an update's ids to local indices of the relation's node types.
    ///
    /// For `an` the source is the author and the destination the news item;
    /// the result is ordered `(news, author)`.
    pub fn resolve(&self, update: &EdgeUpdate) -> Result<(usize, usize)> {
        let news = |id: &str| {
            self.news_index(id).ok_or_else(|| Error::UnknownNode {
                kind: "news",
                id: id.to_string(),
            })
        };
        let author = |id: &str| {
            self.author_index(id).ok_or_else(|| Error::UnknownNode {
                kind: "author",
                id: id.to_string(),
            })
        };
        let (i, j) = match update.relation {
            Relation::An => return Ok((news(&update.dst_id)?, author(&update.src_id)?)),
            Relation::Aa => (author(&update.src_id)?, author(&update.dst_id)?),
            Relation::Nn => (news(&update.src_id)?, news(&update.dst_id)?),
        };
        if i == j {
            return Err(Error::InvalidParameter(format!(
                "self-loop `{}` in {} relation",
                update.src_id, update.relation
            )));
        }
        Ok((i.min(j), i.max(j)))
    }

    /// Applies one edge insertion or deletion. Returns whether the edge set
    /// changed (inserting a present edge or deleting an absent one is a no-op).
    pub fn apply_update(&mut self, update: &EdgeUpdate) -> Result<bool> {
        let edge = self.resolve(update)?;
        Ok(self.edges.apply(update.op, update.relation, edge))
    }
}

fn clique_pairs<'a>(groups: impl Iterator<Item = &'a Vec<usize>>) -> Vec<(usize, usize)> {
    let mut pairs = BTreeSet::new();
    for members in groups {
        for (k, &i) in members.iter().enumerate() {
            for &j in &members[k + 1..] {
                pairs.insert((i.min(j), i.max(j)));
            }
        }
    }
    pairs.into_iter().collect()
}
