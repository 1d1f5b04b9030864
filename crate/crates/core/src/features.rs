//! Per-node feature vectors and their TSV files.
//!
//! `features.tsv`: `node_type<TAB>node_id<TAB>v1,v2,...,vd`
//!
//! Word embedding files use the same layout with a position column before
//! the vector: `node_type<TAB>node_id<TAB>position<TAB>v1,...,vd`, where
//! `position` is `word` or `sequence:word`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::io::{parse_error, read_records};
use crate::graph::HeteroGraph;
use crate::textgraph::document_embedding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeType {
    News,
    Author,
}

impl FromStr for NodeType {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "news" => Ok(NodeType::News),
            "author" => Ok(NodeType::Author),
            other => Err(format!("node type must be `news` or `author`, found `{other}`")),
        }
    }
}

impl fmt::Display for NodeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeType::News => "news",
            NodeType::Author => "author",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    dim: usize,
    rows: BTreeMap<(NodeType, String), Vec<f64>>,
}

impl FeatureTable {
    pub fn new(dim: usize) -> Self {
        FeatureTable {
            dim,
            rows: BTreeMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert(&mut self, kind: NodeType, id: impl Into<String>, vector: Vec<f64>) -> Result<()> {
        if self.rows.is_empty() && self.dim == 0 {
            self.dim = vector.len();
        }
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                context: "feature vector",
                expected: self.dim,
                found: vector.len(),
            });
        }
        self.rows.insert((kind, id.into()), vector);
        Ok(())
    }

    pub fn get(&self, kind: NodeType, id: &str) -> Option<&[f64]> {
        self.rows.get(&(kind, id.to_string())).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeType, &str, &[f64])> {
        self.rows.iter().map(|((k, id), v)| (*k, id.as_str(), v.as_slice()))
    }

    /// Feature matrix in combined-index order: news first, then authors.
    pub fn matrix_for(&self, graph: &HeteroGraph) -> Result<Array2<f64>> {
        let mut x = Array2::zeros((graph.n_nodes(), self.dim));
        let ids = graph
            .news()
            .iter()
            .map(|n| (NodeType::News, &n.id))
            .chain(graph.authors().iter().map(|a| (NodeType::Author, &a.id)));
        for (row, (kind, id)) in ids.enumerate() {
            let v = self.get(kind, id).ok_or_else(|| Error::MissingFeatures {
                kind: match kind {
                    NodeType::News => "news",
                    NodeType::Author => "author",
                },
                id: id.clone(),
            })?;
            x.row_mut(row).assign(&ndarray::ArrayView1::from(v));
        }
        Ok(x)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut table = FeatureTable::new(0);
        for (line, text) in read_records(path)? {
            let f: Vec<&str> = text.split('\t').collect();
            if f.len() != 3 {
                return Err(parse_error(path, line, format!("expected 3 fields, found {}", f.len())));
            }
            let kind = f[0].trim().parse().map_err(|e: String| parse_error(path, line, e))?;
            let vector = parse_vector(path, line, f[2])?;
            let id = f[1].trim();
            if table.get(kind, id).is_some() {
                return Err(parse_error(path, line, format!("duplicate row for {kind} `{id}`")));
            }
            table
                .insert(kind, id, vector)
                .map_err(|e| parse_error(path, line, e.to_string()))?;
        }
        Ok(table)
    }

    /// Writes rows sorted by `(node_type, node_id)`. Values use Rust's
    /// shortest round-trip formatting, so reading back is lossless.
    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (kind, id, v) in self.iter() {
            let joined: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            writeln!(w, "{kind}\t{id}\t{}", joined.join(",")).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

fn parse_vector(path: &Path, line: usize, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            let v: f64 = t
                .trim()
                .parse()
                .map_err(|_| parse_error(path, line, format!("bad float `{t}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_error(path, line, format!("non-finite value `{t}`")))
            }
        })
        .collect()
}

/// Word vectors of one document, grouped by sequence, each in word order.
pub type WordSequences = Vec<Array2<f64>>;

/// Reads a word embedding file into per-node sequences.
pub fn read_word_embeddings(path: &Path) -> Result<(usize, BTreeMap<(NodeType, String), WordSequences>)> {
    // (kind, id) -> sequence -> word position -> vector
    type Words = BTreeMap<usize, BTreeMap<usize, Vec<f64>>>;
    let mut grouped: BTreeMap<(NodeType, String), Words> = BTreeMap::new();
    let mut dim = None;
    for (line, text) in read_records(path)? {
        let f: Vec<&str> = text.split('\t').collect();
        if f.len() != 4 {
            return Err(parse_error(path, line, format!("expected 4 fields, found {}", f.len())));
        }
        let kind: NodeType = f[0].trim().parse().map_err(|e: String| parse_error(path, line, e))?;
        let (seq, word) = parse_position(f[2].trim())
            .ok_or_else(|| parse_error(path, line, format!("bad word position `{}`", f[2])))?;
        let vector = parse_vector(path, line, f[3])?;
        match dim {
            None => dim = Some(vector.len()),
            Some(d) if d != vector.len() => {
                return Err(parse_error(
                    path,
                    line,
                    format!("vector has {} values, expected {d}", vector.len()),
                ))
            }
            _ => {}
        }
        let slot = grouped
            .entry((kind, f[1].trim().to_string()))
            .or_default()
            .entry(seq)
            .or_default();
        if slot.insert(word, vector).is_some() {
            return Err(parse_error(path, line, format!("duplicate word position `{}`", f[2])));
        }
    }
    let dim = dim.unwrap_or(0);
    let docs = grouped
        .into_iter()
        .map(|(key, seqs)| {
            let seqs = seqs
                .into_values()
                .map(|words| {
                    let n = words.len();
                    let flat: Vec<f64> = words.into_values().flatten().collect();
                    Array2::from_shape_vec((n, dim), flat).expect("uniform dimension")
                })
                .collect();
            (key, seqs)
        })
        .collect();
    Ok((dim, docs))
}

fn parse_position(s: &str) -> Option<(usize, usize)> {
    match s.split_once(':') {
        Some((seq, word)) => Some((seq.parse().ok()?, word.parse().ok()?)),
        None => Some((0, s.parse().ok()?)),
    }
}

/// Pools every document of a word embedding file into one feature row.
pub fn features_from_words(path: &Path, q: usize, alpha: f64, tol: f64) -> Result<FeatureTable> {
    let (dim, docs) = read_word_embeddings(path)?;
    let mut table = FeatureTable::new(dim);
    for ((kind, id), seqs) in docs {
        let v = document_embedding(&seqs, dim, q, alpha, tol)?;
        table.insert(kind, id, v.to_vec())?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn read_write_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.tsv");
        let mut t = FeatureTable::new(3);
        t.insert(NodeType::News, "n1", vec![0.1, -2.5, 1e-17]).unwrap();
        t.insert(NodeType::Author, "a1", vec![1.0 / 3.0, 0.0, 7.0]).unwrap();
        t.write(&path).unwrap();
        assert_eq!(FeatureTable::read(&path).unwrap(), t);
    }

    #[test]
    fn rejects_bad_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("features.tsv");
        fs::write(&path, "news\tn1\t1,2\nnews\tn2\t1,2,3\n").unwrap();
        assert!(matches!(FeatureTable::read(&path), Err(Error::Parse { line: 2, .. })));
        fs::write(&path, "topic\tn1\t1,2\n").unwrap();
        assert!(matches!(FeatureTable::read(&path), Err(Error::Parse { line: 1, .. })));
        fs::write(&path, "news\tn1\t1,x\n").unwrap();
        assert!(matches!(FeatureTable::read(&path), Err(Error::Parse { line: 1, .. })));
        fs::write(&path, "news\tn1\t1,2\nnews\tn1\t1,2\n").unwrap();
        assert!(matches!(FeatureTable::read(&path), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn pools_word_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("words.tsv");
        // positions deliberately out of order; three words on a path (q = 1)
        fs::write(
            &path,
            "news\tn1\t2\t1,1\nnews\tn1\t0\t1,0\nnews\tn1\t1\t0,1\nauthor\ta1\t0:0\t2,2\n",
        )
        .unwrap();
        let t = features_from_words(&path, 1, 0.5, 1e-13).unwrap();
        assert_eq!(t.dim(), 2);
        let n1 = t.get(NodeType::News, "n1").unwrap();
        // weights 5/18, 8/18, 5/18 over rows [1,0], [0,1], [1,1]
        assert!((n1[0] - 10.0 / 18.0).abs() < 1e-12);
        assert!((n1[1] - 13.0 / 18.0).abs() < 1e-12);
        let a1 = t.get(NodeType::Author, "a1").unwrap();
        assert!((a1[0] - 2.0).abs() < 1e-9);
    }
}
