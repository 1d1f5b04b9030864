//! Tab-separated record files and the JSON graph snapshot.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{
    AuthorRecord, EdgeUpdate, HeteroGraph, Label, NamedRecord, NewsRecord, UpdateOp,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphPaths {
    pub news: PathBuf,
    pub authors: PathBuf,
    pub subjects: PathBuf,
    pub sources: PathBuf,
}

impl GraphPaths {
    /// `news.tsv`, `authors.tsv`, `subjects.tsv`, `sources.tsv` inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        GraphPaths {
            news: dir.join("news.tsv"),
            authors: dir.join("authors.tsv"),
            subjects: dir.join("subjects.tsv"),
            sources: dir.join("sources.tsv"),
        }
    }
}

/// Lines of a TSV file with their 1-based line numbers; blank and `#` lines
/// are skipped.
pub(crate) fn read_records(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r').to_string()))
        .collect())
}

pub(crate) fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn fields<'a>(path: &Path, line: usize, text: &'a str, expected: &[usize]) -> Result<Vec<&'a str>> {
    let parts: Vec<&str> = text.split('\t').collect();
    if !expected.contains(&parts.len()) {
        return Err(parse_error(
            path,
            line,
            format!("expected {:?} tab-separated fields, found {}", expected, parts.len()),
        ));
    }
    Ok(parts)
}

fn non_empty_id<'a>(path: &Path, line: usize, id: &'a str, what: &str) -> Result<&'a str> {
    let id = id.trim();
    if id.is_empty() {
        return Err(parse_error(path, line, format!("empty {what} id")));
    }
    Ok(id)
}

/// Index of ids with their defining line, rejecting duplicates.
fn index_ids<'a>(
    path: &Path,
    rows: impl Iterator<Item = (usize, &'a str)>,
) -> Result<HashMap<&'a str, usize>> {
    let mut seen = HashMap::new();
    for (line, id) in rows {
        if let Some(first) = seen.insert(id, line) {
            return Err(parse_error(
                path,
                line,
                format!("duplicate id `{id}` (first defined on line {first})"),
            ));
        }
    }
    Ok(seen)
}

fn load_named(path: &Path) -> Result<Vec<NamedRecord>> {
    let mut out = Vec::new();
    let mut lines = Vec::new();
    for (line, text) in read_records(path)? {
        let f = fields(path, line, &text, &[2])?;
        out.push(NamedRecord {
            id: non_empty_id(path, line, f[0], "record")?.to_string(),
            name: f[1].to_string(),
        });
        lines.push(line);
    }
    index_ids(path, lines.into_iter().zip(out.iter().map(|r| r.id.as_str())))?;
    Ok(out)
}

/// Reads the four record files into a graph with mappings not yet built.
///
/// News rows with an empty label field are dropped. Every other defect,
/// including references to ids missing from another file, is an error that
/// names the file and line.
pub fn load_graph(paths: &GraphPaths) -> Result<HeteroGraph> {
    let subjects = load_named(&paths.subjects)?;
    let sources = load_named(&paths.sources)?;
    let subject_ids: HashMap<&str, ()> = subjects.iter().map(|r| (r.id.as_str(), ())).collect();
    let source_ids: HashMap<&str, ()> = sources.iter().map(|r| (r.id.as_str(), ())).collect();

    let author_rows = read_records(&paths.authors)?;
    let mut authors = Vec::with_capacity(author_rows.len());
    let mut author_lines = Vec::with_capacity(author_rows.len());
    for (line, text) in &author_rows {
        let path = paths.authors.as_path();
        let f = fields(path, *line, text, &[1, 2])?;
        let id = non_empty_id(path, *line, f[0], "author")?;
        let source = f.get(1).map(|s| s.trim()).filter(|s| !s.is_empty());
        if let Some(src) = source {
            if !source_ids.contains_key(src) {
                return Err(Error::UnknownId {
                    path: path.to_path_buf(),
                    line: *line,
                    kind: "source",
                    id: src.to_string(),
                });
            }
        }
        authors.push(AuthorRecord {
            id: id.to_string(),
            source_id: source.map(str::to_string),
            derived_label: None,
        });
        author_lines.push(*line);
    }
    let author_ids = index_ids(
        &paths.authors,
        author_lines.iter().copied().zip(authors.iter().map(|a| a.id.as_str())),
    )?;

    let news_rows = read_records(&paths.news)?;
    let mut news = Vec::with_capacity(news_rows.len());
    let mut news_lines = Vec::with_capacity(news_rows.len());
    for (line, text) in &news_rows {
        let path = paths.news.as_path();
        let f = fields(path, *line, text, &[4])?;
        let id = non_empty_id(path, *line, f[0], "news")?;
        let label = match f[1].trim() {
            "" => continue,
            "0" => Label::Fake,
            "1" => Label::Real,
            other => {
                return Err(parse_error(
                    path,
                    *line,
                    format!("label must be 0 or 1, found `{other}`"),
                ))
            }
        };
        let subject_list: Vec<String> = f[2]
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        for s in &subject_list {
            if !subject_ids.contains_key(s.as_str()) {
                return Err(Error::UnknownId {
                    path: path.to_path_buf(),
                    line: *line,
                    kind: "subject",
                    id: s.clone(),
                });
            }
        }
        let author = non_empty_id(path, *line, f[3], "author")?;
        if !author_ids.contains_key(author) {
            return Err(Error::UnknownId {
                path: path.to_path_buf(),
                line: *line,
                kind: "author",
                id: author.to_string(),
            });
        }
        news.push(NewsRecord {
            id: id.to_string(),
            label: Some(label),
            subject_ids: subject_list,
            author_id: author.to_string(),
        });
        news_lines.push(*line);
    }
    index_ids(
        &paths.news,
        news_lines.iter().copied().zip(news.iter().map(|n| n.id.as_str())),
    )?;

    HeteroGraph::new(news, authors, subjects, sources)
}

/// Writes the four record files in the grammar read by [`load_graph`].
pub fn write_records(graph: &HeteroGraph, paths: &GraphPaths) -> Result<()> {
    let write = |path: &Path, lines: Vec<String>| -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for l in lines {
            writeln!(w, "{l}").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    };
    let named = |rs: &[NamedRecord]| rs.iter().map(|r| format!("{}\t{}", r.id, r.name)).collect();
    write(&paths.subjects, named(graph.subjects()))?;
    write(&paths.sources, named(graph.sources()))?;
    write(
        &paths.authors,
        graph
            .authors()
            .iter()
            .map(|a| format!("{}\t{}", a.id, a.source_id.as_deref().unwrap_or("")))
            .collect(),
    )?;
    write(
        &paths.news,
        graph
            .news()
            .iter()
            .map(|n| {
                let label = match n.label {
                    Some(Label::Real) => "1",
                    Some(Label::Fake) => "0",
                    None => "",
                };
                format!("{}\t{label}\t{}\t{}", n.id, n.subject_ids.join(","), n.author_id)
            })
            .collect(),
    )
}

pub fn write_graph_json(graph: &HeteroGraph, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, graph).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_graph_json(path: &Path) -> Result<HeteroGraph> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Parses `op<TAB>relation<TAB>src_id<TAB>dst_id` lines, `op` being `+` or `-`.
pub fn read_updates(path: &Path) -> Result<Vec<EdgeUpdate>> {
    let mut out = Vec::new();
    for (line, text) in read_records(path)? {
        let f = fields(path, line, &text, &[4])?;
        let op = match f[0].trim() {
            "+" => UpdateOp::Insert,
            "-" => UpdateOp::Delete,
            other => {
                return Err(parse_error(
                    path,
                    line,
                    format!("op must be `+` or `-`, found `{other}`"),
                ))
            }
        };
        let relation = f[1]
            .trim()
            .parse()
            .map_err(|e: Error| parse_error(path, line, e.to_string()))?;
        out.push(EdgeUpdate {
            op,
            relation,
            src_id: non_empty_id(path, line, f[2], "source node")?.to_string(),
            dst_id: non_empty_id(path, line, f[3], "destination node")?.to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Relation;
    use std::fs;

    fn write_corpus(dir: &Path, news: &str, authors: &str, subjects: &str, sources: &str) -> GraphPaths {
        let paths = GraphPaths::in_dir(dir);
        fs::write(&paths.news, news).unwrap();
        fs::write(&paths.authors, authors).unwrap();
        fs::write(&paths.subjects, subjects).unwrap();
        fs::write(&paths.sources, sources).unwrap();
        paths
    }

    #[test]
    fn loads_small_corpus_and_drops_unlabeled() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_corpus(
            dir.path(),
            "# id\tlabel\tsubjects\tauthor\nn1\t1\tx,y\ta1\nn2\t\tx\ta1\nn3\t0\t\ta2\n",
            "a1\ts1\na2\t\n",
            "x\teconomy\ny\thealth\n",
            "s1\tsome outlet\n",
        );
        let g = load_graph(&paths).unwrap();
        assert_eq!(g.n_news(), 2);
        assert_eq!(g.n_authors(), 2);
        assert_eq!(g.news()[1].subject_ids, Vec::<String>::new());
        assert_eq!(g.authors()[1].source_id, None);
    }

    #[test]
    fn empty_files_give_empty_graph() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_corpus(dir.path(), "", "", "", "");
        let g = load_graph(&paths).unwrap().build_mappings();
        assert_eq!(g.n_nodes(), 0);
        assert_eq!(g.relation_adjacency(Relation::An).shape(), (0, 0));
    }

    #[test]
    fn unknown_author_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_corpus(dir.path(), "n1\t1\t\ta1\nn2\t1\t\tnobody\n", "a1\t\n", "", "");
        let err = load_graph(&paths).unwrap_err();
        match &err {
            Error::UnknownId { line, id, kind, .. } => {
                assert_eq!((*line, id.as_str(), *kind), (2, "nobody", "author"))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("news.tsv:2"));
    }

    #[test]
    fn malformed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let paths = write_corpus(dir.path(), "n1\t2\t\ta1\n", "a1\t\n", "", "");
        assert!(matches!(load_graph(&paths), Err(Error::Parse { line: 1, .. })));

        let paths = write_corpus(dir.path(), "n1\t1\ta1\n", "a1\t\n", "", "");
        assert!(matches!(load_graph(&paths), Err(Error::Parse { line: 1, .. })));

        let paths = write_corpus(dir.path(), "", "a1\t\na1\t\n", "", "");
        assert!(matches!(load_graph(&paths), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn missing_file_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let paths = GraphPaths::in_dir(dir.path());
        let err = load_graph(&paths).unwrap_err();
        assert!(err.to_string().contains("subjects.tsv"));
    }

    #[test]
    fn updates_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("updates.tsv");
        fs::write(&path, "+\tan\ta1\tn1\n-\tnn\tn1\tn2\n").unwrap();
        let ups = read_updates(&path).unwrap();
        assert_eq!(ups.len(), 2);
        assert_eq!(ups[1].op, UpdateOp::Delete);
        assert_eq!(ups[1].relation, Relation::Nn);

        fs::write(&path, "+\tan\ta1\tn1\n*\tan\ta1\tn1\n").unwrap();
        assert!(matches!(read_updates(&path), Err(Error::Parse { line: 2, .. })));
        fs::write(&path, "+\tzz\ta1\tn1\n").unwrap();
        assert!(matches!(read_updates(&path), Err(Error::Parse { line: 1, .. })));
        fs::write(&path, "").unwrap();
        assert!(read_updates(&path).unwrap().is_empty());
    }
}
