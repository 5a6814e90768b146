//! Matrix Market graphs, whitespace temporal edge lists and the text batch
//! format.
//!
//! Batch files hold undirected changes, one per line:
//!
//! ```text
//! # dyncomm batch rng=chacha8 seed=7 fraction=0.001 insertion_ratio=0.8
//! # batch 0
//! D 3 9
//! I 4 12 1
//! ```
//!
//! `D i j` deletes an edge whose weight is looked up in the graph the batch
//! is applied to; `I i j w` inserts one. `# batch k` starts a new batch.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use dyncomm_core::batch::TemporalEdge;
use dyncomm_core::{BatchUpdate, Graph, GraphBuilder, VertexId};

use crate::error::{CliError, Result};

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::input(path, e.to_string()))
}

fn at_line(origin: &str, line: usize, message: impl std::fmt::Display) -> CliError {
    CliError::Input { path: origin.to_string(), message: format!("line {line}: {message}") }
}

/// Reads a coordinate Matrix Market file as an undirected graph.
///
/// `symmetric` files store each edge once. `general` files are mirrored when
/// `symmetrize` is set and must already list both directions otherwise.
/// Pattern files get unit weights; ids are shifted to start at 0.
pub fn load_matrix_market(path: &Path, symmetrize: bool) -> Result<Graph> {
    parse_matrix_market(open(path)?, &path.display().to_string(), symmetrize)
}

pub fn parse_matrix_market(reader: impl Read, origin: &str, symmetrize: bool) -> Result<Graph> {
    let mut lines = BufReader::new(reader).lines().enumerate().map(|(k, l)| (k + 1, l));
    let (_, header) = lines.next().ok_or_else(|| at_line(origin, 1, "empty file"))?;
    let header = header?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" || fields[2] != "coordinate" {
        return Err(at_line(origin, 1, "expected `%%MatrixMarket matrix coordinate <field> <symmetry>`"));
    }
    let pattern = match fields[3].as_str() {
        "pattern" => true,
        "real" | "integer" | "double" => false,
        other => return Err(at_line(origin, 1, format!("unsupported field `{other}`"))),
    };
    let symmetric = match fields[4].as_str() {
        "symmetric" => true,
        "general" => false,
        other => return Err(at_line(origin, 1, format!("unsupported symmetry `{other}`"))),
    };

    let mut size = None;
    let mut builder = None;
    let mut arcs = Vec::new();
    let mut seen = 0usize;
    for (no, line) in lines {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        let Some((rows, cols, nnz)) = size else {
            if tokens.len() != 3 {
                return Err(at_line(origin, no, "expected `rows cols entries`"));
            }
            let parse = |t: &str| t.parse::<usize>().map_err(|e| at_line(origin, no, format!("`{t}`: {e}")));
            let dims = (parse(tokens[0])?, parse(tokens[1])?, parse(tokens[2])?);
            if dims.0.max(dims.1) > VertexId::MAX as usize {
                return Err(at_line(origin, no, "too many vertices for 32-bit ids"));
            }
            size = Some(dims);
            builder = Some(GraphBuilder::with_capacity(dims.0.max(dims.1), dims.2));
            continue;
        };
        let expected = if pattern { 2 } else { 3 };
        if tokens.len() < expected {
            return Err(at_line(origin, no, format!("expected {expected} fields, found {}", tokens.len())));
        }
        let id = |t: &str, bound: usize| -> Result<VertexId> {
            let v: u64 = t.parse().map_err(|e| at_line(origin, no, format!("`{t}`: {e}")))?;
            if v == 0 || v as usize > bound {
                return Err(at_line(origin, no, format!("index {v} outside 1..={bound}")));
            }
            Ok((v - 1) as VertexId)
        };
        let i = id(tokens[0], rows)?;
        let j = id(tokens[1], cols)?;
        let w = if pattern {
            1.0
        } else {
            tokens[2].parse::<f32>().map_err(|e| at_line(origin, no, format!("`{}`: {e}", tokens[2])))?
        };
        if !(w.is_finite() && w > 0.0) {
            return Err(at_line(origin, no, format!("weight {w} must be finite and positive")));
        }
        seen += 1;
        if seen > nnz {
            return Err(at_line(origin, no, format!("more than the {nnz} declared entries")));
        }
        if symmetric || symmetrize {
            builder.as_mut().expect("set with size").add_edge(i, j, w)?;
        } else {
            arcs.push((i, j, w));
        }
    }
    let Some((rows, cols, nnz)) = size else {
        return Err(CliError::input(origin, "missing size line"));
    };
    if seen != nnz {
        return Err(CliError::input(origin, format!("declared {nnz} entries, found {seen}")));
    }
    if symmetric || symmetrize {
        Ok(builder.expect("set with size").build())
    } else {
        Graph::from_symmetric_arcs(rows.max(cols), &arcs)
            .map_err(|e| CliError::input(origin, format!("{e} (pass --symmetrize to mirror general matrices)")))
    }
}

/// Writes `g` as a `real symmetric` Matrix Market file (lower triangle,
/// 1-based).
pub fn write_matrix_market(g: &Graph, mut out: impl Write) -> std::io::Result<()> {
    let n = g.vertex_count();
    let entries: Vec<_> = g.arcs().filter(|&(i, j, _)| i >= j).collect();
    writeln!(out, "%%MatrixMarket matrix coordinate real symmetric")?;
    writeln!(out, "{n} {n} {}", entries.len())?;
    for (i, j, w) in entries {
        writeln!(out, "{} {} {w}", i + 1, j + 1)?;
    }
    Ok(())
}

/// Reads `source target [timestamp]` lines; lines starting with `#` or `%`
/// are comments. A missing timestamp defaults to the line position.
pub fn load_temporal_edges(path: &Path) -> Result<Vec<TemporalEdge>> {
    parse_temporal_edges(open(path)?, &path.display().to_string())
}

pub fn parse_temporal_edges(reader: impl Read, origin: &str) -> Result<Vec<TemporalEdge>> {
    let mut out = Vec::new();
    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let no = k + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') || text.starts_with('%') {
            continue;
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        if tokens.len() < 2 {
            return Err(at_line(origin, no, "expected `source target [timestamp]`"));
        }
        let id = |t: &str| t.parse::<VertexId>().map_err(|e| at_line(origin, no, format!("`{t}`: {e}")));
        let timestamp = match tokens.get(2) {
            Some(t) => t.parse::<i64>().map_err(|e| at_line(origin, no, format!("`{t}`: {e}")))?,
            None => out.len() as i64,
        };
        out.push(TemporalEdge { source: id(tokens[0])?, target: id(tokens[1])?, timestamp });
    }
    if out.is_empty() {
        return Err(CliError::input(origin, "no edges"));
    }
    Ok(out)
}

/// Undirected changes of one batch as stored on disk.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatchRecord {
    pub deletions: Vec<(VertexId, VertexId)>,
    pub insertions: Vec<(VertexId, VertexId, f32)>,
}

impl BatchRecord {
    /// One line per undirected edge of `b`.
    pub fn from_update(b: &BatchUpdate) -> Self {
        Self {
            deletions: b.deletions.iter().filter(|a| a.source <= a.target).map(|a| (a.source, a.target)).collect(),
            insertions: b
                .insertions
                .iter()
                .filter(|a| a.source <= a.target)
                .map(|a| (a.source, a.target, a.weight))
                .collect(),
        }
    }

    /// Resolves deletion weights against `g` and returns the symmetric batch.
    pub fn resolve(&self, g: &Graph) -> Result<BatchUpdate> {
        let mut deletions = Vec::with_capacity(self.deletions.len());
        for &(i, j) in &self.deletions {
            let w = if (i as usize) < g.vertex_count() && (j as usize) < g.vertex_count() {
                g.arc_weight(i, j)
            } else {
                None
            };
            let w = w.ok_or(dyncomm_core::Error::MissingArc { from: i, to: j })?;
            deletions.push((i, j, w));
        }
        Ok(BatchUpdate::from_undirected(deletions, self.insertions.iter().copied()))
    }
}

/// Header key/value pairs and batches of a batch file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BatchFile {
    pub metadata: BTreeMap<String, String>,
    pub batches: Vec<BatchRecord>,
}

impl BatchFile {
    pub fn write(&self, mut out: impl Write) -> std::io::Result<()> {
        write!(out, "# dyncomm batch")?;
        for (k, v) in &self.metadata {
            write!(out, " {k}={v}")?;
        }
        writeln!(out)?;
        for (k, b) in self.batches.iter().enumerate() {
            writeln!(out, "# batch {k}")?;
            for &(i, j) in &b.deletions {
                writeln!(out, "D {i} {j}")?;
            }
            for &(i, j, w) in &b.insertions {
                writeln!(out, "I {i} {j} {w}")?;
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(open(path)?, &path.display().to_string())
    }

    pub fn parse(reader: impl Read, origin: &str) -> Result<Self> {
        let mut file = BatchFile::default();
        let mut current: Option<BatchRecord> = None;
        for (k, line) in BufReader::new(reader).lines().enumerate() {
            let no = k + 1;
            let line = line?;
            let text = line.trim();
            if text.is_empty() {
                continue;
            }
            if let Some(comment) = text.strip_prefix('#') {
                let comment = comment.trim();
                if comment.starts_with("batch") && comment[5..].trim().parse::<usize>().is_ok() {
                    file.batches.extend(current.replace(BatchRecord::default()));
                } else {
                    for pair in comment.split_whitespace() {
                        if let Some((key, value)) = pair.split_once('=') {
                            file.metadata.insert(key.to_string(), value.to_string());
                        }
                    }
                }
                continue;
            }
            let tokens: Vec<&str> = text.split_whitespace().collect();
            let id = |t: &str| t.parse::<VertexId>().map_err(|e| at_line(origin, no, format!("`{t}`: {e}")));
            let batch = current.get_or_insert_with(BatchRecord::default);
            match tokens.as_slice() {
                ["D", i, j] | ["D", i, j, _] => batch.deletions.push((id(i)?, id(j)?)),
                ["I", i, j] => batch.insertions.push((id(i)?, id(j)?, 1.0)),
                ["I", i, j, w] => {
                    let w: f32 = w.parse().map_err(|e| at_line(origin, no, format!("`{w}`: {e}")))?;
                    batch.insertions.push((id(i)?, id(j)?, w));
                }
                _ => return Err(at_line(origin, no, "expected `D i j` or `I i j w`")),
            }
        }
        file.batches.extend(current);
        Ok(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_pattern_matrix() {
        let text = "%%MatrixMarket matrix coordinate pattern symmetric\n% comment\n3 3 2\n2 1\n3 2\n";
        let g = parse_matrix_market(text.as_bytes(), "t", false).unwrap();
        assert_eq!(g.vertex_count(), 3);
        assert_eq!(g.arcs().collect::<Vec<_>>(), vec![(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)]);
    }

    #[test]
    fn general_matrix_needs_both_directions() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 2 2.5\n";
        assert!(matches!(parse_matrix_market(text.as_bytes(), "t", false), Err(CliError::Input { .. })));
        let g = parse_matrix_market(text.as_bytes(), "t", true).unwrap();
        assert_eq!(g.arc_weight(1, 0), Some(2.5));
        let both = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 2 2.5\n2 1 2.5\n";
        assert_eq!(parse_matrix_market(both.as_bytes(), "t", false).unwrap(), g);
    }

    #[test]
    fn matrix_errors_name_the_line() {
        let bad = "%%MatrixMarket matrix coordinate pattern symmetric\n3 3 1\n4 1\n";
        let err = parse_matrix_market(bad.as_bytes(), "g.mtx", false).unwrap_err().to_string();
        assert!(err.contains("g.mtx") && err.contains("line 3"), "{err}");
        let short = "%%MatrixMarket matrix coordinate pattern symmetric\n3 3 2\n2 1\n";
        assert!(parse_matrix_market(short.as_bytes(), "t", false).is_err());
        assert!(parse_matrix_market("hello\n".as_bytes(), "t", false).is_err());
    }

    #[test]
    fn matrix_round_trip() {
        let mut b = GraphBuilder::new(5);
        b.add_edge(0, 1, 1.5).unwrap().add_edge(2, 2, 1.0).unwrap().add_edge(3, 1, 2.0).unwrap();
        let g = b.build();
        let mut text = Vec::new();
        write_matrix_market(&g, &mut text).unwrap();
        assert_eq!(parse_matrix_market(text.as_slice(), "t", false).unwrap(), g);
    }

    #[test]
    fn temporal_lines() {
        let text = "# src dst t\n1 2 100\n2 3 50\n\n3 1\n";
        let edges = parse_temporal_edges(text.as_bytes(), "t").unwrap();
        assert_eq!(edges.len(), 3);
        assert_eq!(edges[1], TemporalEdge { source: 2, target: 3, timestamp: 50 });
        assert_eq!(edges[2].timestamp, 2);
        assert!(parse_temporal_edges("1\n".as_bytes(), "t").is_err());
    }

    #[test]
    fn batch_file_round_trip() {
        let b = BatchUpdate::from_undirected([(0, 1, 2.0)], [(2, 3, 1.0), (1, 3, 0.5)]);
        let mut file = BatchFile::default();
        file.metadata.insert("seed".into(), "7".into());
        file.batches = vec![BatchRecord::from_update(&b), BatchRecord::default()];
        let mut text = Vec::new();
        file.write(&mut text).unwrap();
        let text = String::from_utf8(text).unwrap();
        assert!(text.starts_with("# dyncomm batch seed=7\n# batch 0\nD 0 1\nI 1 3 0.5\nI 2 3 1\n# batch 1\n"), "{text}");
        let parsed = BatchFile::parse(text.as_bytes(), "t").unwrap();
        assert_eq!(parsed, file);

        let mut g = GraphBuilder::new(4);
        g.add_edge(0, 1, 2.0).unwrap();
        assert_eq!(parsed.batches[0].resolve(&g.build()).unwrap(), b);
    }

    #[test]
    fn unresolvable_deletion_is_an_error() {
        let rec = BatchRecord { deletions: vec![(0, 9)], insertions: vec![] };
        assert!(rec.resolve(&Graph::empty(3)).is_err());
        assert!(BatchFile::parse("X 1 2\n".as_bytes(), "t").is_err());
    }
}
