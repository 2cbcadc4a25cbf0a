//! Sparse undirected simple graphs: construction, validation, edge-list I/O
//! and degree statistics.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric 0/1 adjacency with zero diagonal, stored as compressed rows.
///
/// Rows hold strictly increasing neighbour indices. Every undirected edge is
/// stored twice, once per endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    num_nodes: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    num_edges: usize,
}

/// What happened while building a graph from raw pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub lines_read: usize,
    pub duplicate_edges: usize,
    pub self_loops: usize,
}

impl IngestSummary {
    /// Renders the summary as `key=value` lines.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "num_nodes={}", self.num_nodes);
        let _ = writeln!(out, "num_edges={}", self.num_edges);
        let _ = writeln!(out, "lines_read={}", self.lines_read);
        let _ = writeln!(out, "duplicate_edges={}", self.duplicate_edges);
        let _ = writeln!(out, "self_loops={}", self.self_loops);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Indexing {
    #[default]
    ZeroBased,
    OneBased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub degrees: Vec<usize>,
    pub mean_degree: f64,
    pub max_degree: usize,
    pub density_hat: f64,
}

impl SparseGraph {
    /// Builds a graph from unordered pairs. Duplicates collapse and self-loops
    /// are dropped; both are counted in the returned summary.
    pub fn from_edges<I>(num_nodes: usize, edges: I) -> Result<(Self, IngestSummary)>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if num_nodes == 0 {
            return Err(Error::InvalidGraph("graph must have at least one node".into()));
        }
        let mut summary = IngestSummary::default();
        let mut directed: Vec<(usize, usize)> = Vec::new();
        for (i, j) in edges {
            summary.lines_read += 1;
            if i >= num_nodes || j >= num_nodes {
                return Err(Error::Bounds {
                    index: i.max(j),
                    num_nodes,
                    line: summary.lines_read,
                });
            }
            if i == j {
                summary.self_loops += 1;
                continue;
            }
            directed.push((i, j));
            directed.push((j, i));
        }
        directed.sort_unstable();
        let before = directed.len();
        directed.dedup();
        summary.duplicate_edges = (before - directed.len()) / 2;

        let mut indptr = vec![0usize; num_nodes + 1];
        for &(i, _) in &directed {
            indptr[i + 1] += 1;
        }
        for i in 0..num_nodes {
            indptr[i + 1] += indptr[i];
        }
        let indices: Vec<usize> = directed.iter().map(|&(_, j)| j).collect();
        let num_edges = indices.len() / 2;
        summary.num_nodes = num_nodes;
        summary.num_edges = num_edges;
        Ok((
            SparseGraph {
                num_nodes,
                indptr,
                indices,
                num_edges,
            },
            summary,
        ))
    }

    /// Wraps raw compressed rows after checking every graph invariant:
    /// sorted unique rows, no self-loops, and symmetry.
    pub fn from_csr(num_nodes: usize, indptr: Vec<usize>, indices: Vec<usize>) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::InvalidGraph("graph must have at least one node".into()));
        }
        if indptr.len() != num_nodes + 1 || indptr[0] != 0 || indptr[num_nodes] != indices.len() {
            return Err(Error::InvalidGraph("malformed row pointer array".into()));
        }
        for i in 0..num_nodes {
            if indptr[i] > indptr[i + 1] {
                return Err(Error::InvalidGraph(format!("row {i} has negative length")));
            }
            let row = &indices[indptr[i]..indptr[i + 1]];
            for (pos, &j) in row.iter().enumerate() {
                if j >= num_nodes {
                    return Err(Error::InvalidGraph(format!("row {i} references node {j}")));
                }
                if j == i {
                    return Err(Error::InvalidGraph(format!("self-loop at node {i}")));
                }
                if pos > 0 && row[pos - 1] >= j {
                    return Err(Error::InvalidGraph(format!("row {i} not strictly increasing")));
                }
            }
        }
        let g = SparseGraph {
            num_nodes,
            indptr,
            indices,
            num_edges: 0,
        };
        for i in 0..num_nodes {
            for &j in g.neighbors(i) {
                if !g.has_edge(j, i) {
                    return Err(Error::InvalidGraph(format!("asymmetric entry ({i}, {j})")));
                }
            }
        }
        let num_edges = g.indices.len() / 2;
        Ok(SparseGraph { num_edges, ..g })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Undirected edges as `(i, j)` with `i < j`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .copied()
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Writes the `# nodes=N` header followed by one `i j` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W, indexing: Indexing) -> std::io::Result<()> {
        let offset = match indexing {
            Indexing::ZeroBased => 0,
            Indexing::OneBased => 1,
        };
        writeln!(out, "# nodes={}", self.num_nodes)?;
        for (i, j) in self.edges() {
            writeln!(out, "{} {}", i + offset, j + offset)?;
        }
        out.flush()
    }

    pub fn save_edge_list(&self, path: &Path, indexing: Indexing) -> Result<()> {
        let file = File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_edge_list(BufWriter::new(file), indexing)
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

/// Parses a `# nodes=N` (or `# nodes: N`) header comment.
fn parse_header(line: &str) -> Option<usize> {
    let rest = line.trim_start_matches('#').trim();
    let rest = rest.strip_prefix("nodes")?;
    let rest = rest.trim_start().strip_prefix(['=', ':'])?;
    rest.trim().parse().ok()
}

/// Reads a whitespace-separated edge list from any reader.
///
/// Lines starting with `#` are comments, except that a leading
/// `# nodes=N` header fixes the node count and enables bounds checking.
/// Without a header the node count is one more than the largest index.
pub fn read_edge_list<R: BufRead>(
    reader: R,
    indexing: Indexing,
    source: &Path,
) -> Result<(SparseGraph, IngestSummary)> {
    let mut declared: Option<usize> = None;
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut max_index: Option<usize> = None;
    let mut lines_read = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(format!("reading {}", source.display()), e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            if declared.is_none() && pairs.is_empty() {
                declared = parse_header(trimmed);
            }
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: source.to_path_buf(),
            line: lineno,
            message,
        };
        let mut tokens = trimmed.split_whitespace();
        let (a, b) = match (tokens.next(), tokens.next(), tokens.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(parse_err(format!("expected two node indices, got {trimmed:?}"))),
        };
        let parse_index = |tok: &str| -> Result<usize> {
            let raw: usize = tok
                .parse()
                .map_err(|_| parse_err(format!("invalid node index {tok:?}")))?;
            let idx = match indexing {
                Indexing::ZeroBased => raw,
                Indexing::OneBased => raw
                    .checked_sub(1)
                    .ok_or_else(|| parse_err("index 0 in a one-based edge list".into()))?,
            };
            if let Some(n) = declared {
                if idx >= n {
                    return Err(Error::Bounds {
                        index: idx,
                        num_nodes: n,
                        line: lineno,
                    });
                }
            }
            Ok(idx)
        };
        let i = parse_index(a)?;
        let j = parse_index(b)?;
        max_index = Some(max_index.map_or(i.max(j), |m: usize| m.max(i).max(j)));
        pairs.push((i, j));
        lines_read += 1;
    }

    let num_nodes = match (declared, max_index) {
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => {
            return Err(Error::Parse {
                path: source.to_path_buf(),
                line: 0,
                message: "edge list contains no edges and no node-count header".into(),
            })
        }
    };
    let (graph, mut summary) = SparseGraph::from_edges(num_nodes, pairs)?;
    summary.lines_read = lines_read;
    Ok((graph, summary))
}

pub fn load_edge_list_with_summary(
    path: &Path,
    indexing: Indexing,
) -> Result<(SparseGraph, IngestSummary)> {
    let file =
        File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    read_edge_list(BufReader::new(file), indexing, path)
}

pub fn load_edge_list(path: &Path, indexing: Indexing) -> Result<SparseGraph> {
    load_edge_list_with_summary(path, indexing).map(|(g, _)| g)
}

/// The largest connected component, relabeled `0..size` in increasing order
/// of original index. Returns the subgraph and the original index of every
/// kept node. Ties between equally large components go to the one holding
/// the smallest node index.
pub fn largest_component(g: &SparseGraph) -> (SparseGraph, Vec<usize>) {
    let n = g.num_nodes();
    let mut component = vec![usize::MAX; n];
    let mut best = (0usize, 0usize);
    let mut stack = Vec::new();
    let mut next_id = 0;
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = next_id;
        next_id += 1;
        component[start] = id;
        stack.push(start);
        let mut size = 0;
        while let Some(v) = stack.pop() {
            size += 1;
            for &w in g.neighbors(v) {
                if component[w] == usize::MAX {
                    component[w] = id;
                    stack.push(w);
                }
            }
        }
        if size > best.1 {
            best = (id, size);
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&v| component[v] == best.0).collect();
    let mut new_index = vec![usize::MAX; n];
    for (new, &old) in kept.iter().enumerate() {
        new_index[old] = new;
    }
    let mut indptr = Vec::with_capacity(kept.len() + 1);
    let mut indices = Vec::new();
    indptr.push(0);
    for &old in &kept {
        // neighbors stay sorted because relabeling preserves order
        indices.extend(g.neighbors(old).iter().map(|&w| new_index[w]));
        indptr.push(indices.len());
    }
    let sub = SparseGraph::from_csr(kept.len(), indptr, indices).expect("a component of a valid graph is valid");
    (sub, kept)
}

pub fn degree_stats(g: &SparseGraph) -> DegreeSummary {
    let n = g.num_nodes();
    let degrees: Vec<usize> = (0..n).map(|i| g.degree(i)).collect();
    let max_degree = degrees.iter().copied().max().unwrap_or(0);
    let twice_edges = 2.0 * g.num_edges() as f64;
    let density_hat = if n > 1 {
        twice_edges / (n as f64 * (n as f64 - 1.0))
    } else {
        0.0
    };
    DegreeSummary {
        degrees,
        mean_degree: twice_edges / n as f64,
        max_degree,
        density_hat,
    }
}
