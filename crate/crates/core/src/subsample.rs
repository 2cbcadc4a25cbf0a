//! Node-pair subsampling: choose `n` nodes uniformly without replacement and
//! keep every edge variable incident to at least one of them, giving the
//! `N x n` sub-adjacency.

use std::collections::hash_map::DefaultHasher;
use std::fs::File;
use std::hash::{Hash, Hasher};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::rng::rng_from_seed;

/// Selected nodes in increasing order, plus the inverse map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSet {
    num_nodes: usize,
    selected: Vec<usize>,
    index_of: Vec<Option<usize>>,
}

impl NodeSet {
    /// Sorts and validates `selected` against a universe of `num_nodes`.
    pub fn new(num_nodes: usize, mut selected: Vec<usize>) -> Result<Self> {
        if selected.is_empty() {
            return Err(Error::param("a node set needs at least one node"));
        }
        selected.sort_unstable();
        if selected.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("selected nodes must be distinct"));
        }
        if let Some(&last) = selected.last() {
            if last >= num_nodes {
                return Err(Error::param(format!(
                    "selected node {last} is outside a graph of {num_nodes} nodes"
                )));
            }
        }
        let mut index_of = vec![None; num_nodes];
        for (s, &j) in selected.iter().enumerate() {
            index_of[j] = Some(s);
        }
        Ok(NodeSet {
            num_nodes,
            selected,
            index_of,
        })
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// Column index of an original node, if it was selected.
    pub fn index_of(&self, node: usize) -> Option<usize> {
        self.index_of.get(node).copied().flatten()
    }

    pub fn is_selected(&self, node: usize) -> bool {
        self.index_of(node).is_some()
    }

    /// One selected node id per line, preceded by a `# nodes=N` header.
    pub fn write_index_file<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# nodes={}", self.num_nodes)?;
        for j in &self.selected {
            writeln!(out, "{j}")?;
        }
        out.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_index_file(BufWriter::new(file))
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path, num_nodes: usize) -> Result<Self> {
        let file =
            File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        let mut selected = Vec::new();
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let j = t.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("invalid node index {t:?}"),
            })?;
            selected.push(j);
        }
        NodeSet::new(num_nodes, selected)
    }
}

/// The `N x n` matrix of edges incident to the selected nodes.
///
/// Stored twice: by row (`rows[i]` lists the column indices `s_j` of the
/// selected neighbours of `i`) and by column (`cols[s]` lists every neighbour
/// of the `s`-th selected node).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubAdjacency {
    nodes: NodeSet,
    row_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    col_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    pair_count: u64,
}

impl SubAdjacency {
    pub fn num_rows(&self) -> usize {
        self.nodes.num_nodes()
    }

    pub fn num_cols(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.nodes
    }

    /// Number of independent edge variables, `N n - n (n + 1) / 2`.
    pub fn pair_count(&self) -> u64 {
        self.pair_count
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Column indices of the selected neighbours of node `i`.
    pub fn row(&self, i: usize) -> &[usize] {
        &self.row_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Neighbours (original ids) of the `s`-th selected node.
    pub fn col(&self, s: usize) -> &[usize] {
        &self.col_idx[self.col_ptr[s]..self.col_ptr[s + 1]]
    }

    pub fn get(&self, i: usize, s: usize) -> bool {
        self.row(i).binary_search(&s).is_ok()
    }

    /// `y = A x` for a dense column-major `n x width` block `x`; `y` is `N x width`.
    pub fn mul_dense(&self, x: &[f64], width: usize, y: &mut [f64]) {
        let (rows, cols) = (self.num_rows(), self.num_cols());
        debug_assert_eq!(x.len(), cols * width);
        debug_assert_eq!(y.len(), rows * width);
        for c in 0..width {
            let xc = &x[c * cols..(c + 1) * cols];
            let yc = &mut y[c * rows..(c + 1) * rows];
            for (i, out) in yc.iter_mut().enumerate() {
                *out = self.row(i).iter().map(|&s| xc[s]).sum();
            }
        }
    }

    /// `y = A' x` for a dense column-major `N x width` block `x`; `y` is `n x width`.
    pub fn mul_dense_transpose(&self, x: &[f64], width: usize, y: &mut [f64]) {
        let (rows, cols) = (self.num_rows(), self.num_cols());
        debug_assert_eq!(x.len(), rows * width);
        debug_assert_eq!(y.len(), cols * width);
        for c in 0..width {
            let xc = &x[c * rows..(c + 1) * rows];
            let yc = &mut y[c * cols..(c + 1) * cols];
            for (s, out) in yc.iter_mut().enumerate() {
                *out = self.col(s).iter().map(|&i| xc[i]).sum();
            }
        }
    }

    /// Stable digest of the matrix and its node set.
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.nodes.num_nodes().hash(&mut h);
        self.nodes.selected().hash(&mut h);
        self.row_ptr.hash(&mut h);
        self.row_idx.hash(&mut h);
        h.finish()
    }
}

pub fn sample_nodes(num_nodes: usize, n: usize, seed: u64) -> Result<NodeSet> {
    if n == 0 || n > num_nodes {
        return Err(Error::param(format!(
            "subsample size {n} must lie in [1, {num_nodes}]"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let selected = rand::seq::index::sample(&mut rng, num_nodes, n).into_vec();
    NodeSet::new(num_nodes, selected)
}

pub fn extract_subadjacency(g: &SparseGraph, nodes: &NodeSet) -> Result<SubAdjacency> {
    if nodes.num_nodes() != g.num_nodes() {
        return Err(Error::param(format!(
            "node set built for {} nodes but graph has {}",
            nodes.num_nodes(),
            g.num_nodes()
        )));
    }
    let num_rows = g.num_nodes();
    let mut col_ptr = Vec::with_capacity(nodes.len() + 1);
    col_ptr.push(0);
    let mut col_idx = Vec::new();
    for &j in nodes.selected() {
        col_idx.extend_from_slice(g.neighbors(j));
        col_ptr.push(col_idx.len());
    }

    // Transpose by counting sort; visiting columns in order keeps rows sorted.
    let mut row_ptr = vec![0usize; num_rows + 1];
    for &i in &col_idx {
        row_ptr[i + 1] += 1;
    }
    for i in 0..num_rows {
        row_ptr[i + 1] += row_ptr[i];
    }
    let mut cursor = row_ptr.clone();
    let mut row_idx = vec![0usize; col_idx.len()];
    for s in 0..nodes.len() {
        for &i in &col_idx[col_ptr[s]..col_ptr[s + 1]] {
            row_idx[cursor[i]] = s;
            cursor[i] += 1;
        }
    }
    Ok(SubAdjacency {
        nodes: nodes.clone(),
        row_ptr,
        row_idx,
        col_ptr,
        col_idx,
        pair_count: independent_pair_count(num_rows as u64, nodes.len() as u64),
    })
}

/// `N n - n (n + 1) / 2`: selected-selected pairs counted once plus every
/// unselected-selected pair.
pub fn independent_pair_count(num_nodes: u64, n: u64) -> u64 {
    num_nodes * n - n * (n + 1) / 2
}

/// `ceil(zeta * log_n / rho)` with no cap; `log_n` is the natural log of the
/// network size.
pub fn size_rule(log_n: f64, rho_hat: f64, zeta: f64) -> Result<u64> {
    if rho_hat == 0.0 {
        return Err(Error::param("density estimate is zero"));
    }
    if !(rho_hat > 0.0 && rho_hat <= 1.0) {
        return Err(Error::param(format!("density estimate {rho_hat} outside (0, 1]")));
    }
    if !(zeta > 0.0 && zeta.is_finite()) {
        return Err(Error::param(format!("zeta must be positive, got {zeta}")));
    }
    let raw = (zeta * log_n / rho_hat).ceil();
    if !raw.is_finite() {
        return Err(Error::Numeric("subsample size overflowed".into()));
    }
    Ok(raw.max(0.0) as u64)
}

/// Subsample size `min(N, ceil(zeta ln N / rho))`.
pub fn recommended_subsample_size(num_nodes: u64, rho_hat: f64, zeta: f64) -> Result<u64> {
    if num_nodes < 2 {
        return Err(Error::param("the size rule needs at least two nodes"));
    }
    let n = size_rule((num_nodes as f64).ln(), rho_hat, zeta)?;
    Ok(n.clamp(1, num_nodes))
}
