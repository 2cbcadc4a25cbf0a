//! Label assignment on the sub-adjacency: spectral clustering for the block
//! model, spherical (row-normalized) spectral clustering with degree
//! estimates for the degree-corrected model, and the majority-link rule.

pub mod kmeans;
pub mod svd;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream};
use crate::subsample::SubAdjacency;

pub use kmeans::{kmeans, KmeansConfig, KmeansResult, Points};
pub use svd::{truncated_svd, Embedding, SvdConfig};

/// Community labels for every node of the network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    pub labels: Vec<usize>,
    pub k: usize,
}

impl Labeling {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::param("a labeling needs at least one cluster"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::param(format!("label {bad} out of range for K = {k}")));
        }
        Ok(Labeling { labels, k })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn nonempty_clusters(&self) -> usize {
        self.cluster_sizes().iter().filter(|&&s| s > 0).count()
    }

    /// `node_id,label` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "node_id,label")?;
        for (i, l) in self.labels.iter().enumerate() {
            writeln!(out, "{i},{l}")?;
        }
        out.flush()
    }
}

/// Plug-in degree parameters: the row norms of the embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeEstimates {
    pub psi_hat: Vec<f64>,
    /// Nodes whose embedding row is exactly zero.
    pub zero_rows: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub svd: SvdConfig,
    pub kmeans: KmeansConfig,
}

/// How unselected nodes receive labels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Assignment {
    /// k-means over all `N` embedding rows.
    #[default]
    Spectral,
    /// k-means over the selected rows only; every other node joins the
    /// cluster it links to most.
    MajorityLink,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    Sbm,
    Dcsbm,
}

/// Everything label assignment produces for one candidate `K`.
#[derive(Debug, Clone)]
pub struct SpectralFit {
    pub labeling: Labeling,
    pub embedding: Embedding,
    pub psi: Option<DegreeEstimates>,
    /// Nodes given a fallback label (zero embedding rows, or no links to the
    /// subsample under majority-link assignment).
    pub fallback_nodes: Vec<usize>,
    pub wcss: f64,
}

/// Normalizes each nonzero row to unit length. Returns the row-major
/// normalized rows, the original norms, and the indices of zero rows.
pub fn normalize_rows(v: &nalgebra::DMatrix<f64>) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    let (rows, cols) = v.shape();
    let mut out = Vec::with_capacity(rows * cols);
    let mut norms = Vec::with_capacity(rows);
    let mut zero = Vec::new();
    for i in 0..rows {
        let row = v.row(i);
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        norms.push(norm);
        if norm > 0.0 {
            out.extend(row.iter().map(|x| x / norm));
        } else {
            zero.push(i);
            out.extend(std::iter::repeat_n(0.0, cols));
        }
    }
    (out, norms, zero)
}

fn row_major(v: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let (rows, cols) = v.shape();
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        out.extend(v.row(i).iter());
    }
    out
}

fn largest_cluster(labels: &[usize], k: usize) -> usize {
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    // first index among the maxima
    let max = sizes.iter().copied().max().unwrap_or(0);
    sizes.iter().position(|&s| s == max).unwrap_or(0)
}

/// Runs k-means on the rows listed in `rows` (all rows when `None`) of a
/// row-major `data` block, returning one label per listed row.
fn cluster_rows(
    data: &[f64],
    dim: usize,
    rows: &[usize],
    k: usize,
    cfg: &KmeansConfig,
    seed: u64,
) -> Result<KmeansResult> {
    let mut subset = Vec::with_capacity(rows.len() * dim);
    for &i in rows {
        subset.extend_from_slice(&data[i * dim..(i + 1) * dim]);
    }
    kmeans(Points::new(&subset, dim)?, k, cfg, seed)
}

/// Label assignment for one candidate `K`.
pub fn spectral_fit(
    a: &SubAdjacency,
    k: usize,
    model: Model,
    assignment: Assignment,
    cfg: &SpectralConfig,
    seed: u64,
) -> Result<SpectralFit> {
    let embedding = truncated_svd(a, k, &cfg.svd, derive_seed(seed, stream::SVD, k as u64))?;
    let kmeans_seed = derive_seed(seed, stream::KMEANS, k as u64);
    let num_rows = a.num_rows();

    let (data, psi) = match model {
        Model::Sbm => (row_major(&embedding.vectors), None),
        Model::Dcsbm => {
            let (normalized, norms, zero_rows) = normalize_rows(&embedding.vectors);
            (
                normalized,
                Some(DegreeEstimates {
                    psi_hat: norms,
                    zero_rows,
                }),
            )
        }
    };
    let zero_rows: Vec<usize> = psi.as_ref().map(|p| p.zero_rows.clone()).unwrap_or_default();
    let mut is_zero = vec![false; num_rows];
    for &i in &zero_rows {
        is_zero[i] = true;
    }

    let (labeling, fallback_nodes, wcss) = match assignment {
        Assignment::Spectral => {
            let active: Vec<usize> = (0..num_rows).filter(|&i| !is_zero[i]).collect();
            if active.len() < k {
                return Err(Error::Numeric(format!(
                    "only {} nonzero embedding rows for K = {k}",
                    active.len()
                )));
            }
            let res = cluster_rows(&data, k, &active, k, &cfg.kmeans, kmeans_seed)?;
            let fill = largest_cluster(&res.labels, k);
            let mut labels = vec![fill; num_rows];
            for (&i, &l) in active.iter().zip(&res.labels) {
                labels[i] = l;
            }
            (Labeling { labels, k }, zero_rows, res.wcss)
        }
        Assignment::MajorityLink => {
            let selected = a.nodes().selected();
            let active: Vec<usize> = selected.iter().copied().filter(|&i| !is_zero[i]).collect();
            if active.len() < k {
                return Err(Error::Numeric(format!(
                    "only {} nonzero selected embedding rows for K = {k}",
                    active.len()
                )));
            }
            let res = cluster_rows(&data, k, &active, k, &cfg.kmeans, kmeans_seed)?;
            let fill = largest_cluster(&res.labels, k);
            let mut g_n = vec![fill; selected.len()];
            let mut fallback = Vec::new();
            let mut it = active.iter().zip(&res.labels).peekable();
            for (s, &j) in selected.iter().enumerate() {
                match it.peek() {
                    Some(&(&i, &l)) if i == j => {
                        g_n[s] = l;
                        it.next();
                    }
                    _ => fallback.push(j),
                }
            }
            let linked = assign_by_majority_link(a, &g_n, k)?;
            fallback.extend(linked.unlinked);
            fallback.sort_unstable();
            (linked.labeling, fallback, res.wcss)
        }
    };
    Ok(SpectralFit {
        labeling,
        embedding,
        psi,
        fallback_nodes,
        wcss,
    })
}

/// k-means on the rows of the top-`K` left singular vectors.
pub fn spectral_cluster_sbm(
    a: &SubAdjacency,
    k: usize,
    cfg: &SpectralConfig,
    seed: u64,
) -> Result<Labeling> {
    spectral_fit(a, k, Model::Sbm, Assignment::Spectral, cfg, seed).map(|f| f.labeling)
}

/// k-means on the unit-normalized rows; the row norms double as degree
/// estimates. Zero rows join the largest cluster.
pub fn spectral_cluster_dcsbm(
    a: &SubAdjacency,
    k: usize,
    cfg: &SpectralConfig,
    seed: u64,
) -> Result<(Labeling, DegreeEstimates)> {
    let fit = spectral_fit(a, k, Model::Dcsbm, Assignment::Spectral, cfg, seed)?;
    let psi = fit.psi.expect("degree-corrected fit carries estimates");
    Ok((fit.labeling, psi))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkAssignment {
    pub labeling: Labeling,
    /// Unselected nodes without a single link into the subsample (labelled 0).
    pub unlinked: Vec<usize>,
}

/// Selected nodes keep `g_n`; every other node takes the cluster holding most
/// of its links into the subsample, ties going to the smaller index.
pub fn assign_by_majority_link(a: &SubAdjacency, g_n: &[usize], k: usize) -> Result<LinkAssignment> {
    let nodes = a.nodes();
    if g_n.len() != nodes.len() {
        return Err(Error::param(format!(
            "expected {} selected-node labels, got {}",
            nodes.len(),
            g_n.len()
        )));
    }
    if let Some(&bad) = g_n.iter().find(|&&l| l >= k) {
        return Err(Error::param(format!("label {bad} out of range for K = {k}")));
    }
    let mut labels = vec![0usize; a.num_rows()];
    let mut unlinked = Vec::new();
    let mut votes = vec![0usize; k];
    for (i, label) in labels.iter_mut().enumerate() {
        if let Some(s) = nodes.index_of(i) {
            *label = g_n[s];
            continue;
        }
        votes.iter_mut().for_each(|v| *v = 0);
        for &s in a.row(i) {
            votes[g_n[s]] += 1;
        }
        let best = votes.iter().copied().max().unwrap_or(0);
        if best == 0 {
            unlinked.push(i);
        }
        *label = votes.iter().position(|&v| v == best).unwrap_or(0);
    }
    Ok(LinkAssignment {
        labeling: Labeling { labels, k },
        unlinked,
    })
}
