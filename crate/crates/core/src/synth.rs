//! Seeded generators for planted-partition benchmarks: the stochastic block
//! model, its degree-corrected variant, and a block model contaminated with
//! outlier nodes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::rng::{derive_seed, rng_from_seed, stream, StdRng};

const MAX_LABEL_RETRIES: u64 = 100;

/// Lower and upper end of the uniform component of the degree mixture.
pub const PSI_UNIFORM_RANGE: (f64, f64) = (3.0 / 5.0, 7.0 / 5.0);
/// Point masses of the degree mixture, each drawn with probability `(1 - alpha) / 2`.
pub const PSI_POINT_MASSES: (f64, f64) = (1.0 / 3.0, 5.0 / 3.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub k0: usize,
    pub num_nodes: usize,
    pub rho: f64,
    pub beta: f64,
    pub pi: Vec<f64>,
}

impl SbmParams {
    /// Balanced blocks.
    pub fn new(k0: usize, num_nodes: usize, rho: f64, beta: f64) -> Self {
        let pi = vec![1.0 / k0.max(1) as f64; k0];
        SbmParams {
            k0,
            num_nodes,
            rho,
            beta,
            pi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k0 == 0 {
            return Err(Error::param("k0 must be at least 1"));
        }
        if self.num_nodes < self.k0 {
            return Err(Error::param(format!(
                "num_nodes ({}) must be at least k0 ({})",
                self.num_nodes, self.k0
            )));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::param(format!("rho must lie in (0, 1], got {}", self.rho)));
        }
        if !(self.beta >= 0.0 && self.beta <= 1.0) {
            return Err(Error::param(format!("beta must lie in [0, 1], got {}", self.beta)));
        }
        if self.pi.len() != self.k0 {
            return Err(Error::param("pi must have one entry per block"));
        }
        if self.pi.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::param("every block proportion must be positive"));
        }
        let total: f64 = self.pi.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param(format!("pi sums to {total}, not 1")));
        }
        for row in self.b_star() {
            for b in row {
                if b > 1.0 {
                    return Err(Error::param(format!("planted probability {b} exceeds 1")));
                }
            }
        }
        Ok(())
    }

    /// `rho * (beta * 11' + (1 - beta) * I)`.
    pub fn b_star(&self) -> Vec<Vec<f64>> {
        (0..self.k0)
            .map(|k| {
                (0..self.k0)
                    .map(|l| {
                        let diag = if k == l { 1.0 - self.beta } else { 0.0 };
                        self.rho * (self.beta + diag)
                    })
                    .collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcsbmParams {
    pub base: SbmParams,
    /// Weight of the uniform component of the degree mixture.
    pub alpha: f64,
}

impl DcsbmParams {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::param(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierParams {
    pub base: SbmParams,
    /// Number of outlier nodes appended after the normal ones.
    pub m: usize,
    /// Edge probability between two outliers.
    pub outlier_p: f64,
}

impl OutlierParams {
    pub fn new(base: SbmParams, m: usize) -> Self {
        OutlierParams {
            base,
            m,
            outlier_p: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if !(0.0..=1.0).contains(&self.outlier_p) {
            return Err(Error::param("outlier_p must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Planted structure attached to a synthetic graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Block label of every normal node, in `0..k0`.
    pub labels: Vec<usize>,
    pub b_star: Vec<Vec<f64>>,
    /// Degree parameters after per-block rescaling (degree-corrected model only).
    pub psi_star: Option<Vec<f64>>,
    /// Outliers occupy node ids `labels.len()..labels.len() + num_outliers`.
    pub num_outliers: usize,
    /// Pairs whose raw edge probability exceeded one and was clamped.
    pub clamped_pairs: u64,
    /// Label draws rejected because a block came out empty.
    pub label_retries: u64,
}

impl GroundTruth {
    pub fn k0(&self) -> usize {
        self.b_star.len()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k0()];
        for &g in &self.labels {
            sizes[g] += 1;
        }
        sizes
    }

    /// `node_id,label` rows; outliers carry label `-1`.
    pub fn write_label_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "node_id,label")?;
        for (i, g) in self.labels.iter().enumerate() {
            writeln!(out, "{i},{g}")?;
        }
        for o in 0..self.num_outliers {
            writeln!(out, "{},-1", self.labels.len() + o)?;
        }
        out.flush()
    }

    pub fn save_label_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path)
            .map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.write_label_csv(BufWriter::new(file))
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

fn uniform_open_closed(rng: &mut StdRng) -> f64 {
    1.0 - rng.random::<f64>()
}

/// Draws multinomial labels, redrawing with a fresh sub-seed whenever a block
/// comes out empty.
fn sample_labels(pi: &[f64], num_nodes: usize, seed: u64) -> Result<(Vec<usize>, u64)> {
    let k0 = pi.len();
    for attempt in 0..=MAX_LABEL_RETRIES {
        let mut rng = rng_from_seed(derive_seed(seed, stream::LABELS, attempt));
        let mut sizes = vec![0usize; k0];
        let labels: Vec<usize> = (0..num_nodes)
            .map(|_| {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut label = k0 - 1;
                for (k, &p) in pi.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        label = k;
                        break;
                    }
                }
                sizes[label] += 1;
                label
            })
            .collect();
        if sizes.iter().all(|&s| s > 0) {
            return Ok((labels, attempt));
        }
    }
    Err(Error::Generator(format!(
        "a planted block stayed empty after {MAX_LABEL_RETRIES} redraws"
    )))
}

fn block_members(labels: &[usize], k0: usize) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); k0];
    for (i, &g) in labels.iter().enumerate() {
        members[g].push(i);
    }
    members
}

/// Visits positions `0..len` each kept independently with probability `p`,
/// jumping over rejected runs with geometric skips.
fn for_each_bernoulli(rng: &mut StdRng, len: usize, p: f64, mut visit: impl FnMut(usize, &mut StdRng)) {
    if len == 0 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        for pos in 0..len {
            visit(pos, rng);
        }
        return;
    }
    let log_q = (-p).ln_1p();
    let mut pos: usize = 0;
    loop {
        let skip = (uniform_open_closed(rng).ln() / log_q).floor();
        if !skip.is_finite() || skip >= (len - pos) as f64 {
            return;
        }
        pos += skip as usize;
        visit(pos, rng);
        pos += 1;
        if pos >= len {
            return;
        }
    }
}

fn sbm_edges(labels: &[usize], b: &[Vec<f64>], rng: &mut StdRng) -> Vec<(usize, usize)> {
    let members = block_members(labels, b.len());
    let mut edges = Vec::new();
    for (i, &gi) in labels.iter().enumerate() {
        for (l, block) in members.iter().enumerate() {
            let start = block.partition_point(|&j| j <= i);
            let candidates = &block[start..];
            for_each_bernoulli(rng, candidates.len(), b[gi][l], |pos, _| {
                edges.push((i, candidates[pos]));
            });
        }
    }
    edges
}

pub fn sample_sbm(p: &SbmParams, seed: u64) -> Result<(SparseGraph, GroundTruth)> {
    p.validate()?;
    let (labels, label_retries) = sample_labels(&p.pi, p.num_nodes, seed)?;
    let b_star = p.b_star();
    let mut rng = rng_from_seed(derive_seed(seed, stream::EDGES, 0));
    let edges = sbm_edges(&labels, &b_star, &mut rng);
    let (graph, _) = SparseGraph::from_edges(p.num_nodes, edges)?;
    Ok((
        graph,
        GroundTruth {
            labels,
            b_star,
            psi_star: None,
            num_outliers: 0,
            clamped_pairs: 0,
            label_retries,
        },
    ))
}

/// Raw draws from the three-component degree mixture (before any rescaling).
pub fn sample_psi_mixture(alpha: f64, count: usize, rng: &mut StdRng) -> Vec<f64> {
    let (lo, hi) = PSI_UNIFORM_RANGE;
    (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            if u < alpha {
                rng.random_range(lo..=hi)
            } else if u < alpha + (1.0 - alpha) / 2.0 {
                PSI_POINT_MASSES.0
            } else {
                PSI_POINT_MASSES.1
            }
        })
        .collect()
}

/// Scales degree parameters within each block so they sum to the block size.
pub fn normalize_psi_per_block(psi: &mut [f64], labels: &[usize], k0: usize) {
    let mut sums = vec![0.0; k0];
    let mut sizes = vec![0usize; k0];
    for (&v, &g) in psi.iter().zip(labels) {
        sums[g] += v;
        sizes[g] += 1;
    }
    for (v, &g) in psi.iter_mut().zip(labels) {
        if sums[g] > 0.0 {
            *v *= sizes[g] as f64 / sums[g];
        }
    }
}

pub fn sample_dcsbm(p: &DcsbmParams, seed: u64) -> Result<(SparseGraph, GroundTruth)> {
    p.validate()?;
    let base = &p.base;
    let (labels, label_retries) = sample_labels(&base.pi, base.num_nodes, seed)?;
    let b_star = base.b_star();
    let mut psi_rng = rng_from_seed(derive_seed(seed, stream::PSI, 0));
    let mut psi = sample_psi_mixture(p.alpha, base.num_nodes, &mut psi_rng);
    normalize_psi_per_block(&mut psi, &labels, base.k0);

    let members = block_members(&labels, base.k0);
    let psi_max: Vec<f64> = members
        .iter()
        .map(|m| m.iter().map(|&j| psi[j]).fold(0.0, f64::max))
        .collect();

    let mut rng = rng_from_seed(derive_seed(seed, stream::EDGES, 0));
    let mut edges = Vec::new();
    let mut clamped: u64 = 0;
    for (i, &gi) in labels.iter().enumerate() {
        for (l, block) in members.iter().enumerate() {
            let start = block.partition_point(|&j| j <= i);
            let candidates = &block[start..];
            let rate = psi[i] * b_star[gi][l];
            let envelope = (rate * psi_max[l]).min(1.0);
            if rate * psi_max[l] > 1.0 {
                clamped += candidates.iter().filter(|&&j| rate * psi[j] > 1.0).count() as u64;
            }
            // Thinning: propose at the row envelope, accept at the exact rate.
            for_each_bernoulli(&mut rng, candidates.len(), envelope, |pos, rng| {
                let j = candidates[pos];
                let prob = (rate * psi[j]).min(1.0);
                if prob >= envelope || rng.random::<f64>() * envelope < prob {
                    edges.push((i, j));
                }
            });
        }
    }
    let n = base.num_nodes as f64;
    let total_pairs = n * (n - 1.0) / 2.0;
    if clamped as f64 > 0.01 * total_pairs {
        return Err(Error::param(format!(
            "{clamped} of {total_pairs} pairs have edge probability above 1"
        )));
    }
    let (graph, _) = SparseGraph::from_edges(base.num_nodes, edges)?;
    Ok((
        graph,
        GroundTruth {
            labels,
            b_star,
            psi_star: Some(psi),
            num_outliers: 0,
            clamped_pairs: clamped,
            label_retries,
        },
    ))
}

/// Per-node connection probabilities to outliers: `u^2 / 10` with `u ~ U[0, 1]`.
pub fn sample_outlier_affinities(count: usize, rng: &mut StdRng) -> Vec<f64> {
    (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            u * u / 10.0
        })
        .collect()
}

pub fn sample_gsbm_with_outliers(p: &OutlierParams, seed: u64) -> Result<(SparseGraph, GroundTruth)> {
    p.validate()?;
    let (normal, mut truth) = sample_sbm(&p.base, seed)?;
    if p.m == 0 {
        return Ok((normal, truth));
    }
    let n = p.base.num_nodes;
    let mut rng = rng_from_seed(derive_seed(seed, stream::OUTLIERS, 0));
    let affinity = sample_outlier_affinities(n, &mut rng);

    let mut edges: Vec<(usize, usize)> = normal.edges().collect();
    for (i, &v) in affinity.iter().enumerate() {
        for_each_bernoulli(&mut rng, p.m, v, |o, _| edges.push((i, n + o)));
    }
    for o in 0..p.m {
        for_each_bernoulli(&mut rng, p.m - o - 1, p.outlier_p, |pos, _| {
            edges.push((n + o, n + o + 1 + pos));
        });
    }
    let (graph, _) = SparseGraph::from_edges(n + p.m, edges)?;
    truth.num_outliers = p.m;
    Ok((graph, truth))
}
