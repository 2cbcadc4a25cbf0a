//! Brute-force reference implementations. Nothing here shares accumulation
//! code with the library: pairs are enumerated one by one, likelihoods are
//! summed term by term, and the dense SVD is a hand-written Jacobi sweep.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use smbic::graph::SparseGraph;
use smbic::subsample::{extract_subadjacency, NodeSet, SubAdjacency};

/// A network small enough to enumerate every selected-node labeling.
#[derive(Debug, Clone)]
pub struct TinyInstance {
    pub adj: Vec<Vec<bool>>,
    /// Sorted, distinct.
    pub selected: Vec<usize>,
    pub labels: Vec<usize>,
    pub k: usize,
    /// Symmetric `k x k`.
    pub b: Vec<Vec<f64>>,
    pub psi: Vec<f64>,
}

impl TinyInstance {
    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn is_selected(&self, i: usize) -> bool {
        self.selected.contains(&i)
    }

    /// Draws a random instance with `n_nodes <= 20`.
    pub fn random(seed: u64, n_nodes: usize, n_sel: usize, k: usize, density: f64) -> Self {
        assert!(n_nodes <= 20 && n_sel <= n_nodes && k >= 1);
        let mut rng = StdRng::seed_from_u64(seed);
        let mut adj = vec![vec![false; n_nodes]; n_nodes];
        for i in 0..n_nodes {
            for j in i + 1..n_nodes {
                if rng.random::<f64>() < density {
                    adj[i][j] = true;
                    adj[j][i] = true;
                }
            }
        }
        let mut pool: Vec<usize> = (0..n_nodes).collect();
        for i in 0..n_sel {
            let j = rng.random_range(i..n_nodes);
            pool.swap(i, j);
        }
        let mut selected = pool[..n_sel].to_vec();
        selected.sort_unstable();
        let labels = (0..n_nodes).map(|_| rng.random_range(0..k)).collect();
        let mut b = vec![vec![0.0; k]; k];
        for x in 0..k {
            for y in x..k {
                let v = rng.random_range(0.01..0.99);
                b[x][y] = v;
                b[y][x] = v;
            }
        }
        let psi = (0..n_nodes).map(|_| rng.random_range(0.2..2.0)).collect();
        TinyInstance {
            adj,
            selected,
            labels,
            k,
            b,
            psi,
        }
    }

    pub fn graph(&self) -> SparseGraph {
        let n = self.num_nodes();
        let edges = (0..n).flat_map(|i| (i + 1..n).filter(move |&j| self.adj[i][j]).map(move |j| (i, j)));
        SparseGraph::from_edges(n, edges.collect::<Vec<_>>()).unwrap().0
    }

    pub fn sub_adjacency(&self) -> SubAdjacency {
        let nodes = NodeSet::new(self.num_nodes(), self.selected.clone()).unwrap();
        extract_subadjacency(&self.graph(), &nodes).unwrap()
    }

    /// Every unordered pair with at least one selected endpoint.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.num_nodes();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.is_selected(i) || self.is_selected(j) {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

fn ln_or_zero(count: f64, p: f64) -> f64 {
    if count == 0.0 {
        0.0
    } else {
        count * p.ln()
    }
}

/// Per-pair Bernoulli log-likelihood under `labels` and `b`.
pub fn brute_force_loglik_bernoulli(t: &TinyInstance, labels: &[usize], b: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (i, j) in t.pairs() {
        let p = b[labels[i]][labels[j]];
        let a = if t.adj[i][j] { 1.0 } else { 0.0 };
        total += ln_or_zero(a, p) + ln_or_zero(1.0 - a, 1.0 - p);
    }
    total
}

/// Per-pair Poisson log-likelihood with rate `psi_i b psi_j`; the factorial
/// term vanishes for 0/1 entries.
pub fn brute_force_loglik_poisson(t: &TinyInstance, labels: &[usize], b: &[Vec<f64>], psi: &[f64]) -> f64 {
    let mut total = 0.0;
    for (i, j) in t.pairs() {
        let rate = psi[i] * psi[j] * b[labels[i]][labels[j]];
        let a = if t.adj[i][j] { 1.0 } else { 0.0 };
        total += ln_or_zero(a, rate) - rate;
    }
    total
}

/// Observed edges and pair counts per unordered block, by enumeration.
pub fn brute_force_counts(t: &TinyInstance, labels: &[usize], k: usize) -> (Vec<Vec<u64>>, Vec<Vec<u64>>) {
    let mut o = vec![vec![0u64; k]; k];
    let mut n = vec![vec![0u64; k]; k];
    for (i, j) in t.pairs() {
        let (x, y) = (labels[i].min(labels[j]), labels[i].max(labels[j]));
        n[x][y] += 1;
        if t.adj[i][j] {
            o[x][y] += 1;
        }
    }
    (o, n)
}

/// The Bernoulli log-likelihood maximized over `b` for fixed labels, with
/// `0 ln 0 = 0` and no clamping: the true supremum.
pub fn profile_loglik_bernoulli(t: &TinyInstance, labels: &[usize], k: usize) -> f64 {
    let (o, n) = brute_force_counts(t, labels, k);
    let mut total = 0.0;
    for x in 0..k {
        for y in x..k {
            if n[x][y] == 0 {
                continue;
            }
            let (o, n) = (o[x][y] as f64, n[x][y] as f64);
            let p = o / n;
            total += ln_or_zero(o, p) + ln_or_zero(n - o, 1.0 - p);
        }
    }
    total
}

/// The majority-link extension: selected nodes keep their label, every
/// other node takes the label it has most links to (smallest on ties, 0
/// with no links).
pub fn majority_link_extend(t: &TinyInstance, g_n: &[usize], k: usize) -> Vec<usize> {
    let n = t.num_nodes();
    let mut labels = vec![0; n];
    for (pos, &s) in t.selected.iter().enumerate() {
        labels[s] = g_n[pos];
    }
    for i in (0..n).filter(|&i| !t.is_selected(i)) {
        let mut links = vec![0usize; k];
        for (pos, &s) in t.selected.iter().enumerate() {
            if t.adj[i][s] {
                links[g_n[pos]] += 1;
            }
        }
        let mut best = 0;
        for c in 1..k {
            if links[c] > links[best] {
                best = c;
            }
        }
        labels[i] = best;
    }
    labels
}

/// The labeling in the majority-link prior set with the largest profile
/// likelihood, found by trying all `k^n` selected-node labelings.
pub fn exhaustive_best_selected_labeling(t: &TinyInstance, k: usize) -> Result<(Vec<usize>, f64), String> {
    let n = t.selected.len();
    let total = (k as u64).checked_pow(n as u32).filter(|&c| c <= 1_000_000);
    let Some(total) = total else {
        return Err(format!("{k}^{n} labelings exceed the enumeration bound"));
    };
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut g_n = vec![0usize; n];
    for code in 0..total {
        let mut c = code;
        for slot in g_n.iter_mut() {
            *slot = (c % k as u64) as usize;
            c /= k as u64;
        }
        let labels = majority_link_extend(t, &g_n, k);
        let ll = profile_loglik_bernoulli(t, &labels, k);
        if best.as_ref().is_none_or(|(_, b)| ll > *b) {
            best = Some((labels, ll));
        }
    }
    Ok(best.expect("at least one labeling"))
}

/// `n ln K + K (K + 1) / 4 ln M`, written out independently.
pub fn penalty(n: usize, k: usize, m: usize) -> f64 {
    n as f64 * (k as f64).ln() + (k * (k + 1)) as f64 / 4.0 * (m as f64).ln()
}

/// Exact singular triplets of a dense matrix.
#[derive(Debug, Clone)]
pub struct DenseSvd {
    /// Column-major left singular vectors, one `Vec` per column, sorted by
    /// decreasing singular value.
    pub left: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
}

/// One-sided Jacobi SVD of a row-major `rows x cols` matrix, truncated to
/// the leading `k` triplets.
pub fn dense_svd_reference(data: &[Vec<f64>], k: usize) -> DenseSvd {
    let rows = data.len();
    let cols = data.first().map_or(0, Vec::len);
    assert!(k <= cols && cols <= 300);
    let mut w: Vec<Vec<f64>> = (0..cols).map(|c| (0..rows).map(|r| data[r][c]).collect()).collect();
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (left, right) = w.split_at_mut(q);
                let (wp, wq) = (&mut left[p], &mut right[0]);
                for r in 0..rows {
                    let (x, y) = (wp[r], wq[r]);
                    wp[r] = c * x - s * y;
                    wq[r] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<(f64, usize)> = w.iter().enumerate().map(|(i, c)| (dot(c, c).sqrt(), i)).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut left = Vec::with_capacity(k);
    let mut sigma = Vec::with_capacity(k);
    for &(s, i) in order.iter().take(k) {
        sigma.push(s);
        left.push(if s > 0.0 { w[i].iter().map(|x| x / s).collect() } else { w[i].clone() });
    }
    DenseSvd { left, sigma }
}

/// `|| U1 - U2 (U2^T U1) ||_F`, an upper bound on the sine of the largest
/// principal angle between the column spans of two orthonormal bases.
pub fn subspace_distance(u1: &[Vec<f64>], u2: &[Vec<f64>]) -> f64 {
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let mut total = 0.0;
    for a in u1 {
        let mut resid = a.clone();
        for b in u2 {
            let c = dot(b, a);
            for (r, x) in resid.iter_mut().zip(b) {
                *r -= c * x;
            }
        }
        total += dot(&resid, &resid);
    }
    total.sqrt()
}

/// Dense copy of a sub-adjacency, `N x n`.
pub fn dense_of(a: &SubAdjacency) -> Vec<Vec<f64>> {
    (0..a.num_rows())
        .map(|i| (0..a.num_cols()).map(|s| if a.get(i, s) { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// A random block-structured sub-adjacency of at most 300 rows.
pub fn random_sub_adjacency(seed: u64, rows: usize, cols: usize, blocks: usize) -> SubAdjacency {
    let mut rng = StdRng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..rows).map(|_| rng.random_range(0..blocks)).collect();
    let p_in = rng.random_range(0.2..0.5);
    let p_out = rng.random_range(0.01..0.08);
    let mut edges = Vec::new();
    for i in 0..rows {
        for j in i + 1..rows {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    let g = SparseGraph::from_edges(rows, edges).unwrap().0;
    let mut pool: Vec<usize> = (0..rows).collect();
    for i in 0..cols {
        let j = rng.random_range(i..rows);
        pool.swap(i, j);
    }
    let nodes = NodeSet::new(rows, pool[..cols].to_vec()).unwrap();
    extract_subadjacency(&g, &nodes).unwrap()
}
