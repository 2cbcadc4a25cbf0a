//! Randomized truncated SVD of the sub-adjacency (range finder with block
//! power iterations followed by a small dense SVD).

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, StdRng};
use crate::subsample::SubAdjacency;

/// Singular values below this fraction of `max(sigma_1, 1)` count as zero.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvdConfig {
    /// Extra sketch columns beyond `K`.
    pub oversampling: usize,
    /// Power iterations always performed.
    pub power_iters: usize,
    /// When set, keep iterating until every Ritz residual
    /// `||A v_k - sigma_k u_k||` is at most `tol * sigma_1`.
    pub tol: Option<f64>,
    /// Hard cap on power iterations when `tol` is set.
    pub max_power_iters: usize,
}

impl Default for SvdConfig {
    fn default() -> Self {
        SvdConfig {
            oversampling: 10,
            power_iters: 2,
            tol: Some(1e-2),
            max_power_iters: 200,
        }
    }
}

/// Top-`K` left singular vectors of the sub-adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    /// `N x K`, orthonormal columns.
    pub vectors: DMatrix<f64>,
    /// Non-increasing, non-negative.
    pub sigma: Vec<f64>,
    /// Some requested singular value is numerically zero; the matching
    /// columns complete an orthonormal basis.
    pub rank_deficient: bool,
    pub power_iters: usize,
    /// Largest residual relative to `sigma_1` at exit.
    pub residual: f64,
}

impl Embedding {
    pub fn k(&self) -> usize {
        self.sigma.len()
    }

    pub fn num_rows(&self) -> usize {
        self.vectors.nrows()
    }

    /// Row `i` of the embedding.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.vectors.row(i).iter().copied().collect()
    }
}

fn gaussian_block(rows: usize, cols: usize, rng: &mut StdRng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// In-place Gram-Schmidt (two passes) on the columns of `m`.
///
/// Columns that vanish against their predecessors are replaced by Gaussian
/// vectors from `rng`; the return value counts such replacements. Rows that
/// are identically zero stay exactly zero unless a replacement happens.
pub fn orthonormalize(m: &mut DMatrix<f64>, rng: &mut StdRng) -> usize {
    orthonormalize_within(m, rng, None)
}

/// As [`orthonormalize`], but replacement vectors are drawn on the rows
/// marked in `support` while that subspace still has room, so rows outside it
/// stay exactly zero.
pub fn orthonormalize_within(m: &mut DMatrix<f64>, rng: &mut StdRng, support: Option<&[bool]>) -> usize {
    let (rows, cols) = m.shape();
    let mut replaced = 0;
    let data = m.as_mut_slice();
    for c in 0..cols {
        let mut attempts = 0;
        loop {
            let (done, rest) = data.split_at_mut(c * rows);
            let cur = &mut rest[..rows];
            let original = norm(cur);
            for _pass in 0..2 {
                for prev in done.chunks_exact(rows) {
                    let r = dot(prev, cur);
                    for (x, &p) in cur.iter_mut().zip(prev) {
                        *x -= r * p;
                    }
                }
            }
            let len = norm(cur);
            if len > 1e-10 * original && len > f64::MIN_POSITIVE {
                cur.iter_mut().for_each(|x| *x /= len);
                break;
            }
            attempts += 1;
            replaced += 1;
            assert!(attempts < 24, "could not complete an orthonormal basis");
            // After a few misses the support is exhausted; use every row.
            let restrict = support.filter(|_| attempts <= 8);
            for (r, x) in cur.iter_mut().enumerate() {
                *x = match restrict {
                    Some(mask) if !mask[r] => 0.0,
                    _ => StandardNormal.sample(rng),
                };
            }
        }
    }
    replaced
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn apply(a: &SubAdjacency, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(a.num_rows(), x.ncols());
    a.mul_dense(x.as_slice(), x.ncols(), y.as_mut_slice());
    y
}

fn apply_transpose(a: &SubAdjacency, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(a.num_cols(), x.ncols());
    a.mul_dense_transpose(x.as_slice(), x.ncols(), y.as_mut_slice());
    y
}

struct Ritz {
    left: DMatrix<f64>,
    sigma: Vec<f64>,
    residual: f64,
}

/// Rayleigh-Ritz on the current basis `q`: SVD of `q' A`, then the largest
/// residual among the leading `k` triplets.
fn ritz(a: &SubAdjacency, q: &DMatrix<f64>, k: usize) -> Result<Ritz> {
    // (q' A)' = A' q is n x l; its SVD is W S Z', so q' A = Z S W'.
    let bt = apply_transpose(a, q);
    let svd = bt.svd(true, true);
    let w = svd.u.ok_or_else(|| Error::Numeric("SVD did not return vectors".into()))?;
    let zt = svd.v_t.ok_or_else(|| Error::Numeric("SVD did not return vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| {
        svd.singular_values[y]
            .total_cmp(&svd.singular_values[x])
            .then(x.cmp(&y))
    });
    let order = &order[..k];
    let sigma: Vec<f64> = order.iter().map(|&o| svd.singular_values[o].max(0.0)).collect();
    let z = DMatrix::from_fn(zt.ncols(), k, |r, c| zt[(order[c], r)]);
    let right = DMatrix::from_fn(w.nrows(), k, |r, c| w[(r, order[c])]);
    let left = q * &z;

    let scale = sigma.first().copied().unwrap_or(0.0);
    let mut residual = 0.0f64;
    if scale > 0.0 {
        let av = apply(a, &right);
        for c in 0..k {
            let diff = (av.column(c) - left.column(c) * sigma[c]).norm();
            residual = residual.max(diff / scale);
        }
    }
    Ok(Ritz {
        left,
        sigma,
        residual,
    })
}

/// Flips each column so its largest-magnitude entry (first on ties) is positive.
fn fix_signs(m: &mut DMatrix<f64>) {
    for c in 0..m.ncols() {
        let mut best = 0usize;
        let mut best_abs = -1.0;
        for (r, &v) in m.column(c).iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = r;
            }
        }
        if m[(best, c)] < 0.0 {
            m.column_mut(c).neg_mut();
        }
    }
}

pub fn truncated_svd(a: &SubAdjacency, k: usize, cfg: &SvdConfig, seed: u64) -> Result<Embedding> {
    let n = a.num_cols();
    if k == 0 || k > n {
        return Err(Error::param(format!(
            "embedding dimension {k} must lie in [1, {n}] (subsample size)"
        )));
    }
    if k > a.num_rows() {
        return Err(Error::param("embedding dimension exceeds the number of nodes"));
    }
    let width = (k + cfg.oversampling).min(n).min(a.num_rows());
    let mut rng = rng_from_seed(seed);
    let support: Vec<bool> = (0..a.num_rows()).map(|i| !a.row(i).is_empty()).collect();
    let support = Some(support.as_slice());

    let omega = gaussian_block(n, width, &mut rng);
    let mut q = apply(a, &omega);
    orthonormalize_within(&mut q, &mut rng, support);

    let mut power_iters = 0;
    let step = |q: &mut DMatrix<f64>, rng: &mut StdRng| {
        let mut z = apply_transpose(a, q);
        orthonormalize(&mut z, rng);
        *q = apply(a, &z);
        orthonormalize_within(q, rng, support);
    };
    for _ in 0..cfg.power_iters {
        step(&mut q, &mut rng);
        power_iters += 1;
    }
    let mut result = ritz(a, &q, k)?;
    if let Some(tol) = cfg.tol {
        while result.residual > tol && power_iters < cfg.max_power_iters {
            step(&mut q, &mut rng);
            power_iters += 1;
            result = ritz(a, &q, k)?;
        }
    }

    let Ritz {
        left: mut vectors,
        sigma,
        residual,
    } = result;
    let floor = RANK_TOL * sigma.first().copied().unwrap_or(0.0).max(1.0);
    let rank_deficient = sigma.iter().any(|&s| s <= floor);
    // Re-orthonormalize to remove the rounding left by the small SVD.
    orthonormalize_within(&mut vectors, &mut rng, support);
    fix_signs(&mut vectors);
    Ok(Embedding {
        vectors,
        sigma,
        rank_deficient,
        power_iters,
        residual,
    })
}
