//! Lloyd's k-means with k-means++ seeding and restarts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed, stream, StdRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KmeansConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once no center moves farther than this.
    pub tol: f64,
}

impl Default for KmeansConfig {
    fn default() -> Self {
        KmeansConfig {
            restarts: 10,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub labels: Vec<usize>,
    /// `k x dim`, row-major.
    pub centers: Vec<f64>,
    pub wcss: f64,
    pub iterations: usize,
    /// Empty clusters re-seeded during the winning run.
    pub reseeded: usize,
}

/// Row-major points with a fixed dimension.
#[derive(Debug, Clone, Copy)]
pub struct Points<'a> {
    data: &'a [f64],
    dim: usize,
}

impl<'a> Points<'a> {
    pub fn new(data: &'a [f64], dim: usize) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(Error::param("point buffer length must be a multiple of dim"));
        }
        Ok(Points { data, dim })
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize) -> &'a [f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f64], centers: &[f64], dim: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.chunks_exact(dim).enumerate() {
        let d = sq_dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Within-cluster sum of squared distances to the assigned centers.
pub fn wcss(points: Points<'_>, labels: &[usize], centers: &[f64]) -> f64 {
    let dim = points.dim();
    (0..points.len())
        .map(|i| sq_dist(points.get(i), &centers[labels[i] * dim..(labels[i] + 1) * dim]))
        .sum()
}

/// k-means++ seeding: first center uniform, the rest drawn proportional to
/// squared distance to the nearest chosen center.
pub fn init_plus_plus(points: Points<'_>, k: usize, rng: &mut StdRng) -> Vec<f64> {
    let n = points.len();
    let dim = points.dim();
    let mut centers = Vec::with_capacity(k * dim);
    centers.extend_from_slice(points.get(rng.random_range(0..n)));
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(points.get(i), &centers[..dim])).collect();
    for _ in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 && total.is_finite() {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &d) in dist.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    chosen = Some(i);
                    break;
                }
            }
            // Rounding can leave `acc` a hair below `target`; take the last positive weight.
            chosen.unwrap_or_else(|| dist.iter().rposition(|&d| d > 0.0).unwrap_or(0))
        } else {
            rng.random_range(0..n)
        };
        let start = centers.len();
        centers.extend_from_slice(points.get(pick));
        for (i, d) in dist.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.get(i), &centers[start..start + dim]));
        }
    }
    centers
}

fn lloyd(points: Points<'_>, k: usize, cfg: &KmeansConfig, rng: &mut StdRng) -> KmeansResult {
    let n = points.len();
    let dim = points.dim();
    let mut centers = init_plus_plus(points, k, rng);
    let mut labels = vec![0usize; n];
    let mut iterations = 0;
    let mut reseeded = 0;
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    loop {
        for (i, label) in labels.iter_mut().enumerate() {
            *label = nearest(points.get(i), &centers, dim).0;
        }
        if iterations >= cfg.max_iters {
            break;
        }
        iterations += 1;

        sums.iter_mut().for_each(|s| *s = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (s, &x) in sums[l * dim..(l + 1) * dim].iter_mut().zip(points.get(i)) {
                *s += x;
            }
        }
        let mut new_centers = centers.clone();
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] == 0 {
                // Re-seed at the point lying farthest from its own center.
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .map(|i| {
                        let l = labels[i];
                        (i, sq_dist(points.get(i), &centers[l * dim..(l + 1) * dim]))
                    })
                    .fold(None, |best: Option<(usize, f64)>, (i, d)| match best {
                        Some((_, bd)) if bd >= d => best,
                        _ => Some((i, d)),
                    });
                if let Some((i, _)) = far {
                    taken[i] = true;
                    new_centers[c * dim..(c + 1) * dim].copy_from_slice(points.get(i));
                    reseeded += 1;
                }
            } else {
                let inv = 1.0 / counts[c] as f64;
                for (dst, &s) in new_centers[c * dim..(c + 1) * dim]
                    .iter_mut()
                    .zip(&sums[c * dim..(c + 1) * dim])
                {
                    *dst = s * inv;
                }
            }
        }
        let shift = centers
            .chunks_exact(dim)
            .zip(new_centers.chunks_exact(dim))
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centers = new_centers;
        if shift < cfg.tol {
            for (i, label) in labels.iter_mut().enumerate() {
                *label = nearest(points.get(i), &centers, dim).0;
            }
            break;
        }
    }
    let wcss = wcss(points, &labels, &centers);
    KmeansResult {
        labels,
        centers,
        wcss,
        iterations,
        reseeded,
    }
}

/// Best of `cfg.restarts` seeded Lloyd runs by within-cluster sum of squares.
pub fn kmeans(points: Points<'_>, k: usize, cfg: &KmeansConfig, seed: u64) -> Result<KmeansResult> {
    if k == 0 {
        return Err(Error::param("k-means needs k >= 1"));
    }
    if points.len() < k {
        return Err(Error::param(format!(
            "k-means with k = {k} needs at least {k} points, got {}",
            points.len()
        )));
    }
    let mut best: Option<KmeansResult> = None;
    for restart in 0..cfg.restarts.max(1) {
        let mut rng = rng_from_seed(derive_seed(seed, stream::KMEANS, restart as u64));
        let run = lloyd(points, k, cfg, &mut rng);
        if best.as_ref().is_none_or(|b| run.wcss < b.wcss) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}
