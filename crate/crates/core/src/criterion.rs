//! Block statistics over the independent-pair set of a subsample, plug-in
//! connectivity estimates, Bernoulli/Poisson profile log-likelihoods and the
//! SM-BIC penalty.
//!
//! The independent-pair set `E` holds every unordered pair with at least one
//! selected endpoint: selected-selected pairs once, and every
//! unselected-selected pair. Its size is `M = N n - n (n + 1) / 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{DegreeEstimates, Labeling};
use crate::subsample::SubAdjacency;

/// Floor (and, for probabilities, `1 - EPS` ceiling) applied to plug-in
/// connectivity estimates so every log term stays finite.
pub const EPS: f64 = 1e-9;

/// Dense symmetric `K x K` matrix stored in full, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockMatrix<T> {
    k: usize,
    data: Vec<T>,
}

impl<T: Copy + Default> BlockMatrix<T> {
    pub fn zeros(k: usize) -> Self {
        BlockMatrix {
            k,
            data: vec![T::default(); k * k],
        }
    }
}

impl<T: Copy> BlockMatrix<T> {
    pub fn from_fn(k: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(k * k);
        for a in 0..k {
            for b in 0..k {
                data.push(f(a, b));
            }
        }
        BlockMatrix { k, data }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, a: usize, b: usize) -> T {
        self.data[a * self.k + b]
    }

    /// Writes both `(a, b)` and `(b, a)`.
    pub fn set(&mut self, a: usize, b: usize, v: T) {
        self.data[a * self.k + b] = v;
        self.data[b * self.k + a] = v;
    }

    /// Upper triangle including the diagonal, `(a, b, value)` with `a <= b`.
    pub fn upper(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.k).flat_map(move |a| (a..self.k).map(move |b| (a, b, self.get(a, b))))
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.k.max(1)).map(<[T]>::to_vec).collect()
    }
}

/// Observed-edge counts `o_kl` and pair counts `n_kl` over `E`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub o: BlockMatrix<u64>,
    pub n_pairs: BlockMatrix<u64>,
    /// `|E|`.
    pub m: u64,
}

impl PairCounts {
    pub fn k(&self) -> usize {
        self.o.k()
    }

    /// Number of edges in `E`.
    pub fn total_edges(&self) -> u64 {
        self.o.upper().map(|(_, _, v)| v).sum()
    }
}

/// `psi`-weighted pair sums `n_kl(psi)` and `sum_E A_ij log(psi_i psi_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedPairCounts {
    pub n_psi: BlockMatrix<f64>,
    pub log_psi_edge_sum: f64,
    /// Edges of `E` whose endpoint weights multiply to zero; each contributes
    /// `ln EPS` to the log sum.
    pub zero_weight_edges: u64,
}

fn check_labels(a: &SubAdjacency, labels: &Labeling) -> Result<()> {
    if labels.labels.len() != a.num_rows() {
        return Err(Error::param(format!(
            "labeling covers {} nodes, network has {}",
            labels.labels.len(),
            a.num_rows()
        )));
    }
    if labels.k == 0 {
        return Err(Error::param("K must be at least 1"));
    }
    Ok(())
}

/// Visits each edge of `E` once as `(i, j)`: `j` selected, and `i` either
/// unselected or selected with `i < j`.
fn for_each_edge_in_e(a: &SubAdjacency, mut f: impl FnMut(usize, usize)) {
    let nodes = a.nodes();
    for (s, &j) in nodes.selected().iter().enumerate() {
        for &i in a.col(s) {
            if !nodes.is_selected(i) || i < j {
                f(i, j);
            }
        }
    }
}

/// Per-label sums over selected and unselected nodes of `w(i)`, plus the
/// sum of squares over selected nodes.
fn label_sums(a: &SubAdjacency, labels: &Labeling, w: impl Fn(usize) -> f64) -> [Vec<f64>; 3] {
    let k = labels.k;
    let nodes = a.nodes();
    let mut sel = vec![0.0; k];
    let mut sel_sq = vec![0.0; k];
    let mut unsel = vec![0.0; k];
    for (i, &g) in labels.labels.iter().enumerate() {
        let x = w(i);
        if nodes.is_selected(i) {
            sel[g] += x;
            sel_sq[g] += x * x;
        } else {
            unsel[g] += x;
        }
    }
    [sel, sel_sq, unsel]
}

/// Accumulates `o` with one pass over the nonzeros and `n_kl` in closed form
/// from per-label selected/unselected sizes.
pub fn count_statistics(a: &SubAdjacency, labels: &Labeling) -> Result<PairCounts> {
    check_labels(a, labels)?;
    let k = labels.k;
    let g = &labels.labels;
    let mut o = BlockMatrix::<u64>::zeros(k);
    for_each_edge_in_e(a, |i, j| {
        let (x, y) = (g[i].min(g[j]), g[i].max(g[j]));
        o.set(x, y, o.get(x, y) + 1);
    });

    let nodes = a.nodes();
    let mut sel = vec![0u64; k];
    let mut unsel = vec![0u64; k];
    for (i, &l) in g.iter().enumerate() {
        if nodes.is_selected(i) {
            sel[l] += 1;
        } else {
            unsel[l] += 1;
        }
    }
    let n_pairs = BlockMatrix::from_fn(k, |x, y| {
        if x == y {
            sel[x] * unsel[x] + sel[x] * sel[x].saturating_sub(1) / 2
        } else {
            sel[x] * unsel[y] + unsel[x] * sel[y] + sel[x] * sel[y]
        }
    });
    Ok(PairCounts {
        o,
        n_pairs,
        m: a.pair_count(),
    })
}

/// `n_kl(psi)` in closed form from per-label weight sums, and the log-weight
/// sum over the edges of `E`.
pub fn weighted_pair_counts(
    a: &SubAdjacency,
    labels: &Labeling,
    psi: &DegreeEstimates,
) -> Result<WeightedPairCounts> {
    check_labels(a, labels)?;
    let psi = &psi.psi_hat;
    if psi.len() != a.num_rows() {
        return Err(Error::param(format!(
            "degree estimates cover {} nodes, network has {}",
            psi.len(),
            a.num_rows()
        )));
    }
    if let Some(bad) = psi.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::param(format!("degree estimate {bad} is not a finite non-negative number")));
    }
    let [sel, sel_sq, unsel] = label_sums(a, labels, |i| psi[i]);
    let n_psi = BlockMatrix::from_fn(labels.k, |x, y| {
        let v = if x == y {
            sel[x] * unsel[x] + 0.5 * (sel[x] * sel[x] - sel_sq[x])
        } else {
            sel[x] * unsel[y] + unsel[x] * sel[y] + sel[x] * sel[y]
        };
        // cancellation in the diagonal can leave a tiny negative residue
        v.max(0.0)
    });

    let mut terms = Vec::with_capacity(a.nnz());
    let mut zero_weight_edges = 0;
    for_each_edge_in_e(a, |i, j| {
        let w = psi[i] * psi[j];
        if w > 0.0 {
            terms.push(w.ln());
        } else {
            zero_weight_edges += 1;
            terms.push(EPS.ln());
        }
    });
    Ok(WeightedPairCounts {
        n_psi,
        log_psi_edge_sum: terms.iter().sum(),
        zero_weight_edges,
    })
}

/// Rescales `psi` so that it sums to the cluster size within every cluster.
/// Clusters whose weights are all zero are left untouched.
pub fn normalize_psi_per_cluster(psi: &DegreeEstimates, labels: &Labeling) -> Result<DegreeEstimates> {
    if psi.psi_hat.len() != labels.labels.len() {
        return Err(Error::param("degree estimates and labeling differ in length"));
    }
    let mut sum = vec![0.0; labels.k];
    let mut size = vec![0usize; labels.k];
    for (&p, &g) in psi.psi_hat.iter().zip(&labels.labels) {
        sum[g] += p;
        size[g] += 1;
    }
    let psi_hat = psi
        .psi_hat
        .iter()
        .zip(&labels.labels)
        .map(|(&p, &g)| if sum[g] > 0.0 { p * size[g] as f64 / sum[g] } else { p })
        .collect();
    Ok(DegreeEstimates {
        psi_hat,
        zero_rows: psi.zero_rows.clone(),
    })
}

/// Why an entry of an estimated connectivity matrix was adjusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellFlag {
    /// No pairs between the two blocks (an empty cluster); set to `EPS`.
    NoPairs,
    /// Ratio was below `EPS` (no observed edges).
    ClampedLow,
    /// Ratio was above `1 - EPS` (every pair connected).
    ClampedHigh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlaggedCell {
    pub k: usize,
    pub l: usize,
    pub flag: CellFlag,
}

/// A plug-in connectivity estimate with the cells that had to be adjusted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEstimate {
    pub b: BlockMatrix<f64>,
    pub flagged: Vec<FlaggedCell>,
}

/// `o_kl / n_kl`, clamped into `[EPS, 1 - EPS]`.
pub fn estimate_b_sbm(c: &PairCounts) -> BlockEstimate {
    let k = c.k();
    let mut b = BlockMatrix::zeros(k);
    let mut flagged = Vec::new();
    for (x, y, n) in c.n_pairs.upper() {
        let (v, flag) = if n == 0 {
            (EPS, Some(CellFlag::NoPairs))
        } else {
            let r = c.o.get(x, y) as f64 / n as f64;
            if r < EPS {
                (EPS, Some(CellFlag::ClampedLow))
            } else if r > 1.0 - EPS {
                (1.0 - EPS, Some(CellFlag::ClampedHigh))
            } else {
                (r, None)
            }
        };
        b.set(x, y, v);
        if let Some(flag) = flag {
            flagged.push(FlaggedCell { k: x, l: y, flag });
        }
    }
    BlockEstimate { b, flagged }
}

/// `o_kl / n_kl(psi)`, floored at `EPS`; no upper clamp (a Poisson rate).
pub fn estimate_b_dcsbm(c: &PairCounts, w: &WeightedPairCounts) -> BlockEstimate {
    let k = c.k();
    let mut b = BlockMatrix::zeros(k);
    let mut flagged = Vec::new();
    for (x, y, n) in w.n_psi.upper() {
        let (v, flag) = if n <= 0.0 {
            (EPS, Some(CellFlag::NoPairs))
        } else {
            let r = c.o.get(x, y) as f64 / n;
            if r < EPS {
                (EPS, Some(CellFlag::ClampedLow))
            } else {
                (r, None)
            }
        };
        b.set(x, y, v);
        if let Some(flag) = flag {
            flagged.push(FlaggedCell { k: x, l: y, flag });
        }
    }
    BlockEstimate { b, flagged }
}

/// Sums after sorting so the result does not depend on how blocks are
/// numbered.
fn order_free_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// `x ln y` with the `0 ln 0 = 0` convention.
fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

/// `sum_{k<=l} o ln B + (n - o) ln(1 - B)`.
pub fn loglik_bernoulli(c: &PairCounts, b: &BlockMatrix<f64>) -> f64 {
    order_free_sum(
        c.n_pairs
            .upper()
            .map(|(x, y, n)| {
                let o = c.o.get(x, y) as f64;
                let p = b.get(x, y);
                xlogy(o, p) + xlogy(n as f64 - o, 1.0 - p)
            })
            .collect(),
    )
}

/// Block part of the Poisson log-likelihood, `sum_{k<=l} o ln B - n(psi) B`.
pub fn loglik_poisson_blocks(c: &PairCounts, w: &WeightedPairCounts, b: &BlockMatrix<f64>) -> f64 {
    order_free_sum(
        w.n_psi
            .upper()
            .map(|(x, y, n)| {
                let p = b.get(x, y);
                xlogy(c.o.get(x, y) as f64, p) - n * p
            })
            .collect(),
    )
}

/// `sum_E A ln(psi psi) + sum_{k<=l} o ln B - n(psi) B`.
pub fn loglik_poisson(c: &PairCounts, w: &WeightedPairCounts, b: &BlockMatrix<f64>) -> f64 {
    w.log_psi_edge_sum + loglik_poisson_blocks(c, w, b)
}

/// `n ln K + K (K + 1) / 4 ln M`.
pub fn penalty(n: u64, k: usize, m: u64) -> f64 {
    let kf = k as f64;
    n as f64 * kf.ln() + kf * (kf + 1.0) / 4.0 * (m as f64).ln()
}

/// `loglik - pen`; both must be finite.
pub fn smbic_score(loglik: f64, pen: f64) -> Result<f64> {
    if !loglik.is_finite() || !pen.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite criterion input (loglik = {loglik}, penalty = {pen})"
        )));
    }
    Ok(loglik - pen)
}

/// Degeneracies noticed while fitting one candidate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum FitFlag {
    /// Some requested singular value was numerically zero.
    RankDeficient,
    /// Clusters left empty by the assignment.
    EmptyClusters { count: usize },
    /// Nodes labelled by a fallback rule (zero embedding row or no links into
    /// the subsample).
    FallbackNodes { count: usize },
    /// Connectivity cells adjusted by the clamp.
    ClampedCells { count: usize },
    /// Edges of `E` with zero degree weight product.
    ZeroWeightEdges { count: u64 },
    /// The candidate could not be fitted; its score is `-inf`.
    Failed { message: String },
}

/// One candidate `K`, fitted and scored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub k: usize,
    pub labels: Option<Labeling>,
    pub b_hat: Option<BlockMatrix<f64>>,
    pub psi_hat: Option<DegreeEstimates>,
    /// `NaN` (written as `null`) for a failed candidate.
    #[serde(with = "nan_as_null")]
    pub loglik: f64,
    #[serde(with = "nan_as_null")]
    pub penalty: f64,
    /// `loglik - penalty`, or `-inf` for a failed candidate.
    #[serde(with = "finite_or_neg_inf")]
    pub score: f64,
    pub flags: Vec<FitFlag>,
    /// Fingerprint of the sub-adjacency this candidate was scored on.
    pub subsample_fingerprint: u64,
}

impl FitResult {
    pub fn failed(k: usize, message: String, subsample_fingerprint: u64) -> Self {
        FitResult {
            k,
            labels: None,
            b_hat: None,
            psi_hat: None,
            loglik: f64::NAN,
            penalty: f64::NAN,
            score: f64::NEG_INFINITY,
            flags: vec![FitFlag::Failed { message }],
            subsample_fingerprint,
        }
    }

    pub fn is_failed(&self) -> bool {
        self.flags.iter().any(|f| matches!(f, FitFlag::Failed { .. }))
    }
}

/// JSON has no infinities; a failed score is written as `null`.
mod finite_or_neg_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SparseGraph;
    use crate::subsample::{extract_subadjacency, NodeSet};

    fn sub(num_nodes: usize, edges: &[(usize, usize)], selected: Vec<usize>) -> SubAdjacency {
        let g = SparseGraph::from_edges(num_nodes, edges.iter().copied()).unwrap().0;
        extract_subadjacency(&g, &NodeSet::new(num_nodes, selected).unwrap()).unwrap()
    }

    fn path3() -> SubAdjacency {
        sub(3, &[(0, 1), (1, 2)], vec![0, 1])
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn path_counts() {
        let a = path3();
        let lab = Labeling::new(vec![0, 1, 0], 2).unwrap();
        let c = count_statistics(&a, &lab).unwrap();
        assert_eq!(c.n_pairs.rows(), vec![vec![1, 2], vec![2, 0]]);
        assert_eq!(c.o.rows(), vec![vec![0, 2], vec![2, 0]]);
        assert_eq!(c.m, 3);
    }

    #[test]
    fn single_block_counts() {
        let a = sub(6, &[(0, 1), (1, 2), (3, 4), (4, 5), (0, 5)], vec![1, 4]);
        let c = count_statistics(&a, &Labeling::new(vec![0; 6], 1).unwrap()).unwrap();
        assert_eq!(c.n_pairs.get(0, 0), c.m);
        // every listed edge touches node 1 or 4
        assert_eq!(c.o.get(0, 0), 4);
        let empty = sub(6, &[], vec![1, 4]);
        let c = count_statistics(&empty, &Labeling::new(vec![0, 1, 0, 1, 0, 1], 2).unwrap()).unwrap();
        assert_eq!(c.total_edges(), 0);
        assert_eq!(c.n_pairs.upper().map(|t| t.2).sum::<u64>(), c.m);
    }

    #[test]
    fn unit_weights_match_counts() {
        let a = path3();
        let lab = Labeling::new(vec![0, 1, 0], 2).unwrap();
        let c = count_statistics(&a, &lab).unwrap();
        let psi = DegreeEstimates {
            psi_hat: vec![1.0; 3],
            zero_rows: vec![],
        };
        let w = weighted_pair_counts(&a, &lab, &psi).unwrap();
        assert_eq!(w.log_psi_edge_sum, 0.0);
        for (x, y, n) in c.n_pairs.upper() {
            assert_eq!(w.n_psi.get(x, y), n as f64);
        }
        let sbm = estimate_b_sbm(&c);
        let dc = estimate_b_dcsbm(&c, &w);
        // identical before the upper clamp: only the saturated cell differs
        assert_eq!(dc.b.get(0, 0), sbm.b.get(0, 0));
        assert_eq!(dc.b.get(0, 1), 1.0);
        assert_eq!(sbm.b.get(0, 1), 1.0 - EPS);
    }

    #[test]
    fn weighted_examples() {
        let a = path3();
        let lab = Labeling::new(vec![0, 1, 0], 2).unwrap();
        let psi = DegreeEstimates {
            psi_hat: vec![1.0, 2.0, 1.0],
            zero_rows: vec![],
        };
        let w = weighted_pair_counts(&a, &lab, &psi).unwrap();
        assert_eq!(w.n_psi.get(0, 1), 4.0);
        assert_eq!(w.n_psi.get(0, 0), 1.0);

        let single = sub(2, &[(0, 1)], vec![0]);
        let lab = Labeling::new(vec![0, 0], 1).unwrap();
        let psi = DegreeEstimates {
            psi_hat: vec![2.0, 0.5],
            zero_rows: vec![],
        };
        let w = weighted_pair_counts(&single, &lab, &psi).unwrap();
        assert_eq!(w.n_psi.get(0, 0), 1.0);
        assert_eq!(w.log_psi_edge_sum, 0.0);
    }

    #[test]
    fn zero_weight_edge_is_guarded() {
        let single = sub(2, &[(0, 1)], vec![0]);
        let lab = Labeling::new(vec![0, 0], 1).unwrap();
        let psi = DegreeEstimates {
            psi_hat: vec![0.0, 1.0],
            zero_rows: vec![0],
        };
        let w = weighted_pair_counts(&single, &lab, &psi).unwrap();
        assert_eq!(w.zero_weight_edges, 1);
        assert_eq!(w.log_psi_edge_sum, EPS.ln());
    }

    #[test]
    fn sbm_estimates() {
        let a = path3();
        let c = count_statistics(&a, &Labeling::new(vec![0, 1, 0], 2).unwrap()).unwrap();
        let est = estimate_b_sbm(&c);
        assert_eq!(est.b.rows(), vec![vec![EPS, 1.0 - EPS], vec![1.0 - EPS, EPS]]);
        assert_eq!(
            est.flagged,
            vec![
                FlaggedCell { k: 0, l: 0, flag: CellFlag::ClampedLow },
                FlaggedCell { k: 0, l: 1, flag: CellFlag::ClampedHigh },
                FlaggedCell { k: 1, l: 1, flag: CellFlag::NoPairs },
            ]
        );

        let mut c2 = c.clone();
        c2.o = BlockMatrix::from_fn(1, |_, _| 2);
        c2.n_pairs = BlockMatrix::from_fn(1, |_, _| 3);
        let est = estimate_b_sbm(&c2);
        assert_eq!(est.b.get(0, 0), 2.0 / 3.0);
        assert!(est.flagged.is_empty());
    }

    #[test]
    fn dcsbm_estimates() {
        let c = PairCounts {
            o: BlockMatrix::from_fn(2, |x, y| if x == y { 2 } else { 0 }),
            n_pairs: BlockMatrix::from_fn(2, |_, _| 4),
            m: 12,
        };
        let w = WeightedPairCounts {
            n_psi: BlockMatrix::from_fn(2, |_, _| 4.0),
            log_psi_edge_sum: 0.0,
            zero_weight_edges: 0,
        };
        let est = estimate_b_dcsbm(&c, &w);
        assert_eq!(est.b.get(0, 0), 0.5);
        assert_eq!(est.b.get(0, 1), EPS);
        assert_eq!(est.flagged.len(), 1);
    }

    #[test]
    fn bernoulli_hand_example() {
        // triangle minus (2, 0), S = {0, 1}
        let a = sub(3, &[(0, 1), (1, 2)], vec![0, 1]);
        let c = count_statistics(&a, &Labeling::new(vec![0; 3], 1).unwrap()).unwrap();
        assert_eq!((c.o.get(0, 0), c.n_pairs.get(0, 0)), (2, 3));
        let b = estimate_b_sbm(&c).b;
        let ll = loglik_bernoulli(&c, &b);
        assert!(close(ll, -1.909543, 5e-7), "{ll}");
        assert!(close(ll, 2.0 * (2.0f64 / 3.0).ln() + (1.0f64 / 3.0).ln(), 1e-12));
    }

    #[test]
    fn bernoulli_degenerate_cases() {
        let empty = sub(5, &[], vec![0, 3]);
        let c = count_statistics(&empty, &Labeling::new(vec![0; 5], 1).unwrap()).unwrap();
        let ll = loglik_bernoulli(&c, &estimate_b_sbm(&c).b);
        assert!(ll <= 0.0 && ll > -1e-7);

        let full = sub(3, &[(0, 1), (0, 2), (1, 2)], vec![0]);
        let c = count_statistics(&full, &Labeling::new(vec![0; 3], 1).unwrap()).unwrap();
        let ll = loglik_bernoulli(&c, &estimate_b_sbm(&c).b);
        assert!(ll <= 0.0 && ll > -1e-7);
    }

    #[test]
    fn poisson_single_pair() {
        let single = sub(2, &[(0, 1)], vec![0]);
        let lab = Labeling::new(vec![0, 0], 1).unwrap();
        let c = count_statistics(&single, &lab).unwrap();
        let psi = DegreeEstimates {
            psi_hat: vec![1.0, 1.0],
            zero_rows: vec![],
        };
        let w = weighted_pair_counts(&single, &lab, &psi).unwrap();
        let b = estimate_b_dcsbm(&c, &w).b;
        assert_eq!(b.get(0, 0), 1.0);
        assert_eq!(loglik_poisson(&c, &w, &b), -1.0);

        let empty = sub(4, &[], vec![0]);
        let lab = Labeling::new(vec![0; 4], 1).unwrap();
        let c = count_statistics(&empty, &lab).unwrap();
        let w = weighted_pair_counts(
            &empty,
            &lab,
            &DegreeEstimates {
                psi_hat: vec![1.0; 4],
                zero_rows: vec![],
            },
        )
        .unwrap();
        let ll = loglik_poisson(&c, &w, &estimate_b_dcsbm(&c, &w).b);
        assert!(close(ll, -EPS * 3.0, 1e-15));
    }

    #[test]
    fn penalty_values() {
        assert!(close(penalty(2, 1, 3), 0.549306, 5e-7));
        assert_eq!(penalty(7, 1, 3), 0.5 * 3f64.ln());
        // 100 ln 2 + 1.5 ln 1000 = 79.676351 (to six decimals)
        assert!(close(penalty(100, 2, 1000), 79.676351, 5e-7));
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=20 {
            let p = penalty(500, k, 1_000_000);
            assert!(p > prev);
            prev = p;
        }
    }

    #[test]
    fn score_arithmetic() {
        assert!(close(smbic_score(-1.909543, 0.549306).unwrap(), -2.458849, 1e-12));
        assert_eq!(smbic_score(-3.5, 0.0).unwrap(), -3.5);
        assert_eq!(smbic_score(0.0, 5.0).unwrap(), -5.0);
        assert!(smbic_score(f64::NAN, 1.0).is_err());
        assert!(smbic_score(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn label_permutation_is_bit_identical() {
        let edges = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0), (0, 3), (1, 4), (2, 6), (6, 7)];
        let a = sub(8, &edges, vec![0, 2, 5, 7]);
        let labels = vec![0, 1, 2, 0, 1, 2, 0, 1];
        let perm = [2, 0, 1];
        let permuted: Vec<usize> = labels.iter().map(|&l| perm[l]).collect();
        let psi = DegreeEstimates {
            psi_hat: vec![0.3, 1.7, 0.9, 1.1, 0.5, 2.0, 1.3, 0.77],
            zero_rows: vec![],
        };
        let run = |lab: Vec<usize>| {
            let lab = Labeling::new(lab, 3).unwrap();
            let c = count_statistics(&a, &lab).unwrap();
            let w = weighted_pair_counts(&a, &lab, &psi).unwrap();
            (
                loglik_bernoulli(&c, &estimate_b_sbm(&c).b),
                loglik_poisson(&c, &w, &estimate_b_dcsbm(&c, &w).b),
            )
        };
        let (b1, p1) = run(labels);
        let (b2, p2) = run(permuted);
        assert_eq!(b1.to_bits(), b2.to_bits());
        assert_eq!(p1.to_bits(), p2.to_bits());
    }

    #[test]
    fn psi_normalization() {
        let psi = DegreeEstimates {
            psi_hat: vec![1.0, 3.0, 0.0, 0.0],
            zero_rows: vec![2, 3],
        };
        let lab = Labeling::new(vec![0, 0, 1, 1], 2).unwrap();
        let out = normalize_psi_per_cluster(&psi, &lab).unwrap();
        assert_eq!(out.psi_hat, vec![0.5, 1.5, 0.0, 0.0]);
    }

    #[test]
    fn failed_fit_round_trips_through_json() {
        let f = FitResult::failed(3, "boom".into(), 42);
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"score\":null"));
        let back: FitResult = serde_json::from_str(&s).unwrap();
        assert_eq!(back.score, f64::NEG_INFINITY);
        assert!(back.is_failed());
    }
}
