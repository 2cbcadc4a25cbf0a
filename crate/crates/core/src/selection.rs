//! The model-selection loop: draw one subsample, fit every candidate
//! `K = 1..=K_max` on it, score each fit, and return the best candidate.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::criterion::{
    count_statistics, estimate_b_dcsbm, estimate_b_sbm, loglik_bernoulli, loglik_poisson,
    loglik_poisson_blocks, penalty, smbic_score, weighted_pair_counts, FitFlag, FitResult,
};
use crate::error::{Error, Result};
use crate::graph::{degree_stats, SparseGraph};
use crate::rng::{derive_seed, stream};
use crate::spectral::{spectral_fit, Assignment, Model, SpectralConfig};
use crate::subsample::{extract_subadjacency, recommended_subsample_size, sample_nodes, NodeSet, SubAdjacency};

/// Where the density in the subsample-size rule comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum RhoSource {
    Known(f64),
    /// `2 |edges| / (N (N - 1))` of the input graph.
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SubsampleSize {
    Explicit { n: usize },
    /// `ceil(zeta ln N / rho)`, capped at `N`.
    Rule { zeta: f64, rho: RhoSource },
}

impl SubsampleSize {
    /// Shorthand constructor for an explicit size.
    pub const fn explicit(n: usize) -> Self {
        SubsampleSize::Explicit { n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub k_max: usize,
    pub model: Model,
    pub spectral: SpectralConfig,
    pub seed: u64,
    pub subsample: SubsampleSize,
    pub assignment: Assignment,
    /// Keep `sum_E A log(psi psi)` in the degree-corrected likelihood.
    pub include_psi_term: bool,
    /// Fit candidates concurrently on the current rayon pool.
    pub parallel: bool,
    /// Keep per-candidate labels, connectivity and degree estimates in the
    /// report.
    pub keep_fits: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            k_max: 10,
            model: Model::Sbm,
            spectral: SpectralConfig::default(),
            seed: 0,
            subsample: SubsampleSize::Rule {
                zeta: 1.5,
                rho: RhoSource::Estimated,
            },
            assignment: Assignment::Spectral,
            include_psi_term: true,
            parallel: true,
            keep_fits: true,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_max == 0 {
            return Err(Error::param("k_max must be at least 1"));
        }
        if self.spectral.kmeans.restarts == 0 {
            return Err(Error::param("k-means needs at least one restart"));
        }
        if let SubsampleSize::Rule { zeta, .. } = self.subsample {
            if !(zeta > 0.0 && zeta.is_finite()) {
                return Err(Error::param(format!("zeta must be positive, got {zeta}")));
            }
        }
        Ok(())
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub subsample_seconds: f64,
    /// One entry per candidate, in `K` order.
    pub fit_seconds: Vec<f64>,
    /// Candidate loop including aggregation.
    pub select_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub k_hat: usize,
    pub best_score: f64,
    pub per_k: Vec<FitResult>,
    pub num_nodes: usize,
    pub subsample_size: usize,
    pub pair_count: u64,
    pub subsample_fingerprint: u64,
    pub config: SelectionConfig,
    pub timings: Timings,
}

impl SelectionReport {
    /// `(K, score)` for every candidate.
    pub fn score_curve(&self) -> Vec<(usize, f64)> {
        self.per_k.iter().map(|f| (f.k, f.score)).collect()
    }

    /// `K_hat=<k>` followed by `K=<k> score=<s>` lines.
    pub fn summary(&self) -> String {
        let mut out = format!("K_hat={}\n", self.k_hat);
        for (k, s) in self.score_curve() {
            out.push_str(&format!("K={k} score={s:.6}\n"));
        }
        out
    }

    /// Candidates that carry any degeneracy flag.
    pub fn flagged(&self) -> impl Iterator<Item = &FitResult> {
        self.per_k.iter().filter(|f| !f.flags.is_empty())
    }

    /// The report with timings zeroed, for reproducibility comparisons.
    pub fn without_timings(&self) -> Self {
        SelectionReport {
            timings: Timings::default(),
            ..self.clone()
        }
    }
}

/// Subsample size the configuration asks for on `g`, capped at `N`.
pub fn resolve_subsample_size(g: &SparseGraph, cfg: &SelectionConfig) -> Result<usize> {
    let num_nodes = g.num_nodes();
    let n = match cfg.subsample {
        SubsampleSize::Explicit { n } => {
            if n > num_nodes {
                return Err(Error::param(format!(
                    "subsample size {n} exceeds the number of nodes {num_nodes}"
                )));
            }
            n
        }
        SubsampleSize::Rule { zeta, rho } => {
            let rho = match rho {
                RhoSource::Known(r) => r,
                RhoSource::Estimated => degree_stats(g).density_hat,
            };
            recommended_subsample_size(num_nodes as u64, rho, zeta)? as usize
        }
    };
    if n < cfg.k_max {
        return Err(Error::param(format!(
            "subsample size {n} is smaller than k_max {}",
            cfg.k_max
        )));
    }
    Ok(n)
}

/// Draws the subsample once, then runs the candidate loop on it.
pub fn select_k(g: &SparseGraph, cfg: &SelectionConfig) -> Result<SelectionReport> {
    cfg.validate()?;
    let start = Instant::now();
    let n = resolve_subsample_size(g, cfg)?;
    let nodes = sample_nodes(g.num_nodes(), n, derive_seed(cfg.seed, stream::SUBSAMPLE, 0))?;
    let a = extract_subadjacency(g, &nodes)?;
    let subsample_seconds = start.elapsed().as_secs_f64();
    let mut report = select_k_from_subsample(&a, cfg)?;
    report.timings.subsample_seconds = subsample_seconds;
    report.timings.total_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// As [`select_k`] with a caller-chosen node set.
pub fn select_k_with_nodes(g: &SparseGraph, nodes: &NodeSet, cfg: &SelectionConfig) -> Result<SelectionReport> {
    let start = Instant::now();
    let a = extract_subadjacency(g, nodes)?;
    let subsample_seconds = start.elapsed().as_secs_f64();
    let mut report = select_k_from_subsample(&a, cfg)?;
    report.timings.subsample_seconds = subsample_seconds;
    report.timings.total_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// The candidate loop on a fixed sub-adjacency.
pub fn select_k_from_subsample(a: &SubAdjacency, cfg: &SelectionConfig) -> Result<SelectionReport> {
    cfg.validate()?;
    let n = a.num_cols();
    if n < cfg.k_max {
        return Err(Error::param(format!(
            "subsample size {n} is smaller than k_max {}",
            cfg.k_max
        )));
    }
    let start = Instant::now();
    let fingerprint = a.fingerprint();
    let timed_fit = |k: usize| {
        let t = Instant::now();
        let fit = fit_candidate(a, k, cfg, fingerprint);
        (fit, t.elapsed().as_secs_f64())
    };
    let fits: Vec<(FitResult, f64)> = if cfg.parallel {
        (1..=cfg.k_max).into_par_iter().map(timed_fit).collect()
    } else {
        (1..=cfg.k_max).map(timed_fit).collect()
    };
    let (per_k, fit_seconds): (Vec<FitResult>, Vec<f64>) = fits.into_iter().unzip();

    // strict improvement only, so ties stay with the smaller K
    let mut best: Option<(usize, f64)> = None;
    for f in &per_k {
        if f.score.is_finite() && best.is_none_or(|(_, s)| f.score > s) {
            best = Some((f.k, f.score));
        }
    }
    let (k_hat, best_score) = best.ok_or_else(|| {
        let reasons: Vec<String> = per_k
            .iter()
            .flat_map(|f| f.flags.iter())
            .filter_map(|fl| match fl {
                FitFlag::Failed { message } => Some(message.clone()),
                _ => None,
            })
            .collect();
        Error::Numeric(format!("every candidate failed: {}", reasons.join("; ")))
    })?;
    let select_seconds = start.elapsed().as_secs_f64();
    Ok(SelectionReport {
        k_hat,
        best_score,
        per_k,
        num_nodes: a.num_rows(),
        subsample_size: n,
        pair_count: a.pair_count(),
        subsample_fingerprint: fingerprint,
        config: cfg.clone(),
        timings: Timings {
            subsample_seconds: 0.0,
            fit_seconds,
            select_seconds,
            total_seconds: select_seconds,
        },
    })
}

/// Label assignment, plug-in estimation and scoring for one candidate.
/// Failures are folded into the result as a `-inf` score.
pub fn fit_candidate(a: &SubAdjacency, k: usize, cfg: &SelectionConfig, fingerprint: u64) -> FitResult {
    match try_fit_candidate(a, k, cfg, fingerprint) {
        Ok(fit) => fit,
        Err(e) => FitResult::failed(k, e.to_string(), fingerprint),
    }
}

fn try_fit_candidate(a: &SubAdjacency, k: usize, cfg: &SelectionConfig, fingerprint: u64) -> Result<FitResult> {
    let seed = derive_seed(cfg.seed, stream::FIT, 0);
    let fit = spectral_fit(a, k, cfg.model, cfg.assignment, &cfg.spectral, seed)?;
    let counts = count_statistics(a, &fit.labeling)?;

    let mut flags = Vec::new();
    if fit.embedding.rank_deficient {
        flags.push(FitFlag::RankDeficient);
    }
    let empty = fit.labeling.cluster_sizes().iter().filter(|&&s| s == 0).count();
    if empty > 0 {
        flags.push(FitFlag::EmptyClusters { count: empty });
    }
    if !fit.fallback_nodes.is_empty() {
        flags.push(FitFlag::FallbackNodes {
            count: fit.fallback_nodes.len(),
        });
    }

    let (loglik, estimate) = match cfg.model {
        Model::Sbm => {
            let est = estimate_b_sbm(&counts);
            (loglik_bernoulli(&counts, &est.b), est)
        }
        Model::Dcsbm => {
            let psi = fit.psi.as_ref().expect("degree-corrected fit carries estimates");
            let w = weighted_pair_counts(a, &fit.labeling, psi)?;
            if w.zero_weight_edges > 0 {
                flags.push(FitFlag::ZeroWeightEdges {
                    count: w.zero_weight_edges,
                });
            }
            let est = estimate_b_dcsbm(&counts, &w);
            let ll = if cfg.include_psi_term {
                loglik_poisson(&counts, &w, &est.b)
            } else {
                loglik_poisson_blocks(&counts, &w, &est.b)
            };
            (ll, est)
        }
    };
    if !estimate.flagged.is_empty() {
        flags.push(FitFlag::ClampedCells {
            count: estimate.flagged.len(),
        });
    }
    let pen = penalty(a.num_cols() as u64, k, counts.m);
    let score = smbic_score(loglik, pen)?;
    let keep = cfg.keep_fits;
    Ok(FitResult {
        k,
        labels: keep.then_some(fit.labeling),
        b_hat: keep.then_some(estimate.b),
        psi_hat: if keep { fit.psi } else { None },
        loglik,
        penalty: pen,
        score,
        flags,
        subsample_fingerprint: fingerprint,
    })
}
