//! Monte-Carlo experiment harness: grids of generator settings, seeded
//! replicates of generate-then-select, and Prob/Mean/CPU summaries.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::rng::{derive_seed, stream};
use crate::selection::{select_k, select_k_from_subsample, RhoSource, SelectionConfig, SubsampleSize};
use crate::spectral::{Assignment, Model, SpectralConfig};
use crate::subsample::{extract_subadjacency, recommended_subsample_size, sample_nodes};
use crate::synth::{sample_dcsbm, sample_gsbm_with_outliers, sample_sbm, DcsbmParams, OutlierParams, SbmParams};

/// A density rule `c * N^p`, written like `n^-0.5`, `0.5*n^-0.5` or `0.02`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoRule {
    pub coef: f64,
    pub exponent: f64,
}

impl RhoRule {
    pub fn constant(c: f64) -> Self {
        RhoRule { coef: c, exponent: 0.0 }
    }

    pub fn eval(&self, num_nodes: usize) -> f64 {
        self.coef * (num_nodes as f64).powf(self.exponent)
    }
}

impl fmt::Display for RhoRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.coef == 1.0, self.exponent == 0.0) {
            (_, true) => write!(f, "{}", self.coef),
            (true, false) => write!(f, "n^{}", self.exponent),
            (false, false) => write!(f, "{}*n^{}", self.coef, self.exponent),
        }
    }
}

impl FromStr for RhoRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::param(format!("invalid density rule {s:?}: {why}"));
        let mut coef = 1.0_f64;
        let mut exponent = 0.0_f64;
        let mut seen_power = false;
        for factor in s.split('*').map(str::trim) {
            if factor.is_empty() {
                return Err(bad("empty factor"));
            }
            if let Some(rest) = factor.strip_prefix(['n', 'N']) {
                if seen_power {
                    return Err(bad("more than one power of n"));
                }
                seen_power = true;
                exponent = match rest.trim().strip_prefix('^') {
                    None if rest.trim().is_empty() => 1.0,
                    None => return Err(bad("expected '^' after n")),
                    Some(e) => {
                        let e = e.trim();
                        let e = e
                            .strip_prefix('(')
                            .and_then(|x| x.strip_suffix(')'))
                            .unwrap_or(e);
                        e.trim().parse().map_err(|_| bad("exponent is not a number"))?
                    }
                };
            } else {
                coef *= factor.parse::<f64>().map_err(|_| bad("factor is not a number"))?;
            }
        }
        if !(coef.is_finite() && coef > 0.0 && exponent.is_finite()) {
            return Err(bad("coefficient must be positive and finite"));
        }
        Ok(RhoRule { coef, exponent })
    }
}

impl Serialize for RhoRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RhoRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Sbm,
    Dcsbm,
    /// Block model plus `m` outlier nodes.
    Gsbm,
}

impl Generator {
    pub fn name(self) -> &'static str {
        match self {
            Generator::Sbm => "sbm",
            Generator::Dcsbm => "dcsbm",
            Generator::Gsbm => "gsbm",
        }
    }

    fn default_model(self) -> Model {
        match self {
            Generator::Dcsbm => Model::Dcsbm,
            _ => Model::Sbm,
        }
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sbm" => Ok(Generator::Sbm),
            "dcsbm" => Ok(Generator::Dcsbm),
            "gsbm" | "gsbm-outlier" | "outlier" => Ok(Generator::Gsbm),
            other => Err(Error::param(format!("unknown generator {other:?}"))),
        }
    }
}

fn parse_model(s: &str) -> Result<Model> {
    match s.trim().to_ascii_lowercase().as_str() {
        "sbm" => Ok(Model::Sbm),
        "dcsbm" => Ok(Model::Dcsbm),
        other => Err(Error::param(format!("unknown model {other:?}"))),
    }
}

fn parse_assignment(s: &str) -> Result<Assignment> {
    match s.trim().to_ascii_lowercase().as_str() {
        "spectral" => Ok(Assignment::Spectral),
        "majority-link" => Ok(Assignment::MajorityLink),
        other => Err(Error::param(format!("unknown assignment {other:?}"))),
    }
}

/// Density used in the subsample-size rule `ceil(zeta ln N / rho)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "rule")]
pub enum SizeRho {
    /// The generating density of the grid point.
    Generating,
    /// A separate rule, e.g. `n^-0.5` while generating at `0.5*n^-0.5`.
    Rule(RhoRule),
    /// Edge density of each generated graph.
    Estimated,
}

/// One cell of an experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub generator: Generator,
    pub k0: usize,
    /// Normal (non-outlier) nodes.
    pub num_nodes: usize,
    pub rho_rule: RhoRule,
    pub beta: f64,
    pub zeta: f64,
    pub alpha: Option<f64>,
    pub m: usize,
}

impl GridPoint {
    pub fn rho(&self) -> f64 {
        self.rho_rule.eval(self.num_nodes)
    }

    /// Draws one network for this cell.
    pub fn generate(&self, outlier_p: f64, seed: u64) -> Result<SparseGraph> {
        let base = SbmParams::new(self.k0, self.num_nodes, self.rho(), self.beta);
        let g = match self.generator {
            Generator::Sbm => sample_sbm(&base, seed)?.0,
            Generator::Dcsbm => {
                let params = DcsbmParams {
                    base,
                    alpha: self.alpha.ok_or_else(|| Error::param("dcsbm grid point without alpha"))?,
                };
                sample_dcsbm(&params, seed)?.0
            }
            Generator::Gsbm => {
                let params = OutlierParams {
                    outlier_p,
                    ..OutlierParams::new(base, self.m)
                };
                sample_gsbm_with_outliers(&params, seed)?.0
            }
        };
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub generator: Generator,
    pub k0: Vec<usize>,
    pub num_nodes: Vec<usize>,
    pub rho: RhoRule,
    pub beta: f64,
    pub zeta: Vec<f64>,
    /// Degree-mixture weights (degree-corrected generator only).
    pub alpha: Vec<f64>,
    /// Outlier counts (outlier generator only).
    pub m: Vec<usize>,
    pub outlier_p: f64,
    pub replicates: usize,
    pub seed: u64,
    /// Defaults to the generator's own model.
    pub model: Option<Model>,
    pub k_max: usize,
    pub size_rho: SizeRho,
    pub assignment: Assignment,
    pub include_psi_term: bool,
    pub spectral: SpectralConfig,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            name: "experiment".into(),
            generator: Generator::Sbm,
            k0: vec![3],
            num_nodes: vec![2000],
            rho: RhoRule {
                coef: 1.0,
                exponent: -0.5,
            },
            beta: 0.15,
            zeta: vec![1.5],
            alpha: vec![],
            m: vec![],
            outlier_p: 0.1,
            replicates: 100,
            seed: 1,
            model: None,
            k_max: 10,
            size_rho: SizeRho::Generating,
            assignment: Assignment::Spectral,
            include_psi_term: true,
            spectral: SpectralConfig::default(),
        }
    }
}

fn parse_list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse::<T>().map_err(|_| format!("cannot parse {v:?}")))
        .collect()
}

fn parse_one<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value.trim().parse::<T>().map_err(|_| format!("cannot parse {value:?}"))
}

fn parse_bool(value: &str) -> std::result::Result<bool, String> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("expected true or false, got {other:?}")),
    }
}

const SECTIONS: [&str; 4] = ["experiment", "generator", "grid", "selection"];

impl ExperimentSpec {
    /// Parses a flat `key = value` file with `[section]` headers. `#` starts
    /// a comment. Errors name the offending line.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut spec = ExperimentSpec::default();
        let mut section: Option<&str> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let diag = |message: String| Error::Parse {
                path: source.into(),
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| diag(format!("unterminated section header {line:?}")))?
                    .trim();
                section = Some(
                    SECTIONS
                        .iter()
                        .copied()
                        .find(|s| *s == name)
                        .ok_or_else(|| diag(format!("unknown section [{name}]")))?,
                );
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| diag(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.ok_or_else(|| diag(format!("key {key:?} appears before any [section]")))?;
            spec.set(sec, key, value).map_err(diag)?;
        }
        spec.validate()
            .map_err(|e| Error::param(format!("{source}: {e}")))?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::parse(&text, &path.display().to_string())
    }

    fn set(&mut self, section: &str, key: &str, value: &str) -> std::result::Result<(), String> {
        let err = |e: Error| e.to_string();
        match (section, key) {
            ("experiment", "name") => self.name = value.to_string(),
            ("experiment", "replicates") => self.replicates = parse_one(value)?,
            ("experiment", "seed") => self.seed = parse_one(value)?,
            ("generator", "model") => self.generator = value.parse().map_err(err)?,
            ("generator", "rho") => self.rho = value.parse().map_err(err)?,
            ("generator", "beta") => self.beta = parse_one(value)?,
            ("generator", "outlier_p") => self.outlier_p = parse_one(value)?,
            ("grid", "k0") => self.k0 = parse_list(value)?,
            ("grid", "n_nodes") => self.num_nodes = parse_list(value)?,
            ("grid", "zeta") => self.zeta = parse_list(value)?,
            ("grid", "alpha") => self.alpha = parse_list(value)?,
            ("grid", "m") => self.m = parse_list(value)?,
            ("selection", "model") => self.model = Some(parse_model(value).map_err(err)?),
            ("selection", "k_max") => self.k_max = parse_one(value)?,
            ("selection", "assignment") => self.assignment = parse_assignment(value).map_err(err)?,
            ("selection", "include_psi_term") => self.include_psi_term = parse_bool(value)?,
            ("selection", "size_rho") => {
                self.size_rho = match value {
                    "generating" => SizeRho::Generating,
                    "estimated" => SizeRho::Estimated,
                    rule => SizeRho::Rule(rule.parse().map_err(err)?),
                }
            }
            ("selection", "power_iters") => self.spectral.svd.power_iters = parse_one(value)?,
            ("selection", "oversampling") => self.spectral.svd.oversampling = parse_one(value)?,
            ("selection", "svd_tol") => {
                self.spectral.svd.tol = match value {
                    "none" => None,
                    v => Some(parse_one(v)?),
                }
            }
            ("selection", "max_power_iters") => self.spectral.svd.max_power_iters = parse_one(value)?,
            ("selection", "kmeans_restarts") => self.spectral.kmeans.restarts = parse_one(value)?,
            ("selection", "kmeans_max_iters") => self.spectral.kmeans.max_iters = parse_one(value)?,
            _ => return Err(format!("unknown key {key:?} in [{section}]")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::param("replicates must be at least 1"));
        }
        if self.k0.is_empty() || self.num_nodes.is_empty() || self.zeta.is_empty() {
            return Err(Error::param("k0, n_nodes and zeta need at least one value each"));
        }
        if self.generator == Generator::Dcsbm && self.alpha.is_empty() {
            return Err(Error::param("the dcsbm generator needs alpha values"));
        }
        if self.generator == Generator::Gsbm && self.m.is_empty() {
            return Err(Error::param("the gsbm generator needs m values"));
        }
        for p in self.grid() {
            let params = SbmParams::new(p.k0, p.num_nodes, p.rho(), p.beta);
            params.validate()?;
            if !(p.zeta > 0.0) {
                return Err(Error::param(format!("zeta must be positive, got {}", p.zeta)));
            }
            if let Some(a) = p.alpha {
                if !(0.0..=1.0).contains(&a) {
                    return Err(Error::param(format!("alpha must lie in [0, 1], got {a}")));
                }
            }
        }
        self.selection_config(0).validate()
    }

    /// Every combination of the grid axes, in a fixed order.
    pub fn grid(&self) -> Vec<GridPoint> {
        let alphas: Vec<Option<f64>> = if self.generator == Generator::Dcsbm {
            self.alpha.iter().copied().map(Some).collect()
        } else {
            vec![None]
        };
        let ms: Vec<usize> = if self.generator == Generator::Gsbm {
            self.m.clone()
        } else {
            vec![0]
        };
        let mut out = Vec::new();
        for &k0 in &self.k0 {
            for &num_nodes in &self.num_nodes {
                for &zeta in &self.zeta {
                    for &alpha in &alphas {
                        for &m in &ms {
                            out.push(GridPoint {
                                generator: self.generator,
                                k0,
                                num_nodes,
                                rho_rule: self.rho,
                                beta: self.beta,
                                zeta,
                                alpha,
                                m,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    fn selection_config(&self, seed: u64) -> SelectionConfig {
        SelectionConfig {
            k_max: self.k_max,
            model: self.model.unwrap_or(self.generator.default_model()),
            spectral: self.spectral.clone(),
            seed,
            subsample: SubsampleSize::Rule {
                zeta: 1.0,
                rho: RhoSource::Estimated,
            },
            assignment: self.assignment,
            include_psi_term: self.include_psi_term,
            parallel: false,
            keep_fits: false,
        }
    }

    /// Selection settings for one replicate of `p`. Known-density rules are
    /// evaluated at the number of normal nodes.
    pub fn selection_for(&self, p: &GridPoint, seed: u64) -> Result<SelectionConfig> {
        let known = |rho: f64| -> Result<SubsampleSize> {
            let n = recommended_subsample_size(p.num_nodes as u64, rho, p.zeta)?;
            Ok(SubsampleSize::explicit(n as usize))
        };
        let subsample = match self.size_rho {
            SizeRho::Generating => known(p.rho())?,
            SizeRho::Rule(rule) => known(rule.eval(p.num_nodes))?,
            SizeRho::Estimated => SubsampleSize::Rule {
                zeta: p.zeta,
                rho: RhoSource::Estimated,
            },
        };
        Ok(SelectionConfig {
            subsample,
            ..self.selection_config(seed)
        })
    }
}

/// Outcome of one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub k_hat: Option<usize>,
    pub seconds: f64,
    pub subsample_size: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub point: GridPoint,
    /// Replicates attempted.
    pub replicates: usize,
    /// Replicates whose generation or selection failed.
    pub failed: usize,
    pub prob: f64,
    pub mean_k: f64,
    /// Mean wall-clock seconds of the selection pipeline per replicate.
    pub cpu_seconds: f64,
    pub subsample_size: usize,
    pub k_hats: Vec<usize>,
}

pub const CSV_HEADER: &str = "generator,K0,N,rho_rule,zeta,alpha,m,T,prob,mean_k,cpu_seconds,failed";

impl BenchRow {
    pub fn csv_line(&self) -> String {
        let p = &self.point;
        let alpha = p.alpha.map(|a| a.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{:.4},{:.4},{:.6},{}",
            p.generator.name(),
            p.k0,
            p.num_nodes,
            p.rho_rule,
            p.zeta,
            alpha,
            p.m,
            self.replicates,
            self.prob,
            self.mean_k,
            self.cpu_seconds,
            self.failed
        )
    }
}

pub fn write_csv<W: Write>(rows: &[BenchRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(out, "{}", r.csv_line())?;
    }
    out.flush()
}

/// `(share of k_hats equal to k0, mean of k_hats)`.
pub fn metrics(k_hats: &[usize], k0: usize) -> Result<(f64, f64)> {
    if k_hats.is_empty() {
        return Err(Error::param("metrics need at least one replicate"));
    }
    let t = k_hats.len() as f64;
    let hits = k_hats.iter().filter(|&&k| k == k0).count() as f64;
    let sum: usize = k_hats.iter().sum();
    Ok((hits / t, sum as f64 / t))
}

/// Seed of replicate `t` at grid point `index`.
pub fn replicate_seed(base: u64, index: usize, t: usize) -> u64 {
    derive_seed(derive_seed(base, stream::REPLICATE, index as u64), stream::REPLICATE, t as u64)
}

/// Generates and selects once. Generation time is excluded from `seconds`.
pub fn run_replicate(spec: &ExperimentSpec, p: &GridPoint, seed: u64) -> Replicate {
    let attempt = || -> Result<(usize, f64, usize)> {
        let g = p.generate(spec.outlier_p, derive_seed(seed, stream::EDGES, 0))?;
        let cfg = spec.selection_for(p, derive_seed(seed, stream::SELECT, 0))?;
        let start = Instant::now();
        let report = select_k(&g, &cfg)?;
        Ok((report.k_hat, start.elapsed().as_secs_f64(), report.subsample_size))
    };
    match attempt() {
        Ok((k, seconds, n)) => Replicate {
            k_hat: Some(k),
            seconds,
            subsample_size: n,
            error: None,
        },
        Err(e) => Replicate {
            k_hat: None,
            seconds: 0.0,
            subsample_size: 0,
            error: Some(e.to_string()),
        },
    }
}

/// All replicates of one grid point, run on the current rayon pool.
pub fn run_point(spec: &ExperimentSpec, p: &GridPoint, index: usize) -> BenchRow {
    let reps: Vec<Replicate> = (0..spec.replicates)
        .into_par_iter()
        .map(|t| run_replicate(spec, p, replicate_seed(spec.seed, index, t)))
        .collect();
    summarize(p, &reps)
}

pub fn summarize(p: &GridPoint, reps: &[Replicate]) -> BenchRow {
    let k_hats: Vec<usize> = reps.iter().filter_map(|r| r.k_hat).collect();
    let failed = reps.len() - k_hats.len();
    let (prob, mean_k) = metrics(&k_hats, p.k0).unwrap_or((0.0, f64::NAN));
    let ok = reps.iter().filter(|r| r.k_hat.is_some());
    let cpu_seconds = if k_hats.is_empty() {
        0.0
    } else {
        ok.clone().map(|r| r.seconds).sum::<f64>() / k_hats.len() as f64
    };
    BenchRow {
        point: p.clone(),
        replicates: reps.len(),
        failed,
        prob,
        mean_k,
        cpu_seconds,
        subsample_size: ok.map(|r| r.subsample_size).max().unwrap_or(0),
        k_hats,
    }
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<BenchRow>> {
    spec.validate()?;
    Ok(spec
        .grid()
        .iter()
        .enumerate()
        .map(|(i, p)| run_point(spec, p, i))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub num_nodes: Vec<usize>,
    pub n: usize,
    pub reps: usize,
    pub k0: usize,
    pub rho: RhoRule,
    pub beta: f64,
    pub k_max: usize,
    pub seed: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            num_nodes: vec![2000, 4000, 8000],
            n: 500,
            reps: 3,
            k0: 3,
            rho: RhoRule {
                coef: 1.0,
                exponent: -0.5,
            },
            beta: 0.15,
            k_max: 10,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTable {
    /// `(N, mean seconds of the candidate loop)`.
    pub rows: Vec<(usize, f64)>,
    /// Least-squares slope of `ln seconds` on `ln N`; needs two sizes.
    pub slope: Option<f64>,
}

/// Least-squares slope of `y` on `x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Times the candidate loop at a fixed subsample size across network sizes.
/// Runs serially so that timings are not distorted by sibling work.
pub fn scaling_probe(cfg: &ScalingConfig) -> Result<ScalingTable> {
    let min_n = cfg.num_nodes.iter().copied().min().unwrap_or(0);
    if cfg.n > min_n {
        return Err(Error::param(format!(
            "fixed subsample size {} exceeds the smallest network ({min_n})",
            cfg.n
        )));
    }
    if cfg.reps == 0 {
        return Err(Error::param("reps must be at least 1"));
    }
    let mut rows = Vec::new();
    for (i, &num_nodes) in cfg.num_nodes.iter().enumerate() {
        let mut total = 0.0;
        for r in 0..cfg.reps {
            let seed = replicate_seed(cfg.seed, i, r);
            let params = SbmParams::new(cfg.k0, num_nodes, cfg.rho.eval(num_nodes), cfg.beta);
            let (g, _) = sample_sbm(&params, derive_seed(seed, stream::EDGES, 0))?;
            let nodes = sample_nodes(num_nodes, cfg.n, derive_seed(seed, stream::SUBSAMPLE, 0))?;
            let a = extract_subadjacency(&g, &nodes)?;
            let sel = SelectionConfig {
                k_max: cfg.k_max,
                seed: derive_seed(seed, stream::SELECT, 0),
                subsample: SubsampleSize::explicit(cfg.n),
                parallel: false,
                keep_fits: false,
                ..SelectionConfig::default()
            };
            let start = Instant::now();
            select_k_from_subsample(&a, &sel)?;
            total += start.elapsed().as_secs_f64();
        }
        rows.push((num_nodes, total / cfg.reps as f64));
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|&(n, t)| (n as f64, t)).collect();
    Ok(ScalingTable {
        slope: loglog_slope(&pts),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_rules() {
        let r: RhoRule = "n^-0.5".parse().unwrap();
        assert_eq!(r.eval(10000), 0.01);
        let r: RhoRule = "0.5*n^-0.5".parse().unwrap();
        assert_eq!(r.eval(10000), 0.005);
        let r: RhoRule = " 1.5 * N^(-0.5) ".parse().unwrap();
        assert!((r.eval(100) - 0.15).abs() < 1e-15);
        let r: RhoRule = "0.02".parse().unwrap();
        assert_eq!(r.eval(123), 0.02);
        assert_eq!("0.5*n^-0.5".parse::<RhoRule>().unwrap().to_string(), "0.5*n^-0.5");
        for bad in ["", "n^", "x", "n^-0.5*n", "-1", "2*", "n-0.5"] {
            assert!(bad.parse::<RhoRule>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn metric_examples() {
        assert_eq!(metrics(&[3, 3, 3, 4], 3).unwrap(), (0.75, 3.25));
        assert_eq!(metrics(&[2, 2], 2).unwrap(), (1.0, 2.0));
        assert_eq!(metrics(&[5, 5, 5], 4).unwrap(), (0.0, 5.0));
        assert!(metrics(&[], 3).is_err());
    }

    #[test]
    fn spec_file_round_trip() {
        let text = "\
# a grid
[experiment]
name = demo
replicates = 4
seed = 9

[generator]
model = dcsbm
rho = n^-0.5
beta = 0.15

[grid]
k0 = 2, 3
n_nodes = 500
zeta = 1.0,1.5
alpha = 0.4

[selection]
k_max = 6
size_rho = estimated
";
        let spec = ExperimentSpec::parse(text, "demo.spec").unwrap();
        assert_eq!(spec.name, "demo");
        assert_eq!(spec.generator, Generator::Dcsbm);
        assert_eq!(spec.k0, vec![2, 3]);
        assert_eq!(spec.zeta, vec![1.0, 1.5]);
        assert_eq!(spec.size_rho, SizeRho::Estimated);
        assert_eq!(spec.grid().len(), 4);
        assert_eq!(spec.selection_for(&spec.grid()[0], 0).unwrap().model, Model::Dcsbm);
    }

    #[test]
    fn spec_errors_carry_line_numbers() {
        let cases = [
            ("[grid]\nk0 = 2\nbogus = 1\n", 3),
            ("k0 = 2\n", 1),
            ("[nope]\n", 1),
            ("[grid]\nk0 = two\n", 2),
            ("[grid]\nk0 2\n", 2),
        ];
        for (text, line) in cases {
            match ExperimentSpec::parse(text, "x.spec") {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn single_replicate_of_two_blocks() {
        let spec = ExperimentSpec {
            k0: vec![2],
            num_nodes: vec![300],
            rho: RhoRule::constant(0.3),
            beta: 0.05,
            replicates: 1,
            k_max: 4,
            ..ExperimentSpec::default()
        };
        let rows = run_experiment(&spec).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].prob == 0.0 || rows[0].prob == 1.0);
        assert_eq!(rows[0].failed, 0);
        let again = run_experiment(&spec).unwrap();
        assert_eq!(rows[0].k_hats, again[0].k_hats);
        let mut csv = Vec::new();
        write_csv(&rows, &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.starts_with(CSV_HEADER));
        assert!(csv.lines().nth(1).unwrap().starts_with("sbm,2,300,0.3,1.5,,0,1,"));
    }

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x| (x, 3.0 * x * x)).collect();
        assert!((loglog_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts[..1]), None);
    }

    #[test]
    fn scaling_probe_single_size_has_no_slope() {
        let t = scaling_probe(&ScalingConfig {
            num_nodes: vec![400],
            n: 100,
            reps: 1,
            k_max: 3,
            ..ScalingConfig::default()
        })
        .unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.slope.is_none());
    }
}
