use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use smbic::bench::{self, ExperimentSpec, Generator, RhoRule, SizeRho};
use smbic::graph::{degree_stats, largest_component, load_edge_list_with_summary, Indexing};
use smbic::selection::{select_k, select_k_with_nodes, RhoSource, SelectionConfig, SubsampleSize};
use smbic::spectral::{Assignment, Model};
use smbic::subsample::{recommended_subsample_size, sample_nodes, NodeSet};
use smbic::synth::{sample_dcsbm, sample_gsbm_with_outliers, sample_sbm, DcsbmParams, OutlierParams, SbmParams};
use smbic::{rng, Error, Result};

/// Estimate the number of communities in a network with a subsampling-based
/// modified BIC.
#[derive(Parser, Debug)]
#[command(name = "smbic", version, about)]
struct Cli {
    /// Base seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output format for machine-readable payloads.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample a synthetic network with planted communities.
    Generate(GenerateArgs),
    /// Estimate the number of communities of an edge-list network.
    Select(SelectArgs),
    /// Print the recommended subsample size.
    SubsampleSize(SizeArgs),
    /// Run a Monte-Carlo experiment grid.
    Bench(BenchArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum GenModel {
    Sbm,
    Dcsbm,
    Gsbm,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FitModel {
    Sbm,
    Dcsbm,
}

impl From<FitModel> for Model {
    fn from(m: FitModel) -> Self {
        match m {
            FitModel::Sbm => Model::Sbm,
            FitModel::Dcsbm => Model::Dcsbm,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum AssignArg {
    Spectral,
    MajorityLink,
}

impl From<AssignArg> for Assignment {
    fn from(a: AssignArg) -> Self {
        match a {
            AssignArg::Spectral => Assignment::Spectral,
            AssignArg::MajorityLink => Assignment::MajorityLink,
        }
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    model: GenModel,
    /// Number of planted communities.
    #[arg(long)]
    k0: usize,
    /// Number of (normal) nodes.
    #[arg(long)]
    n_nodes: usize,
    /// Density rule, e.g. "n^-0.5", "0.5*n^-0.5" or "0.02".
    #[arg(long, default_value = "n^-0.5")]
    rho: String,
    /// Out-in ratio of the planted connectivity matrix.
    #[arg(long, default_value_t = 0.15)]
    beta: f64,
    /// Uniform-component weight of the degree mixture (dcsbm).
    #[arg(long, default_value_t = 0.6)]
    alpha: f64,
    /// Number of outlier nodes (gsbm).
    #[arg(long, default_value_t = 100)]
    outliers: usize,
    /// Edge probability between two outliers (gsbm).
    #[arg(long, default_value_t = 0.1)]
    outlier_p: f64,
    /// Output prefix; writes PREFIX.edges, PREFIX.labels.csv, PREFIX.params.json.
    #[arg(long, short, default_value = "graph")]
    out: PathBuf,
    /// Write 1-based node ids.
    #[arg(long)]
    one_based: bool,
}

#[derive(Args, Debug)]
struct SelectArgs {
    /// Edge list to analyse.
    #[arg(long, short)]
    input: PathBuf,
    /// Read 1-based node ids.
    #[arg(long)]
    one_based: bool,
    #[arg(long, value_enum, default_value_t = FitModel::Sbm)]
    model: FitModel,
    /// Largest candidate number of communities.
    #[arg(long, default_value_t = 10)]
    k_max: usize,
    /// Explicit subsample size (overrides the size rule).
    #[arg(long)]
    n: Option<usize>,
    /// Constant of the size rule ceil(zeta ln N / rho).
    #[arg(long, default_value_t = 1.5)]
    zeta: f64,
    /// Density for the size rule; estimated from the graph when absent.
    #[arg(long)]
    rho: Option<f64>,
    /// Reuse a saved subsample instead of drawing one.
    #[arg(long, conflicts_with = "n")]
    subsample_file: Option<PathBuf>,
    /// Save the subsample that was used.
    #[arg(long)]
    save_subsample: Option<PathBuf>,
    /// Write the full JSON report here.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = AssignArg::Spectral)]
    assignment: AssignArg,
    /// Drop the degree log term from the degree-corrected likelihood.
    #[arg(long)]
    no_psi_term: bool,
    /// Leave per-candidate labels and estimates out of the report.
    #[arg(long)]
    no_fits: bool,
    /// Analyse only the largest connected component; node ids in the report
    /// and subsample files then index its nodes in increasing original order.
    #[arg(long)]
    largest_component: bool,
    /// Power iterations always performed.
    #[arg(long, default_value_t = 2)]
    power_iters: usize,
    /// Relative Ritz residual to iterate down to; 0 keeps the fixed count.
    #[arg(long, default_value_t = 1e-2)]
    svd_tol: f64,
    #[arg(long, default_value_t = 200)]
    max_power_iters: usize,
    #[arg(long, default_value_t = 10)]
    oversampling: usize,
    #[arg(long, default_value_t = 10)]
    kmeans_restarts: usize,
}

#[derive(Args, Debug)]
struct SizeArgs {
    /// Network size (with --rho).
    #[arg(long, required_unless_present = "graph", conflicts_with = "graph")]
    n_nodes: Option<u64>,
    /// Network density (with --n-nodes).
    #[arg(long, requires = "n_nodes")]
    rho: Option<f64>,
    /// Estimate N and the density from this edge list instead.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    one_based: bool,
    #[arg(long)]
    zeta: f64,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Experiment spec file; flags below override its values.
    spec: Option<PathBuf>,
    #[arg(long)]
    generator: Option<String>,
    /// Comma-separated list.
    #[arg(long)]
    k0: Option<String>,
    /// Comma-separated list.
    #[arg(long)]
    n_nodes: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    /// Comma-separated list.
    #[arg(long)]
    zeta: Option<String>,
    /// Comma-separated list.
    #[arg(long)]
    alpha: Option<String>,
    /// Comma-separated list of outlier counts.
    #[arg(long)]
    m: Option<String>,
    #[arg(long, value_enum)]
    model: Option<FitModel>,
    #[arg(long)]
    k_max: Option<usize>,
    /// Density rule for the subsample size ("generating", "estimated" or a rule).
    #[arg(long)]
    size_rho: Option<String>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Write the table here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot start {t} worker threads: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(args) => cmd_generate(cli, args),
        Command::Select(args) => cmd_select(cli, args),
        Command::SubsampleSize(args) => cmd_subsample_size(cli, args),
        Command::Bench(args) => cmd_bench(cli, args),
    }
}

fn indexing(one_based: bool) -> Indexing {
    if one_based {
        Indexing::OneBased
    } else {
        Indexing::ZeroBased
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io {
            context: format!("creating {}", path.display()),
            source: e,
        })
}

fn io_err(context: &str) -> impl FnOnce(io::Error) -> Error + '_ {
    move |e| Error::Io {
        context: context.to_string(),
        source: e,
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs) -> Result<()> {
    let rule: RhoRule = args.rho.parse()?;
    let base = SbmParams::new(args.k0, args.n_nodes, rule.eval(args.n_nodes), args.beta);
    let seed = rng::derive_seed(cli.seed, rng::stream::EDGES, 0);
    let (graph, truth, params) = match args.model {
        GenModel::Sbm => {
            let (g, t) = sample_sbm(&base, seed)?;
            (g, t, json!({ "model": "sbm", "params": base }))
        }
        GenModel::Dcsbm => {
            let p = DcsbmParams {
                base,
                alpha: args.alpha,
            };
            let (g, t) = sample_dcsbm(&p, seed)?;
            (g, t, json!({ "model": "dcsbm", "params": p }))
        }
        GenModel::Gsbm => {
            let p = OutlierParams {
                outlier_p: args.outlier_p,
                ..OutlierParams::new(base, args.outliers)
            };
            let (g, t) = sample_gsbm_with_outliers(&p, seed)?;
            (g, t, json!({ "model": "gsbm", "params": p }))
        }
    };
    let edges_path = with_suffix(&args.out, ".edges");
    let labels_path = with_suffix(&args.out, ".labels.csv");
    let params_path = with_suffix(&args.out, ".params.json");
    graph.save_edge_list(&edges_path, indexing(args.one_based))?;
    truth.save_label_csv(&labels_path)?;
    let echo = json!({
        "generator": params,
        "rho_rule": rule.to_string(),
        "seed": cli.seed,
        "num_nodes": graph.num_nodes(),
        "num_edges": graph.num_edges(),
        "clamped_pairs": truth.clamped_pairs,
        "label_retries": truth.label_retries,
        "files": {
            "edges": edges_path,
            "labels": labels_path,
        },
    });
    let mut w = create(&params_path)?;
    serde_json::to_writer_pretty(&mut w, &echo)?;
    w.flush().map_err(io_err("writing parameters"))?;

    let mut out = io::stdout().lock();
    match cli.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string(&echo)?),
        Format::Csv => writeln!(
            out,
            "{}\n{}\n{}",
            edges_path.display(),
            labels_path.display(),
            params_path.display()
        ),
    }
    .map_err(io_err("writing to stdout"))
}

fn cmd_select(cli: &Cli, args: &SelectArgs) -> Result<()> {
    let (graph, summary) = load_edge_list_with_summary(&args.input, indexing(args.one_based))?;
    eprintln!("{}", summary.to_key_value());
    let graph = if args.largest_component {
        let (sub, _) = largest_component(&graph);
        eprintln!("largest_component nodes={} edges={}", sub.num_nodes(), sub.num_edges());
        sub
    } else {
        graph
    };
    let mut cfg = SelectionConfig {
        k_max: args.k_max,
        model: args.model.into(),
        seed: cli.seed,
        subsample: match args.n {
            Some(n) => SubsampleSize::explicit(n),
            None => SubsampleSize::Rule {
                zeta: args.zeta,
                rho: args.rho.map_or(RhoSource::Estimated, RhoSource::Known),
            },
        },
        assignment: args.assignment.into(),
        include_psi_term: !args.no_psi_term,
        keep_fits: !args.no_fits,
        ..SelectionConfig::default()
    };
    cfg.spectral.svd.power_iters = args.power_iters;
    cfg.spectral.svd.tol = (args.svd_tol > 0.0).then_some(args.svd_tol);
    cfg.spectral.svd.max_power_iters = args.max_power_iters;
    cfg.spectral.svd.oversampling = args.oversampling;
    cfg.spectral.kmeans.restarts = args.kmeans_restarts;

    // The echoed configuration keeps the size flags as given, so a rerun from
    // a saved subsample reproduces the original report exactly.
    let report = if let Some(path) = &args.subsample_file {
        let nodes = NodeSet::load(path, graph.num_nodes())?;
        select_k_with_nodes(&graph, &nodes, &cfg)?
    } else if let Some(path) = &args.save_subsample {
        // Draw exactly as select_k would, so the saved file reproduces the run.
        let n = smbic::selection::resolve_subsample_size(&graph, &cfg)?;
        let nodes = sample_nodes(
            graph.num_nodes(),
            n,
            rng::derive_seed(cfg.seed, rng::stream::SUBSAMPLE, 0),
        )?;
        nodes.save(path)?;
        select_k_with_nodes(&graph, &nodes, &cfg)?
    } else {
        select_k(&graph, &cfg)?
    };

    if let Some(path) = &args.report {
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &report)?;
        w.flush().map_err(io_err("writing report"))?;
    }
    for f in report.flagged() {
        eprintln!("K={}: {:?}", f.k, f.flags);
    }
    let mut out = io::stdout().lock();
    match cli.format {
        Format::Json => writeln!(out, "{}", serde_json::to_string(&report)?),
        Format::Csv => write!(out, "{}", report.summary()),
    }
    .map_err(io_err("writing to stdout"))
}

fn cmd_subsample_size(cli: &Cli, args: &SizeArgs) -> Result<()> {
    let (num_nodes, rho) = match (&args.graph, args.n_nodes) {
        (Some(path), _) => {
            let (g, _) = load_edge_list_with_summary(path, indexing(args.one_based))?;
            (g.num_nodes() as u64, degree_stats(&g).density_hat)
        }
        (None, Some(n)) => {
            let rho = args
                .rho
                .ok_or_else(|| Error::Parameter("--rho is required with --n-nodes".into()))?;
            (n, rho)
        }
        (None, None) => return Err(Error::Parameter("give --n-nodes and --rho, or --graph".into())),
    };
    let n = recommended_subsample_size(num_nodes, rho, args.zeta)?;
    let mut out = io::stdout().lock();
    match cli.format {
        Format::Json => writeln!(
            out,
            "{}",
            json!({ "n": n, "num_nodes": num_nodes, "rho": rho, "zeta": args.zeta })
        ),
        Format::Csv => writeln!(out, "{n}"),
    }
    .map_err(io_err("writing to stdout"))
}

fn parse_csv_list<T: std::str::FromStr>(flag: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Parameter(format!("--{flag}: cannot parse {v:?}")))
        })
        .collect()
}

fn cmd_bench(cli: &Cli, args: &BenchArgs) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::default(),
    };
    spec.seed = if args.spec.is_some() && cli.seed == 0 {
        spec.seed
    } else {
        cli.seed
    };
    if let Some(g) = &args.generator {
        spec.generator = g.parse::<Generator>()?;
    }
    if let Some(v) = &args.k0 {
        spec.k0 = parse_csv_list("k0", v)?;
    }
    if let Some(v) = &args.n_nodes {
        spec.num_nodes = parse_csv_list("n-nodes", v)?;
    }
    if let Some(v) = &args.rho {
        spec.rho = v.parse()?;
    }
    if let Some(v) = args.beta {
        spec.beta = v;
    }
    if let Some(v) = &args.zeta {
        spec.zeta = parse_csv_list("zeta", v)?;
    }
    if let Some(v) = &args.alpha {
        spec.alpha = parse_csv_list("alpha", v)?;
    }
    if let Some(v) = &args.m {
        spec.m = parse_csv_list("m", v)?;
    }
    if let Some(v) = args.model {
        spec.model = Some(v.into());
    }
    if let Some(v) = args.k_max {
        spec.k_max = v;
    }
    if let Some(v) = &args.size_rho {
        spec.size_rho = match v.as_str() {
            "generating" => SizeRho::Generating,
            "estimated" => SizeRho::Estimated,
            rule => SizeRho::Rule(rule.parse()?),
        };
    }
    if let Some(v) = args.replicates {
        spec.replicates = v;
    }
    if spec.generator == Generator::Dcsbm && spec.alpha.is_empty() {
        spec.alpha = vec![0.6];
    }
    if spec.generator == Generator::Gsbm && spec.m.is_empty() {
        spec.m = vec![100];
    }
    let rows = bench::run_experiment(&spec)?;
    for r in rows.iter().filter(|r| r.failed > 0) {
        eprintln!(
            "warning: {} of {} replicates failed at K0={} N={}",
            r.failed, r.replicates, r.point.k0, r.point.num_nodes
        );
    }
    let write = |w: &mut dyn Write| -> Result<()> {
        match cli.format {
            Format::Csv => bench::write_csv(&rows, &mut *w).map_err(io_err("writing table")),
            Format::Json => {
                serde_json::to_writer_pretty(&mut *w, &json!({ "spec": spec, "rows": rows }))?;
                writeln!(w).map_err(io_err("writing table"))
            }
        }
    };
    match &args.out {
        Some(path) => {
            let mut f = create(path)?;
            write(&mut f)?;
            f.flush().map_err(io_err("writing table"))
        }
        None => write(&mut io::stdout().lock()),
    }
}
