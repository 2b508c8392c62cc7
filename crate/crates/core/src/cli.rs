//! The `gbfim` command line: `gen`, `select`, `tune`, `compare`, `spectrum`.
//!
//! Exit codes: 0 on success, 1 for usage and input errors, 2 for numerical
//! failures. All randomness derives from `--seed` (default [`DEFAULT_SEED`]):
//! the sensor generator uses it directly, IC scores use run streams
//! `0..runs` of it, and IC-greedy round `i` uses `seed + (i + 1) * 0x9E3779B97F4A7C15`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::baselines::{self, IcConfig};
use crate::error::{Error, Result};
use crate::graph::{self, Graph, GraphFormat, LaplacianKind};
use crate::kernel::{GbfKernel, KernelSpec};
use crate::pgreedy::{prefix_power_curve, select_nodes, SelectorConfig, DEFAULT_TOLERANCE};
use crate::report::{self, ComparisonRow, SelectionOutput};
use crate::spectral::{laplacian_spectrum, Spectrum};
use crate::tuning::{grid_search, CvMetric, CvSpec, GridSpec, KernelGrid};

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_CLAMP_FLOOR: f64 = 1e-14;

#[derive(Debug, Parser)]
#[command(
    name = "gbfim",
    version,
    about = "Influence maximization by graph-kernel variance minimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a graph (random sensor layout or thinned point cloud).
    Gen(GenArgs),
    /// Select influential nodes with P-greedy.
    Select(SelectArgs),
    /// Tune kernel parameters by k-fold cross-validation.
    Tune(TuneArgs),
    /// Compare P-greedy with IC-greedy, PageRank and degree ranking.
    Compare(CompareArgs),
    /// Dump the Laplacian spectrum.
    Spectrum(SpectrumArgs),
}

#[derive(Debug, Args)]
struct GraphArgs {
    /// Graph file (edge list, or JSON when the extension is .json).
    #[arg(long)]
    graph: PathBuf,
    /// Override the format guessed from the extension.
    #[arg(long, value_parser = parse_format)]
    format: Option<GraphFormat>,
    #[arg(long, value_enum, default_value_t = LaplacianArg::Standard)]
    laplacian: LaplacianArg,
}

fn parse_format(s: &str) -> std::result::Result<GraphFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kernel(s: &str) -> std::result::Result<KernelSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_grid(s: &str) -> std::result::Result<GridSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_budget(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("budget must be at least 1".into()),
        Ok(b) => Ok(b),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LaplacianArg {
    Standard,
    Normalized,
}

impl From<LaplacianArg> for LaplacianKind {
    fn from(a: LaplacianArg) -> Self {
        match a {
            LaplacianArg::Standard => LaplacianKind::Standard,
            LaplacianArg::Normalized => LaplacianKind::Normalized,
        }
    }
}

#[derive(Debug, Args)]
struct KernelArgs {
    /// Kernel spec: diffusion:t=T | spline:eps=E,s=S | custom:file=PATH
    #[arg(long, value_parser = parse_kernel)]
    kernel: KernelSpec,
    /// Floor non-positive Mercer weights at FLOOR (default 1e-14 when given bare).
    #[arg(long, num_args = 0..=1, default_missing_value = "1e-14", value_name = "FLOOR")]
    clamp_spectrum: Option<f64>,
    /// Tolerance on max squared power and max residual.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenKind {
    Sensor,
    Points,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, value_enum, default_value_t = GenKind::Sensor)]
    kind: GenKind,
    #[arg(long, default_value_t = 79)]
    nodes: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    link_radius: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    thin_radius: f64,
    /// Point cloud (`x y` or `x,y` per line) for `--kind points`.
    #[arg(long)]
    points: Option<PathBuf>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, value_parser = parse_budget)]
    budget: usize,
    /// Nodes to start from, comma separated.
    #[arg(long, value_delimiter = ',')]
    initial: Vec<usize>,
    /// Also write an SVG of the final standard deviation.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TuneKernel {
    Diffusion,
    Spline,
}

#[derive(Debug, Args)]
struct TuneArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, value_enum)]
    kernel: TuneKernel,
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, default_value = "-1e2:-1e-2:25")]
    t_grid: GridSpec,
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, default_value = "1e-16:1e0:25")]
    eps_grid: GridSpec,
    #[arg(long, value_parser = parse_grid, allow_hyphen_values = true, default_value = "-1e1:-1e-1:25")]
    s_grid: GridSpec,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value = "mae", value_parser = ["mae", "rmse"])]
    cv_metric: String,
    /// Diagonal regularization for every fit.
    #[arg(long, default_value_t = 0.0)]
    jitter: f64,
    /// Score table CSV.
    #[arg(short, long)]
    out: PathBuf,
    /// Best-parameter JSON (default: the table path with a .json extension).
    #[arg(long)]
    best: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    #[value(alias = "kernel-pgreedy")]
    Kernel,
    #[value(alias = "ic-greedy")]
    Ic,
    #[value(alias = "pr")]
    Pagerank,
    Degree,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Kernel => "kernel-pgreedy",
            Method::Ic => "ic-greedy",
            Method::Pagerank => "pagerank",
            Method::Degree => "degree",
        }
    }
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    kernel: KernelArgs,
    #[arg(long, value_parser = parse_budget)]
    budget: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "kernel,ic,pagerank,degree")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = baselines::DEFAULT_IC_P)]
    ic_p: f64,
    #[arg(long, default_value_t = baselines::DEFAULT_IC_RUNS)]
    ic_runs: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = baselines::DEFAULT_DAMPING)]
    pr_damping: f64,
    /// Report CSV.
    #[arg(short, long)]
    out: PathBuf,
    /// Metadata JSON (default: the report path with a .json extension).
    #[arg(long)]
    meta: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SpectrumArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Also write the eigenvector matrix.
    #[arg(long)]
    vectors: Option<PathBuf>,
    #[arg(short, long)]
    out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Select(a) => cmd_select(a),
        Command::Tune(a) => cmd_tune(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Spectrum(a) => cmd_spectrum(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn load(args: &GraphArgs) -> Result<Graph> {
    let format = args.format.unwrap_or_else(|| GraphFormat::from_path(&args.graph));
    graph::load_graph(&args.graph, format)
}

fn build_kernel(args: &KernelArgs, spectrum: &Spectrum) -> Result<GbfKernel> {
    let kernel = GbfKernel::new(args.kernel.family()?, spectrum)?;
    let kernel = match args.clamp_spectrum {
        Some(floor) => kernel.clamped(floor)?,
        None => kernel,
    };
    kernel.require_positive_definite()?;
    Ok(kernel)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)?;
    Ok(())
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let g = match a.kind {
        GenKind::Sensor => graph::sensor_graph(a.nodes, a.seed, a.link_radius.unwrap_or(graph::SENSOR_LINK_RADIUS))?,
        GenKind::Points => {
            let path = a
                .points
                .ok_or_else(|| Error::InvalidParameter("--kind points needs --points FILE".into()))?;
            let points = graph::parse_points(&fs::read_to_string(path)?)?;
            let link = a
                .link_radius
                .ok_or_else(|| Error::InvalidParameter("--kind points needs --link-radius".into()))?;
            graph::generate_points_graph(&points, a.thin_radius, link)?
        }
    };
    write(&a.out, &(g.to_json() + "\n"))
}

fn cmd_select(a: SelectArgs) -> Result<()> {
    let g = load(&a.graph)?;
    let kind: LaplacianKind = a.graph.laplacian.into();
    let spectrum = laplacian_spectrum(&g, kind)?;
    let kernel = build_kernel(&a.kernel, &spectrum)?;
    let cfg = SelectorConfig {
        budget: a.budget,
        initial: a.initial.clone(),
        tolerance: a.kernel.tol,
    };
    let state = select_nodes(&spectrum, &kernel, &cfg)?;
    let out = SelectionOutput::new(&state, &g, a.kernel.kernel.to_string(), kind.to_string(), a.kernel.tol);
    if let Some(svg) = &a.svg {
        let power: Vec<f64> = state.power().iter().copied().collect();
        write(svg, &report::svg_scatter(&g, &power, state.chosen())?)?;
    }
    write(&a.out, &out.to_json())
}

fn cmd_tune(a: TuneArgs) -> Result<()> {
    let g = load(&a.graph)?;
    let spectrum = laplacian_spectrum(&g, a.graph.laplacian.into())?;
    let grid = match a.kernel {
        TuneKernel::Diffusion => KernelGrid::Diffusion { t: a.t_grid.values()? },
        TuneKernel::Spline => KernelGrid::Spline {
            eps: a.eps_grid.values()?,
            s: a.s_grid.values()?,
        },
    };
    let spec = CvSpec {
        folds: a.folds,
        seed: a.seed,
        target: None,
        metric: a.cv_metric.parse::<CvMetric>()?,
        jitter: a.jitter,
    };
    let result = grid_search(&spectrum, &grid, &spec)?;
    write(&a.out, &report::score_table_csv(&result))?;
    let best_path = a.best.unwrap_or_else(|| a.out.with_extension("json"));
    write(&best_path, &report::BestParams::new(&result, &spec).to_json())
}

#[derive(Debug, Serialize)]
struct CompareMeta {
    tool_version: &'static str,
    graph_sha256: String,
    nodes: usize,
    edges: usize,
    kernel: String,
    clamp_spectrum: Option<f64>,
    laplacian: String,
    tolerance: f64,
    budget: usize,
    seed: u64,
    ic_p: f64,
    ic_runs: usize,
    pr_damping: f64,
    selections: BTreeMap<String, Vec<usize>>,
    failures: BTreeMap<String, String>,
}

fn method_nodes(
    method: Method,
    g: &Graph,
    spectrum: &Spectrum,
    kernel: &GbfKernel,
    a: &CompareArgs,
    ic: &IcConfig,
) -> Result<Vec<usize>> {
    if a.budget > g.node_count() {
        return Err(Error::Budget {
            requested: a.budget,
            available: g.node_count(),
        });
    }
    match method {
        Method::Kernel => {
            let cfg = SelectorConfig {
                budget: a.budget,
                initial: Vec::new(),
                tolerance: a.kernel.tol,
            };
            Ok(select_nodes(spectrum, kernel, &cfg)?.chosen().to_vec())
        }
        Method::Ic => baselines::ic_greedy_select(g, a.budget, ic),
        Method::Pagerank => {
            let pr = baselines::pagerank(
                g,
                a.pr_damping,
                baselines::DEFAULT_PR_TOL,
                baselines::DEFAULT_PR_MAX_ITER,
            )?;
            Ok(baselines::top_n(&pr, a.budget))
        }
        Method::Degree => graph::degree_top_n(g, a.budget),
    }
}

fn method_rows(
    method: Method,
    nodes: &[usize],
    g: &Graph,
    spectrum: &Spectrum,
    kernel: &GbfKernel,
    ic: &IcConfig,
) -> Result<Vec<ComparisonRow>> {
    let curve = prefix_power_curve(spectrum, kernel, nodes)?;
    curve
        .iter()
        .enumerate()
        .map(|(i, p)| {
            Ok(ComparisonRow {
                method: method.name().to_string(),
                k: i + 1,
                node_id: nodes[i],
                max_std: p.max_std,
                mean_std: p.mean_std,
                ic_score: baselines::ic_score(g, &nodes[..=i], ic)?,
            })
        })
        .collect()
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let g = load(&a.graph)?;
    let kind: LaplacianKind = a.graph.laplacian.into();
    let spectrum = laplacian_spectrum(&g, kind)?;
    let kernel = build_kernel(&a.kernel, &spectrum)?;
    let ic = IcConfig {
        p: a.ic_p,
        runs: a.ic_runs,
        master_seed: a.seed,
    };
    ic.validate()?;

    let mut methods = a.methods.clone();
    methods.dedup();
    let mut rows = Vec::new();
    let mut selections = BTreeMap::new();
    let mut failures = BTreeMap::new();
    let mut last_error = None;
    for &method in &methods {
        let outcome = method_nodes(method, &g, &spectrum, &kernel, &a, &ic)
            .and_then(|nodes| Ok((method_rows(method, &nodes, &g, &spectrum, &kernel, &ic)?, nodes)));
        match outcome {
            Ok((r, nodes)) => {
                rows.extend(r);
                selections.insert(method.name().to_string(), nodes);
            }
            Err(e) => {
                eprintln!("warning: method {} failed: {e}", method.name());
                failures.insert(method.name().to_string(), e.to_string());
                last_error = Some(e);
            }
        }
    }
    if selections.is_empty() {
        return Err(last_error.unwrap_or(Error::InvalidParameter("no methods requested".into())));
    }
    let meta = CompareMeta {
        tool_version: env!("CARGO_PKG_VERSION"),
        graph_sha256: format!("{:x}", Sha256::digest(g.to_json().as_bytes())),
        nodes: g.node_count(),
        edges: g.edge_count(),
        kernel: a.kernel.kernel.to_string(),
        clamp_spectrum: a.kernel.clamp_spectrum,
        laplacian: kind.to_string(),
        tolerance: a.kernel.tol,
        budget: a.budget,
        seed: a.seed,
        ic_p: a.ic_p,
        ic_runs: a.ic_runs,
        pr_damping: a.pr_damping,
        selections,
        failures,
    };
    write(&a.out, &report::comparison_csv(&rows))?;
    let meta_path = a.meta.clone().unwrap_or_else(|| a.out.with_extension("json"));
    write(
        &meta_path,
        &(serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n"),
    )
}

fn cmd_spectrum(a: SpectrumArgs) -> Result<()> {
    let g = load(&a.graph)?;
    let spectrum = laplacian_spectrum(&g, a.graph.laplacian.into())?;
    write(&a.out, &report::spectrum_csv(&spectrum))?;
    if let Some(path) = &a.vectors {
        write(path, &report::eigenvectors_csv(&spectrum))?;
    }
    Ok(())
}
