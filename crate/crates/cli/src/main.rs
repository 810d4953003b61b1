use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use graphvab::betti::{write_vectors_csv, BettiFunction, DimensionVector, Grid, VectorLayout, WeightFunction};
use graphvab::changepoint::{e_divisive, EDivisiveConfig, SeriesMatrix};
use graphvab::depth::{rolling_depth, write_depth_csv, IntervalMode};
use graphvab::filtration::{lower_star, vietoris_rips};
use graphvab::metrics::{bottleneck, wasserstein, Norm};
use graphvab::persistence::{compute_persistence, InfinitePolicy, PersistenceDiagram, PersistenceOptions};
use graphvab::pipeline::{
    feature_table, ingest_transactions, read_ledger, read_prices, write_feature_csv, AmountTransform, FeatureConfig,
    IngestConfig,
};
use graphvab::simulation::{run_cpd_experiment, SimConfig};
use graphvab::stats::{average_local_clustering, motif_counts_3, GraphSummary};
use graphvab::AttributedGraph;

#[derive(Parser)]
#[command(name = "graphvab", version, about = "Topological features of node-attributed graphs")]
struct Cli {
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Persistence diagram of a graph.
    Pd(PdArgs),
    /// Betti vectors of a diagram.
    Vectorize(VectorizeArgs),
    /// Distance between two diagrams, as JSON.
    Distance(DistanceArgs),
    /// Rolling modified band depth of a vector series.
    Depth(DepthArgs),
    /// E-divisive change points of a series, as JSON.
    Changepoint(ChangepointArgs),
    /// Random dot product graph change-point experiment.
    Simulate(SimulateArgs),
    /// Daily feature table from a transaction ledger and prices.
    Features(FeaturesArgs),
    /// Classical summaries of a graph, as JSON.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct GraphInput {
    /// Edge list CSV with header `source,target`.
    #[arg(long)]
    edges: PathBuf,
    /// Node attribute CSV with header `node,value`; every endpoint needs a row.
    #[arg(long)]
    nodes: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FiltrationKind {
    LowerStar,
    /// Vietoris-Rips on shortest-path distances.
    Rips,
}

#[derive(Args)]
struct PdArgs {
    #[command(flatten)]
    graph: GraphInput,
    #[arg(long, value_enum, default_value = "lower-star")]
    filtration: FiltrationKind,
    /// Largest Rips scale; defaults to the graph diameter.
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    keep_zero_persistence: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Vab,
    Common,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weight {
    Constant,
    Persistence,
}

#[derive(Clone, Copy, ValueEnum)]
enum Layout {
    Long,
    Wide,
}

#[derive(Args)]
struct VectorizeArgs {
    #[arg(long)]
    diagram: PathBuf,
    #[arg(long, value_enum, default_value = "vab")]
    method: Method,
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    #[arg(long, default_value_t = 1.0)]
    hi: f64,
    /// Number of grid points.
    #[arg(short, long, default_value_t = 100)]
    d: usize,
    #[arg(long, value_enum, default_value = "constant")]
    weight: Weight,
    /// `drop` or a replacement death value; defaults to the grid end.
    #[arg(long)]
    infinite: Option<String>,
    #[arg(long, value_enum, default_value = "long")]
    layout: Layout,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Wasserstein,
    Bottleneck,
}

#[derive(Args)]
struct DistanceArgs {
    a: PathBuf,
    b: PathBuf,
    /// Homological dimension to compare; required for multi-dimension diagrams.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_enum, default_value = "wasserstein")]
    metric: Metric,
    #[arg(short, long, default_value_t = 1.0)]
    q: f64,
    /// Ground norm: 1, 2 or inf.
    #[arg(long, default_value = "1")]
    norm: String,
    /// `drop` or a replacement death value; defaults to the largest finite value in either diagram.
    #[arg(long)]
    infinite: Option<String>,
}

#[derive(Args)]
struct DepthArgs {
    /// Wide CSV: optional `date` column, then `dim,v1,…,vN`.
    #[arg(long)]
    vectors: PathBuf,
    #[arg(short, long, default_value_t = 7)]
    window: usize,
    #[arg(long, default_value = "closed")]
    mode: IntervalMode,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EcpArgs {
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 199)]
    permutations: usize,
    #[arg(long, default_value_t = 0.05)]
    significance: f64,
    #[arg(long, default_value_t = 10)]
    min_size: usize,
}

impl EcpArgs {
    fn config(&self, seed: u64) -> EDivisiveConfig {
        EDivisiveConfig {
            alpha: self.alpha,
            permutations: self.permutations,
            significance: self.significance,
            min_size: self.min_size,
            seed,
        }
    }
}

#[derive(Args)]
struct ChangepointArgs {
    /// Headed CSV of numeric columns, one row per time step.
    #[arg(long)]
    series: PathBuf,
    #[command(flatten)]
    ecp: EcpArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SimulateArgs {
    /// JSON config; missing fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Report JSON destination; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write the per-family error table.
    #[arg(long)]
    mae_csv: Option<PathBuf>,
    /// Also write the per-regime summary means.
    #[arg(long)]
    regime_csv: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transform {
    Log1p,
    Raw,
}

#[derive(Args)]
struct FeaturesArgs {
    /// CSV with header `day,from,to,amount`.
    #[arg(long)]
    ledger: PathBuf,
    /// CSV with header `day,open`.
    #[arg(long)]
    prices: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 4)]
    horizon: usize,
    #[arg(long, default_value_t = 150)]
    top_m: usize,
    #[arg(long, default_value_t = 5)]
    min_transactions: usize,
    #[arg(short, long, default_value_t = 7)]
    window: usize,
    #[arg(short, long, default_value_t = 100)]
    d: usize,
    #[arg(long, default_value = "closed")]
    mode: IntervalMode,
    #[arg(long, value_enum, default_value = "log1p")]
    transform: Transform,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    #[command(flatten)]
    graph: GraphInput,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    ))
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_graph(input: &GraphInput) -> Result<AttributedGraph> {
    let mut edges = Vec::new();
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(&input.edges)?);
    for rec in r.records() {
        let rec = rec?;
        if rec.len() != 2 {
            bail!("{}: edge rows need two fields", input.edges.display());
        }
        edges.push((rec[0].to_string(), rec[1].to_string()));
    }
    let mut attrs = Vec::new();
    match &input.nodes {
        Some(path) => {
            let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
            for rec in r.records() {
                let rec = rec?;
                let line = rec.position().map_or(0, |p| p.line());
                if rec.len() != 2 {
                    bail!("{}:{line}: node rows need two fields", path.display());
                }
                let value: f64 = rec[1]
                    .parse()
                    .with_context(|| format!("{}:{line}: bad attribute `{}`", path.display(), &rec[1]))?;
                attrs.push((rec[0].to_string(), value));
            }
        }
        None => {
            let mut seen: Vec<String> = edges.iter().flat_map(|(u, v)| [u.clone(), v.clone()]).collect();
            seen.sort();
            seen.dedup();
            attrs = seen.into_iter().map(|l| (l, 0.0)).collect();
        }
    }
    Ok(AttributedGraph::build(edges, attrs)?)
}

fn parse_policy(s: &str) -> Result<InfinitePolicy> {
    if s == "drop" {
        return Ok(InfinitePolicy::Drop);
    }
    let c: f64 = s.parse().with_context(|| format!("--infinite expects `drop` or a number, got `{s}`"))?;
    Ok(InfinitePolicy::Replace(c))
}

fn read_diagram(path: &Path) -> Result<PersistenceDiagram> {
    PersistenceDiagram::read_csv(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn cmd_pd(args: &PdArgs) -> Result<()> {
    let g = read_graph(&args.graph)?;
    let f = match args.filtration {
        FiltrationKind::LowerStar => lower_star(&g),
        FiltrationKind::Rips => vietoris_rips(&g.geodesic_distances(), args.t_max)?,
    };
    let opts = PersistenceOptions {
        keep_zero_persistence: args.keep_zero_persistence,
    };
    let pd = compute_persistence(&f, opts)?;
    pd.write_csv(sink(args.output.as_deref())?)?;
    Ok(())
}

fn cmd_vectorize(args: &VectorizeArgs) -> Result<()> {
    let pd = read_diagram(&args.diagram)?;
    let policy = match &args.infinite {
        Some(s) => parse_policy(s)?,
        None => InfinitePolicy::Replace(args.hi),
    };
    let pd = pd.resolve_infinite(policy)?;
    let grid = Grid::uniform(args.lo, args.hi, args.d)?;
    let weight = match args.weight {
        Weight::Constant => WeightFunction::Constant,
        Weight::Persistence => WeightFunction::LinearPersistence,
    };
    let mut dims: Vec<usize> = pd.points().iter().map(|p| p.dim).collect();
    dims.dedup();
    if dims.is_empty() {
        dims.push(0);
    }
    let rows = dims
        .into_iter()
        .map(|dim| {
            let bf = BettiFunction::from_diagram(&pd.of_dimension(dim), &weight)?;
            Ok(match args.method {
                Method::Vab => DimensionVector::averaged(dim, &bf, &grid),
                Method::Common => DimensionVector::common(dim, &bf, &grid),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let layout = match args.layout {
        Layout::Long => VectorLayout::Long,
        Layout::Wide => VectorLayout::Wide,
    };
    write_vectors_csv(&rows, layout, sink(args.output.as_deref())?)?;
    Ok(())
}

fn cmd_distance(args: &DistanceArgs) -> Result<()> {
    let (mut a, mut b) = (read_diagram(&args.a)?, read_diagram(&args.b)?);
    if let Some(dim) = args.dim {
        a = a.of_dimension(dim);
        b = b.of_dimension(dim);
    }
    let policy = match &args.infinite {
        Some(s) => parse_policy(s)?,
        None => {
            let top = a
                .points()
                .iter()
                .chain(b.points())
                .flat_map(|p| [p.birth, p.death])
                .filter(|x| x.is_finite())
                .fold(f64::NEG_INFINITY, f64::max);
            if top.is_finite() {
                InfinitePolicy::Replace(top)
            } else {
                InfinitePolicy::Drop
            }
        }
    };
    let (a, b) = (a.resolve_infinite(policy)?, b.resolve_infinite(policy)?);
    let report = match args.metric {
        Metric::Wasserstein => {
            let norm: Norm = args.norm.parse()?;
            let m = wasserstein(&a, &b, norm, args.q)?;
            json!({ "metric": "wasserstein", "q": args.q, "norm": args.norm, "cost": m.cost, "pairs": m.pairs })
        }
        Metric::Bottleneck => json!({ "metric": "bottleneck", "cost": bottleneck(&a, &b)? }),
    };
    let mut out = sink(None)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_depth(args: &DepthArgs) -> Result<()> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(&args.vectors)?);
    let dated = r.headers()?.get(0) == Some("date");
    let skip = usize::from(dated);
    // series per dimension, in file order
    let mut series: BTreeMap<usize, (Vec<String>, Vec<Vec<f64>>)> = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let dim: usize = rec
            .get(skip)
            .unwrap_or("")
            .parse()
            .with_context(|| format!("line {line}: bad dim"))?;
        let date = if dated { rec[0].to_string() } else { (i + 1).to_string() };
        let values = rec
            .iter()
            .skip(skip + 1)
            .map(|f| f.parse::<f64>().with_context(|| format!("line {line}: bad value `{f}`")))
            .collect::<Result<Vec<f64>>>()?;
        let entry = series.entry(dim).or_default();
        entry.0.push(date);
        entry.1.push(values);
    }
    let mut rows = Vec::new();
    for (dim, (dates, curves)) in series {
        let depths = rolling_depth(&curves, args.window, args.mode)?;
        rows.extend(dates.into_iter().zip(depths).map(|(d, v)| (d, dim, v)));
    }
    write_depth_csv(&rows, sink(args.output.as_deref())?)?;
    Ok(())
}

fn cmd_changepoint(args: &ChangepointArgs) -> Result<()> {
    let s = SeriesMatrix::read_csv(open(&args.series)?)?;
    let result = e_divisive(&s, &args.ecp.config(args.seed))?;
    let mut out = sink(None)?;
    serde_json::to_writer_pretty(&mut out, &result)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut cfg: SimConfig = match &args.config {
        Some(p) => serde_json::from_reader(open(p)?).with_context(|| format!("parsing {}", p.display()))?,
        None => SimConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let report = run_cpd_experiment(&cfg, args.runs)?;
    let mut out = sink(args.output.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    if let Some(p) = &args.mae_csv {
        report.write_mae_csv(sink(Some(p))?)?;
    }
    if let Some(p) = &args.regime_csv {
        report.write_regime_csv(sink(Some(p))?)?;
    }
    Ok(())
}

fn cmd_features(args: &FeaturesArgs) -> Result<()> {
    let ledger = read_ledger(open(&args.ledger)?).with_context(|| format!("reading {}", args.ledger.display()))?;
    let prices = read_prices(open(&args.prices)?).with_context(|| format!("reading {}", args.prices.display()))?;
    let ingest = IngestConfig {
        min_transactions: args.min_transactions,
        top_m: args.top_m,
        transform: match args.transform {
            Transform::Log1p => AmountTransform::Log1p,
            Transform::Raw => AmountTransform::Raw,
        },
    };
    let graphs = ingest_transactions(&ledger, &ingest)?;
    let cfg = FeatureConfig {
        delta: args.delta,
        horizon: args.horizon,
        window: args.window,
        d: args.d,
        mode: args.mode,
    };
    let rows = feature_table(&graphs, &prices, &cfg)?;
    write_feature_csv(&rows, sink(args.output.as_deref())?)?;
    Ok(())
}

fn cmd_summarize(args: &SummarizeArgs) -> Result<()> {
    let g = read_graph(&args.graph)?;
    let report = json!({
        "nodes": g.node_count(),
        "summary": GraphSummary::of(&g),
        "motifs": motif_counts_3(&g),
        "average_local_clustering": average_local_clustering(&g),
    });
    let mut out = sink(None)?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Pd(a) => cmd_pd(a),
        Command::Vectorize(a) => cmd_vectorize(a),
        Command::Distance(a) => cmd_distance(a),
        Command::Depth(a) => cmd_depth(a),
        Command::Changepoint(a) => cmd_changepoint(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Features(a) => cmd_features(a),
        Command::Summarize(a) => cmd_summarize(a),
    }
}
