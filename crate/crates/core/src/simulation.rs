//! Random dot product graph simulation and the change-point experiment
//! comparing topological and classical graph features.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::betti::{BettiFunction, Grid, WeightFunction};
use crate::changepoint::{e_divisive, EDivisiveConfig, SeriesMatrix};
use crate::error::{Error, Result};
use crate::filtration::lower_star;
use crate::graph::AttributedGraph;
use crate::persistence::{compute_persistence, InfinitePolicy, PersistenceOptions};
use crate::stats::{average_local_clustering, motif_counts_3, GraphSummary};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    /// Dirichlet dimension.
    pub m: usize,
    /// One parameter vector per regime.
    pub alphas: Vec<Vec<f64>>,
    /// Nodes per graph.
    pub n: usize,
    pub steps_per_regime: usize,
    /// Grid size for the Betti vectors.
    pub d: usize,
    pub seed: u64,
    pub scaling: AttributeScaling,
    pub ecp: EDivisiveConfig,
}

/// How entropy attributes are mapped into `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeScaling {
    /// Divide by the largest possible entropy, `log m`.
    #[default]
    MaxEntropy,
    /// Per-graph min-max rescaling.
    MinMax,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            m: 3,
            alphas: vec![
                vec![1.5, 1.5, 1.5],
                vec![2.0, 2.0, 2.0],
                vec![2.0, 2.0, 3.5],
                vec![2.0, 0.5, 2.0],
            ],
            n: 100,
            steps_per_regime: 50,
            d: 5,
            seed: 0,
            scaling: AttributeScaling::default(),
            ecp: EDivisiveConfig::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(Error::invalid("at least one regime is required"));
        }
        for a in &self.alphas {
            if a.len() != self.m {
                return Err(Error::LengthMismatch {
                    expected: self.m,
                    got: a.len(),
                });
            }
            check_alpha(a)?;
        }
        if self.n < 2 {
            return Err(Error::invalid("graphs need at least two nodes"));
        }
        if self.steps_per_regime == 0 {
            return Err(Error::invalid("steps_per_regime must be at least 1"));
        }
        if self.d < 2 {
            return Err(Error::InvalidGrid);
        }
        Ok(())
    }

    /// 1-based indices at which a new regime starts.
    pub fn true_change_points(&self) -> Vec<usize> {
        (1..self.alphas.len()).map(|k| k * self.steps_per_regime + 1).collect()
    }
}

fn check_alpha(alpha: &[f64]) -> Result<()> {
    if alpha.is_empty() || alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::invalid("Dirichlet parameters must be positive and finite"));
    }
    Ok(())
}

/// `n` Dirichlet draws by normalizing independent `Gamma(α_i, 1)` variables.
pub fn sample_dirichlet_with<R: Rng + ?Sized>(alpha: &[f64], n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    check_alpha(alpha)?;
    let gammas = alpha
        .iter()
        .map(|&a| Gamma::new(a, 1.0).map_err(|e| Error::invalid(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let draw: Vec<f64> = gammas.iter().map(|g| g.sample(rng)).collect();
        let total: f64 = draw.iter().sum();
        // all draws can underflow for tiny shapes
        if total > 0.0 {
            out.push(draw.into_iter().map(|x| x / total).collect());
        }
    }
    Ok(out)
}

pub fn sample_dirichlet(alpha: &[f64], n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    sample_dirichlet_with(alpha, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `−Σ x_i log x_i` with `0 · log 0 = 0`.
pub fn entropy(x: &[f64]) -> f64 {
    -x.iter().filter(|&&v| v > 0.0).map(|&v| v * v.ln()).sum::<f64>()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Random dot product graph on `points` with entropy attributes scaled
/// into `[0, 1]`.
pub fn rdpg_scaled<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    scaling: AttributeScaling,
    rng: &mut R,
) -> Result<AttributedGraph> {
    let n = points.len();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = dot(&points[u], &points[v]).clamp(0.0, 1.0);
            if rng.random::<f64>() < p {
                edges.push((u, v));
            }
        }
    }
    let attr: Vec<f64> = points.iter().map(|x| entropy(x)).collect();
    match scaling {
        AttributeScaling::MinMax => Ok(AttributedGraph::from_indexed(attr, &edges)?.normalize_attributes()),
        AttributeScaling::MaxEntropy => {
            let m = points.first().map_or(1, Vec::len);
            let top = if m > 1 { (m as f64).ln() } else { 1.0 };
            AttributedGraph::from_indexed(attr.into_iter().map(|a| a / top).collect(), &edges)
        }
    }
}

/// Random dot product graph with min-max normalized entropy attributes.
pub fn rdpg_with<R: Rng + ?Sized>(points: &[Vec<f64>], rng: &mut R) -> Result<AttributedGraph> {
    rdpg_scaled(points, AttributeScaling::MinMax, rng)
}

pub fn rdpg(points: &[Vec<f64>], seed: u64) -> Result<AttributedGraph> {
    rdpg_with(points, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Feature families fed to change-point detection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureFamily {
    CommonBetti0,
    CommonBetti1,
    Vab0,
    Vab1,
    GraphSummaries,
    Motifs,
}

impl FeatureFamily {
    pub const ALL: [FeatureFamily; 6] = [
        FeatureFamily::CommonBetti0,
        FeatureFamily::CommonBetti1,
        FeatureFamily::Vab0,
        FeatureFamily::Vab1,
        FeatureFamily::GraphSummaries,
        FeatureFamily::Motifs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureFamily::CommonBetti0 => "common_betti_dim0",
            FeatureFamily::CommonBetti1 => "common_betti_dim1",
            FeatureFamily::Vab0 => "vab_dim0",
            FeatureFamily::Vab1 => "vab_dim1",
            FeatureFamily::GraphSummaries => "graph_summaries",
            FeatureFamily::Motifs => "motifs",
        }
    }
}

/// All features of one simulated graph.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphFeatures {
    pub common: [Vec<f64>; 2],
    pub vab: [Vec<f64>; 2],
    pub motifs: [f64; 2],
    /// Edge count, transitivity, assortativity, centralization.
    pub summaries: [f64; 4],
    pub local_clustering: Option<f64>,
}

impl GraphFeatures {
    /// `g` must carry attributes in `[0, 1]`.
    pub fn compute(g: &AttributedGraph, grid: &Grid) -> Result<Self> {
        let pd = compute_persistence(&lower_star(g), PersistenceOptions::default())?
            .resolve_infinite(InfinitePolicy::Replace(1.0))?;
        let mut common: [Vec<f64>; 2] = Default::default();
        let mut vab: [Vec<f64>; 2] = Default::default();
        for dim in 0..2 {
            let bf = BettiFunction::from_diagram(&pd.of_dimension(dim), &WeightFunction::Constant)?;
            common[dim] = bf.vectorize_common(grid);
            vab[dim] = bf.vectorize_averaged(grid).values;
        }
        let motifs = motif_counts_3(g);
        let s = GraphSummary::of(g);
        let imputed = |name: &str, v: Option<f64>| {
            v.unwrap_or_else(|| {
                log::warn!("{name} undefined on a {}-node graph; using 0", g.node_count());
                0.0
            })
        };
        Ok(Self {
            common,
            vab,
            motifs: [motifs.wedges as f64, motifs.triangles as f64],
            summaries: [
                s.edge_count as f64,
                imputed("clustering", s.clustering),
                imputed("assortativity", s.assortativity),
                imputed("centralization", s.centralization),
            ],
            local_clustering: average_local_clustering(g),
        })
    }

    pub fn family(&self, family: FeatureFamily) -> Vec<f64> {
        match family {
            FeatureFamily::CommonBetti0 => self.common[0].clone(),
            FeatureFamily::CommonBetti1 => self.common[1].clone(),
            FeatureFamily::Vab0 => self.vab[0].clone(),
            FeatureFamily::Vab1 => self.vab[1].clone(),
            FeatureFamily::GraphSummaries => self.summaries.to_vec(),
            FeatureFamily::Motifs => self.motifs.to_vec(),
        }
    }
}

/// Generates the graph sequence of one run and its features.
pub fn simulate_run(cfg: &SimConfig, seed: u64) -> Result<Vec<GraphFeatures>> {
    cfg.validate()?;
    let grid = Grid::uniform(0.0, 1.0, cfg.d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(cfg.alphas.len() * cfg.steps_per_regime);
    for alpha in &cfg.alphas {
        for _ in 0..cfg.steps_per_regime {
            let points = sample_dirichlet_with(alpha, cfg.n, &mut rng)?;
            graphs.push(rdpg_scaled(&points, cfg.scaling, &mut rng)?);
        }
    }
    graphs.par_iter().map(|g| GraphFeatures::compute(g, &grid)).collect()
}

/// Absolute error of the nearest estimate within 25 steps, else 50.
pub fn change_point_error(truth: usize, estimates: &[usize]) -> f64 {
    estimates
        .iter()
        .map(|&e| e.abs_diff(truth))
        .filter(|&err| err <= 25)
        .min()
        .map_or(50.0, |err| err as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub family: FeatureFamily,
    /// Mean absolute error per true change point.
    pub mae: Vec<f64>,
    /// Mean number of estimates farther than 25 steps from every true point.
    pub mean_false_positives: f64,
    /// Estimates of every run, by run index.
    pub estimates: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeMeans {
    pub regime: usize,
    pub wedges: f64,
    pub triangles: f64,
    pub edges: f64,
    pub clustering: f64,
    pub assortativity: f64,
    pub centralization: f64,
    pub common_betti_dim0_norm: f64,
    pub common_betti_dim1_norm: f64,
    pub vab_dim0_norm: f64,
    pub vab_dim1_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub runs: usize,
    pub seed: u64,
    pub true_change_points: Vec<usize>,
    pub families: Vec<FamilyReport>,
    pub regime_means: Vec<RegimeMeans>,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

struct RunOutcome {
    estimates: Vec<Vec<usize>>,
    regime_sums: Vec<[f64; 10]>,
}

fn run_once(cfg: &SimConfig, run: usize) -> Result<RunOutcome> {
    let seed = cfg.seed.wrapping_add(run as u64);
    log::info!("simulation run {run} (seed {seed})");
    let features = simulate_run(cfg, seed)?;
    let ecp = EDivisiveConfig { seed, ..cfg.ecp };
    let estimates = FeatureFamily::ALL
        .par_iter()
        .map(|&fam| {
            let rows = features.iter().map(|f| f.family(fam)).collect();
            Ok(e_divisive(&SeriesMatrix::new(rows)?, &ecp)?.estimates)
        })
        .collect::<Result<Vec<_>>>()?;
    let regime_sums = features
        .chunks(cfg.steps_per_regime)
        .map(|chunk| {
            let mut acc = [0.0; 10];
            for f in chunk {
                let row = [
                    f.motifs[0],
                    f.motifs[1],
                    f.summaries[0],
                    f.summaries[1],
                    f.summaries[2],
                    f.summaries[3],
                    norm(&f.common[0]),
                    norm(&f.common[1]),
                    norm(&f.vab[0]),
                    norm(&f.vab[1]),
                ];
                for (a, r) in acc.iter_mut().zip(row) {
                    *a += r;
                }
            }
            acc
        })
        .collect();
    Ok(RunOutcome {
        estimates,
        regime_sums,
    })
}

/// Runs the experiment `runs` times; run `i` uses seed `cfg.seed + i`.
pub fn run_cpd_experiment(cfg: &SimConfig, runs: usize) -> Result<ExperimentReport> {
    cfg.validate()?;
    if runs == 0 {
        return Err(Error::invalid("at least one run is required"));
    }
    if cfg.alphas.len() * cfg.steps_per_regime < 2 * cfg.ecp.min_size {
        return Err(Error::SeriesTooShort {
            len: cfg.alphas.len() * cfg.steps_per_regime,
            need: 2 * cfg.ecp.min_size,
        });
    }
    let outcomes = (0..runs)
        .into_par_iter()
        .map(|r| run_once(cfg, r))
        .collect::<Result<Vec<_>>>()?;

    let truth = cfg.true_change_points();
    let families = FeatureFamily::ALL
        .iter()
        .enumerate()
        .map(|(k, &family)| {
            let estimates: Vec<Vec<usize>> = outcomes.iter().map(|o| o.estimates[k].clone()).collect();
            let mae = truth
                .iter()
                .map(|&t| estimates.iter().map(|e| change_point_error(t, e)).sum::<f64>() / runs as f64)
                .collect();
            let false_positives: usize = estimates
                .iter()
                .map(|e| e.iter().filter(|&&x| truth.iter().all(|&t| x.abs_diff(t) > 25)).count())
                .sum();
            FamilyReport {
                family,
                mae,
                mean_false_positives: false_positives as f64 / runs as f64,
                estimates,
            }
        })
        .collect();

    let count = (runs * cfg.steps_per_regime) as f64;
    let regime_means = (0..cfg.alphas.len())
        .map(|k| {
            let mut s = [0.0; 10];
            for o in &outcomes {
                for (a, r) in s.iter_mut().zip(o.regime_sums[k]) {
                    *a += r;
                }
            }
            let m = s.map(|x| x / count);
            RegimeMeans {
                regime: k + 1,
                wedges: m[0],
                triangles: m[1],
                edges: m[2],
                clustering: m[3],
                assortativity: m[4],
                centralization: m[5],
                common_betti_dim0_norm: m[6],
                common_betti_dim1_norm: m[7],
                vab_dim0_norm: m[8],
                vab_dim1_norm: m[9],
            }
        })
        .collect();

    Ok(ExperimentReport {
        runs,
        seed: cfg.seed,
        true_change_points: truth,
        families,
        regime_means,
    })
}

impl ExperimentReport {
    pub fn family(&self, family: FeatureFamily) -> Option<&FamilyReport> {
        self.families.iter().find(|f| f.family == family)
    }

    /// `family,cp_<t>…,false_positives` rows.
    pub fn write_mae_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["family".to_string()];
        header.extend(self.true_change_points.iter().map(|t| format!("cp_{t}")));
        header.push("false_positives".into());
        w.write_record(&header)?;
        for f in &self.families {
            let mut row = vec![f.family.name().to_string()];
            row.extend(f.mae.iter().map(|x| x.to_string()));
            row.push(f.mean_false_positives.to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_regime_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for r in &self.regime_means {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}
