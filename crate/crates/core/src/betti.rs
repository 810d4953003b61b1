//! Betti functions as exact step functions, and their two vectorizations:
//! pointwise sampling and interval averaging (VAB).

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;

/// Weight attached to each `[birth, death)` interval.
#[derive(Clone)]
pub enum WeightFunction {
    /// `w ≡ 1`: plain Betti numbers.
    Constant,
    /// `w(b, d) = d − b`.
    LinearPersistence,
    /// Any bounded differentiable weight with caller-reported sup norms of
    /// the function and of its gradient.
    Custom {
        func: Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>,
        sup_norm: f64,
        grad_sup_norm: f64,
    },
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightFunction::Constant => f.write_str("Constant"),
            WeightFunction::LinearPersistence => f.write_str("LinearPersistence"),
            WeightFunction::Custom {
                sup_norm,
                grad_sup_norm,
                ..
            } => f
                .debug_struct("Custom")
                .field("sup_norm", sup_norm)
                .field("grad_sup_norm", grad_sup_norm)
                .finish(),
        }
    }
}

impl WeightFunction {
    pub fn eval(&self, birth: f64, death: f64) -> f64 {
        match self {
            WeightFunction::Constant => 1.0,
            WeightFunction::LinearPersistence => death - birth,
            WeightFunction::Custom { func, .. } => func(birth, death),
        }
    }

    /// `(‖w‖∞, ‖∇w‖∞)` over diagrams whose points lie in a square of side
    /// `extent`. Only the linear weight depends on the extent.
    pub fn sup_norms(&self, extent: f64) -> (f64, f64) {
        match self {
            WeightFunction::Constant => (1.0, 0.0),
            WeightFunction::LinearPersistence => (extent.abs(), std::f64::consts::SQRT_2),
            WeightFunction::Custom {
                sup_norm,
                grad_sup_norm,
                ..
            } => (*sup_norm, *grad_sup_norm),
        }
    }

    /// Lipschitz constant `‖w‖∞ + L‖∇w‖∞` relating Betti-function L1
    /// distance to the L1 1-Wasserstein distance, with `L` the largest
    /// persistence in either diagram.
    pub fn stability_constant(&self, extent: f64, max_persistence: f64) -> f64 {
        let (w, grad) = self.sup_norms(extent);
        w + max_persistence * grad
    }
}

/// Piecewise-constant function: `values[k]` on `[breaks[k], breaks[k+1])`,
/// zero outside `[breaks[0], breaks[last])`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BettiFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl BettiFunction {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `Σ w(b, d) χ_[b, d)` over the points of `pd` (all dimensions present).
    pub fn from_diagram(pd: &PersistenceDiagram, weight: &WeightFunction) -> Result<Self> {
        if !pd.is_finite() {
            return Err(Error::InfiniteDeath);
        }
        let mut events: Vec<(f64, f64)> = Vec::with_capacity(2 * pd.len());
        for p in pd.points() {
            if p.death > p.birth {
                let w = weight.eval(p.birth, p.death);
                events.push((p.birth, w));
                events.push((p.death, -w));
            }
        }
        if events.is_empty() {
            return Ok(Self::zero());
        }
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut breaks = Vec::new();
        let mut values = Vec::new();
        let mut level = 0.0;
        let mut i = 0;
        while i < events.len() {
            let t = events[i].0;
            while i < events.len() && events[i].0 == t {
                level += events[i].1;
                i += 1;
            }
            breaks.push(t);
            if i < events.len() {
                values.push(level);
            }
        }
        Ok(Self { breaks, values })
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn segment_values(&self) -> &[f64] {
        &self.values
    }

    /// Right-continuous evaluation.
    pub fn eval(&self, t: f64) -> f64 {
        if self.values.is_empty() || t < self.breaks[0] || t >= self.breaks[self.breaks.len() - 1] {
            return 0.0;
        }
        let k = self.breaks.partition_point(|&b| b <= t) - 1;
        self.values[k]
    }

    /// `∫_lo^hi β(t) dt` for `lo <= hi`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        let mut total = 0.0;
        for (k, &v) in self.values.iter().enumerate() {
            let a = self.breaks[k].max(lo);
            let b = self.breaks[k + 1].min(hi);
            if b > a {
                total += v * (b - a);
            }
        }
        total
    }

    /// Exact `∫ |self − other|`.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        let mut ts: Vec<f64> = self.breaks.iter().chain(&other.breaks).copied().collect();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        ts.windows(2)
            .map(|w| (self.eval(w[0]) - other.eval(w[0])).abs() * (w[1] - w[0]))
            .sum()
    }

    /// `(β(t_1), …, β(t_d))`.
    pub fn vectorize_common(&self, grid: &Grid) -> Vec<f64> {
        grid.points.iter().map(|&t| self.eval(t)).collect()
    }

    /// Average of `β` over each grid cell `[t_k, t_{k+1}]`.
    pub fn vectorize_averaged(&self, grid: &Grid) -> Vab {
        let values = grid
            .points
            .windows(2)
            .map(|w| self.integral(w[0], w[1]) / (w[1] - w[0]))
            .collect();
        Vab {
            values,
            grid: grid.clone(),
        }
    }
}

/// Strictly increasing finite evaluation points.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        let ok = !points.is_empty()
            && points.iter().all(|t| t.is_finite())
            && points.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::InvalidGrid);
        }
        Ok(Self { points })
    }

    /// `d` equally spaced points from `lo` to `hi` inclusive.
    pub fn uniform(lo: f64, hi: f64, d: usize) -> Result<Self> {
        if d < 2 || lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            return Err(Error::InvalidGrid);
        }
        let step = (hi - lo) / (d - 1) as f64;
        let points = (0..d)
            .map(|k| if k == d - 1 { hi } else { lo + step * k as f64 })
            .collect();
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Vector of averaged Betti values: one entry per grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct Vab {
    pub values: Vec<f64>,
    pub grid: Grid,
}

impl Vab {
    pub fn l1_norm_diff(&self, other: &Vab) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

pub fn betti_function(pd: &PersistenceDiagram, weight: &WeightFunction) -> Result<BettiFunction> {
    BettiFunction::from_diagram(pd, weight)
}

/// Vector CSV layouts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VectorLayout {
    /// `dim,k,t_lo,t_hi,value`
    Long,
    /// `dim,v1,…,vN`
    Wide,
}

/// One vectorized Betti function per homological dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionVector {
    pub dim: usize,
    pub values: Vec<f64>,
    /// `(t_lo, t_hi)` per entry; equal bounds for pointwise samples.
    pub cells: Vec<(f64, f64)>,
}

impl DimensionVector {
    pub fn common(dim: usize, bf: &BettiFunction, grid: &Grid) -> Self {
        Self {
            dim,
            values: bf.vectorize_common(grid),
            cells: grid.points().iter().map(|&t| (t, t)).collect(),
        }
    }

    pub fn averaged(dim: usize, bf: &BettiFunction, grid: &Grid) -> Self {
        Self {
            dim,
            values: bf.vectorize_averaged(grid).values,
            cells: grid.points().windows(2).map(|w| (w[0], w[1])).collect(),
        }
    }
}

pub fn write_vectors_csv<W: Write>(rows: &[DimensionVector], layout: VectorLayout, writer: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
    match layout {
        VectorLayout::Long => {
            w.write_record(["dim", "k", "t_lo", "t_hi", "value"])?;
            for row in rows {
                for (k, (v, (lo, hi))) in row.values.iter().zip(&row.cells).enumerate() {
                    w.write_record([
                        row.dim.to_string(),
                        (k + 1).to_string(),
                        lo.to_string(),
                        hi.to_string(),
                        v.to_string(),
                    ])?;
                }
            }
        }
        VectorLayout::Wide => {
            let width = rows.iter().map(|r| r.values.len()).max().unwrap_or(0);
            let mut header = vec!["dim".to_owned()];
            header.extend((1..=width).map(|k| format!("v{k}")));
            w.write_record(&header)?;
            for row in rows {
                let mut record = vec![row.dim.to_string()];
                record.extend(row.values.iter().map(f64::to_string));
                w.write_record(&record)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
