//! E-divisive multiple change-point estimation.
//!
//! Segments are split at the index maximizing the scaled energy divergence
//! between the two sides; a split is kept when a permutation test on the
//! segment rejects homogeneity, and both halves are then examined in turn.

use std::io::Read;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are time steps, columns are features.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesMatrix {
    rows: Vec<Vec<f64>>,
}

impl SeriesMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = rows.first() {
            let width = first.len();
            if width == 0 {
                return Err(Error::invalid("series rows must have at least one feature"));
            }
            for row in &rows {
                if row.len() != width {
                    return Err(Error::LengthMismatch {
                        expected: width,
                        got: row.len(),
                    });
                }
                if row.iter().any(|x| !x.is_finite()) {
                    return Err(Error::invalid("series contains non-finite values"));
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&x| vec![x]).collect())
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Reads a headed CSV whose columns are all numeric features.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let row = record
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::Parse {
                        line,
                        msg: format!("`{f}` is not a number"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }
}

fn distance(a: &[f64], b: &[f64], alpha: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    sq.sqrt().powf(alpha)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::invalid("energy exponent alpha must lie in (0, 2)"))
    }
}

fn mean_within(x: &[Vec<f64>], alpha: f64) -> f64 {
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..n {
        for k in i + 1..n {
            sum += distance(&x[i], &x[k], alpha);
        }
    }
    sum / (n * (n - 1) / 2) as f64
}

/// Empirical energy divergence `Ê(X, Y)`.
pub fn energy_divergence(x: &[Vec<f64>], y: &[Vec<f64>], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if x.is_empty() || y.is_empty() {
        return Err(Error::invalid("both samples must be nonempty"));
    }
    let mut cross = 0.0;
    for a in x {
        for b in y {
            cross += distance(a, b, alpha);
        }
    }
    let (n, m) = (x.len() as f64, y.len() as f64);
    Ok(2.0 * cross / (n * m) - mean_within(x, alpha) - mean_within(y, alpha))
}

/// Scaled statistic `Q̂ = nm/(n+m) · Ê`.
pub fn scaled_energy(x: &[Vec<f64>], y: &[Vec<f64>], alpha: f64) -> Result<f64> {
    let (n, m) = (x.len() as f64, y.len() as f64);
    Ok(n * m / (n + m) * energy_divergence(x, y, alpha)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EDivisiveConfig {
    pub alpha: f64,
    pub permutations: usize,
    pub significance: f64,
    pub min_size: usize,
    pub seed: u64,
}

impl Default for EDivisiveConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            permutations: 199,
            significance: 0.05,
            min_size: 10,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChangePointResult {
    /// 1-based index of the first observation of each new segment, ascending.
    pub estimates: Vec<usize>,
    /// Permutation p-value of each estimate, aligned with `estimates`.
    pub p_values: Vec<f64>,
    /// Estimates in the order they were accepted.
    pub order_found: Vec<usize>,
}

/// Pairwise `‖x_i − x_j‖^α` over the whole series.
struct Distances {
    n: usize,
    d: Vec<f64>,
}

impl Distances {
    fn new(rows: &[Vec<f64>], alpha: f64) -> Self {
        let n = rows.len();
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let x = distance(&rows[i], &rows[j], alpha);
                d[i * n + j] = x;
                d[j * n + i] = x;
            }
        }
        Self { n, d }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    /// Best split of the observations `idx` (in order): returns the size of
    /// the left part and its `Q̂`. Both parts keep at least `min_size` items.
    fn best_split(&self, idx: &[usize], min_size: usize) -> Option<(usize, f64)> {
        let n = idx.len();
        if n < 2 * min_size.max(1) {
            return None;
        }
        // moving element tau from the right part to the left part
        let mut left_sum = vec![0.0; n]; // Σ_{i<tau} d(i, tau)
        let mut right_sum = vec![0.0; n]; // Σ_{j>tau} d(tau, j)
        let mut total = 0.0;
        for a in 0..n {
            for b in a + 1..n {
                let x = self.get(idx[a], idx[b]);
                right_sum[a] += x;
                left_sum[b] += x;
                total += x;
            }
        }
        let (mut within_left, mut within_right, mut cross) = (0.0, total, 0.0);
        let mut best: Option<(usize, f64)> = None;
        for tau in 1..n {
            let moved = tau - 1;
            within_left += left_sum[moved];
            within_right -= right_sum[moved];
            cross += right_sum[moved] - left_sum[moved];
            if tau < min_size || n - tau < min_size {
                continue;
            }
            let (l, r) = (tau as f64, (n - tau) as f64);
            let mean_l = if tau > 1 { within_left / (l * (l - 1.0) / 2.0) } else { 0.0 };
            let mean_r = if n - tau > 1 { within_right / (r * (r - 1.0) / 2.0) } else { 0.0 };
            let e = 2.0 * cross / (l * r) - mean_l - mean_r;
            let q = l * r / (l + r) * e;
            if best.is_none_or(|(_, bq)| q > bq) {
                best = Some((tau, q));
            }
        }
        best
    }
}

fn mix_seed(seed: u64, start: usize, end: usize, replicate: usize) -> u64 {
    // splitmix64 finalizer over the combined key
    let mut z = seed
        ^ (start as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (end as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
        ^ (replicate as u64).wrapping_mul(0x1656_67B1_9E37_79F9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Candidate {
    start: usize,
    end: usize,
    split: Option<(usize, f64)>,
}

pub fn e_divisive(series: &SeriesMatrix, cfg: &EDivisiveConfig) -> Result<ChangePointResult> {
    check_alpha(cfg.alpha)?;
    if cfg.permutations == 0 {
        return Err(Error::invalid("at least one permutation is required"));
    }
    if cfg.min_size == 0 {
        return Err(Error::invalid("min_size must be at least 1"));
    }
    let need = 2 * cfg.min_size;
    if series.len() < need {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            need,
        });
    }
    let dist = Distances::new(series.rows(), cfg.alpha);
    let candidate = |start: usize, end: usize| {
        let idx: Vec<usize> = (start..end).collect();
        Candidate {
            start,
            end,
            split: dist.best_split(&idx, cfg.min_size),
        }
    };

    let mut pending = vec![candidate(0, series.len())];
    let mut found: Vec<(usize, f64)> = Vec::new();
    loop {
        // strongest remaining split first; ties go to the earlier segment
        let next = pending
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.split.map(|(_, q)| (i, q, c.start)))
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)));
        let Some((pos, observed, _)) = next else {
            break;
        };
        let seg = pending.swap_remove(pos);
        let (tau, _) = seg.split.expect("filtered above");

        let exceed: usize = (0..cfg.permutations)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, seg.start, seg.end, r));
                let mut idx: Vec<usize> = (seg.start..seg.end).collect();
                idx.shuffle(&mut rng);
                let q = dist.best_split(&idx, cfg.min_size).map_or(f64::NEG_INFINITY, |s| s.1);
                usize::from(q >= observed)
            })
            .sum();
        let p_value = (1 + exceed) as f64 / (cfg.permutations + 1) as f64;
        if p_value > cfg.significance {
            continue;
        }
        let cut = seg.start + tau;
        found.push((cut + 1, p_value));
        pending.push(candidate(seg.start, cut));
        pending.push(candidate(cut, seg.end));
    }

    let order_found = found.iter().map(|f| f.0).collect();
    found.sort_by_key(|f| f.0);
    Ok(ChangePointResult {
        estimates: found.iter().map(|f| f.0).collect(),
        p_values: found.iter().map(|f| f.1).collect(),
        order_found,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn scalars(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn divergence_examples() {
        let x = scalars(&[0.0, 0.0]);
        let y = scalars(&[1.0, 1.0]);
        assert_eq!(energy_divergence(&x, &y, 1.0).unwrap(), 2.0);
        assert_eq!(scaled_energy(&x, &y, 1.0).unwrap(), 2.0);
        assert_eq!(scaled_energy(&scalars(&[0.0]), &scalars(&[0.0]), 1.0).unwrap(), 0.0);
        assert!(energy_divergence(&x, &y, 2.0).is_err());
        assert!(energy_divergence(&x, &y, 0.0).is_err());
        assert!(energy_divergence(&[], &y, 1.0).is_err());
    }

    #[test]
    fn incremental_split_matches_direct_statistic() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64 * 0.7).sin(), (i % 4) as f64]).collect();
        let dist = Distances::new(&rows, 1.3);
        let idx: Vec<usize> = (0..30).collect();
        let (tau, q) = dist.best_split(&idx, 3).unwrap();
        let mut best = (0, f64::NEG_INFINITY);
        for t in 3..=27 {
            let v = scaled_energy(&rows[..t], &rows[t..], 1.3).unwrap();
            if v > best.1 {
                best = (t, v);
            }
        }
        assert_eq!(tau, best.0);
        assert!((q - best.1).abs() < 1e-9);
    }

    #[test]
    fn clean_shift() {
        let mut v = vec![0.0; 50];
        v.extend([1.0; 50]);
        let s = SeriesMatrix::from_scalars(&v).unwrap();
        let r = e_divisive(&s, &EDivisiveConfig::default()).unwrap();
        assert_eq!(r.estimates, [51]);
        assert_eq!(r.p_values, [1.0 / 200.0]);
    }

    #[test]
    fn constant_series_has_no_change() {
        let s = SeriesMatrix::from_scalars(&[3.0; 60]).unwrap();
        let r = e_divisive(&s, &EDivisiveConfig::default()).unwrap();
        assert!(r.estimates.is_empty());
    }

    #[test]
    fn rejects_bad_configs() {
        let s = SeriesMatrix::from_scalars(&[0.0; 15]).unwrap();
        assert!(matches!(
            e_divisive(&s, &EDivisiveConfig::default()),
            Err(Error::SeriesTooShort { len: 15, need: 20 })
        ));
        let long = SeriesMatrix::from_scalars(&[0.0; 40]).unwrap();
        let cfg = EDivisiveConfig { permutations: 0, ..Default::default() };
        assert!(e_divisive(&long, &cfg).is_err());
        let cfg = EDivisiveConfig { alpha: 2.0, ..Default::default() };
        assert!(e_divisive(&long, &cfg).is_err());
        assert!(SeriesMatrix::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn three_changes_in_two_dimensions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let means = [0.0, 3.0, -2.0, 1.5];
        let rows: Vec<Vec<f64>> = (0..160)
            .map(|t| {
                let m = means[t / 40];
                vec![m + rng.sample::<f64, _>(StandardNormal) * 0.3, rng.sample(StandardNormal)]
            })
            .collect();
        let r = e_divisive(&SeriesMatrix::new(rows).unwrap(), &EDivisiveConfig::default()).unwrap();
        assert_eq!(r.estimates.len(), 3);
        for (est, truth) in r.estimates.iter().zip([41, 81, 121]) {
            assert!(est.abs_diff(truth) <= 2, "{est} vs {truth}");
        }
        for w in r.estimates.windows(2) {
            assert!(w[1] - w[0] >= 10);
        }
    }

    #[test]
    fn csv_parsing() {
        let s = SeriesMatrix::read_csv("a,b\n1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(s.rows(), [vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert!(matches!(
            SeriesMatrix::read_csv("a\nx\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn divergence_symmetric_and_order_free(
            x in proptest::collection::vec(-5.0..5.0f64, 1..8),
            y in proptest::collection::vec(-5.0..5.0f64, 1..8),
            alpha in 0.1..1.9f64,
        ) {
            let (xs, ys) = (scalars(&x), scalars(&y));
            let a = energy_divergence(&xs, &ys, alpha).unwrap();
            let b = energy_divergence(&ys, &xs, alpha).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
            let mut xr = xs.clone();
            xr.reverse();
            let c = energy_divergence(&xr, &ys, alpha).unwrap();
            prop_assert!((a - c).abs() < 1e-9);
        }

        #[test]
        fn deterministic_and_spaced(seed in any::<u64>(), min_size in 3usize..12) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v: Vec<f64> = (0..80).map(|t| if t < 35 { 0.0 } else { 1.0 } + rng.random::<f64>()).collect();
            let s = SeriesMatrix::from_scalars(&v).unwrap();
            let cfg = EDivisiveConfig { seed, min_size, permutations: 49, ..Default::default() };
            let a = e_divisive(&s, &cfg).unwrap();
            prop_assert_eq!(&a, &e_divisive(&s, &cfg).unwrap());
            let mut bounds = vec![1];
            bounds.extend(&a.estimates);
            bounds.push(81);
            for w in bounds.windows(2) {
                prop_assert!(w[1] - w[0] >= min_size);
            }
        }
    }
}
