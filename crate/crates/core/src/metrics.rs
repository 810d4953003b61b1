//! Wasserstein and bottleneck distances between persistence diagrams.
//!
//! Both diagrams are augmented with diagonal slots: an `n1 + n2` square
//! assignment problem where a point may take a point of the other diagram or
//! any diagonal slot (at the cost of its orthogonal projection), and
//! diagonal-to-diagonal pairs cost nothing.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::persistence::PersistenceDiagram;

/// Ground norm on the birth-death plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Norm {
    L1,
    L2,
    LInf,
}

impl Norm {
    pub fn distance(self, a: (f64, f64), b: (f64, f64)) -> f64 {
        let (dx, dy) = ((a.0 - b.0).abs(), (a.1 - b.1).abs());
        match self {
            Norm::L1 => dx + dy,
            Norm::L2 => dx.hypot(dy),
            Norm::LInf => dx.max(dy),
        }
    }

    /// Distance from `(b, d)` to its projection `((b+d)/2, (b+d)/2)`.
    pub fn to_diagonal(self, p: (f64, f64)) -> f64 {
        let half = (p.1 - p.0).abs() / 2.0;
        match self {
            Norm::L1 => 2.0 * half,
            Norm::L2 => std::f64::consts::SQRT_2 * half,
            Norm::LInf => half,
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "l1" | "L1" => Ok(Norm::L1),
            "2" | "l2" | "L2" => Ok(Norm::L2),
            "inf" | "linf" | "Linf" | "LInf" => Ok(Norm::LInf),
            other => Err(Error::invalid(format!("unknown norm `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchEnd {
    /// Index into the sorted point list of the diagram.
    Point(usize),
    Diagonal,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatchingResult {
    pub cost: f64,
    /// `(end in first diagram, end in second diagram)`; diagonal-diagonal pairs omitted.
    pub pairs: Vec<(MatchEnd, MatchEnd)>,
}

fn finite_pairs(d: &PersistenceDiagram) -> Result<Vec<(f64, f64)>> {
    if !d.is_finite() {
        return Err(Error::InfiniteDeath);
    }
    Ok(d.pairs())
}

fn check_dimensions(a: &PersistenceDiagram, b: &PersistenceDiagram) -> Result<()> {
    match (a.single_dimension()?, b.single_dimension()?) {
        (Some(x), Some(y)) if x != y => Err(Error::MixedDimensions),
        _ => Ok(()),
    }
}

/// Augmented cost matrix, entries already raised to the power `q`.
fn augmented_costs(
    a: &[(f64, f64)],
    b: &[(f64, f64)],
    norm: Norm,
    power: impl Fn(f64) -> f64,
) -> Vec<Vec<f64>> {
    let (n1, n2) = (a.len(), b.len());
    let size = n1 + n2;
    let mut cost = vec![vec![0.0; size]; size];
    for i in 0..n1 {
        let diag = power(norm.to_diagonal(a[i]));
        for j in 0..n2 {
            cost[i][j] = power(norm.distance(a[i], b[j]));
        }
        for slot in &mut cost[i][n2..] {
            *slot = diag;
        }
    }
    for j in 0..n2 {
        let diag = power(norm.to_diagonal(b[j]));
        for row in &mut cost[n1..] {
            row[j] = diag;
        }
    }
    cost
}

/// Minimum-cost perfect assignment on a square matrix (Kuhn-Munkres with
/// potentials, O(n³)). Returns `row -> column`.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays; index 0 is the virtual start column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    way[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    assignment
}

/// `L_norm` `q`-Wasserstein distance with its optimal matching.
///
/// Both diagrams must have finite deaths and share one homological dimension.
pub fn wasserstein(
    d1: &PersistenceDiagram,
    d2: &PersistenceDiagram,
    norm: Norm,
    q: f64,
) -> Result<MatchingResult> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::invalid("q must be a finite number >= 1; use bottleneck for q = inf"));
    }
    check_dimensions(d1, d2)?;
    let (a, b) = (finite_pairs(d1)?, finite_pairs(d2)?);
    let (n1, n2) = (a.len(), b.len());
    let cost = augmented_costs(&a, &b, norm, |x| x.powf(q));
    let assignment = hungarian(&cost);

    let mut total = 0.0;
    let mut pairs = Vec::new();
    for (row, &col) in assignment.iter().enumerate() {
        total += cost[row][col];
        let left = if row < n1 { MatchEnd::Point(row) } else { MatchEnd::Diagonal };
        let right = if col < n2 { MatchEnd::Point(col) } else { MatchEnd::Diagonal };
        if left != MatchEnd::Diagonal || right != MatchEnd::Diagonal {
            pairs.push((left, right));
        }
    }
    Ok(MatchingResult {
        cost: total.powf(1.0 / q),
        pairs,
    })
}

/// Whether a perfect matching exists using only entries `<= threshold`.
fn has_perfect_matching(cost: &[Vec<f64>], threshold: f64) -> bool {
    let n = cost.len();
    let mut match_col: Vec<Option<usize>> = vec![None; n];

    fn augment(
        row: usize,
        cost: &[Vec<f64>],
        threshold: f64,
        seen: &mut [bool],
        match_col: &mut [Option<usize>],
    ) -> bool {
        for col in 0..cost.len() {
            if cost[row][col] <= threshold && !seen[col] {
                seen[col] = true;
                let free = match match_col[col] {
                    None => true,
                    Some(other) => augment(other, cost, threshold, seen, match_col),
                };
                if free {
                    match_col[col] = Some(row);
                    return true;
                }
            }
        }
        false
    }

    (0..n).all(|row| {
        let mut seen = vec![false; n];
        augment(row, cost, threshold, &mut seen, &mut match_col)
    })
}

/// Bottleneck distance under the `L∞` ground norm.
pub fn bottleneck(d1: &PersistenceDiagram, d2: &PersistenceDiagram) -> Result<f64> {
    check_dimensions(d1, d2)?;
    let (a, b) = (finite_pairs(d1)?, finite_pairs(d2)?);
    let cost = augmented_costs(&a, &b, Norm::LInf, |x| x);
    let mut candidates: Vec<f64> = cost.iter().flatten().copied().collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    if candidates.is_empty() {
        return Ok(0.0);
    }
    // smallest candidate admitting a perfect matching
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if has_perfect_matching(&cost, candidates[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(candidates[lo])
}
