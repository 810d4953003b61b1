//! Classical graph summaries: 3-node motif counts, transitivity, degree
//! assortativity and Freeman degree centralization.
//!
//! Statistics that are undefined on a given graph come back as `None`.

use serde::{Deserialize, Serialize};

use crate::graph::AttributedGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifCounts {
    /// Two-edge paths that are not closed into a triangle.
    pub wedges: u64,
    pub triangles: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub edge_count: u64,
    pub clustering: Option<f64>,
    pub assortativity: Option<f64>,
    pub centralization: Option<f64>,
}

impl GraphSummary {
    pub fn of(g: &AttributedGraph) -> Self {
        Self {
            edge_count: g.edge_count() as u64,
            clustering: global_clustering(g),
            assortativity: degree_assortativity(g),
            centralization: degree_centralization(g),
        }
    }
}

fn connected_triples(g: &AttributedGraph) -> u64 {
    g.degrees()
        .into_iter()
        .map(|d| {
            let d = d as u64;
            d * d.saturating_sub(1) / 2
        })
        .sum()
}

pub fn motif_counts_3(g: &AttributedGraph) -> MotifCounts {
    let triangles = g.triangles().len() as u64;
    MotifCounts {
        wedges: connected_triples(g) - 3 * triangles,
        triangles,
    }
}

/// Transitivity: `3 * triangles / connected triples`.
pub fn global_clustering(g: &AttributedGraph) -> Option<f64> {
    let triples = connected_triples(g);
    if triples == 0 {
        return None;
    }
    Some(3.0 * g.triangles().len() as f64 / triples as f64)
}

/// Mean of local clustering coefficients; nodes of degree < 2 contribute 0.
pub fn average_local_clustering(g: &AttributedGraph) -> Option<f64> {
    let n = g.node_count();
    if n == 0 {
        return None;
    }
    let mut closed = vec![0u64; n];
    for [a, b, c] in g.triangles() {
        closed[a] += 1;
        closed[b] += 1;
        closed[c] += 1;
    }
    let total: f64 = (0..n)
        .map(|v| {
            let d = g.degree(v) as u64;
            if d < 2 {
                0.0
            } else {
                closed[v] as f64 / (d * (d - 1) / 2) as f64
            }
        })
        .sum();
    Some(total / n as f64)
}

/// Pearson correlation of endpoint degrees over both orientations of every edge.
///
/// Both marginals of the symmetrised endpoint list coincide, so the
/// coefficient reduces to `(M Σxy − S²) / (M Σx² − S²)`; it is evaluated in
/// integers so that the zero-variance case is detected exactly.
pub fn degree_assortativity(g: &AttributedGraph) -> Option<f64> {
    let deg = g.degrees();
    let (mut m, mut s, mut sxx, mut sxy) = (0i128, 0i128, 0i128, 0i128);
    for &(u, v) in g.edges() {
        let (x, y) = (deg[u] as i128, deg[v] as i128);
        m += 2;
        s += x + y;
        sxx += x * x + y * y;
        sxy += 2 * x * y;
    }
    let var = m * sxx - s * s;
    if m == 0 || var == 0 {
        return None;
    }
    Some((m * sxy - s * s) as f64 / var as f64)
}

/// Freeman degree centralization `Σ (deg_max − deg_v) / ((n−1)(n−2))`.
pub fn degree_centralization(g: &AttributedGraph) -> Option<f64> {
    let n = g.node_count();
    if n < 3 {
        return None;
    }
    let deg = g.degrees();
    let max = *deg.iter().max()?;
    let spread: usize = deg.iter().map(|d| max - d).sum();
    Some(spread as f64 / ((n - 1) * (n - 2)) as f64)
}
