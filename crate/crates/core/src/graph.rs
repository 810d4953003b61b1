//! Undirected simple graphs with one real attribute per node.
//!
//! Nodes carry their original string labels but are addressed internally by
//! dense ids `0..n`. Dense ids follow the natural order of the labels
//! (numeric labels compare as numbers, everything else lexicographically), so
//! "smaller id" and "smaller original label" coincide everywhere.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, VecDeque};

use crate::error::{Error, Result};

/// Compares node labels numerically when both parse as integers, otherwise as strings.
pub fn label_order(a: &str, b: &str) -> Ordering {
    match (a.parse::<i64>(), b.parse::<i64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttributedGraph {
    labels: Vec<String>,
    attr: Vec<f64>,
    /// Sorted neighbour lists.
    adj: Vec<Vec<usize>>,
    /// Edges as `(u, v)` with `u < v`, sorted.
    edges: Vec<(usize, usize)>,
}

impl AttributedGraph {
    /// Builds a graph from labelled edges and node attributes.
    ///
    /// Duplicate edges (in either orientation) collapse to one. Nodes listed
    /// only in `attrs` become isolated nodes.
    pub fn build<S, E, A>(edges: E, attrs: A) -> Result<Self>
    where
        S: AsRef<str>,
        E: IntoIterator<Item = (S, S)>,
        A: IntoIterator<Item = (S, f64)>,
    {
        let mut attr_map: HashMap<String, f64> = HashMap::new();
        for (label, value) in attrs {
            let label = label.as_ref().to_owned();
            if !value.is_finite() {
                return Err(Error::NonFiniteAttribute(label));
            }
            if attr_map.insert(label.clone(), value).is_some() {
                return Err(Error::DuplicateAttribute(label));
            }
        }

        let mut raw_edges = Vec::new();
        for (u, v) in edges {
            let (u, v) = (u.as_ref(), v.as_ref());
            if u == v {
                return Err(Error::SelfLoop(u.to_owned()));
            }
            for node in [u, v] {
                if !attr_map.contains_key(node) {
                    return Err(Error::MissingAttribute(node.to_owned()));
                }
            }
            raw_edges.push((u.to_owned(), v.to_owned()));
        }

        let mut labels: Vec<String> = attr_map.keys().cloned().collect();
        labels.sort_by(|a, b| label_order(a, b));
        let index: HashMap<&str, usize> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        let attr = labels.iter().map(|l| attr_map[l]).collect();
        let edges: Vec<(usize, usize)> = raw_edges
            .iter()
            .map(|(u, v)| (index[u.as_str()], index[v.as_str()]))
            .collect();
        Self::assemble(labels, attr, edges.into_iter())
    }

    /// Builds a graph over dense ids `0..attr.len()`; labels are the decimal ids.
    pub fn from_indexed(attr: Vec<f64>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = attr.len();
        let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        for (i, a) in attr.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::NonFiniteAttribute(labels[i].clone()));
            }
        }
        for &(u, v) in edges {
            if u == v {
                return Err(Error::SelfLoop(u.to_string()));
            }
            if u >= n || v >= n {
                return Err(Error::MissingAttribute(u.max(v).to_string()));
            }
        }
        Self::assemble(labels, attr, edges.iter().copied())
    }

    fn assemble(
        labels: Vec<String>,
        attr: Vec<f64>,
        edges: impl Iterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let set: BTreeSet<(usize, usize)> = edges.map(|(u, v)| (u.min(v), u.max(v))).collect();
        let mut adj = vec![Vec::new(); labels.len()];
        for &(u, v) in &set {
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Self {
            labels,
            attr,
            adj,
            edges: set.into_iter().collect(),
        })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn node_id(&self, label: &str) -> Option<usize> {
        self.labels
            .binary_search_by(|l| label_order(l, label))
            .ok()
    }

    pub fn attributes(&self) -> &[f64] {
        &self.attr
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adj[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adj[node].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Replaces the attribute vector, keeping the topology.
    pub fn with_attributes(&self, attr: Vec<f64>) -> Result<Self> {
        if attr.len() != self.node_count() {
            return Err(Error::LengthMismatch {
                expected: self.node_count(),
                got: attr.len(),
            });
        }
        if let Some(i) = attr.iter().position(|a| !a.is_finite()) {
            return Err(Error::NonFiniteAttribute(self.labels[i].clone()));
        }
        Ok(Self {
            attr,
            ..self.clone()
        })
    }

    /// All triangles `[u, v, w]` with `u < v < w`, in lexicographic order.
    pub fn triangles(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::new();
        for &(u, v) in &self.edges {
            let (a, b) = (&self.adj[u], &self.adj[v]);
            let (mut i, mut j) = (a.partition_point(|&x| x <= v), b.partition_point(|&x| x <= v));
            while i < a.len() && j < b.len() {
                match a[i].cmp(&b[j]) {
                    Ordering::Less => i += 1,
                    Ordering::Greater => j += 1,
                    Ordering::Equal => {
                        out.push([u, v, a[i]]);
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
        out
    }

    /// Min-max rescales attributes to `[0, 1]`. A constant attribute maps to 0.
    pub fn normalize_attributes(&self) -> Self {
        let lo = self.attr.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.attr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = hi - lo;
        let attr = self
            .attr
            .iter()
            .map(|&a| if range > 0.0 { (a - lo) / range } else { 0.0 })
            .collect();
        Self {
            attr,
            ..self.clone()
        }
    }

    /// Induced subgraph on the `m` nodes of highest `activity`.
    ///
    /// Ties go to the node with the smaller label. Graphs with at most `m`
    /// nodes are returned unchanged.
    pub fn trim_top_active(&self, activity: &[f64], m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("trim size must be at least 1"));
        }
        if activity.len() != self.node_count() {
            return Err(Error::LengthMismatch {
                expected: self.node_count(),
                got: activity.len(),
            });
        }
        if self.node_count() <= m {
            return Ok(self.clone());
        }
        let mut order: Vec<usize> = (0..self.node_count()).collect();
        order.sort_by(|&a, &b| activity[b].total_cmp(&activity[a]).then(a.cmp(&b)));
        let mut keep = order[..m].to_vec();
        keep.sort_unstable();
        Ok(self.induced_subgraph(&keep))
    }

    /// Induced subgraph on `keep` (sorted, distinct ids). Label order is preserved.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Self {
        let mut remap = vec![usize::MAX; self.node_count()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let labels = keep.iter().map(|&i| self.labels[i].clone()).collect();
        let attr = keep.iter().map(|&i| self.attr[i]).collect();
        let edges = self
            .edges
            .iter()
            .filter(|&&(u, v)| remap[u] != usize::MAX && remap[v] != usize::MAX)
            .map(|&(u, v)| (remap[u], remap[v]));
        Self::assemble(labels, attr, edges).expect("induced subgraph of a valid graph")
    }

    /// Unit-weight shortest-path distances; `+inf` between components.
    pub fn geodesic_distances(&self) -> DistanceMatrix {
        let n = self.node_count();
        let mut d = vec![f64::INFINITY; n * n];
        let mut queue = VecDeque::new();
        for s in 0..n {
            let row = &mut d[s * n..(s + 1) * n];
            row[s] = 0.0;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                let next = row[u] + 1.0;
                for &v in &self.adj[u] {
                    if row[v].is_infinite() {
                        row[v] = next;
                        queue.push_back(v);
                    }
                }
            }
        }
        DistanceMatrix { n, d }
    }
}

/// Dense symmetric matrix of pairwise distances.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from row-major entries, checking symmetry, a zero
    /// diagonal and nonnegativity.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut d = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            d.extend_from_slice(row);
        }
        for i in 0..n {
            if d[i * n + i] != 0.0 {
                return Err(Error::invalid("distance matrix diagonal must be zero"));
            }
            for j in 0..n {
                let x = d[i * n + j];
                if x.is_nan() || x < 0.0 || x != d[j * n + i] {
                    return Err(Error::invalid(
                        "distance matrix must be symmetric and nonnegative",
                    ));
                }
            }
        }
        Ok(Self { n, d })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }

    /// Largest finite entry, or 0 for matrices without finite off-diagonal entries.
    pub fn max_finite(&self) -> f64 {
        self.d
            .iter()
            .copied()
            .filter(|x| x.is_finite())
            .fold(0.0, f64::max)
    }
}
