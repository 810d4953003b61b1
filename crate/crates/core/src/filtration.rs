//! Lower-star and Vietoris-Rips filtrations of 2-dimensional complexes.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, DistanceMatrix};

/// A vertex, edge or triangle on sorted, distinct vertex ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Simplex {
    verts: [usize; 3],
    len: u8,
}

impl Simplex {
    pub fn vertex(v: usize) -> Self {
        Self {
            verts: [v, 0, 0],
            len: 1,
        }
    }

    pub fn edge(u: usize, v: usize) -> Self {
        assert!(u != v, "edge endpoints must differ");
        Self {
            verts: [u.min(v), u.max(v), 0],
            len: 2,
        }
    }

    pub fn triangle(a: usize, b: usize, c: usize) -> Self {
        let mut v = [a, b, c];
        v.sort_unstable();
        assert!(v[0] < v[1] && v[1] < v[2], "triangle vertices must differ");
        Self { verts: v, len: 3 }
    }

    pub fn dim(&self) -> usize {
        self.len as usize - 1
    }

    pub fn vertices(&self) -> &[usize] {
        &self.verts[..self.len as usize]
    }

    /// Codimension-1 faces; empty for vertices.
    pub fn facets(&self) -> Vec<Simplex> {
        let v = self.vertices();
        match v.len() {
            2 => vec![Simplex::vertex(v[0]), Simplex::vertex(v[1])],
            3 => vec![
                Simplex::edge(v[1], v[2]),
                Simplex::edge(v[0], v[2]),
                Simplex::edge(v[0], v[1]),
            ],
            _ => Vec::new(),
        }
    }
}

impl Ord for Simplex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len
            .cmp(&other.len)
            .then_with(|| self.vertices().cmp(other.vertices()))
    }
}

impl PartialOrd for Simplex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiltrationEntry {
    pub simplex: Simplex,
    pub value: f64,
}

/// Simplices ordered by value, then dimension, then vertex tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct Filtration {
    entries: Vec<FiltrationEntry>,
}

fn entry_order(a: &FiltrationEntry, b: &FiltrationEntry) -> Ordering {
    a.value
        .total_cmp(&b.value)
        .then_with(|| a.simplex.cmp(&b.simplex))
}

impl Filtration {
    /// Sorts `entries` into filtration order. Monotonicity is not checked
    /// here; see [`Filtration::validate`].
    pub fn new(mut entries: Vec<FiltrationEntry>) -> Self {
        entries.sort_by(entry_order);
        Self { entries }
    }

    pub fn entries(&self) -> &[FiltrationEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(min, max)` filtration value, `None` when empty.
    pub fn value_range(&self) -> Option<(f64, f64)> {
        Some((self.entries.first()?.value, self.entries.last()?.value))
    }

    /// Checks that values are finite, simplices are unique, and every facet
    /// appears earlier with a value no larger than its coface.
    pub fn validate(&self) -> Result<()> {
        let mut position: HashMap<Simplex, usize> = HashMap::with_capacity(self.entries.len());
        for (i, e) in self.entries.iter().enumerate() {
            if !e.value.is_finite() {
                return Err(Error::InvalidFiltration(format!(
                    "simplex {:?} has non-finite value",
                    e.simplex.vertices()
                )));
            }
            if i > 0 && entry_order(&self.entries[i - 1], e) != Ordering::Less {
                return Err(Error::InvalidFiltration(
                    "entries are not strictly sorted".into(),
                ));
            }
            for facet in e.simplex.facets() {
                let ok = position
                    .get(&facet)
                    .is_some_and(|&j| self.entries[j].value <= e.value);
                if !ok {
                    return Err(Error::InvalidFiltration(format!(
                        "facet {:?} of {:?} is missing or enters later",
                        facet.vertices(),
                        e.simplex.vertices()
                    )));
                }
            }
            if position.insert(e.simplex, i).is_some() {
                return Err(Error::InvalidFiltration(format!(
                    "simplex {:?} listed twice",
                    e.simplex.vertices()
                )));
            }
        }
        Ok(())
    }
}

/// Every node, edge and triangle of `g`, each entering at the largest
/// attribute among its vertices.
pub fn lower_star(g: &AttributedGraph) -> Filtration {
    let attr = g.attributes();
    let max_of = |vs: &[usize]| vs.iter().map(|&v| attr[v]).fold(f64::NEG_INFINITY, f64::max);
    let triangles = g.triangles();
    let mut entries = Vec::with_capacity(g.node_count() + g.edge_count() + triangles.len());
    entries.extend((0..g.node_count()).map(|v| FiltrationEntry {
        simplex: Simplex::vertex(v),
        value: attr[v],
    }));
    entries.extend(g.edges().iter().map(|&(u, v)| FiltrationEntry {
        simplex: Simplex::edge(u, v),
        value: max_of(&[u, v]),
    }));
    entries.extend(triangles.iter().map(|t| FiltrationEntry {
        simplex: Simplex::triangle(t[0], t[1], t[2]),
        value: max_of(t),
    }));
    Filtration::new(entries)
}

/// Vietoris-Rips 2-skeleton truncated at `t_max`; defaults to the largest
/// finite pairwise distance. Pairs at infinite distance never connect.
pub fn vietoris_rips(dm: &DistanceMatrix, t_max: Option<f64>) -> Result<Filtration> {
    let t_max = t_max.unwrap_or_else(|| dm.max_finite());
    if t_max.is_nan() || t_max < 0.0 {
        return Err(Error::invalid("t_max must be nonnegative"));
    }
    let n = dm.len();
    let within = |x: f64| x.is_finite() && x <= t_max;
    let mut entries: Vec<FiltrationEntry> = (0..n)
        .map(|v| FiltrationEntry {
            simplex: Simplex::vertex(v),
            value: 0.0,
        })
        .collect();
    for u in 0..n {
        for v in u + 1..n {
            let duv = dm.get(u, v);
            if !within(duv) {
                continue;
            }
            entries.push(FiltrationEntry {
                simplex: Simplex::edge(u, v),
                value: duv,
            });
            for w in v + 1..n {
                let value = duv.max(dm.get(u, w)).max(dm.get(v, w));
                if within(value) {
                    entries.push(FiltrationEntry {
                        simplex: Simplex::triangle(u, v, w),
                        value,
                    });
                }
            }
        }
    }
    Ok(Filtration::new(entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{arb_graph, toy_graph};
    use proptest::prelude::*;

    fn value_of(f: &Filtration, s: Simplex) -> f64 {
        f.entries().iter().find(|e| e.simplex == s).unwrap().value
    }

    #[test]
    fn toy_lower_star_values() {
        let g = toy_graph();
        let id = |l: &str| g.node_id(l).unwrap();
        let f = lower_star(&g);
        f.validate().unwrap();
        assert_eq!(f.len(), 6 + 8 + 2);
        assert_eq!(value_of(&f, Simplex::edge(id("2"), id("3"))), 2.0);
        assert_eq!(value_of(&f, Simplex::triangle(id("2"), id("5"), id("6"))), 3.0);
    }

    #[test]
    fn single_node() {
        let g = AttributedGraph::from_indexed(vec![0.7], &[]).unwrap();
        let f = lower_star(&g);
        assert_eq!(f.entries(), [FiltrationEntry { simplex: Simplex::vertex(0), value: 0.7 }]);
    }

    #[test]
    fn equal_values_order_by_dimension() {
        let g = AttributedGraph::from_indexed(vec![0.0; 3], &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let f = lower_star(&g);
        let dims: Vec<usize> = f.entries().iter().map(|e| e.simplex.dim()).collect();
        assert_eq!(dims, [0, 0, 0, 1, 1, 1, 2]);
        assert!(f.entries().iter().all(|e| e.value == 0.0));
    }

    #[test]
    fn rips_on_toy_geodesics() {
        let g = toy_graph();
        let f = vietoris_rips(&g.geodesic_distances(), Some(3.0)).unwrap();
        f.validate().unwrap();
        let at_one: Vec<_> = f.entries().iter().filter(|e| e.value == 1.0).collect();
        assert_eq!(at_one.iter().filter(|e| e.simplex.dim() == 1).count(), 8);
        assert_eq!(at_one.iter().filter(|e| e.simplex.dim() == 2).count(), 2);
        // complete 2-skeleton on 6 nodes at t_max = diameter
        assert_eq!(f.len(), 6 + 15 + 20);
        let default = vietoris_rips(&g.geodesic_distances(), None).unwrap();
        assert_eq!(default, f);
    }

    #[test]
    fn rips_small_cases() {
        let far = DistanceMatrix::from_rows(&[vec![0.0, 5.0], vec![5.0, 0.0]]).unwrap();
        let f = vietoris_rips(&far, Some(1.0)).unwrap();
        assert_eq!(f.len(), 2);
        assert!(f.entries().iter().all(|e| e.simplex.dim() == 0));

        let unit = DistanceMatrix::from_rows(&[
            vec![0.0, 1.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ])
        .unwrap();
        let f = vietoris_rips(&unit, Some(1.0)).unwrap();
        let dims: Vec<usize> = f.entries().iter().map(|e| e.simplex.dim()).collect();
        assert_eq!(dims, [0, 0, 0, 1, 1, 1, 2]);
        assert!(vietoris_rips(&unit, Some(-1.0)).is_err());
    }

    #[test]
    fn validate_rejects_bad_orders() {
        let bad = Filtration::new(vec![
            FiltrationEntry { simplex: Simplex::vertex(0), value: 0.0 },
            FiltrationEntry { simplex: Simplex::vertex(1), value: 2.0 },
            FiltrationEntry { simplex: Simplex::edge(0, 1), value: 1.0 },
        ]);
        assert!(matches!(bad.validate(), Err(Error::InvalidFiltration(_))));
        let missing = Filtration::new(vec![FiltrationEntry {
            simplex: Simplex::edge(0, 1),
            value: 1.0,
        }]);
        assert!(missing.validate().is_err());
        let twice = Filtration::new(vec![
            FiltrationEntry { simplex: Simplex::vertex(0), value: 0.0 },
            FiltrationEntry { simplex: Simplex::vertex(0), value: 1.0 },
        ]);
        assert!(twice.validate().is_err());
    }

    fn choose(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    proptest! {
        #[test]
        fn lower_star_is_monotone_and_complete(g in arb_graph(12)) {
            let f = lower_star(&g);
            prop_assert!(f.validate().is_ok());
            prop_assert_eq!(f.len(), g.node_count() + g.edge_count() + g.triangles().len());
            let resorted = Filtration::new(f.entries().to_vec());
            prop_assert_eq!(resorted, f);
        }

        #[test]
        fn rips_is_monotone_and_bounded(g in arb_graph(9), t in 0.0..4.0f64) {
            let f = vietoris_rips(&g.geodesic_distances(), Some(t)).unwrap();
            prop_assert!(f.validate().is_ok());
            let n = g.node_count();
            prop_assert!(f.len() <= n + choose(n, 2) + choose(n, 3));
        }
    }
}
