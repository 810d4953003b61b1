//! Persistence diagrams in dimensions 0 and 1.
//!
//! [`compute_persistence`] runs the standard column reduction of the boundary
//! matrix over Z/2. [`h0_union_find`] is an elder-rule shortcut for
//! dimension 0 that yields the same multiset.

use std::cmp::Ordering;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtration::Filtration;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistencePoint {
    pub dim: usize,
    pub birth: f64,
    /// `f64::INFINITY` for essential classes.
    pub death: f64,
}

impl PersistencePoint {
    pub fn new(dim: usize, birth: f64, death: f64) -> Self {
        Self { dim, birth, death }
    }

    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }
}

fn point_order(a: &PersistencePoint, b: &PersistencePoint) -> Ordering {
    a.dim
        .cmp(&b.dim)
        .then(a.birth.total_cmp(&b.birth))
        .then(a.death.total_cmp(&b.death))
}

/// Multiset of persistence points, kept sorted by `(dim, birth, death)`.
///
/// Diagonal points are implicit and never stored.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PersistenceDiagram {
    points: Vec<PersistencePoint>,
    value_range: Option<(f64, f64)>,
}

impl PersistenceDiagram {
    pub fn new(mut points: Vec<PersistencePoint>) -> Result<Self> {
        for p in &points {
            if !p.birth.is_finite() || p.death.is_nan() || p.death < p.birth {
                return Err(Error::invalid(format!(
                    "invalid persistence point ({}, {})",
                    p.birth, p.death
                )));
            }
        }
        points.sort_by(point_order);
        Ok(Self {
            points,
            value_range: None,
        })
    }

    /// Single-dimension diagram from `(birth, death)` pairs.
    pub fn from_pairs(dim: usize, pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(b, d)| PersistencePoint::new(dim, b, d))
                .collect(),
        )
    }

    pub fn points(&self) -> &[PersistencePoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Filtration value range the diagram was computed from, if known.
    pub fn value_range(&self) -> Option<(f64, f64)> {
        self.value_range
    }

    pub fn with_value_range(mut self, range: Option<(f64, f64)>) -> Self {
        self.value_range = range;
        self
    }

    pub fn of_dimension(&self, dim: usize) -> Self {
        Self {
            points: self.points.iter().filter(|p| p.dim == dim).copied().collect(),
            value_range: self.value_range,
        }
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.birth, p.death)).collect()
    }

    /// The one dimension shared by every point, `None` for an empty diagram.
    pub fn single_dimension(&self) -> Result<Option<usize>> {
        let Some(first) = self.points.first() else {
            return Ok(None);
        };
        if self.points.iter().any(|p| p.dim != first.dim) {
            return Err(Error::MixedDimensions);
        }
        Ok(Some(first.dim))
    }

    pub fn is_finite(&self) -> bool {
        self.points.iter().all(|p| p.death.is_finite())
    }

    /// Removes essential points or caps their death at a constant.
    pub fn resolve_infinite(&self, policy: InfinitePolicy) -> Result<Self> {
        let points = match policy {
            InfinitePolicy::Drop => self
                .points
                .iter()
                .filter(|p| p.death.is_finite())
                .copied()
                .collect(),
            InfinitePolicy::Replace(value) => {
                let mut out = Vec::with_capacity(self.points.len());
                for p in &self.points {
                    if p.death.is_finite() {
                        out.push(*p);
                    } else if value.is_finite() && value >= p.birth {
                        out.push(PersistencePoint::new(p.dim, p.birth, value));
                    } else {
                        return Err(Error::ReplacementBelowBirth {
                            value,
                            birth: p.birth,
                        });
                    }
                }
                out
            }
        };
        Ok(Self::new(points)?.with_value_range(self.value_range))
    }

    /// Writes `dim,birth,death` rows with `inf` for essential deaths.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["dim", "birth", "death"])?;
        for p in &self.points {
            let death = if p.death.is_infinite() {
                "inf".to_owned()
            } else {
                p.death.to_string()
            };
            w.write_record([p.dim.to_string(), p.birth.to_string(), death])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut points = Vec::new();
        for record in r.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line());
            let field = |i: usize| {
                record.get(i).ok_or_else(|| Error::Parse {
                    line,
                    msg: "expected 3 fields: dim,birth,death".into(),
                })
            };
            let bad = |what: &str| Error::Parse {
                line,
                msg: format!("invalid {what}"),
            };
            let dim: usize = field(0)?.parse().map_err(|_| bad("dim"))?;
            let birth: f64 = field(1)?.parse().map_err(|_| bad("birth"))?;
            let death: f64 = match field(2)? {
                "inf" | "Inf" | "+inf" => f64::INFINITY,
                s => s.parse().map_err(|_| bad("death"))?,
            };
            points.push(PersistencePoint::new(dim, birth, death));
        }
        Self::new(points)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InfinitePolicy {
    Drop,
    Replace(f64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PersistenceOptions {
    /// Keep points with `birth == death`.
    pub keep_zero_persistence: bool,
}


/// Symmetric difference of two sorted index lists.
fn add_columns(target: &mut Vec<usize>, other: &[usize]) {
    let mut out = Vec::with_capacity(target.len() + other.len());
    let (mut i, mut j) = (0, 0);
    while i < target.len() && j < other.len() {
        match target[i].cmp(&other[j]) {
            Ordering::Less => {
                out.push(target[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(other[j]);
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&target[i..]);
    out.extend_from_slice(&other[j..]);
    *target = out;
}

/// Dimension 0 and 1 diagram of `f` by boundary-matrix reduction.
pub fn compute_persistence(f: &Filtration, opts: PersistenceOptions) -> Result<PersistenceDiagram> {
    f.validate()?;
    let entries = f.entries();
    let index: std::collections::HashMap<_, _> = entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.simplex, i))
        .collect();

    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(entries.len());
    // pivot_owner[row] = column whose reduced lowest one sits in `row`
    let mut pivot_owner: Vec<Option<usize>> = vec![None; entries.len()];
    let mut paired = vec![false; entries.len()];
    let mut points = Vec::new();

    for (j, e) in entries.iter().enumerate() {
        let mut col: Vec<usize> = e.simplex.facets().iter().map(|s| index[s]).collect();
        col.sort_unstable();
        while let Some(&low) = col.last() {
            match pivot_owner[low] {
                Some(k) => add_columns(&mut col, &columns[k]),
                None => break,
            }
        }
        if let Some(&low) = col.last() {
            pivot_owner[low] = Some(j);
            paired[low] = true;
            paired[j] = true;
            let creator = &entries[low];
            points.push(PersistencePoint::new(
                creator.simplex.dim(),
                creator.value,
                e.value,
            ));
        }
        columns.push(col);
    }

    for (i, e) in entries.iter().enumerate() {
        if !paired[i] && e.simplex.dim() <= 1 {
            points.push(PersistencePoint::new(e.simplex.dim(), e.value, f64::INFINITY));
        }
    }
    finish(points, f, opts)
}

fn finish(
    mut points: Vec<PersistencePoint>,
    f: &Filtration,
    opts: PersistenceOptions,
) -> Result<PersistenceDiagram> {
    if !opts.keep_zero_persistence {
        points.retain(|p| p.death > p.birth);
    }
    Ok(PersistenceDiagram::new(points)?.with_value_range(f.value_range()))
}

struct ElderForest {
    parent: Vec<usize>,
    /// Filtration position of the vertex that created the component.
    birth_pos: Vec<usize>,
}

impl ElderForest {
    fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }
}

/// Dimension-0 diagram by union-find under the elder rule: on a merge the
/// component born later in filtration order dies.
pub fn h0_union_find(f: &Filtration, opts: PersistenceOptions) -> Result<PersistenceDiagram> {
    f.validate()?;
    let entries = f.entries();
    let n_vertices = entries
        .iter()
        .filter(|e| e.simplex.dim() == 0)
        .map(|e| e.simplex.vertices()[0] + 1)
        .max()
        .unwrap_or(0);
    let mut forest = ElderForest {
        parent: (0..n_vertices).collect(),
        birth_pos: vec![usize::MAX; n_vertices],
    };
    let mut points = Vec::new();
    for (pos, e) in entries.iter().enumerate() {
        match *e.simplex.vertices() {
            [v] => forest.birth_pos[v] = pos,
            [u, v] => {
                let (ru, rv) = (forest.find(u), forest.find(v));
                if ru == rv {
                    continue;
                }
                let (elder, younger) = if forest.birth_pos[ru] < forest.birth_pos[rv] {
                    (ru, rv)
                } else {
                    (rv, ru)
                };
                points.push(PersistencePoint::new(
                    0,
                    entries[forest.birth_pos[younger]].value,
                    e.value,
                ));
                forest.parent[younger] = elder;
            }
            _ => {}
        }
    }
    for v in 0..n_vertices {
        if forest.birth_pos[v] != usize::MAX && forest.find(v) == v {
            points.push(PersistencePoint::new(
                0,
                entries[forest.birth_pos[v]].value,
                f64::INFINITY,
            ));
        }
    }
    finish(points, f, opts)
}
