//! Point sets, their flattened vector form, and labeled collections of them.
//!
//! A [`PointSet`] stores its coordinates point-major: coordinate `d` of point
//! `i` lives at index `i * dim + d`. The same layout is used for
//! [`FlatVector`], so flattening a point set is a copy of its buffer.

use crate::error::{Error, Result};

/// Largest accepted coordinate magnitude. Squared distances of larger values
/// would overflow the assignment cost.
pub const MAX_COORDINATE: f64 = 1e100;

/// An ordered set of `N` points in `R^L`, each carrying mass `1/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    /// Builds a point set from a point-major coordinate buffer.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionZero);
        }
        if coords.len() % dim != 0 {
            return Err(Error::RaggedBuffer { len: coords.len(), dim });
        }
        let p = PointSet { dim, coords };
        validate(&p)?;
        Ok(p)
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyPointSet)?;
        let dim = first.as_ref().len();
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: row.len() });
            }
            coords.extend_from_slice(row);
        }
        PointSet::new(dim, coords)
    }

    /// Number of points `N`.
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Ambient dimension `L`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for p in self.points() {
            for (acc, x) in c.iter_mut().zip(p) {
                *acc += x;
            }
        }
        let n = self.len() as f64;
        c.iter_mut().for_each(|v| *v /= n);
        c
    }

    /// Per-axis `(min, max)` over all points.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        let mut bb = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in self.points() {
            for (b, &x) in bb.iter_mut().zip(p) {
                b.0 = b.0.min(x);
                b.1 = b.1.max(x);
            }
        }
        bb
    }

    /// Mean distance from each point to its nearest other point. Zero for a
    /// single point.
    pub fn mean_nearest_neighbor_distance(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let mut total = 0.0;
        for i in 0..n {
            let pi = self.point(i);
            let mut best = f64::INFINITY;
            for j in 0..n {
                if i != j {
                    best = best.min(squared_distance(pi, self.point(j)));
                }
            }
            total += best.sqrt();
        }
        total / n as f64
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Checks the point-set invariants: at least one point, positive dimension,
/// every coordinate finite with magnitude at most [`MAX_COORDINATE`].
pub fn validate(p: &PointSet) -> Result<()> {
    if p.dim == 0 {
        return Err(Error::DimensionZero);
    }
    if p.coords.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if let Some(k) = p.coords.iter().position(|x| !x.is_finite() || x.abs() > MAX_COORDINATE) {
        return Err(Error::NonFiniteCoordinate { point: k / p.dim, axis: k % p.dim });
    }
    Ok(())
}

/// A point-major vectorization of an `N x L` matrix (length `N * L`).
#[derive(Debug, Clone, PartialEq)]
pub struct FlatVector(pub Vec<f64>);

impl FlatVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum()
    }
}

/// Flattens the rows of `m` point-major: entry `i * L + d` is `m[i][d]`.
pub fn flatten(m: &PointSet) -> FlatVector {
    FlatVector(m.coords.clone())
}

/// Inverse of [`flatten`].
pub fn unflatten(v: &FlatVector, n: usize, dim: usize) -> Result<PointSet> {
    if v.len() != n * dim {
        return Err(Error::ShapeMismatch(format!("vector of length {} cannot be {n}x{dim}", v.len())));
    }
    PointSet::new(dim, v.0.clone())
}

/// Reorders the stored points: point `i` of the result is `p.point(perm[i])`.
pub fn permute_points(p: &PointSet, perm: &[usize]) -> Result<PointSet> {
    check_permutation(perm, p.len())?;
    let mut coords = Vec::with_capacity(p.coords.len());
    for &i in perm {
        coords.extend_from_slice(p.point(i));
    }
    Ok(PointSet { dim: p.dim, coords })
}

pub(crate) fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidPermutation(format!("length {} for {n} points", perm.len())));
    }
    let mut seen = vec![false; n];
    for &i in perm {
        if i >= n || seen[i] {
            return Err(Error::InvalidPermutation(format!("index {i} is out of range or repeated")));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Point sets paired with class labels in `0..num_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    samples: Vec<(PointSet, usize)>,
    num_classes: usize,
}

impl LabeledDataset {
    /// All samples must share a dimension and carry labels below `num_classes`.
    /// Classes may be absent here; see [`LabeledDataset::require_all_classes`].
    pub fn new(samples: Vec<(PointSet, usize)>, num_classes: usize) -> Result<Self> {
        if let Some((first, _)) = samples.first() {
            let dim = first.dim();
            for (p, label) in &samples {
                if p.dim() != dim {
                    return Err(Error::DimensionMismatch { left: dim, right: p.dim() });
                }
                if *label >= num_classes {
                    return Err(Error::InvalidConfig(format!(
                        "label {label} outside 0..{num_classes}"
                    )));
                }
            }
        }
        Ok(LabeledDataset { samples, num_classes })
    }

    pub fn samples(&self) -> &[(PointSet, usize)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn dim(&self) -> Option<usize> {
        self.samples.first().map(|(p, _)| p.dim())
    }

    /// Indices of the samples labelled `class`, in dataset order.
    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, (_, l))| *l == class)
            .map(|(i, _)| i)
            .collect()
    }

    /// The common point count, or `CardinalityMismatch` if samples differ.
    pub fn point_count(&self) -> Result<usize> {
        let mut it = self.samples.iter().map(|(p, _)| p.len());
        let first = it.next().ok_or(Error::EmptyClass(0))?;
        for n in it {
            if n != first {
                return Err(Error::CardinalityMismatch { left: first, right: n });
            }
        }
        Ok(first)
    }

    /// Fails with `EmptyClass` unless every label in `0..K` occurs.
    pub fn require_all_classes(&self) -> Result<()> {
        let mut seen = vec![false; self.num_classes];
        for (_, l) in &self.samples {
            seen[*l] = true;
        }
        match seen.iter().position(|s| !s) {
            Some(k) => Err(Error::EmptyClass(k)),
            None if self.num_classes == 0 => Err(Error::EmptyClass(0)),
            None => Ok(()),
        }
    }

    /// The sub-dataset made of `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            num_classes: self.num_classes,
        }
    }
}
