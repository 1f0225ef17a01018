//! Exact discrete optimal transport between equal-size uniform point sets,
//! the linear optimal transport (LOT) embedding against a reference, and the
//! LOT distance.
//!
//! With `N` points of mass `1/N` on both sides the optimal coupling is a
//! permutation, so transport reduces to a square linear assignment problem on
//! squared Euclidean costs. The assignment is solved exactly with a
//! shortest-augmenting-path method (Jonker-Volgenant / Crouse style): column
//! reduction seeds a partial matching, then every still-free reference index is
//! augmented along a Dijkstra shortest path in reduced costs.
//!
//! Embeddings are indexed by reference order: row `j` of
//! [`LotEmbedding::matrix`] is the source point matched to reference point
//! `j`. Embedding a reference against itself therefore returns the reference.

use crate::error::{Error, Result};
use crate::pointset::{squared_distance, PointSet};

const NONE: usize = usize::MAX;

/// Square assignment cost matrix. Entry `(i, j)` is the cost of matching
/// source point `i` to reference point `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    // reference-major: data[j * n + i]
    data: Vec<f64>,
}

impl CostMatrix {
    /// Builds a cost matrix from `entry(i, j)` values; entries must be finite
    /// and non-negative.
    pub fn from_fn(n: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                let c = entry(i, j);
                if !c.is_finite() || c < 0.0 {
                    return Err(Error::DegenerateInput(format!("cost ({i},{j}) = {c}")));
                }
                data[j * n + i] = c;
            }
        }
        Ok(CostMatrix { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, source: usize, reference: usize) -> f64 {
        self.data[reference * self.n + source]
    }

    fn with_forbidden(&self, source: usize, reference: usize, big: f64) -> CostMatrix {
        let mut c = self.clone();
        c.data[reference * self.n + source] = big;
        c
    }
}

/// Optimal matching between source and reference points.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `perm[j] = i`: source point `i` is matched to reference point `j`.
    pub perm: Vec<usize>,
    /// Mean matched cost, `(1/N) * sum_j cost(perm[j], j)`.
    pub total_cost: f64,
}

/// LOT embedding of a source point set against a fixed reference.
#[derive(Debug, Clone, PartialEq)]
pub struct LotEmbedding {
    /// `N x L`; row `j` is the source point matched to reference point `j`.
    pub matrix: PointSet,
    pub perm: Vec<usize>,
    /// Squared 2-Wasserstein distance between source and reference.
    pub transport_cost: f64,
    pub reference_id: u64,
}

fn check_shapes(s: &PointSet, r: &PointSet) -> Result<()> {
    if s.len() != r.len() {
        return Err(Error::CardinalityMismatch { left: s.len(), right: r.len() });
    }
    if s.dim() != r.dim() {
        return Err(Error::DimensionMismatch { left: s.dim(), right: r.dim() });
    }
    Ok(())
}

/// Squared Euclidean distances between every source and reference point.
pub fn cost_matrix(s: &PointSet, r: &PointSet) -> Result<CostMatrix> {
    check_shapes(s, r)?;
    let n = s.len();
    let mut data = Vec::with_capacity(n * n);
    for rj in r.points() {
        data.extend(s.points().map(|si| squared_distance(si, rj)));
    }
    Ok(CostMatrix { n, data })
}

/// Solves the square linear assignment problem exactly.
///
/// Reference indices are augmented in ascending order and equal reduced costs
/// prefer the lowest unassigned source index, so the output is deterministic.
pub fn solve_lap(c: &CostMatrix) -> Assignment {
    let n = c.n;
    let perm = shortest_augmenting_path(n, &c.data);
    let sum: f64 = perm.iter().enumerate().map(|(j, &i)| c.data[j * n + i]).sum();
    let total_cost = if n == 0 { 0.0 } else { sum / n as f64 };
    Assignment { perm, total_cost }
}

/// Returns `col4row` for the square problem `cost[row * n + col]`.
fn shortest_augmenting_path(n: usize, cost: &[f64]) -> Vec<usize> {
    let mut u = vec![0.0; n];
    let mut v = vec![f64::INFINITY; n];
    let mut col4row = vec![NONE; n];
    let mut row4col = vec![NONE; n];

    // Column reduction: v[col] = min over rows, which keeps every reduced cost
    // non-negative. A row that is the argmin of a column can take that column
    // outright, since the edge is tight.
    let mut argmin = vec![0usize; n];
    for row in 0..n {
        let line = &cost[row * n..(row + 1) * n];
        for (col, &c) in line.iter().enumerate() {
            if c < v[col] {
                v[col] = c;
                argmin[col] = row;
            }
        }
    }
    for col in 0..n {
        let row = argmin[col];
        if col4row[row] == NONE {
            col4row[row] = col;
            row4col[col] = row;
        }
    }

    let mut shortest = vec![f64::INFINITY; n];
    let mut path = vec![NONE; n];
    let mut seen_row = vec![false; n];
    let mut seen_col = vec![false; n];
    let mut remaining = Vec::with_capacity(n);

    for cur in 0..n {
        if col4row[cur] != NONE {
            continue;
        }
        shortest.fill(f64::INFINITY);
        seen_row.fill(false);
        seen_col.fill(false);
        remaining.clear();
        remaining.extend(0..n);

        let mut min_val = 0.0;
        let mut row = cur;
        let sink = loop {
            seen_row[row] = true;
            let line = &cost[row * n..(row + 1) * n];
            let base = min_val - u[row];
            let mut best_pos = NONE;
            let mut lowest = f64::INFINITY;
            for (pos, &col) in remaining.iter().enumerate() {
                let r = base + line[col] - v[col];
                if r < shortest[col] {
                    path[col] = row;
                    shortest[col] = r;
                }
                let s = shortest[col];
                if s < lowest || (s == lowest && row4col[col] == NONE) {
                    lowest = s;
                    best_pos = pos;
                }
            }
            // Reduced costs are finite, so some column is always reachable.
            debug_assert!(best_pos != NONE);
            min_val = lowest;
            let col = remaining.swap_remove(best_pos);
            seen_col[col] = true;
            if row4col[col] == NONE {
                break col;
            }
            row = row4col[col];
        };

        u[cur] += min_val;
        for r in 0..n {
            if seen_row[r] && r != cur {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for col in 0..n {
            if seen_col[col] {
                v[col] -= min_val - shortest[col];
            }
        }

        let mut col = sink;
        loop {
            let r = path[col];
            row4col[col] = r;
            std::mem::swap(&mut col4row[r], &mut col);
            if r == cur {
                break;
            }
        }
    }
    col4row
}

/// Gap between the second-best and the optimal mean assignment cost, found by
/// forbidding each optimal edge in turn. `INFINITY` when `N < 2`. Intended for
/// small instances: it performs `N` extra solves.
pub fn assignment_gap(c: &CostMatrix, best: &Assignment) -> f64 {
    let n = c.n;
    if n < 2 {
        return f64::INFINITY;
    }
    let max = c.data.iter().copied().fold(0.0, f64::max);
    let big = 2.0 * (max + 1.0) * n as f64;
    let mut second = f64::INFINITY;
    for (j, &i) in best.perm.iter().enumerate() {
        let alt = solve_lap(&c.with_forbidden(i, j, big));
        second = second.min(alt.total_cost);
    }
    second - best.total_cost
}

/// Copy of `s` moved onto the centroid and RMS spread of `r`.
///
/// `sum_j |a s_perm(j) + b - r_j|^2` differs from `sum_j |s_perm(j) - r_j|^2`
/// by terms independent of `perm` when `a > 0`, so both problems share their
/// optimal permutations. The aligned copy starts column reduction much closer
/// to the optimum, which cuts the number of augmentations.
fn align_moments(s: &PointSet, r: &PointSet) -> Vec<f64> {
    let (cs, cr) = (s.centroid(), r.centroid());
    let spread = |p: &PointSet, c: &[f64]| p.points().map(|x| squared_distance(x, c)).sum::<f64>();
    let (vs, vr) = (spread(s, &cs), spread(r, &cr));
    let scale = if vs > 0.0 && vr > 0.0 { (vr / vs).sqrt() } else { 1.0 };
    s.points()
        .flat_map(|x| x.iter().zip(&cs).zip(&cr).map(move |((v, a), b)| (v - a) * scale + b))
        .collect()
}

/// Optimal assignment of `s` onto `r`, with `total_cost` measured on the
/// original coordinates. The matched costs are summed in sorted order, so the
/// cost does not depend on the storage order of either set.
pub fn solve_point_sets(s: &PointSet, r: &PointSet) -> Result<Assignment> {
    check_shapes(s, r)?;
    let aligned = PointSet::new(s.dim(), align_moments(s, r))?;
    let perm = solve_lap(&cost_matrix(&aligned, r)?).perm;
    let mut terms: Vec<f64> = perm.iter().enumerate().map(|(j, &i)| squared_distance(s.point(i), r.point(j))).collect();
    terms.sort_by(f64::total_cmp);
    let sum: f64 = terms.iter().sum();
    Ok(Assignment { perm, total_cost: sum / s.len() as f64 })
}

/// Squared 2-Wasserstein distance between the uniform measures on `s` and `r`.
pub fn wasserstein2(s: &PointSet, r: &PointSet) -> Result<f64> {
    Ok(solve_point_sets(s, r)?.total_cost)
}

/// Stable fingerprint of a reference point set, carried by embeddings so that
/// distances between embeddings against different references are refused.
pub fn reference_fingerprint(r: &PointSet) -> u64 {
    // FNV-1a over the dimension and coordinate bit patterns.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |bits: u64| {
        for b in bits.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    feed(r.dim() as u64);
    for &x in r.coords() {
        feed(x.to_bits());
    }
    h
}

/// LOT embedding of `s` against reference `r`.
pub fn lot_transform(s: &PointSet, r: &PointSet) -> Result<LotEmbedding> {
    lot_transform_with_id(s, r, reference_fingerprint(r))
}

pub(crate) fn lot_transform_with_id(s: &PointSet, r: &PointSet, reference_id: u64) -> Result<LotEmbedding> {
    let a = solve_point_sets(s, r)?;
    let mut coords = Vec::with_capacity(s.coords().len());
    for &i in &a.perm {
        coords.extend_from_slice(s.point(i));
    }
    Ok(LotEmbedding {
        matrix: PointSet::new(s.dim(), coords)?,
        perm: a.perm,
        transport_cost: a.total_cost,
        reference_id,
    })
}

/// `sqrt((1/N) * sum_j |a_j - b_j|^2)` over reference-indexed rows.
pub fn lot_distance(a: &LotEmbedding, b: &LotEmbedding) -> Result<f64> {
    if a.reference_id != b.reference_id {
        return Err(Error::ReferenceMismatch);
    }
    if a.matrix.len() != b.matrix.len() || a.matrix.dim() != b.matrix.dim() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.matrix.len(),
            a.matrix.dim(),
            b.matrix.len(),
            b.matrix.dim()
        )));
    }
    let sum = squared_distance(a.matrix.coords(), b.matrix.coords());
    Ok((sum / a.matrix.len() as f64).sqrt())
}
