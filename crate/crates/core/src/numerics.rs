//! Dense linear algebra used by the subspace models: a sorted thin SVD and
//! squared residuals against an orthonormal basis.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense, row/column indexed real matrix.
pub type Matrix = DMatrix<f64>;

/// Orthonormality tolerance for bases passed to [`project_residual`].
pub const ORTHONORMAL_TOL: f64 = 1e-8;

const SVD_MAX_ITERATIONS: usize = 10_000;

/// Thin SVD `A = U diag(s) V^T` with `s` non-increasing.
#[derive(Debug, Clone)]
pub struct SvdResult {
    pub left_vectors: Matrix,
    pub singular_values: Vec<f64>,
    pub right_vectors: Matrix,
}

impl SvdResult {
    /// Singular values above the numerical-zero threshold
    /// `eps * s_max * max(rows, cols)`.
    pub fn rank(&self) -> usize {
        let tol = rank_tolerance(&self.singular_values, self.left_vectors.nrows(), self.right_vectors.nrows());
        self.singular_values.iter().take_while(|&&s| s > tol).count()
    }
}

pub(crate) fn rank_tolerance(singular_values: &[f64], rows: usize, cols: usize) -> f64 {
    let top = singular_values.first().copied().unwrap_or(0.0);
    f64::EPSILON * top * rows.max(cols) as f64
}

pub fn svd(a: &Matrix) -> Result<SvdResult> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateInput("matrix has non-finite entries".into()));
    }
    let k = a.nrows().min(a.ncols());
    if k == 0 {
        return Err(Error::ShapeMismatch("empty matrix".into()));
    }
    let dec = a
        .clone()
        .try_svd(true, true, f64::EPSILON, SVD_MAX_ITERATIONS)
        .ok_or(Error::ConvergenceFailure)?;
    let u = dec.u.ok_or(Error::ConvergenceFailure)?;
    let v_t = dec.v_t.ok_or(Error::ConvergenceFailure)?;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));
    let mut left = Matrix::zeros(a.nrows(), k);
    let mut right = Matrix::zeros(a.ncols(), k);
    let mut values = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        left.set_column(dst, &u.column(src));
        right.set_column(dst, &v_t.row(src).transpose());
        values.push(dec.singular_values[src].max(0.0));
    }
    Ok(SvdResult { left_vectors: left, singular_values: values, right_vectors: right })
}

/// Largest entry of `|B^T B - I|`.
pub fn orthonormality_error(b: &Matrix) -> f64 {
    let gram = b.transpose() * b;
    let mut worst: f64 = 0.0;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Squared residual `||x - B B^T x||^2` of `x` against the column span of an
/// orthonormal `B`.
pub fn project_residual(x: &[f64], b: &Matrix) -> Result<f64> {
    if b.nrows() != x.len() {
        return Err(Error::ShapeMismatch(format!(
            "vector of length {} against basis with {} rows",
            x.len(),
            b.nrows()
        )));
    }
    let deviation = orthonormality_error(b);
    if deviation > ORTHONORMAL_TOL {
        return Err(Error::NonOrthonormalBasis { deviation });
    }
    Ok(residual_unchecked(x, b))
}

/// [`project_residual`] without the shape and orthonormality checks.
pub(crate) fn residual_unchecked(x: &[f64], b: &Matrix) -> f64 {
    let n = x.len();
    let mut resid = x.to_vec();
    for c in 0..b.ncols() {
        let col = &b.as_slice()[c * n..(c + 1) * n];
        let coef: f64 = col.iter().zip(x).map(|(u, v)| u * v).sum();
        for (r, u) in resid.iter_mut().zip(col) {
            *r -= coef * u;
        }
    }
    resid.iter().map(|r| r * r).sum()
}
