//! Set-to-vector embedding baselines and the classical classifiers run on
//! top of them.
//!
//! Every reduction over points sums its terms in sorted order, so the
//! embeddings are bitwise invariant to the storage order of the points.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::{residual_unchecked, Matrix};
use crate::pointset::{FlatVector, PointSet};
use crate::subspace::fit_basis;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EmbeddingKind {
    /// Sign-preserving generalized mean with the given power.
    Gem(f64),
    /// Coordinate mean followed by the upper triangle of the covariance.
    CovPool,
    /// Per-coordinate descending sort evaluated at `k` equispaced quantiles.
    FSort(usize),
}

impl EmbeddingKind {
    /// Output length for points of dimension `dim`.
    pub fn output_len(&self, dim: usize) -> usize {
        match *self {
            EmbeddingKind::Gem(_) => dim,
            EmbeddingKind::CovPool => dim + dim * (dim + 1) / 2,
            EmbeddingKind::FSort(k) => dim * k,
        }
    }

    pub fn embed(&self, p: &PointSet) -> Result<SetEmbedding> {
        match *self {
            EmbeddingKind::Gem(power) => gem_embed(p, power),
            EmbeddingKind::CovPool => cov_embed(p),
            EmbeddingKind::FSort(k) => fsort_embed(p, k),
        }
    }
}

impl fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbeddingKind::Gem(p) => write!(f, "gem{p}"),
            EmbeddingKind::CovPool => f.write_str("cov"),
            EmbeddingKind::FSort(k) => write!(f, "fsort{k}"),
        }
    }
}

impl FromStr for EmbeddingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("unknown embedding {s:?}"));
        if s == "cov" {
            Ok(EmbeddingKind::CovPool)
        } else if let Some(p) = s.strip_prefix("gem") {
            Ok(EmbeddingKind::Gem(p.parse().map_err(|_| bad())?))
        } else if let Some(k) = s.strip_prefix("fsort") {
            Ok(EmbeddingKind::FSort(k.parse().map_err(|_| bad())?))
        } else {
            Err(bad())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetEmbedding {
    pub kind: EmbeddingKind,
    pub vector: FlatVector,
}

fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

fn column(p: &PointSet, d: usize) -> impl Iterator<Item = f64> + '_ {
    p.points().map(move |x| x[d])
}

fn signed_pow(x: f64, power: f64) -> f64 {
    x.signum() * x.abs().powf(power)
}

/// `m_d = sgn(mu_d) |mu_d|^(1/p)` with `mu_d = mean_i sgn(x_id) |x_id|^p`.
pub fn gem_embed(p: &PointSet, power: f64) -> Result<SetEmbedding> {
    if !(power >= 1.0 && power.is_finite()) {
        return Err(Error::InvalidConfig(format!("GeM power must be >= 1, got {power}")));
    }
    let n = p.len() as f64;
    let vector = (0..p.dim())
        .map(|d| {
            let mu = sorted_sum(column(p, d).map(|x| signed_pow(x, power)).collect()) / n;
            if power == 1.0 {
                mu
            } else {
                signed_pow(mu, 1.0 / power)
            }
        })
        .collect();
    Ok(SetEmbedding { kind: EmbeddingKind::Gem(power), vector: FlatVector(vector) })
}

/// Coordinate mean, then covariance entries `(i, j)` for `i <= j` row by row
/// (divisor `N - 1`).
pub fn cov_embed(p: &PointSet) -> Result<SetEmbedding> {
    if p.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: p.len() });
    }
    let n = p.len() as f64;
    let dim = p.dim();
    let mean: Vec<f64> = (0..dim).map(|d| sorted_sum(column(p, d).collect()) / n).collect();
    let mut vector = mean.clone();
    for i in 0..dim {
        for j in i..dim {
            let terms = p.points().map(|x| (x[i] - mean[i]) * (x[j] - mean[j])).collect();
            vector.push(sorted_sum(terms) / (n - 1.0));
        }
    }
    Ok(SetEmbedding { kind: EmbeddingKind::CovPool, vector: FlatVector(vector) })
}

/// Per coordinate: sort descending and linearly interpolate the sorted
/// sequence at `k` equispaced positions of `[0, 1]`, endpoints included.
pub fn fsort_embed(p: &PointSet, k: usize) -> Result<SetEmbedding> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("fsort needs k >= 2, got {k}")));
    }
    let n = p.len();
    let mut vector = Vec::with_capacity(p.dim() * k);
    for d in 0..p.dim() {
        let mut vals: Vec<f64> = column(p, d).collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        for q in 0..k {
            let pos = q as f64 / (k - 1) as f64 * (n - 1) as f64;
            let lo = (pos.floor() as usize).min(n - 1);
            let hi = (lo + 1).min(n - 1);
            let frac = pos - lo as f64;
            vector.push(if frac == 0.0 { vals[lo] } else { vals[lo] + frac * (vals[hi] - vals[lo]) });
        }
    }
    Ok(SetEmbedding { kind: EmbeddingKind::FSort(k), vector: FlatVector(vector) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearHyper {
    /// Initial gradient step; adapted by backtracking.
    pub learning_rate: f64,
    pub l2: f64,
    pub max_iter: usize,
}

impl Default for LinearHyper {
    fn default() -> Self {
        LinearHyper { learning_rate: 1.0, l2: 1e-3, max_iter: 300 }
    }
}

/// Multinomial logistic regression on standardized features.
#[derive(Debug, Clone)]
pub struct LinearClassifier {
    /// `K x (D + 1)`, bias in the last column.
    pub weights: Matrix,
    pub hyper: LinearHyper,
    /// Training objective after every accepted step (non-increasing).
    pub loss_history: Vec<f64>,
    mean: Vec<f64>,
    scale: Vec<f64>,
}

fn check_training_set(embeddings: &[FlatVector], labels: &[usize], num_classes: usize) -> Result<usize> {
    if embeddings.is_empty() || embeddings.len() != labels.len() {
        return Err(Error::DegenerateInput(format!(
            "{} embeddings with {} labels",
            embeddings.len(),
            labels.len()
        )));
    }
    let dim = embeddings[0].len();
    if embeddings.iter().any(|e| e.len() != dim) {
        return Err(Error::DegenerateInput("embeddings differ in length".into()));
    }
    if let Some(&l) = labels.iter().find(|&&l| l >= num_classes) {
        return Err(Error::DegenerateInput(format!("label {l} outside 0..{num_classes}")));
    }
    for k in 0..num_classes {
        if !labels.contains(&k) {
            return Err(Error::EmptyClass(k));
        }
    }
    Ok(dim)
}

/// Mean cross-entropy of `softmax(W [x; 1])` plus `l2 / 2 * |W_nobias|^2`,
/// and its gradient with respect to `W`.
pub fn softmax_loss_and_gradient(weights: &Matrix, features: &[Vec<f64>], labels: &[usize], l2: f64) -> (f64, Matrix) {
    let k = weights.nrows();
    let d = weights.ncols() - 1;
    let n = features.len() as f64;
    let mut grad = Matrix::zeros(k, d + 1);
    let mut loss = 0.0;
    let mut logits = vec![0.0; k];
    for (x, &y) in features.iter().zip(labels) {
        for (c, z) in logits.iter_mut().enumerate() {
            *z = weights[(c, d)] + (0..d).map(|j| weights[(c, j)] * x[j]).sum::<f64>();
        }
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = logits.iter().map(|z| (z - top).exp()).sum();
        loss += denom.ln() + top - logits[y];
        for c in 0..k {
            let prob = (logits[c] - top).exp() / denom;
            let delta = (prob - if c == y { 1.0 } else { 0.0 }) / n;
            for j in 0..d {
                grad[(c, j)] += delta * x[j];
            }
            grad[(c, d)] += delta;
        }
    }
    loss /= n;
    for c in 0..k {
        for j in 0..d {
            loss += 0.5 * l2 * weights[(c, j)] * weights[(c, j)];
            grad[(c, j)] += l2 * weights[(c, j)];
        }
    }
    (loss, grad)
}

/// Fits multinomial logistic regression by gradient descent with
/// backtracking: a step that raises the objective is rejected and the step
/// size halved; accepted steps grow it by 20%. Starts from zero weights, so
/// the result is deterministic. Zero-variance features are centered but not
/// rescaled.
pub fn fit_linear(
    embeddings: &[FlatVector],
    labels: &[usize],
    num_classes: usize,
    hyper: LinearHyper,
) -> Result<LinearClassifier> {
    let dim = check_training_set(embeddings, labels, num_classes)?;
    let n = embeddings.len() as f64;
    let mut mean = vec![0.0; dim];
    let mut scale = vec![1.0; dim];
    for j in 0..dim {
        mean[j] = embeddings.iter().map(|e| e.0[j]).sum::<f64>() / n;
        let var = embeddings.iter().map(|e| (e.0[j] - mean[j]).powi(2)).sum::<f64>() / n;
        if var > 0.0 && var.is_finite() {
            scale[j] = var.sqrt();
        }
    }
    let features: Vec<Vec<f64>> = embeddings.iter().map(|e| standardize(&e.0, &mean, &scale)).collect();

    let mut weights = Matrix::zeros(num_classes, dim + 1);
    let (mut loss, mut grad) = softmax_loss_and_gradient(&weights, &features, labels, hyper.l2);
    let mut step = hyper.learning_rate;
    let mut history = vec![loss];
    for _ in 0..hyper.max_iter {
        if grad.norm() < 1e-10 || step < 1e-12 {
            break;
        }
        let candidate = &weights - &grad * step;
        let (c_loss, c_grad) = softmax_loss_and_gradient(&candidate, &features, labels, hyper.l2);
        if c_loss <= loss {
            weights = candidate;
            loss = c_loss;
            grad = c_grad;
            history.push(loss);
            step *= 1.2;
        } else {
            step *= 0.5;
        }
    }
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::DegenerateInput("logistic regression diverged".into()));
    }
    Ok(LinearClassifier { weights, hyper, loss_history: history, mean, scale })
}

fn standardize(x: &[f64], mean: &[f64], scale: &[f64]) -> Vec<f64> {
    x.iter().zip(mean).zip(scale).map(|((v, m), s)| (v - m) / s).collect()
}

impl LinearClassifier {
    /// Highest-scoring class; ties go to the lowest index.
    pub fn predict(&self, x: &FlatVector) -> usize {
        let z = standardize(&x.0, &self.mean, &self.scale);
        let d = z.len();
        let mut best = (0, f64::NEG_INFINITY);
        for c in 0..self.weights.nrows() {
            let s = self.weights[(c, d)] + (0..d).map(|j| self.weights[(c, j)] * z[j]).sum::<f64>();
            if s > best.1 {
                best = (c, s);
            }
        }
        best.0
    }
}

/// Nearest-subspace classifier on plain vectors (uncentered bases).
#[derive(Debug, Clone)]
pub struct NsClassifier {
    pub bases: Vec<Matrix>,
}

/// Fits one basis per class from that class's embeddings. A class whose
/// embeddings are all zero gets an empty basis (residual = squared norm).
pub fn ns_on_embeddings(
    embeddings: &[FlatVector],
    labels: &[usize],
    num_classes: usize,
    variance_fraction: f64,
) -> Result<NsClassifier> {
    let dim = check_training_set(embeddings, labels, num_classes)?;
    let mut bases = Vec::with_capacity(num_classes);
    for k in 0..num_classes {
        let members: Vec<&FlatVector> = embeddings.iter().zip(labels).filter(|(_, &l)| l == k).map(|(e, _)| e).collect();
        let mut data = Vec::with_capacity(dim * members.len());
        for e in &members {
            data.extend_from_slice(e.as_slice());
        }
        let a = Matrix::from_vec(dim, members.len(), data);
        match fit_basis(&a, variance_fraction) {
            Ok(f) => bases.push(f.basis),
            Err(Error::ZeroMatrix) => bases.push(Matrix::zeros(dim, 0)),
            Err(e) => return Err(e),
        }
    }
    Ok(NsClassifier { bases })
}

impl NsClassifier {
    pub fn residuals(&self, x: &FlatVector) -> Vec<f64> {
        self.bases.iter().map(|b| residual_unchecked(x.as_slice(), b)).collect()
    }

    pub fn predict(&self, x: &FlatVector) -> usize {
        let r = self.residuals(x);
        let mut best = 0;
        for (k, &v) in r.iter().enumerate() {
            if v < r[best] {
                best = k;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointset::permute_points;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_set(rng: &mut ChaCha8Rng, n: usize, l: usize) -> PointSet {
        PointSet::new(l, (0..n * l).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap()
    }

    #[test]
    fn gem_examples() {
        let p = PointSet::from_rows(&[[1.0, 2.0], [3.0, -4.0], [0.5, 0.25]]).unwrap();
        let g = gem_embed(&p, 1.0).unwrap();
        assert_eq!(g.vector.0, p.centroid());

        let c = PointSet::from_rows(&[[0.3, -1.7], [0.3, -1.7]]).unwrap();
        for power in [1.0, 2.0, 4.0] {
            let g = gem_embed(&c, power).unwrap();
            assert!((g.vector.0[0] - 0.3).abs() < 1e-15 && (g.vector.0[1] + 1.7).abs() < 1e-15);
        }

        let sym = PointSet::from_rows(&[[-1.0], [1.0]]).unwrap();
        assert_eq!(gem_embed(&sym, 2.0).unwrap().vector.0, vec![0.0]);
        assert!(gem_embed(&sym, 0.5).is_err());
    }

    #[test]
    fn cov_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 20_000;
        let coords: Vec<f64> = (0..2 * n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let p = PointSet::new(2, coords).unwrap();
        let c = cov_embed(&p).unwrap().vector.0;
        assert_eq!(c.len(), 5);
        // sampling error of a variance estimate at n = 20000 is about 0.01
        assert!((c[2] - 1.0).abs() < 0.05 && c[3].abs() < 0.05 && (c[4] - 1.0).abs() < 0.05);

        let same = PointSet::from_rows(&[[2.0, 5.0], [2.0, 5.0]]).unwrap();
        assert_eq!(&cov_embed(&same).unwrap().vector.0[2..], &[0.0, 0.0, 0.0]);

        let q = random_set(&mut rng, 10, 2);
        let shifted = PointSet::new(2, q.points().flat_map(|x| [x[0] + 1.5, x[1] - 2.0]).collect()).unwrap();
        let (a, b) = (cov_embed(&q).unwrap().vector.0, cov_embed(&shifted).unwrap().vector.0);
        assert!((b[0] - a[0] - 1.5).abs() < 1e-12 && (b[1] - a[1] + 2.0).abs() < 1e-12);
        for i in 2..5 {
            assert!((a[i] - b[i]).abs() < 1e-12);
        }
        assert!(matches!(cov_embed(&PointSet::from_rows(&[[0.0]]).unwrap()), Err(Error::TooFewPoints { .. })));
    }

    #[test]
    fn fsort_examples() {
        let p = PointSet::from_rows(&[[0.0], [10.0]]).unwrap();
        assert_eq!(fsort_embed(&p, 3).unwrap().vector.0, vec![10.0, 5.0, 0.0]);
        let sorted = PointSet::from_rows(&[[4.0], [3.0], [1.0], [-2.0]]).unwrap();
        assert_eq!(fsort_embed(&sorted, 4).unwrap().vector.0, vec![4.0, 3.0, 1.0, -2.0]);
        assert!(fsort_embed(&p, 1).is_err());
        assert_eq!(EmbeddingKind::FSort(8).output_len(3), 24);
    }

    #[test]
    fn fsort_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let p = random_set(&mut rng, 9, 2);
            let bumped = PointSet::new(
                2,
                p.points().flat_map(|x| [x[0] + rng.random_range(0.0..1.0), x[1]]).collect(),
            )
            .unwrap();
            let (a, b) = (fsort_embed(&p, 5).unwrap().vector.0, fsort_embed(&bumped, 5).unwrap().vector.0);
            for q in 0..5 {
                assert!(b[q] >= a[q]);
                assert_eq!(b[5 + q], a[5 + q]);
            }
        }
    }

    #[test]
    fn embeddings_bitwise_order_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let kinds = [EmbeddingKind::Gem(1.0), EmbeddingKind::Gem(2.0), EmbeddingKind::Gem(4.0), EmbeddingKind::CovPool, EmbeddingKind::FSort(7)];
        for _ in 0..30 {
            let n = rng.random_range(2..50);
            let p = random_set(&mut rng, n, 3);
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let q = permute_points(&p, &perm).unwrap();
            for k in kinds {
                let (a, b) = (k.embed(&p).unwrap(), k.embed(&q).unwrap());
                let bits = |e: &SetEmbedding| e.vector.0.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
                assert_eq!(bits(&a), bits(&b), "{k}");
                assert_eq!(a.vector.len(), k.output_len(3));
            }
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for k in [EmbeddingKind::Gem(1.0), EmbeddingKind::Gem(4.0), EmbeddingKind::CovPool, EmbeddingKind::FSort(16)] {
            assert_eq!(k.to_string().parse::<EmbeddingKind>().unwrap(), k);
        }
        assert!("max".parse::<EmbeddingKind>().is_err());
    }

    #[test]
    fn logistic_regression_separates_1d_classes() {
        let xs = [-3.0, -2.0, -1.5, 1.0, 2.0, 2.5];
        let emb: Vec<FlatVector> = xs.iter().map(|&x| FlatVector(vec![x])).collect();
        let labels = [0, 0, 0, 1, 1, 1];
        let clf = fit_linear(&emb, &labels, 2, LinearHyper::default()).unwrap();
        for (e, &l) in emb.iter().zip(&labels) {
            assert_eq!(clf.predict(e), l);
        }
        for w in clf.loss_history.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn logistic_regression_single_class() {
        let emb = vec![FlatVector(vec![1.0, 2.0]), FlatVector(vec![3.0, 4.0])];
        let clf = fit_linear(&emb, &[0, 0], 1, LinearHyper::default()).unwrap();
        assert_eq!(clf.predict(&FlatVector(vec![-9.0, 9.0])), 0);
    }

    #[test]
    fn constant_features_are_tolerated() {
        let emb = vec![FlatVector(vec![1.0, 5.0]), FlatVector(vec![-1.0, 5.0])];
        let clf = fit_linear(&emb, &[0, 1], 2, LinearHyper::default()).unwrap();
        assert_eq!(clf.predict(&emb[0]), 0);
        assert_eq!(clf.predict(&emb[1]), 1);
        assert!(matches!(fit_linear(&emb, &[0, 0], 2, LinearHyper::default()), Err(Error::EmptyClass(1))));
        assert!(matches!(fit_linear(&emb, &[0], 2, LinearHyper::default()), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let (k, d, n) = (rng.random_range(2..5), rng.random_range(1..5), rng.random_range(3..12));
            let w = Matrix::from_fn(k, d + 1, |_, _| rng.random_range(-1.0..1.0));
            let feats: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
            let l2 = 0.1;
            let (_, grad) = softmax_loss_and_gradient(&w, &feats, &labels, l2);
            let h = 1e-5;
            for c in 0..k {
                for j in 0..=d {
                    let mut plus = w.clone();
                    plus[(c, j)] += h;
                    let mut minus = w.clone();
                    minus[(c, j)] -= h;
                    let fd = (softmax_loss_and_gradient(&plus, &feats, &labels, l2).0
                        - softmax_loss_and_gradient(&minus, &feats, &labels, l2).0)
                        / (2.0 * h);
                    let g = grad[(c, j)];
                    assert!((fd - g).abs() <= 1e-5 * g.abs().max(1e-3), "{fd} vs {g}");
                }
            }
        }
    }

    #[test]
    fn nearest_subspace_examples() {
        let emb = vec![FlatVector(vec![1.0, 0.0, 2.0]), FlatVector(vec![0.0, 3.0, 0.0])];
        let ns = ns_on_embeddings(&emb, &[0, 1], 2, 1.0).unwrap();
        for (k, b) in ns.bases.iter().enumerate() {
            assert_eq!(b.ncols(), 1);
            let x = &emb[k];
            let norm = x.norm_squared().sqrt();
            let cos: f64 = b.column(0).iter().zip(x.as_slice()).map(|(u, v)| u * v).sum::<f64>() / norm;
            assert!((cos.abs() - 1.0).abs() < 1e-12);
            assert!(ns.residuals(x)[k] < 1e-20);
            assert_eq!(ns.predict(x), k);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let emb: Vec<FlatVector> = (0..12).map(|_| FlatVector((0..6).map(|_| rng.random_range(-1.0..1.0)).collect())).collect();
        let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let ns = ns_on_embeddings(&emb, &labels, 3, 0.9).unwrap();
        let scaled: Vec<FlatVector> = emb.iter().map(|e| FlatVector(e.0.iter().map(|x| x * 7.5).collect())).collect();
        let ns2 = ns_on_embeddings(&scaled, &labels, 3, 0.9).unwrap();
        for (a, b) in emb.iter().zip(&scaled) {
            assert_eq!(ns.predict(a), ns2.predict(b));
        }
    }
}
