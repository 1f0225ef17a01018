//! Nearest-subspace classification in LOT embedding space.
//!
//! Each class gets its own reference point set. Training samples of the class
//! are embedded against it, the embeddings are augmented with invariance
//! spanning vectors (translation, anisotropic scaling, shear), and the leading
//! left singular vectors of the assembled matrix form the class subspace. A
//! test sample is embedded once per class reference and assigned to the class
//! with the smallest squared projection residual.
//!
//! For an embedding `E` (an `N x L` matrix, flattened point-major):
//!
//! * translation: `L` vectors, vector `d` is 1 at every coordinate-`d` slot;
//! * anisotropic scaling: `L` vectors, vector `d` keeps column `d` of `E`;
//! * shear: `L(L-1)` vectors, vector `(i, j)` puts column `j` of `E` into
//!   column `i`.
//!
//! Isotropic scaling needs no vectors since the span already contains `a * E`.
//! Subspaces are not mean-centered; they pass through the origin.

use std::fmt;
use std::str::FromStr;

use crate::deform::make_reference;
use crate::error::{Error, Result};
use crate::numerics::{self, orthonormality_error, rank_tolerance, residual_unchecked, Matrix, ORTHONORMAL_TOL};
use crate::ot::{lot_transform_with_id, reference_fingerprint, LotEmbedding};
use crate::pointset::{flatten, FlatVector, LabeledDataset, PointSet};
use crate::seed::{self, Stream};

/// Which invariance spanning sets are added to each class subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct InvarianceFlags {
    pub translation: bool,
    pub aniso_scale: bool,
    pub shear: bool,
}

impl InvarianceFlags {
    pub const NONE: InvarianceFlags = InvarianceFlags { translation: false, aniso_scale: false, shear: false };
    pub const ALL: InvarianceFlags = InvarianceFlags { translation: true, aniso_scale: true, shear: true };
}

impl fmt::Display for InvarianceFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.translation {
            parts.push("T");
        }
        if self.aniso_scale {
            parts.push("D");
        }
        if self.shear {
            parts.push("S");
        }
        if parts.is_empty() {
            f.write_str("none")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

impl FromStr for InvarianceFlags {
    type Err = Error;

    /// Accepts `none`, `all`, or a comma-separated subset of `T`, `D`, `S`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "" | "none" => return Ok(InvarianceFlags::NONE),
            "all" => return Ok(InvarianceFlags::ALL),
            _ => {}
        }
        let mut flags = InvarianceFlags::NONE;
        for part in s.split(',') {
            match part.trim().to_ascii_uppercase().as_str() {
                "T" => flags.translation = true,
                "D" => flags.aniso_scale = true,
                "S" => flags.shear = true,
                other => return Err(Error::InvalidConfig(format!("unknown invariance flag {other:?}"))),
            }
        }
        Ok(flags)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpanKind {
    Translation,
    AnisoScale,
    Shear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanningSet {
    pub kind: SpanKind,
    pub vectors: Vec<FlatVector>,
}

pub fn translation_vectors(n: usize, dim: usize) -> Vec<FlatVector> {
    (0..dim)
        .map(|d| {
            let mut v = vec![0.0; n * dim];
            v.iter_mut().skip(d).step_by(dim).for_each(|x| *x = 1.0);
            FlatVector(v)
        })
        .collect()
}

pub fn aniso_scale_vectors(e: &PointSet) -> Vec<FlatVector> {
    let dim = e.dim();
    (0..dim)
        .map(|d| {
            let v = e.coords().iter().enumerate().map(|(k, &x)| if k % dim == d { x } else { 0.0 }).collect();
            FlatVector(v)
        })
        .collect()
}

/// Ordered by target column `i`, then source column `j != i`.
pub fn shear_vectors(e: &PointSet) -> Vec<FlatVector> {
    let dim = e.dim();
    let mut out = Vec::with_capacity(dim * dim.saturating_sub(1));
    for i in 0..dim {
        for j in 0..dim {
            if i == j {
                continue;
            }
            let mut v = vec![0.0; e.coords().len()];
            for (p, row) in e.points().enumerate() {
                v[p * dim + i] = row[j];
            }
            out.push(FlatVector(v));
        }
    }
    out
}

/// The enabled spanning sets for one embedding, in T, D, S order.
pub fn build_invariance_vectors(e: &LotEmbedding, flags: InvarianceFlags) -> Vec<SpanningSet> {
    let m = &e.matrix;
    let mut sets = Vec::new();
    if flags.translation {
        sets.push(SpanningSet { kind: SpanKind::Translation, vectors: translation_vectors(m.len(), m.dim()) });
    }
    if flags.aniso_scale {
        sets.push(SpanningSet { kind: SpanKind::AnisoScale, vectors: aniso_scale_vectors(m) });
    }
    if flags.shear {
        sets.push(SpanningSet { kind: SpanKind::Shear, vectors: shear_vectors(m) });
    }
    sets
}

/// Columns: the flattened embeddings in order, then the translation vectors
/// once, then anisotropic-scaling vectors of every embedding, then shear
/// vectors of every embedding.
pub fn assemble_class_matrix(embeddings: &[LotEmbedding], flags: InvarianceFlags) -> Result<Matrix> {
    let first = embeddings.first().ok_or(Error::EmptyClass(0))?;
    let (n, dim) = (first.matrix.len(), first.matrix.dim());
    for e in embeddings {
        if e.reference_id != first.reference_id {
            return Err(Error::ReferenceMismatch);
        }
        if e.matrix.len() != n || e.matrix.dim() != dim {
            return Err(Error::ShapeMismatch("embeddings differ in shape".into()));
        }
    }
    let mut cols: Vec<FlatVector> = embeddings.iter().map(|e| flatten(&e.matrix)).collect();
    if flags.translation {
        cols.extend(translation_vectors(n, dim));
    }
    if flags.aniso_scale {
        for e in embeddings {
            cols.extend(aniso_scale_vectors(&e.matrix));
        }
    }
    if flags.shear {
        for e in embeddings {
            cols.extend(shear_vectors(&e.matrix));
        }
    }
    let rows = n * dim;
    let mut data = Vec::with_capacity(rows * cols.len());
    for c in &cols {
        data.extend_from_slice(c.as_slice());
    }
    Ok(Matrix::from_vec(rows, cols.len(), data))
}

/// Orthonormal basis for the dominant column space of a matrix.
#[derive(Debug, Clone)]
pub struct FittedBasis {
    pub basis: Matrix,
    /// Share of the total squared singular mass captured by `basis`.
    pub explained_variance_fraction: f64,
}

/// Keeps the fewest leading left singular vectors whose squared singular
/// values reach `variance_fraction` of the total. No centering is applied and
/// numerically zero singular values are never kept.
pub fn fit_basis(a: &Matrix, variance_fraction: f64) -> Result<FittedBasis> {
    if !(variance_fraction > 0.0 && variance_fraction <= 1.0) {
        return Err(Error::InvalidVarianceFraction(variance_fraction));
    }
    if a.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroMatrix);
    }
    let svd = numerics::svd(a)?;
    let tol = rank_tolerance(&svd.singular_values, a.nrows(), a.ncols());
    let energies: Vec<f64> = svd.singular_values.iter().map(|s| s * s).collect();
    let total: f64 = energies.iter().sum();
    let rank = svd.singular_values.iter().take_while(|&&s| s > tol).count();
    if rank == 0 || total == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    let target = variance_fraction * total;
    let mut kept = rank;
    let mut acc = 0.0;
    for (i, e) in energies.iter().take(rank).enumerate() {
        acc += e;
        if acc >= target {
            kept = i + 1;
            break;
        }
    }
    let captured: f64 = energies[..kept].iter().sum();
    Ok(FittedBasis {
        basis: svd.left_vectors.columns(0, kept).into_owned(),
        explained_variance_fraction: (captured / total).min(1.0),
    })
}

/// Reference and fitted subspace for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassSubspace {
    pub class_label: usize,
    pub reference: PointSet,
    /// `(N * L) x m_k`, column-orthonormal.
    pub basis: Matrix,
    pub explained_variance_fraction: f64,
    reference_id: u64,
}

impl ClassSubspace {
    pub fn new(class_label: usize, reference: PointSet, basis: Matrix, explained_variance_fraction: f64) -> Result<Self> {
        if basis.nrows() != reference.len() * reference.dim() {
            return Err(Error::ShapeMismatch(format!(
                "basis has {} rows for a {}x{} reference",
                basis.nrows(),
                reference.len(),
                reference.dim()
            )));
        }
        let deviation = orthonormality_error(&basis);
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NonOrthonormalBasis { deviation });
        }
        let reference_id = reference_fingerprint(&reference);
        Ok(ClassSubspace { class_label, reference, basis, explained_variance_fraction, reference_id })
    }

    /// Subspace dimension `m_k`.
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn embed(&self, p: &PointSet) -> Result<LotEmbedding> {
        lot_transform_with_id(p, &self.reference, self.reference_id)
    }

    /// Squared residual of a flattened embedding against this subspace.
    pub fn residual(&self, x: &FlatVector) -> Result<f64> {
        if x.len() != self.basis.nrows() {
            return Err(Error::ShapeMismatch(format!("embedding of length {} vs {}", x.len(), self.basis.nrows())));
        }
        Ok(residual_unchecked(x.as_slice(), &self.basis))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub flags: InvarianceFlags,
    pub variance_fraction: f64,
    /// Reference perturbation, relative to the mean nearest-neighbor spacing.
    pub reference_jitter: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { flags: InvarianceFlags::ALL, variance_fraction: 0.99, reference_jitter: 0.1, seed: 0 }
    }
}

/// A trained LOT nearest-subspace classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct LotNsModel {
    n: usize,
    dim: usize,
    flags: InvarianceFlags,
    variance_fraction: f64,
    classes: Vec<ClassSubspace>,
}

/// Predicted label and the per-class squared residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    pub scores: Vec<f64>,
}

impl LotNsModel {
    pub fn from_parts(
        flags: InvarianceFlags,
        variance_fraction: f64,
        classes: Vec<ClassSubspace>,
    ) -> Result<Self> {
        let first = classes.first().ok_or_else(|| Error::InvalidConfig("model has no classes".into()))?;
        let (n, dim) = (first.reference.len(), first.reference.dim());
        for (k, c) in classes.iter().enumerate() {
            if c.class_label != k {
                return Err(Error::LabelGap(k));
            }
            if c.reference.len() != n {
                return Err(Error::CardinalityMismatch { left: n, right: c.reference.len() });
            }
            if c.reference.dim() != dim {
                return Err(Error::DimensionMismatch { left: dim, right: c.reference.dim() });
            }
        }
        Ok(LotNsModel { n, dim, flags, variance_fraction, classes })
    }

    pub fn num_points(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn flags(&self) -> InvarianceFlags {
        self.flags
    }

    pub fn variance_fraction(&self) -> f64 {
        self.variance_fraction
    }

    pub fn classes(&self) -> &[ClassSubspace] {
        &self.classes
    }

    /// Flattened embeddings of `p` against every class reference.
    pub fn embed(&self, p: &PointSet) -> Result<Vec<FlatVector>> {
        if p.len() != self.n {
            return Err(Error::CardinalityMismatch { left: self.n, right: p.len() });
        }
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: p.dim() });
        }
        self.classes.iter().map(|c| Ok(flatten(&c.embed(p)?.matrix))).collect()
    }

    /// Nearest-subspace decision from precomputed per-class embeddings.
    /// Ties go to the lowest class index.
    pub fn classify(&self, embeddings: &[FlatVector]) -> Result<Prediction> {
        if embeddings.len() != self.classes.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} embeddings for {} classes",
                embeddings.len(),
                self.classes.len()
            )));
        }
        let scores = self
            .classes
            .iter()
            .zip(embeddings)
            .map(|(c, x)| c.residual(x))
            .collect::<Result<Vec<_>>>()?;
        let mut label = 0;
        for (k, &s) in scores.iter().enumerate() {
            if s < scores[label] {
                label = k;
            }
        }
        Ok(Prediction { label, scores })
    }

    pub fn predict(&self, p: &PointSet) -> Result<Prediction> {
        self.classify(&self.embed(p)?)
    }
}

/// One perturbed training sample per class, drawn from the substream
/// `(seed, Reference, k)`.
pub fn choose_references(dataset: &LabeledDataset, reference_jitter: f64, seed: u64) -> Result<Vec<PointSet>> {
    (0..dataset.num_classes())
        .map(|k| {
            let mut rng = seed::substream(seed, Stream::Reference, &[k as u64]);
            make_reference(dataset, k, reference_jitter, &mut rng)
        })
        .collect()
}

/// Embeds every training sample against its own class reference, grouped by
/// class in dataset order.
pub fn embed_training_set(dataset: &LabeledDataset, references: &[PointSet]) -> Result<Vec<Vec<LotEmbedding>>> {
    let ids: Vec<u64> = references.iter().map(reference_fingerprint).collect();
    let mut grouped = vec![Vec::new(); references.len()];
    for (p, k) in dataset.samples() {
        grouped[*k].push(lot_transform_with_id(p, &references[*k], ids[*k])?);
    }
    Ok(grouped)
}

/// Fits the class subspaces from precomputed training embeddings.
pub fn fit_model(
    references: Vec<PointSet>,
    class_embeddings: &[Vec<LotEmbedding>],
    flags: InvarianceFlags,
    variance_fraction: f64,
) -> Result<LotNsModel> {
    let mut classes = Vec::with_capacity(references.len());
    for (k, (reference, embeddings)) in references.into_iter().zip(class_embeddings).enumerate() {
        if embeddings.is_empty() {
            return Err(Error::EmptyClass(k));
        }
        let a = assemble_class_matrix(embeddings, flags)?;
        let fitted = fit_basis(&a, variance_fraction)?;
        classes.push(ClassSubspace::new(k, reference, fitted.basis, fitted.explained_variance_fraction)?);
    }
    LotNsModel::from_parts(flags, variance_fraction, classes)
}

/// Trains a model: per class, pick a reference, embed the class's samples,
/// assemble with the enabled spanning sets and fit the basis.
pub fn train(dataset: &LabeledDataset, cfg: &TrainConfig) -> Result<LotNsModel> {
    dataset.require_all_classes()?;
    dataset.point_count()?;
    let references = choose_references(dataset, cfg.reference_jitter, cfg.seed)?;
    let embeddings = embed_training_set(dataset, &references)?;
    fit_model(references, &embeddings, cfg.flags, cfg.variance_fraction)
}

pub fn predict(p: &PointSet, model: &LotNsModel) -> Result<Prediction> {
    model.predict(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deform::{apply_affine, synth_dataset, AffineMap, DeformationConfig, SynthSpec};
    use crate::ot::lot_transform;
    use crate::pointset::permute_points;
    use crate::templates::builtin_templates;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn embedding(rows: &[[f64; 2]]) -> LotEmbedding {
        let p = PointSet::from_rows(rows).unwrap();
        lot_transform(&p, &p).unwrap()
    }

    #[test]
    fn flags_parse_and_print() {
        assert_eq!("T,D,S".parse::<InvarianceFlags>().unwrap(), InvarianceFlags::ALL);
        assert_eq!("none".parse::<InvarianceFlags>().unwrap(), InvarianceFlags::NONE);
        assert_eq!("s, t".parse::<InvarianceFlags>().unwrap().to_string(), "T,S");
        assert!("T,X".parse::<InvarianceFlags>().is_err());
    }

    #[test]
    fn spanning_set_examples() {
        let t = translation_vectors(2, 2);
        assert_eq!(t[0].0, vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(t[1].0, vec![0.0, 1.0, 0.0, 1.0]);

        let e = embedding(&[[1.0, 2.0], [3.0, 4.0]]);
        let sets = build_invariance_vectors(&e, InvarianceFlags::ALL);
        assert_eq!(sets.len(), 3);
        assert_eq!(sets[1].kind, SpanKind::AnisoScale);
        assert_eq!(sets[1].vectors[0].0, vec![1.0, 0.0, 3.0, 0.0]);
        assert_eq!(sets[1].vectors[1].0, vec![0.0, 2.0, 0.0, 4.0]);
        assert_eq!(sets[2].vectors[0].0, vec![2.0, 0.0, 4.0, 0.0]);
        assert_eq!(sets[2].vectors[1].0, vec![0.0, 1.0, 0.0, 3.0]);
        assert!(build_invariance_vectors(&e, InvarianceFlags::NONE).is_empty());
    }

    #[test]
    fn shear_set_size_in_3d() {
        let p = PointSet::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        assert_eq!(shear_vectors(&p).len(), 6);
        assert_eq!(aniso_scale_vectors(&p).len(), 3);
    }

    #[test]
    fn assembled_column_counts() {
        let r = PointSet::from_rows(&[[0.0, 0.0], [1.0, 0.5]]).unwrap();
        let a = lot_transform(&PointSet::from_rows(&[[0.1, 0.0], [1.0, 0.7]]).unwrap(), &r).unwrap();
        let b = lot_transform(&PointSet::from_rows(&[[0.3, 0.2], [0.9, 0.4]]).unwrap(), &r).unwrap();
        let m = assemble_class_matrix(&[a.clone(), b.clone()], InvarianceFlags::ALL).unwrap();
        assert_eq!(m.ncols(), 12);
        let m = assemble_class_matrix(&[a.clone(), b.clone()], InvarianceFlags::NONE).unwrap();
        assert_eq!(m.ncols(), 2);
        assert_eq!(m.column(0).as_slice(), a.matrix.coords());
        assert_eq!(m.column(1).as_slice(), b.matrix.coords());
        let other = lot_transform(&a.matrix, &b.matrix).unwrap();
        assert!(matches!(assemble_class_matrix(&[a, other], InvarianceFlags::NONE), Err(Error::ReferenceMismatch)));
    }

    #[test]
    fn duplicate_embeddings_do_not_change_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = PointSet::new(2, (0..40).map(|_| rng.random::<f64>()).collect()).unwrap();
        let s = PointSet::new(2, (0..40).map(|_| rng.random::<f64>()).collect()).unwrap();
        let e = lot_transform(&s, &r).unwrap();
        let once = assemble_class_matrix(&[e.clone()], InvarianceFlags::ALL).unwrap();
        let twice = assemble_class_matrix(&[e.clone(), e], InvarianceFlags::ALL).unwrap();
        let r1 = fit_basis(&once, 1.0).unwrap().basis.ncols();
        let r2 = fit_basis(&twice, 1.0).unwrap().basis.ncols();
        assert_eq!(r1, r2);
        // the embedding is the sum of its scaling vectors: rank 2 + 2 + 2
        assert_eq!(r1, 6);
    }

    #[test]
    fn fit_basis_variance_threshold() {
        // orthogonal columns with squared norms 0.6, 0.3, 0.1
        let mut a = Matrix::zeros(5, 3);
        a[(0, 0)] = 0.6f64.sqrt();
        a[(1, 1)] = 0.3f64.sqrt();
        a[(2, 2)] = 0.1f64.sqrt();
        assert_eq!(fit_basis(&a, 0.99).unwrap().basis.ncols(), 3);
        let f = fit_basis(&a, 0.9).unwrap();
        assert_eq!(f.basis.ncols(), 2);
        assert!((f.explained_variance_fraction - 0.9).abs() < 1e-12);
        assert!(orthonormality_error(&f.basis) < 1e-8);

        let rank1 = Matrix::from_fn(4, 3, |i, j| (i + 1) as f64 * (j + 2) as f64);
        assert_eq!(fit_basis(&rank1, 0.99).unwrap().basis.ncols(), 1);
        assert_eq!(fit_basis(&rank1, 1.0).unwrap().basis.ncols(), 1);

        assert!(matches!(fit_basis(&Matrix::zeros(3, 2), 0.5), Err(Error::ZeroMatrix)));
        assert!(matches!(fit_basis(&rank1, 0.0), Err(Error::InvalidVarianceFraction(_))));
        assert!(matches!(fit_basis(&rank1, 1.5), Err(Error::InvalidVarianceFraction(_))));
    }

    fn one_per_class() -> LabeledDataset {
        let templates = builtin_templates(3, 24).unwrap();
        LabeledDataset::new(templates.into_iter().enumerate().map(|(k, t)| (t, k)).collect(), 3).unwrap()
    }

    #[test]
    fn single_sample_classes() {
        let ds = one_per_class();
        let cfg = TrainConfig { flags: InvarianceFlags::NONE, variance_fraction: 1.0, ..Default::default() };
        let model = train(&ds, &cfg).unwrap();
        for (p, k) in ds.samples() {
            let c = &model.classes()[*k];
            assert_eq!(c.rank(), 1);
            let x = flatten(&c.embed(p).unwrap().matrix);
            let b: Vec<f64> = c.basis.column(0).iter().copied().collect();
            let norm = x.norm_squared().sqrt();
            let cos: f64 = b.iter().zip(x.as_slice()).map(|(u, v)| u * v).sum::<f64>() / norm;
            assert!((cos.abs() - 1.0).abs() < 1e-12);
            let pred = model.predict(p).unwrap();
            assert_eq!(pred.label, *k);
            assert!(pred.scores[*k] <= 1e-10);
        }
    }

    #[test]
    fn single_class_model_always_predicts_zero() {
        let ds = one_per_class();
        let only = LabeledDataset::new(vec![ds.samples()[0].clone()], 1).unwrap();
        let model = train(&only, &TrainConfig::default()).unwrap();
        for (p, _) in ds.samples() {
            assert_eq!(model.predict(p).unwrap().label, 0);
        }
    }

    #[test]
    fn train_errors() {
        let ds = one_per_class();
        let gap = LabeledDataset::new(vec![ds.samples()[0].clone()], 2).unwrap();
        assert!(matches!(train(&gap, &TrainConfig::default()), Err(Error::EmptyClass(1))));
        let small = PointSet::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let mixed = LabeledDataset::new(vec![ds.samples()[0].clone(), (small.clone(), 1)], 2).unwrap();
        assert!(matches!(train(&mixed, &TrainConfig::default()), Err(Error::CardinalityMismatch { .. })));
        let model = train(&ds, &TrainConfig::default()).unwrap();
        assert!(matches!(model.predict(&small), Err(Error::CardinalityMismatch { .. })));
    }

    fn synthetic(seed: u64) -> (LabeledDataset, LabeledDataset) {
        synth_dataset(&SynthSpec {
            templates: builtin_templates(10, 64).unwrap(),
            n_train: 2,
            n_test: 5,
            config_train: DeformationConfig::default(),
            config_test: DeformationConfig::default(),
            seed,
        })
        .unwrap()
    }

    #[test]
    fn training_samples_lie_in_their_own_subspace() {
        let (train_ds, _) = synthetic(3);
        let cfg = TrainConfig { variance_fraction: 1.0, ..Default::default() };
        let model = train(&train_ds, &cfg).unwrap();
        for (p, k) in train_ds.samples() {
            let pred = model.predict(p).unwrap();
            let x = flatten(&model.classes()[*k].embed(p).unwrap().matrix);
            assert!(pred.scores[*k] < 1e-6 * x.norm_squared(), "{} vs {}", pred.scores[*k], x.norm_squared());
            assert_eq!(pred.label, *k);
        }
    }

    #[test]
    fn more_flags_never_increase_training_residuals() {
        let (train_ds, _) = synthetic(4);
        let variants = ["none", "T", "T,D", "T,D,S"];
        let mut last: Option<Vec<f64>> = None;
        let references = choose_references(&train_ds, 0.1, 4).unwrap();
        let emb = embed_training_set(&train_ds, &references).unwrap();
        for v in variants {
            let model = fit_model(references.clone(), &emb, v.parse().unwrap(), 1.0).unwrap();
            let res: Vec<f64> = train_ds.samples().iter().map(|(p, k)| model.predict(p).unwrap().scores[*k]).collect();
            if let Some(prev) = &last {
                for (a, b) in res.iter().zip(prev) {
                    assert!(*a <= b + 1e-9);
                }
            }
            last = Some(res);
        }
    }

    #[test]
    fn deterministic_training() {
        let (train_ds, _) = synthetic(5);
        let cfg = TrainConfig { seed: 9, ..Default::default() };
        assert_eq!(train(&train_ds, &cfg).unwrap(), train(&train_ds, &cfg).unwrap());
    }

    #[test]
    fn prediction_ignores_storage_order() {
        let (train_ds, test_ds) = synthetic(6);
        let model = train(&train_ds, &TrainConfig::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (p, _) in test_ds.samples() {
            let mut perm: Vec<usize> = (0..p.len()).collect();
            perm.shuffle(&mut rng);
            let q = permute_points(p, &perm).unwrap();
            assert_eq!(model.predict(p).unwrap().label, model.predict(&q).unwrap().label);
        }
    }

    #[test]
    fn translated_and_scaled_samples_are_absorbed() {
        // isotropic scale plus translation keeps the assignment, so the
        // deformed sample lies in span(embedding, U_T) exactly
        let (train_ds, _) = synthetic(7);
        let cfg = TrainConfig { flags: "T".parse().unwrap(), variance_fraction: 1.0, ..Default::default() };
        let model = train(&train_ds, &cfg).unwrap();
        let g = AffineMap::new(2, vec![1.7, 0.0, 0.0, 1.7], vec![0.4, -0.9]).unwrap();
        for (p, k) in train_ds.samples() {
            let q = apply_affine(&g, p).unwrap();
            let pred = model.predict(&q).unwrap();
            let x = flatten(&model.classes()[*k].embed(&q).unwrap().matrix);
            assert!(pred.scores[*k] <= 1e-8 * x.norm_squared());
        }
    }
}
