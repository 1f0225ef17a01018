//! Affine deformations and the synthetic generative model: every sample of a
//! class is a random affine image of that class's template, optionally with
//! per-point Gaussian jitter.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointset::{LabeledDataset, PointSet};
use crate::seed::{self, Stream};

/// Maps with `|det| <= SINGULAR_DET` are rejected.
pub const SINGULAR_DET: f64 = 1e-12;
const MAX_DRAWS: usize = 100;

/// `x -> linear * x + shift`, with `linear` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    dim: usize,
    linear: Vec<f64>,
    shift: Vec<f64>,
}

impl AffineMap {
    pub fn new(dim: usize, linear: Vec<f64>, shift: Vec<f64>) -> Result<Self> {
        if linear.len() != dim * dim || shift.len() != dim {
            return Err(Error::ShapeMismatch(format!("affine map of dimension {dim}")));
        }
        let g = AffineMap { dim, linear, shift };
        let det = g.determinant();
        if !(det.abs() > SINGULAR_DET) {
            return Err(Error::SingularMap(det));
        }
        Ok(g)
    }

    pub fn identity(dim: usize) -> Self {
        let mut linear = vec![0.0; dim * dim];
        for d in 0..dim {
            linear[d * dim + d] = 1.0;
        }
        AffineMap { dim, linear, shift: vec![0.0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn determinant(&self) -> f64 {
        DMatrix::from_row_slice(self.dim, self.dim, &self.linear).determinant()
    }

    fn apply_point(&self, x: &[f64], out: &mut Vec<f64>) {
        for i in 0..self.dim {
            let row = &self.linear[i * self.dim..(i + 1) * self.dim];
            let v: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            out.push(v + self.shift[i]);
        }
    }

    /// `self ∘ inner`: applies `inner` first.
    pub fn compose(&self, inner: &AffineMap) -> Result<AffineMap> {
        if self.dim != inner.dim {
            return Err(Error::DimensionMismatch { left: self.dim, right: inner.dim });
        }
        let n = self.dim;
        let mut linear = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                linear[i * n + j] = (0..n).map(|k| self.linear[i * n + k] * inner.linear[k * n + j]).sum();
            }
        }
        let mut shift = Vec::with_capacity(n);
        self.apply_point(&inner.shift, &mut shift);
        AffineMap::new(n, linear, shift)
    }

    /// Parameterwise convex combination `(1 - c) * a + c * b` of the linear
    /// parts and shifts.
    pub fn interpolate(a: &AffineMap, b: &AffineMap, c: f64) -> Result<AffineMap> {
        if a.dim != b.dim {
            return Err(Error::DimensionMismatch { left: a.dim, right: b.dim });
        }
        let mix = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (1.0 - c) * p + c * q).collect();
        AffineMap::new(a.dim, mix(&a.linear, &b.linear), mix(&a.shift, &b.shift))
    }
}

/// Magnitude bounds for random affine deformations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeformationConfig {
    /// Per-axis translation bound `t`: shift ~ U[-t, t].
    pub translate_max: f64,
    /// Per-axis scale bound `sM >= 1`: factor = exp(U[-ln sM, ln sM]).
    pub scale_max: f64,
    /// Off-diagonal shear factors ~ U[-h, h].
    pub shear_max: f64,
    /// Standard deviation of isotropic per-point Gaussian noise.
    pub jitter_std: f64,
}

impl Default for DeformationConfig {
    fn default() -> Self {
        DeformationConfig { translate_max: 1.0, scale_max: 2.0, shear_max: 0.25, jitter_std: 0.0 }
    }
}

impl DeformationConfig {
    pub fn none() -> Self {
        DeformationConfig { translate_max: 0.0, scale_max: 1.0, shear_max: 0.0, jitter_std: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.translate_max.is_finite()
            && self.translate_max >= 0.0
            && self.scale_max.is_finite()
            && self.scale_max >= 1.0
            && self.shear_max.is_finite()
            && self.shear_max >= 0.0
            && self.jitter_std.is_finite()
            && self.jitter_std >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid deformation config {self:?}")))
        }
    }

    /// Multiplies every deformation magnitude by `factor`: translation and
    /// shear bounds linearly, the scale bound in log space. Jitter is left
    /// unchanged since it is measurement noise rather than deformation.
    pub fn scaled(&self, factor: f64) -> Self {
        DeformationConfig {
            translate_max: self.translate_max * factor,
            scale_max: (self.scale_max.ln() * factor).exp(),
            shear_max: self.shear_max * factor,
            jitter_std: self.jitter_std,
        }
    }
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, bound: f64) -> f64 {
    // lo + (hi - lo) * u; exactly 0 when bound is 0.
    -bound + 2.0 * bound * rng.random::<f64>()
}

/// Draws `linear = Shear * Scale` and a uniform shift. Draw order: `dim` log
/// scales, the `dim * (dim - 1)` off-diagonal shears row by row, then `dim`
/// shifts. Singular draws are retried up to 100 times.
pub fn sample_affine<R: Rng + ?Sized>(rng: &mut R, cfg: &DeformationConfig, dim: usize) -> Result<AffineMap> {
    cfg.validate()?;
    let log_s = cfg.scale_max.ln();
    for _ in 0..MAX_DRAWS {
        let scale: Vec<f64> = (0..dim).map(|_| uniform(rng, log_s).exp()).collect();
        let mut linear = vec![0.0; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                let shear = if i == j { 1.0 } else { uniform(rng, cfg.shear_max) };
                linear[i * dim + j] = shear * scale[j];
            }
        }
        let shift: Vec<f64> = (0..dim).map(|_| uniform(rng, cfg.translate_max)).collect();
        match AffineMap::new(dim, linear, shift) {
            Ok(g) => return Ok(g),
            Err(Error::SingularMap(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::SingularDraw(MAX_DRAWS))
}

/// Push-forward of `p` by `g`: point `i` becomes `g(p_i)`.
pub fn apply_affine(g: &AffineMap, p: &PointSet) -> Result<PointSet> {
    if g.dim != p.dim() {
        return Err(Error::DimensionMismatch { left: g.dim, right: p.dim() });
    }
    let mut coords = Vec::with_capacity(p.coords().len());
    for x in p.points() {
        g.apply_point(x, &mut coords);
    }
    PointSet::new(p.dim(), coords)
}

fn add_jitter<R: Rng + ?Sized>(rng: &mut R, p: PointSet, std: f64) -> Result<PointSet> {
    if std == 0.0 {
        return Ok(p);
    }
    let normal = Normal::new(0.0, std).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let dim = p.dim();
    let coords = p.into_coords().into_iter().map(|x| x + normal.sample(rng)).collect();
    PointSet::new(dim, coords)
}

/// Templates plus sample counts and deformation laws for a synthetic
/// train/test pair.
#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub templates: Vec<PointSet>,
    pub n_train: usize,
    pub n_test: usize,
    pub config_train: DeformationConfig,
    pub config_test: DeformationConfig,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let first = self.templates.first().ok_or_else(|| Error::InvalidConfig("no templates".into()))?;
        if self.templates.iter().any(|t| t.dim() != first.dim()) {
            return Err(Error::InvalidConfig("templates differ in dimension".into()));
        }
        if self.n_train == 0 || self.n_test == 0 {
            return Err(Error::InvalidConfig("n_train and n_test must be positive".into()));
        }
        self.config_train.validate()?;
        self.config_test.validate()
    }
}

/// Generates `per_class` deformed copies of every template. Class `k` draws
/// from the substream `(seed, split, k)`, so classes are independent of each
/// other and of the other split. Samples are ordered class-major.
pub fn synth_split(
    templates: &[PointSet],
    per_class: usize,
    cfg: &DeformationConfig,
    seed: u64,
    split: Stream,
) -> Result<LabeledDataset> {
    let mut samples = Vec::with_capacity(templates.len() * per_class);
    for (k, template) in templates.iter().enumerate() {
        let mut rng = seed::substream(seed, split, &[k as u64]);
        for _ in 0..per_class {
            let g = sample_affine(&mut rng, cfg, template.dim())?;
            let p = add_jitter(&mut rng, apply_affine(&g, template)?, cfg.jitter_std)?;
            samples.push((p, k));
        }
    }
    LabeledDataset::new(samples, templates.len())
}

/// Training and test datasets drawn from the generative model.
pub fn synth_dataset(spec: &SynthSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    spec.validate()?;
    let train = synth_split(&spec.templates, spec.n_train, &spec.config_train, spec.seed, Stream::Train)?;
    let test = synth_split(&spec.templates, spec.n_test, &spec.config_test, spec.seed, Stream::Test)?;
    Ok((train, test))
}

/// A uniformly chosen training sample of class `class`, perturbed by Gaussian
/// noise of standard deviation `jitter_scale` times its mean nearest-neighbor
/// spacing.
pub fn make_reference<R: Rng + ?Sized>(
    train: &LabeledDataset,
    class: usize,
    jitter_scale: f64,
    rng: &mut R,
) -> Result<PointSet> {
    let members = train.class_indices(class);
    if members.is_empty() {
        return Err(Error::EmptyClass(class));
    }
    let pick = members[rng.random_range(0..members.len())];
    let base = train.samples()[pick].0.clone();
    if jitter_scale == 0.0 {
        return Ok(base);
    }
    let std = jitter_scale * base.mean_nearest_neighbor_distance();
    add_jitter(rng, base, std)
}
