//! Experiment protocols: accuracy against training-set size, and
//! out-of-distribution evaluation, for the LOT classifier and the baselines.
//!
//! Within a repeat every method sees the same training subsample and the same
//! test sets. Result rows are sorted by method name, split size and repeat.
//! Timings live in a separate table so that the accuracy tables are
//! reproducible byte for byte.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index;
use serde::Deserialize;

use crate::baselines::{fit_linear, ns_on_embeddings, EmbeddingKind, LinearHyper};
use crate::deform::{synth_split, DeformationConfig, SynthSpec};
use crate::error::{Error, Result};
use crate::io::{load_dataset, write_atomic};
use crate::pointset::{FlatVector, LabeledDataset};
use crate::seed::{self, Stream};
use crate::subspace::{train, InvarianceFlags, TrainConfig};
use crate::svg::{Chart, Series};
use crate::templates::builtin_templates;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassifierKind {
    /// Multinomial logistic regression.
    Lr,
    /// Nearest subspace.
    Ns,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    LotNs,
    Baseline { embedding: EmbeddingKind, classifier: ClassifierKind },
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::LotNs => f.write_str("lot-ns"),
            Method::Baseline { embedding, classifier } => {
                let c = match classifier {
                    ClassifierKind::Lr => "lr",
                    ClassifierKind::Ns => "ns",
                };
                write!(f, "{embedding}-{c}")
            }
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "lot-ns" {
            return Ok(Method::LotNs);
        }
        let (emb, cls) = s.rsplit_once('-').ok_or_else(|| Error::InvalidConfig(format!("unknown method {s:?}")))?;
        let classifier = match cls {
            "lr" => ClassifierKind::Lr,
            "ns" => ClassifierKind::Ns,
            _ => return Err(Error::InvalidConfig(format!("unknown classifier in {s:?}"))),
        };
        Ok(Method::Baseline { embedding: emb.parse()?, classifier })
    }
}

pub const DEFAULT_METHODS: [&str; 11] = [
    "lot-ns", "gem1-lr", "gem1-ns", "gem2-lr", "gem2-ns", "gem4-lr", "gem4-ns", "cov-lr", "cov-ns", "fsort16-lr",
    "fsort16-ns",
];

/// Experiment settings, read from a flat TOML file. Data come from the
/// built-in templates unless both manifests are given.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Number of built-in templates (classes).
    pub templates: usize,
    /// Points per synthetic set.
    pub points: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub manifest_train: Option<PathBuf>,
    pub manifest_test: Option<PathBuf>,
    pub target_n: Option<usize>,
    pub methods: Vec<String>,
    /// Training samples per class for each point of the curve.
    pub splits: Vec<usize>,
    pub repeats: usize,
    pub flags: String,
    pub variance: f64,
    pub reference_jitter: f64,
    pub translate_max: f64,
    pub scale_max: f64,
    pub shear_max: f64,
    pub jitter_std: f64,
    /// Out-of-distribution magnitudes; each defaults to the in-distribution
    /// magnitude doubled.
    pub out_translate_max: Option<f64>,
    pub out_scale_max: Option<f64>,
    pub out_shear_max: Option<f64>,
    pub out_jitter_std: Option<f64>,
    pub lr_learning_rate: f64,
    pub lr_l2: f64,
    pub lr_max_iter: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let d = DeformationConfig::default();
        let lr = LinearHyper::default();
        ExperimentConfig {
            seed: 0,
            templates: 10,
            points: 256,
            train_per_class: 32,
            test_per_class: 25,
            manifest_train: None,
            manifest_test: None,
            target_n: None,
            methods: DEFAULT_METHODS.iter().map(|s| s.to_string()).collect(),
            splits: vec![1, 2, 4, 8, 16, 32],
            repeats: 10,
            flags: "T,D,S".into(),
            variance: 0.99,
            reference_jitter: 0.1,
            translate_max: d.translate_max,
            scale_max: d.scale_max,
            shear_max: d.shear_max,
            jitter_std: d.jitter_std,
            out_translate_max: None,
            out_scale_max: None,
            out_shear_max: None,
            out_jitter_std: None,
            lr_learning_rate: lr.learning_rate,
            lr_l2: lr.l2,
            lr_max_iter: lr.max_iter,
            out_dir: PathBuf::from("results"),
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML text; relative manifest paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        for p in [&mut cfg.manifest_train, &mut cfg.manifest_test].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::io(path, e),
        })?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new("")))
    }

    pub fn deform_in(&self) -> DeformationConfig {
        DeformationConfig {
            translate_max: self.translate_max,
            scale_max: self.scale_max,
            shear_max: self.shear_max,
            jitter_std: self.jitter_std,
        }
    }

    pub fn deform_out(&self) -> DeformationConfig {
        let doubled = self.deform_in().scaled(2.0);
        DeformationConfig {
            translate_max: self.out_translate_max.unwrap_or(doubled.translate_max),
            scale_max: self.out_scale_max.unwrap_or(doubled.scale_max),
            shear_max: self.out_shear_max.unwrap_or(doubled.shear_max),
            jitter_std: self.out_jitter_std.unwrap_or(doubled.jitter_std),
        }
    }

    pub fn invariance_flags(&self) -> Result<InvarianceFlags> {
        self.flags.parse()
    }

    pub fn parsed_methods(&self) -> Result<Vec<Method>> {
        self.methods.iter().map(|m| m.parse()).collect()
    }

    pub fn linear_hyper(&self) -> LinearHyper {
        LinearHyper { learning_rate: self.lr_learning_rate, l2: self.lr_l2, max_iter: self.lr_max_iter }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.repeats == 0 {
            return bad("repeats must be at least 1");
        }
        if self.splits.is_empty() || self.splits.contains(&0) {
            return bad("split sizes must be positive");
        }
        if self.methods.is_empty() {
            return bad("no methods selected");
        }
        if !(self.variance > 0.0 && self.variance <= 1.0) {
            return Err(Error::InvalidVarianceFraction(self.variance));
        }
        if !(self.reference_jitter >= 0.0 && self.reference_jitter.is_finite()) {
            return bad("reference_jitter must be non-negative");
        }
        if self.manifest_train.is_some() != self.manifest_test.is_some() {
            return bad("manifest_train and manifest_test must be given together");
        }
        if self.lr_max_iter == 0 || !(self.lr_learning_rate > 0.0) || !(self.lr_l2 >= 0.0) {
            return bad("invalid logistic regression settings");
        }
        self.invariance_flags()?;
        self.parsed_methods()?;
        self.deform_in().validate()?;
        self.deform_out().validate()
    }

    pub fn synth_spec(&self) -> Result<SynthSpec> {
        Ok(SynthSpec {
            templates: builtin_templates(self.templates, self.points)?,
            n_train: self.train_per_class,
            n_test: self.test_per_class,
            config_train: self.deform_in(),
            config_test: self.deform_in(),
            seed: self.seed,
        })
    }

    /// Training pool and test set, from manifests or synthesized.
    pub fn load_data(&self) -> Result<(LabeledDataset, LabeledDataset)> {
        match (&self.manifest_train, &self.manifest_test) {
            (Some(tr), Some(te)) => {
                let train = load_dataset(tr, self.target_n, self.seed)?;
                let test = load_dataset(te, self.target_n, seed::derive(self.seed, Stream::Test, &[]))?;
                Ok((train, test))
            }
            _ => crate::deform::synth_dataset(&self.synth_spec()?),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub split_size: usize,
    pub repeat_index: usize,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub train_seconds: f64,
    pub test_seconds: f64,
}

/// Per-class draw without replacement of `split` training samples, from the
/// substream `(seed, Split, split, repeat, class)`. Returned indices are
/// sorted.
pub fn draw_split(pool: &LabeledDataset, split: usize, repeat: usize, seed: u64) -> Result<Vec<usize>> {
    let mut chosen = Vec::with_capacity(split * pool.num_classes());
    for k in 0..pool.num_classes() {
        let members = pool.class_indices(k);
        if split > members.len() {
            return Err(Error::InfeasibleSplit { requested: split, available: members.len(), class: k });
        }
        let mut rng = seed::substream(seed, Stream::Split, &[split as u64, repeat as u64, k as u64]);
        chosen.extend(index::sample(&mut rng, members.len(), split).into_iter().map(|i| members[i]));
    }
    chosen.sort_unstable();
    Ok(chosen)
}

/// Outcome of one trained method on each of several test sets.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub correct: Vec<usize>,
    pub train_seconds: f64,
    pub test_seconds: f64,
}

/// Trains methods on subsamples of a fixed pool and scores them on fixed
/// test sets, caching the baseline embeddings.
pub struct Evaluator<'a> {
    cfg: &'a ExperimentConfig,
    flags: InvarianceFlags,
    pool: &'a LabeledDataset,
    tests: Vec<&'a LabeledDataset>,
    cache: HashMap<String, (Vec<FlatVector>, Vec<Vec<FlatVector>>)>,
}

fn embed_all(kind: EmbeddingKind, d: &LabeledDataset) -> Result<Vec<FlatVector>> {
    d.samples().iter().map(|(p, _)| Ok(kind.embed(p)?.vector)).collect()
}

impl<'a> Evaluator<'a> {
    pub fn new(cfg: &'a ExperimentConfig, pool: &'a LabeledDataset, tests: Vec<&'a LabeledDataset>) -> Result<Self> {
        cfg.validate()?;
        pool.require_all_classes()?;
        for t in &tests {
            if t.num_classes() != pool.num_classes() {
                return Err(Error::ShapeMismatch(format!(
                    "test set has {} classes, training pool {}",
                    t.num_classes(),
                    pool.num_classes()
                )));
            }
        }
        Ok(Evaluator { cfg, flags: cfg.invariance_flags()?, pool, tests, cache: HashMap::new() })
    }

    fn embeddings(&mut self, kind: EmbeddingKind) -> Result<&(Vec<FlatVector>, Vec<Vec<FlatVector>>)> {
        let key = kind.to_string();
        if !self.cache.contains_key(&key) {
            let pool = embed_all(kind, self.pool)?;
            let tests = self.tests.iter().map(|t| embed_all(kind, t)).collect::<Result<Vec<_>>>()?;
            self.cache.insert(key.clone(), (pool, tests));
        }
        Ok(&self.cache[&key])
    }

    pub fn evaluate(&mut self, method: Method, subset: &[usize], run_seed: u64) -> Result<Outcome> {
        match method {
            Method::LotNs => {
                let t0 = Instant::now();
                let cfg = TrainConfig {
                    flags: self.flags,
                    variance_fraction: self.cfg.variance,
                    reference_jitter: self.cfg.reference_jitter,
                    seed: run_seed,
                };
                let model = train(&self.pool.subset(subset), &cfg)?;
                let train_seconds = t0.elapsed().as_secs_f64();
                let t1 = Instant::now();
                let mut correct = Vec::with_capacity(self.tests.len());
                for t in &self.tests {
                    let mut c = 0;
                    for (p, label) in t.samples() {
                        if model.predict(p)?.label == *label {
                            c += 1;
                        }
                    }
                    correct.push(c);
                }
                Ok(Outcome { correct, train_seconds, test_seconds: t1.elapsed().as_secs_f64() })
            }
            Method::Baseline { embedding, classifier } => {
                let k = self.pool.num_classes();
                let labels: Vec<usize> = subset.iter().map(|&i| self.pool.samples()[i].1).collect();
                let hyper = self.cfg.linear_hyper();
                let variance = self.cfg.variance;
                let tests: Vec<Vec<usize>> =
                    self.tests.iter().map(|t| t.samples().iter().map(|s| s.1).collect()).collect();
                let (pool_emb, test_emb) = self.embeddings(embedding)?;
                let feats: Vec<FlatVector> = subset.iter().map(|&i| pool_emb[i].clone()).collect();
                let t0 = Instant::now();
                let predict: Box<dyn Fn(&FlatVector) -> usize> = match classifier {
                    ClassifierKind::Lr => {
                        let clf = fit_linear(&feats, &labels, k, hyper)?;
                        Box::new(move |x| clf.predict(x))
                    }
                    ClassifierKind::Ns => {
                        let clf = ns_on_embeddings(&feats, &labels, k, variance)?;
                        Box::new(move |x| clf.predict(x))
                    }
                };
                let train_seconds = t0.elapsed().as_secs_f64();
                let t1 = Instant::now();
                let correct = test_emb
                    .iter()
                    .zip(&tests)
                    .map(|(emb, truth)| emb.iter().zip(truth).filter(|(x, &y)| predict(x) == y).count())
                    .collect();
                Ok(Outcome { correct, train_seconds, test_seconds: t1.elapsed().as_secs_f64() })
            }
        }
    }
}

/// Seed for the model trained in `(split, repeat)`.
pub fn run_seed(seed: u64, split: usize, repeat: usize) -> u64 {
    seed::derive(seed, Stream::Experiment, &[split as u64, repeat as u64])
}

/// Runs every (split, repeat, method) combination against the test sets and
/// returns one row per test set.
fn run_grid(cfg: &ExperimentConfig, pool: &LabeledDataset, tests: Vec<&LabeledDataset>) -> Result<Vec<Vec<ResultRow>>> {
    let methods = cfg.parsed_methods()?;
    let totals: Vec<usize> = tests.iter().map(|t| t.len()).collect();
    let mut eval = Evaluator::new(cfg, pool, tests)?;
    let mut rows = vec![Vec::new(); totals.len()];
    for &split in &cfg.splits {
        for repeat in 0..cfg.repeats {
            let subset = draw_split(pool, split, repeat, cfg.seed)?;
            for &m in &methods {
                let out = eval.evaluate(m, &subset, run_seed(cfg.seed, split, repeat))?;
                for (t, &total) in totals.iter().enumerate() {
                    rows[t].push(ResultRow {
                        method: m.to_string(),
                        split_size: split,
                        repeat_index: repeat,
                        correct: out.correct[t],
                        total,
                        accuracy: out.correct[t] as f64 / total as f64,
                        train_seconds: out.train_seconds,
                        test_seconds: out.test_seconds,
                    });
                }
            }
        }
    }
    for r in &mut rows {
        r.sort_by(|a, b| (&a.method, a.split_size, a.repeat_index).cmp(&(&b.method, b.split_size, b.repeat_index)));
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct CurveReport {
    pub rows: Vec<ResultRow>,
}

pub fn run_curve(cfg: &ExperimentConfig, pool: &LabeledDataset, test: &LabeledDataset) -> Result<CurveReport> {
    let rows = run_grid(cfg, pool, vec![test])?.pop().unwrap_or_default();
    Ok(CurveReport { rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub split_size: usize,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single repeat.
    pub std: f64,
    pub repeats: usize,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, std)
}

/// Groups sorted rows by (method, split) and summarizes `value`.
fn summarize(rows: &[ResultRow], value: impl Fn(usize) -> f64) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let mut end = start;
        while end < rows.len() && rows[end].method == rows[start].method && rows[end].split_size == rows[start].split_size {
            end += 1;
        }
        let vals: Vec<f64> = (start..end).map(&value).collect();
        let (mean, std) = mean_std(&vals);
        out.push(SummaryRow {
            method: rows[start].method.clone(),
            split_size: rows[start].split_size,
            mean,
            std,
            repeats: end - start,
        });
        start = end;
    }
    out
}

fn series(summary: &[SummaryRow]) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for s in summary {
        match out.last_mut() {
            Some(last) if last.name == s.method => last.points.push((s.split_size as f64, s.mean)),
            _ => out.push(Series { name: s.method.clone(), points: vec![(s.split_size as f64, s.mean)] }),
        }
    }
    out
}

fn fmt_f(x: f64) -> String {
    format!("{x:.6}")
}

impl CurveReport {
    pub fn summary(&self) -> Vec<SummaryRow> {
        summarize(&self.rows, |i| self.rows[i].accuracy)
    }

    pub fn results_csv(&self) -> String {
        let mut s = String::from("method,split_size,repeat,correct,total,accuracy\n");
        for r in &self.rows {
            writeln!(s, "{},{},{},{},{},{}", r.method, r.split_size, r.repeat_index, r.correct, r.total, fmt_f(r.accuracy)).unwrap();
        }
        s
    }

    pub fn timings_csv(&self) -> String {
        timings_csv(&self.rows)
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("method,split_size,repeats,mean_accuracy,std_accuracy\n");
        for r in self.summary() {
            writeln!(s, "{},{},{},{},{}", r.method, r.split_size, r.repeats, fmt_f(r.mean), fmt_f(r.std)).unwrap();
        }
        s
    }

    pub fn svg(&self) -> String {
        Chart {
            title: "Test accuracy vs training samples per class".into(),
            x_label: "training samples per class".into(),
            y_label: "mean accuracy".into(),
            y_range: (0.0, 1.0),
            log2_x: true,
        }
        .render(&series(&self.summary()))
    }

    /// Writes results.csv, timings.csv, summary.csv and curve.svg.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_atomic(&dir.join("results.csv"), self.results_csv().as_bytes())?;
        write_atomic(&dir.join("timings.csv"), self.timings_csv().as_bytes())?;
        write_atomic(&dir.join("summary.csv"), self.summary_csv().as_bytes())?;
        write_atomic(&dir.join("curve.svg"), self.svg().as_bytes())
    }
}

fn timings_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from("method,split_size,repeat,train_seconds,test_seconds\n");
    for r in rows {
        writeln!(s, "{},{},{},{},{}", r.method, r.split_size, r.repeat_index, fmt_f(r.train_seconds), fmt_f(r.test_seconds)).unwrap();
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct OodRow {
    pub method: String,
    pub split_size: usize,
    pub repeat_index: usize,
    pub total: usize,
    pub correct_in: usize,
    pub correct_out: usize,
    pub accuracy_in: f64,
    pub accuracy_out: f64,
    /// `accuracy_in - accuracy_out`.
    pub drop: f64,
}

#[derive(Debug, Clone)]
pub struct OodReport {
    pub rows: Vec<OodRow>,
    timing: Vec<ResultRow>,
}

/// Trains on the synthetic in-distribution pool and tests each model on two
/// test sets drawn from the same templates with identical random draws: one
/// with the in-distribution magnitudes, one with the out-of-distribution
/// magnitudes.
pub fn run_ood(cfg: &ExperimentConfig) -> Result<OodReport> {
    cfg.validate()?;
    if cfg.manifest_train.is_some() {
        return Err(Error::InvalidConfig("out-of-distribution runs need synthetic data".into()));
    }
    let spec = cfg.synth_spec()?;
    let (pool, test_in) = crate::deform::synth_dataset(&spec)?;
    let test_out = synth_split(&spec.templates, spec.n_test, &cfg.deform_out(), spec.seed, Stream::Test)?;
    let mut grid = run_grid(cfg, &pool, vec![&test_in, &test_out])?;
    let out = grid.pop().unwrap_or_default();
    let inn = grid.pop().unwrap_or_default();
    let rows = inn
        .iter()
        .zip(&out)
        .map(|(a, b)| OodRow {
            method: a.method.clone(),
            split_size: a.split_size,
            repeat_index: a.repeat_index,
            total: a.total,
            correct_in: a.correct,
            correct_out: b.correct,
            accuracy_in: a.accuracy,
            accuracy_out: b.accuracy,
            drop: a.accuracy - b.accuracy,
        })
        .collect();
    Ok(OodReport { rows, timing: inn })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OodSummaryRow {
    pub method: String,
    pub split_size: usize,
    pub mean_in: f64,
    pub mean_out: f64,
    pub mean_drop: f64,
}

impl OodReport {
    pub fn summary(&self) -> Vec<OodSummaryRow> {
        let proxy: Vec<ResultRow> = self
            .rows
            .iter()
            .map(|r| ResultRow {
                method: r.method.clone(),
                split_size: r.split_size,
                repeat_index: r.repeat_index,
                correct: r.correct_in,
                total: r.total,
                accuracy: r.accuracy_in,
                train_seconds: 0.0,
                test_seconds: 0.0,
            })
            .collect();
        let ins = summarize(&proxy, |i| self.rows[i].accuracy_in);
        let outs = summarize(&proxy, |i| self.rows[i].accuracy_out);
        let drops = summarize(&proxy, |i| self.rows[i].drop);
        ins.into_iter()
            .zip(outs)
            .zip(drops)
            .map(|((a, b), c)| OodSummaryRow {
                method: a.method,
                split_size: a.split_size,
                mean_in: a.mean,
                mean_out: b.mean,
                mean_drop: c.mean,
            })
            .collect()
    }

    pub fn results_csv(&self) -> String {
        let mut s = String::from("method,split_size,repeat,total,correct_in,correct_out,accuracy_in,accuracy_out,drop\n");
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                r.method,
                r.split_size,
                r.repeat_index,
                r.total,
                r.correct_in,
                r.correct_out,
                fmt_f(r.accuracy_in),
                fmt_f(r.accuracy_out),
                fmt_f(r.drop)
            )
            .unwrap();
        }
        s
    }

    pub fn summary_csv(&self) -> String {
        let mut s = String::from("method,split_size,mean_accuracy_in,mean_accuracy_out,mean_drop\n");
        for r in self.summary() {
            writeln!(s, "{},{},{},{},{}", r.method, r.split_size, fmt_f(r.mean_in), fmt_f(r.mean_out), fmt_f(r.mean_drop)).unwrap();
        }
        s
    }

    pub fn svg(&self) -> String {
        let summary: Vec<SummaryRow> = self
            .summary()
            .into_iter()
            .map(|r| SummaryRow { method: r.method, split_size: r.split_size, mean: r.mean_out, std: 0.0, repeats: 0 })
            .collect();
        Chart {
            title: "Out-of-distribution test accuracy".into(),
            x_label: "training samples per class".into(),
            y_label: "mean accuracy (shifted test set)".into(),
            y_range: (0.0, 1.0),
            log2_x: true,
        }
        .render(&series(&summary))
    }

    /// Writes ood_results.csv, ood_timings.csv, ood_summary.csv and ood.svg.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_atomic(&dir.join("ood_results.csv"), self.results_csv().as_bytes())?;
        write_atomic(&dir.join("ood_timings.csv"), timings_csv(&self.timing).as_bytes())?;
        write_atomic(&dir.join("ood_summary.csv"), self.summary_csv().as_bytes())?;
        write_atomic(&dir.join("ood.svg"), self.svg().as_bytes())
    }
}
