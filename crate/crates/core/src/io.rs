//! Point-set CSV files, dataset manifests and the model file format.
//!
//! Reals are written with 17 significant digits, which is enough for every
//! `f64` to survive a decimal round trip unchanged. Files are written to a
//! temporary sibling and renamed into place.
//!
//! Manifest lines are `label,relative-path`; blank lines and lines starting
//! with `#` are ignored. Paths resolve relative to the manifest's directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::pointset::{LabeledDataset, PointSet};
use crate::seed::{self, Stream};
use crate::subspace::{ClassSubspace, InvarianceFlags, LotNsModel};

pub const MODEL_MAGIC: &str = "LOTSUB-MODEL";
pub const MODEL_VERSION: u32 = 1;

/// Relative jitter, in units of the bounding-box diagonal, added to points
/// duplicated during upsampling.
pub const UPSAMPLE_JITTER: f64 = 1e-6;

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn join_reals(xs: &[f64]) -> String {
    xs.iter().map(|&x| real(x)).collect::<Vec<_>>().join(",")
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path.file_name().ok_or_else(|| Error::InvalidConfig(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn read_text(path: &Path) -> Result<String> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::MissingFile(path.to_path_buf())),
        Err(e) => Err(Error::io(path, e)),
    }
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

fn parse_row(path: &Path, line: usize, text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|field| {
            let field = field.trim();
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(parse_error(path, line, format!("non-finite value {field:?}"))),
                Err(_) => Err(parse_error(path, line, format!("not a number: {field:?}"))),
            }
        })
        .collect()
}

/// Parses point-set CSV text. `path` is only used in error messages.
pub fn parse_pointset_csv(text: &str, path: &Path) -> Result<PointSet> {
    let mut dim = None;
    let mut coords = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let row = raw.trim();
        if row.is_empty() || (line == 1 && row.starts_with('#')) {
            continue;
        }
        let values = parse_row(path, line, row)?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::RaggedRows { path: path.to_path_buf(), line, expected: d, found: values.len() })
            }
            Some(_) => {}
        }
        coords.extend(values);
    }
    match dim {
        None => Err(Error::EmptyFile(path.to_path_buf())),
        Some(d) => PointSet::new(d, coords),
    }
}

pub fn read_pointset_csv(path: &Path) -> Result<PointSet> {
    parse_pointset_csv(&read_text(path)?, path)
}

pub fn format_pointset_csv(p: &PointSet) -> String {
    let mut out = String::with_capacity(p.len() * p.dim() * 24);
    for x in p.points() {
        out.push_str(&join_reals(x));
        out.push('\n');
    }
    out
}

pub fn write_pointset_csv(p: &PointSet, path: &Path) -> Result<()> {
    if p.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    write_atomic(path, format_pointset_csv(p).as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub class_label: usize,
    pub path: PathBuf,
}

/// Parses a manifest; returned paths are resolved against the manifest's
/// directory.
pub fn read_manifest(manifest: &Path) -> Result<Vec<ManifestEntry>> {
    let text = read_text(manifest)?;
    let base = manifest.parent().unwrap_or(Path::new(""));
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let row = raw.trim();
        if row.is_empty() || row.starts_with('#') {
            continue;
        }
        let (label, rel) = row
            .split_once(',')
            .ok_or_else(|| parse_error(manifest, i + 1, "expected \"label,path\""))?;
        let class_label = label
            .trim()
            .parse()
            .map_err(|_| parse_error(manifest, i + 1, format!("bad label {:?}", label.trim())))?;
        let rel = rel.trim();
        if rel.is_empty() {
            return Err(parse_error(manifest, i + 1, "empty path"));
        }
        entries.push(ManifestEntry { class_label, path: base.join(rel) });
    }
    Ok(entries)
}

/// Subsamples without replacement or upsamples with replacement plus jitter
/// so that `p` has exactly `target` points. Upsampling keeps every original
/// point and appends jittered duplicates.
pub fn resample_to<R: Rng + ?Sized>(p: &PointSet, target: usize, rng: &mut R) -> Result<PointSet> {
    let n = p.len();
    if target == 0 {
        return Err(Error::InvalidConfig("target point count must be positive".into()));
    }
    if n == target {
        return Ok(p.clone());
    }
    let mut coords = Vec::with_capacity(target * p.dim());
    if n > target {
        let mut keep = index::sample(rng, n, target).into_vec();
        keep.sort_unstable();
        for i in keep {
            coords.extend_from_slice(p.point(i));
        }
    } else {
        coords.extend_from_slice(p.coords());
        let diag = p.bounding_box().iter().map(|(lo, hi)| (hi - lo).powi(2)).sum::<f64>().sqrt();
        let std = UPSAMPLE_JITTER * diag;
        let normal = Normal::new(0.0, std).map_err(|_| Error::DegenerateInput("bad jitter".into()))?;
        for _ in n..target {
            let i = rng.random_range(0..n);
            for &x in p.point(i) {
                coords.push(x + if std > 0.0 { normal.sample(rng) } else { 0.0 });
            }
        }
    }
    PointSet::new(p.dim(), coords)
}

/// Loads every set named in a manifest. With `target_n` set, entry `i` is
/// resampled from the substream `(seed, Resample, i)`.
pub fn load_dataset(manifest: &Path, target_n: Option<usize>, seed: u64) -> Result<LabeledDataset> {
    let entries = read_manifest(manifest)?;
    if entries.is_empty() {
        return Err(Error::EmptyFile(manifest.to_path_buf()));
    }
    let num_classes = entries.iter().map(|e| e.class_label).max().unwrap_or(0) + 1;
    for k in 0..num_classes {
        if !entries.iter().any(|e| e.class_label == k) {
            return Err(Error::LabelGap(k));
        }
    }
    let mut samples = Vec::with_capacity(entries.len());
    for (i, e) in entries.iter().enumerate() {
        let mut p = read_pointset_csv(&e.path)?;
        if let Some(t) = target_n {
            let mut rng = seed::substream(seed, Stream::Resample, &[i as u64]);
            p = resample_to(&p, t, &mut rng)?;
        }
        samples.push((p, e.class_label));
    }
    LabeledDataset::new(samples, num_classes)
}

/// Writes each sample of `dataset` to `<dir>/<name>/c<label>_<index>.csv`
/// and a manifest `<dir>/<name>.manifest`; returns the manifest path.
pub fn write_dataset(dataset: &LabeledDataset, dir: &Path, name: &str) -> Result<PathBuf> {
    let sub = dir.join(name);
    fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
    let mut manifest = String::from("# label,path\n");
    let mut counters = vec![0usize; dataset.num_classes()];
    for (p, k) in dataset.samples() {
        let file = format!("c{k:02}_{:03}.csv", counters[*k]);
        counters[*k] += 1;
        write_pointset_csv(p, &sub.join(&file))?;
        writeln!(manifest, "{k},{name}/{file}").unwrap();
    }
    let path = dir.join(format!("{name}.manifest"));
    write_atomic(&path, manifest.as_bytes())?;
    Ok(path)
}

fn sha256_hex(data: &[u8]) -> String {
    Sha256::digest(data).iter().fold(String::with_capacity(64), |mut s, b| {
        write!(s, "{b:02x}").unwrap();
        s
    })
}

/// Serializes a model: header fields, then per class its reference (one
/// point per line) and basis (one column per line), then a SHA-256 line
/// over all preceding bytes.
pub fn format_model(model: &LotNsModel) -> String {
    let mut s = String::new();
    writeln!(s, "{MODEL_MAGIC} {MODEL_VERSION}").unwrap();
    writeln!(s, "points {}", model.num_points()).unwrap();
    writeln!(s, "dim {}", model.dim()).unwrap();
    writeln!(s, "classes {}", model.num_classes()).unwrap();
    writeln!(s, "flags {}", model.flags()).unwrap();
    writeln!(s, "variance {}", real(model.variance_fraction())).unwrap();
    for c in model.classes() {
        writeln!(s, "class {} rank {} explained {}", c.class_label, c.rank(), real(c.explained_variance_fraction)).unwrap();
        for x in c.reference.points() {
            writeln!(s, "{}", join_reals(x)).unwrap();
        }
        for col in c.basis.column_iter() {
            writeln!(s, "{}", join_reals(col.as_slice())).unwrap();
        }
    }
    let digest = sha256_hex(s.as_bytes());
    writeln!(s, "sha256 {digest}").unwrap();
    s
}

pub fn save_model(model: &LotNsModel, path: &Path) -> Result<()> {
    write_atomic(path, format_model(model).as_bytes())
}

struct Lines<'a> {
    path: &'a Path,
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        let (i, l) = self.iter.next().ok_or_else(|| parse_error(self.path, self.line + 1, "unexpected end of file"))?;
        self.line = i + 1;
        Ok(l)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        parse_error(self.path, self.line, msg)
    }

    fn field(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next()?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(self.err(format!("expected {key:?}"))),
        }
    }

    fn number<T: std::str::FromStr>(&self, v: &str) -> Result<T> {
        v.trim().parse().map_err(|_| self.err(format!("bad number {v:?}")))
    }

    fn reals(&mut self, expected: usize) -> Result<Vec<f64>> {
        let l = self.next()?;
        let v = parse_row(self.path, self.line, l)?;
        if v.len() != expected {
            return Err(Error::RaggedRows { path: self.path.to_path_buf(), line: self.line, expected, found: v.len() });
        }
        Ok(v)
    }
}

/// Parses a model document. `path` is only used in error messages.
pub fn parse_model(text: &str, path: &Path) -> Result<LotNsModel> {
    let header = text.lines().next().unwrap_or("");
    match header.split_once(' ') {
        Some((magic, v)) if magic == MODEL_MAGIC => {
            if v.trim() != MODEL_VERSION.to_string() {
                return Err(Error::VersionMismatch { found: v.trim().to_string(), expected: MODEL_VERSION.to_string() });
            }
        }
        _ => return Err(parse_error(path, 1, format!("missing {MODEL_MAGIC} header"))),
    }
    let body_end = text.trim_end_matches('\n').rfind('\n').map(|i| i + 1).ok_or(Error::ChecksumMismatch)?;
    let (body, tail) = text.split_at(body_end);
    match tail.trim_end().strip_prefix("sha256 ") {
        Some(d) if d == sha256_hex(body.as_bytes()) => {}
        _ => return Err(Error::ChecksumMismatch),
    }

    let mut lines = Lines { path, iter: body.lines().enumerate(), line: 0 };
    lines.next()?;
    let n: usize = { let v = lines.field("points")?; lines.number(v)? };
    let dim: usize = { let v = lines.field("dim")?; lines.number(v)? };
    let k: usize = { let v = lines.field("classes")?; lines.number(v)? };
    let flags: InvarianceFlags = { let v = lines.field("flags")?; v.parse().map_err(|_| lines.err("bad flags"))? };
    let variance: f64 = { let v = lines.field("variance")?; lines.number(v)? };
    let mut classes = Vec::with_capacity(k);
    for expect in 0..k {
        let l = lines.next()?;
        let parts: Vec<&str> = l.split(' ').collect();
        if parts.len() != 6 || parts[0] != "class" || parts[2] != "rank" || parts[4] != "explained" {
            return Err(lines.err("expected class header"));
        }
        let label: usize = lines.number(parts[1])?;
        if label != expect {
            return Err(lines.err(format!("class {label} out of order")));
        }
        let rank: usize = lines.number(parts[3])?;
        let explained: f64 = lines.number(parts[5])?;
        let mut coords = Vec::with_capacity(n * dim);
        for _ in 0..n {
            coords.extend(lines.reals(dim)?);
        }
        let mut basis = Vec::with_capacity(n * dim * rank);
        for _ in 0..rank {
            basis.extend(lines.reals(n * dim)?);
        }
        let reference = PointSet::new(dim, coords)?;
        classes.push(ClassSubspace::new(label, reference, Matrix::from_vec(n * dim, rank, basis), explained)?);
    }
    if lines.iter.next().is_some() {
        return Err(lines.err("trailing content"));
    }
    LotNsModel::from_parts(flags, variance, classes)
}

pub fn load_model(path: &Path) -> Result<LotNsModel> {
    parse_model(&read_text(path)?, path)
}
