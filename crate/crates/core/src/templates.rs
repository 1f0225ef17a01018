//! Built-in planar template shapes for synthetic experiments.
//!
//! Each template is a curve family (or a filled disk) sampled at `n` points
//! equispaced in arclength and normalized so its bounding box is centered at
//! the origin with half-extent 1 along the longer axis. The shapes are
//! pairwise inequivalent under affine maps.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::pointset::PointSet;

pub const BUILTIN_NAMES: [&str; 10] =
    ["ring", "square", "triangle", "plus", "ell", "tee", "spiral", "wave", "disk", "star"];

type Polyline = Vec<[f64; 2]>;

fn closed(mut pts: Polyline) -> Polyline {
    pts.push(pts[0]);
    pts
}

fn regular(k: usize, radius: impl Fn(usize) -> f64, phase: f64) -> Polyline {
    (0..k)
        .map(|i| {
            let t = phase + 2.0 * PI * i as f64 / k as f64;
            let r = radius(i);
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

fn curves(name: &str) -> Option<Vec<Polyline>> {
    let c = match name {
        "ring" => vec![closed(regular(720, |_| 1.0, 0.0))],
        "square" => vec![closed(vec![[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])],
        "triangle" => vec![closed(regular(3, |_| 1.0, PI / 2.0))],
        "plus" => vec![vec![[-1.0, 0.0], [1.0, 0.0]], vec![[0.0, -1.0], [0.0, 1.0]]],
        "ell" => vec![vec![[-0.5, 1.0], [-0.5, -1.0], [0.5, -1.0]]],
        "tee" => vec![vec![[-1.0, 1.0], [1.0, 1.0]], vec![[0.0, 1.0], [0.0, -1.0]]],
        "spiral" => {
            let turns = 2.0;
            vec![(0..=1000)
                .map(|i| {
                    let f = i as f64 / 1000.0;
                    let t = f * turns * 2.0 * PI;
                    let r = 0.1 + 0.9 * f;
                    [r * t.cos(), r * t.sin()]
                })
                .collect()]
        }
        "wave" => vec![(0..=1000)
            .map(|i| {
                let x = -1.0 + 2.0 * i as f64 / 1000.0;
                [x, 0.5 * (1.5 * PI * (x + 1.0)).sin()]
            })
            .collect()],
        "star" => vec![closed(regular(10, |i| if i % 2 == 0 { 1.0 } else { 0.4 }, PI / 2.0))],
        _ => return None,
    };
    Some(c)
}

fn sample_arclength(lines: &[Polyline], n: usize) -> Vec<f64> {
    let segs: Vec<([f64; 2], [f64; 2], f64)> = lines
        .iter()
        .flat_map(|l| l.windows(2).map(|w| (w[0], w[1], (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]))))
        .collect();
    let total: f64 = segs.iter().map(|s| s.2).sum();
    let mut out = Vec::with_capacity(2 * n);
    let mut seg = 0;
    let mut start = 0.0;
    for i in 0..n {
        let target = (i as f64 + 0.5) / n as f64 * total;
        while seg + 1 < segs.len() && start + segs[seg].2 < target {
            start += segs[seg].2;
            seg += 1;
        }
        let (a, b, len) = segs[seg];
        let f = if len > 0.0 { ((target - start) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(a[0] + f * (b[0] - a[0]));
        out.push(a[1] + f * (b[1] - a[1]));
    }
    out
}

/// Vogel's sunflower arrangement: an evenly filled unit disk.
fn filled_disk(n: usize) -> Vec<f64> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .flat_map(|i| {
            let r = ((i as f64 + 0.5) / n as f64).sqrt();
            let t = i as f64 * golden;
            [r * t.cos(), r * t.sin()]
        })
        .collect()
}

/// Centers the bounding box on the origin and scales its longer half-extent
/// to 1.
pub fn normalize_unit_box(p: &PointSet) -> Result<PointSet> {
    let bb = p.bounding_box();
    let center: Vec<f64> = bb.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    let half = bb.iter().map(|(lo, hi)| 0.5 * (hi - lo)).fold(0.0, f64::max);
    let scale = if half > 0.0 { 1.0 / half } else { 1.0 };
    let coords = p
        .points()
        .flat_map(|x| x.iter().zip(&center).map(|(v, c)| (v - c) * scale).collect::<Vec<_>>())
        .collect();
    PointSet::new(p.dim(), coords)
}

/// The named built-in template sampled at `n` points.
pub fn builtin_template(name: &str, n: usize) -> Result<PointSet> {
    if n == 0 {
        return Err(Error::EmptyPointSet);
    }
    let coords = if name == "disk" {
        filled_disk(n)
    } else {
        let lines = curves(name).ok_or_else(|| Error::InvalidConfig(format!("unknown template {name:?}")))?;
        sample_arclength(&lines, n)
    };
    normalize_unit_box(&PointSet::new(2, coords)?)
}

/// The first `count` built-in templates (at most 10), in [`BUILTIN_NAMES`]
/// order.
pub fn builtin_templates(count: usize, n: usize) -> Result<Vec<PointSet>> {
    if count == 0 || count > BUILTIN_NAMES.len() {
        return Err(Error::InvalidConfig(format!(
            "builtin template count must be in 1..={}",
            BUILTIN_NAMES.len()
        )));
    }
    BUILTIN_NAMES[..count].iter().map(|name| builtin_template(name, n)).collect()
}
