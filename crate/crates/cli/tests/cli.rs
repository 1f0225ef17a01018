use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lotsub::io::read_pointset_csv;
use lotsub::templates::builtin_template;

fn lotsub(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lotsub")).args(args).output().expect("run lotsub")
}

fn ok(args: &[&str]) -> String {
    let out = lotsub(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("exp.toml");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn gen_writes_expected_tree_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "templates = 10\npoints = 16\ntrain_per_class = 2\ntest_per_class = 25\n");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&["gen", "--config", &cfg, "--seed", "3", "--out", a.to_str().unwrap()]);
    ok(&["gen", "--config", &cfg, "--seed", "3", "--out", b.to_str().unwrap()]);
    let fa = files_under(&a);
    let csvs = fa.iter().filter(|p| p.extension().unwrap() == "csv").count();
    let manifests = fa.iter().filter(|p| p.extension().unwrap() == "manifest").count();
    assert_eq!((csvs, manifests), (270, 2));
    let fb = files_under(&b);
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.strip_prefix(&a).unwrap(), y.strip_prefix(&b).unwrap());
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
}

#[test]
fn zero_magnitude_gen_reproduces_templates() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "templates = 2\npoints = 20\ntrain_per_class = 1\ntest_per_class = 1\ntranslate_max = 0.0\nscale_max = 1.0\nshear_max = 0.0\n",
    );
    let out = tmp.path().join("d");
    ok(&["gen", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let got = read_pointset_csv(&out.join("train/c01_000.csv")).unwrap();
    assert_eq!(got, builtin_template("square", 20).unwrap());
}

#[test]
fn train_then_predict() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "templates = 3\npoints = 24\ntrain_per_class = 3\ntest_per_class = 2\n");
    let data = tmp.path().join("d");
    ok(&["gen", "--config", &cfg, "--out", data.to_str().unwrap()]);
    let manifest = data.join("train.manifest");
    let model = tmp.path().join("m.lotsub");
    let model_none = tmp.path().join("none.lotsub");
    let m = model.to_str().unwrap();

    let all = ok(&["train", "--manifest", manifest.to_str().unwrap(), "--out", m]);
    let none = ok(&["train", "--manifest", manifest.to_str().unwrap(), "--flags", "none", "--out", model_none.to_str().unwrap()]);
    let ranks = |s: &str| -> Vec<usize> {
        s.lines()
            .filter_map(|l| l.split("m_k=").nth(1))
            .map(|r| r.split_whitespace().next().unwrap().parse().unwrap())
            .collect()
    };
    let (ra, rn) = (ranks(&all), ranks(&none));
    assert_eq!(ra.len(), 3);
    for (a, n) in ra.iter().zip(&rn) {
        assert!(a >= n);
    }

    let again = tmp.path().join("again.lotsub");
    ok(&["train", "--manifest", manifest.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(fs::read(&model).unwrap(), fs::read(&again).unwrap());

    let single = ok(&["predict", "--model", m, data.join("train/c02_001.csv").to_str().unwrap()]);
    let row: Vec<&str> = single.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[2], "2");
    assert_eq!(row.len(), 3 + 3);

    let batch = ok(&["predict", "--model", m, manifest.to_str().unwrap()]);
    let rows: Vec<&str> = batch.lines().skip(1).collect();
    assert_eq!(rows.len(), 9);
    for r in rows {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!(f[1], f[2], "training sample misclassified: {r}");
    }
}

#[test]
fn error_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.lotsub");
    let csv = tmp.path().join("p.csv");
    fs::write(&csv, "0,0\n1,1\n").unwrap();
    let out = lotsub(&["predict", "--model", missing.to_str().unwrap(), csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));

    let cfg = write_config(tmp.path(), "repeats = 0\n");
    assert_eq!(lotsub(&["curve", "--config", &cfg]).status.code(), Some(2));
    let cfg = write_config(tmp.path(), "unknown_key = 1\n");
    assert_eq!(lotsub(&["curve", "--config", &cfg]).status.code(), Some(2));
    let cfg = write_config(tmp.path(), "templates = 2\npoints = 8\ntrain_per_class = 2\nsplits = [3]\nrepeats = 1\n");
    assert_eq!(lotsub(&["curve", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn curve_and_ood_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "templates = 3\npoints = 24\ntrain_per_class = 2\ntest_per_class = 3\nsplits = [2]\nrepeats = 1\n",
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&["curve", "--config", &cfg, "--out", a.to_str().unwrap()]);
    ok(&["curve", "--config", &cfg, "--out", b.to_str().unwrap()]);
    let results = fs::read_to_string(a.join("results.csv")).unwrap();
    assert_eq!(results, fs::read_to_string(b.join("results.csv")).unwrap());
    assert_eq!(results.lines().count(), 1 + lotsub::harness::DEFAULT_METHODS.len());
    assert!(results.lines().any(|l| l.starts_with("lot-ns,2,0,")));
    for f in ["timings.csv", "summary.csv", "curve.svg"] {
        assert!(a.join(f).exists(), "{f}");
    }

    let o = tmp.path().join("o");
    ok(&["ood", "--config", &cfg, "--out", o.to_str().unwrap()]);
    let ood = fs::read_to_string(o.join("ood_results.csv")).unwrap();
    assert_eq!(ood.lines().count(), 1 + lotsub::harness::DEFAULT_METHODS.len());
    for l in ood.lines().skip(1) {
        let drop: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(drop.is_finite());
    }
    assert!(o.join("ood.svg").exists());
}
