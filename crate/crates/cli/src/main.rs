use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use lotsub::harness::{run_curve, run_ood, ExperimentConfig};
use lotsub::io::{load_dataset, load_model, read_pointset_csv, resample_to, save_model, write_dataset};
use lotsub::seed::{self, Stream};
use lotsub::subspace::{train, TrainConfig};
use lotsub::{Error, ErrorKind, Result};

/// Point-set classification with linear optimal transport embeddings and
/// nearest-subspace models.
#[derive(Parser)]
#[command(name = "lotsub", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Experiment config (flat TOML)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Invariance spanning sets: none, all, or a subset of T,D,S
    #[arg(long)]
    flags: Option<String>,
    /// Fraction of variance kept by each class subspace
    #[arg(long)]
    variance: Option<f64>,
    /// Resample every point set to this many points on load
    #[arg(long = "target-n")]
    target_n: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic train/test dataset from the built-in templates
    Gen {
        #[command(flatten)]
        common: Common,
        /// Output directory
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Train a model from a manifest
    Train {
        #[command(flatten)]
        common: Common,
        /// Training manifest ("label,path" lines)
        #[arg(long)]
        manifest: PathBuf,
        /// Model file to write
        #[arg(long, default_value = "model.lotsub")]
        out: PathBuf,
    },
    /// Classify a point-set CSV or every entry of a manifest
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        /// Point-set CSV, or a manifest ending in .manifest
        input: PathBuf,
    },
    /// Accuracy against training-set size for every configured method
    Curve {
        #[command(flatten)]
        common: Common,
        /// Output directory (overrides out_dir)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train on in-distribution magnitudes, test on shifted magnitudes
    Ood {
        #[command(flatten)]
        common: Common,
        /// Output directory (overrides out_dir)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn experiment_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(f) = &c.flags {
        cfg.flags = f.clone();
    }
    if let Some(v) = c.variance {
        cfg.variance = v;
    }
    if let Some(n) = c.target_n {
        cfg.target_n = Some(n);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn gen(common: &Common, out: &Path) -> Result<()> {
    let mut cfg = experiment_config(common)?;
    if let Some(n) = cfg.target_n {
        cfg.points = n;
    }
    let (train, test) = lotsub::deform::synth_dataset(&cfg.synth_spec()?)?;
    let tm = write_dataset(&train, out, "train")?;
    let sm = write_dataset(&test, out, "test")?;
    println!("wrote {} training sets to {}", train.len(), tm.display());
    println!("wrote {} test sets to {}", test.len(), sm.display());
    Ok(())
}

fn train_cmd(common: &Common, manifest: &Path, out: &Path) -> Result<()> {
    let cfg = experiment_config(common)?;
    let data = load_dataset(manifest, cfg.target_n, cfg.seed)?;
    let tc = TrainConfig {
        flags: cfg.invariance_flags()?,
        variance_fraction: cfg.variance,
        reference_jitter: cfg.reference_jitter,
        seed: cfg.seed,
    };
    let t0 = Instant::now();
    let model = train(&data, &tc)?;
    let secs = t0.elapsed().as_secs_f64();
    save_model(&model, out)?;
    println!(
        "trained on {} sets, {} classes, N={}, flags {}, variance {}",
        data.len(),
        model.num_classes(),
        model.num_points(),
        model.flags(),
        model.variance_fraction()
    );
    for c in model.classes() {
        println!("class {}: m_k={} explained={:.6}", c.class_label, c.rank(), c.explained_variance_fraction);
    }
    println!("training time {secs:.3} s; model written to {}", out.display());
    Ok(())
}

fn predict_cmd(common: &Common, model_path: &Path, input: &Path) -> Result<()> {
    let model = load_model(model_path)?;
    let seed = common.seed.unwrap_or(0);
    let n = model.num_points();
    let samples: Vec<(String, Option<usize>, lotsub::PointSet)> = if input.extension().is_some_and(|e| e == "manifest") {
        let entries = lotsub::io::read_manifest(input)?;
        let data = load_dataset(input, Some(n), seed)?;
        entries
            .into_iter()
            .zip(data.samples())
            .map(|(e, (p, k))| (e.path.display().to_string(), Some(*k), p.clone()))
            .collect()
    } else {
        let p = read_pointset_csv(input)?;
        let p = resample_to(&p, n, &mut seed::substream(seed, Stream::Resample, &[0]))?;
        vec![(input.display().to_string(), None, p)]
    };
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    let residual_cols: Vec<String> = (0..model.num_classes()).map(|k| format!("residual_{k}")).collect();
    let emit = |w: &mut std::io::StdoutLock, line: String| writeln!(w, "{line}").map_err(|e| Error::io("<stdout>", e));
    emit(&mut w, format!("input,true_label,predicted,{}", residual_cols.join(",")))?;
    for (name, truth, p) in &samples {
        let pred = model.predict(p)?;
        let truth = truth.map(|t| t.to_string()).unwrap_or_default();
        let scores: Vec<String> = pred.scores.iter().map(|s| format!("{s:.10e}")).collect();
        emit(&mut w, format!("{name},{truth},{},{}", pred.label, scores.join(",")))?;
    }
    Ok(())
}

fn curve_cmd(common: &Common, out: Option<&Path>) -> Result<()> {
    let mut cfg = experiment_config(common)?;
    if let Some(o) = out {
        cfg.out_dir = o.to_path_buf();
    }
    let (pool, test) = cfg.load_data()?;
    let report = run_curve(&cfg, &pool, &test)?;
    report.write(&cfg.out_dir)?;
    print!("{}", report.summary_csv());
    println!("results written to {}", cfg.out_dir.display());
    Ok(())
}

fn ood_cmd(common: &Common, out: Option<&Path>) -> Result<()> {
    let mut cfg = experiment_config(common)?;
    if let Some(o) = out {
        cfg.out_dir = o.to_path_buf();
    }
    let report = run_ood(&cfg)?;
    report.write(&cfg.out_dir)?;
    print!("{}", report.summary_csv());
    println!("results written to {}", cfg.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen { common, out } => gen(common, out),
        Command::Train { common, manifest, out } => train_cmd(common, manifest, out),
        Command::Predict { common, model, input } => predict_cmd(common, model, input),
        Command::Curve { common, out } => curve_cmd(common, out.as_deref()),
        Command::Ood { common, out } => ood_cmd(common, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Data => 3,
                ErrorKind::Numeric => 4,
            })
        }
    }
}
