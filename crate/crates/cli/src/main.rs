use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;

use roisense::bootstrap::BootstrapConfig;
use roisense::comfort::{system_reaction, ReactionConfig};
use roisense::evaluate::{evaluate, pairwise, parse_fpr_targets, EvalConfig, Report};
use roisense::kinematics::{corridor_events, gap_distribution, CorridorEvent};
use roisense::prediction::{load_predictions, save_predictions};
use roisense::predictors::{predict_scene, Model, PredictConfig};
use roisense::scene::load_scene;
use roisense::simulator::{generate, load_dataset, save_dataset, Layout, SimConfig};
use roisense::toy::{build_toy, density_csv, run_toy, ToyConfig};
use roisense::{MonteCarloConfig, PredictiveDistribution, Scene};

#[derive(Parser)]
#[command(name = "roisense", version, about = "Region-of-interest sensitivity of pedestrian prediction")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Corridor entry/exit events and their minimum time gaps.
    AnalyzeGaps {
        #[arg(long)]
        scene_dir: PathBuf,
        #[arg(long, default_value_t = 1.5)]
        half_width: f64,
        #[arg(long)]
        out: PathBuf,
        /// Append quartiles and histogram as a JSON comment line.
        #[arg(long)]
        summary: bool,
    },
    /// Gentlest deceleration that keeps predicted in-zone probabilities below threshold.
    React {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        mc_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// IRS, NLL and ADE of a prediction file.
    Evaluate {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Working points, e.g. `1=0.025,2=0.05,3=0.10,4=0.15`.
        #[arg(long)]
        fpr: Option<String>,
        #[arg(long)]
        ttc_max: Option<f64>,
        /// Bootstrap replications, `B=10000` or `10000`.
        #[arg(long)]
        bootstrap: Option<String>,
        #[arg(long, default_value_t = 0.5)]
        ci: f64,
        /// Earlier report to compare against (this minus other).
        #[arg(long)]
        pairwise: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        mc_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip NLL and ADE.
        #[arg(long)]
        no_metrics: bool,
    },
    /// Dump ROC curve points of a report.
    Roc {
        #[arg(long)]
        report: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        horizon: Option<f64>,
    },
    /// Generate a synthetic dataset.
    Simulate {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value = "zebra_road")]
        layout: Layout,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a baseline predictor over every scene of a directory.
    Predict {
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        model: Model,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Four-variant toy benchmark.
    Toy {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the variant densities on a regular grid.
        #[arg(long)]
        density_csv: Option<PathBuf>,
        #[arg(long, default_value_t = 0.1)]
        density_step: f64,
    },
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::AnalyzeGaps { scene_dir, half_width, out, summary } => analyze_gaps(&scene_dir, half_width, &out, summary),
        Cmd::React { scene, predictions, threshold, out, mc_n, seed } => {
            react(&scene, &predictions, threshold, &out, MonteCarloConfig { n: mc_n, seed })
        }
        Cmd::Evaluate {
            scenes,
            predictions,
            out,
            fpr,
            ttc_max,
            bootstrap,
            ci,
            pairwise,
            mc_n,
            seed,
            no_metrics,
        } => {
            let mut cfg = EvalConfig::default();
            cfg.sample.mc = MonteCarloConfig { n: mc_n, seed };
            cfg.metrics = !no_metrics;
            if let Some(f) = fpr {
                cfg.fpr_targets = parse_fpr_targets(&f)?;
            }
            if let Some(t) = ttc_max {
                cfg.ttc_max = t;
            }
            let boot = match bootstrap {
                Some(b) => Some(BootstrapConfig { replications: parse_replications(&b)?, level: ci, seed }),
                None => None,
            };
            cfg.bootstrap = boot.clone();
            run_evaluate(&scenes, &predictions, &out, &cfg, pairwise.as_deref(), boot, ci, seed)
        }
        Cmd::Roc { report, csv, horizon } => roc(&report, csv.as_deref(), horizon),
        Cmd::Simulate { seed, n, layout, out } => {
            let sims = generate(&SimConfig::new(seed, layout), n)?;
            save_dataset(&out, &sims)?;
            println!("wrote {} scenes to {}", sims.len(), out.display());
            Ok(())
        }
        Cmd::Predict { scenes, model, out, stride } => {
            let cfg = PredictConfig { model, stride, ..PredictConfig::default() };
            let loaded = load_dataset(&scenes)?;
            let mut preds = Vec::new();
            for l in &loaded {
                preds.extend(predict_scene(&l.scene, &cfg).with_context(|| format!("scene {}", l.scene.id))?);
            }
            save_predictions(&preds, &out)?;
            println!("{} predictions from {} scenes ({})", preds.len(), loaded.len(), model.name());
            Ok(())
        }
        Cmd::Toy { seed, out, density_csv: dens, density_step } => {
            let report = run_toy(&ToyConfig::new(seed))?;
            write_json(&out, &report)?;
            print!("{}", report.table());
            if let Some(p) = dens {
                let text = density_csv(&build_toy()?, density_step)?;
                std::fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
            }
            Ok(())
        }
    }
}

fn parse_replications(s: &str) -> Result<usize> {
    let v = s.strip_prefix("B=").or_else(|| s.strip_prefix("b=")).unwrap_or(s);
    v.parse().with_context(|| format!("bad bootstrap replications '{s}'"))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(f);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct GapRow<'a> {
    scene_id: &'a str,
    track_id: &'a str,
    t_enter: f64,
    t_exit: f64,
    min_time_gap: f64,
}

fn analyze_gaps(dir: &Path, half_width: f64, out: &Path, summary: bool) -> Result<()> {
    if !(half_width > 0.0) {
        bail!("half-width must be positive");
    }
    let loaded = load_dataset(dir)?;
    let per_scene: Vec<(String, Vec<CorridorEvent>)> =
        loaded.iter().map(|l| (l.scene.id.clone(), corridor_events(&l.scene, half_width))).collect();
    let mut w = csv::Writer::from_path(out).with_context(|| format!("creating {}", out.display()))?;
    for (id, events) in &per_scene {
        for e in events {
            w.serialize(GapRow {
                scene_id: id,
                track_id: &e.track_id,
                t_enter: e.t_enter,
                t_exit: e.t_exit,
                min_time_gap: e.min_time_gap,
            })?;
        }
    }
    w.flush()?;
    drop(w);
    let all: Vec<CorridorEvent> = per_scene.into_iter().flat_map(|(_, e)| e).collect();
    println!("{} corridor events in {} scenes", all.len(), loaded.len());
    if summary {
        let s = gap_distribution(&all)?;
        #[derive(Serialize)]
        struct Summary<'a> {
            n: usize,
            n_infinite: usize,
            q1: f64,
            median: f64,
            q3: f64,
            histogram: &'a [roisense::kinematics::HistogramBin],
        }
        let line = serde_json::to_string(&Summary {
            n: s.n,
            n_infinite: s.n_infinite,
            q1: s.q1,
            median: s.median,
            q3: s.q3,
            histogram: &s.histogram,
        })?;
        let mut f = std::fs::OpenOptions::new().append(true).open(out)?;
        writeln!(f, "# {line}")?;
        println!("quartiles {:.3} {:.3} {:.3}", s.q1, s.median, s.q3);
    }
    Ok(())
}

#[derive(Serialize)]
struct ViolationLine {
    #[serde(rename = "T")]
    horizon: f64,
    p: f64,
}

#[derive(Serialize)]
struct ReactionLine {
    t: f64,
    decel: Option<f64>,
    violations: Vec<ViolationLine>,
}

fn react(scene_path: &Path, preds_path: &Path, threshold: f64, out: &Path, mc: MonteCarloConfig) -> Result<()> {
    let scene = load_scene(scene_path)?;
    let preds = load_predictions(preds_path)?;
    let cfg = ReactionConfig { threshold, ..ReactionConfig::default() };
    let by_time = group_by_issue_time(&scene, preds);
    if by_time.is_empty() {
        bail!("no predictions for tracks of scene {}", scene.id);
    }
    let mut w = BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
    for dists in by_time.values() {
        let t = dists[0].issue_time;
        let r = system_reaction(&scene, dists, &cfg, &mc, t)?;
        let line = ReactionLine {
            t: r.t,
            decel: r.decel,
            violations: r
                .violations
                .iter()
                .map(|v| ViolationLine { horizon: v.horizon, p: v.p_violation })
                .collect(),
        };
        serde_json::to_writer(&mut w, &line)?;
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Predictions of the scene's tracks keyed by issue time in whole steps.
fn group_by_issue_time(scene: &Scene, preds: Vec<PredictiveDistribution>) -> BTreeMap<i64, Vec<PredictiveDistribution>> {
    let mut out: BTreeMap<i64, Vec<PredictiveDistribution>> = BTreeMap::new();
    for p in preds {
        if scene.tracks.iter().any(|t| t.id == p.track_id) {
            out.entry((p.issue_time / scene.dt).round() as i64).or_default().push(p);
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn run_evaluate(
    scenes_dir: &Path,
    preds_path: &Path,
    out: &Path,
    cfg: &EvalConfig,
    other: Option<&Path>,
    boot: Option<BootstrapConfig>,
    ci: f64,
    seed: u64,
) -> Result<()> {
    let scenes: Vec<Scene> = load_dataset(scenes_dir)?.into_iter().map(|l| l.scene).collect();
    let preds = load_predictions(preds_path)?;
    let mut report = evaluate(&scenes, &preds, cfg)?;
    if let Some(p) = other {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let other: Report = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
        let pb = BootstrapConfig {
            level: ci,
            seed,
            ..boot.unwrap_or_default()
        };
        report.pairwise = pairwise(&report, &other, &pb)?;
    }
    write_json(out, &report)?;
    for b in &report.irs {
        let irs = b.irs.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        println!("T={} IRS@{}={} (pos {}, neg {})", b.horizon, b.fpr, irs, b.n_pos, b.n_neg);
    }
    for d in &report.pairwise {
        println!(
            "diff {:?} T={}: {:.4} [{:.4}, {:.4}]{}",
            d.metric,
            d.horizon,
            d.point,
            d.lo,
            d.hi,
            if d.excludes_zero { " *" } else { "" }
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct RocRow {
    horizon: f64,
    fpr: f64,
    tpr: f64,
    thr: f64,
}

fn roc(report_path: &Path, csv_path: Option<&Path>, horizon: Option<f64>) -> Result<()> {
    let text = std::fs::read_to_string(report_path).with_context(|| format!("reading {}", report_path.display()))?;
    let report: Report = serde_json::from_str(&text)?;
    let blocks: Vec<_> = report
        .irs
        .iter()
        .filter(|b| horizon.is_none_or(|h| (b.horizon - h).abs() < 1e-9))
        .collect();
    if blocks.is_empty() {
        bail!("no ROC curve for the requested horizon");
    }
    let sink: Box<dyn Write> = match csv_path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for b in blocks {
        for pt in &b.roc {
            w.serialize(RocRow { horizon: b.horizon, fpr: pt.fpr, tpr: pt.tpr, thr: pt.threshold })?;
        }
    }
    w.flush()?;
    Ok(())
}
