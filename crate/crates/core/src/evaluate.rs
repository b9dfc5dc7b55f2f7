//! End-to-end evaluation report: IRS per horizon with ROC curves, NLL and ADE, optional
//! track-level BCa intervals, and paired differences between two reports.
//!
//! A report keeps its per-track classification scores and metric sums so that another
//! run can be compared against it on identical bootstrap resamples.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{bootstrap_ci, paired_difference_ci, pooled_mean, BootstrapConfig, BootstrapInterval};
use crate::error::{Error, Result};
use crate::irs::{default_fpr_target, irs, RankedScores, RocPoint, SampleConfig, DEFAULT_TTC_MAX};
use crate::metrics::{collect_metric_samples, MetricName};
use crate::prediction::PredictiveDistribution;
use crate::scene::Scene;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub sample: SampleConfig,
    pub ttc_max: f64,
    /// `(horizon, fpr)` working points.
    pub fpr_targets: Vec<(f64, f64)>,
    pub bootstrap: Option<BootstrapConfig>,
    /// Compute NLL and ADE besides IRS.
    pub metrics: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        let sample = SampleConfig::default();
        let fpr_targets = sample
            .horizons
            .iter()
            .map(|&h| (h, default_fpr_target(h).unwrap_or(0.1)))
            .collect();
        Self {
            sample,
            ttc_max: DEFAULT_TTC_MAX,
            fpr_targets,
            bootstrap: None,
            metrics: true,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ttc_max > 0.0) {
            return Err(Error::Config("ttc_max must be positive".into()));
        }
        if self.fpr_targets.iter().any(|&(_, f)| !(f > 0.0 && f < 1.0)) {
            return Err(Error::Config("fpr targets must lie in (0, 1)".into()));
        }
        for &h in &self.sample.horizons {
            if !self.fpr_targets.iter().any(|t| (t.0 - h).abs() < 1e-9) {
                return Err(Error::Config(format!("no fpr target for horizon {h}")));
            }
        }
        match &self.bootstrap {
            Some(b) => b.validate(),
            None => Ok(()),
        }
    }

    fn target(&self, h: f64) -> f64 {
        self.fpr_targets
            .iter()
            .find(|t| (t.0 - h).abs() < 1e-9)
            .map(|t| t.1)
            .expect("validated")
    }
}

/// Parse `1=0.025,2=0.05,...`.
pub fn parse_fpr_targets(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|part| {
            let (h, f) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected horizon=fpr, got {part:?}")))?;
            let parse = |x: &str| {
                x.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("{x:?}: {e}")))
            };
            Ok((parse(h)?, parse(f)?))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub degenerate: bool,
    pub dropped_replicates: usize,
}

impl From<BootstrapInterval> for Interval {
    fn from(b: BootstrapInterval) -> Self {
        Self {
            lo: b.lo,
            hi: b.hi,
            level: b.level,
            degenerate: b.degenerate,
            dropped_replicates: b.dropped_replicates,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrsBlock {
    pub horizon: f64,
    pub fpr: f64,
    /// Absent when a class is empty.
    pub irs: Option<f64>,
    pub roc: Vec<RocPoint>,
    pub n_pos: usize,
    pub n_neg: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ci: Option<Interval>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricBlock {
    pub horizon: f64,
    pub value: Option<f64>,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ci: Option<Interval>,
}

/// Per-horizon scores of the relevant classification samples, tagged with their track.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitScores {
    pub horizon: f64,
    pub unit: Vec<usize>,
    pub p: Vec<f64>,
    pub truth: Vec<bool>,
}

/// Per-horizon, per-track `(sum, count)` of NLL and ADE.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitSums {
    pub horizon: f64,
    pub nll: Vec<(f64, usize)>,
    pub ade: Vec<(f64, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitData {
    /// Resampling units, `scene_id/track_id`.
    pub units: Vec<String>,
    pub scores: Vec<UnitScores>,
    pub sums: Vec<UnitSums>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffBlock {
    pub metric: MetricName,
    pub horizon: f64,
    /// This report minus the other.
    pub point: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub excludes_zero: bool,
    pub n_units: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub n_scenes: usize,
    pub n_tracks: usize,
    pub n_predictions: usize,
    /// Predictions whose track is not in any scene.
    pub n_unmatched: usize,
    pub ttc_max: f64,
    pub irs: Vec<IrsBlock>,
    pub nll: Vec<MetricBlock>,
    pub ade: Vec<MetricBlock>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub pairwise: Vec<DiffBlock>,
    pub units: UnitData,
}

impl Report {
    pub fn irs_at(&self, horizon: f64) -> Option<f64> {
        self.irs.iter().find(|b| (b.horizon - horizon).abs() < 1e-9)?.irs
    }
}

fn ranked(s: &UnitScores) -> RankedScores {
    RankedScores::new(s.p.iter().zip(&s.truth).zip(&s.unit).map(|((&p, &t), &u)| (p, t, u)))
}

/// Evaluate predictions against the scenes holding their tracks.
pub fn evaluate(scenes: &[Scene], preds: &[PredictiveDistribution], cfg: &EvalConfig) -> Result<Report> {
    cfg.validate()?;
    let mut unit_of: HashMap<&str, (usize, usize)> = HashMap::new();
    let mut units = Vec::new();
    for (si, scene) in scenes.iter().enumerate() {
        for track in &scene.tracks {
            if unit_of.insert(&track.id, (si, units.len())).is_some() {
                return Err(Error::invariant("track_id", format!("track {:?} appears in two scenes", track.id)));
            }
            units.push(format!("{}/{}", scene.id, track.id));
        }
    }
    let mut by_scene: Vec<Vec<PredictiveDistribution>> = vec![Vec::new(); scenes.len()];
    let mut n_unmatched = 0;
    for d in preds {
        match unit_of.get(d.track_id.as_str()) {
            Some(&(si, _)) => by_scene[si].push(d.clone()),
            None => n_unmatched += 1,
        }
    }

    let sample_cfg = SampleConfig {
        ttc_prefilter: Some(cfg.ttc_max),
        ..cfg.sample.clone()
    };
    let horizons = &cfg.sample.horizons;
    let per_scene: Vec<_> = scenes
        .par_iter()
        .zip(by_scene.par_iter())
        .map(|(scene, dists)| -> Result<_> {
            let cls = crate::irs::collect_samples(scene, dists, &sample_cfg);
            let met = if cfg.metrics {
                collect_metric_samples(scene, dists, horizons, &cfg.sample.mc)?
            } else {
                Vec::new()
            };
            Ok((cls, met))
        })
        .collect::<Result<_>>()?;

    let hidx = |h: f64| horizons.iter().position(|&x| (x - h).abs() < 1e-9);
    let mut scores: Vec<UnitScores> = horizons
        .iter()
        .map(|&h| UnitScores {
            horizon: h,
            unit: Vec::new(),
            p: Vec::new(),
            truth: Vec::new(),
        })
        .collect();
    let mut sums: Vec<UnitSums> = horizons
        .iter()
        .map(|&h| UnitSums {
            horizon: h,
            nll: vec![(0.0, 0); units.len()],
            ade: vec![(0.0, 0); units.len()],
        })
        .collect();
    for (cls, met) in &per_scene {
        for s in cls {
            let (Some(k), Some(&(_, u))) = (hidx(s.horizon), unit_of.get(s.track_id.as_str())) else {
                continue;
            };
            if s.ttc_at_issue < cfg.ttc_max {
                scores[k].unit.push(u);
                scores[k].p.push(s.p_roi);
                scores[k].truth.push(s.truth);
            }
        }
        for m in met {
            let (Some(k), Some(&(_, u))) = (hidx(m.horizon), unit_of.get(m.track_id.as_str())) else {
                continue;
            };
            let s = &mut sums[k];
            s.nll[u].0 += m.nll;
            s.nll[u].1 += 1;
            s.ade[u].0 += m.ade;
            s.ade[u].1 += 1;
        }
    }

    let n_units = units.len();
    let ci = |stat: &(dyn Fn(&[u32]) -> Option<f64> + Sync)| -> Option<Interval> {
        let b = cfg.bootstrap.as_ref()?;
        bootstrap_ci(n_units, stat, b).ok().map(Interval::from)
    };
    let irs_blocks = scores
        .iter()
        .map(|s| {
            let r = ranked(s);
            let fpr = cfg.target(s.horizon);
            match r.roc() {
                Ok(curve) => IrsBlock {
                    horizon: s.horizon,
                    fpr,
                    irs: Some(irs(&curve, fpr)),
                    ci: ci(&|c: &[u32]| r.irs_weighted(c, fpr)),
                    roc: curve.points,
                    n_pos: curve.n_pos,
                    n_neg: curve.n_neg,
                },
                Err(_) => IrsBlock {
                    horizon: s.horizon,
                    fpr,
                    irs: None,
                    roc: Vec::new(),
                    n_pos: s.truth.iter().filter(|&&t| t).count(),
                    n_neg: s.truth.iter().filter(|&&t| !t).count(),
                    ci: None,
                },
            }
        })
        .collect();
    let metric_blocks = |pick: fn(&UnitSums) -> &Vec<(f64, usize)>| -> Vec<MetricBlock> {
        if !cfg.metrics {
            return Vec::new();
        }
        sums.iter()
            .map(|s| {
                let v = pick(s);
                let ones = vec![1u32; v.len()];
                MetricBlock {
                    horizon: s.horizon,
                    value: pooled_mean(v, &ones),
                    n: v.iter().map(|x| x.1).sum(),
                    ci: ci(&|c: &[u32]| pooled_mean(v, c)),
                }
            })
            .collect()
    };
    let nll = metric_blocks(|s| &s.nll);
    let ade = metric_blocks(|s| &s.ade);
    Ok(Report {
        n_scenes: scenes.len(),
        n_tracks: n_units,
        n_predictions: preds.len() - n_unmatched,
        n_unmatched,
        ttc_max: cfg.ttc_max,
        irs: irs_blocks,
        nll,
        ade,
        pairwise: Vec::new(),
        units: UnitData {
            units,
            scores,
            sums,
        },
    })
}

/// Paired BCa intervals of `a − b` for every metric and horizon both reports share,
/// resampling the tracks present in both.
pub fn pairwise(a: &Report, b: &Report, cfg: &BootstrapConfig) -> Result<Vec<DiffBlock>> {
    cfg.validate()?;
    let index_b: HashMap<&str, usize> = b.units.units.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect();
    // common unit index for each unit of a and b
    let mut map_a = vec![usize::MAX; a.units.units.len()];
    let mut map_b = vec![usize::MAX; b.units.units.len()];
    let mut n = 0;
    for (i, u) in a.units.units.iter().enumerate() {
        if let Some(&j) = index_b.get(u.as_str()) {
            map_a[i] = n;
            map_b[j] = n;
            n += 1;
        }
    }
    if n < 2 {
        return Err(Error::EmptyInput("reports share fewer than 2 tracks"));
    }
    let remap = |map: &[usize], c: &[u32]| -> Vec<u32> { map.iter().map(|&m| if m == usize::MAX { 0 } else { c[m] }).collect() };
    let mut out = Vec::new();
    let push = |out: &mut Vec<DiffBlock>, metric: MetricName, horizon: f64, iv: BootstrapInterval| {
        out.push(DiffBlock {
            metric,
            horizon,
            point: iv.point,
            lo: iv.lo,
            hi: iv.hi,
            level: iv.level,
            excludes_zero: iv.lo > 0.0 || iv.hi < 0.0,
            n_units: n,
        });
    };
    for sa in &a.units.scores {
        let Some(sb) = b.units.scores.iter().find(|s| (s.horizon - sa.horizon).abs() < 1e-9) else {
            continue;
        };
        let fpr = a
            .irs
            .iter()
            .find(|x| (x.horizon - sa.horizon).abs() < 1e-9)
            .map(|x| x.fpr)
            .unwrap_or_else(|| default_fpr_target(sa.horizon).unwrap_or(0.1));
        let (ra, rb) = (ranked(sa), ranked(sb));
        let iv = paired_difference_ci(
            n,
            |c| ra.irs_weighted(&remap(&map_a, c), fpr),
            |c| rb.irs_weighted(&remap(&map_b, c), fpr),
            cfg,
        );
        if let Ok(iv) = iv {
            push(&mut out, MetricName::Irs, sa.horizon, iv);
        }
    }
    for sa in &a.units.sums {
        let Some(sb) = b.units.sums.iter().find(|s| (s.horizon - sa.horizon).abs() < 1e-9) else {
            continue;
        };
        for (metric, va, vb) in [(MetricName::Nll, &sa.nll, &sb.nll), (MetricName::Ade, &sa.ade, &sb.ade)] {
            let iv = paired_difference_ci(
                n,
                |c| pooled_mean(va, &remap(&map_a, c)),
                |c| pooled_mean(vb, &remap(&map_b, c)),
                cfg,
            );
            if let Ok(iv) = iv {
                push(&mut out, metric, sa.horizon, iv);
            }
        }
    }
    Ok(out)
}
