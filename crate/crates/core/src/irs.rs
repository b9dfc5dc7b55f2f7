//! In-ROI sensitivity: per-sample in-zone classification, relevance filtering, ROC and
//! TPR at fixed false-positive working points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comfort::{build_zone, future_zone, violation_probability, ZoneConfig};
use crate::error::{Error, Result};
use crate::kinematics::ttc;
use crate::prediction::{PredictiveDistribution, HORIZONS};
use crate::rng::MonteCarloConfig;
use crate::scene::Scene;

pub const DEFAULT_TTC_MAX: f64 = 5.0;

/// Working-point false-positive rates per horizon.
pub const DEFAULT_FPR_TARGETS: [(f64, f64); 4] = [(1.0, 0.025), (2.0, 0.05), (3.0, 0.10), (4.0, 0.15)];

pub fn default_fpr_target(horizon: f64) -> Option<f64> {
    DEFAULT_FPR_TARGETS
        .iter()
        .find(|(h, _)| (h - horizon).abs() < 1e-9)
        .map(|&(_, f)| f)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationSample {
    pub scene_id: String,
    pub track_id: String,
    pub issue_time: f64,
    pub horizon: f64,
    pub p_roi: f64,
    /// Ground truth inside the zone at `issue_time + horizon`.
    pub truth: bool,
    pub ttc_at_issue: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleConfig {
    pub zone: ZoneConfig,
    pub horizons: Vec<f64>,
    pub mc: MonteCarloConfig,
    /// When set, samples with `ttc_at_issue >= ttc_max` are skipped before any
    /// Monte-Carlo work.
    pub ttc_prefilter: Option<f64>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            zone: ZoneConfig::default(),
            horizons: HORIZONS.to_vec(),
            mc: MonteCarloConfig::default(),
            ttc_prefilter: None,
        }
    }
}

/// Classification samples for every prediction of `scene`'s tracks.
///
/// Predictions whose track is not in the scene, or whose issue time lies outside the
/// recorded ego or pedestrian states, are ignored. Horizons without ground truth at
/// `t + T` yield no sample.
pub fn collect_samples(
    scene: &Scene,
    dists: &[PredictiveDistribution],
    cfg: &SampleConfig,
) -> Vec<ClassificationSample> {
    let per_dist = |d: &PredictiveDistribution| -> Vec<ClassificationSample> {
        let mut out = Vec::new();
        let Some(track) = scene.track(&d.track_id) else {
            return out;
        };
        let (Some(ego), Some(pos)) = (scene.ego_at(d.issue_time), track.position_at(d.issue_time, scene.dt))
        else {
            return out;
        };
        let ttc_at_issue = ttc(ego, pos, &scene.path);
        if let Some(max) = cfg.ttc_prefilter {
            if !(ttc_at_issue < max) {
                return out;
            }
        }
        let zone = build_zone(ego, &scene.path, cfg.zone);
        for &h in &cfg.horizons {
            let Some(gt) = track.position_at(d.issue_time + h, scene.dt) else {
                continue;
            };
            let fz = future_zone(&zone, &scene.path, h);
            let Ok(p_roi) = violation_probability(d, &fz, h, &cfg.mc, &scene.id) else {
                continue;
            };
            out.push(ClassificationSample {
                scene_id: scene.id.clone(),
                track_id: d.track_id.clone(),
                issue_time: d.issue_time,
                horizon: h,
                p_roi,
                truth: fz.contains(gt),
                ttc_at_issue,
            });
        }
        out
    };
    dists.par_iter().map(per_dist).flatten().collect()
}

/// Keep samples with `ttc_at_issue < ttc_max`.
pub fn relevance_filter(samples: &[ClassificationSample], ttc_max: f64) -> Vec<ClassificationSample> {
    samples.iter().filter(|s| s.ttc_at_issue < ttc_max).cloned().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// `+inf` for the origin point; written as `null`.
    #[serde(rename = "thr", with = "threshold_serde")]
    pub threshold: f64,
}

mod threshold_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub n_pos: usize,
    pub n_neg: usize,
}

/// Scores sorted once in descending order, tagged with their label and evaluation unit,
/// so that reweighted ROCs (bootstrap replicates) cost one linear pass.
#[derive(Clone, Debug)]
pub struct RankedScores {
    scores: Vec<f64>,
    labels: Vec<bool>,
    units: Vec<usize>,
}

impl RankedScores {
    pub fn new(scored: impl IntoIterator<Item = (f64, bool, usize)>) -> Self {
        let mut v: Vec<(f64, bool, usize)> = scored.into_iter().collect();
        v.sort_by(|a, b| b.0.total_cmp(&a.0));
        Self {
            scores: v.iter().map(|x| x.0).collect(),
            labels: v.iter().map(|x| x.1).collect(),
            units: v.iter().map(|x| x.2).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Sweep thresholds; each tie group emits one `(fp, tp, threshold)` step.
    fn sweep(&self, weight: impl Fn(usize) -> u64, mut visit: impl FnMut(u64, u64, f64)) {
        let (mut tp, mut fp) = (0u64, 0u64);
        let mut i = 0;
        while i < self.scores.len() {
            let s = self.scores[i];
            while i < self.scores.len() && self.scores[i] == s {
                let w = weight(self.units[i]);
                if self.labels[i] {
                    tp += w;
                } else {
                    fp += w;
                }
                i += 1;
            }
            visit(fp, tp, s);
        }
    }

    fn totals(&self, weight: &impl Fn(usize) -> u64) -> (u64, u64) {
        let (mut p, mut n) = (0u64, 0u64);
        for (l, &u) in self.labels.iter().zip(&self.units) {
            if *l {
                p += weight(u);
            } else {
                n += weight(u);
            }
        }
        (p, n)
    }

    /// ROC with every sample weighted by the multiplicity of its unit.
    pub fn roc_weighted(&self, unit_counts: &[u32]) -> Result<RocCurve> {
        self.roc_with(|u| unit_counts[u] as u64)
    }

    pub fn roc(&self) -> Result<RocCurve> {
        self.roc_with(|_| 1)
    }

    fn roc_with(&self, weight: impl Fn(usize) -> u64) -> Result<RocCurve> {
        let (p, n) = self.totals(&weight);
        if p == 0 || n == 0 {
            return Err(Error::DegenerateClasses {
                positives: p as usize,
                negatives: n as usize,
            });
        }
        let mut points = vec![RocPoint {
            fpr: 0.0,
            tpr: 0.0,
            threshold: f64::INFINITY,
        }];
        let mut last = (0u64, 0u64);
        self.sweep(&weight, |fp, tp, thr| {
            // zero-weight groups do not move the curve
            if (fp, tp) != last {
                points.push(RocPoint {
                    fpr: fp as f64 / n as f64,
                    tpr: tp as f64 / p as f64,
                    threshold: thr,
                });
                last = (fp, tp);
            }
        });
        Ok(RocCurve {
            points,
            n_pos: p as usize,
            n_neg: n as usize,
        })
    }

    /// IRS of the reweighted sample without materializing the curve.
    /// `None` when a class has zero total weight.
    pub fn irs_weighted(&self, unit_counts: &[u32], fpr_target: f64) -> Option<f64> {
        let weight = |u: usize| unit_counts[u] as u64;
        let (p, n) = self.totals(&weight);
        if p == 0 || n == 0 {
            return None;
        }
        let (pf, nf) = (p as f64, n as f64);
        let mut prev = (0.0, 0.0);
        let mut result: Option<f64> = None;
        self.sweep(weight, |fp, tp, _| {
            if result.is_some() {
                return;
            }
            let cur = (fp as f64 / nf, tp as f64 / pf);
            if cur.0 > fpr_target {
                result = Some(interpolate(prev, cur, fpr_target));
            } else {
                prev = cur;
            }
        });
        Some(result.unwrap_or(prev.1))
    }
}

fn interpolate(a: (f64, f64), b: (f64, f64), fpr: f64) -> f64 {
    if a.0 == fpr {
        return a.1;
    }
    a.1 + (b.1 - a.1) * (fpr - a.0) / (b.0 - a.0)
}

/// ROC over pooled samples; positive class is `truth`.
pub fn roc(samples: &[ClassificationSample]) -> Result<RocCurve> {
    RankedScores::new(samples.iter().map(|s| (s.p_roi, s.truth, 0))).roc()
}

/// TPR at `fpr_target`, interpolated linearly between the last ROC point with
/// `fpr <= fpr_target` (highest TPR at that FPR) and the next one.
pub fn irs(curve: &RocCurve, fpr_target: f64) -> f64 {
    let pts = &curve.points;
    let i = pts.iter().rposition(|p| p.fpr <= fpr_target).unwrap_or(0);
    match pts.get(i + 1) {
        Some(next) => interpolate((pts[i].fpr, pts[i].tpr), (next.fpr, next.tpr), fpr_target),
        None => pts[i].tpr,
    }
}

/// Samples at one horizon.
pub fn at_horizon(samples: &[ClassificationSample], horizon: f64) -> Vec<ClassificationSample> {
    samples
        .iter()
        .filter(|s| (s.horizon - horizon).abs() < 1e-9)
        .cloned()
        .collect()
}
