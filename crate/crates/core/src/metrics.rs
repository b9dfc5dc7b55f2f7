//! Negative log-likelihood and average displacement error of predictive distributions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Point;
use crate::prediction::{HorizonDist, PredictiveDistribution, DEFAULT_KERNEL_SIGMA};
use crate::rng::{MonteCarloConfig, StreamKey};
use crate::scene::Scene;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum MetricName {
    Nll,
    Ade,
    Irs,
}

impl MetricName {
    pub fn unit(self) -> &'static str {
        match self {
            MetricName::Nll => "nats",
            MetricName::Ade => "meters",
            MetricName::Irs => "fraction",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricValue {
    pub name: MetricName,
    pub horizon: f64,
    pub value: f64,
    pub unit: &'static str,
}

impl MetricValue {
    pub fn new(name: MetricName, horizon: f64, value: f64) -> Self {
        Self {
            name,
            horizon,
            value,
            unit: name.unit(),
        }
    }
}

/// `−log p(truth)` in nats; sample sets use isotropic kernels of width `kernel_sigma`.
pub fn nll_with_kernel(h: &HorizonDist, truth: Point, kernel_sigma: f64) -> Result<f64> {
    Ok(-h.to_mixture(kernel_sigma)?.log_pdf(truth))
}

pub fn nll(h: &HorizonDist, truth: Point) -> Result<f64> {
    nll_with_kernel(h, truth, DEFAULT_KERNEL_SIGMA)
}

/// `E‖X − truth‖`: exact over sample sets, `n` draws from `rng` for mixtures.
pub fn ade_with<R: rand::Rng + ?Sized>(h: &HorizonDist, truth: Point, n: usize, rng: &mut R) -> f64 {
    let mean_dist = |pts: &[Point]| pts.iter().map(|p| p.dist(truth)).sum::<f64>() / pts.len() as f64;
    match h {
        HorizonDist::Samples(s) => mean_dist(s),
        HorizonDist::Mixture(m) => mean_dist(&m.draw(rng, n)),
    }
}

/// ADE with draws from the stream keyed by `key`.
pub fn ade(h: &HorizonDist, truth: Point, mc: &MonteCarloConfig, key: &StreamKey<'_>) -> f64 {
    ade_with(h, truth, mc.n, &mut key.rng(mc.seed, "ade"))
}

/// NLL and ADE of one prediction at one horizon against the recorded position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub scene_id: String,
    pub track_id: String,
    pub issue_time: f64,
    pub horizon: f64,
    pub nll: f64,
    pub ade: f64,
}

/// Metric samples for every prediction of `scene`'s tracks that has ground truth at `t + T`.
pub fn collect_metric_samples(
    scene: &Scene,
    dists: &[PredictiveDistribution],
    horizons: &[f64],
    mc: &MonteCarloConfig,
) -> Result<Vec<MetricSample>> {
    let per_dist = |d: &PredictiveDistribution| -> Result<Vec<MetricSample>> {
        let mut out = Vec::new();
        let Some(track) = scene.track(&d.track_id) else {
            return Ok(out);
        };
        for &h in horizons {
            let Some(truth) = track.position_at(d.issue_time + h, scene.dt) else {
                continue;
            };
            let dist = d.at(h)?;
            let key = StreamKey {
                scene_id: &scene.id,
                track_id: &d.track_id,
                issue_time: d.issue_time,
                horizon: h,
            };
            out.push(MetricSample {
                scene_id: scene.id.clone(),
                track_id: d.track_id.clone(),
                issue_time: d.issue_time,
                horizon: h,
                nll: nll(dist, truth)?,
                ade: ade(dist, truth, mc, &key),
            });
        }
        Ok(out)
    };
    let nested = dists.par_iter().map(per_dist).collect::<Result<Vec<_>>>()?;
    Ok(nested.into_iter().flatten().collect())
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (s, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| s / n as f64)
}
