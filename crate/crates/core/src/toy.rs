//! Metric-assessment toy example: a pedestrian on a sidewalk next to a two-lane street,
//! a three-modal ground truth (continue on the sidewalk, cross at the zebra, step towards
//! the street shoulder) and four predictors:
//!
//! - (a) the ground truth itself,
//! - (b) sidewalk mode displaced (bad sideway prediction),
//! - (c) zebra mode displaced (bad zebra crossing prediction),
//! - (d) one Gaussian at the mixture mean (no multimodality).
//!
//! Ego ROIs of 8 m are swept along the far lane; every ROI is scored against truths drawn
//! from the ground truth. The geometry is mirror-symmetric about the line `y = −x`, and
//! (c) is the mirror image of (b), so a mirrored truth set makes their NLL and ADE equal.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comfort::{violation_probability_with, ComfortZone, ZoneConfig};
use crate::error::Result;
use crate::geometry::{PlannedPath, Point};
use crate::grid::{CellClass, SemanticGrid};
use crate::irs::{RankedScores, irs};
use crate::metrics::{ade_with, mean, nll};
use crate::prediction::{GaussianMixture, HorizonDist, PredictiveDistribution, HORIZONS};
use crate::rng::stream;
use crate::scene::{EgoState, PedState, PedTrack, Scene, DT};

pub const TOY_HORIZON: f64 = 4.0;
pub const TOY_FPR: f64 = 0.15;
pub const MODE_WEIGHTS: [f64; 3] = [0.4, 0.4, 0.2];
/// Mode endpoints at [`TOY_HORIZON`]: sidewalk, zebra, shoulder.
pub const MODE_ENDS: [Point; 3] = [Point::new(5.5, 0.0), Point::new(0.0, -5.5), Point::new(3.5, -3.5)];
/// Displaced sidewalk mode of variant (b); variant (c) uses its mirror image.
pub const BAD_SIDEWALK: Point = Point::new(3.0, -0.5);
/// Per-mode spread growth, m/s.
pub const SIGMA_GROWTH: f64 = 0.2;
const LANE: f64 = -5.5;
const ROI_LENGTH: f64 = 8.0;
const PATH_START: f64 = -40.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    A,
    B,
    C,
    D,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::A, Variant::B, Variant::C, Variant::D];

    pub fn label(self) -> &'static str {
        match self {
            Variant::A => "ground truth",
            Variant::B => "bad sideway prediction",
            Variant::C => "bad zebra crossing prediction",
            Variant::D => "no multimodality",
        }
    }
}

/// Reflection about `y = −x`, mapping the sidewalk mode onto the zebra mode.
pub fn mirror(p: Point) -> Point {
    Point::new(-p.y, -p.x)
}

fn modes(v: Variant) -> Vec<(f64, Point)> {
    let [s, z, h] = MODE_ENDS;
    let [ws, wz, wh] = MODE_WEIGHTS;
    match v {
        Variant::A => vec![(ws, s), (wz, z), (wh, h)],
        Variant::B => vec![(ws, BAD_SIDEWALK), (wz, z), (wh, h)],
        Variant::C => vec![(ws, s), (wz, mirror(BAD_SIDEWALK)), (wh, h)],
        Variant::D => vec![(1.0, s * ws + z * wz + h * wh)],
    }
}

/// Predictive distribution of a variant; modes move linearly from the origin.
pub fn variant_distribution(v: Variant, issue_time: f64) -> Result<PredictiveDistribution> {
    let m = modes(v);
    let h = |t: f64| -> Result<HorizonDist> {
        let sd = SIGMA_GROWTH * t;
        GaussianMixture::from_parts(
            m.iter()
                .map(|&(w, end)| (w, end * (t / TOY_HORIZON), [[sd * sd, 0.0], [0.0, sd * sd]])),
        )
        .map(HorizonDist::Mixture)
    };
    Ok(PredictiveDistribution::new(
        "toy:p0",
        issue_time,
        [h(HORIZONS[0])?, h(HORIZONS[1])?, h(HORIZONS[2])?, h(HORIZONS[3])?],
    ))
}

pub struct Toy {
    pub scene: Scene,
    pub issue_time: f64,
    pub variants: Vec<(Variant, PredictiveDistribution)>,
    pub rois: Vec<ComfortZone>,
}

/// Street along x: far lane `y ∈ [−7, −4]`, near lane `[−4, −1]`, sidewalk `[−1, 1]`,
/// buildings above, zebra `|x| ≤ 2`.
fn street_class(p: Point) -> CellClass {
    if p.y > 1.0 {
        CellClass::Building
    } else if p.y >= -1.0 {
        CellClass::Sidewalk
    } else if p.y >= -7.0 {
        if p.x.abs() <= 2.0 {
            CellClass::Zebra
        } else {
            CellClass::Road
        }
    } else {
        CellClass::Sidewalk
    }
}

pub fn build_toy() -> Result<Toy> {
    let path = PlannedPath::straight(Point::new(PATH_START, LANE), Point::new(60.0, LANE))?;
    let zone_cfg = ZoneConfig::default();
    let speed = ROI_LENGTH / zone_cfg.tau;
    let rois: Vec<ComfortZone> = (0..60)
        .map(|k| ComfortZone::new(&path, -15.0 + 0.5 * k as f64 - PATH_START, speed, zone_cfg))
        .collect();
    let issue_time = 0.9;
    let ego = (0..50)
        .map(|k| {
            let t = k as f64 * DT;
            EgoState::on_path(&path, t, 10.0 + speed * t, speed)
        })
        .collect();
    let states = (0..10)
        .map(|k| PedState::new(k as f64 * DT, Point::new(-1.3 * (issue_time - k as f64 * DT), 0.0)))
        .collect();
    let grid = SemanticGrid::from_fn(200, 80, 0.25, Point::new(-25.0, -10.0), street_class)?;
    let scene = Scene::new(
        "toy",
        DT,
        path,
        ego,
        vec![PedTrack {
            id: "toy:p0".into(),
            states,
        }],
        grid,
    )?;
    let variants = Variant::ALL
        .iter()
        .map(|&v| Ok((v, variant_distribution(v, issue_time)?)))
        .collect::<Result<_>>()?;
    Ok(Toy {
        scene,
        issue_time,
        variants,
        rois,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub seed: u64,
    pub truths_per_roi: usize,
    pub mc: usize,
    /// Ground-truth draws for NLL and ADE; each is also used mirrored.
    pub metric_truths: usize,
    pub ade_draws: usize,
}

impl ToyConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            truths_per_roi: 200,
            mc: 1000,
            metric_truths: 2000,
            ade_draws: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyRow {
    pub variant: Variant,
    pub label: String,
    pub irs: f64,
    pub nll: f64,
    pub ade: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyReport {
    pub seed: u64,
    pub horizon: f64,
    pub fpr: f64,
    pub n_rois: usize,
    pub rows: Vec<ToyRow>,
}

impl ToyReport {
    pub fn row(&self, v: Variant) -> &ToyRow {
        self.rows.iter().find(|r| r.variant == v).expect("all variants present")
    }

    pub fn table(&self) -> String {
        let mut s = format!("{:<34} {:>7} {:>8} {:>7}\n", "variant", "IRS", "NLL", "ADE");
        for r in &self.rows {
            s.push_str(&format!(
                "{:<34} {:>7.3} {:>8.3} {:>7.3}\n",
                format!("({:?}) {}", r.variant, r.label).to_lowercase(),
                r.irs,
                r.nll,
                r.ade
            ));
        }
        s
    }
}

pub fn run_toy(cfg: &ToyConfig) -> Result<ToyReport> {
    let toy = build_toy()?;
    let seed = cfg.seed;
    let truth_dist = toy.variants[0].1.at(TOY_HORIZON)?.clone();
    let HorizonDist::Mixture(gt) = &truth_dist else {
        unreachable!("toy distributions are mixtures")
    };

    let roi_truths: Vec<Vec<Point>> = (0..toy.rois.len())
        .map(|j| gt.draw(&mut stream(seed, &["toy", "truth", &j.to_string()]), cfg.truths_per_roi))
        .collect();
    let mut metric_truths = gt.draw(&mut stream(seed, &["toy", "metric"]), cfg.metric_truths);
    let mirrored: Vec<Point> = metric_truths.iter().map(|&p| mirror(p)).collect();
    metric_truths.extend(mirrored);

    let rows = toy
        .variants
        .par_iter()
        .map(|(v, dist)| -> Result<ToyRow> {
            let h = dist.at(TOY_HORIZON)?;
            let mut scored = Vec::with_capacity(toy.rois.len() * cfg.truths_per_roi);
            for (j, (roi, truths)) in toy.rois.iter().zip(&roi_truths).enumerate() {
                // same stream for every variant
                let mut rng = stream(seed, &["toy", "roi", &j.to_string()]);
                let p = violation_probability_with(h, roi, cfg.mc, &mut rng);
                scored.extend(truths.iter().map(|&t| (p, roi.contains(t), j)));
            }
            let curve = RankedScores::new(scored).roc()?;
            let nll_mean = mean(metric_truths.iter().map(|&t| nll(h, t)).collect::<Result<Vec<_>>>()?)
                .expect("non-empty truths");
            let ade_mean = mean(metric_truths.iter().enumerate().map(|(i, &t)| {
                ade_with(h, t, cfg.ade_draws, &mut stream(seed, &["toy", "ade", &i.to_string()]))
            }))
            .expect("non-empty truths");
            Ok(ToyRow {
                variant: *v,
                label: v.label().to_string(),
                irs: irs(&curve, TOY_FPR),
                nll: nll_mean,
                ade: ade_mean,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ToyReport {
        seed,
        horizon: TOY_HORIZON,
        fpr: TOY_FPR,
        n_rois: toy.rois.len(),
        rows,
    })
}

/// Densities of the ground truth and every variant at [`TOY_HORIZON`] on a regular grid,
/// as CSV `x,y,a,b,c,d`.
pub fn density_csv(toy: &Toy, step: f64) -> Result<String> {
    let mixtures: Vec<GaussianMixture> = toy
        .variants
        .iter()
        .map(|(_, d)| d.at(TOY_HORIZON)?.to_mixture(crate::prediction::DEFAULT_KERNEL_SIGMA))
        .collect::<Result<_>>()?;
    let mut s = String::from("x,y,a,b,c,d\n");
    let nx = (20.0 / step).round() as usize;
    let ny = (16.0 / step).round() as usize;
    for iy in 0..=ny {
        for ix in 0..=nx {
            let p = Point::new(-10.0 + ix as f64 * step, -10.0 + iy as f64 * step);
            s.push_str(&format!("{},{}", p.x, p.y));
            for m in &mixtures {
                s.push_str(&format!(",{:.6e}", m.log_pdf(p).exp()));
            }
            s.push('\n');
        }
    }
    Ok(s)
}
