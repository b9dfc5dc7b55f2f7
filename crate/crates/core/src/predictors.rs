//! Analytic baseline predictors: constant velocity and a map-aware mode mixture.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PlannedPath, Point};
use crate::grid::{CellClass, SemanticGrid};
use crate::kinematics::{in_corridor, ttc, DEFAULT_HALF_WIDTH};
use crate::prediction::{GaussianMixture, HorizonDist, PredictiveDistribution, HORIZONS};
use crate::scene::{EgoState, Scene};

/// Observed history length, steps.
pub const HISTORY_STEPS: usize = 10;
/// Positional spread growth, m per second of horizon (the simulator's own growth rate).
pub const DEFAULT_NOISE_GROWTH: f64 = 0.15;

fn build(track_id: &str, issue_time: f64, f: impl Fn(f64) -> Result<GaussianMixture>) -> Result<PredictiveDistribution> {
    let h = |i: usize| f(HORIZONS[i]).map(HorizonDist::Mixture);
    Ok(PredictiveDistribution::new(track_id, issue_time, [h(0)?, h(1)?, h(2)?, h(3)?]))
}

fn mean_velocity(history: &[Point], dt: f64) -> Result<Point> {
    if history.len() < 2 {
        return Err(Error::HistoryTooShort {
            got: history.len(),
            need: 2,
        });
    }
    let n = history.len() - 1;
    Ok((history[n] - history[0]) * (1.0 / (n as f64 * dt)))
}

fn iso(v: f64) -> [[f64; 2]; 2] {
    [[v, 0.0], [0.0, v]]
}

/// Last position plus `T` times the mean velocity of the window; isotropic spread
/// `noise_growth · T`.
pub fn constant_velocity(
    track_id: &str,
    issue_time: f64,
    history: &[Point],
    dt: f64,
    noise_growth: f64,
) -> Result<PredictiveDistribution> {
    let vel = mean_velocity(history, dt)?;
    if !(noise_growth > 0.0) {
        return Err(Error::Config("noise_growth must be positive".into()));
    }
    let last = history[history.len() - 1];
    build(track_id, issue_time, |h| {
        let sd = noise_growth * h;
        GaussianMixture::from_parts([(1.0, last + vel * h, iso(sd * sd))])
    })
}

/// A marked crossing found in the grid: zebra and refuge cells connected as one patch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZebraPatch {
    pub centroid: Point,
    /// The two curb-side ends of the crossing.
    pub ends: [Point; 2],
}

/// Per-scene map lookups shared by all predictions of the scene.
#[derive(Clone, Debug)]
pub struct MapContext<'a> {
    pub grid: &'a SemanticGrid,
    pub zebras: Vec<ZebraPatch>,
}

fn is_crossing_cell(c: CellClass) -> bool {
    matches!(c, CellClass::Zebra | CellClass::Refuge)
}

impl<'a> MapContext<'a> {
    /// Finds crossing patches; their direction is taken across the ego path.
    pub fn new(grid: &'a SemanticGrid, ego_path: &PlannedPath) -> Self {
        let (w, h) = (grid.width(), grid.height());
        let mut seen = vec![false; w * h];
        let mut zebras = Vec::new();
        for start in 0..w * h {
            if seen[start] || !is_crossing_cell(grid.get(start % w, start / w)) {
                continue;
            }
            seen[start] = true;
            let mut stack = vec![start];
            let (mut sum, mut count) = (Point::new(0.0, 0.0), 0usize);
            while let Some(i) = stack.pop() {
                let (c, r) = (i % w, i / w);
                sum = sum + grid.cell_center(c, r);
                count += 1;
                let mut push = |c: usize, r: usize| {
                    let j = r * w + c;
                    if !seen[j] && is_crossing_cell(grid.get(c, r)) {
                        seen[j] = true;
                        stack.push(j);
                    }
                };
                if c > 0 {
                    push(c - 1, r);
                }
                if c + 1 < w {
                    push(c + 1, r);
                }
                if r > 0 {
                    push(c, r - 1);
                }
                if r + 1 < h {
                    push(c, r + 1);
                }
            }
            let centroid = sum * (1.0 / count as f64);
            let across = ego_path.tangent_at(ego_path.project(centroid).s).perp();
            let step = 0.5 * grid.resolution();
            let reach = |dir: Point| {
                let mut d = 0.0;
                while d < 50.0 && is_crossing_cell(grid.class_at(centroid + dir * (d + step))) {
                    d += step;
                }
                centroid + dir * d
            };
            zebras.push(ZebraPatch {
                centroid,
                ends: [reach(across), reach(-across)],
            });
        }
        Self { grid, zebras }
    }

    /// Nearest carriageway cell center within `radius` of `p`.
    pub fn nearest_carriageway(&self, p: Point, radius: f64) -> Option<Point> {
        let g = self.grid;
        let res = g.resolution();
        let o = g.origin();
        let lo_c = ((p.x - radius - o.x) / res).floor().max(0.0) as usize;
        let lo_r = ((p.y - radius - o.y) / res).floor().max(0.0) as usize;
        let hi_c = (((p.x + radius - o.x) / res).ceil().max(0.0) as usize).min(g.width());
        let hi_r = (((p.y + radius - o.y) / res).ceil().max(0.0) as usize).min(g.height());
        let mut best: Option<(f64, Point)> = None;
        for r in lo_r..hi_r {
            for c in lo_c..hi_c {
                if !g.get(c, r).is_carriageway() {
                    continue;
                }
                let q = g.cell_center(c, r);
                let d = q.dist(p);
                if d <= radius && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, q));
                }
            }
        }
        best.map(|b| b.1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapMixParams {
    pub noise_growth: f64,
    /// Smallest walking speed assumed for goal-directed modes, m/s.
    pub min_speed: f64,
    pub logit_continue: f64,
    pub logit_zebra: f64,
    pub logit_crossing: f64,
    /// Logit penalty per unit of `1 − cos` between heading and mode direction.
    pub alignment_gain: f64,
    /// Bonus for a zebra entry within `near_zebra` meters.
    pub near_zebra_bonus: f64,
    pub near_zebra: f64,
    /// Crossing modes are suppressed when the ego reaches the crossing point sooner.
    pub gap_acceptance: f64,
    pub gap_penalty: f64,
    pub zebra_radius: f64,
    pub road_radius: f64,
    /// Below this speed the heading is treated as unknown.
    pub heading_speed: f64,
}

impl Default for MapMixParams {
    fn default() -> Self {
        Self {
            noise_growth: DEFAULT_NOISE_GROWTH,
            min_speed: 1.0,
            logit_continue: 0.5,
            logit_zebra: 0.0,
            logit_crossing: -1.0,
            alignment_gain: 2.0,
            near_zebra_bonus: 1.0,
            near_zebra: 3.0,
            gap_acceptance: 2.5,
            gap_penalty: 3.0,
            zebra_radius: 25.0,
            road_radius: 6.0,
            heading_speed: 0.3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisKind {
    Continue,
    Zebra,
    Crossing,
}

/// One goal hypothesis: a polyline walked at `speed` from the current position.
#[derive(Clone, Debug)]
pub struct Hypothesis {
    pub kind: HypothesisKind,
    pub weight: f64,
    pub route: PlannedPath,
    pub speed: f64,
}

fn route(points: &[Point]) -> Option<PlannedPath> {
    let mut pts: Vec<Point> = Vec::with_capacity(points.len());
    for &p in points {
        if pts.last().is_none_or(|q: &Point| q.dist(p) > 1e-6) {
            pts.push(p);
        }
    }
    PlannedPath::new(pts).ok()
}

/// Crossing modes where the ego reaches the pedestrian's crossing point too soon.
fn gap_infeasible(r: &PlannedPath, speed: f64, ego: &EgoState, ego_path: &PlannedPath, accept: f64) -> bool {
    (1..=32)
        .map(|k| r.point_at(speed * 0.25 * k as f64))
        .find(|&p| in_corridor(p, ego_path, DEFAULT_HALF_WIDTH))
        .is_some_and(|p| ttc(ego, p, ego_path) < accept)
}

/// Goal hypotheses with normalized weights; the continue hypothesis comes first.
pub fn map_hypotheses(
    history: &[Point],
    dt: f64,
    ctx: &MapContext<'_>,
    ego: &EgoState,
    ego_path: &PlannedPath,
    params: &MapMixParams,
) -> Result<Vec<Hypothesis>> {
    let vel = mean_velocity(history, dt)?;
    let x = history[history.len() - 1];
    let speed = vel.norm();
    let heading = (speed >= params.heading_speed).then(|| vel * (1.0 / speed));
    let goal_speed = speed.max(params.min_speed);
    let align = |dir: Point| heading.map_or(0.0, |hd| -params.alignment_gain * (1.0 - hd.dot(dir.normalized())));
    let cv = route(&[x, x + vel * 100.0]);

    let mut out = vec![Hypothesis {
        kind: HypothesisKind::Continue,
        weight: params.logit_continue,
        route: cv.clone().unwrap_or_else(|| PlannedPath::straight(x, x + Point::new(1.0, 0.0)).expect("unit path")),
        speed: if cv.is_some() { speed } else { 0.0 },
    }];

    let here = ctx.grid.class_at(x);
    if let Some(z) = ctx
        .zebras
        .iter()
        .filter(|z| z.centroid.dist(x) <= params.zebra_radius)
        .min_by(|a, b| a.centroid.dist(x).total_cmp(&b.centroid.dist(x)))
    {
        let [a, b] = z.ends;
        let (entry, exit) = if is_crossing_cell(here) {
            // already on the crossing: keep walking towards the end ahead
            match heading {
                Some(hd) if hd.dot(a - b) < 0.0 => (x, b),
                Some(_) => (x, a),
                None if x.dist(a) > x.dist(b) => (x, a),
                None => (x, b),
            }
        } else if x.dist(a) <= x.dist(b) {
            (a, b)
        } else {
            (b, a)
        };
        let beyond = exit + (exit - entry).normalized() * 100.0;
        if let Some(r) = route(&[x, entry, exit, beyond]) {
            let first = if x.dist(entry) > 1.0 { entry - x } else { exit - x };
            let mut logit = params.logit_zebra + align(first);
            if x.dist(entry) <= params.near_zebra {
                logit += params.near_zebra_bonus;
            }
            if gap_infeasible(&r, goal_speed, ego, ego_path, params.gap_acceptance) {
                logit -= params.gap_penalty;
            }
            out.push(Hypothesis {
                kind: HypothesisKind::Zebra,
                weight: logit,
                route: r,
                speed: goal_speed,
            });
        }
    }

    if here == CellClass::Sidewalk {
        if let Some(q) = ctx.nearest_carriageway(x, params.road_radius) {
            let dir = (q - x).normalized();
            if let Some(r) = route(&[x, x + dir * 100.0]) {
                let mut logit = params.logit_crossing + align(dir);
                if gap_infeasible(&r, goal_speed, ego, ego_path, params.gap_acceptance) {
                    logit -= params.gap_penalty;
                }
                out.push(Hypothesis {
                    kind: HypothesisKind::Crossing,
                    weight: logit,
                    route: r,
                    speed: goal_speed,
                });
            }
        }
    }

    let m = out.iter().map(|h| h.weight).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = out.iter().map(|h| (h.weight - m).exp()).sum();
    for h in &mut out {
        h.weight = (h.weight - m).exp() / total;
    }
    Ok(out)
}

/// Mixture over map-derived goal hypotheses; exactly [`constant_velocity`] when the map
/// offers none besides continuing.
#[allow(clippy::too_many_arguments)]
pub fn map_mode_mixture(
    track_id: &str,
    issue_time: f64,
    history: &[Point],
    dt: f64,
    ctx: &MapContext<'_>,
    ego: &EgoState,
    ego_path: &PlannedPath,
    params: &MapMixParams,
) -> Result<PredictiveDistribution> {
    let hyps = map_hypotheses(history, dt, ctx, ego, ego_path, params)?;
    if hyps.len() == 1 {
        return constant_velocity(track_id, issue_time, history, dt, params.noise_growth);
    }
    let x = history[history.len() - 1];
    build(track_id, issue_time, |h| {
        let sd = params.noise_growth * h;
        GaussianMixture::from_parts(hyps.iter().map(|hy| {
            let mean = if hy.speed > 0.0 { hy.route.point_at(hy.speed * h) } else { x };
            (hy.weight, mean, iso(sd * sd))
        }))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Cv,
    Mapmix,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Cv => "cv",
            Model::Mapmix => "mapmix",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cv" => Ok(Model::Cv),
            "mapmix" => Ok(Model::Mapmix),
            _ => Err(Error::Config(format!("unknown model {s:?} (expected cv or mapmix)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictConfig {
    pub model: Model,
    pub mapmix: MapMixParams,
    /// Issue a prediction every `stride` time steps.
    pub stride: usize,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            model: Model::Cv,
            mapmix: MapMixParams::default(),
            stride: 1,
        }
    }
}

/// Predictions for every track at every time with a full history and ego coverage.
pub fn predict_scene(scene: &Scene, cfg: &PredictConfig) -> Result<Vec<PredictiveDistribution>> {
    if cfg.stride == 0 {
        return Err(Error::Config("stride must be positive".into()));
    }
    let ctx = (cfg.model == Model::Mapmix).then(|| MapContext::new(&scene.grid, &scene.path));
    let mut jobs = Vec::new();
    for track in &scene.tracks {
        for k in (HISTORY_STEPS - 1..track.states.len()).step_by(cfg.stride) {
            if let Some(ego) = scene.ego_at(track.states[k].t) {
                jobs.push((track, k, ego));
            }
        }
    }
    jobs.par_iter()
        .map(|&(track, k, ego)| {
            let hist: Vec<Point> = track.states[k + 1 - HISTORY_STEPS..=k].iter().map(|s| s.pos).collect();
            let t = track.states[k].t;
            match &ctx {
                None => constant_velocity(&track.id, t, &hist, scene.dt, cfg.mapmix.noise_growth),
                Some(ctx) => map_mode_mixture(&track.id, t, &hist, scene.dt, ctx, ego, &scene.path, &cfg.mapmix),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::nll;
    use crate::simulator::{generate, generate_scene, Layout, SimConfig};

    fn walk(v: Point, n: usize) -> Vec<Point> {
        (0..n).map(|k| Point::new(2.0, 1.0) + v * (k as f64 * 0.1)).collect()
    }

    #[test]
    fn stationary_history_stays_put() {
        let d = constant_velocity("p", 0.0, &walk(Point::new(0.0, 0.0), 10), 0.1, 0.5).unwrap();
        for h in HORIZONS {
            assert!(d.at(h).unwrap().mean().dist(Point::new(2.0, 1.0)) < 1e-12);
        }
    }

    #[test]
    fn straight_walk_extrapolates() {
        let d = constant_velocity("p", 0.0, &walk(Point::new(1.0, 0.0), 10), 0.1, 0.5).unwrap();
        let m = d.at(3.0).unwrap().mean();
        assert!(m.dist(Point::new(2.0 + 0.9 + 3.0, 1.0)) < 1e-9);
        assert!(matches!(
            constant_velocity("p", 0.0, &walk(Point::new(1.0, 0.0), 1), 0.1, 0.5),
            Err(Error::HistoryTooShort { got: 1, need: 2 })
        ));
    }

    #[test]
    fn beats_broad_prior_on_linear_walkers() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let (mut cv_sum, mut prior_sum) = (0.0, 0.0);
        for _ in 0..100 {
            let heading = rng.random_range(0.0..std::f64::consts::TAU);
            let v = Point::from_angle(heading) * rng.random_range(0.8..1.8);
            let hist = walk(v, 10);
            let last = hist[9];
            let d = constant_velocity("p", 0.0, &hist, 0.1, 0.5).unwrap();
            let broad = GaussianMixture::from_parts([(1.0, last, iso(100.0))]).unwrap();
            for h in HORIZONS {
                let truth = last + v * h;
                cv_sum += nll(d.at(h).unwrap(), truth).unwrap();
                prior_sum -= broad.log_pdf(truth);
            }
        }
        assert!(prior_sum / 400.0 - cv_sum / 400.0 > 1.0);
    }

    fn all_unknown_ctx() -> (SemanticGrid, PlannedPath) {
        let g = SemanticGrid::filled(40, 40, 0.5, Point::new(-10.0, -10.0), CellClass::Unknown).unwrap();
        (g, PlannedPath::straight(Point::new(-10.0, -5.0), Point::new(10.0, -5.0)).unwrap())
    }

    #[test]
    fn unknown_map_falls_back_to_cv() {
        let (g, path) = all_unknown_ctx();
        let ctx = MapContext::new(&g, &path);
        let ego = EgoState::on_path(&path, 0.0, 0.0, 10.0);
        let hist = walk(Point::new(0.7, 0.4), 10);
        let p = MapMixParams::default();
        let a = map_mode_mixture("p", 1.0, &hist, 0.1, &ctx, &ego, &path, &p).unwrap();
        let b = constant_velocity("p", 1.0, &hist, 0.1, p.noise_growth).unwrap();
        assert_eq!(a, b);
    }

    /// Straight road along x: carriageway |y| <= 3.5, sidewalks beyond, zebra |x - 20| <= 2.
    fn street() -> (SemanticGrid, PlannedPath) {
        let g = SemanticGrid::from_fn(120, 40, 0.5, Point::new(0.0, -10.0), |p| {
            if p.y.abs() <= 3.5 {
                if (p.x - 20.0).abs() <= 2.0 {
                    CellClass::Zebra
                } else {
                    CellClass::Road
                }
            } else {
                CellClass::Sidewalk
            }
        })
        .unwrap();
        (g, PlannedPath::straight(Point::new(0.0, -1.75), Point::new(60.0, -1.75)).unwrap())
    }

    #[test]
    fn zebra_patch_spans_the_road() {
        let (g, path) = street();
        let ctx = MapContext::new(&g, &path);
        assert_eq!(ctx.zebras.len(), 1);
        let z = ctx.zebras[0];
        assert!(z.centroid.dist(Point::new(20.0, 0.0)) < 0.3);
        let ys = [z.ends[0].y, z.ends[1].y];
        assert!(ys.iter().any(|&y| (y - 3.5).abs() < 0.5) && ys.iter().any(|&y| (y + 3.5).abs() < 0.5));
    }

    #[test]
    fn perpendicular_heading_at_zebra_prefers_zebra() {
        let (g, path) = street();
        let ctx = MapContext::new(&g, &path);
        let ego = EgoState::on_path(&path, 0.0, 0.0, 0.0);
        let hist: Vec<Point> = (0..10).map(|k| Point::new(20.0, 5.0 - 0.13 * k as f64)).collect();
        let hyps = map_hypotheses(&hist, 0.1, &ctx, &ego, &path, &MapMixParams::default()).unwrap();
        let best = hyps.iter().max_by(|a, b| a.weight.total_cmp(&b.weight)).unwrap();
        assert_eq!(best.kind, HypothesisKind::Zebra);
        assert!((hyps.iter().map(|h| h.weight).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn close_ego_suppresses_crossing() {
        let (g, path) = street();
        let ctx = MapContext::new(&g, &path);
        let hist: Vec<Point> = (0..10).map(|k| Point::new(40.0, 5.0 - 0.13 * k as f64)).collect();
        let p = MapMixParams::default();
        let weight = |ego_s: f64| {
            let ego = EgoState::on_path(&path, 0.0, ego_s, 10.0);
            let h = map_hypotheses(&hist, 0.1, &ctx, &ego, &path, &p).unwrap();
            h.iter().find(|h| h.kind == HypothesisKind::Crossing).unwrap().weight
        };
        assert!(weight(30.0) < weight(0.0) * 0.2);
    }

    #[test]
    fn continue_walkers_agree_with_continue_mode() {
        let mut c = SimConfig::new(5, Layout::StraightRoad);
        c.ped.mode_probs = [1.0, 0.0, 0.0, 0.0];
        let (mut agree, mut total) = (0, 0);
        for sim in generate(&c, 10).unwrap() {
            let s = &sim.scene;
            let ctx = MapContext::new(&s.grid, &s.path);
            let tr = &s.tracks[0];
            for k in (HISTORY_STEPS - 1..tr.states.len()).step_by(5) {
                let hist: Vec<Point> = tr.states[k + 1 - HISTORY_STEPS..=k].iter().map(|s| s.pos).collect();
                let ego = s.ego_at(tr.states[k].t).unwrap();
                let h = map_hypotheses(&hist, s.dt, &ctx, ego, &s.path, &MapMixParams::default()).unwrap();
                total += 1;
                if h[0].weight > 0.8 {
                    agree += 1;
                }
            }
        }
        assert!(agree as f64 >= 0.8 * total as f64, "{agree}/{total}");
    }

    #[test]
    fn scene_predictions_validate() {
        let sim = generate_scene(&SimConfig::new(1, Layout::RefugeRoad), 0).unwrap();
        for model in [Model::Cv, Model::Mapmix] {
            let cfg = PredictConfig {
                model,
                stride: 7,
                ..PredictConfig::default()
            };
            let preds = predict_scene(&sim.scene, &cfg).unwrap();
            assert!(!preds.is_empty());
            for d in &preds {
                let line = crate::prediction::prediction_to_json(d);
                assert_eq!(&crate::prediction::parse_prediction(&line).unwrap(), d);
            }
        }
    }
}
