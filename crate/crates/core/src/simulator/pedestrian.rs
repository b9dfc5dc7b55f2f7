//! Pedestrian behavior modes, their smoothed paths and the mode posterior.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PlannedPath, Point};

use super::road::{Road, ROAD_HALF_WIDTH, SIDEWALK_CENTER};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Continue,
    CrossAtZebra,
    CrossJaywalk,
    Stop,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Continue, Mode::CrossAtZebra, Mode::CrossJaywalk, Mode::Stop];

    pub fn crosses(self) -> bool {
        matches!(self, Mode::CrossAtZebra | Mode::CrossJaywalk)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PedPolicy {
    /// Nominal walking speed, m/s.
    pub walk_speed: f64,
    /// Probabilities of continue, cross_at_zebra, cross_jaywalk, stop.
    pub mode_probs: [f64; 4],
    /// Smallest ego time gap accepted for crossing, s.
    pub gap_acceptance: f64,
}

impl Default for PedPolicy {
    fn default() -> Self {
        Self {
            walk_speed: 1.3,
            mode_probs: [0.3, 0.4, 0.15, 0.15],
            gap_acceptance: 2.5,
        }
    }
}

impl PedPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.walk_speed > 0.0) || !(self.gap_acceptance >= 0.0) {
            return Err(Error::Config("walk speed must be positive, gap acceptance non-negative".into()));
        }
        if self.mode_probs.iter().any(|&p| !(p >= 0.0)) || (self.mode_probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::Config("mode probabilities must be non-negative and sum to 1".into()));
        }
        Ok(())
    }

    pub fn prob(&self, mode: Mode) -> f64 {
        self.mode_probs[Mode::ALL.iter().position(|&m| m == mode).expect("known mode")]
    }
}

/// Max pedestrian acceleration magnitude, m/s².
pub const MAX_ACCEL: f64 = 1.0;
/// Lateral sway amplitude at full walking speed, m.
pub const SWAY_AMPLITUDE: f64 = 0.03;
pub const SWAY_FREQUENCY: f64 = 0.9;

/// Chaikin corner cutting, endpoints kept.
pub fn chaikin(points: &[Point], iterations: usize) -> Vec<Point> {
    let mut pts = points.to_vec();
    for _ in 0..iterations {
        if pts.len() < 3 {
            break;
        }
        let mut next = Vec::with_capacity(2 * pts.len());
        next.push(pts[0]);
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            next.push(a * 0.75 + b * 0.25);
            next.push(a * 0.25 + b * 0.75);
        }
        next.push(pts[pts.len() - 1]);
        pts = next;
    }
    pts
}

/// Geometry shared by all modes of one pedestrian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PedSetup {
    /// +1: sidewalk on the left of the ego travel direction, −1: right.
    pub side: f64,
    /// +1: walking towards +s.
    pub dir: f64,
    pub start_s: f64,
    /// Road arc position where the jaywalk mode crosses.
    pub jaywalk_s: f64,
}

/// Road-frame waypoints of a mode.
fn frame_waypoints(mode: Mode, road: &Road, setup: &PedSetup) -> Vec<(f64, f64)> {
    let (side, dir) = (setup.side, setup.dir);
    let walk = side * SIDEWALK_CENTER;
    let curb = side * (ROAD_HALF_WIDTH + 0.2);
    let far_curb = -side * (ROAD_HALF_WIDTH + 0.2);
    let far_walk = -side * SIDEWALK_CENTER;
    let sc = road.crossing_s;
    let start = (setup.start_s, walk);
    match mode {
        Mode::Continue => vec![start, (sc + dir * 40.0, walk)],
        Mode::CrossAtZebra => vec![
            start,
            (sc - dir * 1.0, walk),
            (sc, curb),
            (sc, far_curb),
            (sc + dir * 1.0, far_walk),
            (sc + dir * 30.0, far_walk),
        ],
        Mode::CrossJaywalk => {
            let sj = setup.jaywalk_s;
            vec![
                start,
                (sj - dir * 1.0, walk),
                (sj, curb),
                (sj + dir * 2.0, far_curb),
                (sj + dir * 3.0, far_walk),
                (sj + dir * 30.0, far_walk),
            ]
        }
        Mode::Stop => vec![start, (sc - dir * 1.0, walk), (sc, curb)],
    }
}

fn densify(frame: &[(f64, f64)], step: f64) -> Vec<(f64, f64)> {
    let mut out = vec![frame[0]];
    for w in frame.windows(2) {
        let (a, b) = (w[0], w[1]);
        let len = ((b.0 - a.0).powi(2) + (b.1 - a.1).powi(2)).sqrt();
        let n = (len / step).ceil().max(1.0) as usize;
        for k in 1..=n {
            let u = k as f64 / n as f64;
            out.push((a.0 + u * (b.0 - a.0), a.1 + u * (b.1 - a.1)));
        }
    }
    out
}

/// Smoothed world-frame path of a mode.
pub fn mode_path(mode: Mode, road: &Road, setup: &PedSetup) -> Result<PlannedPath> {
    let frame = densify(&frame_waypoints(mode, road, setup), 1.0);
    let world: Vec<Point> = frame.iter().map(|&(s, l)| road.to_world(s, l)).collect();
    PlannedPath::new(chaikin(&world, 3))
}

/// Arc length at which a crossing mode path leaves the sidewalk.
pub fn curb_arc(road: &Road, path: &PlannedPath) -> Option<f64> {
    let v = path.vertices();
    let s = path.arc_lengths();
    (0..v.len())
        .find(|&i| road.to_frame(v[i]).1.abs() <= ROAD_HALF_WIDTH + 0.2)
        .map(|i| s[i])
}

/// Arc length at which a path crosses the lateral offset `l` (first time).
pub fn lane_crossing_arc(road: &Road, path: &PlannedPath, l: f64) -> Option<f64> {
    let v = path.vertices();
    let s = path.arc_lengths();
    for i in 1..v.len() {
        let (a, b) = (road.to_frame(v[i - 1]).1 - l, road.to_frame(v[i]).1 - l);
        if a == 0.0 {
            return Some(s[i - 1]);
        }
        if a * b < 0.0 {
            return Some(s[i - 1] + (s[i] - s[i - 1]) * a / (a - b));
        }
    }
    None
}

/// Mode of a pedestrian track in the sidecar: its prior and smoothed path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeHypothesis {
    pub mode: Mode,
    pub prior: f64,
    pub path: Vec<Point>,
}

/// Observation noise of the mode likelihood, m.
pub const OBS_SIGMA: f64 = 0.15;

/// Posterior mode weights given observed positions: prior × Π N(dist to path; 0, σ_obs²).
pub fn mode_posterior(modes: &[(f64, &PlannedPath)], history: &[Point], obs_sigma: f64) -> Vec<f64> {
    let logs: Vec<f64> = modes
        .iter()
        .map(|&(prior, path)| {
            if prior <= 0.0 {
                return f64::NEG_INFINITY;
            }
            let ss: f64 = history.iter().map(|&p| path.project(p).distance.powi(2)).sum();
            prior.ln() - ss / (2.0 * obs_sigma * obs_sigma)
        })
        .collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::road::{Centerline, Layout};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn road() -> Road {
        Road {
            layout: Layout::ZebraRoad,
            centerline: Centerline::Straight,
            length: 200.0,
            crossing_s: 80.0,
        }
    }

    fn setup() -> PedSetup {
        PedSetup {
            side: -1.0,
            dir: 1.0,
            start_s: 70.0,
            jaywalk_s: 75.0,
        }
    }

    #[test]
    fn chaikin_keeps_endpoints_and_straight_lines() {
        let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)];
        let out = chaikin(&pts, 3);
        assert_eq!(out[0], pts[0]);
        assert_eq!(*out.last().unwrap(), pts[2]);
        assert!(out.iter().all(|p| (p.x - p.y).abs() < 1e-12));
    }

    #[test]
    fn zebra_path_crosses_road_at_crossing() {
        let r = road();
        let p = mode_path(Mode::CrossAtZebra, &r, &setup()).unwrap();
        let u = lane_crossing_arc(&r, &p, 0.0).unwrap();
        let (s, _) = r.to_frame(p.point_at(u));
        assert!((s - 80.0).abs() < 0.3);
        let c = curb_arc(&r, &p).unwrap();
        assert!(c < u && c > 8.0);
        assert!(curb_arc(&r, &mode_path(Mode::Continue, &r, &setup()).unwrap()).is_none());
    }

    #[test]
    fn posterior_symmetric_before_divergence() {
        let r = road();
        let a = mode_path(Mode::Continue, &r, &setup()).unwrap();
        let b = mode_path(Mode::CrossAtZebra, &r, &setup()).unwrap();
        let hist: Vec<Point> = (0..10).map(|k| Point::new(70.0 + 0.13 * k as f64, -4.75 + 0.02)).collect();
        let w = mode_posterior(&[(0.5, &a), (0.5, &b)], &hist, OBS_SIGMA);
        assert!((w[0] - 0.5).abs() < 1e-9 && (w[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn posterior_matches_particle_filter() {
        let r = road();
        let paths: Vec<PlannedPath> = Mode::ALL.iter().map(|&m| mode_path(m, &r, &setup()).unwrap()).collect();
        let priors = [0.3, 0.4, 0.15, 0.15];
        // walker following the zebra path, observed with noise, stepping off the curb
        let zebra = &paths[1];
        let c = curb_arc(&r, zebra).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let hist: Vec<Point> = (0..10)
            .map(|k| {
                zebra.point_at(c - 0.3 + 0.13 * k as f64)
                    + Point::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05))
            })
            .collect();
        let modes: Vec<(f64, &PlannedPath)> = priors.iter().copied().zip(paths.iter()).collect();
        let w = mode_posterior(&modes, &hist, OBS_SIGMA);
        assert!(w[1] > 0.9);
        // particle oracle: particles carry a mode drawn from the prior, weighted by likelihood
        let n = 10_000;
        let loglik: Vec<f64> = paths
            .iter()
            .map(|p| -hist.iter().map(|&h| p.project(h).distance.powi(2)).sum::<f64>() / (2.0 * OBS_SIGMA * OBS_SIGMA))
            .collect();
        let mut acc = [0.0; 4];
        for _ in 0..n {
            let u: f64 = rng.random();
            let mut k = 0;
            let mut c = priors[0];
            while u >= c && k < 3 {
                k += 1;
                c += priors[k];
            }
            acc[k] += loglik[k].exp();
        }
        let total: f64 = acc.iter().sum();
        for k in 0..4 {
            let est = acc[k] / total;
            assert!((est - w[k]).abs() < 0.02, "mode {k}: {est} vs {}", w[k]);
        }
    }
}
