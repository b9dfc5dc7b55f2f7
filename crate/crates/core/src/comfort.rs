//! Speed-dependent comfort zone along the planned path.
//!
//! The zone covers the path-aligned strip `[s − v·tau_rear, s + v·tau] × [−width/2, width/2]`
//! around the ego arc position `s`. Future zones are obtained by advancing the zone along
//! the path under a longitudinal speed profile; braking shrinks them.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{bounding_box, point_in_polygon, PlannedPath, Point};
use crate::prediction::{HorizonDist, PredictiveDistribution, HORIZONS};
use crate::rng::{MonteCarloConfig, StreamKey};
use crate::scene::{EgoState, Scene};

pub const DEFAULT_TAU: f64 = 3.0;
pub const DEFAULT_ZONE_WIDTH: f64 = 3.0;
pub const DEFAULT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_DECEL_GRID: [f64; 7] = [0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneConfig {
    /// Time gap covered ahead of the ego, seconds.
    pub tau: f64,
    /// Lateral extent, meters.
    pub width: f64,
    /// Time gap covered behind the ego, seconds.
    pub tau_rear: f64,
}

impl Default for ZoneConfig {
    fn default() -> Self {
        Self {
            tau: DEFAULT_TAU,
            width: DEFAULT_ZONE_WIDTH,
            tau_rear: 0.0,
        }
    }
}

/// Longitudinal speed profile with constant acceleration, saturating at standstill
/// (braking) or at `v_cap` (accelerating).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedProfile {
    pub v0: f64,
    /// Signed acceleration, m/s² (negative brakes).
    pub accel: f64,
    pub v_cap: f64,
}

impl SpeedProfile {
    pub fn constant(v0: f64) -> Self {
        Self {
            v0,
            accel: 0.0,
            v_cap: v0,
        }
    }

    /// `v(t) = max(0, v0 − decel·t)`.
    pub fn braking(v0: f64, decel: f64) -> Self {
        Self {
            v0,
            accel: -decel,
            v_cap: v0,
        }
    }

    fn saturation_time(&self) -> f64 {
        if self.accel < 0.0 {
            self.v0 / -self.accel
        } else if self.accel > 0.0 {
            ((self.v_cap - self.v0) / self.accel).max(0.0)
        } else {
            f64::INFINITY
        }
    }

    fn final_speed(&self) -> f64 {
        if self.accel < 0.0 {
            0.0
        } else {
            self.v_cap.max(self.v0)
        }
    }

    pub fn speed(&self, t: f64) -> f64 {
        if t >= self.saturation_time() {
            self.final_speed()
        } else {
            self.v0 + self.accel * t
        }
    }

    /// Distance covered after `t` seconds (closed-form integral of `speed`).
    pub fn distance(&self, t: f64) -> f64 {
        let ts = self.saturation_time();
        if t <= ts {
            self.v0 * t + 0.5 * self.accel * t * t
        } else {
            self.v0 * ts + 0.5 * self.accel * ts * ts + self.final_speed() * (t - ts)
        }
    }
}

/// Unclipped arc-length extent `(rear, front)` of a zone anchored at `anchor_s`.
pub fn zone_extent(anchor_s: f64, speed: f64, config: &ZoneConfig) -> (f64, f64) {
    (anchor_s - speed * config.tau_rear, anchor_s + speed * config.tau)
}

/// Membership in path coordinates: arc length `s` and signed lateral offset.
/// Agrees with the polygon test wherever the path is straight.
pub fn in_zone_frame(s: f64, lateral: f64, anchor_s: f64, speed: f64, config: &ZoneConfig) -> bool {
    let (rear, front) = zone_extent(anchor_s, speed, config);
    lateral.abs() <= 0.5 * config.width && rear <= s && s <= front
}

/// Comfort zone at one point in time.
#[derive(Clone, Debug, PartialEq)]
pub struct ComfortZone {
    /// Ego arc position the zone is attached to (not clipped).
    pub anchor_s: f64,
    /// Speed that sets the zone length.
    pub speed: f64,
    pub config: ZoneConfig,
    /// Clipped extents on the path.
    pub s_rear: f64,
    pub s_front: f64,
    /// Set when the zone was cut at a path end.
    pub clipped: bool,
    polygon: Vec<Point>,
    bbox: (Point, Point),
}

impl ComfortZone {
    /// Zone for an ego at arc length `anchor_s` driving at `speed`.
    pub fn new(path: &PlannedPath, anchor_s: f64, speed: f64, config: ZoneConfig) -> Self {
        let len = path.length();
        let (raw_rear, raw_front) = zone_extent(anchor_s, speed, &config);
        let s_rear = raw_rear.clamp(0.0, len);
        let s_front = raw_front.clamp(0.0, len);
        let clipped = s_rear != raw_rear || s_front != raw_front;
        let polygon = if raw_rear > len || raw_front < 0.0 {
            Vec::new()
        } else {
            path.strip_polygon(s_rear, s_front, 0.5 * config.width)
        };
        let bbox = if polygon.is_empty() {
            (Point::new(f64::INFINITY, f64::INFINITY), Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY))
        } else {
            let (lo, hi) = bounding_box(&polygon);
            let pad = Point::new(1e-9, 1e-9);
            (lo - pad, hi + pad)
        };
        Self {
            anchor_s,
            speed,
            config,
            s_rear,
            s_front,
            clipped,
            polygon,
            bbox,
        }
    }

    pub fn polygon(&self) -> &[Point] {
        &self.polygon
    }

    pub fn length(&self) -> f64 {
        self.s_front - self.s_rear
    }

    pub fn is_empty(&self) -> bool {
        self.polygon.is_empty()
    }

    /// Boundary-inclusive membership.
    pub fn contains(&self, p: Point) -> bool {
        let (lo, hi) = self.bbox;
        if p.x < lo.x || p.y < lo.y || p.x > hi.x || p.y > hi.y {
            return false;
        }
        point_in_polygon(p, &self.polygon)
    }

    pub fn fraction_inside(&self, points: &[Point]) -> f64 {
        if points.is_empty() {
            return 0.0;
        }
        points.iter().filter(|&&p| self.contains(p)).count() as f64 / points.len() as f64
    }
}

/// Current comfort zone of the ego.
pub fn build_zone(ego: &EgoState, path: &PlannedPath, config: ZoneConfig) -> ComfortZone {
    ComfortZone::new(path, ego.s, ego.v, config)
}

/// Zone shifted `speed·T` along the path at unchanged speed (no system reaction).
pub fn future_zone(zone: &ComfortZone, path: &PlannedPath, horizon: f64) -> ComfortZone {
    ComfortZone::new(path, zone.anchor_s + zone.speed * horizon, zone.speed, zone.config)
}

/// Zone after `horizon` seconds of the given speed profile, sized by the speed reached.
pub fn profiled_zone(
    path: &PlannedPath,
    ego_s: f64,
    profile: &SpeedProfile,
    horizon: f64,
    config: ZoneConfig,
) -> ComfortZone {
    ComfortZone::new(
        path,
        ego_s + profile.distance(horizon),
        profile.speed(horizon),
        config,
    )
}

/// Points representing the distribution at one horizon: the sample set itself, or `mc.n`
/// draws from the stream derived from `key`.
pub fn representative_points(h: &HorizonDist, mc: &MonteCarloConfig, key: &StreamKey<'_>) -> Vec<Point> {
    match h {
        HorizonDist::Samples(s) => s.clone(),
        HorizonDist::Mixture(m) => m.draw(&mut key.rng(mc.seed, "roi"), mc.n),
    }
}

/// Probability that the pedestrian is inside `zone` at `horizon`.
///
/// Exact fraction for sample sets; Monte-Carlo estimate with `mc.n` seeded draws for
/// mixtures, the stream keyed by `(scene_id, track_id, issue_time, horizon)`.
pub fn violation_probability(
    dist: &PredictiveDistribution,
    zone: &ComfortZone,
    horizon: f64,
    mc: &MonteCarloConfig,
    scene_id: &str,
) -> Result<f64> {
    let h = dist.at(horizon)?;
    let key = StreamKey {
        scene_id,
        track_id: &dist.track_id,
        issue_time: dist.issue_time,
        horizon,
    };
    Ok(match h {
        HorizonDist::Samples(s) => zone.fraction_inside(s),
        HorizonDist::Mixture(_) => zone.fraction_inside(&representative_points(h, mc, &key)),
    })
}

/// Monte-Carlo estimate with an explicit generator.
pub fn violation_probability_with<R: Rng + ?Sized>(
    h: &HorizonDist,
    zone: &ComfortZone,
    n: usize,
    rng: &mut R,
) -> f64 {
    match h {
        HorizonDist::Samples(s) => zone.fraction_inside(s),
        HorizonDist::Mixture(m) => zone.fraction_inside(&m.draw(rng, n)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub horizon: f64,
    pub p_violation: f64,
    pub violating: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReactionConfig {
    pub threshold: f64,
    pub horizons: Vec<f64>,
    /// Candidate decelerations, ascending, including 0.
    pub decel_grid: Vec<f64>,
    pub zone: ZoneConfig,
}

impl Default for ReactionConfig {
    fn default() -> Self {
        Self {
            threshold: DEFAULT_THRESHOLD,
            horizons: HORIZONS.to_vec(),
            decel_grid: DEFAULT_DECEL_GRID.to_vec(),
            zone: ZoneConfig::default(),
        }
    }
}

impl ReactionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!("threshold {} outside (0, 1)", self.threshold)));
        }
        if self.decel_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("decel grid must be strictly ascending".into()));
        }
        if !self.decel_grid.contains(&0.0) || self.decel_grid.iter().any(|&a| a < 0.0) {
            return Err(Error::Config("decel grid must be non-negative and include 0".into()));
        }
        Ok(())
    }
}

/// Outcome of the reaction search at one issue time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    pub t: f64,
    /// Smallest sufficient deceleration; `None` when no grid value suffices.
    pub decel: Option<f64>,
    /// Worst-case (over tracks) in-zone probability per horizon without reaction.
    pub violations: Vec<ViolationReport>,
}

/// Search the deceleration grid for the gentlest braking that keeps every predicted
/// pedestrian out of the re-projected zones at all horizons.
pub fn system_reaction(
    scene: &Scene,
    dists: &[PredictiveDistribution],
    config: &ReactionConfig,
    mc: &MonteCarloConfig,
    issue_time: f64,
) -> Result<Reaction> {
    config.validate()?;
    let ego = scene.ego_at(issue_time).ok_or(Error::OutOfRange {
        t: issue_time,
        start: scene.ego_start(),
        end: scene.ego_end(),
    })?;
    // Draws are shared across the grid, so feasibility is monotone in the threshold.
    let mut clouds: Vec<(f64, Vec<Point>)> = Vec::new();
    for d in dists {
        for &h in &config.horizons {
            let key = StreamKey {
                scene_id: &scene.id,
                track_id: &d.track_id,
                issue_time: d.issue_time,
                horizon: h,
            };
            clouds.push((h, representative_points(d.at(h)?, mc, &key)));
        }
    }
    let worst = |decel: f64| -> Vec<(f64, f64)> {
        let profile = SpeedProfile::braking(ego.v, decel);
        config
            .horizons
            .iter()
            .map(|&h| {
                let zone = profiled_zone(&scene.path, ego.s, &profile, h, config.zone);
                let p = clouds
                    .iter()
                    .filter(|(ch, _)| *ch == h)
                    .map(|(_, pts)| zone.fraction_inside(pts))
                    .fold(0.0, f64::max);
                (h, p)
            })
            .collect()
    };
    let violations = worst(0.0)
        .into_iter()
        .map(|(horizon, p)| ViolationReport {
            horizon,
            p_violation: p,
            violating: p >= config.threshold,
        })
        .collect();
    let decel = config
        .decel_grid
        .iter()
        .copied()
        .find(|&a| worst(a).iter().all(|&(_, p)| p < config.threshold));
    Ok(Reaction {
        t: issue_time,
        decel,
        violations,
    })
}
