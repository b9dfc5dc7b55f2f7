//! Driving-corridor geometry and time-to-collision.
//!
//! Distances are measured along the planned path from the ego reference point to the
//! foot point of the pedestrian's closest-point projection onto the path.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PlannedPath, Point};
use crate::scene::{EgoState, Scene};

/// Half of the 3 m driving corridor.
pub const DEFAULT_HALF_WIDTH: f64 = 1.5;

/// Below this speed the TTC is treated as infinite.
pub const MIN_TTC_SPEED: f64 = 0.1;

/// Corridor runs with fewer samples than this (i.e. shorter than 2 dt) are dropped.
const MIN_EVENT_SAMPLES: usize = 3;

/// Histogram bin width of the gap distribution, seconds.
pub const GAP_BIN_WIDTH: f64 = 0.1;

/// Time to reach the pedestrian's foot point at the current speed.
///
/// Infinite when the ego is (almost) standing or the foot point lies behind it.
pub fn ttc(ego: &EgoState, ped: Point, path: &PlannedPath) -> f64 {
    ttc_from(ego.s, ego.v, ped, path)
}

pub(crate) fn ttc_from(ego_s: f64, ego_v: f64, ped: Point, path: &PlannedPath) -> f64 {
    if ego_v < MIN_TTC_SPEED {
        return f64::INFINITY;
    }
    let d = path.project(ped).s - ego_s;
    if d < 0.0 {
        f64::INFINITY
    } else {
        d / ego_v
    }
}

/// Whether `ped` is within `half_width` of the path.
pub fn in_corridor(ped: Point, path: &PlannedPath, half_width: f64) -> bool {
    path.project(ped).distance <= half_width
}

/// One traversal of the driving corridor by a pedestrian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorridorEvent {
    pub track_id: String,
    pub t_enter: f64,
    pub t_exit: f64,
    /// Smallest TTC while inside the corridor.
    pub min_time_gap: f64,
    pub ttc_at_enter: f64,
    pub ttc_at_exit: f64,
}

/// Maximal in-corridor intervals of every track, sampled at the scene rate.
///
/// Entry is the first in-corridor sample and exit the last one; samples without an ego
/// state end the current interval.
pub fn corridor_events(scene: &Scene, half_width: f64) -> Vec<CorridorEvent> {
    let mut events = Vec::new();
    for track in &scene.tracks {
        // (t, ttc) of the current run
        let mut run: Vec<(f64, f64)> = Vec::new();
        let mut flush = |run: &mut Vec<(f64, f64)>| {
            if run.len() >= MIN_EVENT_SAMPLES {
                let (t_enter, ttc_at_enter) = run[0];
                let (t_exit, ttc_at_exit) = run[run.len() - 1];
                let min_time_gap = run.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
                events.push(CorridorEvent {
                    track_id: track.id.clone(),
                    t_enter,
                    t_exit,
                    min_time_gap,
                    ttc_at_enter,
                    ttc_at_exit,
                });
            }
            run.clear();
        };
        for st in &track.states {
            match scene.ego_at(st.t) {
                Some(ego) if in_corridor(st.pos, &scene.path, half_width) => {
                    run.push((st.t, ttc(ego, st.pos, &scene.path)));
                }
                _ => flush(&mut run),
            }
        }
        flush(&mut run);
    }
    events
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// Summary of minimum time gaps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    /// Number of finite gaps summarized.
    pub n: usize,
    /// Events with an infinite gap (pedestrian only behind a moving or standing ego).
    pub n_infinite: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    /// Right-open bins `[lo, hi)` of width [`GAP_BIN_WIDTH`] starting at 0.
    pub histogram: Vec<HistogramBin>,
    /// `(gap, fraction ≤ gap)` at each sorted gap.
    pub cdf: Vec<(f64, f64)>,
}

impl GapSummary {
    /// Bin with the most occurrences (first one on ties).
    pub fn mode_bin(&self) -> &HistogramBin {
        let mut best = &self.histogram[0];
        for b in &self.histogram {
            if b.count > best.count {
                best = b;
            }
        }
        best
    }
}

/// Linear-interpolation quantile of sorted data (`h = (n-1)·p`).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bin index of `gap` in right-open bins of width [`GAP_BIN_WIDTH`].
pub fn gap_bin(gap: f64) -> usize {
    // 2.3 / 0.1 evaluates to 22.999…; nudge so exact bin edges fall into the upper bin.
    (gap / GAP_BIN_WIDTH + 1e-9).floor().max(0.0) as usize
}

/// Quartiles, histogram and empirical CDF of the finite minimum time gaps.
pub fn gap_distribution(events: &[CorridorEvent]) -> Result<GapSummary> {
    if events.is_empty() {
        return Err(Error::EmptyInput("no corridor events"));
    }
    let mut gaps: Vec<f64> = events
        .iter()
        .map(|e| e.min_time_gap)
        .filter(|g| g.is_finite())
        .collect();
    let n_infinite = events.len() - gaps.len();
    if gaps.is_empty() {
        return Err(Error::EmptyInput("no finite minimum time gaps"));
    }
    gaps.sort_by(f64::total_cmp);
    let n = gaps.len();
    let top = gap_bin(gaps[n - 1]);
    let mut histogram: Vec<HistogramBin> = (0..=top)
        .map(|k| HistogramBin {
            lo: k as f64 / 10.0,
            hi: (k + 1) as f64 / 10.0,
            count: 0,
        })
        .collect();
    for &g in &gaps {
        histogram[gap_bin(g)].count += 1;
    }
    let cdf = gaps
        .iter()
        .enumerate()
        .map(|(i, &g)| (g, (i + 1) as f64 / n as f64))
        .collect();
    Ok(GapSummary {
        n,
        n_infinite,
        q1: quantile_sorted(&gaps, 0.25),
        median: quantile_sorted(&gaps, 0.5),
        q3: quantile_sorted(&gaps, 0.75),
        histogram,
        cdf,
    })
}

/// Factual TTC of one track at every time step with an ego state.
pub fn ttc_series(scene: &Scene, track_id: &str) -> Result<Vec<(f64, f64)>> {
    let track = scene
        .track(track_id)
        .ok_or_else(|| Error::UnknownTrack(track_id.to_string()))?;
    Ok(track
        .states
        .iter()
        .filter_map(|st| scene.ego_at(st.t).map(|e| (st.t, ttc(e, st.pos, &scene.path))))
        .collect())
}

/// TTC the track would see had the ego kept the speed it had at `freeze_time`.
///
/// Returns `(t, ttc)` for every track state at or after `freeze_time`.
pub fn counterfactual_ttc(scene: &Scene, track_id: &str, freeze_time: f64) -> Result<Vec<(f64, f64)>> {
    let ego = scene.ego_at(freeze_time).ok_or(Error::OutOfRange {
        t: freeze_time,
        start: scene.ego_start(),
        end: scene.ego_end(),
    })?;
    let track = scene
        .track(track_id)
        .ok_or_else(|| Error::UnknownTrack(track_id.to_string()))?;
    Ok(track
        .states
        .iter()
        .filter(|st| st.t >= freeze_time - 1e-9)
        .map(|st| {
            let s = ego.s + ego.v * (st.t - freeze_time);
            (st.t, ttc_from(s, ego.v, st.pos, &scene.path))
        })
        .collect())
}
