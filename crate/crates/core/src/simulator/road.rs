//! Analytic road layouts with a road-aligned `(s, l)` frame and their semantic raster.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{PlannedPath, Point};
use crate::grid::{CellClass, SemanticGrid};

/// Half width of the two-lane carriageway.
pub const ROAD_HALF_WIDTH: f64 = 3.5;
pub const SIDEWALK_OUTER: f64 = 6.0;
pub const BUILDING_OUTER: f64 = 12.0;
pub const ZEBRA_HALF_LENGTH: f64 = 2.0;
pub const REFUGE_HALF_WIDTH: f64 = 0.75;
pub const REFUGE_HALF_LENGTH: f64 = 4.0;
/// Lateral offset of the ego lane center (right-hand traffic, driving towards +s).
pub const EGO_LANE: f64 = -1.75;
pub const SIDEWALK_CENTER: f64 = 4.75;
pub const GRID_RESOLUTION: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    StraightRoad,
    ZebraRoad,
    RefugeRoad,
}

impl Layout {
    pub const ALL: [Layout; 3] = [Layout::StraightRoad, Layout::ZebraRoad, Layout::RefugeRoad];

    pub fn name(self) -> &'static str {
        match self {
            Layout::StraightRoad => "straight_road",
            Layout::ZebraRoad => "zebra_road",
            Layout::RefugeRoad => "refuge_road",
        }
    }

    pub fn has_zebra(self) -> bool {
        self != Layout::StraightRoad
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Layout::ALL
            .into_iter()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::UnknownLayout(s.to_string()))
    }
}

/// Road centerline starting at the origin heading along +x.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Centerline {
    Straight,
    /// Circular arc; `left` turns counter-clockwise.
    Arc { radius: f64, left: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Road {
    pub layout: Layout,
    pub centerline: Centerline,
    pub length: f64,
    /// Road arc position of the crossing (zebra center when marked).
    pub crossing_s: f64,
}

fn left_arc_world(radius: f64, s: f64, l: f64) -> Point {
    let th = s / radius;
    Point::new((radius - l) * th.sin(), radius - (radius - l) * th.cos())
}

fn left_arc_frame(radius: f64, p: Point) -> (f64, f64) {
    let v = p - Point::new(0.0, radius);
    let th = v.x.atan2(-v.y);
    (radius * th, radius - v.norm())
}

impl Road {
    pub fn to_world(&self, s: f64, l: f64) -> Point {
        match self.centerline {
            Centerline::Straight => Point::new(s, l),
            Centerline::Arc { radius, left: true } => left_arc_world(radius, s, l),
            Centerline::Arc { radius, left: false } => {
                let p = left_arc_world(radius, s, -l);
                Point::new(p.x, -p.y)
            }
        }
    }

    /// Inverse of [`Road::to_world`] within half a turn of the start.
    pub fn to_frame(&self, p: Point) -> (f64, f64) {
        match self.centerline {
            Centerline::Straight => (p.x, p.y),
            Centerline::Arc { radius, left: true } => left_arc_frame(radius, p),
            Centerline::Arc { radius, left: false } => {
                let (s, l) = left_arc_frame(radius, Point::new(p.x, -p.y));
                (s, -l)
            }
        }
    }

    pub fn class_at_frame(&self, s: f64, l: f64) -> CellClass {
        let a = l.abs();
        let near_crossing = (s - self.crossing_s).abs();
        if a <= ROAD_HALF_WIDTH {
            if self.layout == Layout::RefugeRoad && a <= REFUGE_HALF_WIDTH && near_crossing <= REFUGE_HALF_LENGTH {
                CellClass::Refuge
            } else if self.layout.has_zebra() && near_crossing <= ZEBRA_HALF_LENGTH {
                CellClass::Zebra
            } else {
                CellClass::Road
            }
        } else if a <= SIDEWALK_OUTER {
            CellClass::Sidewalk
        } else if a <= BUILDING_OUTER {
            CellClass::Building
        } else {
            CellClass::Unknown
        }
    }

    pub fn class_at(&self, p: Point) -> CellClass {
        let (s, l) = self.to_frame(p);
        self.class_at_frame(s, l)
    }

    /// Raster of the road corridor `|l| <= BUILDING_OUTER` at [`GRID_RESOLUTION`].
    pub fn grid(&self) -> Result<SemanticGrid> {
        let mut pts = Vec::new();
        let steps = (self.length / 2.0).ceil() as usize;
        for k in 0..=steps {
            let s = self.length * k as f64 / steps as f64;
            pts.push(self.to_world(s, BUILDING_OUTER));
            pts.push(self.to_world(s, -BUILDING_OUTER));
        }
        let (lo, hi) = crate::geometry::bounding_box(&pts);
        let res = GRID_RESOLUTION;
        let origin = Point::new((lo.x / res).floor() * res - res, (lo.y / res).floor() * res - res);
        let width = ((hi.x - origin.x) / res).ceil() as usize + 1;
        let height = ((hi.y - origin.y) / res).ceil() as usize + 1;
        SemanticGrid::from_fn(width, height, res, origin, |p| self.class_at(p))
    }

    /// Polyline at lateral offset `l`, sampled every `step` meters of road arc length.
    pub fn lane_polyline(&self, l: f64, step: f64) -> Vec<Point> {
        let n = (self.length / step).ceil() as usize;
        (0..=n)
            .map(|k| self.to_world((k as f64 * step).min(self.length), l))
            .collect()
    }

    pub fn ego_path(&self) -> Result<PlannedPath> {
        PlannedPath::new(self.lane_polyline(EGO_LANE, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn road(centerline: Centerline, layout: Layout) -> Road {
        Road {
            layout,
            centerline,
            length: 150.0,
            crossing_s: 60.0,
        }
    }

    #[test]
    fn frame_round_trip() {
        for c in [
            Centerline::Straight,
            Centerline::Arc { radius: 120.0, left: true },
            Centerline::Arc { radius: 90.0, left: false },
        ] {
            let r = road(c, Layout::ZebraRoad);
            for &(s, l) in &[(0.0, 0.0), (10.0, -1.75), (75.0, 4.75), (140.0, -11.0)] {
                let (s2, l2) = r.to_frame(r.to_world(s, l));
                assert!((s - s2).abs() < 1e-9 && (l - l2).abs() < 1e-9, "{c:?} {s} {l}");
            }
        }
    }

    #[test]
    fn left_offset_is_left_of_travel() {
        for c in [Centerline::Straight, Centerline::Arc { radius: 100.0, left: false }] {
            let r = road(c, Layout::StraightRoad);
            let p = r.to_world(0.0, 2.0);
            assert!((p.y - 2.0).abs() < 1e-12 && p.x.abs() < 1e-12);
        }
    }

    #[test]
    fn cross_section_classes() {
        let r = road(Centerline::Straight, Layout::RefugeRoad);
        assert_eq!(r.class_at_frame(20.0, 0.0), CellClass::Road);
        assert_eq!(r.class_at_frame(61.0, -2.0), CellClass::Zebra);
        assert_eq!(r.class_at_frame(61.0, 0.5), CellClass::Refuge);
        assert_eq!(r.class_at_frame(20.0, -5.0), CellClass::Sidewalk);
        assert_eq!(r.class_at_frame(20.0, 8.0), CellClass::Building);
        assert_eq!(r.class_at_frame(20.0, 13.0), CellClass::Unknown);
        let plain = road(Centerline::Straight, Layout::StraightRoad);
        assert_eq!(plain.class_at_frame(60.0, 0.0), CellClass::Road);
    }

    #[test]
    fn raster_covers_road() {
        let r = road(Centerline::Arc { radius: 150.0, left: true }, Layout::ZebraRoad);
        let g = r.grid().unwrap();
        assert_eq!(g.class_at(r.to_world(30.0, -1.75)), CellClass::Road);
        assert_eq!(g.class_at(r.to_world(60.0, 1.0)), CellClass::Zebra);
        assert_eq!(g.class_at(r.to_world(100.0, 4.75)), CellClass::Sidewalk);
        assert!(g.count(CellClass::Zebra) > 0);
    }

    #[test]
    fn layout_names() {
        for l in Layout::ALL {
            assert_eq!(l.name().parse::<Layout>().unwrap(), l);
        }
        assert!(matches!("highway".parse::<Layout>(), Err(Error::UnknownLayout(_))));
    }
}
