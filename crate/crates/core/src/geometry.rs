//! Planar geometry: points, planned paths with arc-length parameterization,
//! path-aligned strips and a boundary-inclusive winding-number test.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance below which a point counts as lying on a polygon edge.
pub const BOUNDARY_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3-D cross product.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Left-pointing unit normal of a direction.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }

    pub fn normalized(self) -> Point {
        let n = self.norm();
        if n > 0.0 {
            self * (1.0 / n)
        } else {
            self
        }
    }

    pub fn from_angle(theta: f64) -> Point {
        Point::new(theta.cos(), theta.sin())
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Point::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Rotation by `angle` followed by translation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RigidTransform {
    pub angle: f64,
    pub offset: Point,
}

impl RigidTransform {
    pub fn new(angle: f64, offset: Point) -> Self {
        Self { angle, offset }
    }

    pub fn rotate(&self, v: Point) -> Point {
        let (s, c) = self.angle.sin_cos();
        Point::new(c * v.x - s * v.y, s * v.x + c * v.y)
    }

    pub fn apply(&self, p: Point) -> Point {
        self.rotate(p) + self.offset
    }

    /// Covariance transform R C Rᵀ.
    pub fn apply_cov(&self, cov: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let (s, c) = self.angle.sin_cos();
        let r = [[c, -s], [s, c]];
        let mut rc = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                rc[i][j] = r[i][0] * cov[0][j] + r[i][1] * cov[1][j];
            }
        }
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = rc[i][0] * r[j][0] + rc[i][1] * r[j][1];
            }
        }
        // keep exact symmetry
        let off = 0.5 * (out[0][1] + out[1][0]);
        out[0][1] = off;
        out[1][0] = off;
        out
    }
}

/// Closest-point projection onto a path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    /// Arc length of the foot point.
    pub s: f64,
    pub foot: Point,
    /// Euclidean distance to the foot point.
    pub distance: f64,
    /// Signed offset, positive on the left of the travel direction.
    pub lateral: f64,
}

/// Polyline the ego vehicle intends to follow, parameterized by arc length.
#[derive(Clone, Debug, PartialEq)]
pub struct PlannedPath {
    vertices: Vec<Point>,
    cum: Vec<f64>,
}

impl PlannedPath {
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::invariant("path.vertices", "at least 2 vertices required"));
        }
        let mut cum = Vec::with_capacity(vertices.len());
        cum.push(0.0);
        for (i, w) in vertices.windows(2).enumerate() {
            if !w[0].is_finite() || !w[1].is_finite() {
                return Err(Error::invariant("path.vertices", "non-finite vertex"));
            }
            let len = w[0].dist(w[1]);
            if len <= 0.0 {
                return Err(Error::invariant(
                    "path.vertices",
                    format!("vertices {} and {} coincide", i, i + 1),
                ));
            }
            let next = cum[i] + len;
            if next <= cum[i] {
                return Err(Error::invariant("path.vertices", "arc length not increasing"));
            }
            cum.push(next);
        }
        Ok(Self { vertices, cum })
    }

    /// Straight two-vertex path.
    pub fn straight(from: Point, to: Point) -> Result<Self> {
        Self::new(vec![from, to])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Cumulative arc length at each vertex.
    pub fn arc_lengths(&self) -> &[f64] {
        &self.cum
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().expect("validated path")
    }

    fn segment_at(&self, s: f64) -> usize {
        let n = self.vertices.len() - 1;
        match self.cum.partition_point(|&c| c <= s) {
            0 => 0,
            k => (k - 1).min(n - 1),
        }
    }

    /// Point at arc length `s`, clamped to the path ends.
    pub fn point_at(&self, s: f64) -> Point {
        let s = s.clamp(0.0, self.length());
        let i = self.segment_at(s);
        let (a, b) = (self.vertices[i], self.vertices[i + 1]);
        let seg = self.cum[i + 1] - self.cum[i];
        let u = ((s - self.cum[i]) / seg).clamp(0.0, 1.0);
        a + (b - a) * u
    }

    /// Unit tangent at arc length `s` (segment direction; vertices take the outgoing segment).
    pub fn tangent_at(&self, s: f64) -> Point {
        let i = self.segment_at(s.clamp(0.0, self.length()));
        (self.vertices[i + 1] - self.vertices[i]).normalized()
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        let t = self.tangent_at(s);
        t.y.atan2(t.x)
    }

    /// Closest point on the path. Ties resolve to the smallest arc length.
    pub fn project(&self, p: Point) -> Projection {
        let mut best = Projection {
            s: 0.0,
            foot: self.vertices[0],
            distance: f64::INFINITY,
            lateral: 0.0,
        };
        for i in 0..self.vertices.len() - 1 {
            let a = self.vertices[i];
            let d = self.vertices[i + 1] - a;
            let len2 = d.dot(d);
            let u = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
            let foot = a + d * u;
            let dist = p.dist(foot);
            if dist < best.distance {
                let side = d.cross(p - a);
                best = Projection {
                    s: self.cum[i] + u * (self.cum[i + 1] - self.cum[i]),
                    foot,
                    distance: dist,
                    lateral: if side >= 0.0 { dist } else { -dist },
                };
            }
        }
        best
    }

    /// Centerline vertices of the sub-path `[s0, s1]` (clamped), including both ends.
    pub fn slice(&self, s0: f64, s1: f64) -> Vec<(f64, Point)> {
        let l = self.length();
        let (s0, s1) = (s0.clamp(0.0, l), s1.clamp(0.0, l));
        let mut out = vec![(s0, self.point_at(s0))];
        for (i, &c) in self.cum.iter().enumerate() {
            if c > s0 && c < s1 {
                out.push((c, self.vertices[i]));
            }
        }
        if s1 > s0 {
            out.push((s1, self.point_at(s1)));
        }
        out
    }

    /// Boundary polygon of the path-aligned strip `[s0, s1] × [-half_width, half_width]`.
    ///
    /// Interior vertices use mitered offsets so each side stays parallel to its segment.
    /// A zero-length strip degenerates to the cross-section segment at `s0`.
    pub fn strip_polygon(&self, s0: f64, s1: f64, half_width: f64) -> Vec<Point> {
        let center = self.slice(s0, s1);
        let mut left = Vec::with_capacity(center.len());
        let mut right = Vec::with_capacity(center.len());
        let last = center.len() - 1;
        for (k, &(s, p)) in center.iter().enumerate() {
            let normal = if k == 0 || k == last {
                self.tangent_at(if k == last && last > 0 { s - 1e-12 } else { s }).perp()
            } else {
                let seg_in = self.segment_at(s - 1e-9);
                let seg_out = self.segment_at(s);
                let n_in = (self.vertices[seg_in + 1] - self.vertices[seg_in]).normalized().perp();
                let n_out = (self.vertices[seg_out + 1] - self.vertices[seg_out]).normalized().perp();
                let bis = (n_in + n_out).normalized();
                let c = bis.dot(n_in).max(0.2);
                bis * (1.0 / c)
            };
            left.push(p + normal * half_width);
            right.push(p - normal * half_width);
        }
        right.reverse();
        left.extend(right);
        left
    }
}

/// Axis-aligned bounding box `(min, max)` of a point set.
pub fn bounding_box(points: &[Point]) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

fn dist_to_segment(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let u = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.dist(a + d * u)
}

/// Winding-number point-in-polygon test. Points on the boundary count as inside.
pub fn point_in_polygon(p: Point, polygon: &[Point]) -> bool {
    let n = polygon.len();
    if n == 0 {
        return false;
    }
    let mut winding = 0i32;
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        if dist_to_segment(p, a, b) <= BOUNDARY_EPS {
            return true;
        }
        let is_left = (b - a).cross(p - a);
        if a.y <= p.y {
            if b.y > p.y && is_left > 0.0 {
                winding += 1;
            }
        } else if b.y <= p.y && is_left < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

/// Signed shoelace area (positive for counter-clockwise order).
pub fn polygon_area(polygon: &[Point]) -> f64 {
    let n = polygon.len();
    (0..n)
        .map(|i| polygon[i].cross(polygon[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

/// Wrap an angle in degrees to `[0, 360)`.
pub fn wrap_degrees(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l_path() -> PlannedPath {
        PlannedPath::new(vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(10.0, 10.0),
        ])
        .unwrap()
    }

    #[test]
    fn rejects_short_or_repeated_paths() {
        assert!(PlannedPath::new(vec![Point::new(0.0, 0.0)]).is_err());
        assert!(PlannedPath::new(vec![Point::new(1.0, 1.0), Point::new(1.0, 1.0)]).is_err());
    }

    #[test]
    fn point_at_and_projection() {
        let p = l_path();
        assert_eq!(p.length(), 20.0);
        assert_eq!(p.point_at(15.0), Point::new(10.0, 5.0));
        assert_eq!(p.point_at(-3.0), Point::new(0.0, 0.0));
        let pr = p.project(Point::new(4.0, 2.0));
        assert!((pr.s - 4.0).abs() < 1e-12);
        assert!((pr.lateral - 2.0).abs() < 1e-12);
        let pr = p.project(Point::new(12.0, 5.0));
        assert!((pr.s - 15.0).abs() < 1e-12);
        assert!((pr.lateral + 2.0).abs() < 1e-12);
    }

    #[test]
    fn winding_number_counts_boundary_inside() {
        let sq = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        assert!(point_in_polygon(Point::new(0.5, 0.5), &sq));
        assert!(point_in_polygon(Point::new(1.0, 0.5), &sq));
        assert!(point_in_polygon(Point::new(0.0, 0.0), &sq));
        assert!(!point_in_polygon(Point::new(1.0 + 1e-6, 0.5), &sq));
        // clockwise order gives the same answer
        let cw: Vec<Point> = sq.iter().rev().copied().collect();
        assert!(point_in_polygon(Point::new(0.5, 0.5), &cw));
        assert!(!point_in_polygon(Point::new(-0.5, 0.5), &cw));
    }

    #[test]
    fn mitered_strip_area_is_width_times_length() {
        let p = l_path();
        let poly = p.strip_polygon(2.0, 18.0, 1.5);
        assert!((polygon_area(&poly).abs() - 3.0 * 16.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_strip_is_cross_section() {
        let p = l_path();
        let poly = p.strip_polygon(5.0, 5.0, 1.5);
        assert_eq!(poly.len(), 2);
        assert!(point_in_polygon(Point::new(5.0, 1.0), &poly));
        assert!(!point_in_polygon(Point::new(5.1, 1.0), &poly));
    }

    #[test]
    fn covariance_rotation_preserves_trace() {
        let t = RigidTransform::new(0.7, Point::new(3.0, -1.0));
        let c = t.apply_cov([[2.0, 0.3], [0.3, 1.0]]);
        assert!((c[0][0] + c[1][1] - 3.0).abs() < 1e-12);
        assert_eq!(c[0][1], c[1][0]);
    }

    #[test]
    fn wrap_degrees_range() {
        assert_eq!(wrap_degrees(370.0), 10.0);
        assert_eq!(wrap_degrees(-90.0), 270.0);
        assert!(wrap_degrees(-1e-18) < 360.0);
    }
}
