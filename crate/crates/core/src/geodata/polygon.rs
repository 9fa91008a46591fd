//! Spherical polygons and segment/polygon crossing.
//!
//! Polygon edges are great-circle arcs. Crossings are computed in a
//! gnomonic projection centred on the segment midpoint: great circles map
//! to straight lines there, so the projected segment and edges are exact
//! and the result does not depend on where the segment is split.

use serde::{Deserialize, Serialize};

use crate::geodesy::great_circle_distance;
use crate::GeoPoint;

type V3 = [f64; 3];

fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: V3) -> f64 {
    dot(a, a).sqrt()
}

fn scale(a: V3, k: f64) -> V3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

fn unit(a: V3) -> V3 {
    scale(a, 1.0 / norm(a))
}

fn angle(a: V3, b: V3) -> f64 {
    norm(cross(a, b)).atan2(dot(a, b))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolygonError {
    #[error("polygon needs at least 3 distinct vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
    #[error("polygon spans more than a hemisphere")]
    TooLarge,
}

/// Closed polygon with great-circle edges. The closing vertex is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolygon", into = "RawPolygon")]
pub struct Polygon {
    vertices: Vec<GeoPoint>,
    #[serde(skip)]
    cap_center: V3,
    #[serde(skip)]
    cap_radius: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPolygon {
    vertices: Vec<GeoPoint>,
}

impl TryFrom<RawPolygon> for Polygon {
    type Error = PolygonError;

    fn try_from(raw: RawPolygon) -> Result<Self, Self::Error> {
        Polygon::new(raw.vertices)
    }
}

impl From<Polygon> for RawPolygon {
    fn from(p: Polygon) -> Self {
        RawPolygon {
            vertices: p.vertices,
        }
    }
}

impl Polygon {
    /// Builds a polygon from a ring. A repeated closing vertex and
    /// consecutive duplicates are dropped.
    pub fn new(ring: Vec<GeoPoint>) -> Result<Self, PolygonError> {
        let mut vertices: Vec<GeoPoint> = Vec::with_capacity(ring.len());
        for v in ring {
            if vertices.last() != Some(&v) {
                vertices.push(v);
            }
        }
        while vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(PolygonError::TooFewVertices(vertices.len()));
        }
        let vecs: Vec<V3> = vertices.iter().map(|v| v.to_unit_vector()).collect();
        let sum = vecs.iter().fold([0.0; 3], |acc, v| {
            [acc[0] + v[0], acc[1] + v[1], acc[2] + v[2]]
        });
        if norm(sum) < 1e-9 {
            return Err(PolygonError::TooLarge);
        }
        let center = unit(sum);
        let radius = vecs.iter().map(|v| angle(center, *v)).fold(0.0, f64::max);
        if radius >= std::f64::consts::FRAC_PI_2 * 0.9 {
            return Err(PolygonError::TooLarge);
        }
        let poly = Self {
            vertices,
            cap_center: center,
            cap_radius: radius,
        };
        poly.check_simple()?;
        Ok(poly)
    }

    pub fn vertices(&self) -> &[GeoPoint] {
        &self.vertices
    }

    /// Bounding box as (min_lat, min_lon, max_lat, max_lon). Ignores the antimeridian.
    pub fn bbox(&self) -> (f64, f64, f64, f64) {
        self.vertices.iter().fold(
            (
                f64::INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::NEG_INFINITY,
            ),
            |(a, b, c, d), v| {
                (
                    a.min(v.lat()),
                    b.min(v.lon()),
                    c.max(v.lat()),
                    d.max(v.lon()),
                )
            },
        )
    }

    fn check_simple(&self) -> Result<(), PolygonError> {
        let frame = Gnomonic::centered(self.cap_center);
        let pts: Vec<(f64, f64)> = self
            .vertices
            .iter()
            .map(|v| frame.project(v.to_unit_vector()).unwrap_or((0.0, 0.0)))
            .collect();
        let n = pts.len();
        for i in 0..n {
            for j in (i + 1)..n {
                // adjacent edges share a vertex
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                    return Err(PolygonError::SelfIntersecting(i, j));
                }
            }
        }
        Ok(())
    }

    /// Point-in-polygon test (even-odd rule on great-circle edges).
    pub fn contains(&self, p: &GeoPoint) -> bool {
        let v = p.to_unit_vector();
        if angle(v, self.cap_center) > self.cap_radius + 1e-12 {
            return false;
        }
        let frame = Gnomonic::centered(self.cap_center);
        let Some((px, py)) = frame.project(v) else {
            return false;
        };
        let pts: Vec<(f64, f64)> = self
            .vertices
            .iter()
            .filter_map(|w| frame.project(w.to_unit_vector()))
            .collect();
        let mut inside = false;
        let n = pts.len();
        for i in 0..n {
            let (x1, y1) = pts[i];
            let (x2, y2) = pts[(i + 1) % n];
            if (y1 > py) != (y2 > py) {
                let x = x1 + (py - y1) * (x2 - x1) / (y2 - y1);
                if x > px {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Sub-intervals of the arc from `a` to `b`, as fractions of its
    /// length, that lie inside the polygon.
    pub fn arc_inside_intervals(&self, a: &GeoPoint, b: &GeoPoint) -> Vec<(f64, f64)> {
        let va = a.to_unit_vector();
        let vb = b.to_unit_vector();
        let omega = angle(va, vb);
        if omega < 1e-13 {
            return Vec::new();
        }
        if min_angle_to_arc(self.cap_center, va, vb) > self.cap_radius + 1e-9 {
            return Vec::new();
        }
        let mid = unit([va[0] + vb[0], va[1] + vb[1], va[2] + vb[2]]);
        let along = unit({
            let k = dot(vb, mid);
            [vb[0] - k * mid[0], vb[1] - k * mid[1], vb[2] - k * mid[2]]
        });
        let frame = Gnomonic {
            center: mid,
            e1: along,
            e2: cross(mid, along),
        };
        let mut pts = Vec::with_capacity(self.vertices.len());
        for w in &self.vertices {
            match frame.project(w.to_unit_vector()) {
                Some(p) => pts.push(p),
                // vertices beyond the projection horizon; never the case for
                // legs and zones well under a quarter circumference
                None => return Vec::new(),
            }
        }
        let half = (omega / 2.0).tan();
        // the projected arc runs along the x axis from -half to +half
        let mut crossings: Vec<f64> = Vec::new();
        let n = pts.len();
        for i in 0..n {
            let (x1, y1) = pts[i];
            let (x2, y2) = pts[(i + 1) % n];
            if (y1 > 0.0) != (y2 > 0.0) {
                crossings.push(x1 + (0.0 - y1) * (x2 - x1) / (y2 - y1));
            }
        }
        crossings.sort_by(|p, q| p.total_cmp(q));
        let mut inside = crossings.iter().filter(|&&x| x <= -half).count() % 2 == 1;
        let mut start = -half;
        let mut spans = Vec::new();
        for &x in crossings.iter().filter(|&&x| x > -half && x < half) {
            if inside {
                spans.push((start, x));
            }
            inside = !inside;
            start = x;
        }
        if inside {
            spans.push((start, half));
        }
        let to_fraction = |x: f64| ((x.atan() + omega / 2.0) / omega).clamp(0.0, 1.0);
        spans
            .into_iter()
            .map(|(s, e)| (to_fraction(s), to_fraction(e)))
            .filter(|(s, e)| e > s)
            .collect()
    }
}

struct Gnomonic {
    center: V3,
    e1: V3,
    e2: V3,
}

impl Gnomonic {
    fn centered(center: V3) -> Self {
        let seed = if center[2].abs() < 0.9 {
            [0.0, 0.0, 1.0]
        } else {
            [1.0, 0.0, 0.0]
        };
        let e1 = unit(cross(seed, center));
        let e2 = cross(center, e1);
        Self { center, e1, e2 }
    }

    fn project(&self, v: V3) -> Option<(f64, f64)> {
        let t = dot(v, self.center);
        if t <= 1e-6 {
            return None;
        }
        Some((dot(v, self.e1) / t, dot(v, self.e2) / t))
    }
}

fn min_angle_to_arc(c: V3, a: V3, b: V3) -> f64 {
    let n = cross(a, b);
    let nn = norm(n);
    let endpoints = angle(c, a).min(angle(c, b));
    if nn < 1e-15 {
        return endpoints;
    }
    let n = scale(n, 1.0 / nn);
    let k = dot(c, n);
    let proj = [c[0] - k * n[0], c[1] - k * n[1], c[2] - k * n[2]];
    if norm(proj) < 1e-15 {
        return endpoints;
    }
    let proj = unit(proj);
    let omega = angle(a, b);
    if (angle(a, proj) + angle(proj, b) - omega).abs() < 1e-12 {
        k.abs().min(1.0).asin()
    } else {
        endpoints
    }
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn segments_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Length in meters of the arc `a`→`b` covered by the given fraction intervals.
pub(crate) fn covered_length(a: &GeoPoint, b: &GeoPoint, intervals: &[(f64, f64)]) -> f64 {
    let total: f64 = intervals.iter().map(|(s, e)| e - s).sum();
    if total == 0.0 {
        return 0.0;
    }
    total * great_circle_distance(a, b)
}

/// Merges overlapping intervals.
pub(crate) fn union(mut intervals: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    intervals.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
    for (s, e) in intervals {
        match out.last_mut() {
            Some(last) if s <= last.1 => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

pub(crate) fn intersect(intervals: &[(f64, f64)], lo: f64, hi: f64) -> Vec<(f64, f64)> {
    intervals
        .iter()
        .map(|&(s, e)| (s.max(lo), e.min(hi)))
        .filter(|(s, e)| e > s)
        .collect()
}

/// Regular polygon approximating a circle of `radius_m` around `center`.
pub fn circle(center: &GeoPoint, radius_m: f64, sides: usize) -> Result<Polygon, PolygonError> {
    let ring = (0..sides)
        .map(|i| {
            crate::geodesy::destination_point(center, radius_m, 360.0 * i as f64 / sides as f64)
                .expect("finite circle parameters")
        })
        .collect();
    Polygon::new(ring)
}
