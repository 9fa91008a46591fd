//! Unit-sphere vector helpers.

use nelv_core::GeoPoint;

pub fn unit(p: &GeoPoint) -> [f64; 3] {
    let (la, lo) = (p.lat().to_radians(), p.lon().to_radians());
    [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
}

pub fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn angle(a: [f64; 3], b: [f64; 3]) -> f64 {
    let c = cross(a, b);
    dot(c, c).sqrt().atan2(dot(a, b))
}

/// Unit normal of the great circle through `p` on course `heading`.
pub fn axis_normal(p: &GeoPoint, heading: f64) -> [f64; 3] {
    let (la, lo) = (p.lat().to_radians(), p.lon().to_radians());
    let north = [-la.sin() * lo.cos(), -la.sin() * lo.sin(), la.cos()];
    let east = [-lo.sin(), lo.cos(), 0.0];
    let t = heading.to_radians();
    let dir = [0, 1, 2].map(|i| north[i] * t.cos() + east[i] * t.sin());
    cross(unit(p), dir)
}
