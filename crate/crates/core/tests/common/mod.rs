//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::path::PathBuf;

pub const R: f64 = 6.371e6;

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn haversine(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * R * h.sqrt().min(1.0).asin()
}

fn to_vec(lat: f64, lon: f64) -> [f64; 3] {
    let (p, l) = (lat.to_radians(), lon.to_radians());
    [p.cos() * l.cos(), p.cos() * l.sin(), p.sin()]
}

/// Point at fraction `f` along the great circle (vector slerp).
pub fn along(lat1: f64, lon1: f64, lat2: f64, lon2: f64, f: f64) -> (f64, f64) {
    let a = to_vec(lat1, lon1);
    let b = to_vec(lat2, lon2);
    let d = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2])
        .clamp(-1.0, 1.0)
        .acos();
    if d < 1e-15 {
        return (lat1, lon1);
    }
    let (wa, wb) = (((1.0 - f) * d).sin() / d.sin(), (f * d).sin() / d.sin());
    let v = [
        wa * a[0] + wb * b[0],
        wa * a[1] + wb * b[1],
        wa * a[2] + wb * b[2],
    ];
    let lat = v[2].atan2((v[0] * v[0] + v[1] * v[1]).sqrt()).to_degrees();
    let lon = v[1].atan2(v[0]).to_degrees();
    (lat, lon)
}

pub fn bearing(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dl = (lon2 - lon1).to_radians();
    let y = dl.sin() * p2.cos();
    let x = p1.cos() * p2.sin() - p1.sin() * p2.cos() * dl.cos();
    y.atan2(x).to_degrees()
}

/// Winding-number containment using bearings to each vertex.
pub fn inside(lat: f64, lon: f64, ring: &[(f64, f64)]) -> bool {
    let mut total = 0.0;
    for i in 0..ring.len() {
        let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
        let mut d = bearing(lat, lon, b.0, b.1) - bearing(lat, lon, a.0, a.1);
        while d > 180.0 {
            d -= 360.0;
        }
        while d < -180.0 {
            d += 360.0;
        }
        total += d;
    }
    total.abs() > 180.0
}

/// Length inside `ring` by midpoint sampling at roughly `step` meters.
pub fn sampled_inside_length(a: (f64, f64), b: (f64, f64), ring: &[(f64, f64)], step: f64) -> f64 {
    let len = haversine(a.0, a.1, b.0, b.1);
    let n = (len / step).ceil().max(1.0) as usize;
    let mut total = 0.0;
    for k in 0..n {
        let f = (k as f64 + 0.5) / n as f64;
        let (lat, lon) = along(a.0, a.1, b.0, b.1, f);
        if inside(lat, lon, ring) {
            total += len / n as f64;
        }
    }
    total
}

/// Weather integral by 1 m midpoint sampling.
pub fn weather_oracle(
    grid: &nelv_core::geodata::WeatherGrid,
    band: nelv_core::geodata::AltitudeBand,
    a: (f64, f64),
    b: (f64, f64),
) -> f64 {
    let len = haversine(a.0, a.1, b.0, b.1);
    let n = len.ceil() as usize;
    let mut total = 0.0;
    for k in 0..n {
        let f = (k as f64 + 0.5) / n as f64;
        let (lat, lon) = along(a.0, a.1, b.0, b.1, f);
        let (r, c) = grid
            .cell_of(&nelv_core::GeoPoint::new(lat, lon).unwrap())
            .unwrap();
        total += grid.risk_at(band, r, c).unwrap() * len / n as f64;
    }
    total
}

pub mod detour;
pub mod routing;
pub mod sphere;
