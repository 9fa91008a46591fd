//! A single circular restricted zone and a lattice shortest-path oracle
//! for the detour around it.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use nelv_core::geodata::{circle, AirspaceZone, DataCatalog};
use nelv_core::path::Segment;
use nelv_core::{GeoPoint, Waypoint3D};

use super::haversine;

fn wp(lat: f64, lon: f64, alt: f64) -> Waypoint3D {
    Waypoint3D::new(GeoPoint::new(lat, lon).unwrap(), alt).unwrap()
}

pub fn polyline_len(seg: &Segment) -> f64 {
    let pts: Vec<&Waypoint3D> = std::iter::once(&seg.from).chain(&seg.waypoints).chain([&seg.to]).collect();
    pts.windows(2)
        .map(|w| haversine(w[0].point.lat(), w[0].point.lon(), w[1].point.lat(), w[1].point.lon()))
        .sum()
}

pub const CENTER: (f64, f64) = (40.0, -86.5);
pub const RADIUS: f64 = 10_000.0;

pub fn blocked_catalog() -> DataCatalog {
    let zone = AirspaceZone {
        id: "R1".into(),
        boundary: circle(&GeoPoint::new(CENTER.0, CENTER.1).unwrap(), RADIUS, 64).unwrap(),
        floor_alt: 0.0,
        ceiling_alt: 20_000.0,
        class: "restricted".into(),
    };
    DataCatalog::new(vec![], vec![], vec![zone], vec![], None).unwrap()
}

pub fn blocked_leg() -> (Waypoint3D, Waypoint3D) {
    (wp(40.0, -87.0, 150.0), wp(40.0, -86.0, 150.0))
}

/// Shortest path around the zone on a 200 × 200 lattice with 16-neighbour
/// moves, cells blocked by the true circle.
pub fn grid_detour_oracle(a: (f64, f64), b: (f64, f64)) -> f64 {
    const N: usize = 200;
    let (lat0, lat1) = (39.75, 40.25);
    let (lon0, lon1) = (-87.0, -86.0);
    let at = |i: usize, j: usize| {
        (lat0 + (lat1 - lat0) * i as f64 / (N - 1) as f64, lon0 + (lon1 - lon0) * j as f64 / (N - 1) as f64)
    };
    let free = |p: (f64, f64)| haversine(p.0, p.1, CENTER.0, CENTER.1) > RADIUS;
    let snap = |p: (f64, f64)| {
        let i = (((p.0 - lat0) / (lat1 - lat0)) * (N - 1) as f64).round() as usize;
        let j = (((p.1 - lon0) / (lon1 - lon0)) * (N - 1) as f64).round() as usize;
        (i, j)
    };
    let moves: Vec<(i64, i64)> = (-2i64..=2)
        .flat_map(|di| (-2i64..=2).map(move |dj| (di, dj)))
        // primitive steps only: 8 neighbours plus knight moves
        .filter(|&(di, dj)| (di, dj) != (0, 0) && (di.abs() == 1 || dj.abs() == 1))
        .collect();
    let (s, t) = (snap(a), snap(b));
    let mut dist: HashMap<(usize, usize), f64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(s, 0.0);
    heap.push(Reverse(((0.0f64).to_bits(), s)));
    while let Some(Reverse((bits, u))) = heap.pop() {
        let du = f64::from_bits(bits);
        if du > dist[&u] {
            continue;
        }
        if u == t {
            break;
        }
        for &(di, dj) in &moves {
            let (vi, vj) = (u.0 as i64 + di, u.1 as i64 + dj);
            if vi < 0 || vj < 0 || vi >= N as i64 || vj >= N as i64 {
                continue;
            }
            let v = (vi as usize, vj as usize);
            let (pu, pv) = (at(u.0, u.1), at(v.0, v.1));
            if !(0..=8).all(|k| {
                let f = k as f64 / 8.0;
                free((pu.0 + f * (pv.0 - pu.0), pu.1 + f * (pv.1 - pu.1)))
            }) {
                continue;
            }
            let dv = du + haversine(pu.0, pu.1, pv.0, pv.1);
            if dist.get(&v).is_none_or(|&old| dv < old) {
                dist.insert(v, dv);
                heap.push(Reverse((dv.to_bits(), v)));
            }
        }
    }
    let (ps, pt) = (at(s.0, s.1), at(t.0, t.1));
    dist[&t] + haversine(a.0, a.1, ps.0, ps.1) + haversine(pt.0, pt.1, b.0, b.1)
}
