//! Closed tours for several UAVs sharing a depot, minimizing the longest tour.

use serde::{Deserialize, Serialize};

use super::{CostModel, Route, RouteError, VehicleModel};
use crate::geodesy::initial_bearing;
use crate::graph::FlightGraph;
use crate::parser::Preference;

/// Largest target count solved exactly under `Auto`.
pub const EXACT_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiUavMethod {
    #[default]
    Auto,
    /// Held–Karp tours with an optimal partition. Up to 16 targets.
    Exact,
    /// Bearing sweep, 2-opt, then relocate/swap between tours.
    Heuristic,
}

#[derive(Debug, Clone)]
pub struct MultiUavQuery<'a> {
    pub graph: &'a FlightGraph,
    pub depot: String,
    pub targets: Vec<String>,
    pub fleet_size: usize,
    pub vehicle: VehicleModel,
    pub method: MultiUavMethod,
    pub reference_fuel_price: Option<f64>,
}

impl<'a> MultiUavQuery<'a> {
    pub fn new(
        graph: &'a FlightGraph,
        depot: &str,
        targets: Vec<String>,
        fleet_size: usize,
    ) -> Self {
        Self {
            graph,
            depot: depot.to_string(),
            targets,
            fleet_size,
            vehicle: VehicleModel::default(),
            method: MultiUavMethod::Auto,
            reference_fuel_price: None,
        }
    }
}

/// Distances over the local index space: 0 is the depot, 1..=n the targets.
struct Matrix {
    d: Vec<Vec<f64>>,
}

impl Matrix {
    fn tour_len(&self, tour: &[usize]) -> f64 {
        if tour.is_empty() {
            return 0.0;
        }
        let mut total = self.d[0][tour[0]] + self.d[*tour.last().unwrap()][0];
        for w in tour.windows(2) {
            total += self.d[w[0]][w[1]];
        }
        total
    }
}

/// Splits targets into `fleet_size` nonempty closed tours from the depot.
/// Tours come back ordered by their first target.
pub fn plan_multi_uav(q: &MultiUavQuery<'_>) -> Result<Vec<Route>, RouteError> {
    q.vehicle.validate()?;
    let g = q.graph;
    let depot = g
        .index_of(&q.depot)
        .ok_or_else(|| RouteError::UnknownNode(q.depot.clone()))?;
    let mut targets = Vec::with_capacity(q.targets.len());
    for id in &q.targets {
        let i = g
            .index_of(id)
            .ok_or_else(|| RouteError::UnknownNode(id.clone()))?;
        if i == depot || targets.contains(&i) {
            return Err(RouteError::InvalidQuery(format!(
                "target {id:?} repeated or equal to depot"
            )));
        }
        targets.push(i);
    }
    let n = targets.len();
    let k = q.fleet_size;
    if k == 0 || n < k {
        return Err(RouteError::InvalidQuery(format!(
            "{n} targets cannot fill {k} nonempty tours"
        )));
    }
    let local: Vec<usize> = std::iter::once(depot)
        .chain(targets.iter().copied())
        .collect();
    let mut d = vec![vec![0.0; n + 1]; n + 1];
    for a in 0..=n {
        for b in 0..=n {
            if a != b {
                d[a][b] = g.weight(local[a], local[b]).unwrap_or(f64::INFINITY);
            }
        }
    }
    let m = Matrix { d };
    let exact = match q.method {
        MultiUavMethod::Auto => n <= EXACT_LIMIT,
        MultiUavMethod::Exact => {
            if n > 16 {
                return Err(RouteError::InvalidQuery(format!(
                    "exact method limited to 16 targets, got {n}"
                )));
            }
            true
        }
        MultiUavMethod::Heuristic => false,
    };
    let tours = if exact {
        exact_partition(&m, n, k)
    } else {
        let bearings: Vec<f64> = targets
            .iter()
            .map(|&t| initial_bearing(&g.node(depot).location, &g.node(t).location).unwrap_or(0.0))
            .collect();
        heuristic_partition(&m, &bearings, k)
    };
    if tours.iter().any(|t| !m.tour_len(t).is_finite()) {
        return Err(RouteError::Infeasible {
            binding: "a tour needs a leg beyond the range limit".into(),
        });
    }
    let model = CostModel::new(
        g,
        Preference::Shortest,
        1.0,
        0.5,
        q.vehicle,
        q.reference_fuel_price,
    );
    let mut routes: Vec<Route> = tours
        .iter()
        .map(|t| {
            let path: Vec<usize> = std::iter::once(depot)
                .chain(t.iter().map(|&i| local[i]))
                .chain(std::iter::once(depot))
                .collect();
            model.build_route(&path, false)
        })
        .collect();
    routes.sort_by(|a, b| a.nodes[1].cmp(&b.nodes[1]));
    Ok(routes)
}

/// Held–Karp closed tour lengths and orders for every target subset.
fn held_karp(m: &Matrix, n: usize) -> (Vec<f64>, Vec<Vec<usize>>) {
    let full = 1usize << n;
    let mut dp = vec![vec![f64::INFINITY; n]; full];
    let mut parent = vec![vec![usize::MAX; n]; full];
    for j in 0..n {
        dp[1 << j][j] = m.d[0][j + 1];
    }
    for s in 1..full {
        for j in 0..n {
            if s & (1 << j) == 0 || !dp[s][j].is_finite() {
                continue;
            }
            let base = dp[s][j];
            for x in 0..n {
                if s & (1 << x) != 0 {
                    continue;
                }
                let t = s | (1 << x);
                let c = base + m.d[j + 1][x + 1];
                if c < dp[t][x] {
                    dp[t][x] = c;
                    parent[t][x] = j;
                }
            }
        }
    }
    let mut len = vec![0.0; full];
    let mut order = vec![Vec::new(); full];
    for s in 1..full {
        let mut best = (f64::INFINITY, usize::MAX);
        for j in 0..n {
            if s & (1 << j) != 0 {
                let c = dp[s][j] + m.d[j + 1][0];
                if c < best.0 {
                    best = (c, j);
                }
            }
        }
        len[s] = best.0;
        if best.1 == usize::MAX {
            continue;
        }
        let mut seq = Vec::new();
        let (mut cur, mut j) = (s, best.1);
        while j != usize::MAX {
            seq.push(j + 1);
            let p = parent[cur][j];
            cur &= !(1 << j);
            j = p;
        }
        seq.reverse();
        order[s] = seq;
    }
    (len, order)
}

fn exact_partition(m: &Matrix, n: usize, k: usize) -> Vec<Vec<usize>> {
    let (tour, order) = held_karp(m, n);
    let full = 1usize << n;
    // best[c][s]: min over partitions of s into c nonempty tours of the longest
    let mut best = vec![tour.clone()];
    let mut choice: Vec<Vec<usize>> = vec![vec![0; full]];
    for c in 1..k {
        let prev = &best[c - 1];
        let mut cur = vec![f64::INFINITY; full];
        let mut pick = vec![0usize; full];
        for s in 1..full {
            if (s.count_ones() as usize) < c + 1 {
                continue;
            }
            let low = s & s.wrapping_neg();
            // t is the part holding the lowest target; the rest is split c ways
            let rest_bits = s & !low;
            let mut sub = rest_bits;
            loop {
                let t = sub | low;
                let r = s & !t;
                if r != 0 {
                    let v = tour[t].max(prev[r]);
                    if v < cur[s] {
                        cur[s] = v;
                        pick[s] = t;
                    }
                }
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & rest_bits;
            }
        }
        best.push(cur);
        choice.push(pick);
    }
    let mut parts = Vec::with_capacity(k);
    let mut s = full - 1;
    for c in (1..k).rev() {
        let t = choice[c][s];
        parts.push(order[t].clone());
        s &= !t;
    }
    parts.push(order[s].clone());
    parts
}

fn two_opt(m: &Matrix, tour: &mut [usize]) {
    let n = tour.len();
    if n < 3 {
        return;
    }
    loop {
        let mut improved = false;
        for i in 0..n - 1 {
            for j in i + 1..n {
                let a = if i == 0 { 0 } else { tour[i - 1] };
                let b = tour[i];
                let c = tour[j];
                let e = if j + 1 == n { 0 } else { tour[j + 1] };
                let delta = m.d[a][c] + m.d[b][e] - m.d[a][b] - m.d[c][e];
                if delta < -1e-9 {
                    tour[i..=j].reverse();
                    improved = true;
                }
            }
        }
        if !improved {
            return;
        }
    }
}

fn nearest_neighbor(m: &Matrix, mut pool: Vec<usize>) -> Vec<usize> {
    let mut tour = Vec::with_capacity(pool.len());
    let mut at = 0;
    while !pool.is_empty() {
        let (pos, _) = pool
            .iter()
            .enumerate()
            .min_by(|(_, &x), (_, &y)| m.d[at][x].total_cmp(&m.d[at][y]).then(x.cmp(&y)))
            .unwrap();
        at = pool.remove(pos);
        tour.push(at);
    }
    tour
}

/// (longest, total) over tours; smaller is better.
fn score(m: &Matrix, tours: &[Vec<usize>]) -> (f64, f64) {
    let lens: Vec<f64> = tours.iter().map(|t| m.tour_len(t)).collect();
    (lens.iter().copied().fold(0.0, f64::max), lens.iter().sum())
}

fn better_pair(new: (f64, f64), old: (f64, f64)) -> bool {
    let (nmax, nsum) = (new.0.max(new.1), new.0 + new.1);
    let (omax, osum) = (old.0.max(old.1), old.0 + old.1);
    nmax < omax - 1e-9 || (nmax <= omax + 1e-12 && nsum < osum - 1e-9)
}

fn best_insertion(m: &Matrix, tour: &[usize], x: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for pos in 0..=tour.len() {
        let a = if pos == 0 { 0 } else { tour[pos - 1] };
        let b = if pos == tour.len() { 0 } else { tour[pos] };
        let delta = m.d[a][x] + m.d[x][b] - m.d[a][b];
        if delta < best.1 {
            best = (pos, delta);
        }
    }
    best
}

/// Relocate and swap moves between tour pairs until no pair improves.
fn improve(m: &Matrix, tours: &mut [Vec<usize>]) {
    for _ in 0..10_000 {
        let mut improved = false;
        for a in 0..tours.len() {
            for b in 0..tours.len() {
                if a == b {
                    continue;
                }
                let old = (m.tour_len(&tours[a]), m.tour_len(&tours[b]));
                // relocate one target from a into b
                if tours[a].len() > 1 {
                    for i in 0..tours[a].len() {
                        let mut na = tours[a].clone();
                        let x = na.remove(i);
                        let (pos, _) = best_insertion(m, &tours[b], x);
                        let mut nb = tours[b].clone();
                        nb.insert(pos, x);
                        two_opt(m, &mut na);
                        two_opt(m, &mut nb);
                        if better_pair((m.tour_len(&na), m.tour_len(&nb)), old) {
                            tours[a] = na;
                            tours[b] = nb;
                            improved = true;
                            break;
                        }
                    }
                }
                if improved {
                    break;
                }
                if a < b {
                    let old = (m.tour_len(&tours[a]), m.tour_len(&tours[b]));
                    'swap: for i in 0..tours[a].len() {
                        for j in 0..tours[b].len() {
                            let mut na = tours[a].clone();
                            let mut nb = tours[b].clone();
                            std::mem::swap(&mut na[i], &mut nb[j]);
                            two_opt(m, &mut na);
                            two_opt(m, &mut nb);
                            if better_pair((m.tour_len(&na), m.tour_len(&nb)), old) {
                                tours[a] = na;
                                tours[b] = nb;
                                improved = true;
                                break 'swap;
                            }
                        }
                    }
                }
                if improved {
                    break;
                }
            }
            if improved {
                break;
            }
        }
        if !improved {
            return;
        }
    }
}

fn heuristic_partition(m: &Matrix, bearings: &[f64], k: usize) -> Vec<Vec<usize>> {
    let n = bearings.len();
    let mut sorted: Vec<usize> = (1..=n).collect();
    sorted.sort_by(|&x, &y| bearings[x - 1].total_cmp(&bearings[y - 1]).then(x.cmp(&y)));
    let mut best: Option<(Vec<Vec<usize>>, (f64, f64))> = None;
    for r in 0..n {
        let rotated: Vec<usize> = sorted[r..].iter().chain(&sorted[..r]).copied().collect();
        let mut tours: Vec<Vec<usize>> = (0..k)
            .map(|c| {
                let lo = c * n / k;
                let hi = (c + 1) * n / k;
                let mut t = nearest_neighbor(m, rotated[lo..hi].to_vec());
                two_opt(m, &mut t);
                t
            })
            .collect();
        improve(m, &mut tours);
        let s = score(m, &tours);
        let wins = best
            .as_ref()
            .is_none_or(|(_, b)| s.0 < b.0 - 1e-9 || (s.0 <= b.0 + 1e-9 && s.1 < b.1 - 1e-9));
        if wins {
            best = Some((tours, s));
        }
    }
    best.map(|(t, _)| t).unwrap_or_default()
}
