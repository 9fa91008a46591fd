//! Exhaustive route and tour oracles.

use nelv_core::graph::{FlightGraph, FlightNode, NodeAttrs};
use nelv_core::parser::{NodeType, Preference};
use nelv_core::GeoPoint;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::haversine;

pub const BURN: f64 = 10.95;
pub const OVERHEAD: f64 = 10.0;

pub fn node(id: &str, lat: f64, lon: f64, ty: NodeType, price: Option<f64>) -> FlightNode {
    FlightNode {
        id: id.into(),
        location: GeoPoint::new(lat, lon).unwrap(),
        node_type: ty,
        attrs: NodeAttrs {
            name: id.into(),
            fuel_price: price,
            ..Default::default()
        },
    }
}

/// Start S, end T, a few airports (some unpriced) and up to two POI types
/// scattered over roughly 1 500 km.
pub fn random_nodes(rng: &mut ChaCha8Rng, max_nodes: usize, poi_types: usize) -> Vec<FlightNode> {
    let pos = |rng: &mut ChaCha8Rng| (rng.gen_range(35.0..45.0), rng.gen_range(-95.0..-80.0));
    let (a, b) = (pos(rng), pos(rng));
    let mut nodes = vec![
        node(
            "S",
            a.0,
            a.1,
            NodeType::Takeoff,
            Some(rng.gen_range(0.7..2.8)),
        ),
        node(
            "T",
            b.0,
            b.1,
            NodeType::Landing,
            Some(rng.gen_range(0.7..2.8)),
        ),
    ];
    let total = rng.gen_range(4..=max_nodes);
    for i in 2..total {
        let p = pos(rng);
        let k = rng.gen_range(0..3 + 2 * poi_types);
        let (id, ty, price) = if k < 3 || poi_types == 0 {
            let price = if rng.gen_bool(0.75) {
                Some(rng.gen_range(0.7..2.8))
            } else {
                None
            };
            (format!("A{i:02}"), NodeType::RefuelAirport, price)
        } else {
            let cat = if (k - 3) / 2 == 0 {
                "pharmacy"
            } else {
                "supermarket"
            };
            (format!("P{i:02}"), NodeType::Poi(cat.into()), None)
        };
        nodes.push(node(&id, p.0, p.1, ty, price));
    }
    nodes
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Minimum summed leg cost from S to T visiting one node of each required
/// type, in any order, with refuel airports as free intermediates. Leg cost
/// is fuel cost at the departure price (cheapest) or distance (shortest).
pub fn min_cost(g: &FlightGraph, required: &[NodeType], pref: Preference) -> Option<f64> {
    let nodes = g.nodes();
    let n = nodes.len();
    let s = g.index_of("S").unwrap();
    let t = g.index_of("T").unwrap();
    let reference = median(nodes.iter().filter_map(|x| x.attrs.fuel_price).collect());
    let limit = g.range_limit().unwrap_or(f64::INFINITY);
    let mut w = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (a, b) = (&nodes[i].location, &nodes[j].location);
            let d = haversine(a.lat(), a.lon(), b.lat(), b.lon());
            if d > limit * (1.0 + 1e-12) {
                continue;
            }
            w[i][j] = match pref {
                Preference::Cheapest => {
                    (d / 1000.0 / BURN + OVERHEAD) * nodes[i].attrs.fuel_price.unwrap_or(reference)
                }
                Preference::Shortest => d,
                _ => unimplemented!(),
            };
        }
    }
    // Floyd–Warshall with intermediates restricted to refuel airports
    let mut f = w.clone();
    for k in 0..n {
        let transit = k != s
            && k != t
            && nodes[k].node_type == NodeType::RefuelAirport
            && (pref != Preference::Cheapest || nodes[k].attrs.fuel_price.is_some());
        if !transit {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                if f[i][k] + f[k][j] < f[i][j] {
                    f[i][j] = f[i][k] + f[k][j];
                }
            }
        }
    }
    let members: Vec<Vec<usize>> = required
        .iter()
        .map(|ty| {
            (0..n)
                .filter(|&i| i != s && i != t && nodes[i].node_type == *ty)
                .collect()
        })
        .collect();
    let mut best = f64::INFINITY;
    for order in permutations(&(0..required.len()).collect::<Vec<_>>()) {
        // every choice of one member per type
        let mut choice = vec![0usize; order.len()];
        'choices: loop {
            if order.iter().any(|&k| members[k].is_empty()) {
                break;
            }
            let mut at = s;
            let mut total = 0.0;
            for (pos, &k) in order.iter().enumerate() {
                let v = members[k][choice[pos]];
                total += f[at][v];
                at = v;
            }
            total += f[at][t];
            best = best.min(total);
            for pos in 0..order.len() {
                choice[pos] += 1;
                if choice[pos] < members[order[pos]].len() {
                    continue 'choices;
                }
                choice[pos] = 0;
            }
            break;
        }
    }
    best.is_finite().then_some(best)
}

/// Exact min-max over every assignment of targets to `k` nonempty closed
/// tours, each tour solved by trying every order.
pub fn min_max_tours(d: &[Vec<f64>], k: usize) -> f64 {
    let n = d.len() - 1;
    let tsp = |mask: usize| -> f64 {
        let items: Vec<usize> = (0..n)
            .filter(|b| mask & (1 << b) != 0)
            .map(|b| b + 1)
            .collect();
        permutations(&items)
            .iter()
            .map(|p| {
                let mut len = d[0][p[0]] + d[*p.last().unwrap()][0];
                for w in p.windows(2) {
                    len += d[w[0]][w[1]];
                }
                len
            })
            .fold(f64::INFINITY, f64::min)
    };
    let tours: Vec<f64> = (0..1usize << n)
        .map(|m| if m == 0 { 0.0 } else { tsp(m) })
        .collect();
    let mut best = f64::INFINITY;
    let mut label = vec![0usize; n];
    loop {
        let mut masks = vec![0usize; k];
        for (b, &l) in label.iter().enumerate() {
            masks[l] |= 1 << b;
        }
        if masks.iter().all(|&m| m != 0) {
            best = best.min(masks.iter().map(|&m| tours[m]).fold(0.0, f64::max));
        }
        let mut pos = 0;
        while pos < n {
            label[pos] += 1;
            if label[pos] < k {
                break;
            }
            label[pos] = 0;
            pos += 1;
        }
        if pos == n {
            return best;
        }
    }
}
