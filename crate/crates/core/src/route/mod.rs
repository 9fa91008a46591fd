//! Route selection over the flight graph.

mod multi;

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::graph::{FlightGraph, FlightNode};
use crate::parser::{Constraints, NodeType, Preference};

pub use multi::{plan_multi_uav, MultiUavMethod, MultiUavQuery};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RouteError {
    #[error("unknown node {0:?}")]
    UnknownNode(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("no route: {binding}")]
    Infeasible { binding: String },
    #[error("node {0:?} has no fuel price")]
    MissingPrice(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleModel {
    pub tank_l: f64,
    pub burn_km_per_l: f64,
    pub cruise_speed_mps: f64,
    pub per_stop_overhead_l: f64,
}

impl Default for VehicleModel {
    fn default() -> Self {
        Self {
            tank_l: 80.0,
            burn_km_per_l: 10.95,
            cruise_speed_mps: 40.0,
            per_stop_overhead_l: 10.0,
        }
    }
}

/// How the fuel overhead bears on the per-leg range cap.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeMode {
    /// tank × burn.
    #[default]
    FullTank,
    /// (tank − overhead) × burn.
    OverheadAdjusted,
}

impl VehicleModel {
    pub fn validate(&self) -> Result<(), RouteError> {
        let ok = [
            self.tank_l,
            self.burn_km_per_l,
            self.cruise_speed_mps,
            self.per_stop_overhead_l,
        ]
        .iter()
        .all(|v| v.is_finite() && *v > 0.0);
        if ok && self.per_stop_overhead_l < self.tank_l {
            Ok(())
        } else {
            Err(RouteError::InvalidQuery(format!(
                "invalid vehicle model {self:?}"
            )))
        }
    }

    /// Per-leg range cap in meters.
    pub fn max_leg_m(&self, mode: RangeMode) -> f64 {
        let usable = match mode {
            RangeMode::FullTank => self.tank_l,
            RangeMode::OverheadAdjusted => self.tank_l - self.per_stop_overhead_l,
        };
        usable * self.burn_km_per_l * 1000.0
    }

    /// Liters for a leg: cruise burn plus the per-operation overhead.
    pub fn leg_liters(&self, distance_m: f64) -> f64 {
        distance_m / 1000.0 / self.burn_km_per_l + self.per_stop_overhead_l
    }

    pub fn leg_duration_s(&self, distance_m: f64) -> f64 {
        distance_m / self.cruise_speed_mps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FuelCost {
    pub liters: f64,
    pub cost: f64,
}

/// Fuel for a leg, bought at the departure node's price.
pub fn leg_fuel_cost(
    distance_m: f64,
    vehicle: &VehicleModel,
    departure: &FlightNode,
) -> Result<FuelCost, RouteError> {
    let price = departure
        .attrs
        .fuel_price
        .ok_or_else(|| RouteError::MissingPrice(departure.id.clone()))?;
    let liters = vehicle.leg_liters(distance_m);
    Ok(FuelCost {
        liters,
        cost: liters * price,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub from: String,
    pub to: String,
    pub distance_m: f64,
    pub fuel_l: f64,
    pub fuel_cost: f64,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub nodes: Vec<String>,
    pub legs: Vec<Leg>,
    pub total_distance_m: f64,
    pub total_fuel_l: f64,
    pub total_cost: f64,
    pub total_duration_s: f64,
    pub label: Preference,
    pub fallback_direct: bool,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alternative {
    pub labels: Vec<Preference>,
    pub route: Route,
}

#[derive(Debug, Clone)]
pub struct RouteQuery<'a> {
    pub graph: &'a FlightGraph,
    pub start: String,
    pub end: String,
    /// Node types every route must visit, once each.
    pub required_types: Vec<NodeType>,
    pub alpha: f64,
    pub constraints: Constraints,
    pub preference: Preference,
    pub vehicle: VehicleModel,
    /// Weight of normalized cost against normalized distance for `balanced`.
    pub balance_weight: f64,
    /// Price applied at nodes without their own; defaults to the graph median.
    pub reference_fuel_price: Option<f64>,
}

impl<'a> RouteQuery<'a> {
    pub fn new(graph: &'a FlightGraph, start: &str, end: &str) -> Self {
        Self {
            graph,
            start: start.to_string(),
            end: end.to_string(),
            required_types: Vec::new(),
            alpha: 0.5,
            constraints: Constraints::default(),
            preference: Preference::Balanced,
            vehicle: VehicleModel::default(),
            balance_weight: 0.5,
            reference_fuel_price: None,
        }
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Per-query leg cost ℒ and node reward ℛ.
pub(crate) struct CostModel<'a> {
    graph: &'a FlightGraph,
    preference: Preference,
    alpha: f64,
    balance_weight: f64,
    vehicle: VehicleModel,
    prices: Vec<f64>,
    cost_range: (f64, f64),
    dist_range: (f64, f64),
    reward: Vec<f64>,
}

fn span((lo, hi): (f64, f64), v: f64) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.0
    }
}

impl<'a> CostModel<'a> {
    pub(crate) fn new(
        graph: &'a FlightGraph,
        preference: Preference,
        alpha: f64,
        balance_weight: f64,
        vehicle: VehicleModel,
        reference_price: Option<f64>,
    ) -> Self {
        let reference = reference_price
            .or_else(|| {
                median(
                    graph
                        .nodes()
                        .iter()
                        .filter_map(|n| n.attrs.fuel_price)
                        .collect(),
                )
            })
            .unwrap_or(1.0);
        let prices: Vec<f64> = graph
            .nodes()
            .iter()
            .map(|n| n.attrs.fuel_price.unwrap_or(reference))
            .collect();
        let mut cost_range = (f64::INFINITY, f64::NEG_INFINITY);
        let mut dist_range = (f64::INFINITY, f64::NEG_INFINITY);
        for e in graph.edges() {
            for from in [e.i, e.j] {
                let c = vehicle.leg_liters(e.w) * prices[from];
                cost_range = (cost_range.0.min(c), cost_range.1.max(c));
            }
            dist_range = (dist_range.0.min(e.w), dist_range.1.max(e.w));
        }
        let quality: Vec<Option<f64>> = graph
            .nodes()
            .iter()
            .map(|n| match (n.attrs.rating, n.attrs.review_count) {
                (Some(r), Some(c)) => Some(r / 5.0 * (1.0 + c as f64).log2()),
                _ => None,
            })
            .collect();
        let qs: Vec<f64> = quality.iter().flatten().copied().collect();
        let q_range = (
            qs.iter().copied().fold(f64::INFINITY, f64::min),
            qs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        );
        let reward = quality
            .iter()
            .map(|q| q.map_or(0.0, |q| span(q_range, q)))
            .collect();
        Self {
            graph,
            preference,
            alpha,
            balance_weight,
            vehicle,
            prices,
            cost_range,
            dist_range,
            reward,
        }
    }

    /// ℒ for the directed leg i → j of length `d`.
    pub(crate) fn leg_cost(&self, i: usize, d: f64) -> f64 {
        let cost = self.vehicle.leg_liters(d) * self.prices[i];
        match self.preference {
            Preference::Cheapest => cost,
            Preference::Shortest => d,
            Preference::Fastest => self.vehicle.leg_duration_s(d),
            Preference::Balanced => {
                self.balance_weight * span(self.cost_range, cost)
                    + (1.0 - self.balance_weight) * span(self.dist_range, d)
            }
        }
    }

    pub(crate) fn reward(&self, j: usize) -> f64 {
        self.reward[j]
    }

    /// α·ℒ(i, j) − (1 − α)·ℛ(j).
    pub(crate) fn step(&self, i: usize, j: usize, d: f64) -> f64 {
        self.alpha * self.leg_cost(i, d) - (1.0 - self.alpha) * self.reward(j)
    }

    pub(crate) fn build_route(&self, path: &[usize], fallback_direct: bool) -> Route {
        let g = self.graph;
        let mut legs = Vec::with_capacity(path.len().saturating_sub(1));
        let mut objective = 0.0;
        for w in path.windows(2) {
            let d = crate::geodesy::great_circle_distance(
                &g.node(w[0]).location,
                &g.node(w[1]).location,
            );
            let fuel_l = self.vehicle.leg_liters(d);
            objective += self.step(w[0], w[1], d);
            legs.push(Leg {
                from: g.node(w[0]).id.clone(),
                to: g.node(w[1]).id.clone(),
                distance_m: d,
                fuel_l,
                fuel_cost: fuel_l * self.prices[w[0]],
                duration_s: self.vehicle.leg_duration_s(d),
            });
        }
        Route {
            nodes: path.iter().map(|&i| g.node(i).id.clone()).collect(),
            total_distance_m: legs.iter().map(|l| l.distance_m).sum(),
            total_fuel_l: legs.iter().map(|l| l.fuel_l).sum(),
            total_cost: legs.iter().map(|l| l.fuel_cost).sum(),
            total_duration_s: legs.iter().map(|l| l.duration_s).sum(),
            legs,
            label: self.preference,
            fallback_direct,
            objective,
        }
    }
}

/// Σ α·ℒ(vᵢ, vᵢ₊₁) − (1 − α)·ℛ(vᵢ₊₁) for the query's preference.
pub fn route_objective(route: &Route, query: &RouteQuery<'_>) -> Result<f64, RouteError> {
    let model = CostModel::new(
        query.graph,
        query.preference,
        query.alpha,
        query.balance_weight,
        query.vehicle,
        query.reference_fuel_price,
    );
    let idx = route
        .nodes
        .iter()
        .map(|id| {
            query
                .graph
                .index_of(id)
                .ok_or_else(|| RouteError::UnknownNode(id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(idx
        .windows(2)
        .zip(&route.legs)
        .map(|(w, leg)| model.step(w[0], w[1], leg.distance_m))
        .sum())
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    cost: f64,
    node: usize,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Planner<'q, 'g> {
    q: &'q RouteQuery<'g>,
    model: CostModel<'g>,
    s: usize,
    t: usize,
    transit: Vec<bool>,
    max_leg_m: f64,
}

#[derive(Clone, Copy)]
enum Weighting {
    Objective,
    Distance,
}

impl<'q, 'g> Planner<'q, 'g> {
    fn edge(&self, i: usize, j: usize) -> Option<f64> {
        self.q.graph.weight(i, j).filter(|d| *d <= self.max_leg_m)
    }

    fn weigh(&self, how: Weighting, i: usize, j: usize, d: f64) -> f64 {
        match how {
            Weighting::Objective => self.model.step(i, j, d),
            Weighting::Distance => d,
        }
    }

    /// Best start → τ₁ → … → τₘ → end walk, with transit airports allowed
    /// anywhere in between. Layer k holds nodes reached after visiting k types.
    fn layered(&self, order: &[&[usize]], how: Weighting) -> Option<Vec<usize>> {
        let g = self.q.graph;
        let n = g.len();
        let layers = order.len() + 1;
        let mut dist = vec![vec![f64::INFINITY; n]; layers];
        // (layer, node) of the predecessor
        let mut prev: Vec<Vec<Option<(usize, usize)>>> = vec![vec![None; n]; layers];
        dist[0][self.s] = 0.0;
        for k in 0..layers {
            if k > 0 {
                for &v in order[k - 1] {
                    for u in 0..n {
                        let du = dist[k - 1][u];
                        if !du.is_finite() {
                            continue;
                        }
                        if let Some(d) = self.edge(u, v) {
                            let c = du + self.weigh(how, u, v, d);
                            if c < dist[k][v] {
                                dist[k][v] = c;
                                prev[k][v] = Some((k - 1, u));
                            }
                        }
                    }
                }
            }
            // relax through transit nodes within the layer
            let mut heap: BinaryHeap<HeapItem> = (0..n)
                .filter(|&v| dist[k][v].is_finite())
                .map(|v| HeapItem {
                    cost: dist[k][v],
                    node: v,
                })
                .collect();
            let mut done = vec![false; n];
            while let Some(HeapItem { cost, node: u }) = heap.pop() {
                if done[u] || cost > dist[k][u] {
                    continue;
                }
                done[u] = true;
                for &(v, d) in g.neighbors(u) {
                    if !self.transit[v] || d > self.max_leg_m {
                        continue;
                    }
                    let c = cost + self.weigh(how, u, v, d);
                    if c < dist[k][v] {
                        dist[k][v] = c;
                        prev[k][v] = Some((k, u));
                        heap.push(HeapItem { cost: c, node: v });
                    }
                }
            }
        }
        let last = layers - 1;
        let mut best: Option<(f64, usize)> = None;
        for u in 0..n {
            if !dist[last][u].is_finite() || u == self.t {
                continue;
            }
            if let Some(d) = self.edge(u, self.t) {
                let c = dist[last][u] + self.weigh(how, u, self.t, d);
                if best.is_none_or(|(b, _)| c < b) {
                    best = Some((c, u));
                }
            }
        }
        let (_, mut u) = best?;
        let mut path = vec![self.t, u];
        let mut k = last;
        while let Some((pk, pu)) = prev[k][u] {
            path.push(pu);
            k = pk;
            u = pu;
        }
        path.reverse();
        Some(path)
    }

    /// Lower bound on route length for a type order: the straight chain.
    fn chain_lower_bound(&self, order: &[&[usize]]) -> f64 {
        let g = self.q.graph;
        let dist = |a: usize, b: usize| {
            crate::geodesy::great_circle_distance(&g.node(a).location, &g.node(b).location)
        };
        let mut frontier: Vec<(usize, f64)> = vec![(self.s, 0.0)];
        for layer in order {
            frontier = layer
                .iter()
                .map(|&v| {
                    let best = frontier
                        .iter()
                        .map(|&(u, c)| c + dist(u, v))
                        .fold(f64::INFINITY, f64::min);
                    (v, best)
                })
                .collect();
        }
        frontier
            .iter()
            .map(|&(u, c)| c + dist(u, self.t))
            .fold(f64::INFINITY, f64::min)
    }

    fn admissible_bound(&self, lb_m: f64) -> bool {
        let c = &self.q.constraints;
        let v = &self.q.vehicle;
        c.max_total_km.is_none_or(|m| lb_m <= m * 1000.0)
            && c.max_duration_s.is_none_or(|m| v.leg_duration_s(lb_m) <= m)
    }

    fn satisfies(&self, r: &Route) -> bool {
        let c = &self.q.constraints;
        c.max_total_km
            .is_none_or(|m| r.total_distance_m <= m * 1000.0 + 1e-6)
            && c.max_duration_s
                .is_none_or(|m| r.total_duration_s <= m + 1e-9)
            && c.max_cost.is_none_or(|m| r.total_cost <= m + 1e-9)
            && r.legs.iter().all(|l| l.distance_m <= self.max_leg_m)
    }
}

fn permutations<T: Clone>(items: &[T]) -> Vec<Vec<T>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head.clone());
            out.push(tail);
        }
    }
    out
}

fn better(a: &Route, b: &Route) -> bool {
    match a.objective.total_cmp(&b.objective) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.nodes < b.nodes,
    }
}

/// Plans one route: enumerates subsets of the required types by size, then
/// each visit order, and searches the matching subgraph. The first subset
/// producing a feasible candidate wins; with none, the direct leg is
/// returned flagged as a fallback.
pub fn plan_route(q: &RouteQuery<'_>) -> Result<Route, RouteError> {
    q.vehicle.validate()?;
    if !(0.0..=1.0).contains(&q.alpha) {
        return Err(RouteError::InvalidQuery(format!(
            "alpha {} outside [0, 1]",
            q.alpha
        )));
    }
    if !(0.0..=1.0).contains(&q.balance_weight) {
        return Err(RouteError::InvalidQuery(
            "balance weight outside [0, 1]".into(),
        ));
    }
    let g = q.graph;
    let s = g
        .index_of(&q.start)
        .ok_or_else(|| RouteError::UnknownNode(q.start.clone()))?;
    let t = g
        .index_of(&q.end)
        .ok_or_else(|| RouteError::UnknownNode(q.end.clone()))?;
    let required: Vec<NodeType> = q
        .required_types
        .iter()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if s == t && required.is_empty() {
        return Err(RouteError::InvalidQuery(
            "start equals end with nothing to visit".into(),
        ));
    }
    let model = CostModel::new(
        g,
        q.preference,
        q.alpha,
        q.balance_weight,
        q.vehicle,
        q.reference_fuel_price,
    );
    let transit: Vec<bool> = g
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| {
            i != s
                && i != t
                && n.node_type == NodeType::RefuelAirport
                && (q.preference != Preference::Cheapest || n.attrs.fuel_price.is_some())
        })
        .collect();
    let max_leg_m = q
        .constraints
        .max_leg_km
        .map_or(f64::INFINITY, |km| km * 1000.0);
    let planner = Planner {
        q,
        model,
        s,
        t,
        transit,
        max_leg_m,
    };
    let members: Vec<Vec<usize>> = required
        .iter()
        .map(|ty| {
            (0..g.len())
                .filter(|&i| i != s && i != t && g.node(i).node_type == *ty)
                .collect()
        })
        .collect();

    let m = required.len();
    let mut subsets: Vec<Vec<usize>> = (0u32..(1 << m))
        .map(|mask| (0..m).filter(|b| mask & (1 << b) != 0).collect())
        .collect();
    subsets.sort_by(|a: &Vec<usize>, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    for subset in subsets {
        // mission completion: every required type visited
        if subset.len() != m {
            continue;
        }
        let mut omega: Vec<Route> = Vec::new();
        for perm in permutations(&subset) {
            let order: Vec<&[usize]> = perm.iter().map(|&k| members[k].as_slice()).collect();
            if order.iter().any(|l| l.is_empty()) {
                continue;
            }
            if !planner.admissible_bound(planner.chain_lower_bound(&order)) {
                continue;
            }
            for how in [Weighting::Objective, Weighting::Distance] {
                if let Some(path) = planner.layered(&order, how) {
                    let r = planner.model.build_route(&path, false);
                    if planner.satisfies(&r) {
                        omega.push(r);
                    }
                }
            }
        }
        if let Some(best) = omega
            .into_iter()
            .reduce(|a, b| if better(&b, &a) { b } else { a })
        {
            return Ok(best);
        }
    }
    if s == t {
        return Err(RouteError::Infeasible {
            binding: "no closed route visits every required type".into(),
        });
    }
    match g.weight(s, t) {
        Some(d) if d <= max_leg_m => Ok(planner.model.build_route(&[s, t], true)),
        Some(d) => Err(RouteError::Infeasible {
            binding: format!("direct leg {d:.0} m exceeds max_leg_km {:.0} m", max_leg_m),
        }),
        None => Err(RouteError::Infeasible {
            binding: format!(
                "direct leg {:.0} m exceeds range limit {:.0} m",
                crate::geodesy::great_circle_distance(&g.node(s).location, &g.node(t).location),
                g.range_limit().unwrap_or(f64::INFINITY)
            ),
        }),
    }
}

/// One best route per preference, merged where routes coincide.
pub fn enumerate_alternatives(q: &RouteQuery<'_>) -> Vec<Alternative> {
    let mut out: Vec<Alternative> = Vec::new();
    for pref in Preference::ALL {
        let mut sub = q.clone();
        sub.preference = pref;
        let Ok(route) = plan_route(&sub) else {
            continue;
        };
        match out.iter_mut().find(|a| a.route.nodes == route.nodes) {
            Some(a) => a.labels.push(pref),
            None => out.push(Alternative {
                labels: vec![pref],
                route,
            }),
        }
    }
    out
}
