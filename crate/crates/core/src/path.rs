//! Waypoint refinement of route legs by particle swarm search.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geodata::{AltitudeBand, DataCatalog, WeatherError};
use crate::geodesy::{
    destination_point, great_circle_distance, initial_bearing, intermediate_point, GeoError,
};
use crate::graph::FlightGraph;
use crate::parser::NodeType;
use crate::pso::{run_pso, Bounds, PsoConfig, PsoError};
use crate::route::Route;
use crate::Waypoint3D;

/// 30 000 ft.
pub const LONG_RANGE_CRUISE_M: f64 = 9_144.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PathError {
    #[error("invalid path configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Weather(#[from] WeatherError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Swarm(#[from] PsoError),
    #[error("segment {index} does not join {expected:?}")]
    Integrity { index: usize, expected: String },
    #[error("unknown route node {0:?}")]
    UnknownNode(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub length: f64,
    pub weather: f64,
    pub ground: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            length: 1.0,
            weather: 1.0,
            ground: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathConfig {
    pub j_waypoints: usize,
    pub beta_c: f64,
    pub beta_f: f64,
    pub cost_weights: CostWeights,
    pub altitude_band: AltitudeBand,
    /// MSL meters.
    pub alt_bounds: (f64, f64),
    pub pso: PsoConfig,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            j_waypoints: 8,
            beta_c: 1e6,
            beta_f: 1.0,
            cost_weights: CostWeights::default(),
            altitude_band: AltitudeBand::Low,
            alt_bounds: (150.0, 1_200.0),
            pso: PsoConfig::default(),
        }
    }
}

impl PathConfig {
    /// Fixed cruise altitude, high weather band, no ground risk.
    pub fn long_range() -> Self {
        Self {
            cost_weights: CostWeights {
                ground: 0.0,
                ..CostWeights::default()
            },
            altitude_band: AltitudeBand::High,
            alt_bounds: (LONG_RANGE_CRUISE_M, LONG_RANGE_CRUISE_M),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), PathError> {
        let w = &self.cost_weights;
        if self.j_waypoints > 32 {
            return Err(PathError::Config(format!(
                "{} waypoints per segment exceeds 32",
                self.j_waypoints
            )));
        }
        if !(self.beta_c > self.beta_f && self.beta_f >= 0.0) {
            return Err(PathError::Config("beta_c must exceed beta_f".into()));
        }
        if ![w.length, w.weather, w.ground]
            .iter()
            .all(|v| v.is_finite() && *v >= 0.0)
        {
            return Err(PathError::Config(
                "cost weights must be non-negative".into(),
            ));
        }
        let (lo, hi) = self.alt_bounds;
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
            return Err(PathError::Config(format!(
                "altitude bounds {:?}",
                self.alt_bounds
            )));
        }
        self.pso.validate()?;
        Ok(())
    }

    fn clamp_alt(&self, alt: f64) -> f64 {
        alt.max(self.alt_bounds.0).min(self.alt_bounds.1)
    }
}

/// Cost terms of one segment. ℱ terms are in kilometers (weighted), Φ in meters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SegmentCost {
    pub length_km: f64,
    pub weather: f64,
    pub ground: f64,
    pub violation_m: f64,
}

impl SegmentCost {
    pub fn objective(&self, cfg: &PathConfig) -> f64 {
        let w = &cfg.cost_weights;
        cfg.beta_c * self.violation_m
            + cfg.beta_f
                * (w.length * self.length_km + w.weather * self.weather + w.ground * self.ground)
    }
}

/// β_c·Φ + β_f·ℱ for the polyline `from`, `candidate`…, `to`. Candidate
/// altitudes are clamped to the configured bounds first.
pub fn path_objective(
    candidate: &[Waypoint3D],
    from: &Waypoint3D,
    to: &Waypoint3D,
    catalog: &DataCatalog,
    cfg: &PathConfig,
) -> Result<(f64, SegmentCost), PathError> {
    let mut pts = Vec::with_capacity(candidate.len() + 2);
    pts.push(*from);
    for w in candidate {
        pts.push(Waypoint3D::new(w.point, cfg.clamp_alt(w.alt()))?);
    }
    pts.push(*to);
    let mut cost = SegmentCost::default();
    for s in pts.windows(2) {
        cost.length_km += great_circle_distance(&s[0].point, &s[1].point) / 1000.0;
        cost.violation_m += catalog.restricted_crossing_length(&s[0], &s[1]);
        if cfg.cost_weights.ground > 0.0 {
            cost.ground += catalog.population_crossing_length(&s[0], &s[1]) / 1000.0;
        }
        if cfg.cost_weights.weather > 0.0 && catalog.weather().is_some() {
            cost.weather += catalog.weather_risk_along(&s[0], &s[1], cfg.altitude_band)? / 1000.0;
        }
    }
    Ok((cost.objective(cfg), cost))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub from: Waypoint3D,
    pub to: Waypoint3D,
    /// Intermediate waypoints only.
    pub waypoints: Vec<Waypoint3D>,
    pub cost: SegmentCost,
    pub objective: f64,
    /// Set when no zone-free path was found.
    pub violates: bool,
    /// Global-best objective after initialization and each generation.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<f64>,
}

/// Leg-local coordinates: meters along the geodesic, meters to its right,
/// altitude.
struct Frame<'a> {
    from: &'a Waypoint3D,
    to: &'a Waypoint3D,
    length: f64,
    course: f64,
}

impl Frame<'_> {
    fn decode(&self, x: &[f64], cfg: &PathConfig) -> Result<Vec<Waypoint3D>, PathError> {
        x.chunks_exact(3)
            .map(|c| {
                let f = if self.length > 0.0 {
                    (c[0] / self.length).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                let base = intermediate_point(&self.from.point, &self.to.point, f);
                let course = if f < 1.0 {
                    initial_bearing(&base, &self.to.point).unwrap_or(self.course)
                } else {
                    (initial_bearing(&self.to.point, &self.from.point).unwrap_or(self.course)
                        + 180.0)
                        % 360.0
                };
                let (side, off) = if c[1] >= 0.0 {
                    (90.0, c[1])
                } else {
                    (-90.0, -c[1])
                };
                let p = destination_point(&base, off, course + side)?;
                Ok(Waypoint3D::new(p, cfg.clamp_alt(c[2]))?)
            })
            .collect()
    }
}

/// Optimizes the intermediate waypoints of one leg. Particle 0 is the
/// straight geodesic; the rest get Gaussian lateral jitter (σ = 5 % of the
/// leg) and uniform altitudes. `salt` separates the random streams of
/// different legs under one seed.
pub fn plan_segment(
    from: &Waypoint3D,
    to: &Waypoint3D,
    catalog: &DataCatalog,
    cfg: &PathConfig,
    salt: u64,
) -> Result<Segment, PathError> {
    cfg.validate()?;
    let length = great_circle_distance(&from.point, &to.point);
    let course = initial_bearing(&from.point, &to.point).unwrap_or(0.0);
    let frame = Frame {
        from,
        to,
        length,
        course,
    };
    let j = cfg.j_waypoints;
    let straight: Vec<f64> = (1..=j)
        .flat_map(|k| {
            let f = k as f64 / (j + 1) as f64;
            [
                f * length,
                0.0,
                cfg.clamp_alt(from.alt() + f * (to.alt() - from.alt())),
            ]
        })
        .collect();
    let straight_wps = frame.decode(&straight, cfg)?;
    let (straight_obj, straight_cost) = path_objective(&straight_wps, from, to, catalog, cfg)?;
    if j == 0 || length == 0.0 {
        return Ok(Segment {
            from: *from,
            to: *to,
            waypoints: straight_wps,
            cost: straight_cost,
            objective: straight_obj,
            violates: straight_cost.violation_m > 0.0,
            history: vec![straight_obj],
        });
    }

    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.pso.seed ^ 0x5EED_0F_1A7E);
    init_rng.set_stream(salt);
    let jitter = Normal::new(0.0, 0.05 * length).map_err(|e| PathError::Config(e.to_string()))?;
    let (lo, hi) = cfg.alt_bounds;
    let mut initial = vec![straight.clone()];
    for _ in 1..cfg.pso.population {
        let mut p = straight.clone();
        for c in p.chunks_exact_mut(3) {
            c[1] = jitter.sample(&mut init_rng);
            c[2] = if hi > lo {
                init_rng.gen_range(lo..=hi)
            } else {
                lo
            };
        }
        initial.push(p);
    }
    let dim = 3 * j;
    let vmax = 0.1 * length;
    let mut bounds = Bounds {
        lower: vec![0.0; dim],
        upper: vec![0.0; dim],
        vmax: vec![vmax; dim],
    };
    for k in 0..j {
        bounds.lower[3 * k] = 0.0;
        bounds.upper[3 * k] = length;
        bounds.lower[3 * k + 1] = -0.5 * length;
        bounds.upper[3 * k + 1] = 0.5 * length;
        bounds.lower[3 * k + 2] = lo;
        bounds.upper[3 * k + 2] = hi;
    }
    let objective = |x: &[f64]| -> f64 {
        frame
            .decode(x, cfg)
            .and_then(|wps| path_objective(&wps, from, to, catalog, cfg))
            .map_or(f64::INFINITY, |(v, _)| v)
    };
    let run = run_pso(initial, &objective, &cfg.pso, &bounds, salt)?;
    let waypoints = frame.decode(&run.state.global_best, cfg)?;
    let (objective, cost) = path_objective(&waypoints, from, to, catalog, cfg)?;
    Ok(Segment {
        from: *from,
        to: *to,
        waypoints,
        cost,
        objective,
        violates: cost.violation_m > 0.0,
        history: run.history,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub waypoint: Waypoint3D,
    /// Route node id for node waypoints.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_type: Option<NodeType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub from: String,
    pub to: String,
    pub cost: SegmentCost,
    pub objective: f64,
    pub violates: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub points: Vec<PathPoint>,
    pub segments: Vec<SegmentReport>,
}

impl Path {
    pub fn waypoints(&self) -> impl Iterator<Item = &Waypoint3D> {
        self.points.iter().map(|p| &p.waypoint)
    }
}

/// Route node as it appears in a path.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteNode {
    pub id: String,
    pub node_type: NodeType,
    pub waypoint: Waypoint3D,
}

/// v₁ ⊕ seg₁ ⊕ v₂ ⊕ … ⊕ v_N; each node appears once.
pub fn concatenate_path(nodes: &[RouteNode], segments: &[Segment]) -> Result<Path, PathError> {
    if nodes.len() < 2 || segments.len() + 1 != nodes.len() {
        return Err(PathError::Integrity {
            index: segments.len(),
            expected: format!(
                "{} segments for {} nodes",
                nodes.len().saturating_sub(1),
                nodes.len()
            ),
        });
    }
    let mut points = Vec::new();
    let mut reports = Vec::with_capacity(segments.len());
    for (i, seg) in segments.iter().enumerate() {
        let (a, b) = (&nodes[i], &nodes[i + 1]);
        if seg.from != a.waypoint {
            return Err(PathError::Integrity {
                index: i,
                expected: a.id.clone(),
            });
        }
        if seg.to != b.waypoint {
            return Err(PathError::Integrity {
                index: i,
                expected: b.id.clone(),
            });
        }
        if i == 0 {
            points.push(PathPoint {
                waypoint: a.waypoint,
                node_id: Some(a.id.clone()),
                node_type: Some(a.node_type.clone()),
            });
        }
        points.extend(seg.waypoints.iter().map(|w| PathPoint {
            waypoint: *w,
            node_id: None,
            node_type: None,
        }));
        points.push(PathPoint {
            waypoint: b.waypoint,
            node_id: Some(b.id.clone()),
            node_type: Some(b.node_type.clone()),
        });
        reports.push(SegmentReport {
            from: a.id.clone(),
            to: b.id.clone(),
            cost: seg.cost,
            objective: seg.objective,
            violates: seg.violates,
        });
    }
    Ok(Path {
        points,
        segments: reports,
    })
}

/// Per-leg settings: legs at least `long_leg_m` long use `long`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSettings {
    pub near: PathConfig,
    pub long: PathConfig,
    pub long_leg_m: f64,
}

impl Default for PathSettings {
    fn default() -> Self {
        Self {
            near: PathConfig::default(),
            long: PathConfig::long_range(),
            long_leg_m: 500_000.0,
        }
    }
}

impl PathSettings {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.near.pso.seed = seed;
        self.long.pso.seed = seed;
        self
    }

    pub fn for_leg(&self, length_m: f64) -> &PathConfig {
        if length_m >= self.long_leg_m {
            &self.long
        } else {
            &self.near
        }
    }
}

/// Plans every leg of a route and joins them. Node waypoints sit at the
/// lower altitude bound of the config used for their legs; a node between
/// a near and a long leg uses the near config's.
pub fn plan_path(
    route: &Route,
    graph: &FlightGraph,
    catalog: &DataCatalog,
    settings: &PathSettings,
) -> Result<Path, PathError> {
    let located = route
        .nodes
        .iter()
        .map(|id| {
            graph
                .index_of(id)
                .map(|i| graph.node(i))
                .ok_or_else(|| PathError::UnknownNode(id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let configs: Vec<&PathConfig> = located
        .windows(2)
        .map(|w| settings.for_leg(great_circle_distance(&w[0].location, &w[1].location)))
        .collect();
    let mut nodes = Vec::with_capacity(located.len());
    for (i, n) in located.iter().enumerate() {
        let adjacent = [i.checked_sub(1), (i < configs.len()).then_some(i)];
        let alt = adjacent
            .iter()
            .flatten()
            .map(|&k| configs[k].alt_bounds.0)
            .fold(f64::INFINITY, f64::min);
        nodes.push(RouteNode {
            id: n.id.clone(),
            node_type: n.node_type.clone(),
            waypoint: Waypoint3D::new(n.location, alt)?,
        });
    }
    let segments = nodes
        .windows(2)
        .zip(&configs)
        .enumerate()
        .map(|(i, (w, cfg))| plan_segment(&w[0].waypoint, &w[1].waypoint, catalog, cfg, i as u64))
        .collect::<Result<Vec<_>, _>>()?;
    concatenate_path(&nodes, &segments)
}
