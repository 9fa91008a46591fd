//! Executable trajectories: take-off and landing circuits around the path.

use serde::{Deserialize, Serialize};

use crate::geodata::{Airport, DataCatalog, PatternSide, Runway};
use crate::geodesy::{
    destination_point, great_circle_distance, initial_bearing, midpoint, GeoError, GeoPoint, Waypoint3D,
};
use crate::graph::FlightGraph;
use crate::parser::NodeType;
use crate::path::Path;
use crate::Scalar;

/// Hops per circuit; the heading schedule has one more entry.
pub const CIRCUIT_HOPS: usize = 10;
pub const PATTERN_HEIGHT_M: f64 = 300.0;
pub const DEFAULT_SEPARATION_M: f64 = 500.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrajectoryError {
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("no airport within {radius_m} m of ({lat}, {lon})")]
    NoAirport { lat: f64, lon: f64, radius_m: f64 },
    #[error("airport {0} has no runway")]
    NoRunway(String),
    #[error("path has fewer than 2 points")]
    ShortPath,
    #[error(transparent)]
    Geo(#[from] GeoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitMode {
    Takeoff,
    Landing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct CircuitParams<S> {
    pub runway_center: GeoPoint<S>,
    pub start_alt: S,
    /// θ₀ in [0, 360).
    pub runway_heading: S,
    /// d₁…d₁₀ in meters.
    pub separations: Vec<S>,
    /// h₁…h₁₀ in meters.
    pub altitude_profile: Vec<S>,
    pub pattern: PatternSide,
    pub mode: CircuitMode,
}

impl<S: Scalar> CircuitParams<S> {
    /// Uniform 500 m hops; climb from the field to 300 m above it by
    /// waypoint 3 (descending mirror image for landing).
    pub fn standard(center: GeoPoint<S>, elevation: S, heading: S, pattern: PatternSide, mode: CircuitMode) -> Self {
        let top = elevation + S::lit(PATTERN_HEIGHT_M);
        let altitude_profile = (1..=CIRCUIT_HOPS)
            .map(|k| {
                let climb = S::lit(k.min(3) as f64 / 3.0);
                elevation + climb * (top - elevation)
            })
            .collect();
        Self {
            runway_center: center,
            start_alt: elevation,
            runway_heading: heading,
            separations: vec![S::lit(DEFAULT_SEPARATION_M); CIRCUIT_HOPS],
            altitude_profile,
            pattern,
            mode,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct CircuitPoint<S> {
    pub waypoint: Waypoint3D<S>,
    /// Pattern heading θ_k: θ₀ plus the schedule up to this waypoint.
    pub heading: S,
    /// Initial bearing of the hop into this waypoint; θ₀ for the origin.
    pub course: S,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct Circuit<S> {
    pub points: Vec<CircuitPoint<S>>,
    pub sign: S,
    pub theta_ra: S,
    pub theta_ia: S,
    pub mode: CircuitMode,
}

/// Δθ₀…Δθ₁₀ for pattern sign `s`.
pub fn heading_schedule<S: Scalar>(s: S) -> [S; CIRCUIT_HOPS + 1] {
    let ra = s * S::lit(90.0);
    let ia = s * S::lit(12.0);
    let z = S::zero();
    [z, z, ra, ra, ra, ia, -(ia + ia), ra, ra, ra, z]
}

fn wrap_deg<S: Scalar>(d: S) -> S {
    let full = S::lit(360.0);
    let r = d % full;
    if r < S::zero() {
        r + full
    } else {
        r
    }
}

fn forward<S: Scalar>(
    center: GeoPoint<S>,
    start_alt: S,
    heading: S,
    sign: S,
    d: &[S],
    h: &[S],
) -> Result<Vec<CircuitPoint<S>>, TrajectoryError> {
    let schedule = heading_schedule(sign);
    let mut theta = wrap_deg(heading + schedule[0]);
    let mut points = vec![CircuitPoint {
        waypoint: Waypoint3D::new(center, start_alt)?,
        heading: theta,
        course: theta,
    }];
    let mut at = center;
    // turns are taken from the track on arrival, not from north
    let mut track = theta;
    for k in 1..=d.len() {
        theta = wrap_deg(theta + schedule[k]);
        let course = wrap_deg(track + schedule[k]);
        let next = destination_point(&at, d[k - 1], course)?;
        track = wrap_deg(initial_bearing(&next, &at)? + S::lit(180.0));
        at = next;
        points.push(CircuitPoint {
            waypoint: Waypoint3D::new(at, h[k - 1])?,
            heading: theta,
            course,
        });
    }
    Ok(points)
}

/// Walks the heading schedule from the runway center, each turn taken
/// relative to the track flown into the waypoint. A landing circuit is the
/// take-off construction from the reciprocal heading with the opposite
/// sign, flown backwards: it keeps the pattern side, ends at the runway
/// center on θ₀ and descends through the mirrored altitude profile.
pub fn generate_circuit<S: Scalar>(params: &CircuitParams<S>) -> Result<Circuit<S>, TrajectoryError> {
    let p = params;
    if p.separations.len() != CIRCUIT_HOPS || p.altitude_profile.len() != CIRCUIT_HOPS {
        return Err(TrajectoryError::InvalidCircuit(format!(
            "need {CIRCUIT_HOPS} separations and altitudes, got {} and {}",
            p.separations.len(),
            p.altitude_profile.len()
        )));
    }
    if !(p.runway_heading >= S::zero() && p.runway_heading < S::lit(360.0)) {
        return Err(TrajectoryError::InvalidCircuit(format!("heading {} outside [0, 360)", p.runway_heading)));
    }
    if p.separations.iter().any(|d| !(*d > S::zero()) || !d.is_finite()) {
        return Err(TrajectoryError::InvalidCircuit("separations must be positive".into()));
    }
    let sign = S::lit(p.pattern.sign());
    let points = match p.mode {
        CircuitMode::Takeoff => forward(p.runway_center, p.start_alt, p.runway_heading, sign, &p.separations, &p.altitude_profile)?,
        CircuitMode::Landing => {
            let back: Vec<S> = p.separations.iter().rev().copied().collect();
            let mut built = forward(
                p.runway_center,
                p.start_alt,
                wrap_deg(p.runway_heading + S::lit(180.0)),
                -sign,
                &back,
                &p.altitude_profile,
            )?;
            built.reverse();
            let half = S::lit(180.0);
            let mut out: Vec<CircuitPoint<S>> = Vec::with_capacity(built.len());
            for k in 0..built.len() {
                let heading = wrap_deg(built[k.saturating_sub(1)].heading + half);
                let course = if k == 0 {
                    heading
                } else {
                    initial_bearing(&built[k - 1].waypoint.point, &built[k].waypoint.point)?
                };
                out.push(CircuitPoint {
                    waypoint: built[k].waypoint,
                    heading,
                    course,
                });
            }
            out
        }
    };
    Ok(Circuit {
        points,
        sign,
        theta_ra: sign * S::lit(90.0),
        theta_ia: sign * S::lit(12.0),
        mode: p.mode,
    })
}

/// Nearest airport within `max_radius_m`, ties to the lower id.
pub fn nearest_airport<'a>(
    catalog: &'a DataCatalog,
    p: &GeoPoint<f64>,
    max_radius_m: f64,
) -> Result<&'a Airport, TrajectoryError> {
    catalog
        .nearest_airport(p)
        .filter(|a| great_circle_distance(&a.location, p) <= max_radius_m)
        .ok_or(TrajectoryError::NoAirport {
            lat: p.lat(),
            lon: p.lon(),
            radius_m: max_radius_m,
        })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoiterDirection {
    #[default]
    Cw,
    Ccw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Loiter {
    pub center: Waypoint3D<f64>,
    pub radius_m: f64,
    pub direction: LoiterDirection,
    pub duration_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandKind {
    Waypoint,
    Loiter,
    TakeoffCircuit,
    LandingCircuit,
}

impl CommandKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CommandKind::Waypoint => "waypoint",
            CommandKind::Loiter => "loiter",
            CommandKind::TakeoffCircuit => "takeoff_circuit",
            CommandKind::LandingCircuit => "landing_circuit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryCommand {
    pub kind: CommandKind,
    pub waypoints: Vec<Waypoint3D<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loiter: Option<Loiter>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub commands: Vec<TrajectoryCommand>,
    pub takeoff_airport: String,
    pub landing_airport: String,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.commands.len() >= 2
            && self.commands[0].kind == CommandKind::TakeoffCircuit
            && self.commands.last().map(|c| c.kind) == Some(CommandKind::LandingCircuit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOptions {
    /// Search radius for the airports at either end.
    pub airport_radius_m: f64,
    pub loiter_radius_m: f64,
    pub loiter_height_agl_m: f64,
    pub loiter_duration_s: f64,
    pub loiter_direction: LoiterDirection,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            airport_radius_m: 5_000.0,
            loiter_radius_m: 300.0,
            loiter_height_agl_m: 300.0,
            loiter_duration_s: 120.0,
            loiter_direction: LoiterDirection::Cw,
        }
    }
}

fn runway_circuit(airport: &Airport, runway: &Runway, mode: CircuitMode) -> Result<TrajectoryCommand, TrajectoryError> {
    let center = midpoint(&runway.endpoint_a, &runway.endpoint_b);
    let params = CircuitParams::standard(center, airport.elevation, wrap_deg(runway.heading), runway.pattern_side, mode);
    let circuit = generate_circuit(&params)?;
    Ok(TrajectoryCommand {
        kind: match mode {
            CircuitMode::Takeoff => CommandKind::TakeoffCircuit,
            CircuitMode::Landing => CommandKind::LandingCircuit,
        },
        waypoints: circuit.points.iter().map(|p| p.waypoint).collect(),
        loiter: None,
    })
}

/// Replaces the first and last path points with circuits on the matched
/// airports' runways and adds a loiter after every POI node. When take-off
/// and landing share an airport with several runways, landing uses the
/// second runway.
pub fn build_trajectory(
    path: &Path,
    catalog: &DataCatalog,
    graph: &FlightGraph,
    opts: &TrajectoryOptions,
) -> Result<Trajectory, TrajectoryError> {
    let n = path.points.len();
    if n < 2 {
        return Err(TrajectoryError::ShortPath);
    }
    let first = &path.points[0].waypoint.point;
    let last = &path.points[n - 1].waypoint.point;
    let dep = nearest_airport(catalog, first, opts.airport_radius_m)?;
    let arr = nearest_airport(catalog, last, opts.airport_radius_m)?;
    let dep_rwy = dep.runways.first().ok_or_else(|| TrajectoryError::NoRunway(dep.id.clone()))?;
    let arr_rwy = if arr.id == dep.id && arr.runways.len() > 1 {
        &arr.runways[1]
    } else {
        arr.runways.first().ok_or_else(|| TrajectoryError::NoRunway(arr.id.clone()))?
    };
    let mut commands = vec![runway_circuit(dep, dep_rwy, CircuitMode::Takeoff)?];
    for p in &path.points[1..n - 1] {
        commands.push(TrajectoryCommand {
            kind: CommandKind::Waypoint,
            waypoints: vec![p.waypoint],
            loiter: None,
        });
        if !matches!(p.node_type, Some(NodeType::Poi(_))) {
            continue;
        }
        let node_elev = p
            .node_id
            .as_deref()
            .and_then(|id| graph.index_of(id))
            .map(|i| graph.node(i).attrs.elevation)
            .unwrap_or(0.0);
        // POIs carry no terrain height; the nearest airport stands in
        let ground = if node_elev > 0.0 {
            node_elev
        } else {
            catalog.nearest_airport(&p.waypoint.point).map_or(0.0, |a| a.elevation)
        };
        commands.push(TrajectoryCommand {
            kind: CommandKind::Loiter,
            waypoints: vec![],
            loiter: Some(Loiter {
                center: Waypoint3D::new(p.waypoint.point, ground + opts.loiter_height_agl_m)?,
                radius_m: opts.loiter_radius_m,
                direction: opts.loiter_direction,
                duration_s: opts.loiter_duration_s,
            }),
        });
    }
    commands.push(runway_circuit(arr, arr_rwy, CircuitMode::Landing)?);
    Ok(Trajectory {
        commands,
        takeoff_airport: dep.id.clone(),
        landing_airport: arr.id.clone(),
    })
}
