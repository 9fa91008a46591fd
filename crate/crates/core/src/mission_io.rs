//! Session persistence, mission file export and map overlays.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path as FsPath, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::geodata::{AirspaceZone, AltitudeBand, PopulationZone, WeatherGrid};
use crate::graph::FlightGraph;
use crate::parser::{Conversation, MissionSpec, Preference};
use crate::path::Path;
use crate::route::{Alternative, Route};
use crate::trajectory::{CommandKind, LoiterDirection, Trajectory, CIRCUIT_HOPS};
use crate::GeoPoint;

pub const MISSION_HEADER: &str = "NELV-MISSION 1";

#[derive(Debug, thiserror::Error)]
pub enum MissionIoError {
    #[error("incomplete trajectory: {0}")]
    Incomplete(String),
    #[error("session {0:?} not found")]
    NotFound(String),
    #[error("session record is inconsistent: {0}")]
    Inconsistent(String),
    #[error("session store i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("session encoding: {0}")]
    Encoding(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Parsed,
    Routed,
    Pathed,
    Trajectoried,
    Uploaded,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Parsed,
        Stage::Routed,
        Stage::Pathed,
        Stage::Trajectoried,
        Stage::Uploaded,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Parsed => "parsed",
            Stage::Routed => "routed",
            Stage::Pathed => "pathed",
            Stage::Trajectoried => "trajectoried",
            Stage::Uploaded => "uploaded",
        }
    }

    /// Stage that must be complete before this one can run.
    pub fn prerequisite(self) -> Option<Stage> {
        match self {
            Stage::Parsed => None,
            Stage::Routed => Some(Stage::Parsed),
            Stage::Pathed => Some(Stage::Routed),
            Stage::Trajectoried => Some(Stage::Pathed),
            Stage::Uploaded => Some(Stage::Trajectoried),
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub node_ids: Vec<String>,
    pub edge_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range_limit_m: Option<f64>,
}

impl GraphSummary {
    pub fn of(graph: &FlightGraph) -> Self {
        Self {
            node_ids: graph.nodes().iter().map(|n| n.id.clone()).collect(),
            edge_count: graph.edges().len(),
            range_limit_m: graph.range_limit(),
        }
    }
}

/// Everything a session has produced so far. Artifacts are per vehicle:
/// a single-vehicle mission has one route, path and trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub id: String,
    pub conversation: Conversation,
    #[serde(default)]
    pub spec: Option<MissionSpec>,
    /// Fields the pilot still has to supply.
    #[serde(default)]
    pub missing: Vec<String>,
    #[serde(default)]
    pub graph: Option<GraphSummary>,
    #[serde(default)]
    pub alternatives: Vec<Alternative>,
    #[serde(default)]
    pub selected: Option<Preference>,
    #[serde(default)]
    pub routes: Vec<Route>,
    #[serde(default)]
    pub paths: Vec<Path>,
    #[serde(default)]
    pub trajectories: Vec<Trajectory>,
    #[serde(default)]
    pub stage: Option<Stage>,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    #[serde(default)]
    pub uploaded_at: Option<DateTime<Utc>>,
}

impl SessionRecord {
    pub fn new(id: impl Into<String>, now: DateTime<Utc>) -> Self {
        Self {
            id: id.into(),
            conversation: Conversation::created_at(now),
            spec: None,
            missing: Vec::new(),
            graph: None,
            alternatives: Vec::new(),
            selected: None,
            routes: Vec::new(),
            paths: Vec::new(),
            trajectories: Vec::new(),
            stage: None,
            created_at: now,
            updated_at: now,
            uploaded_at: None,
        }
    }

    /// Fresh record under a random id.
    pub fn create(now: DateTime<Utc>) -> Self {
        Self::new(uuid::Uuid::new_v4().simple().to_string(), now)
    }

    pub fn reached(&self, stage: Stage) -> bool {
        self.stage.is_some_and(|s| s >= stage)
    }

    /// Drops every artifact of stages after `keep` (all of them for None).
    pub fn invalidate_after(&mut self, keep: Option<Stage>) {
        let clear = |s: Stage| keep.map_or(true, |k| k < s);
        if keep.is_none() {
            self.spec = None;
            self.missing.clear();
        }
        if clear(Stage::Routed) {
            self.graph = None;
            self.alternatives.clear();
            self.selected = None;
            self.routes.clear();
        }
        if clear(Stage::Pathed) {
            self.paths.clear();
        }
        if clear(Stage::Trajectoried) {
            self.trajectories.clear();
        }
        if clear(Stage::Uploaded) {
            self.uploaded_at = None;
        }
        if self.stage.is_some_and(|s| clear(s)) {
            self.stage = keep;
        }
    }

    /// Artifacts are present exactly for the stages reached.
    pub fn check(&self) -> Result<(), MissionIoError> {
        let fail = |what: &str| Err(MissionIoError::Inconsistent(what.to_string()));
        let ready = self.spec.is_some() && self.missing.is_empty();
        if self.reached(Stage::Parsed) != ready {
            return fail("parsed stage without a complete spec");
        }
        if self.reached(Stage::Routed) != (self.graph.is_some() && !self.routes.is_empty()) {
            return fail("routes do not match the stage");
        }
        let vehicles = self.routes.len();
        if self.reached(Stage::Pathed) != (!self.paths.is_empty() && self.paths.len() == vehicles) {
            return fail("paths do not match the stage");
        }
        if self.reached(Stage::Trajectoried) != (!self.trajectories.is_empty() && self.trajectories.len() == vehicles) {
            return fail("trajectories do not match the stage");
        }
        if self.reached(Stage::Uploaded) != self.uploaded_at.is_some() {
            return fail("upload stamp does not match the stage");
        }
        Ok(())
    }
}

/// Directory of `<id>.json` session files.
#[derive(Debug, Clone)]
pub struct SessionStore {
    dir: PathBuf,
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 128 && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, MissionIoError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &FsPath {
        &self.dir
    }

    fn file(&self, id: &str) -> Result<PathBuf, MissionIoError> {
        if !valid_id(id) {
            return Err(MissionIoError::NotFound(id.to_string()));
        }
        Ok(self.dir.join(format!("{id}.json")))
    }

    /// Writes to a temporary file in the store and renames it into place.
    pub fn save(&self, record: &SessionRecord) -> Result<(), MissionIoError> {
        record.check()?;
        let target = self.file(&record.id)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        serde_json::to_writer(&mut tmp, record)?;
        tmp.as_file_mut().sync_all()?;
        tmp.persist(&target).map_err(|e| e.error)?;
        Ok(())
    }

    pub fn load(&self, id: &str) -> Result<SessionRecord, MissionIoError> {
        let bytes = match fs::read(self.file(id)?) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(MissionIoError::NotFound(id.to_string()))
            }
            Err(e) => return Err(e.into()),
        };
        Ok(serde_json::from_slice(&bytes)?)
    }

    pub fn exists(&self, id: &str) -> bool {
        self.file(id).is_ok_and(|f| f.is_file())
    }

    /// Stored session ids in lexicographic order.
    pub fn ids(&self) -> Result<Vec<String>, MissionIoError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let name = entry?.file_name();
            let Some(id) = name.to_str().and_then(|n| n.strip_suffix(".json")) else {
                continue;
            };
            if valid_id(id) {
                ids.push(id.to_string());
            }
        }
        ids.sort();
        Ok(ids)
    }
}

/// Fixed-precision decimal with negative zero printed as zero.
fn fixed(v: f64, places: usize) -> String {
    let s = format!("{v:.places$}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

fn mission_line(out: &mut String, index: usize, kind: CommandKind, lat: f64, lon: f64, alt: f64, params: [f64; 3]) {
    let _ = writeln!(
        out,
        "{index}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        kind.as_str(),
        fixed(lat, 9),
        fixed(lon, 9),
        fixed(alt, 3),
        fixed(params[0], 3),
        fixed(params[1], 3),
        fixed(params[2], 3),
    );
}

/// Renders the mission file: a header line, then one tab-separated line per
/// waypoint or loiter. Circuits expand to one line per circuit waypoint.
/// Loiter parameters are radius, duration and direction (1 clockwise, -1
/// counter-clockwise).
pub fn export_mission(trajectory: &Trajectory) -> Result<Vec<u8>, MissionIoError> {
    if !trajectory.is_complete() {
        return Err(MissionIoError::Incomplete(
            "must start with a take-off circuit and end with a landing circuit".into(),
        ));
    }
    let mut out = String::new();
    out.push_str(MISSION_HEADER);
    out.push('\n');
    let mut index = 0;
    for (i, cmd) in trajectory.commands.iter().enumerate() {
        match cmd.kind {
            CommandKind::TakeoffCircuit | CommandKind::LandingCircuit => {
                if cmd.waypoints.len() != CIRCUIT_HOPS + 1 {
                    return Err(MissionIoError::Incomplete(format!(
                        "command {i}: circuit has {} waypoints",
                        cmd.waypoints.len()
                    )));
                }
            }
            CommandKind::Waypoint if cmd.waypoints.len() != 1 => {
                return Err(MissionIoError::Incomplete(format!("command {i}: waypoint without a position")));
            }
            _ => {}
        }
        if cmd.kind == CommandKind::Loiter {
            let l = cmd
                .loiter
                .ok_or_else(|| MissionIoError::Incomplete(format!("command {i}: loiter without parameters")))?;
            let dir = match l.direction {
                LoiterDirection::Cw => 1.0,
                LoiterDirection::Ccw => -1.0,
            };
            let c = l.center;
            mission_line(&mut out, index, cmd.kind, c.point.lat(), c.point.lon(), c.alt(), [l.radius_m, l.duration_s, dir]);
            index += 1;
            continue;
        }
        for w in &cmd.waypoints {
            mission_line(&mut out, index, cmd.kind, w.point.lat(), w.point.lon(), w.alt(), [0.0; 3]);
            index += 1;
        }
    }
    Ok(out.into_bytes())
}

fn collection(features: Vec<Value>) -> Vec<u8> {
    let fc = json!({ "type": "FeatureCollection", "features": features });
    let mut bytes = serde_json::to_vec(&fc).expect("overlay values are plain json");
    bytes.push(b'\n');
    bytes
}

fn position(p: &GeoPoint) -> Value {
    json!([p.lon(), p.lat()])
}

fn ring(vertices: &[GeoPoint]) -> Value {
    let mut coords: Vec<Value> = vertices.iter().map(position).collect();
    if let Some(first) = vertices.first() {
        coords.push(position(first));
    }
    json!([coords])
}

/// One line feature per vehicle path through every waypoint, with
/// per-segment costs.
pub fn paths_overlay(paths: &[Path]) -> Vec<u8> {
    let features = paths
        .iter()
        .enumerate()
        .filter(|(_, p)| !p.points.is_empty())
        .map(|(vehicle, path)| {
            let coords: Vec<Value> = path
                .points
                .iter()
                .map(|p| json!([p.waypoint.point.lon(), p.waypoint.point.lat(), p.waypoint.alt()]))
                .collect();
            let segments: Vec<Value> = path
                .segments
                .iter()
                .map(|s| {
                    json!({
                        "from": s.from,
                        "to": s.to,
                        "length_km": s.cost.length_km,
                        "weather": s.cost.weather,
                        "ground": s.cost.ground,
                        "violation_m": s.cost.violation_m,
                        "objective": s.objective,
                        "violates": s.violates,
                    })
                })
                .collect();
            let objective: f64 = path.segments.iter().map(|s| s.objective).sum();
            let nodes: Vec<&str> = path.points.iter().filter_map(|p| p.node_id.as_deref()).collect();
            json!({
                "type": "Feature",
                "geometry": { "type": "LineString", "coordinates": coords },
                "properties": {
                    "kind": "path",
                    "vehicle": vehicle,
                    "nodes": nodes,
                    "objective": objective,
                    "segments": segments,
                },
            })
        })
        .collect();
    collection(features)
}

/// One line feature per route, in the given order.
pub fn routes_overlay(routes: &[Route], graph: &FlightGraph) -> Vec<u8> {
    let features = routes
        .iter()
        .enumerate()
        .map(|(vehicle, r)| {
            let coords: Vec<Value> = r
                .nodes
                .iter()
                .filter_map(|id| graph.index_of(id))
                .map(|i| position(&graph.node(i).location))
                .collect();
            json!({
                "type": "Feature",
                "geometry": { "type": "LineString", "coordinates": coords },
                "properties": {
                    "kind": "route",
                    "vehicle": vehicle,
                    "nodes": r.nodes,
                    "label": r.label.as_str(),
                    "distance_m": r.total_distance_m,
                    "fuel_l": r.total_fuel_l,
                    "cost": r.total_cost,
                    "duration_s": r.total_duration_s,
                    "fallback_direct": r.fallback_direct,
                },
            })
        })
        .collect();
    collection(features)
}

/// One polygon feature per zone, ordered by id.
pub fn airspace_overlay(zones: &[AirspaceZone]) -> Vec<u8> {
    let mut zones: Vec<&AirspaceZone> = zones.iter().collect();
    zones.sort_by(|a, b| a.id.cmp(&b.id));
    let features = zones
        .iter()
        .map(|z| {
            json!({
                "type": "Feature",
                "geometry": { "type": "Polygon", "coordinates": ring(z.boundary.vertices()) },
                "properties": {
                    "kind": "airspace",
                    "id": z.id,
                    "class": z.class,
                    "floor_alt": z.floor_alt,
                    "ceiling_alt": z.ceiling_alt,
                },
            })
        })
        .collect();
    collection(features)
}

pub fn population_overlay(zones: &[PopulationZone]) -> Vec<u8> {
    let mut zones: Vec<&PopulationZone> = zones.iter().collect();
    zones.sort_by(|a, b| a.id.cmp(&b.id));
    let features = zones
        .iter()
        .map(|z| {
            json!({
                "type": "Feature",
                "geometry": { "type": "Polygon", "coordinates": ring(z.boundary.vertices()) },
                "properties": { "kind": "population", "id": z.id, "density_weight": z.density_weight },
            })
        })
        .collect();
    collection(features)
}

/// One square per grid cell and band, with its risk; bands low then high,
/// cells row-major.
pub fn weather_overlay(grid: Option<&WeatherGrid>) -> Vec<u8> {
    let Some(grid) = grid else {
        return collection(Vec::new());
    };
    let mut features = Vec::new();
    let bands: Vec<AltitudeBand> = grid.bands().collect();
    for band in bands {
        for row in 0..grid.rows() {
            for col in 0..grid.cols() {
                let (Some((lat0, lon0, lat1, lon1)), Some(risk)) = (grid.cell_bounds(row, col), grid.risk_at(band, row, col))
                else {
                    continue;
                };
                features.push(json!({
                    "type": "Feature",
                    "geometry": {
                        "type": "Polygon",
                        "coordinates": [[[lon0, lat0], [lon1, lat0], [lon1, lat1], [lon0, lat1], [lon0, lat0]]],
                    },
                    "properties": { "kind": "weather", "band": band.as_str(), "row": row, "col": col, "risk": risk },
                }));
            }
        }
    }
    collection(features)
}

/// Writes through a temporary file next to `target`.
pub fn write_atomic(target: &FsPath, bytes: &[u8]) -> Result<(), MissionIoError> {
    let dir = target.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(FsPath::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.persist(target).map_err(|e| e.error)?;
    Ok(())
}
