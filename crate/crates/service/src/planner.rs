//! Session-oriented staged pipeline: instructions, route, path,
//! trajectory, upload.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use chrono::Utc;
use serde::{Deserialize, Serialize};

use nelv_core::geodata::{load_catalog, CatalogSources, DataCatalog};
use nelv_core::graph::{build_graph, FlightGraph, FlightNode, GraphError};
use nelv_core::mission_io::{
    airspace_overlay, export_mission, paths_overlay, population_overlay, routes_overlay, weather_overlay,
    GraphSummary, MissionIoError, SessionRecord, SessionStore, Stage,
};
use nelv_core::parser::{
    llm_refine, parse_conversation, LlmConfig, MissionSpec, NodeType, ParseError, ParseOutcome, Preference,
    RangeThresholds, ResolveError, ResolvedMission,
};
use nelv_core::path::{plan_path, PathError, PathSettings};
use nelv_core::route::{
    enumerate_alternatives, plan_multi_uav, plan_route, MultiUavQuery, RangeMode, Route, RouteError, RouteQuery,
    VehicleModel,
};
use nelv_core::trajectory::{build_trajectory, TrajectoryError, TrajectoryOptions};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("session {0:?} not found")]
    NotFound(String),
    #[error("cannot run {requested}: stage {missing} has not been completed")]
    StageOrder { requested: Stage, missing: Stage },
    #[error("session {0:?} is uploaded and frozen")]
    Frozen(String),
    #[error("mission is missing {}", .0.join(", "))]
    NotReady(Vec<String>),
    #[error("{0}")]
    BadRequest(String),
    #[error("export needs the {0} stage")]
    ExportUnavailable(Stage),
    #[error("layer {0:?} is not available")]
    UnknownLayer(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Store(MissionIoError),
}

impl From<MissionIoError> for ServiceError {
    fn from(e: MissionIoError) -> Self {
        match e {
            MissionIoError::NotFound(id) => ServiceError::NotFound(id),
            other => ServiceError::Store(other),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlannerConfig {
    pub data_dir: PathBuf,
    /// Directory of catalog files; an empty catalog when unset.
    pub catalog_dir: Option<PathBuf>,
    pub seed: u64,
    pub vehicle: VehicleModel,
    pub range_mode: RangeMode,
    pub path: PathSettings,
    pub trajectory: TrajectoryOptions,
    pub thresholds: RangeThresholds,
    pub llm: Option<LlmConfig>,
}

impl PlannerConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            catalog_dir: None,
            seed: 0,
            vehicle: VehicleModel::default(),
            range_mode: RangeMode::default(),
            path: PathSettings::default(),
            trajectory: TrajectoryOptions::default(),
            thresholds: RangeThresholds::default(),
            llm: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StageName {
    Route,
    Path,
    Trajectory,
    Upload,
}

impl StageName {
    pub fn target(self) -> Stage {
        match self {
            StageName::Route => Stage::Routed,
            StageName::Path => Stage::Pathed,
            StageName::Trajectory => Stage::Trajectoried,
            StageName::Upload => Stage::Uploaded,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageOptions {
    /// Route stage: selects this alternative instead of the spec's preference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preference: Option<Preference>,
    /// Path stage: plans the alternative carrying this label.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Preference>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generations: Option<usize>,
    /// Per-leg swarm time limit in milliseconds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_budget_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRequest {
    pub stage: StageName,
    #[serde(default)]
    pub options: StageOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionReply {
    pub outcome: ParseOutcome,
    pub reply: String,
    pub stage: Option<Stage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternativeSummary {
    pub labels: Vec<Preference>,
    pub nodes: Vec<String>,
    pub distance_m: f64,
    pub cost: f64,
    pub duration_s: f64,
    pub fallback_direct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSummary {
    pub nodes: Vec<String>,
    pub distance_m: f64,
    pub cost: f64,
    pub duration_s: f64,
    pub fallback_direct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commands: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub id: String,
    pub stage: Stage,
    pub selected: Option<Preference>,
    pub alternatives: Vec<AlternativeSummary>,
    pub vehicles: Vec<VehicleSummary>,
}

impl StageReport {
    fn of(r: &SessionRecord) -> Self {
        let vehicles = r
            .routes
            .iter()
            .enumerate()
            .map(|(v, route)| VehicleSummary {
                nodes: route.nodes.clone(),
                distance_m: route.total_distance_m,
                cost: route.total_cost,
                duration_s: route.total_duration_s,
                fallback_direct: route.fallback_direct,
                path_points: r.paths.get(v).map(|p| p.points.len()),
                path_objective: r.paths.get(v).map(|p| p.segments.iter().map(|s| s.objective).sum()),
                commands: r.trajectories.get(v).map(|t| t.commands.len()),
            })
            .collect();
        Self {
            id: r.id.clone(),
            stage: r.stage.unwrap_or(Stage::Parsed),
            selected: r.selected,
            alternatives: r
                .alternatives
                .iter()
                .map(|a| AlternativeSummary {
                    labels: a.labels.clone(),
                    nodes: a.route.nodes.clone(),
                    distance_m: a.route.total_distance_m,
                    cost: a.route.total_cost,
                    duration_s: a.route.total_duration_s,
                    fallback_direct: a.route.fallback_direct,
                })
                .collect(),
            vehicles,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layer {
    Airspace,
    Population,
    Weather,
    Route,
    Path,
}

impl std::str::FromStr for Layer {
    type Err = ServiceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "airspace" => Ok(Layer::Airspace),
            "population" => Ok(Layer::Population),
            "weather" => Ok(Layer::Weather),
            "route" => Ok(Layer::Route),
            "path" => Ok(Layer::Path),
            other => Err(ServiceError::UnknownLayer(other.to_string())),
        }
    }
}

/// Resolved mission and its flight graph.
struct Context {
    resolved: ResolvedMission,
    graph: FlightGraph,
}

pub struct Planner {
    cfg: PlannerConfig,
    catalog: DataCatalog,
    store: SessionStore,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl Planner {
    pub fn new(cfg: PlannerConfig) -> anyhow::Result<Self> {
        let catalog = match &cfg.catalog_dir {
            Some(dir) => {
                let report = load_catalog(&CatalogSources::from_dir(dir))?;
                for d in &report.diagnostics {
                    log::warn!("{d}");
                }
                report.catalog
            }
            None => DataCatalog::default(),
        };
        Ok(Self::with_catalog(cfg, catalog)?)
    }

    pub fn with_catalog(cfg: PlannerConfig, catalog: DataCatalog) -> Result<Self, ServiceError> {
        let store = SessionStore::open(&cfg.data_dir)?;
        Ok(Self {
            cfg,
            catalog,
            store,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn catalog(&self) -> &DataCatalog {
        &self.catalog
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.cfg
    }

    fn lock(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(id.to_string()).or_default().clone()
    }

    /// Loads, mutates and saves one session with writers serialized.
    fn update<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut SessionRecord) -> Result<T, ServiceError>,
    ) -> Result<T, ServiceError> {
        let lock = self.lock(id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let mut record = self.store.load(id)?;
        let out = f(&mut record)?;
        record.updated_at = Utc::now();
        self.store.save(&record)?;
        Ok(out)
    }

    pub fn create_session(&self) -> Result<SessionRecord, ServiceError> {
        let record = SessionRecord::create(Utc::now());
        self.store.save(&record)?;
        log::info!("session {} created", record.id);
        Ok(record)
    }

    pub fn session(&self, id: &str) -> Result<SessionRecord, ServiceError> {
        Ok(self.store.load(id)?)
    }

    /// Appends the instruction, re-parses the whole dialogue and clears every
    /// computed stage.
    pub fn post_instruction(&self, id: &str, text: &str) -> Result<InstructionReply, ServiceError> {
        self.update(id, |r| {
            if r.reached(Stage::Uploaded) {
                return Err(ServiceError::Frozen(r.id.clone()));
            }
            let conversation = r.conversation.append_instruction(text)?;
            let mut outcome = parse_conversation(&conversation);
            if let Some(llm) = &self.cfg.llm {
                let refined = llm_refine(&conversation, outcome.spec(), llm);
                outcome = ParseOutcome::from_spec(refined.spec);
            }
            let reply = match &outcome {
                ParseOutcome::Ready { spec } => spec.summary(),
                ParseOutcome::NeedsClarification { missing, .. } => {
                    format!("Please provide: {}.", missing.join(", "))
                }
            };
            r.conversation = conversation.append_system(&reply);
            r.invalidate_after(None);
            match &outcome {
                ParseOutcome::Ready { spec } => {
                    r.spec = Some(spec.clone());
                    r.missing.clear();
                    r.stage = Some(Stage::Parsed);
                }
                ParseOutcome::NeedsClarification { draft, missing } => {
                    r.spec = Some(draft.clone());
                    r.missing = missing.clone();
                }
            }
            Ok(InstructionReply {
                outcome,
                reply,
                stage: r.stage,
            })
        })
    }

    fn context(&self, spec: &MissionSpec) -> Result<Context, ServiceError> {
        let resolved = nelv_core::parser::resolve_nodes(spec, &self.catalog, &self.cfg.thresholds)?;
        let nodes: Vec<FlightNode> = resolved.nodes.iter().cloned().map(FlightNode::from).collect();
        let graph = build_graph(nodes, Some(self.cfg.vehicle.max_leg_m(self.cfg.range_mode)))?;
        Ok(Context { resolved, graph })
    }

    fn ready_spec(r: &SessionRecord) -> Result<&MissionSpec, ServiceError> {
        match &r.spec {
            Some(spec) if r.missing.is_empty() && r.reached(Stage::Parsed) => Ok(spec),
            _ => Err(ServiceError::NotReady(if r.missing.is_empty() {
                vec!["instructions".to_string()]
            } else {
                r.missing.clone()
            })),
        }
    }

    /// Runs one stage after checking its prerequisite; everything after the
    /// prerequisite is discarded first, so re-runs invalidate later stages.
    pub fn run_stage(&self, id: &str, req: &StageRequest) -> Result<StageReport, ServiceError> {
        self.update(id, |r| {
            let target = req.stage.target();
            if r.reached(Stage::Uploaded) {
                return Err(ServiceError::Frozen(r.id.clone()));
            }
            let prereq = target.prerequisite().unwrap_or(Stage::Parsed);
            if !r.reached(prereq) {
                if prereq == Stage::Parsed {
                    Self::ready_spec(r)?;
                }
                return Err(ServiceError::StageOrder {
                    requested: target,
                    missing: prereq,
                });
            }
            let started = std::time::Instant::now();
            match target {
                Stage::Routed => {
                    let spec = Self::ready_spec(r)?.clone();
                    r.invalidate_after(Some(Stage::Parsed));
                    self.route_stage(r, &spec, &req.options)?;
                }
                Stage::Pathed => {
                    let spec = Self::ready_spec(r)?.clone();
                    if let Some(label) = req.options.label {
                        let alt = r
                            .alternatives
                            .iter()
                            .find(|a| a.labels.contains(&label))
                            .ok_or_else(|| ServiceError::BadRequest(format!("no alternative labeled {label}")))?;
                        r.routes = vec![alt.route.clone()];
                        r.selected = Some(label);
                    }
                    r.invalidate_after(Some(Stage::Routed));
                    self.path_stage(r, &spec, &req.options)?;
                }
                Stage::Trajectoried => {
                    let spec = Self::ready_spec(r)?.clone();
                    r.invalidate_after(Some(Stage::Pathed));
                    let ctx = self.context(&spec)?;
                    r.trajectories = r
                        .paths
                        .iter()
                        .map(|p| build_trajectory(p, &self.catalog, &ctx.graph, &self.cfg.trajectory))
                        .collect::<Result<_, _>>()?;
                }
                Stage::Uploaded => {
                    r.uploaded_at = Some(Utc::now());
                }
                Stage::Parsed => unreachable!("no stage request targets parsing"),
            }
            r.stage = Some(target);
            log::info!("session {} {target} in {:.2} s", r.id, started.elapsed().as_secs_f64());
            Ok(StageReport::of(r))
        })
    }

    fn route_stage(&self, r: &mut SessionRecord, spec: &MissionSpec, opts: &StageOptions) -> Result<(), ServiceError> {
        let ctx = self.context(spec)?;
        let reference = self.catalog.reference_fuel_price();
        let routes: Vec<Route> = if spec.patrol.is_some() {
            let targets: Vec<String> = ctx
                .resolved
                .nodes
                .iter()
                .filter(|n| n.node_type == NodeType::PatrolCell)
                .map(|n| n.id.clone())
                .collect();
            let mut q = MultiUavQuery::new(&ctx.graph, &ctx.resolved.start_id, targets, spec.fleet_size as usize);
            q.vehicle = self.cfg.vehicle;
            q.reference_fuel_price = reference;
            plan_multi_uav(&q)?
        } else {
            let mut q = RouteQuery::new(&ctx.graph, &ctx.resolved.start_id, &ctx.resolved.end_id);
            q.required_types = spec
                .poi_requirements
                .iter()
                .map(|p| NodeType::Poi(p.category.clone()))
                .collect();
            q.constraints = spec.constraints.clone();
            q.preference = opts.preference.unwrap_or(spec.preference);
            q.vehicle = self.cfg.vehicle;
            q.reference_fuel_price = reference;
            r.alternatives = enumerate_alternatives(&q);
            let chosen = match r.alternatives.iter().find(|a| a.labels.contains(&q.preference)) {
                Some(a) => a.route.clone(),
                // surfaces the planner's reason
                None => plan_route(&q)?,
            };
            r.selected = Some(q.preference);
            vec![chosen]
        };
        r.graph = Some(GraphSummary::of(&ctx.graph));
        r.routes = routes;
        Ok(())
    }

    fn path_stage(&self, r: &mut SessionRecord, spec: &MissionSpec, opts: &StageOptions) -> Result<(), ServiceError> {
        let ctx = self.context(spec)?;
        let mut settings = self.cfg.path.clone();
        for c in [&mut settings.near, &mut settings.long] {
            if let Some(p) = opts.population {
                c.pso.population = p;
            }
            if let Some(g) = opts.generations {
                c.pso.generations = g;
            }
            if opts.time_budget_ms.is_some() {
                c.pso.time_budget_ms = opts.time_budget_ms;
            }
        }
        let seed = opts.seed.unwrap_or(self.cfg.seed);
        r.paths = r
            .routes
            .iter()
            .enumerate()
            .map(|(v, route)| {
                plan_path(route, &ctx.graph, &self.catalog, &settings.clone().with_seed(seed.wrapping_add(v as u64)))
            })
            .collect::<Result<_, _>>()?;
        Ok(())
    }

    pub fn overlay(&self, id: &str, layer: Layer) -> Result<Vec<u8>, ServiceError> {
        let r = self.store.load(id)?;
        match layer {
            Layer::Airspace => Ok(airspace_overlay(self.catalog.airspace_zones())),
            Layer::Population => Ok(population_overlay(self.catalog.population_zones())),
            Layer::Weather => Ok(weather_overlay(self.catalog.weather())),
            Layer::Route => {
                if !r.reached(Stage::Routed) {
                    return Err(ServiceError::UnknownLayer("route".into()));
                }
                let ctx = self.context(Self::ready_spec(&r)?)?;
                Ok(routes_overlay(&r.routes, &ctx.graph))
            }
            Layer::Path => {
                if !r.reached(Stage::Pathed) {
                    return Err(ServiceError::UnknownLayer("path".into()));
                }
                Ok(paths_overlay(&r.paths))
            }
        }
    }

    /// Mission file of one vehicle's trajectory.
    pub fn export(&self, id: &str, vehicle: usize) -> Result<Vec<u8>, ServiceError> {
        let r = self.store.load(id)?;
        if !r.reached(Stage::Trajectoried) {
            return Err(ServiceError::ExportUnavailable(Stage::Trajectoried));
        }
        let t = r
            .trajectories
            .get(vehicle)
            .ok_or_else(|| ServiceError::BadRequest(format!("no vehicle {vehicle}")))?;
        Ok(export_mission(t)?)
    }
}
