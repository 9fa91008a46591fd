//! Matching mission references against the catalog.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{MissionSpec, NodeType, PlaceRef, RangeClass};
use crate::geodata::{Airport, DataCatalog, Poi};
use crate::geodesy::great_circle_distance;
use crate::GeoPoint;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ResolveError {
    #[error("cannot resolve {reference:?}; nearest matches: {}", suggestions.join(", "))]
    Unresolved {
        reference: String,
        suggestions: Vec<String>,
    },
    #[error("no POIs of category {category:?}; known categories: {}", suggestions.join(", "))]
    UnknownCategory {
        category: String,
        suggestions: Vec<String>,
    },
    #[error("no {target} within {radius_m} m of {center}")]
    EmptyPatrol {
        target: String,
        center: String,
        radius_m: f64,
    },
    #[error("mission is incomplete: missing {0:?}")]
    Incomplete(Vec<String>),
    #[error("node id {0:?} used by both an airport and a POI")]
    IdCollision(String),
}

/// Distance thresholds for inferring the range class, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeThresholds {
    pub short_below_m: f64,
    pub medium_below_m: f64,
}

impl Default for RangeThresholds {
    fn default() -> Self {
        Self {
            short_below_m: 20_000.0,
            medium_below_m: 500_000.0,
        }
    }
}

impl RangeThresholds {
    pub fn classify(&self, d: f64) -> RangeClass {
        if d < self.short_below_m {
            RangeClass::Short
        } else if d < self.medium_below_m {
            RangeClass::Medium
        } else {
            RangeClass::Long
        }
    }
}

/// A vertex of the flight graph with its attributes and type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateNode {
    pub id: String,
    pub name: String,
    pub location: GeoPoint,
    pub node_type: NodeType,
    /// Ground elevation in meters; zero for POIs.
    pub elevation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuel_price: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review_count: Option<u64>,
}

impl CandidateNode {
    fn airport(a: &Airport, node_type: NodeType) -> Self {
        Self {
            id: a.id.clone(),
            name: a.name.clone(),
            location: a.location,
            node_type,
            elevation: a.elevation,
            fuel_price: a.fuel_price,
            rating: None,
            review_count: None,
        }
    }

    fn poi(p: &Poi, node_type: NodeType) -> Self {
        Self {
            id: p.id.clone(),
            name: p.name.clone(),
            location: p.location,
            node_type,
            elevation: 0.0,
            fuel_price: None,
            rating: p.rating,
            review_count: p.review_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedMission {
    pub spec: MissionSpec,
    /// Start node first, end node last when distinct; the rest by type then id.
    pub nodes: Vec<CandidateNode>,
    pub start_id: String,
    pub end_id: String,
}

impl ResolvedMission {
    pub fn is_closed(&self) -> bool {
        self.start_id == self.end_id
    }

    pub fn node(&self, id: &str) -> Option<&CandidateNode> {
        self.nodes.iter().find(|n| n.id == id)
    }
}

trait Named {
    fn id(&self) -> &str;
    fn name(&self) -> &str;
}

impl Named for Airport {
    fn id(&self) -> &str {
        &self.id
    }
    fn name(&self) -> &str {
        &self.name
    }
}

impl Named for Poi {
    fn id(&self) -> &str {
        &self.id
    }
    fn name(&self) -> &str {
        &self.name
    }
}

/// Exact id, then exact name, name prefix, name substring (case-insensitive).
/// Ties go to the shortest name, then the smallest id.
fn lookup<'a, T: Named>(items: &'a [T], reference: &str) -> Option<&'a T> {
    let r = reference.trim();
    if let Some(hit) = items.iter().find(|i| i.id() == r) {
        return Some(hit);
    }
    let lower = r.to_lowercase();
    let tiers: [&dyn Fn(&str) -> bool; 4] = [
        &|id_or_name: &str| id_or_name == lower,
        &|name: &str| name == lower,
        &|name: &str| name.starts_with(&lower),
        &|name: &str| name.contains(&lower),
    ];
    for (tier, test) in tiers.iter().enumerate() {
        let best = items
            .iter()
            .filter(|i| {
                if tier == 0 {
                    test(&i.id().to_lowercase())
                } else {
                    test(&i.name().to_lowercase())
                }
            })
            .min_by(|a, b| {
                a.name()
                    .len()
                    .cmp(&b.name().len())
                    .then_with(|| a.id().cmp(b.id()))
            });
        if best.is_some() {
            return best;
        }
    }
    None
}

fn nearest_names(candidates: impl Iterator<Item = String>, reference: &str) -> Vec<String> {
    let r = reference.to_lowercase();
    let mut scored: Vec<(f64, String)> = candidates
        .map(|c| (strsim::normalized_levenshtein(&r, &c.to_lowercase()), c))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
    scored.dedup_by(|a, b| a.1 == b.1);
    scored.into_iter().take(3).map(|(_, c)| c).collect()
}

fn unresolved(catalog: &DataCatalog, reference: &str) -> ResolveError {
    let names = catalog
        .airports()
        .iter()
        .map(|a| a.name.clone())
        .chain(catalog.pois().iter().map(|p| p.name.clone()));
    ResolveError::Unresolved {
        reference: reference.to_string(),
        suggestions: nearest_names(names, reference),
    }
}

fn resolve_airport<'a>(
    catalog: &'a DataCatalog,
    r: &PlaceRef,
) -> Result<&'a Airport, ResolveError> {
    lookup(catalog.airports(), &r.text).ok_or_else(|| unresolved(catalog, &r.text))
}

fn mark(r: &mut PlaceRef, id: &str, at: GeoPoint) {
    r.node_id = Some(id.to_string());
    r.resolved = Some(at);
}

/// Matches the spec's references to catalog entries and collects the
/// candidate nodes of the flight graph.
///
/// Patrol centers resolve against airports first, then POI names; the
/// depot is the matched airport or the airport nearest the center.
/// Refuel airports are included unless the mission is short range.
pub fn resolve_nodes(
    spec: &MissionSpec,
    catalog: &DataCatalog,
    thresholds: &RangeThresholds,
) -> Result<ResolvedMission, ResolveError> {
    let missing = spec.missing_fields();
    if !missing.is_empty() {
        return Err(ResolveError::Incomplete(missing));
    }
    let mut spec = spec.clone();
    let mut patrol_cells: Vec<&Poi> = Vec::new();

    let (start, end) = if let Some(patrol) = spec.patrol.as_mut() {
        let (center, depot) = match lookup(catalog.airports(), &patrol.center_ref.text) {
            Some(a) => (a.location, a),
            None => {
                let poi = lookup(catalog.pois(), &patrol.center_ref.text)
                    .ok_or_else(|| unresolved(catalog, &patrol.center_ref.text))?;
                let depot = catalog
                    .nearest_airport(&poi.location)
                    .ok_or_else(|| unresolved(catalog, &patrol.center_ref.text))?;
                (poi.location, depot)
            }
        };
        mark(&mut patrol.center_ref, &depot.id, center);
        patrol_cells = catalog.radius_search(&center, patrol.radius_m, &patrol.target);
        if patrol_cells.is_empty() {
            return Err(ResolveError::EmptyPatrol {
                target: patrol.target.clone(),
                center: patrol.center_ref.text.clone(),
                radius_m: patrol.radius_m,
            });
        }
        let start = match &spec.start_ref {
            Some(r) => resolve_airport(catalog, r)?,
            None => depot,
        };
        let end = match &spec.end_ref {
            Some(r) => resolve_airport(catalog, r)?,
            None => start,
        };
        (start, end)
    } else {
        let s = resolve_airport(catalog, spec.start_ref.as_ref().expect("checked"))?;
        let e = resolve_airport(catalog, spec.end_ref.as_ref().expect("checked"))?;
        (s, e)
    };
    let start_ref = spec
        .start_ref
        .get_or_insert_with(|| PlaceRef::new(start.name.clone()));
    mark(start_ref, &start.id, start.location);
    let end_ref = spec
        .end_ref
        .get_or_insert_with(|| PlaceRef::new(end.name.clone()));
    mark(end_ref, &end.id, end.location);

    let mut by_category: Vec<(String, Vec<&Poi>)> = Vec::new();
    for req in &spec.poi_requirements {
        let hits: Vec<&Poi> = catalog
            .pois()
            .iter()
            .filter(|p| p.category == req.category)
            .collect();
        if hits.is_empty() {
            return Err(ResolveError::UnknownCategory {
                category: req.category.clone(),
                suggestions: nearest_names(catalog.categories().into_iter(), &req.category),
            });
        }
        by_category.push((req.category.clone(), hits));
    }

    if spec.range_class.is_none() {
        let mut d = great_circle_distance(&start.location, &end.location);
        for (_, hits) in &by_category {
            let nearest = hits
                .iter()
                .map(|p| great_circle_distance(&start.location, &p.location))
                .fold(f64::INFINITY, f64::min);
            d = d.max(nearest);
        }
        spec.range_class = Some(thresholds.classify(d));
    }

    let mut nodes = vec![CandidateNode::airport(start, NodeType::Takeoff)];
    let mut used: BTreeSet<String> = BTreeSet::new();
    used.insert(start.id.clone());
    used.insert(end.id.clone());
    let mut middle = Vec::new();
    for cell in &patrol_cells {
        middle.push(CandidateNode::poi(cell, NodeType::PatrolCell));
    }
    for (category, hits) in &by_category {
        for p in hits {
            middle.push(CandidateNode::poi(p, NodeType::Poi(category.clone())));
        }
    }
    if spec.range_class != Some(RangeClass::Short) {
        for a in catalog.airports() {
            if !used.contains(&a.id) {
                middle.push(CandidateNode::airport(a, NodeType::RefuelAirport));
            }
        }
    }
    middle.sort_by(|a, b| a.node_type.cmp(&b.node_type).then_with(|| a.id.cmp(&b.id)));
    middle.dedup_by(|a, b| a.id == b.id && a.node_type == b.node_type);
    for n in middle {
        if !used.insert(n.id.clone()) {
            return Err(ResolveError::IdCollision(n.id));
        }
        nodes.push(n);
    }
    if end.id != start.id {
        nodes.push(CandidateNode::airport(end, NodeType::Landing));
    }
    Ok(ResolvedMission {
        start_id: start.id.clone(),
        end_id: end.id.clone(),
        spec,
        nodes,
    })
}
