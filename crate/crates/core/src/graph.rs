//! Flight graph over resolved nodes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geodesy::great_circle_distance;
use crate::parser::{CandidateNode, NodeType};
use crate::GeoPoint;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GraphError {
    #[error("graph needs at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("duplicate node id {0:?}")]
    DuplicateId(String),
    #[error("invalid range limit {0}")]
    InvalidLimit(f64),
    #[error("invalid fuel parameters: tank {tank_l} L, burn {burn_km_per_l} km/L")]
    InvalidFuel { tank_l: f64, burn_km_per_l: f64 },
    #[error("unknown node {0:?}")]
    UnknownNode(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeAttrs {
    pub name: String,
    pub elevation: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fuel_price: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review_count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightNode {
    pub id: String,
    pub location: GeoPoint,
    pub node_type: NodeType,
    pub attrs: NodeAttrs,
}

impl From<CandidateNode> for FlightNode {
    fn from(c: CandidateNode) -> Self {
        Self {
            id: c.id,
            location: c.location,
            node_type: c.node_type,
            attrs: NodeAttrs {
                name: c.name,
                elevation: c.elevation,
                fuel_price: c.fuel_price,
                rating: c.rating,
                review_count: c.review_count,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    /// Great-circle distance in meters.
    pub w: f64,
}

/// Undirected graph; edges are every node pair within the range limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct FlightGraph {
    nodes: Vec<FlightNode>,
    edges: Vec<Edge>,
    range_limit: Option<f64>,
    index: BTreeMap<String, usize>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    nodes: Vec<FlightNode>,
    range_limit: Option<f64>,
}

impl TryFrom<RawGraph> for FlightGraph {
    type Error = GraphError;

    fn try_from(raw: RawGraph) -> Result<Self, Self::Error> {
        build_graph(raw.nodes, raw.range_limit)
    }
}

impl From<FlightGraph> for RawGraph {
    fn from(g: FlightGraph) -> Self {
        RawGraph {
            nodes: g.nodes,
            range_limit: g.range_limit,
        }
    }
}

/// Usable leg length in meters for a full tank.
pub fn max_leg_from_fuel(tank_l: f64, burn_km_per_l: f64) -> Result<f64, GraphError> {
    if !(tank_l > 0.0 && burn_km_per_l > 0.0 && tank_l.is_finite() && burn_km_per_l.is_finite()) {
        return Err(GraphError::InvalidFuel {
            tank_l,
            burn_km_per_l,
        });
    }
    Ok(tank_l * burn_km_per_l * 1000.0)
}

/// Builds the complete graph minus edges longer than `range_limit`.
/// Edges are ordered by (i, j) with i < j in node order.
pub fn build_graph(
    nodes: Vec<FlightNode>,
    range_limit: Option<f64>,
) -> Result<FlightGraph, GraphError> {
    if nodes.len() < 2 {
        return Err(GraphError::TooFewNodes(nodes.len()));
    }
    if let Some(l) = range_limit {
        if !(l > 0.0) || l.is_nan() {
            return Err(GraphError::InvalidLimit(l));
        }
    }
    let mut index = BTreeMap::new();
    for (i, n) in nodes.iter().enumerate() {
        if index.insert(n.id.clone(), i).is_some() {
            return Err(GraphError::DuplicateId(n.id.clone()));
        }
    }
    let n = nodes.len();
    let mut edges = Vec::new();
    let mut adjacency = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let w = great_circle_distance(&nodes[i].location, &nodes[j].location);
            if range_limit.is_some_and(|l| w > l) {
                continue;
            }
            edges.push(Edge { i, j, w });
            adjacency[i].push((j, w));
            adjacency[j].push((i, w));
        }
    }
    Ok(FlightGraph {
        nodes,
        edges,
        range_limit,
        index,
        adjacency,
    })
}

impl FlightGraph {
    pub fn nodes(&self) -> &[FlightNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn range_limit(&self) -> Option<f64> {
        self.range_limit
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn node(&self, i: usize) -> &FlightNode {
        &self.nodes[i]
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    /// Edge weight between two nodes, if they are connected.
    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        if i == j {
            return None;
        }
        let w = great_circle_distance(&self.nodes[i].location, &self.nodes[j].location);
        match self.range_limit {
            Some(l) if w > l => None,
            _ => Some(w),
        }
    }

    /// Debug dump: one object with nodes and edges by id.
    pub fn dump_json(&self) -> serde_json::Value {
        serde_json::json!({
            "range_limit_m": self.range_limit,
            "nodes": self.nodes,
            "edges": self.edges.iter().map(|e| serde_json::json!({
                "from": self.nodes[e.i].id,
                "to": self.nodes[e.j].id,
                "w_m": e.w,
            })).collect::<Vec<_>>(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str, lat: f64, lon: f64) -> FlightNode {
        FlightNode {
            id: id.into(),
            location: GeoPoint::new(lat, lon).unwrap(),
            node_type: NodeType::RefuelAirport,
            attrs: NodeAttrs::default(),
        }
    }

    #[test]
    fn fuel_range() {
        assert_eq!(max_leg_from_fuel(80.0, 10.95).unwrap(), 876_000.0);
        assert_eq!(max_leg_from_fuel(40.0, 10.95).unwrap(), 438_000.0);
        assert!(max_leg_from_fuel(0.0, 10.95).is_err());
        assert!(max_leg_from_fuel(80.0, -1.0).is_err());
    }

    #[test]
    fn complete_graph_counts() {
        let g = build_graph(vec![node("a", 0.0, 0.0), node("b", 0.0, 1.0)], None).unwrap();
        assert_eq!(g.edges().len(), 1);
        let nodes: Vec<FlightNode> = (0..7)
            .map(|i| node(&format!("n{i}"), i as f64, 0.0))
            .collect();
        let g = build_graph(nodes, None).unwrap();
        assert_eq!(g.edges().len(), 21);
        assert!(g
            .edges()
            .windows(2)
            .all(|w| (w[0].i, w[0].j) < (w[1].i, w[1].j)));
    }

    #[test]
    fn range_limit_drops_long_edges() {
        // about 900 km apart along the equator
        let d: f64 = 900_000.0 / 6.371e6;
        let g = build_graph(
            vec![node("a", 0.0, 0.0), node("b", 0.0, d.to_degrees())],
            Some(876_000.0),
        )
        .unwrap();
        assert!(g.edges().is_empty());
        assert_eq!(g.weight(0, 1), None);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            build_graph(vec![node("a", 0.0, 0.0)], None),
            Err(GraphError::TooFewNodes(1))
        );
        assert_eq!(
            build_graph(vec![node("a", 0.0, 0.0), node("a", 1.0, 0.0)], None),
            Err(GraphError::DuplicateId("a".into()))
        );
    }

    #[test]
    fn serde_round_trip_rebuilds_edges() {
        let g = build_graph(
            vec![
                node("a", 0.0, 0.0),
                node("b", 0.0, 1.0),
                node("c", 5.0, 1.0),
            ],
            Some(200_000.0),
        )
        .unwrap();
        let back: FlightGraph = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
