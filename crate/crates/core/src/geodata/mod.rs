//! Service data: airports, POIs, airspace and population zones, weather.

mod load;
mod polygon;
mod weather;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geodesy::great_circle_distance;
use crate::{GeoPoint, Waypoint3D};

pub use load::{load_catalog, CatalogError, CatalogSources, Diagnostic, LoadReport};
pub use polygon::{circle, Polygon, PolygonError};
pub use weather::{AltitudeBand, CellParams, RiskWeights, WeatherError, WeatherGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PatternSide {
    Left,
    Right,
}

impl PatternSide {
    /// -1 for left-hand patterns, +1 for right-hand.
    pub fn sign(self) -> f64 {
        match self {
            PatternSide::Left => -1.0,
            PatternSide::Right => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Runway {
    pub endpoint_a: GeoPoint,
    pub endpoint_b: GeoPoint,
    /// Degrees in [0, 360).
    pub heading: f64,
    pub pattern_side: PatternSide,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Airport {
    pub id: String,
    pub name: String,
    pub location: GeoPoint,
    pub elevation: f64,
    pub runways: Vec<Runway>,
    pub fuel_price: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poi {
    pub id: String,
    pub name: String,
    pub category: String,
    pub location: GeoPoint,
    pub rating: Option<f64>,
    pub review_count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirspaceZone {
    pub id: String,
    pub boundary: Polygon,
    pub floor_alt: f64,
    pub ceiling_alt: f64,
    pub class: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationZone {
    pub id: String,
    pub boundary: Polygon,
    pub density_weight: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CatalogBuildError {
    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },
}

/// Immutable collection of service data with id indexes.
#[derive(Debug, Clone, Default)]
pub struct DataCatalog {
    airports: Vec<Airport>,
    pois: Vec<Poi>,
    airspace_zones: Vec<AirspaceZone>,
    population_zones: Vec<PopulationZone>,
    weather: Option<WeatherGrid>,
    airport_index: BTreeMap<String, usize>,
    poi_index: BTreeMap<String, usize>,
}

/// Summary counts reported after loading.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogCounts {
    pub airports: usize,
    pub priced_airports: usize,
    pub pois: usize,
    pub airspace_zones: usize,
    pub population_zones: usize,
    pub weather_cells: usize,
    pub fuel_price_min: Option<f64>,
    pub fuel_price_max: Option<f64>,
}

fn index_ids<'a>(
    kind: &'static str,
    ids: impl Iterator<Item = &'a str>,
) -> Result<BTreeMap<String, usize>, CatalogBuildError> {
    let mut index = BTreeMap::new();
    for (i, id) in ids.enumerate() {
        if index.insert(id.to_string(), i).is_some() {
            return Err(CatalogBuildError::DuplicateId {
                kind,
                id: id.to_string(),
            });
        }
    }
    Ok(index)
}

impl DataCatalog {
    pub fn new(
        airports: Vec<Airport>,
        pois: Vec<Poi>,
        airspace_zones: Vec<AirspaceZone>,
        population_zones: Vec<PopulationZone>,
        weather: Option<WeatherGrid>,
    ) -> Result<Self, CatalogBuildError> {
        let airport_index = index_ids("airport", airports.iter().map(|a| a.id.as_str()))?;
        let poi_index = index_ids("poi", pois.iter().map(|p| p.id.as_str()))?;
        index_ids(
            "airspace zone",
            airspace_zones.iter().map(|z| z.id.as_str()),
        )?;
        index_ids(
            "population zone",
            population_zones.iter().map(|z| z.id.as_str()),
        )?;
        Ok(Self {
            airports,
            pois,
            airspace_zones,
            population_zones,
            weather,
            airport_index,
            poi_index,
        })
    }

    pub fn airports(&self) -> &[Airport] {
        &self.airports
    }

    pub fn pois(&self) -> &[Poi] {
        &self.pois
    }

    pub fn airspace_zones(&self) -> &[AirspaceZone] {
        &self.airspace_zones
    }

    pub fn population_zones(&self) -> &[PopulationZone] {
        &self.population_zones
    }

    pub fn weather(&self) -> Option<&WeatherGrid> {
        self.weather.as_ref()
    }

    pub fn airport(&self, id: &str) -> Option<&Airport> {
        self.airport_index.get(id).map(|&i| &self.airports[i])
    }

    pub fn poi(&self, id: &str) -> Option<&Poi> {
        self.poi_index.get(id).map(|&i| &self.pois[i])
    }

    /// Distinct POI categories, sorted.
    pub fn categories(&self) -> Vec<String> {
        let mut cats: Vec<String> = self.pois.iter().map(|p| p.category.clone()).collect();
        cats.sort();
        cats.dedup();
        cats
    }

    pub fn counts(&self) -> CatalogCounts {
        let prices: Vec<f64> = self.airports.iter().filter_map(|a| a.fuel_price).collect();
        CatalogCounts {
            airports: self.airports.len(),
            priced_airports: prices.len(),
            pois: self.pois.len(),
            airspace_zones: self.airspace_zones.len(),
            population_zones: self.population_zones.len(),
            weather_cells: self.weather.as_ref().map_or(0, |w| w.rows() * w.cols()),
            fuel_price_min: prices.iter().copied().reduce(f64::min),
            fuel_price_max: prices.iter().copied().reduce(f64::max),
        }
    }

    /// Median fuel price across priced airports.
    pub fn reference_fuel_price(&self) -> Option<f64> {
        let mut prices: Vec<f64> = self.airports.iter().filter_map(|a| a.fuel_price).collect();
        if prices.is_empty() {
            return None;
        }
        prices.sort_by(f64::total_cmp);
        let n = prices.len();
        Some(if n % 2 == 1 {
            prices[n / 2]
        } else {
            (prices[n / 2 - 1] + prices[n / 2]) / 2.0
        })
    }

    /// POIs of `category` within `radius` meters of `center`, nearest first.
    pub fn radius_search(&self, center: &GeoPoint, radius: f64, category: &str) -> Vec<&Poi> {
        let mut hits: Vec<(f64, &Poi)> = self
            .pois
            .iter()
            .filter(|p| p.category == category)
            .map(|p| (great_circle_distance(center, &p.location), p))
            .filter(|(d, _)| *d <= radius)
            .collect();
        hits.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.id.cmp(&b.1.id)));
        hits.into_iter().map(|(_, p)| p).collect()
    }

    /// Nearest airport to `p`, ties by id.
    pub fn nearest_airport(&self, p: &GeoPoint) -> Option<&Airport> {
        self.airports
            .iter()
            .map(|a| (great_circle_distance(p, &a.location), a))
            .min_by(|x, y| x.0.total_cmp(&y.0).then_with(|| x.1.id.cmp(&y.1.id)))
            .map(|(_, a)| a)
    }

    /// Length of the segment inside any airspace zone, within that zone's
    /// altitude band. Overlapping zones are counted once.
    pub fn restricted_crossing_length(&self, a: &Waypoint3D, b: &Waypoint3D) -> f64 {
        let mut spans = Vec::new();
        for zone in &self.airspace_zones {
            let Some((lo, hi)) = band_fraction(a.alt(), b.alt(), zone.floor_alt, zone.ceiling_alt)
            else {
                continue;
            };
            let inside = zone.boundary.arc_inside_intervals(&a.point, &b.point);
            spans.extend(polygon::intersect(&inside, lo, hi));
        }
        polygon::covered_length(&a.point, &b.point, &polygon::union(spans))
    }

    /// Sum over population zones of density weight times length inside.
    pub fn population_crossing_length(&self, a: &Waypoint3D, b: &Waypoint3D) -> f64 {
        self.population_zones
            .iter()
            .map(|zone| {
                let inside = zone.boundary.arc_inside_intervals(&a.point, &b.point);
                zone.density_weight * polygon::covered_length(&a.point, &b.point, &inside)
            })
            .sum()
    }

    pub fn weather_risk_along(
        &self,
        a: &Waypoint3D,
        b: &Waypoint3D,
        band: AltitudeBand,
    ) -> Result<f64, WeatherError> {
        match &self.weather {
            Some(grid) => grid.risk_along(&a.point, &b.point, band),
            None => Err(WeatherError::NoGrid),
        }
    }
}

/// Fraction range of a linearly climbing segment that lies within [floor, ceiling].
fn band_fraction(alt_a: f64, alt_b: f64, floor: f64, ceiling: f64) -> Option<(f64, f64)> {
    if alt_a == alt_b {
        return (alt_a >= floor && alt_a <= ceiling).then_some((0.0, 1.0));
    }
    let at = |h: f64| (h - alt_a) / (alt_b - alt_a);
    let (lo, hi) = if alt_b > alt_a {
        (at(floor), at(ceiling))
    } else {
        (at(ceiling), at(floor))
    };
    let (lo, hi) = (lo.max(0.0), hi.min(1.0));
    (hi > lo).then_some((lo, hi))
}
