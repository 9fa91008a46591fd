mod common;

use std::collections::BTreeMap;
use std::io::Write;

use common::*;
use nelv_core::geodata::*;
use nelv_core::geodesy::{destination_point, intermediate_point};
use nelv_core::{GeoPoint, Waypoint3D};
use proptest::prelude::*;

fn p(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint::new(lat, lon).unwrap()
}

fn wp(lat: f64, lon: f64, alt: f64) -> Waypoint3D {
    Waypoint3D::new(p(lat, lon), alt).unwrap()
}

fn load_dir(name: &str) -> LoadReport {
    load_catalog(&CatalogSources::from_dir(fixtures().join(name))).unwrap()
}

/// Square zone `half_m` meters either side of the center, meridian east/west edges.
fn square_ring(lat: f64, lon: f64, half_m: f64) -> Vec<(f64, f64)> {
    let dlat = (half_m / R).to_degrees();
    let dlon = dlat / lat.to_radians().cos();
    vec![
        (lat - dlat, lon - dlon),
        (lat - dlat, lon + dlon),
        (lat + dlat, lon + dlon),
        (lat + dlat, lon - dlon),
    ]
}

fn polygon(ring: &[(f64, f64)]) -> Polygon {
    Polygon::new(ring.iter().map(|&(a, b)| p(a, b)).collect()).unwrap()
}

fn zone_catalog(ring: &[(f64, f64)], floor: f64, ceiling: f64) -> DataCatalog {
    DataCatalog::new(
        vec![],
        vec![],
        vec![AirspaceZone {
            id: "z".into(),
            boundary: polygon(ring),
            floor_alt: floor,
            ceiling_alt: ceiling,
            class: "R".into(),
        }],
        vec![],
        None,
    )
    .unwrap()
}

fn population_catalog(ring: &[(f64, f64)], weight: f64) -> DataCatalog {
    DataCatalog::new(
        vec![],
        vec![],
        vec![],
        vec![PopulationZone {
            id: "city".into(),
            boundary: polygon(ring),
            density_weight: weight,
        }],
        None,
    )
    .unwrap()
}

#[test]
fn conus_fixture_counts() {
    let start = std::time::Instant::now();
    let report = load_dir("conus");
    let c = report.catalog.counts();
    assert_eq!(c.airports, 2577);
    assert_eq!(c.priced_airports, 2076);
    assert_eq!(c.fuel_price_min, Some(0.74));
    assert_eq!(c.fuel_price_max, Some(2.77));
    assert!(report.diagnostics.is_empty(), "{:?}", report.diagnostics);
    assert!(start.elapsed().as_secs_f64() < 2.0);
}

#[test]
fn all_fixture_dirs_load_cleanly() {
    for dir in ["uc1", "uc2", "uc3"] {
        let report = load_dir(dir);
        assert!(
            report.diagnostics.is_empty(),
            "{dir}: {:?}",
            report.diagnostics
        );
    }
    let uc2 = load_dir("uc2").catalog;
    assert_eq!(uc2.counts().airspace_zones, 3);
    assert_eq!(uc2.counts().population_zones, 4);
    assert_eq!(uc2.counts().weather_cells, 24 * 28);
    assert!(uc2.airport("FKR").unwrap().fuel_price.is_none());
    let laf = uc2.airport("LAF").unwrap();
    assert_eq!(laf.runways.len(), 2);
    assert_eq!(laf.runways[1].pattern_side, PatternSide::Right);
}

#[test]
fn radius_search_matches_linear_scan() {
    for dir in ["uc1", "uc2"] {
        let cat = load_dir(dir).catalog;
        for airport in cat.airports() {
            for category in cat.categories() {
                for radius in [500.0, 5_000.0, 20_000.0] {
                    let (la, lo) = (airport.location.lat(), airport.location.lon());
                    let mut expected: Vec<(f64, String)> = cat
                        .pois()
                        .iter()
                        .filter(|q| q.category == category)
                        .map(|q| {
                            (
                                haversine(la, lo, q.location.lat(), q.location.lon()),
                                q.id.clone(),
                            )
                        })
                        .filter(|(d, _)| *d <= radius)
                        .collect();
                    expected.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                    let got: Vec<String> = cat
                        .radius_search(&airport.location, radius, &category)
                        .iter()
                        .map(|q| q.id.clone())
                        .collect();
                    let want: Vec<String> = expected.into_iter().map(|(_, id)| id).collect();
                    assert_eq!(got, want, "{dir} {} {category} {radius}", airport.id);
                }
            }
        }
    }
}

#[test]
fn uc1_forest_cells_within_five_km() {
    let cat = load_dir("uc1").catalog;
    let laf = cat.airport("LAF").unwrap();
    let hits = cat.radius_search(&laf.location, 5_000.0, "forest");
    assert_eq!(hits.len(), 25);
    assert!(hits.iter().all(|h| h.id.starts_with("forest-")));
}

#[test]
fn radius_search_degenerate_and_empty() {
    let cat = load_dir("uc2").catalog;
    let poi = &cat.pois()[0];
    let hits = cat.radius_search(&poi.location, 0.001, &poi.category);
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].id, poi.id);
    assert!(cat
        .radius_search(&p(-30.0, 120.0), 50_000.0, &poi.category)
        .is_empty());
    assert!(cat
        .radius_search(&poi.location, 50_000.0, "volcano")
        .is_empty());
}

#[test]
fn restricted_crossing_square_zone() {
    let ring = square_ring(40.0, -86.0, 5_000.0);
    let cat = zone_catalog(&ring, 0.0, 1_000.0);
    let a = (40.0, -86.2);
    let b = (40.0, -85.8);
    let got = cat.restricted_crossing_length(&wp(a.0, a.1, 500.0), &wp(b.0, b.1, 500.0));
    let oracle = sampled_inside_length(a, b, &ring, 1.0);
    assert!((got - oracle).abs() < 2.0, "{got} vs {oracle}");
    assert!((got - 10_000.0).abs() < 20.0, "{got}");

    // above the ceiling
    assert_eq!(
        cat.restricted_crossing_length(&wp(a.0, a.1, 1500.0), &wp(b.0, b.1, 1500.0)),
        0.0
    );
    // nowhere near
    assert_eq!(
        cat.restricted_crossing_length(&wp(41.0, -86.2, 500.0), &wp(41.0, -85.8, 500.0)),
        0.0
    );
}

#[test]
fn restricted_crossing_climbing_through_band() {
    let ring = square_ring(40.0, -86.0, 5_000.0);
    let cat = zone_catalog(&ring, 0.0, 1_000.0);
    let (a, b) = ((40.0, -86.2), (40.0, -85.8));
    // climbs from 0 to 2000 m: in band over the first half of the arc
    let got = cat.restricted_crossing_length(&wp(a.0, a.1, 0.0), &wp(b.0, b.1, 2000.0));
    let len = haversine(a.0, a.1, b.0, b.1);
    let n = 40_000;
    let mut oracle = 0.0;
    for k in 0..n {
        let f = (k as f64 + 0.5) / n as f64;
        let (lat, lon) = along(a.0, a.1, b.0, b.1, f);
        if 2000.0 * f <= 1000.0 && inside(lat, lon, &ring) {
            oracle += len / n as f64;
        }
    }
    assert!((got - oracle).abs() < 2.0, "{got} vs {oracle}");
    assert!((got - 5_000.0).abs() < 20.0, "{got}");
}

#[test]
fn overlapping_zones_counted_once() {
    let ring = square_ring(40.0, -86.0, 5_000.0);
    let mut zones = Vec::new();
    for id in ["a", "b"] {
        zones.push(AirspaceZone {
            id: id.into(),
            boundary: polygon(&ring),
            floor_alt: 0.0,
            ceiling_alt: 1000.0,
            class: "R".into(),
        });
    }
    let cat = DataCatalog::new(vec![], vec![], zones, vec![], None).unwrap();
    let got = cat.restricted_crossing_length(&wp(40.0, -86.2, 100.0), &wp(40.0, -85.8, 100.0));
    assert!((got - 10_000.0).abs() < 20.0, "{got}");
}

#[test]
fn population_crossing_is_weighted() {
    let ring = square_ring(40.0, -86.0, 1_500.0);
    let (a, b) = ((40.0, -86.1), (40.0, -85.9));
    let oracle = sampled_inside_length(a, b, &ring, 1.0);
    let one = population_catalog(&ring, 1.0)
        .population_crossing_length(&wp(a.0, a.1, 100.0), &wp(b.0, b.1, 100.0));
    let two = population_catalog(&ring, 2.0)
        .population_crossing_length(&wp(a.0, a.1, 100.0), &wp(b.0, b.1, 100.0));
    assert!((one - oracle).abs() < 2.0, "{one} vs {oracle}");
    assert!((one - 3_000.0).abs() < 10.0, "{one}");
    assert!((two - 2.0 * one).abs() < 1e-9);
    let empty = DataCatalog::default();
    assert_eq!(
        empty.population_crossing_length(&wp(a.0, a.1, 0.0), &wp(b.0, b.1, 0.0)),
        0.0
    );
}

#[test]
fn fixture_zones_match_sampling_oracle() {
    let cat = load_dir("uc2").catalog;
    let legs = [
        ("LAF", "IND"),
        ("IND", "FKR"),
        ("TYQ", "LAF"),
        ("FKR", "TYQ"),
    ];
    for (from, to) in legs {
        let a = cat.airport(from).unwrap().location;
        let b = cat.airport(to).unwrap().location;
        let (pa, pb) = ((a.lat(), a.lon()), (b.lat(), b.lon()));
        let mut pop_oracle = 0.0;
        for z in cat.population_zones() {
            let ring: Vec<(f64, f64)> = z
                .boundary
                .vertices()
                .iter()
                .map(|v| (v.lat(), v.lon()))
                .collect();
            pop_oracle += z.density_weight * sampled_inside_length(pa, pb, &ring, 1.0);
        }
        let got = cat.population_crossing_length(
            &Waypoint3D::new(a, 300.0).unwrap(),
            &Waypoint3D::new(b, 300.0).unwrap(),
        );
        assert!(
            (got - pop_oracle).abs() < 8.0,
            "{from}-{to}: {got} vs {pop_oracle}"
        );
    }
}

#[test]
fn weather_integral_matches_fine_step_oracle() {
    let cat = load_dir("uc2").catalog;
    let grid = cat.weather().unwrap();
    for band in [AltitudeBand::Low, AltitudeBand::High] {
        for (from, to) in [("LAF", "IND"), ("FKR", "TYQ")] {
            let a = cat.airport(from).unwrap().location;
            let b = cat.airport(to).unwrap().location;
            let got = cat
                .weather_risk_along(
                    &Waypoint3D::new(a, 300.0).unwrap(),
                    &Waypoint3D::new(b, 300.0).unwrap(),
                    band,
                )
                .unwrap();
            let oracle = weather_oracle(grid, band, (a.lat(), a.lon()), (b.lat(), b.lon()));
            assert!(got > 0.0);
            assert!(
                (got - oracle).abs() <= 1e-4 * oracle + 1.0,
                "{band:?} {from}-{to}: {got} vs {oracle}"
            );
        }
    }
}

#[test]
fn heterogeneous_grid_value_is_stable() {
    // two-cell grid: risk 0 west of -86, 1 east of it
    let mut bands = BTreeMap::new();
    bands.insert(AltitudeBand::Low, vec![0.0, 1.0]);
    let grid = WeatherGrid::from_risk(39.5, -87.0, 1.0, 1, 2, bands).unwrap();
    let cat = DataCatalog::new(vec![], vec![], vec![], vec![], Some(grid.clone())).unwrap();
    let (a, b) = ((40.0, -86.3), (40.1, -85.6));
    let got = cat
        .weather_risk_along(&wp(a.0, a.1, 0.0), &wp(b.0, b.1, 0.0), AltitudeBand::Low)
        .unwrap();
    let oracle = weather_oracle(&grid, AltitudeBand::Low, a, b);
    assert!((got - oracle).abs() < 1.0, "{got} vs {oracle}");
}

#[test]
fn weather_without_grid_or_coverage() {
    let cat = DataCatalog::default();
    assert_eq!(
        cat.weather_risk_along(&wp(0.0, 0.0, 0.0), &wp(0.0, 0.1, 0.0), AltitudeBand::Low),
        Err(WeatherError::NoGrid)
    );
    let uc2 = load_dir("uc2").catalog;
    let err = uc2
        .weather_risk_along(
            &wp(40.0, -86.5, 0.0),
            &wp(45.0, -86.5, 0.0),
            AltitudeBand::Low,
        )
        .unwrap_err();
    assert!(matches!(err, WeatherError::Coverage { .. }));
    assert!(err.to_string().contains("outside"));
}

fn temp_file(contents: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(contents.as_bytes()).unwrap();
    f
}

#[test]
fn empty_poi_file_is_fine() {
    let f = temp_file("");
    let report = load_catalog(&CatalogSources {
        pois: Some(f.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap();
    assert_eq!(report.catalog.pois().len(), 0);
    assert!(report.diagnostics.is_empty());
}

#[test]
fn malformed_rows_become_diagnostics() {
    let f = temp_file(
        "# format_version: 1\n\
         id,name,lat,lon,elev_m,fuel_price_per_l,runways\n\
         AAA,Good,40.0,-86.0,200,1.5,40.0:-86.01:40.0:-85.99:90:L\n\
         BBB,Bad lat,140.0,-86.0,200,1.5,40.0:-86.01:40.0:-85.99:90:L\n\
         CCC,No runways,40.0,-86.0,200,,\n\
         DDD,Negative price,40.0,-86.0,200,-1,40.0:-86.01:40.0:-85.99:90:L\n\
         AAA,Duplicate,40.0,-86.0,200,1.5,40.0:-86.01:40.0:-85.99:90:L\n\
         EEE,Unpriced,40.1,-86.0,200,,40.1:-86.01:40.1:-85.99:90:R\n",
    );
    let report = load_catalog(&CatalogSources {
        airports: Some(f.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap();
    let ids: Vec<&str> = report
        .catalog
        .airports()
        .iter()
        .map(|a| a.id.as_str())
        .collect();
    assert_eq!(ids, ["AAA", "EEE"]);
    let lines: Vec<usize> = report.diagnostics.iter().map(|d| d.line).collect();
    assert_eq!(lines, [4, 5, 6, 7]);
    assert!(report.catalog.airport("EEE").unwrap().fuel_price.is_none());
}

#[test]
fn poi_rows_are_validated() {
    let f = temp_file(
        "{\"format_version\": 1}\n\
         {\"id\": \"a\", \"name\": \"A\", \"category\": \"pharmacy\", \"lat\": 40, \"lon\": -86}\n\
         {\"id\": \"b\", \"name\": \"B\", \"category\": \"\", \"lat\": 40, \"lon\": -86}\n\
         {\"id\": \"c\", \"name\": \"C\", \"category\": \"pharmacy\", \"lat\": 40, \"lon\": -86, \"rating\": 4.0}\n\
         not json\n\
         {\"id\": \"d\", \"name\": \"D\", \"category\": \"Supermarket\", \"lat\": 40, \"lon\": -86, \"rating\": 4.0, \"review_count\": 3}\n",
    );
    let report = load_catalog(&CatalogSources {
        pois: Some(f.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap();
    let ids: Vec<&str> = report
        .catalog
        .pois()
        .iter()
        .map(|q| q.id.as_str())
        .collect();
    assert_eq!(ids, ["a", "d"]);
    assert_eq!(report.catalog.poi("d").unwrap().category, "supermarket");
    assert_eq!(
        report
            .diagnostics
            .iter()
            .map(|d| d.line)
            .collect::<Vec<_>>(),
        [3, 4, 5]
    );
}

#[test]
fn version_mismatch_is_fatal() {
    let csv = temp_file("# format_version: 2\nid,name,lat,lon,elev_m,runways\n");
    let err = load_catalog(&CatalogSources {
        airports: Some(csv.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap_err();
    assert!(matches!(err, CatalogError::VersionMismatch { .. }));

    let geo =
        temp_file("{\"type\": \"FeatureCollection\", \"format_version\": 3, \"features\": []}");
    let err = load_catalog(&CatalogSources {
        airspace: Some(geo.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap_err();
    assert!(matches!(err, CatalogError::VersionMismatch { .. }));

    let missing = load_catalog(&CatalogSources {
        weather: Some("/nonexistent/weather.txt".into()),
        ..Default::default()
    })
    .unwrap_err();
    assert!(matches!(missing, CatalogError::Io { .. }));
}

#[test]
fn bad_zone_features_are_skipped() {
    let geo = temp_file(
        r#"{"type": "FeatureCollection", "format_version": 1, "features": [
          {"type": "Feature", "properties": {"id": "ok", "floor_alt_m": 0, "ceiling_alt_m": 100, "class": "D"},
           "geometry": {"type": "Polygon", "coordinates": [[[-86,40],[-85.9,40],[-85.9,40.1],[-86,40]]]}},
          {"type": "Feature", "properties": {"id": "inverted", "floor_alt_m": 200, "ceiling_alt_m": 100},
           "geometry": {"type": "Polygon", "coordinates": [[[-86,40],[-85.9,40],[-85.9,40.1],[-86,40]]]}},
          {"type": "Feature", "properties": {"id": "line", "floor_alt_m": 0, "ceiling_alt_m": 100},
           "geometry": {"type": "Polygon", "coordinates": [[[-86,40],[-85.9,40],[-86,40]]]}}
        ]}"#,
    );
    let report = load_catalog(&CatalogSources {
        airspace: Some(geo.path().to_path_buf()),
        ..Default::default()
    })
    .unwrap();
    assert_eq!(report.catalog.airspace_zones().len(), 1);
    assert_eq!(
        report
            .diagnostics
            .iter()
            .map(|d| d.line)
            .collect::<Vec<_>>(),
        [2, 3]
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn crossing_is_additive(
        lat in 39.9f64..40.1, lon in -86.1f64..-85.9,
        brg in 0.0f64..360.0, d in 1_000.0f64..40_000.0,
        f in 0.05f64..0.95, alt_a in 0.0f64..2000.0, alt_b in 0.0f64..2000.0,
    ) {
        let ring = square_ring(40.0, -86.0, 5_000.0);
        let cat = zone_catalog(&ring, 300.0, 1_200.0);
        let pop = population_catalog(&ring, 1.7);
        let a = p(lat, lon);
        let b = destination_point(&a, d, brg).unwrap();
        let c = intermediate_point(&a, &b, f);
        let (wa, wb) = (Waypoint3D::new(a, alt_a).unwrap(), Waypoint3D::new(b, alt_b).unwrap());
        let wc = Waypoint3D::new(c, alt_a + f * (alt_b - alt_a)).unwrap();
        let whole = cat.restricted_crossing_length(&wa, &wb);
        let split = cat.restricted_crossing_length(&wa, &wc) + cat.restricted_crossing_length(&wc, &wb);
        prop_assert!((whole - split).abs() <= 1e-6 * whole.max(1.0), "{} vs {}", whole, split);
        let whole = pop.population_crossing_length(&wa, &wb);
        let split = pop.population_crossing_length(&wa, &wc) + pop.population_crossing_length(&wc, &wb);
        prop_assert!((whole - split).abs() <= 1e-6 * whole.max(1.0), "{} vs {}", whole, split);
    }

    #[test]
    fn crossing_is_monotone_in_zone_size(
        lat in 39.95f64..40.05, lon in -86.05f64..-85.95,
        brg in 0.0f64..360.0, d in 1_000.0f64..30_000.0,
        r in 500.0f64..5_000.0, grow in 0.0f64..3_000.0,
    ) {
        let center = p(40.0, -86.0);
        let small = circle(&center, r, 64).unwrap();
        let big = circle(&center, r + grow, 64).unwrap();
        let a = p(lat, lon);
        let b = destination_point(&a, d, brg).unwrap();
        let (wa, wb) = (Waypoint3D::new(a, 100.0).unwrap(), Waypoint3D::new(b, 100.0).unwrap());
        let make = |poly: &Polygon| DataCatalog::new(vec![], vec![], vec![AirspaceZone {
            id: "z".into(), boundary: poly.clone(), floor_alt: 0.0, ceiling_alt: 500.0, class: "R".into(),
        }], vec![], None).unwrap();
        let s = make(&small).restricted_crossing_length(&wa, &wb);
        let l = make(&big).restricted_crossing_length(&wa, &wb);
        prop_assert!(l + 1e-6 >= s, "{} < {}", l, s);
    }
}
