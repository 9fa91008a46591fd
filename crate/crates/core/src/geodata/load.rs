//! Readers for the versioned catalog file formats.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::weather::{AltitudeBand, CellParams, RiskWeights, WeatherError, WeatherGrid};
use super::{
    Airport, AirspaceZone, CatalogBuildError, DataCatalog, PatternSide, Poi, Polygon,
    PopulationZone, Runway,
};
use crate::GeoPoint;

pub const FORMAT_VERSION: i64 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: unsupported format_version {found}")]
    VersionMismatch { path: PathBuf, found: String },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Weather {
        path: PathBuf,
        #[source]
        source: WeatherError,
    },
    #[error(transparent)]
    Build(#[from] CatalogBuildError),
}

/// Paths of the catalog files; absent entries load as empty collections.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CatalogSources {
    pub airports: Option<PathBuf>,
    pub pois: Option<PathBuf>,
    pub airspace: Option<PathBuf>,
    pub population: Option<PathBuf>,
    pub weather: Option<PathBuf>,
}

impl CatalogSources {
    /// Picks up `airports.csv`, `pois.jsonl`, `airspace.geojson`,
    /// `population.geojson` and `weather.txt` when present in `dir`.
    pub fn from_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        let pick = |name: &str| {
            let p = dir.join(name);
            p.is_file().then_some(p)
        };
        Self {
            airports: pick("airports.csv"),
            pois: pick("pois.jsonl"),
            airspace: pick("airspace.geojson"),
            population: pick("population.geojson"),
            weather: pick("weather.txt"),
        }
    }
}

/// A skipped or partially read record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: PathBuf,
    /// Line number, or 1-based feature index for feature collections.
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}: {}", self.file.display(), self.line, self.message)
    }
}

#[derive(Debug)]
pub struct LoadReport {
    pub catalog: DataCatalog,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn load_catalog(sources: &CatalogSources) -> Result<LoadReport, CatalogError> {
    let mut diags = Vec::new();
    let airports = match &sources.airports {
        Some(p) => read_airports(p, &mut diags)?,
        None => Vec::new(),
    };
    let pois = match &sources.pois {
        Some(p) => read_pois(p, &mut diags)?,
        None => Vec::new(),
    };
    let airspace = match &sources.airspace {
        Some(p) => read_airspace(p, &mut diags)?,
        None => Vec::new(),
    };
    let population = match &sources.population {
        Some(p) => read_population(p, &mut diags)?,
        None => Vec::new(),
    };
    let weather = match &sources.weather {
        Some(p) => Some(read_weather(p)?),
        None => None,
    };
    let catalog = DataCatalog::new(airports, pois, airspace, population, weather)?;
    for d in &diags {
        log::warn!("{d}");
    }
    log::info!("catalog loaded: {:?}", catalog.counts());
    Ok(LoadReport {
        catalog,
        diagnostics: diags,
    })
}

fn read_text(path: &Path) -> Result<String, CatalogError> {
    fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn format_err(path: &Path, message: impl Into<String>) -> CatalogError {
    CatalogError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn check_version(path: &Path, found: &str) -> Result<(), CatalogError> {
    if found.trim().parse::<i64>().ok() == Some(FORMAT_VERSION) {
        Ok(())
    } else {
        Err(CatalogError::VersionMismatch {
            path: path.to_path_buf(),
            found: found.trim().to_string(),
        })
    }
}

/// Parses `format_version: N` with an optional leading `#`.
fn header_version(line: &str) -> Option<&str> {
    line.trim_start_matches('#')
        .trim()
        .strip_prefix("format_version:")
}

fn point(lat: f64, lon: f64) -> Result<GeoPoint, String> {
    GeoPoint::new(lat, lon).map_err(|e| e.to_string())
}

fn parse_f64(field: &str, what: &str) -> Result<f64, String> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("bad {what} {field:?}"))
}

fn parse_runways(field: &str) -> Result<Vec<Runway>, String> {
    let mut out = Vec::new();
    for item in field.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        if parts.len() != 6 {
            return Err(format!("runway {item:?} needs 6 fields"));
        }
        let a = point(
            parse_f64(parts[0], "runway lat")?,
            parse_f64(parts[1], "runway lon")?,
        )?;
        let b = point(
            parse_f64(parts[2], "runway lat")?,
            parse_f64(parts[3], "runway lon")?,
        )?;
        let heading = parse_f64(parts[4], "runway heading")?;
        if !(0.0..360.0).contains(&heading) {
            return Err(format!("runway heading {heading} outside [0, 360)"));
        }
        let pattern_side = match parts[5].trim() {
            "L" | "Left" | "left" => PatternSide::Left,
            "R" | "Right" | "right" => PatternSide::Right,
            s => return Err(format!("pattern side {s:?}")),
        };
        out.push(Runway {
            endpoint_a: a,
            endpoint_b: b,
            heading,
            pattern_side,
        });
    }
    if out.is_empty() {
        return Err("no runways".into());
    }
    Ok(out)
}

fn read_airports(path: &Path, diags: &mut Vec<Diagnostic>) -> Result<Vec<Airport>, CatalogError> {
    let text = read_text(path)?;
    let (first, body) = text.split_once('\n').unwrap_or((&text, ""));
    match header_version(first) {
        Some(v) => check_version(path, v)?,
        None => return Err(format_err(path, "missing format_version line")),
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(body.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| format_err(path, e.to_string()))?
        .clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);
    let required = ["id", "name", "lat", "lon", "elev_m", "runways"];
    let mut idx = BTreeMap::new();
    for name in required {
        let i = col(name).ok_or_else(|| format_err(path, format!("missing column {name}")))?;
        idx.insert(name, i);
    }
    let price_col = col("fuel_price_per_l");

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for rec in reader.records() {
        let (line, rec) = match rec {
            Ok(r) => (r.position().map_or(0, |p| p.line() as usize + 1), r),
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize + 1);
                diags.push(Diagnostic {
                    file: path.to_path_buf(),
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let get = |name: &str| rec.get(idx[name]).unwrap_or("").trim();
        let parsed = (|| -> Result<Airport, String> {
            let id = get("id");
            if id.is_empty() {
                return Err("empty id".into());
            }
            let location = point(parse_f64(get("lat"), "lat")?, parse_f64(get("lon"), "lon")?)?;
            let elevation = parse_f64(get("elev_m"), "elevation")?;
            let fuel_price = match price_col.and_then(|i| rec.get(i)).map(str::trim) {
                None | Some("") => None,
                Some(s) => {
                    let v = parse_f64(s, "fuel price")?;
                    if v <= 0.0 {
                        return Err(format!("fuel price {v} not positive"));
                    }
                    Some(v)
                }
            };
            Ok(Airport {
                id: id.to_string(),
                name: get("name").to_string(),
                location,
                elevation,
                runways: parse_runways(get("runways"))?,
                fuel_price,
            })
        })();
        match parsed {
            Ok(a) if !seen.insert(a.id.clone()) => diags.push(Diagnostic {
                file: path.to_path_buf(),
                line,
                message: format!("duplicate airport id {:?}", a.id),
            }),
            Ok(a) => out.push(a),
            Err(message) => diags.push(Diagnostic {
                file: path.to_path_buf(),
                line,
                message,
            }),
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
struct RawPoi {
    id: String,
    name: String,
    category: String,
    lat: f64,
    lon: f64,
    rating: Option<f64>,
    review_count: Option<u64>,
}

fn read_pois(path: &Path, diags: &mut Vec<Diagnostic>) -> Result<Vec<Poi>, CatalogError> {
    let text = read_text(path)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((_, first)) = lines.next() else {
        return Ok(Vec::new());
    };
    let header: Value =
        serde_json::from_str(first).map_err(|e| format_err(path, format!("header: {e}")))?;
    match header.get("format_version") {
        Some(v) => check_version(path, &v.to_string())?,
        None => return Err(format_err(path, "first line must carry format_version")),
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in lines {
        let diag = |message: String| Diagnostic {
            file: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let raw: RawPoi = match serde_json::from_str(line) {
            Ok(r) => r,
            Err(e) => {
                diags.push(diag(e.to_string()));
                continue;
            }
        };
        let checked = (|| -> Result<Poi, String> {
            if raw.id.trim().is_empty() {
                return Err("empty id".into());
            }
            if raw.category.trim().is_empty() {
                return Err("empty category".into());
            }
            if raw.rating.is_some() != raw.review_count.is_some() {
                return Err("rating and review_count must be given together".into());
            }
            if let Some(r) = raw.rating {
                if !(0.0..=5.0).contains(&r) {
                    return Err(format!("rating {r} outside [0, 5]"));
                }
            }
            Ok(Poi {
                location: point(raw.lat, raw.lon)?,
                id: raw.id,
                name: raw.name,
                category: raw.category.trim().to_lowercase(),
                rating: raw.rating,
                review_count: raw.review_count,
            })
        })();
        match checked {
            Ok(p) if !seen.insert(p.id.clone()) => {
                diags.push(diag(format!("duplicate poi id {:?}", p.id)))
            }
            Ok(p) => out.push(p),
            Err(m) => diags.push(diag(m)),
        }
    }
    Ok(out)
}

struct Feature<'a> {
    index: usize,
    id: String,
    ring: Result<Polygon, String>,
    props: &'a serde_json::Map<String, Value>,
}

fn features<'a>(path: &Path, doc: &'a Value) -> Result<Vec<Feature<'a>>, CatalogError> {
    match doc.get("format_version") {
        Some(v) => check_version(path, &v.to_string())?,
        None => return Err(format_err(path, "missing format_version")),
    }
    let list = doc
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| format_err(path, "missing features array"))?;
    static EMPTY: std::sync::OnceLock<serde_json::Map<String, Value>> = std::sync::OnceLock::new();
    let empty = EMPTY.get_or_init(serde_json::Map::new);
    Ok(list
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let props = f
                .get("properties")
                .and_then(Value::as_object)
                .unwrap_or(empty);
            let id = props
                .get("id")
                .or_else(|| f.get("id"))
                .map(|v| v.as_str().map_or_else(|| v.to_string(), str::to_string))
                .unwrap_or_default();
            Feature {
                index: i + 1,
                id,
                ring: feature_ring(f),
                props,
            }
        })
        .collect())
}

fn feature_ring(f: &Value) -> Result<Polygon, String> {
    let geom = f.get("geometry").ok_or("missing geometry")?;
    if geom.get("type").and_then(Value::as_str) != Some("Polygon") {
        return Err("geometry must be a Polygon".into());
    }
    let outer = geom
        .get("coordinates")
        .and_then(Value::as_array)
        .and_then(|rings| rings.first())
        .and_then(Value::as_array)
        .ok_or("missing polygon coordinates")?;
    let mut pts = Vec::with_capacity(outer.len());
    for c in outer {
        let pair = c
            .as_array()
            .filter(|a| a.len() >= 2)
            .ok_or("bad coordinate")?;
        let lon = pair[0].as_f64().ok_or("bad longitude")?;
        let lat = pair[1].as_f64().ok_or("bad latitude")?;
        pts.push(point(lat, lon)?);
    }
    Polygon::new(pts).map_err(|e| e.to_string())
}

fn num_prop(props: &serde_json::Map<String, Value>, key: &str) -> Result<f64, String> {
    props
        .get(key)
        .and_then(Value::as_f64)
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("missing or bad {key}"))
}

fn read_json(path: &Path) -> Result<Value, CatalogError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| format_err(path, e.to_string()))
}

fn read_airspace(
    path: &Path,
    diags: &mut Vec<Diagnostic>,
) -> Result<Vec<AirspaceZone>, CatalogError> {
    let doc = read_json(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for f in features(path, &doc)? {
        let zone = (|| -> Result<AirspaceZone, String> {
            if f.id.is_empty() {
                return Err("missing id".into());
            }
            let floor_alt = num_prop(f.props, "floor_alt_m")?;
            let ceiling_alt = num_prop(f.props, "ceiling_alt_m")?;
            if floor_alt >= ceiling_alt {
                return Err(format!("floor {floor_alt} not below ceiling {ceiling_alt}"));
            }
            Ok(AirspaceZone {
                id: f.id.clone(),
                boundary: f.ring.clone()?,
                floor_alt,
                ceiling_alt,
                class: f
                    .props
                    .get("class")
                    .and_then(Value::as_str)
                    .unwrap_or("")
                    .to_string(),
            })
        })();
        push_unique(path, f.index, zone, &mut seen, &mut out, diags, |z| &z.id);
    }
    Ok(out)
}

fn read_population(
    path: &Path,
    diags: &mut Vec<Diagnostic>,
) -> Result<Vec<PopulationZone>, CatalogError> {
    let doc = read_json(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for f in features(path, &doc)? {
        let zone = (|| -> Result<PopulationZone, String> {
            if f.id.is_empty() {
                return Err("missing id".into());
            }
            let density_weight = num_prop(f.props, "density_weight")?;
            if density_weight < 0.0 {
                return Err(format!("negative density_weight {density_weight}"));
            }
            Ok(PopulationZone {
                id: f.id.clone(),
                boundary: f.ring.clone()?,
                density_weight,
            })
        })();
        push_unique(path, f.index, zone, &mut seen, &mut out, diags, |z| &z.id);
    }
    Ok(out)
}

fn push_unique<T>(
    path: &Path,
    line: usize,
    item: Result<T, String>,
    seen: &mut HashSet<String>,
    out: &mut Vec<T>,
    diags: &mut Vec<Diagnostic>,
    id: impl Fn(&T) -> &String,
) {
    let message = match item {
        Ok(z) if seen.insert(id(&z).clone()) => {
            out.push(z);
            return;
        }
        Ok(z) => format!("duplicate id {:?}", id(&z)),
        Err(m) => m,
    };
    diags.push(Diagnostic {
        file: path.to_path_buf(),
        line,
        message,
    });
}

const WEATHER_PARAMS: [&str; 8] = [
    "temperature",
    "relative_humidity",
    "cloud_mixing_ratio",
    "vertical_velocity",
    "cape",
    "wind_shear",
    "wind_u",
    "wind_v",
];

fn set_param(cell: &mut CellParams, name: &str, v: f64) {
    match name {
        "temperature" => cell.temperature = v,
        "relative_humidity" => cell.relative_humidity = v,
        "cloud_mixing_ratio" => cell.cloud_mixing_ratio = v,
        "vertical_velocity" => cell.vertical_velocity = v,
        "cape" => cell.cape = v,
        "wind_shear" => cell.wind_shear = v,
        "wind_u" => cell.wind_u = v,
        "wind_v" => cell.wind_v = v,
        _ => unreachable!("checked against WEATHER_PARAMS"),
    }
}

/// Reads a weather grid. The grid has no per-record structure, so any
/// malformed body line is fatal.
fn read_weather(path: &Path) -> Result<WeatherGrid, CatalogError> {
    let text = read_text(path)?;
    let err = |line: usize, m: String| format_err(path, format!("line {line}: {m}"));
    let mut header: BTreeMap<String, String> = BTreeMap::new();
    let mut lines = text.lines().enumerate().peekable();
    while let Some((i, line)) = lines.peek().copied() {
        let t = line.trim();
        if t.starts_with('[') {
            break;
        }
        lines.next();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (k, v) = t
            .split_once(':')
            .ok_or_else(|| err(i + 1, format!("expected key: value, got {t:?}")))?;
        header.insert(k.trim().to_string(), v.trim().to_string());
    }
    match header.get("format_version") {
        Some(v) => check_version(path, v)?,
        None => return Err(format_err(path, "missing format_version")),
    }
    let field = |k: &str| {
        header
            .get(k)
            .ok_or_else(|| format_err(path, format!("missing header {k}")))
    };
    let num = |k: &str| -> Result<f64, CatalogError> {
        parse_f64(field(k)?, k).map_err(|m| format_err(path, m))
    };
    let count = |k: &str| -> Result<usize, CatalogError> {
        field(k)?
            .parse::<usize>()
            .map_err(|_| format_err(path, format!("bad {k}")))
    };
    let (origin_lat, origin_lon, cell_deg) =
        (num("origin_lat")?, num("origin_lon")?, num("cell_deg")?);
    let (rows, cols) = (count("rows")?, count("cols")?);
    let mut bands: BTreeMap<AltitudeBand, Vec<CellParams>> = BTreeMap::new();
    for name in field("bands")?.split_whitespace() {
        let band = AltitudeBand::parse(name)
            .ok_or_else(|| format_err(path, format!("unknown band {name:?}")))?;
        bands.insert(band, vec![CellParams::default(); rows * cols]);
    }
    let mut filled: HashSet<(AltitudeBand, &str)> = HashSet::new();
    while let Some((i, line)) = lines.next() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let section = t
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| err(i + 1, format!("expected [band.param], got {t:?}")))?;
        let (band_name, param) = section
            .split_once('.')
            .ok_or_else(|| err(i + 1, format!("bad section {section:?}")))?;
        let band = AltitudeBand::parse(band_name)
            .ok_or_else(|| err(i + 1, format!("unknown band {band_name:?}")))?;
        let param = *WEATHER_PARAMS
            .iter()
            .find(|p| **p == param)
            .ok_or_else(|| err(i + 1, format!("unknown parameter {param:?}")))?;
        let cells = bands
            .get_mut(&band)
            .ok_or_else(|| err(i + 1, format!("band {band_name} not declared")))?;
        for r in 0..rows {
            let (j, row) = lines
                .next()
                .ok_or_else(|| err(i + 1, format!("section {section} truncated")))?;
            let values: Vec<&str> = row.split_whitespace().collect();
            if values.len() != cols {
                return Err(err(
                    j + 1,
                    format!("expected {cols} values, got {}", values.len()),
                ));
            }
            for (c, v) in values.iter().enumerate() {
                let v = parse_f64(v, param).map_err(|m| err(j + 1, m))?;
                set_param(&mut cells[r * cols + c], param, v);
            }
        }
        filled.insert((band, param));
    }
    for band in bands.keys() {
        for param in WEATHER_PARAMS {
            if !filled.contains(&(*band, param)) {
                return Err(format_err(
                    path,
                    format!("missing section [{}.{param}]", band.as_str()),
                ));
            }
        }
    }
    WeatherGrid::from_params(
        origin_lat,
        origin_lon,
        cell_deg,
        rows,
        cols,
        bands,
        &RiskWeights::default(),
    )
    .map_err(|source| CatalogError::Weather {
        path: path.to_path_buf(),
        source,
    })
}
