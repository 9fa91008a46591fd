//! Regular lat/lon weather grid with a composite per-cell risk.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geodesy::{great_circle_distance, intermediate_point};
use crate::GeoPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AltitudeBand {
    /// Around 950 mb.
    Low,
    /// Around 250 mb.
    High,
}

impl AltitudeBand {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "low" => Some(Self::Low),
            "high" => Some(Self::High),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::High => "high",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WeatherError {
    #[error("no weather grid loaded")]
    NoGrid,
    #[error("band {0:?} missing from weather grid")]
    MissingBand(AltitudeBand),
    #[error("point ({lat:.6}, {lon:.6}) outside weather grid coverage")]
    Coverage { lat: f64, lon: f64 },
    #[error("invalid weather grid: {0}")]
    Invalid(String),
}

/// Raw per-cell parameters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CellParams {
    /// Degrees Celsius.
    pub temperature: f64,
    /// Percent.
    pub relative_humidity: f64,
    /// g/kg.
    pub cloud_mixing_ratio: f64,
    /// m/s.
    pub vertical_velocity: f64,
    /// J/kg.
    pub cape: f64,
    /// 1/s.
    pub wind_shear: f64,
    pub wind_u: f64,
    pub wind_v: f64,
}

/// Weights of the icing, convective and turbulence components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskWeights {
    pub icing: f64,
    pub convective: f64,
    pub turbulence: f64,
}

impl Default for RiskWeights {
    fn default() -> Self {
        Self {
            icing: 1.0 / 3.0,
            convective: 1.0 / 3.0,
            turbulence: 1.0 / 3.0,
        }
    }
}

fn min_max(v: f64, lo: f64, hi: f64) -> f64 {
    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
}

impl CellParams {
    /// Icing potential: supercooled range gated, humidity and cloud water.
    pub fn icing(&self) -> f64 {
        if (-20.0..=0.0).contains(&self.temperature) {
            0.5 * (min_max(self.relative_humidity, 60.0, 100.0)
                + min_max(self.cloud_mixing_ratio, 0.0, 0.5))
        } else {
            0.0
        }
    }

    pub fn convective(&self) -> f64 {
        0.5 * (min_max(self.cape, 0.0, 2500.0) + min_max(self.vertical_velocity.abs(), 0.0, 5.0))
    }

    pub fn turbulence(&self) -> f64 {
        let speed = self.wind_u.hypot(self.wind_v);
        0.5 * (min_max(self.wind_shear, 0.0, 0.02) + min_max(speed, 0.0, 50.0))
    }

    pub fn risk(&self, w: &RiskWeights) -> f64 {
        let r = w.icing * self.icing()
            + w.convective * self.convective()
            + w.turbulence * self.turbulence();
        if r.is_finite() {
            r.clamp(0.0, 1.0)
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct BandLayer {
    params: Option<Vec<CellParams>>,
    risk: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeatherGrid {
    origin_lat: f64,
    origin_lon: f64,
    cell_deg: f64,
    rows: usize,
    cols: usize,
    layers: BTreeMap<AltitudeBand, BandLayer>,
}

impl WeatherGrid {
    fn check_shape(
        origin_lat: f64,
        origin_lon: f64,
        cell_deg: f64,
        rows: usize,
        cols: usize,
        len: usize,
    ) -> Result<(), WeatherError> {
        if !(origin_lat.is_finite() && origin_lon.is_finite()) {
            return Err(WeatherError::Invalid("non-finite origin".into()));
        }
        if !(cell_deg.is_finite() && cell_deg > 0.0) {
            return Err(WeatherError::Invalid("cell size must be positive".into()));
        }
        if rows == 0 || cols == 0 {
            return Err(WeatherError::Invalid("empty grid".into()));
        }
        if origin_lat < -90.0 || origin_lat + rows as f64 * cell_deg > 90.0 + 1e-9 {
            return Err(WeatherError::Invalid("grid exceeds latitude range".into()));
        }
        if len != rows * cols {
            return Err(WeatherError::Invalid(format!(
                "expected {} cells, got {len}",
                rows * cols
            )));
        }
        Ok(())
    }

    /// Grid from raw parameters; row 0 is the southmost row, cells row-major.
    pub fn from_params(
        origin_lat: f64,
        origin_lon: f64,
        cell_deg: f64,
        rows: usize,
        cols: usize,
        bands: BTreeMap<AltitudeBand, Vec<CellParams>>,
        weights: &RiskWeights,
    ) -> Result<Self, WeatherError> {
        let mut layers = BTreeMap::new();
        for (band, params) in bands {
            Self::check_shape(origin_lat, origin_lon, cell_deg, rows, cols, params.len())?;
            let risk = params.iter().map(|p| p.risk(weights)).collect();
            layers.insert(
                band,
                BandLayer {
                    params: Some(params),
                    risk,
                },
            );
        }
        Ok(Self {
            origin_lat,
            origin_lon,
            cell_deg,
            rows,
            cols,
            layers,
        })
    }

    /// Grid with precomputed risk values in [0, 1].
    pub fn from_risk(
        origin_lat: f64,
        origin_lon: f64,
        cell_deg: f64,
        rows: usize,
        cols: usize,
        bands: BTreeMap<AltitudeBand, Vec<f64>>,
    ) -> Result<Self, WeatherError> {
        let mut layers = BTreeMap::new();
        for (band, risk) in bands {
            Self::check_shape(origin_lat, origin_lon, cell_deg, rows, cols, risk.len())?;
            if risk.iter().any(|r| !(0.0..=1.0).contains(r)) {
                return Err(WeatherError::Invalid("risk outside [0, 1]".into()));
            }
            layers.insert(band, BandLayer { params: None, risk });
        }
        Ok(Self {
            origin_lat,
            origin_lon,
            cell_deg,
            rows,
            cols,
            layers,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bands(&self) -> impl Iterator<Item = AltitudeBand> + '_ {
        self.layers.keys().copied()
    }

    /// Cell (row, col) containing `p`, if covered. Upper edges are inclusive.
    pub fn cell_of(&self, p: &GeoPoint) -> Option<(usize, usize)> {
        let fr = (p.lat() - self.origin_lat) / self.cell_deg;
        let fc = (p.lon() - self.origin_lon) / self.cell_deg;
        let (rows, cols) = (self.rows as f64, self.cols as f64);
        if !(0.0..=rows).contains(&fr) || !(0.0..=cols).contains(&fc) {
            return None;
        }
        Some((
            (fr.floor() as usize).min(self.rows - 1),
            (fc.floor() as usize).min(self.cols - 1),
        ))
    }

    /// South-west and north-east corners as (lat0, lon0, lat1, lon1).
    pub fn cell_bounds(&self, row: usize, col: usize) -> Option<(f64, f64, f64, f64)> {
        if row >= self.rows || col >= self.cols {
            return None;
        }
        let lat0 = self.origin_lat + row as f64 * self.cell_deg;
        let lon0 = self.origin_lon + col as f64 * self.cell_deg;
        Some((lat0, lon0, lat0 + self.cell_deg, lon0 + self.cell_deg))
    }

    pub fn risk_at(&self, band: AltitudeBand, row: usize, col: usize) -> Option<f64> {
        self.layers
            .get(&band)
            .and_then(|l| l.risk.get(row * self.cols + col).copied())
    }

    pub fn params_at(&self, band: AltitudeBand, row: usize, col: usize) -> Option<&CellParams> {
        self.layers
            .get(&band)
            .and_then(|l| l.params.as_ref())
            .and_then(|p| p.get(row * self.cols + col))
    }

    fn covered_cell(&self, p: &GeoPoint) -> Result<(usize, usize), WeatherError> {
        self.cell_of(p).ok_or(WeatherError::Coverage {
            lat: p.lat(),
            lon: p.lon(),
        })
    }

    /// Sum over sub-segments of cell risk times sub-length in meters.
    ///
    /// The segment is cut into steps of max(len/1024, 100 m); a step whose
    /// ends fall in different cells is bisected down to 1 cm.
    pub fn risk_along(
        &self,
        a: &GeoPoint,
        b: &GeoPoint,
        band: AltitudeBand,
    ) -> Result<f64, WeatherError> {
        let layer = self
            .layers
            .get(&band)
            .ok_or(WeatherError::MissingBand(band))?;
        let len = great_circle_distance(a, b);
        let step = (len / 1024.0).max(100.0);
        let n = ((len / step).ceil() as usize).max(1);
        let at = |u: f64| intermediate_point(a, b, u);
        let mut cells = Vec::with_capacity(n + 1);
        for k in 0..=n {
            cells.push(self.covered_cell(&at(k as f64 / n as f64))?);
        }
        let risk = |c: (usize, usize)| layer.risk[c.0 * self.cols + c.1];
        let mut total = 0.0;
        let mut stack = Vec::new();
        for k in 0..n {
            stack.push((
                k as f64 / n as f64,
                (k + 1) as f64 / n as f64,
                cells[k],
                cells[k + 1],
            ));
            while let Some((u0, u1, c0, c1)) = stack.pop() {
                let sub = (u1 - u0) * len;
                if c0 == c1 {
                    total += risk(c0) * sub;
                    continue;
                }
                let um = 0.5 * (u0 + u1);
                let cm = self.covered_cell(&at(um))?;
                if sub <= 0.01 {
                    total += risk(cm) * sub;
                    continue;
                }
                stack.push((um, u1, cm, c1));
                stack.push((u0, um, c0, cm));
            }
        }
        Ok(total)
    }
}
