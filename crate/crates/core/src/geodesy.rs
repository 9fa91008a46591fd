//! Spherical-earth geometry.
//!
//! Every function here works on a sphere of radius [`EARTH_RADIUS_M`].
//! Angles cross the API in degrees and are converted to radians
//! internally; longitudes are kept in `(-180, 180]`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::Scalar;

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6.371e6;

/// Origins closer to a pole than this (in degrees of latitude) are treated
/// as lying on the pole when propagating a bearing.
pub const POLE_SNAP_LAT_DEG: f64 = 89.999;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("bearing is undefined between coincident points")]
    UndefinedBearing,
}

/// A latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawPoint<S>",
    bound(deserialize = "S: Scalar + Deserialize<'de>")
)]
pub struct GeoPoint<S> {
    lat: S,
    lon: S,
}

#[derive(Deserialize)]
struct RawPoint<S> {
    lat: S,
    lon: S,
}

impl<S: Scalar> TryFrom<RawPoint<S>> for GeoPoint<S> {
    type Error = GeoError;

    fn try_from(raw: RawPoint<S>) -> Result<Self, Self::Error> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl<S: Scalar> GeoPoint<S> {
    pub fn new(lat: S, lon: S) -> Result<Self, GeoError> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(GeoError::InvalidInput(format!(
                "non-finite coordinate ({lat}, {lon})"
            )));
        }
        if lat.abs() > S::lit(90.0) {
            return Err(GeoError::InvalidInput(format!(
                "latitude {lat} outside [-90, 90]"
            )));
        }
        Ok(Self {
            lat,
            lon: normalize_lon(lon),
        })
    }

    pub fn lat(&self) -> S {
        self.lat
    }

    pub fn lon(&self) -> S {
        self.lon
    }

    /// Unit vector in earth-centered coordinates.
    pub fn to_unit_vector(&self) -> [S; 3] {
        let (phi, lam) = (self.lat.to_radians(), self.lon.to_radians());
        [phi.cos() * lam.cos(), phi.cos() * lam.sin(), phi.sin()]
    }

    /// Inverse of [`GeoPoint::to_unit_vector`]; the vector need not be normalized.
    pub fn from_vector(v: [S; 3]) -> Result<Self, GeoError> {
        let h = (v[0] * v[0] + v[1] * v[1]).sqrt();
        if h == S::zero() && v[2] == S::zero() {
            return Err(GeoError::InvalidInput("zero vector".into()));
        }
        let lat = v[2].atan2(h).to_degrees();
        let lon = v[1].atan2(v[0]).to_degrees();
        Self::new(lat.max(S::lit(-90.0)).min(S::lit(90.0)), lon)
    }
}

/// Maps any finite longitude into `(-180, 180]`.
pub fn normalize_lon<S: Scalar>(lon: S) -> S {
    let full = S::lit(360.0);
    let half = S::lit(180.0);
    let mut l = lon - full * ((lon + half) / full).floor();
    if l <= -half {
        l = l + full;
    }
    if l > half {
        l = l - full;
    }
    l
}

fn normalize_bearing<S: Scalar>(deg: S) -> S {
    let full = S::lit(360.0);
    let mut b = deg - full * (deg / full).floor();
    if b >= full {
        b = b - full;
    }
    if b < S::zero() {
        b = b + full;
    }
    // -0.0 prints as "-0"; keep the canonical zero
    b + S::zero()
}

/// A 3D waypoint: position plus altitude in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    try_from = "RawWaypoint<S>",
    bound(deserialize = "S: Scalar + Deserialize<'de>")
)]
pub struct Waypoint3D<S> {
    pub point: GeoPoint<S>,
    alt: S,
    /// Altitude is above ground level rather than mean sea level.
    #[serde(default)]
    pub agl: bool,
}

#[derive(Deserialize)]
#[serde(bound(deserialize = "S: Scalar + Deserialize<'de>"))]
struct RawWaypoint<S> {
    point: GeoPoint<S>,
    alt: S,
    #[serde(default)]
    agl: bool,
}

impl<S: Scalar> TryFrom<RawWaypoint<S>> for Waypoint3D<S> {
    type Error = GeoError;

    fn try_from(raw: RawWaypoint<S>) -> Result<Self, Self::Error> {
        let mut w = Waypoint3D::new(raw.point, raw.alt)?;
        w.agl = raw.agl;
        Ok(w)
    }
}

impl<S: Scalar> Waypoint3D<S> {
    /// Mean-sea-level waypoint.
    pub fn new(point: GeoPoint<S>, alt: S) -> Result<Self, GeoError> {
        if !alt.is_finite() || alt < S::zero() {
            return Err(GeoError::InvalidInput(format!(
                "altitude {alt} must be finite and non-negative"
            )));
        }
        Ok(Self {
            point,
            alt,
            agl: false,
        })
    }

    pub fn alt(&self) -> S {
        self.alt
    }
}

/// Great-circle distance in meters.
///
/// The two points are put in a canonical order before evaluation, which
/// makes the result bitwise symmetric.
pub fn great_circle_distance<S: Scalar>(a: &GeoPoint<S>, b: &GeoPoint<S>) -> S {
    let (p, q) = if (a.lat, a.lon) <= (b.lat, b.lon) {
        (a, b)
    } else {
        (b, a)
    };
    central_angle(p, q) * S::lit(EARTH_RADIUS_M)
}

fn central_angle<S: Scalar>(a: &GeoPoint<S>, b: &GeoPoint<S>) -> S {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlam = (b.lon - a.lon).to_radians();
    let (s1, c1) = phi1.sin_cos();
    let (s2, c2) = phi2.sin_cos();
    let (sd, cd) = dlam.sin_cos();
    let x = c2 * sd;
    let y = c1 * s2 - s1 * c2 * cd;
    let num = (x * x + y * y).sqrt();
    let den = s1 * s2 + c1 * c2 * cd;
    num.atan2(den)
}

/// Arc length in meters expressed as an angle in radians.
pub fn angular_distance<S: Scalar>(d: S) -> Result<S, GeoError> {
    if !d.is_finite() || d < S::zero() {
        return Err(GeoError::InvalidInput(format!(
            "distance {d} must be finite and non-negative"
        )));
    }
    Ok(d / S::lit(EARTH_RADIUS_M))
}

/// Point reached by travelling `d` meters from `origin` along the initial
/// bearing `bearing_deg`.
///
/// Origins within [`POLE_SNAP_LAT_DEG`] of a pole are snapped onto it; the
/// longitude there is the limit of the general formula (`lon + 180 - bearing`
/// in the north, `lon + bearing` in the south) with `atan2(0, 0) = 0`, so a
/// zero distance still returns the origin's longitude.
pub fn destination_point<S: Scalar>(
    origin: &GeoPoint<S>,
    d: S,
    bearing_deg: S,
) -> Result<GeoPoint<S>, GeoError> {
    let delta = angular_distance(d)?;
    if !bearing_deg.is_finite() {
        return Err(GeoError::InvalidInput(format!(
            "bearing {bearing_deg} is not finite"
        )));
    }
    let theta = normalize_bearing(bearing_deg).to_radians();
    let (sd, cd) = delta.sin_cos();
    let (st, ct) = theta.sin_cos();

    if origin.lat.abs() > S::lit(POLE_SNAP_LAT_DEG) {
        let north = origin.lat > S::zero();
        let sign = if north { S::one() } else { -S::one() };
        let phi2 = if delta <= S::PI() {
            sign * (S::FRAC_PI_2() - delta)
        } else {
            (sign * cd).max(-S::one()).min(S::one()).asin()
        };
        let (y, x) = (st * sd, -sign * sd * ct);
        let dlam = if y == S::zero() && x == S::zero() {
            S::zero()
        } else {
            y.atan2(x)
        };
        return GeoPoint::new(phi2.to_degrees(), origin.lon + dlam.to_degrees());
    }

    let phi1 = origin.lat.to_radians();
    let (s1, c1) = phi1.sin_cos();
    let sin_phi2 = (s1 * cd + c1 * sd * ct).max(-S::one()).min(S::one());
    let phi2 = sin_phi2.asin();
    let dlam = (st * sd * c1).atan2(cd - s1 * sin_phi2);
    GeoPoint::new(phi2.to_degrees(), origin.lon + dlam.to_degrees())
}

/// Forward azimuth from `a` to `b` in `[0, 360)` degrees.
pub fn initial_bearing<S: Scalar>(a: &GeoPoint<S>, b: &GeoPoint<S>) -> Result<S, GeoError> {
    if a == b {
        return Err(GeoError::UndefinedBearing);
    }
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlam = (b.lon - a.lon).to_radians();
    let y = dlam.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlam.cos();
    if x == S::zero() && y == S::zero() {
        return Err(GeoError::UndefinedBearing);
    }
    Ok(normalize_bearing(y.atan2(x).to_degrees()))
}

/// Point at fraction `f` of the great-circle arc from `a` to `b`.
///
/// `f` outside `[0, 1]` extrapolates along the same great circle.
pub fn intermediate_point<S: Scalar>(a: &GeoPoint<S>, b: &GeoPoint<S>, f: S) -> GeoPoint<S> {
    if f == S::zero() {
        return *a;
    }
    if f == S::one() {
        return *b;
    }
    let p = a.to_unit_vector();
    let q = b.to_unit_vector();
    let omega = central_angle(a, b);
    let v = if omega < S::lit(1e-12) {
        [
            p[0] + f * (q[0] - p[0]),
            p[1] + f * (q[1] - p[1]),
            p[2] + f * (q[2] - p[2]),
        ]
    } else {
        let so = omega.sin();
        let wa = ((S::one() - f) * omega).sin() / so;
        let wb = (f * omega).sin() / so;
        [
            wa * p[0] + wb * q[0],
            wa * p[1] + wb * q[1],
            wa * p[2] + wb * q[2],
        ]
    };
    GeoPoint::from_vector(v).unwrap_or(*a)
}

pub fn midpoint<S: Scalar>(a: &GeoPoint<S>, b: &GeoPoint<S>) -> GeoPoint<S> {
    intermediate_point(a, b, S::lit(0.5))
}
