pub mod geodata;
pub mod geodesy;
pub mod graph;
pub mod mission_io;
pub mod num;
pub mod parser;
pub mod path;
pub mod pso;
pub mod route;
pub mod trajectory;

pub use num::Scalar;

pub type GeoPoint = geodesy::GeoPoint<f64>;
pub type Waypoint3D = geodesy::Waypoint3D<f64>;
