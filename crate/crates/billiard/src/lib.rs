//! Dispersing-billiard laboratory: the Lorentz-gas collision map with
//! optional small external forces, and the diagnostics built on top of it —
//! singularity sets and homogeneity strips, standard-family growth, an
//! approximate Markov rectangle with its first-return decomposition,
//! correlation/CLT/large-deviation statistics, and geometric-potential
//! pressure estimates over the induced return scheme.

pub mod dynamics;
pub mod exec;
pub mod fit;
pub mod geometry;
pub mod singularities;
pub mod tables;
pub mod vec2;

pub use dynamics::{BilliardMap, CollisionPoint, DynamicsError, FlightState, ForceModel, TangentVector};
pub use exec::ExecMode;
pub use geometry::{torus_distance, validate_table, Scatterer, Table, TableParams, ValidationReport};
pub use vec2::Vec2;
