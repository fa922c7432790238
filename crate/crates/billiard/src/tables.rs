//! Table configuration: JSON schema and the built-in finite-horizon table.

use crate::geometry::{GeometryError, Scatterer, Table, TableParams};
use crate::vec2::Vec2;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk table description.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub scatterers: Vec<ScattererConfig>,
    #[serde(default = "default_k0")]
    pub k0: u32,
    #[serde(default = "default_tau_min")]
    pub tau_min: f64,
    #[serde(default = "default_tau_max")]
    pub tau_max: f64,
    #[serde(default = "default_s0")]
    pub s0: f64,
    #[serde(default = "default_q0")]
    pub q0: f64,
    #[serde(default = "default_gamma0")]
    pub gamma0: f64,
    #[serde(default = "default_k_star")]
    pub k_star: f64,
    #[serde(default = "default_e_star")]
    pub e_star: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScattererConfig {
    pub center: [f64; 2],
    pub radius: f64,
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}
fn default_k0() -> u32 {
    10
}
fn default_tau_min() -> f64 {
    0.1
}
fn default_tau_max() -> f64 {
    2.0
}
fn default_s0() -> f64 {
    1.0
}
fn default_q0() -> f64 {
    0.5
}
fn default_gamma0() -> f64 {
    1.0 / 3.0
}
fn default_k_star() -> f64 {
    0.08
}
fn default_e_star() -> f64 {
    20.0
}

impl TableConfig {
    pub fn build(&self) -> Result<Table, GeometryError> {
        let scatterers = self
            .scatterers
            .iter()
            .map(|s| Scatterer {
                center: Vec2::new(s.center[0], s.center[1]),
                radius: s.radius,
            })
            .collect();
        let params = TableParams {
            k0: self.k0,
            tau_min: self.tau_min,
            tau_max: self.tau_max,
            s0: self.s0,
            q0: self.q0,
            gamma0: self.gamma0,
            k_star: self.k_star,
            e_star: self.e_star,
        };
        Table::new(scatterers, params)
    }
}

/// The shipped finite-horizon table.
///
/// Two radius-0.3 disks at (0,0) and (0.5,0.5) leave open diagonal corridors
/// (width sqrt(0.5) - 0.6; disjointness forces r < 1/(2 sqrt(2)) while
/// blocking the diagonal needs r >= 1/(2 sqrt(2)), so no pair of equal disks
/// at these positions can close them). A third small disk at (0.5, 0) blocks
/// both diagonal families while keeping the gap structure of the pair: the
/// shortest free path is still the diagonal period-2 flight sqrt(0.5) - 0.6.
pub fn fh2_config() -> TableConfig {
    TableConfig {
        schema_version: SCHEMA_VERSION,
        scatterers: vec![
            ScattererConfig { center: [0.0, 0.0], radius: 0.3 },
            ScattererConfig { center: [0.5, 0.5], radius: 0.3 },
            ScattererConfig { center: [0.5, 0.0], radius: 0.08 },
        ],
        k0: 10,
        tau_min: 0.107,
        tau_max: 2.0,
        s0: 1.0,
        q0: 0.5,
        gamma0: 1.0 / 3.0,
        k_star: 0.08,
        e_star: 20.0,
    }
}

pub fn fh2() -> Table {
    fh2_config().build().expect("built-in table must validate")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fh2_roundtrips_through_json() {
        let cfg = fh2_config();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back: TableConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.scatterers.len(), 3);
        back.build().unwrap();
    }

    #[test]
    fn defaults_fill_missing_fields() {
        let cfg: TableConfig = serde_json::from_str(
            r#"{"scatterers":[{"center":[0.5,0.5],"radius":0.2}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.k0, 10);
        assert_eq!(cfg.schema_version, SCHEMA_VERSION);
    }
}

