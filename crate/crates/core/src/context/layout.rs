//! Building layout files and the U-value to (R, C) conversion.
//!
//! A layout is geometry only. Resistances are derived per context from a
//! [`UWallVector`], so the same layout yields a family of thermal models.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::uwall::{UWallKind, UWallVector};
use crate::error::{Error, Result};
use crate::thermal::{BuildingModel, ModelParams};

/// Specific heat of air, J/(kg·°C).
pub const AIR_SPECIFIC_HEAT: f64 = 1005.0;
/// Density of air, kg/m³.
pub const AIR_DENSITY: f64 = 1.2;
/// Default envelope thermal mass per bounding surface area, J/(m²·°C).
pub const DEFAULT_ENVELOPE_MASS: f64 = 10_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneGeometry {
    pub name: String,
    pub floor_area_m2: f64,
    pub height_m: f64,
    /// Opaque exterior wall area, windows excluded.
    #[serde(default)]
    pub exterior_wall_area_m2: f64,
    #[serde(default)]
    pub window_area_m2: f64,
    /// The zone ceiling is the roof (area = floor area).
    #[serde(default)]
    pub under_roof: bool,
    /// The zone floor is a ground slab (area = floor area).
    #[serde(default)]
    pub on_ground: bool,
    pub max_power_w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InteriorElement {
    Intwall,
    Floor,
    Ceiling,
}

impl InteriorElement {
    fn kind(self) -> UWallKind {
        match self {
            InteriorElement::Intwall => UWallKind::Intwall,
            InteriorElement::Floor => UWallKind::Floor,
            InteriorElement::Ceiling => UWallKind::Ceiling,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Adjacency {
    pub zones: [String; 2],
    pub area_m2: f64,
    pub element: InteriorElement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingLayout {
    pub name: String,
    #[serde(default = "default_shgc")]
    pub solar_heat_gain_coefficient: f64,
    /// Peak occupant heat per floor area, W/m², scaled by the occupancy fraction.
    #[serde(default = "default_occupant_density")]
    pub occupant_heat_w_per_m2: f64,
    pub zones: Vec<ZoneGeometry>,
    #[serde(default)]
    pub adjacencies: Vec<Adjacency>,
}

fn default_shgc() -> f64 {
    0.5
}

fn default_occupant_density() -> f64 {
    10.0
}

fn nonneg(what: &str, zone: &str, v: f64) -> Result<()> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::Config(format!(
            "{what} of zone '{zone}' must be finite and >= 0, got {v}"
        )));
    }
    Ok(())
}

impl BuildingLayout {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn num_zones(&self) -> usize {
        self.zones.len()
    }

    fn zone_index(&self) -> HashMap<&str, usize> {
        self.zones
            .iter()
            .enumerate()
            .map(|(i, z)| (z.name.as_str(), i))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.zones.is_empty() {
            return Err(Error::Config(format!("layout '{}' has no zones", self.name)));
        }
        if self.zone_index().len() != self.zones.len() {
            return Err(Error::Config(format!(
                "layout '{}' has duplicate zone names",
                self.name
            )));
        }
        for z in &self.zones {
            if !(z.floor_area_m2 > 0.0 && z.height_m > 0.0)
                || !z.floor_area_m2.is_finite()
                || !z.height_m.is_finite()
            {
                return Err(Error::Config(format!(
                    "zone '{}' needs positive floor area and height",
                    z.name
                )));
            }
            nonneg("exterior wall area", &z.name, z.exterior_wall_area_m2)?;
            nonneg("window area", &z.name, z.window_area_m2)?;
            nonneg("max power", &z.name, z.max_power_w)?;
        }
        nonneg("solar heat gain coefficient", "*", self.solar_heat_gain_coefficient)?;
        nonneg("occupant heat density", "*", self.occupant_heat_w_per_m2)?;
        let index = self.zone_index();
        for adj in &self.adjacencies {
            let [a, b] = &adj.zones;
            for name in [a, b] {
                if !index.contains_key(name.as_str()) {
                    return Err(Error::Config(format!(
                        "adjacency references unknown zone '{name}'"
                    )));
                }
            }
            if a == b {
                return Err(Error::Config(format!("zone '{a}' is adjacent to itself")));
            }
            if !(adj.area_m2.is_finite() && adj.area_m2 > 0.0) {
                return Err(Error::Config(format!(
                    "adjacency {a}-{b} declares shared area {}, must be > 0",
                    adj.area_m2
                )));
            }
        }
        Ok(())
    }

    /// Air volume per zone, m³.
    pub fn volumes(&self) -> Vec<f64> {
        self.zones
            .iter()
            .map(|z| z.floor_area_m2 * z.height_m)
            .collect()
    }

    /// Heat-storing surfaces bounding each zone, m² (windows excluded).
    pub fn bounding_area(&self) -> Vec<f64> {
        let index = self.zone_index();
        let mut area: Vec<f64> = self
            .zones
            .iter()
            .map(|z| {
                let mut a = z.exterior_wall_area_m2;
                if z.under_roof {
                    a += z.floor_area_m2;
                }
                if z.on_ground {
                    a += z.floor_area_m2;
                }
                a
            })
            .collect();
        for adj in &self.adjacencies {
            for name in &adj.zones {
                if let Some(&i) = index.get(name.as_str()) {
                    area[i] += adj.area_m2;
                }
            }
        }
        area
    }

    /// Converts geometry plus U-values into an RC model.
    ///
    /// `R = 1/(U·A)` per element; the outdoor path of a zone combines opaque
    /// wall, window and roof in parallel. `C_i = c_air·ρ_air·V_i + κ·A_i`.
    pub fn build_model(&self, u: &UWallVector, envelope_mass: f64) -> Result<BuildingModel> {
        self.validate()?;
        if !(envelope_mass.is_finite() && envelope_mass >= 0.0) {
            return Err(Error::Config(format!(
                "envelope mass must be >= 0, got {envelope_mass}"
            )));
        }
        let m = self.num_zones();
        let index = self.zone_index();

        let mut conductance = vec![vec![0.0; m]; m];
        for adj in &self.adjacencies {
            let i = index[adj.zones[0].as_str()];
            let j = index[adj.zones[1].as_str()];
            let g = u.get(adj.element.kind()) * adj.area_m2;
            conductance[i][j] += g;
            conductance[j][i] += g;
        }
        let resistance = conductance
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&g| if g > 0.0 { Some(1.0 / g) } else { None })
                    .collect()
            })
            .collect();

        let outdoor_resistance = self
            .zones
            .iter()
            .map(|z| {
                let mut g = u.outwall * z.exterior_wall_area_m2 + u.window * z.window_area_m2;
                if z.under_roof {
                    g += u.roof * z.floor_area_m2;
                }
                (g > 0.0).then(|| 1.0 / g)
            })
            .collect();
        let ground_resistance = self
            .zones
            .iter()
            .map(|z| (z.on_ground).then(|| 1.0 / (u.groundfloor * z.floor_area_m2)))
            .collect();

        let capacitance = self
            .volumes()
            .iter()
            .zip(self.bounding_area())
            .map(|(v, a)| AIR_SPECIFIC_HEAT * AIR_DENSITY * v + envelope_mass * a)
            .collect();

        BuildingModel::new(ModelParams {
            zone_names: self.zones.iter().map(|z| z.name.clone()).collect(),
            capacitance,
            resistance,
            outdoor_resistance,
            ground_resistance,
            max_power: self.zones.iter().map(|z| z.max_power_w).collect(),
        })
    }
}
