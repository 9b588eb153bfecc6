//! Contexts: the mapping from a point in context space (envelope U-values,
//! climate, layout) to one concrete environment instance.

mod layout;
mod uwall;
mod weather;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use layout::{
    Adjacency, BuildingLayout, InteriorElement, ZoneGeometry, AIR_DENSITY, AIR_SPECIFIC_HEAT,
    DEFAULT_ENVELOPE_MASS,
};
pub use uwall::{sample_uwall, UWallBounds, UWallKind, UWallVector};
pub use weather::{synthesize, ClimateParams, WeatherProfile, CSV_HEADER, HOURS_PER_YEAR};

use crate::error::{Error, Result};
use crate::thermal::BuildingModel;

/// Climate the dynamics and climate experiments train on.
pub const TRAINING_CLIMATE: &str = "Warm_Marine";

/// Held-out evaluation climates.
pub const EVAL_CLIMATES: [&str; 5] = [
    "Mixed_Marine",
    "Cool_Marine",
    "Warm_Humid",
    "Warm_Dry",
    "Hot_Humid",
];

/// Seeds of the five fixed "Dynamics 1..5" evaluation envelopes.
pub const DYNAMICS_SEEDS: [u64; 5] = [101, 202, 303, 404, 505];

/// Generator parameters behind the shipped climate files.
pub fn builtin_climate_params() -> Vec<(&'static str, ClimateParams)> {
    let p = |annual_mean_c, annual_amplitude_c, diurnal_amplitude_c, peak_solar_wm2, clearness, offpeak_price, peak_price, seed| ClimateParams {
        annual_mean_c,
        annual_amplitude_c,
        diurnal_amplitude_c,
        peak_solar_wm2,
        clearness,
        offpeak_price,
        peak_price,
        seed,
    };
    vec![
        ("Warm_Marine", p(17.5, 4.0, 4.5, 820.0, 0.75, 0.12, 0.38, 11)),
        ("Mixed_Marine", p(11.5, 7.0, 4.5, 700.0, 0.55, 0.08, 0.22, 12)),
        ("Cool_Marine", p(9.0, 6.5, 4.0, 650.0, 0.5, 0.07, 0.20, 13)),
        ("Warm_Humid", p(21.0, 8.0, 5.0, 820.0, 0.65, 0.07, 0.24, 14)),
        ("Warm_Dry", p(19.5, 10.0, 8.0, 950.0, 0.9, 0.08, 0.30, 15)),
        ("Hot_Humid", p(25.0, 3.5, 4.0, 860.0, 0.65, 0.09, 0.26, 16)),
    ]
}

const BUILTIN_LAYOUTS: [(&str, &str); 2] = [
    ("two_zone", include_str!("../../assets/layouts/two_zone.json")),
    ("small_office", include_str!("../../assets/layouts/small_office.json")),
];

const BUILTIN_CLIMATES: [(&str, &str); 6] = [
    ("Warm_Marine", include_str!("../../assets/climates/Warm_Marine.csv")),
    ("Mixed_Marine", include_str!("../../assets/climates/Mixed_Marine.csv")),
    ("Cool_Marine", include_str!("../../assets/climates/Cool_Marine.csv")),
    ("Warm_Humid", include_str!("../../assets/climates/Warm_Humid.csv")),
    ("Warm_Dry", include_str!("../../assets/climates/Warm_Dry.csv")),
    ("Hot_Humid", include_str!("../../assets/climates/Hot_Humid.csv")),
];

/// A point in context space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextSpec {
    pub layout_id: String,
    pub climate_id: String,
    pub u_wall: UWallVector,
}

impl ContextSpec {
    pub fn new(layout_id: impl Into<String>, climate_id: impl Into<String>, u_wall: UWallVector) -> Self {
        Self {
            layout_id: layout_id.into(),
            climate_id: climate_id.into(),
            u_wall,
        }
    }
}

/// Read-only collection of layouts and climate profiles.
#[derive(Debug, Clone, Default)]
pub struct AssetLibrary {
    layouts: BTreeMap<String, Arc<BuildingLayout>>,
    climates: BTreeMap<String, Arc<WeatherProfile>>,
    /// κ in `C_i = c_air·ρ_air·V_i + κ·A_i`, J/(m²·°C).
    pub envelope_mass: f64,
}

impl AssetLibrary {
    pub fn empty() -> Self {
        Self {
            envelope_mass: DEFAULT_ENVELOPE_MASS,
            ..Default::default()
        }
    }

    /// The layouts and climates compiled into the crate.
    pub fn builtin() -> Self {
        let mut lib = Self::empty();
        for (id, text) in BUILTIN_LAYOUTS {
            let layout = BuildingLayout::from_json(text).expect("shipped layout parses");
            lib.insert_layout(id, layout);
        }
        for (id, text) in BUILTIN_CLIMATES {
            let w = WeatherProfile::from_csv(id, text.as_bytes()).expect("shipped climate parses");
            lib.insert_climate(w);
        }
        lib
    }

    /// Loads `layouts/*.json` and `climates/*.csv` under `dir`; file stems are the ids.
    pub fn from_dir(dir: &Path) -> Result<Self> {
        let mut lib = Self::empty();
        for (sub, ext) in [("layouts", "json"), ("climates", "csv")] {
            let d = dir.join(sub);
            let entries = fs::read_dir(&d).map_err(|e| Error::io(&d, e))?;
            let mut paths: Vec<_> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == ext))
                .collect();
            paths.sort();
            for path in paths {
                let id = path
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .unwrap_or_default()
                    .to_string();
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                if ext == "json" {
                    let layout =
                        BuildingLayout::from_json(&text).map_err(|e| Error::json(&path, e))?;
                    lib.insert_layout(&id, layout);
                } else {
                    lib.insert_climate(WeatherProfile::from_csv(&id, text.as_bytes())?);
                }
            }
        }
        Ok(lib)
    }

    pub fn insert_layout(&mut self, id: &str, layout: BuildingLayout) {
        self.layouts.insert(id.to_string(), Arc::new(layout));
    }

    pub fn insert_climate(&mut self, w: WeatherProfile) {
        self.climates.insert(w.name.clone(), Arc::new(w));
    }

    pub fn layout_ids(&self) -> impl Iterator<Item = &str> {
        self.layouts.keys().map(String::as_str)
    }

    pub fn climate_ids(&self) -> impl Iterator<Item = &str> {
        self.climates.keys().map(String::as_str)
    }

    pub fn layout(&self, id: &str) -> Result<Arc<BuildingLayout>> {
        self.layouts.get(id).cloned().ok_or_else(|| Error::UnknownAsset {
            kind: "layout",
            id: id.to_string(),
        })
    }

    /// Returns the validated weather profile for `climate_id`.
    pub fn load_weather(&self, climate_id: &str) -> Result<Arc<WeatherProfile>> {
        let w = self
            .climates
            .get(climate_id)
            .cloned()
            .ok_or_else(|| Error::UnknownAsset {
                kind: "climate",
                id: climate_id.to_string(),
            })?;
        w.validate()?;
        Ok(w)
    }

    pub fn build_model(&self, layout_id: &str, u: &UWallVector) -> Result<BuildingModel> {
        self.layout(layout_id)?.build_model(u, self.envelope_mass)
    }

    /// Checks that every id in the context resolves.
    pub fn resolve(&self, ctx: &ContextSpec) -> Result<(Arc<BuildingLayout>, Arc<WeatherProfile>)> {
        Ok((self.layout(&ctx.layout_id)?, self.load_weather(&ctx.climate_id)?))
    }

    /// Validates every asset. For each layout the stiffest in-bounds
    /// envelope (all U at their upper bound) must still allow `substep`.
    pub fn validate(&self, substep: f64) -> Result<Vec<String>> {
        let mut report = Vec::new();
        let stiffest = UWallBounds::default().upper();
        for (id, layout) in &self.layouts {
            let model = layout.build_model(&stiffest, self.envelope_mass)?;
            let dt = model.max_stable_dt();
            if dt <= substep {
                return Err(Error::Validation(format!(
                    "layout '{id}': max stable dt {dt:.1} s does not exceed substep {substep} s"
                )));
            }
            report.push(format!(
                "layout {id}: {} zones, min max_stable_dt {dt:.1} s",
                model.num_zones()
            ));
        }
        for (id, w) in &self.climates {
            w.validate()?;
            report.push(format!("climate {id}: {} rows", w.len()));
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMode {
    Static,
    Dynamic,
}

impl std::str::FromStr for TrainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "static" => Ok(TrainMode::Static),
            "dynamic" => Ok(TrainMode::Dynamic),
            _ => Err(Error::Validation(format!(
                "mode must be 'static' or 'dynamic', got '{s}'"
            ))),
        }
    }
}

impl std::fmt::Display for TrainMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TrainMode::Static => "static",
            TrainMode::Dynamic => "dynamic",
        })
    }
}

/// Infinite stream of training contexts. One sampler per worker.
#[derive(Debug, Clone)]
pub struct ContextSampler {
    mode: TrainMode,
    base: ContextSpec,
    bounds: UWallBounds,
    climates: Vec<String>,
    rng: ChaCha8Rng,
}

impl ContextSampler {
    pub fn new(mode: TrainMode, base: ContextSpec, seed: u64) -> Self {
        Self {
            mode,
            base,
            bounds: UWallBounds::default(),
            climates: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn with_bounds(mut self, bounds: UWallBounds) -> Self {
        self.bounds = bounds;
        self
    }

    /// In dynamic mode, also draw the climate uniformly from `climates`.
    pub fn with_climates(mut self, climates: Vec<String>) -> Self {
        self.climates = climates;
        self
    }

    pub fn mode(&self) -> TrainMode {
        self.mode
    }

    pub fn base(&self) -> &ContextSpec {
        &self.base
    }

    /// Same mode, base, bounds and climate list with a fresh random stream.
    pub fn clone_with_seed(&self, seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            ..self.clone()
        }
    }
}

impl Iterator for ContextSampler {
    type Item = ContextSpec;

    fn next(&mut self) -> Option<ContextSpec> {
        Some(match self.mode {
            TrainMode::Static => self.base.clone(),
            TrainMode::Dynamic => {
                let mut c = self.base.clone();
                c.u_wall = self.bounds.sample(&mut self.rng);
                if !self.climates.is_empty() {
                    let i = self.rng.random_range(0..self.climates.len());
                    c.climate_id = self.climates[i].clone();
                }
                c
            }
        })
    }
}
