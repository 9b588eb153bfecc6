//! Episodic multi-objective building control environment.
//!
//! The context (envelope U-values, climate) selects the dynamics and the
//! exogenous series, but never appears in the observation.

mod reward;

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use reward::{
    episode_return, reward_cost, reward_ramp, reward_thermal, scalarize, Objective,
    PreferenceVector, RewardVector, COMFORT_WEIGHT,
};

use crate::context::{AssetLibrary, BuildingLayout, ContextSpec, WeatherProfile};
use crate::error::{Error, Result};
use crate::thermal::{BuildingModel, HeatInputs, ThermalState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Control steps per episode.
    pub horizon: usize,
    pub control_interval_s: f64,
    /// Upper bound on the integration substep.
    pub substep_s: f64,
    /// Default setpoint, °C.
    pub setpoint_c: f64,
    /// Optional 24-value hour-of-day schedule overriding `setpoint_c`.
    pub setpoint_by_hour: Option<Vec<f64>>,
    pub gamma: f64,
    pub objectives: Vec<Objective>,
    pub price_factor: f64,
    /// Weather row at which every episode starts.
    pub start_hour: usize,
    /// Initial zone temperatures are uniform in setpoint ± this spread.
    pub init_temp_spread_c: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            horizon: 24,
            control_interval_s: 3600.0,
            substep_s: 300.0,
            setpoint_c: 22.0,
            setpoint_by_hour: None,
            gamma: 0.99,
            objectives: vec![Objective::Thermal, Objective::Cost],
            price_factor: 0.05,
            // First Monday of July in the shipped profiles.
            start_hour: 4368,
            init_temp_spread_c: 2.0,
        }
    }
}

impl EnvConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn num_objectives(&self) -> usize {
        self.objectives.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.horizon == 0 {
            return bad("horizon must be >= 1".into());
        }
        if !(self.control_interval_s > 0.0 && self.substep_s > 0.0) {
            return bad("control interval and substep must be > 0".into());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad(format!("gamma must lie in (0, 1], got {}", self.gamma));
        }
        if self.objectives.is_empty() {
            return bad("at least one objective is required".into());
        }
        if !(self.price_factor.is_finite() && self.price_factor >= 0.0) {
            return bad(format!("price_factor must be >= 0, got {}", self.price_factor));
        }
        if !(self.init_temp_spread_c.is_finite() && self.init_temp_spread_c >= 0.0) {
            return bad("init_temp_spread_c must be >= 0".into());
        }
        if let Some(s) = &self.setpoint_by_hour {
            if s.len() != 24 || s.iter().any(|v| !v.is_finite()) {
                return bad("setpoint_by_hour needs 24 finite values".into());
            }
        }
        Ok(())
    }

    /// Checks `(start + horizon)·interval` fits inside the weather series,
    /// including the observation after the final step.
    pub fn check_weather(&self, w: &WeatherProfile) -> Result<()> {
        let last = self.weather_index(w, self.horizon);
        if last >= w.len() {
            return Err(Error::Validation(format!(
                "episode needs weather row {last}, '{}' has {} rows",
                w.name,
                w.len()
            )));
        }
        Ok(())
    }

    fn weather_index(&self, w: &WeatherProfile, step: usize) -> usize {
        let offset = (step as f64 * self.control_interval_s / w.timestep_s).floor() as usize;
        self.start_hour + offset
    }

    fn setpoint_at(&self, w: &WeatherProfile, row: usize) -> f64 {
        match &self.setpoint_by_hour {
            Some(s) => {
                let hour = ((row as f64 * w.timestep_s / 3600.0).floor() as usize) % 24;
                s[hour]
            }
            None => self.setpoint_c,
        }
    }
}

/// What the agent sees. No field is derived from the context identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub zone_temps: Vec<f64>,
    /// W per zone.
    pub occupant_heat: Vec<f64>,
    /// W per zone.
    pub solar_heat: Vec<f64>,
    pub ground_temp: f64,
    pub outdoor_temp: f64,
    pub electricity_price: f64,
    pub setpoints: Vec<f64>,
    /// Control steps since reset.
    pub time_index: usize,
}

impl Observation {
    /// Flat layout, `4M + 4` values.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend(&self.zone_temps);
        v.extend(&self.occupant_heat);
        v.extend(&self.solar_heat);
        v.push(self.ground_temp);
        v.push(self.outdoor_temp);
        v.push(self.electricity_price);
        v.extend(&self.setpoints);
        v.push(self.time_index as f64);
        v
    }

    pub fn dim(&self) -> usize {
        observation_dim(self.zone_temps.len())
    }

    /// Names of the flat components for `num_zones` zones.
    pub fn field_names(zone_names: &[String]) -> Vec<String> {
        let mut v = Vec::new();
        for prefix in ["zone_temp", "occupant_heat", "solar_heat"] {
            v.extend(zone_names.iter().map(|z| format!("{prefix}:{z}")));
        }
        v.extend(["ground_temp", "outdoor_temp", "electricity_price"].map(String::from));
        v.extend(zone_names.iter().map(|z| format!("setpoint:{z}")));
        v.push("time_index".to_string());
        v
    }
}

pub fn observation_dim(num_zones: usize) -> usize {
    4 * num_zones + 4
}

/// Normalized heat command per zone; the physical power is `a_i·max_power_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Action(pub Vec<f64>);

impl Action {
    pub fn zeros(num_zones: usize) -> Self {
        Self(vec![0.0; num_zones])
    }

    pub fn clipped(&self) -> Vec<f64> {
        self.0.iter().map(|a| a.clamp(-1.0, 1.0)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: RewardVector,
    pub done: bool,
    /// Applied physical power per zone, W.
    pub power_w: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Episode {
    layout: Arc<BuildingLayout>,
    weather: Arc<WeatherProfile>,
    model: BuildingModel,
    state: ThermalState,
    t: usize,
    prev_power_kw: Vec<f64>,
    done: bool,
}

/// One stateful environment instance.
#[derive(Debug, Clone)]
pub struct BuildingEnv {
    library: Arc<AssetLibrary>,
    config: EnvConfig,
    episode: Option<Episode>,
}

impl BuildingEnv {
    pub fn new(library: Arc<AssetLibrary>, config: EnvConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            library,
            config,
            episode: None,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn library(&self) -> &Arc<AssetLibrary> {
        &self.library
    }

    /// Zone count of the current episode, if any.
    pub fn num_zones(&self) -> Option<usize> {
        self.episode.as_ref().map(|e| e.model.num_zones())
    }

    pub fn model(&self) -> Option<&BuildingModel> {
        self.episode.as_ref().map(|e| &e.model)
    }

    pub fn reset(&mut self, context: &ContextSpec, seed: u64) -> Result<Observation> {
        let (layout, weather) = self.library.resolve(context)?;
        self.config.check_weather(&weather)?;
        let model = layout.build_model(&context.u_wall, self.library.envelope_mass)?;
        if model.max_stable_dt() < self.config.substep_s {
            return Err(Error::Unstable {
                zone: 0,
                zone_name: "*".into(),
                max_dt: model.max_stable_dt(),
                dt: self.config.substep_s,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let row = self.config.weather_index(&weather, 0);
        let sp = self.config.setpoint_at(&weather, row);
        let spread = self.config.init_temp_spread_c;
        let temps = (0..model.num_zones())
            .map(|_| sp + rng.random_range(-spread..=spread))
            .collect();
        let m = model.num_zones();
        self.episode = Some(Episode {
            layout,
            weather,
            model,
            state: ThermalState::new(temps),
            t: 0,
            prev_power_kw: vec![0.0; m],
            done: false,
        });
        Ok(self.observe())
    }

    fn observe(&self) -> Observation {
        let ep = self.episode.as_ref().expect("observe after reset");
        let row = self.config.weather_index(&ep.weather, ep.t);
        let (occupant_heat, solar_heat) = exogenous_heat(&ep.layout, &ep.weather, row);
        let sp = self.config.setpoint_at(&ep.weather, row);
        Observation {
            zone_temps: ep.state.zone_temps.clone(),
            occupant_heat,
            solar_heat,
            ground_temp: ep.weather.ground_temp[row],
            outdoor_temp: ep.weather.outdoor_temp[row],
            electricity_price: ep.weather.price_per_kwh[row],
            setpoints: vec![sp; ep.model.num_zones()],
            time_index: ep.t,
        }
    }

    pub fn step(&mut self, action: &Action) -> Result<StepOutcome> {
        let config = &self.config;
        let ep = self
            .episode
            .as_mut()
            .ok_or_else(|| Error::Lifecycle("step called before reset".into()))?;
        if ep.done {
            return Err(Error::Lifecycle("step called after episode end".into()));
        }
        let m = ep.model.num_zones();
        if action.0.len() != m {
            return Err(Error::Validation(format!(
                "action has {} components, building has {m} zones",
                action.0.len()
            )));
        }
        if action.0.iter().any(|a| !a.is_finite()) {
            return Err(Error::Validation("action is not finite".into()));
        }
        let power_w: Vec<f64> = action
            .clipped()
            .iter()
            .zip(ep.model.max_power())
            .map(|(a, p)| a * p)
            .collect();

        let row = config.weather_index(&ep.weather, ep.t);
        let (occupant, solar) = exogenous_heat(&ep.layout, &ep.weather, row);
        let inputs = HeatInputs {
            controlled: power_w.clone(),
            occupant,
            solar,
            outdoor_temp: ep.weather.outdoor_temp[row],
            ground_temp: ep.weather.ground_temp[row],
        };
        ep.state = ep
            .model
            .advance(&ep.state, &inputs, config.control_interval_s, config.substep_s)?;
        ep.t += 1;

        let power_kw: Vec<f64> = power_w.iter().map(|p| p / 1000.0).collect();
        let price = ep.weather.price_per_kwh[row];
        let new_row = config.weather_index(&ep.weather, ep.t);
        let setpoints = vec![config.setpoint_at(&ep.weather, new_row); m];
        let reward = config
            .objectives
            .iter()
            .map(|o| match o {
                Objective::Thermal => reward_thermal(&ep.state.zone_temps, &setpoints),
                Objective::Cost => reward_cost(&power_kw, price, config.price_factor),
                Objective::Ramp => reward_ramp(&power_kw, &ep.prev_power_kw),
            })
            .collect();
        ep.prev_power_kw = power_kw;
        ep.done = ep.t >= config.horizon;
        let done = ep.done;
        Ok(StepOutcome {
            observation: self.observe(),
            reward: RewardVector(reward),
            done,
            power_w,
        })
    }

    /// Runs one full episode from `reset(context, seed)` with a feedback controller.
    pub fn rollout<F>(&mut self, context: &ContextSpec, seed: u64, mut controller: F) -> Result<Trajectory>
    where
        F: FnMut(&Observation) -> Action,
    {
        let mut obs = self.reset(context, seed)?;
        let zone_names = self.model().map(|m| m.zone_names().to_vec()).unwrap_or_default();
        let mut traj = Trajectory {
            zone_names,
            objectives: self.config.objectives.clone(),
            steps: Vec::with_capacity(self.config.horizon),
        };
        loop {
            let action = controller(&obs);
            let out = self.step(&action)?;
            traj.steps.push(TrajectoryStep {
                time_index: out.observation.time_index,
                zone_temps: out.observation.zone_temps.clone(),
                action: action.clipped(),
                power_w: out.power_w,
                reward: out.reward,
            });
            obs = out.observation;
            if out.done {
                return Ok(traj);
            }
        }
    }
}

fn exogenous_heat(layout: &BuildingLayout, w: &WeatherProfile, row: usize) -> (Vec<f64>, Vec<f64>) {
    let occ = w.occupancy_frac[row] * layout.occupant_heat_w_per_m2;
    let solar = w.solar_wm2[row] * layout.solar_heat_gain_coefficient;
    layout
        .zones
        .iter()
        .map(|z| (occ * z.floor_area_m2, solar * z.window_area_m2))
        .unzip()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub time_index: usize,
    pub zone_temps: Vec<f64>,
    pub action: Vec<f64>,
    pub power_w: Vec<f64>,
    pub reward: RewardVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub zone_names: Vec<String>,
    pub objectives: Vec<Objective>,
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    pub fn rewards(&self) -> Vec<RewardVector> {
        self.steps.iter().map(|s| s.reward.clone()).collect()
    }

    pub fn discounted_return(&self, gamma: f64) -> Vec<f64> {
        episode_return(&self.rewards(), gamma)
    }

    /// CSV with `time`, zone temperatures, actions and rewards.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = vec!["time".to_string()];
        header.extend(self.zone_names.iter().map(|z| format!("temp_{z}")));
        header.extend(self.zone_names.iter().map(|z| format!("action_{z}")));
        header.extend(self.objectives.iter().map(|o| format!("reward_{}", o.name())));
        writeln!(out, "{}", header.join(","))?;
        for s in &self.steps {
            let mut row = vec![s.time_index.to_string()];
            row.extend(s.zone_temps.iter().map(f64::to_string));
            row.extend(s.action.iter().map(f64::to_string));
            row.extend(s.reward.0.iter().map(f64::to_string));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}
