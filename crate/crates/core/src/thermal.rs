//! Lumped RC-network thermal model of a multi-zone building.
//!
//! Each zone `i` is a capacitance `C_i` (J/°C) coupled to neighbouring zones
//! through symmetric resistances `R_ij` (°C/W), and optionally to the outdoor
//! air and the ground. Zone temperatures obey
//!
//! ```text
//! C_i dT_i/dt = Σ_j (T_j - T_i)/R_ij + (T_e - T_i)/R_ie + (T_g - T_i)/R_ig + Q^h_i + Q^a_i + Q^s_i
//! ```
//!
//! and are advanced with forward Euler under zero-order-hold inputs.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Resistance between two zones, stored once with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneLink {
    pub a: usize,
    pub b: usize,
    pub resistance: f64,
}

/// Raw parameters accepted by [`BuildingModel::new`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub zone_names: Vec<String>,
    /// J/°C per zone.
    pub capacitance: Vec<f64>,
    /// Symmetric M×M matrix in °C/W; `None` means no heat path. The diagonal must be `None`.
    pub resistance: Vec<Vec<Option<f64>>>,
    /// °C/W per zone, `None` for zones without an external wall.
    pub outdoor_resistance: Vec<Option<f64>>,
    /// °C/W per zone, `None` for zones not on the ground.
    pub ground_resistance: Vec<Option<f64>>,
    /// W per zone; bound on |Q^h_i|.
    pub max_power: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingModel {
    zone_names: Vec<String>,
    capacitance: Vec<f64>,
    links: Vec<ZoneLink>,
    outdoor_resistance: Vec<Option<f64>>,
    ground_resistance: Vec<Option<f64>>,
    max_power: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalState {
    pub zone_temps: Vec<f64>,
}

impl ThermalState {
    pub fn new(zone_temps: Vec<f64>) -> Self {
        Self { zone_temps }
    }

    pub fn uniform(num_zones: usize, temp: f64) -> Self {
        Self {
            zone_temps: vec![temp; num_zones],
        }
    }
}

/// Exogenous and controlled heat flows, held constant over a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatInputs {
    /// W, heating positive, cooling negative. Clipped to ±max_power.
    pub controlled: Vec<f64>,
    pub occupant: Vec<f64>,
    pub solar: Vec<f64>,
    pub outdoor_temp: f64,
    pub ground_temp: f64,
}

impl HeatInputs {
    /// No heat sources, given boundary temperatures.
    pub fn passive(num_zones: usize, outdoor_temp: f64, ground_temp: f64) -> Self {
        Self {
            controlled: vec![0.0; num_zones],
            occupant: vec![0.0; num_zones],
            solar: vec![0.0; num_zones],
            outdoor_temp,
            ground_temp,
        }
    }
}

fn check_positive(what: &str, zone: usize, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Config(format!(
            "{what} of zone {zone} must be finite and > 0, got {v}"
        )));
    }
    Ok(())
}

impl BuildingModel {
    /// Builds a model whose zones are all thermally connected to the outdoor
    /// air or the ground (directly or through other zones).
    pub fn new(params: ModelParams) -> Result<Self> {
        let model = Self::from_params(params)?;
        let boundary: Vec<usize> = (0..model.num_zones())
            .filter(|&i| {
                model.outdoor_resistance[i].is_some() || model.ground_resistance[i].is_some()
            })
            .collect();
        if boundary.is_empty() {
            return Err(Error::Config(
                "no zone has an outdoor or ground link".to_string(),
            ));
        }
        if let Some(z) = model.first_unreached(&boundary) {
            return Err(Error::Config(format!(
                "zone {z} ('{}') has no heat path to the outdoor air or ground",
                model.zone_names[z]
            )));
        }
        Ok(model)
    }

    /// Builds an adiabatic model: no outdoor or ground links are allowed and
    /// the zone graph must be connected.
    pub fn closed(params: ModelParams) -> Result<Self> {
        let model = Self::from_params(params)?;
        if model.outdoor_resistance.iter().any(Option::is_some)
            || model.ground_resistance.iter().any(Option::is_some)
        {
            return Err(Error::Config(
                "closed model must not have outdoor or ground links".to_string(),
            ));
        }
        if let Some(z) = model.first_unreached(&[0]) {
            return Err(Error::Config(format!(
                "zone {z} ('{}') is disconnected from zone 0",
                model.zone_names[z]
            )));
        }
        Ok(model)
    }

    fn from_params(p: ModelParams) -> Result<Self> {
        let m = p.capacitance.len();
        if m == 0 {
            return Err(Error::Config("model needs at least one zone".to_string()));
        }
        let lens = [
            ("zone_names", p.zone_names.len()),
            ("resistance rows", p.resistance.len()),
            ("outdoor_resistance", p.outdoor_resistance.len()),
            ("ground_resistance", p.ground_resistance.len()),
            ("max_power", p.max_power.len()),
        ];
        for (what, len) in lens {
            if len != m {
                return Err(Error::Config(format!(
                    "{what} has length {len}, expected {m}"
                )));
            }
        }
        for (i, &c) in p.capacitance.iter().enumerate() {
            check_positive("capacitance", i, c)?;
        }
        for (i, &w) in p.max_power.iter().enumerate() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Config(format!(
                    "max_power of zone {i} must be finite and >= 0, got {w}"
                )));
            }
        }
        for (i, r) in p.outdoor_resistance.iter().enumerate() {
            if let Some(r) = r {
                check_positive("outdoor resistance", i, *r)?;
            }
        }
        for (i, r) in p.ground_resistance.iter().enumerate() {
            if let Some(r) = r {
                check_positive("ground resistance", i, *r)?;
            }
        }

        let mut links = Vec::new();
        for (i, row) in p.resistance.iter().enumerate() {
            if row.len() != m {
                return Err(Error::Config(format!(
                    "resistance row {i} has length {}, expected {m}",
                    row.len()
                )));
            }
            if row[i].is_some() {
                return Err(Error::Config(format!(
                    "resistance diagonal entry ({i},{i}) must be absent"
                )));
            }
        }
        for i in 0..m {
            for j in (i + 1)..m {
                match (p.resistance[i][j], p.resistance[j][i]) {
                    (None, None) => {}
                    (Some(a), Some(b)) if a == b => {
                        check_positive("resistance to neighbour", i, a)?;
                        links.push(ZoneLink {
                            a: i,
                            b: j,
                            resistance: a,
                        });
                    }
                    (a, b) => {
                        return Err(Error::Config(format!(
                            "resistance matrix is not symmetric at ({i},{j}): {a:?} vs {b:?}"
                        )))
                    }
                }
            }
        }

        Ok(Self {
            zone_names: p.zone_names,
            capacitance: p.capacitance,
            links,
            outdoor_resistance: p.outdoor_resistance,
            ground_resistance: p.ground_resistance,
            max_power: p.max_power,
        })
    }

    fn first_unreached(&self, seeds: &[usize]) -> Option<usize> {
        let m = self.num_zones();
        let mut adj = vec![Vec::new(); m];
        for l in &self.links {
            adj[l.a].push(l.b);
            adj[l.b].push(l.a);
        }
        let mut seen = vec![false; m];
        let mut queue: VecDeque<usize> = seeds.iter().copied().collect();
        for &s in seeds {
            seen[s] = true;
        }
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    pub fn num_zones(&self) -> usize {
        self.capacitance.len()
    }

    pub fn zone_names(&self) -> &[String] {
        &self.zone_names
    }

    pub fn capacitance(&self) -> &[f64] {
        &self.capacitance
    }

    pub fn links(&self) -> &[ZoneLink] {
        &self.links
    }

    pub fn outdoor_resistance(&self) -> &[Option<f64>] {
        &self.outdoor_resistance
    }

    pub fn ground_resistance(&self) -> &[Option<f64>] {
        &self.ground_resistance
    }

    pub fn max_power(&self) -> &[f64] {
        &self.max_power
    }

    pub fn resistance(&self, i: usize, j: usize) -> Option<f64> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.links
            .iter()
            .find(|l| l.a == a && l.b == b)
            .map(|l| l.resistance)
    }

    /// Full symmetric resistance matrix, `None` where zones are not adjacent.
    pub fn resistance_matrix(&self) -> Vec<Vec<Option<f64>>> {
        let m = self.num_zones();
        let mut r = vec![vec![None; m]; m];
        for l in &self.links {
            r[l.a][l.b] = Some(l.resistance);
            r[l.b][l.a] = Some(l.resistance);
        }
        r
    }

    /// Sum of conductances (W/°C) attached to each zone.
    pub fn total_conductance(&self) -> Vec<f64> {
        let mut g: Vec<f64> = (0..self.num_zones())
            .map(|i| {
                self.outdoor_resistance[i].map_or(0.0, |r| 1.0 / r)
                    + self.ground_resistance[i].map_or(0.0, |r| 1.0 / r)
            })
            .collect();
        for l in &self.links {
            g[l.a] += 1.0 / l.resistance;
            g[l.b] += 1.0 / l.resistance;
        }
        g
    }

    /// Largest forward-Euler step that keeps every zone update a convex
    /// combination of its neighbours: `min_i C_i / Σ 1/R`.
    pub fn max_stable_dt(&self) -> f64 {
        self.zone_stable_dt()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    fn zone_stable_dt(&self) -> Vec<f64> {
        self.capacitance
            .iter()
            .zip(self.total_conductance())
            .map(|(&c, g)| if g > 0.0 { c / g } else { f64::INFINITY })
            .collect()
    }

    fn check_dims(&self, state: &ThermalState, inputs: &HeatInputs) -> Result<()> {
        let m = self.num_zones();
        let dims = [
            ("state", state.zone_temps.len()),
            ("controlled heat", inputs.controlled.len()),
            ("occupant heat", inputs.occupant.len()),
            ("solar heat", inputs.solar.len()),
        ];
        for (what, len) in dims {
            if len != m {
                return Err(Error::Config(format!(
                    "{what} has length {len}, model has {m} zones"
                )));
            }
        }
        let all_finite = state
            .zone_temps
            .iter()
            .chain(&inputs.controlled)
            .chain(&inputs.occupant)
            .chain(&inputs.solar)
            .chain([&inputs.outdoor_temp, &inputs.ground_temp])
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Config("non-finite state or input".to_string()));
        }
        Ok(())
    }

    /// Net heat flow into each zone, W.
    fn heat_flows(&self, temps: &[f64], inputs: &HeatInputs) -> Vec<f64> {
        let mut q: Vec<f64> = (0..self.num_zones())
            .map(|i| {
                let t = temps[i];
                let limit = self.max_power[i];
                let mut q = inputs.controlled[i].clamp(-limit, limit)
                    + inputs.occupant[i]
                    + inputs.solar[i];
                if let Some(r) = self.outdoor_resistance[i] {
                    q += (inputs.outdoor_temp - t) / r;
                }
                if let Some(r) = self.ground_resistance[i] {
                    q += (inputs.ground_temp - t) / r;
                }
                q
            })
            .collect();
        // Each internal exchange is added and subtracted with the same value so
        // that Σ C_i dT_i/dt is zero for a closed model.
        for l in &self.links {
            let flow = (temps[l.b] - temps[l.a]) / l.resistance;
            q[l.a] += flow;
            q[l.b] -= flow;
        }
        q
    }

    /// dT_i/dt in °C/s.
    pub fn derivative(&self, state: &ThermalState, inputs: &HeatInputs) -> Result<Vec<f64>> {
        self.check_dims(state, inputs)?;
        Ok(self
            .heat_flows(&state.zone_temps, inputs)
            .into_iter()
            .zip(&self.capacitance)
            .map(|(q, c)| q / c)
            .collect())
    }

    /// One forward-Euler step of length `dt` seconds.
    pub fn step(&self, state: &ThermalState, inputs: &HeatInputs, dt: f64) -> Result<ThermalState> {
        self.check_dims(state, inputs)?;
        self.check_dt(dt)?;
        Ok(self.euler(state, inputs, dt))
    }

    /// Advances over `interval` seconds with equal substeps no longer than
    /// `max_substep`, inputs held constant throughout.
    pub fn advance(
        &self,
        state: &ThermalState,
        inputs: &HeatInputs,
        interval: f64,
        max_substep: f64,
    ) -> Result<ThermalState> {
        if !(interval > 0.0 && max_substep > 0.0) {
            return Err(Error::Config(format!(
                "interval ({interval}) and substep ({max_substep}) must be > 0"
            )));
        }
        self.check_dims(state, inputs)?;
        let n = (interval / max_substep).ceil().max(1.0) as usize;
        let dt = interval / n as f64;
        self.check_dt(dt)?;
        let mut s = state.clone();
        for _ in 0..n {
            s = self.euler(&s, inputs, dt);
        }
        Ok(s)
    }

    fn check_dt(&self, dt: f64) -> Result<()> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("time step must be > 0, got {dt}")));
        }
        let bounds = self.zone_stable_dt();
        let (zone, &max_dt) = bounds
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("model has at least one zone");
        if dt > max_dt {
            return Err(Error::Unstable {
                zone,
                zone_name: self.zone_names[zone].clone(),
                max_dt,
                dt,
            });
        }
        Ok(())
    }

    fn euler(&self, state: &ThermalState, inputs: &HeatInputs, dt: f64) -> ThermalState {
        let q = self.heat_flows(&state.zone_temps, inputs);
        ThermalState {
            zone_temps: state
                .zone_temps
                .iter()
                .zip(q)
                .zip(&self.capacitance)
                .map(|((t, q), c)| t + dt * q / c)
                .collect(),
        }
    }
}
