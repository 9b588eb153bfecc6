use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-zone comfort penalty weight, per °C of deviation.
pub const COMFORT_WEIGHT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Thermal,
    Cost,
    Ramp,
}

impl Objective {
    pub fn name(self) -> &'static str {
        match self {
            Objective::Thermal => "thermal",
            Objective::Cost => "cost",
            Objective::Ramp => "ramp",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RewardVector(pub Vec<f64>);

impl RewardVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// A weight vector on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PreferenceVector(Vec<f64>);

impl PreferenceVector {
    /// Tolerance on `|Σω − 1|`.
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Validation("preference vector is empty".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Validation(format!(
                "preference weights must be finite and >= 0: {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::Validation(format!(
                "preference weights sum to {sum}, not 1"
            )));
        }
        Ok(Self(weights))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for PreferenceVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PreferenceVector> for Vec<f64> {
    fn from(p: PreferenceVector) -> Self {
        p.0
    }
}

/// `M − 0.05·Σ|T_i − T_i^s|`.
pub fn reward_thermal(temps: &[f64], setpoints: &[f64]) -> f64 {
    debug_assert_eq!(temps.len(), setpoints.len());
    let m = temps.len() as f64;
    let deviation: f64 = temps
        .iter()
        .zip(setpoints)
        .map(|(t, s)| (t - s).abs())
        .sum();
    m - COMFORT_WEIGHT * deviation
}

/// `M − price_factor·c·Σ|P_i|`, power in kW and price per kWh.
pub fn reward_cost(power_kw: &[f64], price: f64, price_factor: f64) -> f64 {
    let m = power_kw.len() as f64;
    let total: f64 = power_kw.iter().map(|p| p.abs()).sum();
    m - price_factor * price * total
}

/// `M − |Σ|P_i[t]| − Σ|P_i[t−1]||`.
pub fn reward_ramp(power_now_kw: &[f64], power_prev_kw: &[f64]) -> f64 {
    let m = power_now_kw.len() as f64;
    let now: f64 = power_now_kw.iter().map(|p| p.abs()).sum();
    let prev: f64 = power_prev_kw.iter().map(|p| p.abs()).sum();
    m - (now - prev).abs()
}

/// Linear scalarization `ωᵀr`.
pub fn scalarize(omega: &PreferenceVector, r: &[f64]) -> Result<f64> {
    if omega.len() != r.len() {
        return Err(Error::Validation(format!(
            "preference has {} weights, reward has {} components",
            omega.len(),
            r.len()
        )));
    }
    Ok(omega.0.iter().zip(r).map(|(w, x)| w * x).sum())
}

/// Per-objective discounted sum `Σ_t γ^t r_t`.
pub fn episode_return(rewards: &[RewardVector], gamma: f64) -> Vec<f64> {
    let n = rewards.first().map_or(0, RewardVector::len);
    let mut g = vec![0.0; n];
    let mut discount = 1.0;
    for r in rewards {
        for (gi, ri) in g.iter_mut().zip(&r.0) {
            *gi += discount * ri;
        }
        discount *= gamma;
    }
    g
}
