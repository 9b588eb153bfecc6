//! Browser bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string; errors become `{"error": "..."}`.

use std::sync::{Arc, OnceLock};

use building_morl::context::{AssetLibrary, ContextSampler, ContextSpec, TrainMode, UWallKind, UWallVector};
use building_morl::env::{Action, BuildingEnv, EnvConfig};
use building_morl::metrics::{evaluate_front, pareto_filter, reference_point, EuConfig};
use building_morl::morl::{train_with_sampler, EnvFactory, TrainerConfig};
use serde::Serialize;
use serde_json::json;
use wasm_bindgen::prelude::*;

fn library() -> Arc<AssetLibrary> {
    static LIB: OnceLock<Arc<AssetLibrary>> = OnceLock::new();
    Arc::clone(LIB.get_or_init(|| Arc::new(AssetLibrary::builtin())))
}

fn respond<T: Serialize>(r: Result<T, String>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| json!({ "error": e.to_string() }).to_string()),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

/// Layouts, climates and U-value bounds for populating the controls.
#[wasm_bindgen]
pub fn catalog() -> String {
    let lib = library();
    let bounds: Vec<_> = UWallKind::ALL
        .iter()
        .map(|k| {
            let (lo, hi) = k.default_bounds();
            json!({ "name": k.name(), "lo": lo, "hi": hi })
        })
        .collect();
    json!({
        "layouts": lib.layout_ids().collect::<Vec<_>>(),
        "climates": lib.climate_ids().collect::<Vec<_>>(),
        "uwall": bounds,
    })
    .to_string()
}

#[derive(Serialize)]
struct SimTrace {
    zone_names: Vec<String>,
    outdoor_temp: Vec<f64>,
    zone_temps: Vec<Vec<f64>>,
    power_w: Vec<Vec<f64>>,
    rewards: Vec<Vec<f64>>,
    returns: Vec<f64>,
}

fn simulate_inner(layout: &str, climate: &str, u: &[f64], gain: f64, setpoint: f64, hours: usize, start_hour: usize) -> Result<SimTrace, String> {
    let u: [f64; 7] = u.try_into().map_err(|_| format!("expected 7 U-values, got {}", u.len()))?;
    let config = EnvConfig {
        horizon: hours.max(1),
        setpoint_c: setpoint,
        start_hour,
        init_temp_spread_c: 0.0,
        ..EnvConfig::default()
    };
    let mut env = BuildingEnv::new(library(), config.clone()).map_err(|e| e.to_string())?;
    let ctx = ContextSpec::new(layout, climate, UWallVector::from_array(u));
    let mut obs = env.reset(&ctx, 0).map_err(|e| e.to_string())?;
    let mut trace = SimTrace {
        zone_names: env.model().map(|m| m.zone_names().to_vec()).unwrap_or_default(),
        outdoor_temp: vec![obs.outdoor_temp],
        zone_temps: vec![obs.zone_temps.clone()],
        power_w: Vec::new(),
        rewards: Vec::new(),
        returns: Vec::new(),
    };
    loop {
        let a = Action(obs.zone_temps.iter().map(|t| gain * (setpoint - t)).collect());
        let out = env.step(&a).map_err(|e| e.to_string())?;
        trace.power_w.push(out.power_w);
        trace.rewards.push(out.reward.0);
        obs = out.observation;
        trace.outdoor_temp.push(obs.outdoor_temp);
        trace.zone_temps.push(obs.zone_temps.clone());
        if out.done {
            break;
        }
    }
    let n = trace.rewards.first().map_or(0, Vec::len);
    trace.returns = (0..n)
        .map(|k| trace.rewards.iter().enumerate().map(|(t, r)| config.gamma.powi(t as i32) * r[k]).sum())
        .collect();
    Ok(trace)
}

/// Runs a proportional controller `a = gain·(setpoint − T)` for `hours`
/// control steps and returns the temperature and power traces.
#[wasm_bindgen]
pub fn simulate(layout: &str, climate: &str, u_wall: &[f64], gain: f64, setpoint: f64, hours: usize, start_hour: usize) -> String {
    respond(simulate_inner(layout, climate, u_wall, gain, setpoint, hours, start_hour))
}

fn metrics_inner(points_json: &str) -> Result<serde_json::Value, String> {
    let points: Vec<Vec<f64>> = serde_json::from_str(points_json).map_err(|e| e.to_string())?;
    let ids: Vec<u64> = (0..points.len() as u64).collect();
    let front = pareto_filter(&points, &ids).map_err(|e| e.to_string())?;
    let reference = reference_point(&points, 0.01).ok_or("no points")?;
    let report = evaluate_front(&front, &reference, &EuConfig::default()).map_err(|e| e.to_string())?;
    Ok(json!({ "front_ids": front.policy_ids, "report": report }))
}

/// Pareto filter plus HV, EU and SP for a JSON list of return vectors.
#[wasm_bindgen]
pub fn front_metrics(points_json: &str) -> String {
    respond(metrics_inner(points_json))
}

fn train_inner(seed: u64, iterations: usize, population: usize) -> Result<serde_json::Value, String> {
    let factory = EnvFactory::new(library(), EnvConfig::default()).map_err(|e| e.to_string())?;
    let config = TrainerConfig {
        iterations,
        population,
        extension_iterations: (iterations / 2).max(2),
        contexts_per_estimate: 1,
        seed,
        ..TrainerConfig::default()
    };
    let base = ContextSpec::new("two_zone", "Warm_Marine", UWallVector::midpoint());
    let sampler = ContextSampler::new(TrainMode::Static, base, seed);
    let out = train_with_sampler(&factory, &config, sampler).map_err(|e| e.to_string())?;
    Ok(json!({
        "objectives": ["thermal", "cost"],
        "init_front": out.init_front.points,
        "final_front": out.front.points,
        "buffer_size": out.buffer.len(),
    }))
}

/// Trains a small policy set on the two-zone building and returns the fronts
/// after initialization and after one extension round.
#[wasm_bindgen]
pub fn train_front(seed: u64, iterations: usize, population: usize) -> String {
    respond(train_inner(seed, iterations, population))
}
