//! WebAssembly bindings behind `www/index.html`.
//!
//! Each export takes a scenario as JSON (an empty string means the defaults,
//! and missing keys fall back to them) plus explicit trial counts and seeds,
//! and returns its result as a JSON string. Runs are single-threaded and
//! reproducible from the seed.

use risprop::experiments::{
    analytic_point, outage_sweep, sample_trials, sis_panels, validate_power, AnalyticPoint, OutageRow, Scenario, SisExperiment,
};
use risprop::mobility::AbmSeries;
use risprop::outage::{sis_ode_solve, SisParams};
use serde::Serialize;
use wasm_bindgen::prelude::*;

pub fn parse_scenario(json: &str) -> Result<Scenario, String> {
    let scenario: Scenario = if json.trim().is_empty() {
        Scenario::default()
    } else {
        serde_json::from_str(json).map_err(|e| format!("scenario: {e}"))?
    };
    scenario.validate().map_err(|e| e.to_string())?;
    Ok(scenario)
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("results serialize")
}

#[derive(Debug, Serialize)]
pub struct PowerCurve {
    pub x: Vec<f64>,
    pub empirical: Vec<f64>,
    pub analytic: Vec<f64>,
    pub ks: f64,
    pub shape: f64,
    pub scale: f64,
}

pub fn power_curve(scenario: &Scenario, trials: usize, seed: u64, points: usize) -> Result<PowerCurve, String> {
    let v = validate_power(scenario, trials, seed, points).map_err(|e| e.to_string())?;
    Ok(PowerCurve {
        x: v.x,
        empirical: v.empirical,
        analytic: v.analytic,
        ks: v.ks,
        shape: v.fit.shape,
        scale: v.fit.scale,
    })
}

pub fn outage_curve(scenario: &Scenario, powers_dbm: &[f64], trials: usize, seed: u64) -> Result<Vec<OutageRow>, String> {
    let samples = sample_trials(scenario, trials, seed).map_err(|e| e.to_string())?;
    outage_sweep(scenario, powers_dbm, &samples).map_err(|e| e.to_string())
}

#[derive(Debug, Serialize)]
pub struct SisTrajectory {
    pub rates: AnalyticPoint,
    pub series: AbmSeries,
    /// Mean-field infected count at each whole step.
    pub ode_x: Vec<f64>,
}

pub fn sis_trajectory(
    scenario: &Scenario,
    lambda_u: f64,
    x0: usize,
    n_agents: usize,
    steps: usize,
    runs: usize,
    seed: u64,
) -> Result<SisTrajectory, String> {
    let experiment = SisExperiment {
        densities: vec![lambda_u],
        initial_infected: vec![x0],
        n_agents,
        steps,
        runs,
        seed,
        ..SisExperiment::default()
    };
    let panel = sis_panels(scenario, &experiment).map_err(|e| e.to_string())?.remove(0);
    let ode = SisParams {
        beta: panel.rates.beta,
        mu: panel.rates.mu,
        n_total: n_agents as f64,
        x0: x0 as f64,
    };
    let dt = 1e-2;
    let ode_x = sis_ode_solve(&ode, steps as f64, dt)
        .map_err(|e| e.to_string())?
        .iter()
        .step_by(100)
        .map(|p| p.x)
        .collect();
    Ok(SisTrajectory { rates: panel.rates, series: panel.series, ode_x })
}

#[wasm_bindgen(js_name = defaultScenario)]
pub fn default_scenario() -> String {
    to_json(&Scenario::default())
}

/// Analytic operating point (fit, outage, rates) at `p_dbm`.
#[wasm_bindgen(js_name = operatingPoint)]
pub fn operating_point(scenario: &str, p_dbm: f64) -> Result<String, JsError> {
    let scenario = parse_scenario(scenario).map_err(|e| JsError::new(&e))?;
    analytic_point(&scenario, p_dbm).map(|p| to_json(&p)).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = powerCdf)]
pub fn power_cdf(scenario: &str, trials: usize, seed: u64) -> Result<String, JsError> {
    let scenario = parse_scenario(scenario).map_err(|e| JsError::new(&e))?;
    power_curve(&scenario, trials, seed, 120).map(|c| to_json(&c)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = outageVsPower)]
pub fn outage_vs_power(scenario: &str, powers_dbm: Vec<f64>, trials: usize, seed: u64) -> Result<String, JsError> {
    let scenario = parse_scenario(scenario).map_err(|e| JsError::new(&e))?;
    outage_curve(&scenario, &powers_dbm, trials, seed).map(|r| to_json(&r)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = sisRun)]
pub fn sis_run(scenario: &str, lambda_u: f64, x0: usize, steps: usize, runs: usize, seed: u64) -> Result<String, JsError> {
    let scenario = parse_scenario(scenario).map_err(|e| JsError::new(&e))?;
    sis_trajectory(&scenario, lambda_u, x0, 100, steps, runs, seed)
        .map(|t| to_json(&t))
        .map_err(|e| JsError::new(&e))
}
