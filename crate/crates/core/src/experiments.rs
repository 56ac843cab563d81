//! Figure-level pipelines shared by the command-line runner and the browser demo.

use serde::{Deserialize, Serialize};

use crate::channel::{dbm_to_watts, ChannelParams};
use crate::error::{Error, Result};
use crate::geometry::TopologyConfig;
use crate::interference::{empirical_laplace, laplace, laplace_quadrature_oracle, LaplaceParams, Stage};
use crate::mobility::{run_abm, AbmConfig, AbmSeries};
use crate::montecarlo::{
    empirical_outage, empirical_rates, run_trials, serving_power_samples, EmpiricalRates, HarnessConfig, NearInterfererModel, ServingLink,
    TrialSample,
};
use crate::outage::{infection_rate, propagation_intensity, recovery_rate, LaplaceMode, OutageCurve, OutageParams, PropagationIntensity};
use crate::power::{s0_fit, GammaFit, ServingGeometry};
use crate::stats::{ecdf, ks_distance, Estimate};

/// Everything the analytic and empirical pipelines share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub topology: TopologyConfig,
    pub channel: ChannelParams,
    pub geometry: ServingGeometry,
    /// SINR threshold T, linear.
    pub threshold: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub r_i: f64,
    pub laplace_mode: LaplaceMode,
    pub near: NearInterfererModel,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            topology: TopologyConfig::default(),
            channel: ChannelParams::default(),
            geometry: ServingGeometry::default(),
            threshold: 1e-2,
            d_min: 1.0,
            d_max: 1000.0,
            r_i: 10.0,
            laplace_mode: LaplaceMode::Verbatim,
            near: NearInterfererModel::Network,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        self.channel.validate()?;
        self.geometry.validate()?;
        self.laplace_params().validate()?;
        if !(self.threshold >= 0.0) {
            return Err(Error::parameter("threshold", format!("{} must be nonnegative", self.threshold)));
        }
        Ok(())
    }

    pub fn laplace_params(&self) -> LaplaceParams {
        LaplaceParams::from_parts(&self.topology, &self.channel, self.d_min, self.d_max, self.r_i)
    }

    pub fn fit(&self) -> Result<GammaFit> {
        s0_fit(&self.channel, &self.geometry)
    }

    pub fn outage_params(&self, p_tx: f64) -> Result<OutageParams> {
        Ok(OutageParams::new(self.fit()?, self.threshold, p_tx, self.channel.sigma2, self.laplace_params()))
    }

    pub fn harness(&self, trials: usize, seed: u64) -> HarnessConfig {
        HarnessConfig {
            topology: self.topology.clone(),
            channel: self.channel.clone(),
            serving: ServingLink::Fixed(self.geometry),
            near: self.near,
            d_min: self.d_min,
            d_max: self.d_max,
            r_i: self.r_i,
            trials,
            seed,
            ..HarnessConfig::default()
        }
    }
}

/// Analytic outage and epidemic rates at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticPoint {
    pub fit: GammaFit,
    pub p_o: f64,
    pub p_o_prime: f64,
    pub beta: f64,
    pub mu: f64,
    pub r0: PropagationIntensity,
}

pub fn analytic_point(scenario: &Scenario, p_dbm: f64) -> Result<AnalyticPoint> {
    let params = scenario.outage_params(dbm_to_watts(p_dbm))?;
    let (p_o, p_o_prime) = OutageCurve::new(&params, scenario.laplace_mode)?.at_power(params.p_tx)?;
    Ok(AnalyticPoint {
        fit: params.fit,
        p_o,
        p_o_prime,
        beta: infection_rate(p_o, p_o_prime)?,
        mu: recovery_rate(p_o, p_o_prime)?,
        r0: propagation_intensity(p_o, p_o_prime)?,
    })
}

/// Empirical against fitted CDF of the serving power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerValidation {
    pub fit: GammaFit,
    pub x: Vec<f64>,
    pub empirical: Vec<f64>,
    pub analytic: Vec<f64>,
    pub ks: f64,
    pub mean: Estimate,
}

pub fn validate_power(scenario: &Scenario, trials: usize, seed: u64, grid_points: usize) -> Result<PowerValidation> {
    scenario.validate()?;
    let fit = scenario.fit()?;
    let samples = serving_power_samples(&scenario.harness(trials, seed))?;
    let ks = ks_distance(&samples, |x| fit.cdf(x))?;
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let n = grid_points.max(2);
    let x: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    Ok(PowerValidation {
        fit,
        empirical: ecdf(&samples, &x),
        analytic: x.iter().map(|&v| fit.cdf(v)).collect::<Result<_>>()?,
        x,
        ks,
        mean: crate::stats::mean_and_stderr(&samples)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageRow {
    pub p_dbm: f64,
    pub p_o: f64,
    pub p_o_prime: f64,
    pub empirical: Estimate,
    pub empirical_prime: Estimate,
}

/// Analytic outage (in `scenario.laplace_mode`) beside the Monte Carlo estimate.
pub fn outage_sweep(scenario: &Scenario, powers_dbm: &[f64], samples: &[TrialSample]) -> Result<Vec<OutageRow>> {
    scenario.validate()?;
    let params = scenario.outage_params(dbm_to_watts(powers_dbm.first().copied().unwrap_or(0.0)))?;
    let curve = OutageCurve::new(&params, scenario.laplace_mode)?;
    powers_dbm
        .iter()
        .map(|&p_dbm| {
            let p = dbm_to_watts(p_dbm);
            let (p_o, p_o_prime) = curve.at_power(p)?;
            let (empirical, empirical_prime) = empirical_outage(samples, p, scenario.channel.sigma2, scenario.threshold)?;
            Ok(OutageRow { p_dbm, p_o, p_o_prime, empirical, empirical_prime })
        })
        .collect()
}

pub fn sample_trials(scenario: &Scenario, trials: usize, seed: u64) -> Result<Vec<TrialSample>> {
    run_trials(&scenario.harness(trials, seed))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceRow {
    pub s: f64,
    pub closed_form: f64,
    pub quadrature: f64,
    pub monte_carlo: Estimate,
}

impl LaplaceRow {
    pub fn relative_gap(&self) -> f64 {
        ((self.closed_form - self.quadrature) / self.quadrature).abs()
    }
}

/// n points spaced evenly in log between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Closed-form transform, its quadrature oracle and the empirical E[e^(−sI)].
pub fn laplace_validation(scenario: &Scenario, stage: Stage, s_grid: &[f64], samples: &[TrialSample]) -> Result<Vec<LaplaceRow>> {
    let params = scenario.laplace_params();
    params.validate()?;
    let interference: Vec<f64> = samples
        .iter()
        .map(|t| match stage {
            Stage::Before => t.i_before,
            Stage::After => t.i_after,
        })
        .collect();
    s_grid
        .iter()
        .map(|&s| {
            Ok(LaplaceRow {
                s,
                closed_form: laplace(s, &params, stage)?,
                quadrature: laplace_quadrature_oracle(s, &params, stage)?,
                monte_carlo: empirical_laplace(s, &interference)?,
            })
        })
        .collect()
}

/// One epidemic panel: a UE density and an initial infected count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SisPanel {
    pub label: String,
    pub lambda_u: f64,
    pub x0: usize,
    pub rates: AnalyticPoint,
    pub series: AbmSeries,
}

impl SisPanel {
    /// Sign of the final minus the initial mean infected count.
    pub fn direction(&self) -> f64 {
        let d = self.series.final_x() - self.series.initial_x();
        if d == 0.0 {
            0.0
        } else {
            d.signum()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SisExperiment {
    pub densities: Vec<f64>,
    pub initial_infected: Vec<usize>,
    pub n_agents: usize,
    pub steps: usize,
    pub runs: usize,
    pub p_dbm: f64,
    pub seed: u64,
}

impl Default for SisExperiment {
    fn default() -> Self {
        SisExperiment {
            densities: vec![1e-3, 5e-3, 1e-2],
            initial_infected: vec![5, 50],
            n_agents: 100,
            steps: 300,
            runs: 100,
            p_dbm: -5.0,
            seed: 1,
        }
    }
}

/// Agent-based ensembles driven by the analytic rates at each density.
///
/// Panels are labelled a, b, c, … across densities, then across initial counts.
pub fn sis_panels(scenario: &Scenario, experiment: &SisExperiment) -> Result<Vec<SisPanel>> {
    let mut panels = Vec::new();
    for &x0 in &experiment.initial_infected {
        for &lambda_u in &experiment.densities {
            let mut local = scenario.clone();
            local.topology.lambda_u = lambda_u;
            let rates = analytic_point(&local, experiment.p_dbm)?;
            let config = AbmConfig {
                x0,
                steps: experiment.steps,
                runs: experiment.runs,
                seed: experiment.seed,
                ..AbmConfig::from_density(lambda_u, experiment.n_agents, scenario.r_i, rates.beta, rates.mu)?
            };
            let label = char::from(b'a' + (panels.len() % 26) as u8).to_string();
            panels.push(SisPanel { label, lambda_u, x0, rates, series: run_abm(&config)? });
        }
    }
    Ok(panels)
}

/// A parameter that an R₀ sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    UeDensity,
    BsDensity,
    Frequency,
    RisElements,
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::UeDensity => "ue_density",
            SweepAxis::BsDensity => "bs_density",
            SweepAxis::Frequency => "frequency",
            SweepAxis::RisElements => "ris_elements",
        }
    }

    pub fn apply(&self, scenario: &Scenario, value: f64) -> Result<Scenario> {
        let mut s = scenario.clone();
        match self {
            SweepAxis::UeDensity => s.topology.lambda_u = value,
            SweepAxis::BsDensity => s.topology.lambda_b = value,
            SweepAxis::Frequency => s.channel = s.channel.at_frequency(value)?,
            SweepAxis::RisElements => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= f64::from(u32::MAX)) {
                    return Err(Error::parameter("n_elements", format!("{value} is not a positive integer")));
                }
                s.channel.n_elements = value as u32;
            }
        }
        Ok(s)
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ue_density" => Ok(SweepAxis::UeDensity),
            "bs_density" => Ok(SweepAxis::BsDensity),
            "frequency" => Ok(SweepAxis::Frequency),
            "ris_elements" => Ok(SweepAxis::RisElements),
            other => Err(Error::parameter("axis", format!("unknown sweep axis {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct R0Row {
    pub value: f64,
    pub group: Option<f64>,
    pub analytic: AnalyticPoint,
    pub empirical: Option<EmpiricalRates>,
}

/// R₀ along `axis`, optionally once per value of `group`. With `trials > 0`
/// every point also gets a Monte Carlo estimate from paired trials.
pub fn r0_sweep(
    scenario: &Scenario,
    p_dbm: f64,
    axis: SweepAxis,
    values: &[f64],
    group: Option<(SweepAxis, &[f64])>,
    trials: usize,
    seed: u64,
) -> Result<Vec<R0Row>> {
    let groups: Vec<Option<f64>> = match group {
        Some((_, g)) => g.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };
    let mut rows = Vec::with_capacity(groups.len() * values.len());
    for g in groups {
        let base = match (group, g) {
            (Some((g_axis, _)), Some(v)) => g_axis.apply(scenario, v)?,
            _ => scenario.clone(),
        };
        for &value in values {
            let point = axis.apply(&base, value)?;
            point.validate()?;
            let analytic = analytic_point(&point, p_dbm)?;
            let empirical = if trials > 0 {
                let samples = sample_trials(&point, trials, seed)?;
                Some(empirical_rates(&samples, dbm_to_watts(p_dbm), point.channel.sigma2, point.threshold)?)
            } else {
                None
            };
            rows.push(R0Row { value, group: g, analytic, empirical });
        }
    }
    Ok(rows)
}
