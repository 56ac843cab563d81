//! End-to-end empirical harness: topology, fading and SINR per trial.
//!
//! A trial produces power-independent samples, so one ensemble serves a whole
//! transmit-power sweep. Each trial draws from its own ChaCha8 streams, which
//! makes results independent of thread count and completion order.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::{
    pathloss_direct, pathloss_reflected, serving_power_realization, ChannelParams, FadingRealization, Nakagami, PhaseConfig, PhaseMode,
    Rayleigh,
};
use crate::error::{Error, Result};
use crate::geometry::{matern_parent_intensity, sample_mhcpp, sample_poisson, sample_ris_clusters, uniform_in_disk, Point, Ris, TopologyConfig};
use crate::interference::empirical_laplace;
use crate::outage::PropagationIntensity;
use crate::power::ServingGeometry;
use crate::stats::{proportion, Estimate};

pub const MIN_TRIALS: usize = 1000;

/// How the typical UE's serving link is formed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServingLink {
    /// A serving BS and RIS at fixed distances; every sampled BS interferes.
    Fixed(ServingGeometry),
    /// Nearest sampled BS and its nearest RIS child.
    Nearest,
}

impl Default for ServingLink {
    fn default() -> Self {
        ServingLink::Fixed(ServingGeometry::default())
    }
}

/// Extra interference that appears after UEs move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NearInterfererModel {
    /// A PPP of density λ_B·λ_U·π·r_I² over the disk of radius d_max, each
    /// point adding C·max(ν, d_min)^(−α)·Exp(1).
    #[default]
    Network,
    /// Poisson(λ_U·π·r_I²) UEs within r_I of the typical UE, each adding the
    /// reflected path of its own serving BS and RIS.
    PerCell,
    /// No movement term; "after" differs from "before" only by fading.
    Stationary,
}

/// How interfering paths combine at the receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceSum {
    /// Sum of per-path powers.
    #[default]
    PowerSum,
    /// Complex amplitudes added before squaring.
    Coherent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub topology: TopologyConfig,
    pub channel: ChannelParams,
    #[serde(default)]
    pub phases: PhaseConfig,
    #[serde(default)]
    pub serving: ServingLink,
    #[serde(default)]
    pub near: NearInterfererModel,
    #[serde(default)]
    pub sum: InterferenceSum,
    /// Near-field distance floor, m.
    pub d_min: f64,
    /// Radius of the near-interferer disk, m.
    pub d_max: f64,
    pub r_i: f64,
    pub trials: usize,
    pub seed: u64,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            topology: TopologyConfig::default(),
            channel: ChannelParams::default(),
            phases: PhaseConfig::default(),
            serving: ServingLink::default(),
            near: NearInterfererModel::default(),
            sum: InterferenceSum::default(),
            d_min: 1.0,
            d_max: 1000.0,
            r_i: 10.0,
            trials: 100_000,
            seed: 1,
        }
    }
}

impl HarnessConfig {
    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        self.channel.validate()?;
        self.phases.validate()?;
        if let ServingLink::Fixed(g) = &self.serving {
            g.validate()?;
        }
        if !(self.d_min > 0.0 && self.d_max > self.d_min) {
            return Err(Error::parameter("d_min/d_max", format!("need 0 < {} < {}", self.d_min, self.d_max)));
        }
        if !(self.r_i > 0.0) {
            return Err(Error::parameter("r_i", format!("{} must be positive", self.r_i)));
        }
        Ok(())
    }

    pub fn lambda_u_near(&self) -> f64 {
        self.topology.lambda_b * self.topology.lambda_u * PI * self.r_i * self.r_i
    }
}

/// Transmit-power-independent outcome of one trial.
///
/// `i_after` adds the movement term to the same fading as `i_before`, so
/// `i_after ≥ i_before` pathwise. The `*_redraw` pair is an independent fading
/// draw over the same geometry, used to pair before/after outcomes for rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSample {
    pub s0: f64,
    pub i_before: f64,
    pub i_after: f64,
    pub s0_redraw: f64,
    pub i_after_redraw: f64,
    /// Topologies discarded because no BS was sampled.
    pub resamples: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub s0: f64,
    pub i_before: f64,
    pub i_after: f64,
    pub sinr_before: f64,
    pub sinr_after: f64,
}

pub fn sinr(p_tx: f64, s0: f64, interference: f64, sigma2: f64) -> f64 {
    p_tx * s0 / (p_tx * interference + sigma2)
}

impl TrialSample {
    pub fn result(&self, p_tx: f64, sigma2: f64) -> TrialResult {
        TrialResult {
            s0: self.s0,
            i_before: self.i_before,
            i_after: self.i_after,
            sinr_before: sinr(p_tx, self.s0, self.i_before, sigma2),
            sinr_after: sinr(p_tx, self.s0, self.i_after, sigma2),
        }
    }
}

/// Sampled geometry of one trial, relative to the typical UE at the origin.
struct TrialGeometry {
    /// Interfering BS positions.
    interferers: Vec<Point>,
    ris: Vec<Ris>,
    /// Serving (BS, RIS) positions and resolved serving path losses.
    serving_bs: Point,
    serving_ris: Option<Point>,
    pl_direct: f64,
    pl_reflected: f64,
}

fn nearest(points: impl Iterator<Item = (usize, Point)>, to: &Point) -> Option<(usize, Point)> {
    points.min_by(|(ia, a), (ib, b)| a.distance(to).total_cmp(&b.distance(to)).then(ia.cmp(ib)))
}

fn sample_geometry<R: Rng + ?Sized>(config: &HarnessConfig, rng: &mut R) -> Result<(TrialGeometry, u32)> {
    let topo = &config.topology;
    let parent = matern_parent_intensity(topo.lambda_b, topo.r_b)?;
    let ch = &config.channel;
    let mut resamples = 0u32;
    loop {
        let bs = sample_mhcpp(parent, topo.r_b, &topo.window, rng)?;
        match config.serving {
            ServingLink::Fixed(g) => {
                let ris = sample_ris_clusters(&bs, topo.lambda_r, topo.lambda_b, topo.r_r, rng)?;
                // RIS above the BS–UE axis, d_ij from the BS and d_jk from the UE
                let x = (g.d_ik * g.d_ik + g.d_jk * g.d_jk - g.d_ij * g.d_ij) / (2.0 * g.d_ik);
                let y = (g.d_jk * g.d_jk - x * x).max(0.0).sqrt();
                let (pl_direct, pl_reflected) = g.pathloss(ch)?;
                return Ok((
                    TrialGeometry {
                        interferers: bs,
                        ris,
                        serving_bs: Point::new(g.d_ik, 0.0),
                        serving_ris: Some(Point::new(x, y)),
                        pl_direct,
                        pl_reflected,
                    },
                    resamples,
                ));
            }
            ServingLink::Nearest => {
                if bs.is_empty() {
                    resamples += 1;
                    if resamples > 10_000 {
                        return Err(Error::Topology("no base stations".into()));
                    }
                    continue;
                }
                let ris = sample_ris_clusters(&bs, topo.lambda_r, topo.lambda_b, topo.r_r, rng)?;
                let (serving, serving_bs) = nearest(bs.iter().copied().enumerate(), &Point::ORIGIN).expect("nonempty");
                let serving_ris = nearest(
                    ris.iter().enumerate().filter(|(_, r)| r.parent == serving).map(|(i, r)| (i, r.position)),
                    &serving_bs,
                )
                .map(|(_, p)| p);
                let d_ik = serving_bs.norm().max(config.d_min);
                let pl_direct = pathloss_direct(ch.c, d_ik, ch.alpha)?;
                let pl_reflected = match serving_ris {
                    Some(r) => pathloss_reflected(
                        ch.c,
                        serving_bs.distance(&r).max(config.d_min),
                        r.norm().max(config.d_min),
                        ch.alpha,
                    )?,
                    None => 0.0,
                };
                let interferers = bs.into_iter().enumerate().filter(|(i, _)| *i != serving).map(|(_, p)| p).collect();
                return Ok((
                    TrialGeometry { interferers, ris, serving_bs, serving_ris, pl_direct, pl_reflected },
                    resamples,
                ));
            }
        }
    }
}

/// Mean powers of every interfering path at the origin: one direct path per
/// interferer and one reflected path per (interferer, RIS) pair. A reflected
/// path sums N unaligned element products, so its mean is N·C²·(d_ij·d_jk)^(−α)
/// and its power is modelled as that mean times Exp(1).
fn interference_path_means(config: &HarnessConfig, geo: &TrialGeometry) -> Result<Vec<f64>> {
    let ch = &config.channel;
    let n = f64::from(ch.n_elements);
    let mut means = Vec::with_capacity(geo.interferers.len() * (1 + geo.ris.len()));
    for bs in &geo.interferers {
        means.push(pathloss_direct(ch.c, bs.norm().max(config.d_min), ch.alpha)?);
        for r in &geo.ris {
            let d_ij = bs.distance(&r.position).max(config.d_min);
            let d_jk = r.position.norm().max(config.d_min);
            means.push(n * pathloss_reflected(ch.c * ch.c, d_ij, d_jk, ch.alpha)?);
        }
    }
    Ok(means)
}

fn faded_sum<R: Rng + ?Sized>(means: &[f64], sum: InterferenceSum, rng: &mut R) -> f64 {
    match sum {
        InterferenceSum::PowerSum => means
            .iter()
            .map(|m| {
                let e: f64 = Exp1.sample(rng);
                m * e
            })
            .sum(),
        InterferenceSum::Coherent => {
            let acc: Complex64 = means
                .iter()
                .map(|m| {
                    let re: f64 = StandardNormal.sample(rng);
                    let im: f64 = StandardNormal.sample(rng);
                    (m / 2.0).sqrt() * Complex64::new(re, im)
                })
                .sum();
            acc.norm_sqr()
        }
    }
}

/// Movement term at the origin.
///
/// The network model walks a unit-rate arrival stream in area units, so the
/// points for a smaller λ_U are a prefix of those for a larger one and sweeps
/// over density share random numbers.
fn near_interference<R: Rng + ?Sized>(config: &HarnessConfig, geo: &TrialGeometry, rng: &mut R) -> Result<f64> {
    let ch = &config.channel;
    match config.near {
        NearInterfererModel::Stationary => Ok(0.0),
        NearInterfererModel::Network => {
            let lambda = config.lambda_u_near();
            if lambda == 0.0 {
                return Ok(0.0);
            }
            let budget = lambda * PI * config.d_max * config.d_max;
            let mut area = 0.0;
            let mut total = 0.0;
            loop {
                let gap: f64 = Exp1.sample(rng);
                area += gap;
                if area > budget {
                    return Ok(total);
                }
                let fade: f64 = Exp1.sample(rng);
                let r = (area / (lambda * PI)).sqrt().max(config.d_min);
                total += pathloss_direct(ch.c, r, ch.alpha)? * fade;
            }
        }
        NearInterfererModel::PerCell => {
            let mean = config.topology.lambda_u * PI * config.r_i * config.r_i;
            let count = sample_poisson(mean, rng)?;
            let n = f64::from(ch.n_elements);
            let mut total = 0.0;
            for _ in 0..count {
                let ue = uniform_in_disk(Point::ORIGIN, config.r_i, rng);
                let serving = std::iter::once(geo.serving_bs).chain(geo.interferers.iter().copied());
                let (index, bs) = nearest(serving.enumerate(), &ue).expect("serving BS present");
                let ris = if index == 0 {
                    geo.serving_ris
                } else {
                    let parent = index - 1;
                    nearest(
                        geo.ris.iter().enumerate().filter(|(_, r)| r.parent == parent).map(|(i, r)| (i, r.position)),
                        &bs,
                    )
                    .map(|(_, p)| p)
                };
                if let Some(r) = ris {
                    let fade: f64 = Exp1.sample(rng);
                    let d_ij = bs.distance(&r).max(config.d_min);
                    let d_jk = r.norm().max(config.d_min);
                    total += n * pathloss_reflected(ch.c, d_ij, d_jk, ch.alpha)? * fade;
                }
            }
            Ok(total)
        }
    }
}

fn trial_rng(seed: u64, trial: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(4 * trial + purpose);
    rng
}

fn serving_power<R: Rng + ?Sized>(config: &HarnessConfig, geo: &TrialGeometry, rng: &mut R) -> Result<f64> {
    let n = if geo.serving_ris.is_some() { config.channel.n_elements as usize } else { 0 };
    if config.phases.mode == PhaseMode::Ideal {
        // ideal alignment adds every path in magnitude, so phases need not be drawn
        let hop1 = Nakagami::new(config.channel.m1)?;
        let hop2 = Nakagami::new(config.channel.m2)?;
        let g = Rayleigh.sample(rng);
        let reflected: f64 = (0..n).map(|_| hop1.sample(rng) * hop2.sample(rng)).sum();
        return Ok((geo.pl_direct.sqrt() * g + geo.pl_reflected.sqrt() * reflected).powi(2));
    }
    let fading = FadingRealization::sample(&config.channel, n, rng)?;
    Ok(serving_power_realization(geo.pl_direct, geo.pl_reflected, &fading, &config.phases))
}

/// Runs one trial; trial `t` always yields the same sample for a given seed.
pub fn simulate_trial(config: &HarnessConfig, trial: u64) -> Result<TrialSample> {
    let mut rng = trial_rng(config.seed, trial, 0);
    let (geo, resamples) = sample_geometry(config, &mut rng)?;
    let means = interference_path_means(config, &geo)?;

    let s0 = serving_power(config, &geo, &mut rng)?;
    let i_before = faded_sum(&means, config.sum, &mut rng);
    let i_after = i_before + near_interference(config, &geo, &mut trial_rng(config.seed, trial, 1))?;

    let mut redraw = trial_rng(config.seed, trial, 2);
    let s0_redraw = serving_power(config, &geo, &mut redraw)?;
    let i_redraw = faded_sum(&means, config.sum, &mut redraw);
    let i_after_redraw = i_redraw + near_interference(config, &geo, &mut trial_rng(config.seed, trial, 3))?;

    Ok(TrialSample { s0, i_before, i_after, s0_redraw, i_after_redraw, resamples })
}

/// All trials in trial order.
pub fn run_trials(config: &HarnessConfig) -> Result<Vec<TrialSample>> {
    config.validate()?;
    crate::par_map(config.trials, |t| simulate_trial(config, t as u64))
        .into_iter()
        .collect()
}

/// S₀ of every trial without the interference work; equal to the `s0` field
/// of [`run_trials`] for the same seed.
pub fn serving_power_samples(config: &HarnessConfig) -> Result<Vec<f64>> {
    config.validate()?;
    crate::par_map(config.trials, |t| {
        let mut rng = trial_rng(config.seed, t as u64, 0);
        let (geo, _) = sample_geometry(config, &mut rng)?;
        serving_power(config, &geo, &mut rng)
    })
    .into_iter()
    .collect()
}

fn check_trials(n: usize) -> Result<()> {
    if n < MIN_TRIALS {
        return Err(Error::parameter("trials", format!("{n} is below the minimum {MIN_TRIALS}")));
    }
    Ok(())
}

/// Fractions of trials whose SINR is below `threshold`, before and after movement.
pub fn empirical_outage(samples: &[TrialSample], p_tx: f64, sigma2: f64, threshold: f64) -> Result<(Estimate, Estimate)> {
    check_trials(samples.len())?;
    let mut before = 0;
    let mut after = 0;
    for s in samples {
        let r = s.result(p_tx, sigma2);
        before += usize::from(r.sinr_before < threshold);
        after += usize::from(r.sinr_after < threshold);
    }
    Ok((proportion(before, samples.len()), proportion(after, samples.len())))
}

/// Transition frequencies between an independent before/after pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalRates {
    /// Non-outage before, outage after.
    pub beta: Estimate,
    /// Outage before, non-outage after.
    pub mu: Estimate,
    pub r0: PropagationIntensity,
    pub infections: usize,
    pub recoveries: usize,
    pub unchanged: usize,
}

pub fn empirical_rates(samples: &[TrialSample], p_tx: f64, sigma2: f64, threshold: f64) -> Result<EmpiricalRates> {
    check_trials(samples.len())?;
    let (mut infections, mut recoveries, mut unchanged) = (0, 0, 0);
    for s in samples {
        let before = sinr(p_tx, s.s0, s.i_before, sigma2) < threshold;
        let after = sinr(p_tx, s.s0_redraw, s.i_after_redraw, sigma2) < threshold;
        match (before, after) {
            (false, true) => infections += 1,
            (true, false) => recoveries += 1,
            _ => unchanged += 1,
        }
    }
    let beta = proportion(infections, samples.len());
    let mu = proportion(recoveries, samples.len());
    Ok(EmpiricalRates {
        beta,
        mu,
        r0: PropagationIntensity::from_rates(beta.value, mu.value),
        infections,
        recoveries,
        unchanged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub outage_before: Estimate,
    pub outage_after: Estimate,
    pub s0_samples: Vec<f64>,
    /// E[e^(−sI)] before movement at each requested s.
    pub laplace_estimates: Vec<(f64, Estimate)>,
    pub resamples: u64,
}

pub fn ensemble_stats(
    samples: &[TrialSample],
    p_tx: f64,
    sigma2: f64,
    threshold: f64,
    s_grid: &[f64],
) -> Result<EnsembleStats> {
    let (outage_before, outage_after) = empirical_outage(samples, p_tx, sigma2, threshold)?;
    let interference: Vec<f64> = samples.iter().map(|s| s.i_before).collect();
    let laplace_estimates = s_grid
        .iter()
        .map(|&s| Ok((s, empirical_laplace(s, &interference)?)))
        .collect::<Result<_>>()?;
    Ok(EnsembleStats {
        outage_before,
        outage_after,
        s0_samples: samples.iter().map(|s| s.s0).collect(),
        laplace_estimates,
        resamples: samples.iter().map(|s| u64::from(s.resamples)).sum(),
    })
}
