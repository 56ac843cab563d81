//! Path loss, small-scale fading and RIS phase configuration.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{NetworkTopology, Point};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1e3).log10()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelParams {
    /// Path-loss constant at 1 m.
    pub c: f64,
    pub alpha: f64,
    /// Nakagami shape of the BS–RIS hop.
    pub m1: f64,
    /// Nakagami shape of the RIS–UE hop.
    pub m2: f64,
    pub n_elements: u32,
    pub frequency: f64,
    pub gt: f64,
    pub gr: f64,
    /// Transmit power, W.
    pub p_tx: f64,
    /// Noise power, W.
    pub sigma2: f64,
    /// Power allocation coefficients; carried as metadata, no formula reads them.
    pub allocation: [f64; 2],
}

fn default_allocation() -> [f64; 2] {
    [0.6, 0.4]
}

impl Default for ChannelParams {
    fn default() -> Self {
        ChannelParams {
            c: 6.3326e-5,
            alpha: 3.0,
            m1: 2.0,
            m2: 2.0,
            n_elements: 200,
            frequency: 3e9,
            gt: 1.0,
            gr: 1.0,
            p_tx: dbm_to_watts(-5.0),
            sigma2: 1e-12,
            allocation: default_allocation(),
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(Error::parameter("c", format!("{} must be positive", self.c)));
        }
        if !(self.alpha > 2.0) {
            return Err(Error::parameter("alpha", format!("{} must exceed 2", self.alpha)));
        }
        for (name, m) in [("m1", self.m1), ("m2", self.m2)] {
            if !(m >= 0.5) || !m.is_finite() {
                return Err(Error::parameter(name, format!("Nakagami shape {m} must be at least 0.5")));
            }
        }
        if self.n_elements == 0 {
            return Err(Error::parameter("n_elements", "an RIS needs at least one element"));
        }
        if !(self.p_tx > 0.0) {
            return Err(Error::parameter("p_tx", format!("{} must be positive", self.p_tx)));
        }
        if !(self.sigma2 >= 0.0) {
            return Err(Error::parameter("sigma2", format!("{} must be nonnegative", self.sigma2)));
        }
        Ok(())
    }

    /// The same parameters at another carrier, with `c` recomputed from it.
    pub fn at_frequency(&self, frequency: f64) -> Result<Self> {
        Ok(ChannelParams {
            c: pathloss_constant(frequency, self.gt, self.gr)?,
            frequency,
            ..self.clone()
        })
    }
}

/// (λ √(Gt Gr) / 4π)² with λ the carrier wavelength.
pub fn pathloss_constant(frequency: f64, gt: f64, gr: f64) -> Result<f64> {
    if !(frequency > 0.0) || !frequency.is_finite() {
        return Err(Error::parameter("frequency", format!("{frequency} must be positive")));
    }
    if !(gt > 0.0 && gr > 0.0) {
        return Err(Error::parameter("gain", format!("gains ({gt}, {gr}) must be positive")));
    }
    let wavelength = SPEED_OF_LIGHT / frequency;
    Ok((wavelength * (gt * gr).sqrt() / (4.0 * PI)).powi(2))
}

pub fn pathloss_direct(c: f64, d: f64, alpha: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::domain("pathloss_direct", format!("distance {d} must be positive")));
    }
    Ok(c * d.powf(-alpha))
}

/// Product-distance model for the BS–RIS–UE link.
pub fn pathloss_reflected(c: f64, d_ij: f64, d_jk: f64, alpha: f64) -> Result<f64> {
    if !(d_ij > 0.0 && d_jk > 0.0) {
        return Err(Error::domain("pathloss_reflected", format!("distances ({d_ij}, {d_jk}) must be positive")));
    }
    Ok(c * (d_ij * d_jk).powf(-alpha))
}

/// Rayleigh amplitude with unit second moment.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayleigh;

impl Distribution<f64> for Rayleigh {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let e: f64 = Exp1.sample(rng);
        e.sqrt()
    }
}

/// Nakagami-m amplitude with unit second moment.
#[derive(Debug, Clone, Copy)]
pub struct Nakagami {
    power: Gamma<f64>,
}

impl Nakagami {
    pub fn new(m: f64) -> Result<Self> {
        if !(m >= 0.5) || !m.is_finite() {
            return Err(Error::parameter("m", format!("Nakagami shape {m} must be at least 0.5")));
        }
        let power = Gamma::new(m, 1.0 / m).map_err(|e| Error::parameter("m", e.to_string()))?;
        Ok(Nakagami { power })
    }
}

impl Distribution<f64> for Nakagami {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.power.sample(rng).sqrt()
    }
}

pub fn sample_rayleigh<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Rayleigh.sample(rng)
}

pub fn sample_nakagami<R: Rng + ?Sized>(m: f64, rng: &mut R) -> Result<f64> {
    Ok(Nakagami::new(m)?.sample(rng))
}

fn random_phase<R: Rng + ?Sized>(amplitude: f64, rng: &mut R) -> Complex64 {
    Complex64::from_polar(amplitude, TAU * rng.random::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    #[default]
    Ideal,
    Quantized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub mode: PhaseMode,
    pub bits: u8,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig {
            mode: PhaseMode::Ideal,
            bits: 2,
        }
    }
}

impl PhaseConfig {
    pub fn quantized(bits: u8) -> Result<Self> {
        let config = PhaseConfig {
            mode: PhaseMode::Quantized,
            bits,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.bits) {
            return Err(Error::parameter("bits", format!("{} is outside [1, 8]", self.bits)));
        }
        Ok(())
    }
}

/// Complex channel coefficients of one serving link.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingRealization {
    pub g_direct: Complex64,
    pub h_bs_ris: Vec<Complex64>,
    pub h_ris_ue: Vec<Complex64>,
}

impl FadingRealization {
    /// Rayleigh direct link and Nakagami hops with uniform phases.
    pub fn sample<R: Rng + ?Sized>(params: &ChannelParams, n: usize, rng: &mut R) -> Result<Self> {
        let hop1 = Nakagami::new(params.m1)?;
        let hop2 = Nakagami::new(params.m2)?;
        let g_direct = random_phase(Rayleigh.sample(rng), rng);
        let mut h_bs_ris = Vec::with_capacity(n);
        let mut h_ris_ue = Vec::with_capacity(n);
        for _ in 0..n {
            let a = hop1.sample(rng);
            h_bs_ris.push(random_phase(a, rng));
            let b = hop2.sample(rng);
            h_ris_ue.push(random_phase(b, rng));
        }
        Ok(FadingRealization { g_direct, h_bs_ris, h_ris_ue })
    }

    pub fn elements(&self) -> usize {
        self.h_bs_ris.len()
    }

    /// Σ |h_ij,n| |h_jk,n|, the reflected gain under ideal alignment.
    pub fn coherent_gain(&self) -> f64 {
        self.h_bs_ris.iter().zip(&self.h_ris_ue).map(|(a, b)| a.norm() * b.norm()).sum()
    }
}

fn wrap_phase(theta: f64) -> f64 {
    theta.rem_euclid(TAU)
}

/// Phase shifts in [0, 2π) that align every reflected path with the direct one.
pub fn ris_phase_alignment(fading: &FadingRealization, config: &PhaseConfig) -> Vec<f64> {
    let reference = fading.g_direct.arg();
    let levels = 1u32 << config.bits.clamp(1, 8);
    let step = TAU / f64::from(levels);
    fading
        .h_bs_ris
        .iter()
        .zip(&fading.h_ris_ue)
        .map(|(a, b)| {
            let ideal = wrap_phase(reference - a.arg() - b.arg());
            match config.mode {
                PhaseMode::Ideal => ideal,
                PhaseMode::Quantized => {
                    let level = (ideal / step).round() as u32 % levels;
                    f64::from(level) * step
                }
            }
        })
        .collect()
}

/// Received serving power |√PL_d g + √PL_r Σ h_ij e^{iθ} h_jk|².
pub fn serving_power_realization(
    pl_direct: f64,
    pl_reflected: f64,
    fading: &FadingRealization,
    phases: &PhaseConfig,
) -> f64 {
    let theta = ris_phase_alignment(fading, phases);
    let reflected: Complex64 = fading
        .h_bs_ris
        .iter()
        .zip(&fading.h_ris_ue)
        .zip(&theta)
        .map(|((a, b), &t)| a * Complex64::from_polar(1.0, t) * b)
        .sum();
    (pl_direct.sqrt() * fading.g_direct + pl_reflected.sqrt() * reflected).norm_sqr()
}

/// |Σ h_ij,n e^{iφ_n} h_jk,n|² with uniform, unaligned phases.
pub fn misaligned_reflection_gain<R: Rng + ?Sized>(hop1: &Nakagami, hop2: &Nakagami, n: u32, rng: &mut R) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for _ in 0..n {
        let a = hop1.sample(rng);
        let b = hop2.sample(rng);
        acc += Complex64::from_polar(a * b, TAU * rng.random::<f64>());
    }
    acc.norm_sqr()
}

/// Element-wise interference at UE `target`.
///
/// Every non-serving base station contributes a Rayleigh direct term and,
/// through every RIS, a reflected term of `n_elements` unaligned paths whose
/// mean power is N·C²·(d_ij d_jk)^(−α). `moved_interferers` nearby UEs,
/// placed uniformly within `r_i` of the target, each add the reflected path
/// of their own serving base station and RIS.
pub fn interference_power_realization<R: Rng + ?Sized>(
    topology: &NetworkTopology,
    params: &ChannelParams,
    target: usize,
    moved_interferers: usize,
    r_i: f64,
    rng: &mut R,
) -> Result<f64> {
    let ue = *topology
        .ue
        .get(target)
        .ok_or_else(|| Error::Topology(format!("UE {target} does not exist")))?;
    let serving = topology.serving_bs[target];
    let hop1 = Nakagami::new(params.m1)?;
    let hop2 = Nakagami::new(params.m2)?;
    let reflected_constant = params.c * params.c;
    let mut total = 0.0;

    for (i, bs) in topology.bs.iter().enumerate() {
        if i == serving {
            continue;
        }
        let g = Rayleigh.sample(rng);
        total += pathloss_direct(params.c, ue.distance(bs), params.alpha)? * g * g;
        for ris in &topology.ris {
            let pl = pathloss_reflected(reflected_constant, bs.distance(&ris.position), ris.position.distance(&ue), params.alpha)?;
            total += pl * misaligned_reflection_gain(&hop1, &hop2, params.n_elements, rng);
        }
    }

    for _ in 0..moved_interferers {
        let near = crate::geometry::uniform_in_disk(ue, r_i, rng);
        let bs_index = crate::geometry::associate_nearest(&near, &topology.bs)?;
        if let Some(j) = topology.serving_ris[bs_index] {
            let ris: Point = topology.ris[j].position;
            let pl = pathloss_reflected(params.c, topology.bs[bs_index].distance(&ris), ris.distance(&ue), params.alpha)?;
            total += pl * misaligned_reflection_gain(&hop1, &hop2, params.n_elements, rng);
        }
    }
    Ok(total)
}
