//! Moments and gamma approximation of the serving signal power.

use serde::{Deserialize, Serialize};

use crate::channel::{pathloss_direct, pathloss_reflected, ChannelParams};
use crate::error::{Error, Result};
use crate::special::{gamma_p, gamma_ratio, ln_gamma, rising_factorial};

/// Gamma law with `shape · scale = mean` and `shape · scale² = variance`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub shape: f64,
    pub scale: f64,
}

impl GammaFit {
    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn variance(&self) -> f64 {
        self.shape * self.scale * self.scale
    }

    /// E[X^k] = scale^k Γ(shape + k)/Γ(shape).
    pub fn raw_moment(&self, k: u32) -> f64 {
        self.scale.powi(k as i32) * rising_factorial(self.shape, k)
    }

    pub fn moments(&self) -> MomentPair {
        MomentPair {
            mean: self.mean(),
            second_moment: self.raw_moment(2),
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        s0_gamma_cdf(x, self)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::domain("gamma pdf", format!("argument {x} must be nonnegative")));
        }
        if x == 0.0 {
            return Ok(match self.shape {
                k if k < 1.0 => f64::INFINITY,
                k if k == 1.0 => 1.0 / self.scale,
                _ => 0.0,
            });
        }
        let z = x / self.scale;
        let log = (self.shape - 1.0) * z.ln() - z - ln_gamma(self.shape)? - self.scale.ln();
        Ok(log.exp())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub mean: f64,
    pub second_moment: f64,
}

impl MomentPair {
    pub fn variance(&self) -> f64 {
        self.second_moment - self.mean * self.mean
    }
}

/// Link distances of one serving BS–RIS–UE triangle, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServingGeometry {
    pub d_ik: f64,
    pub d_ij: f64,
    pub d_jk: f64,
}

impl Default for ServingGeometry {
    fn default() -> Self {
        ServingGeometry {
            d_ik: 100.0,
            d_ij: 30.0,
            d_jk: 80.0,
        }
    }
}

impl ServingGeometry {
    pub fn validate(&self) -> Result<()> {
        let (a, b, c) = (self.d_ik, self.d_ij, self.d_jk);
        if !(a > 0.0 && b > 0.0 && c > 0.0) {
            return Err(Error::parameter("serving geometry", format!("distances {self:?} must be positive")));
        }
        if a > b + c || b > a + c || c > a + b {
            return Err(Error::parameter("serving geometry", format!("{self:?} violates the triangle inequality")));
        }
        Ok(())
    }

    /// (direct, reflected) path-loss gains.
    pub fn pathloss(&self, channel: &ChannelParams) -> Result<(f64, f64)> {
        Ok((
            pathloss_direct(channel.c, self.d_ik, channel.alpha)?,
            pathloss_reflected(channel.c, self.d_ij, self.d_jk, channel.alpha)?,
        ))
    }
}

/// E|h| for a unit-power Nakagami-m amplitude.
pub fn nakagami_amplitude_mean(m: f64) -> Result<f64> {
    if !(m >= 0.5) {
        return Err(Error::domain("nakagami_amplitude_mean", format!("shape {m} is below 0.5")));
    }
    Ok(gamma_ratio(m, 0.5)? / m.sqrt())
}

/// Mean and second moment of S_r = Σ |h_ij,n| |h_jk,n|.
pub fn sr_moments(n: u32, m1: f64, m2: f64) -> Result<MomentPair> {
    if n == 0 {
        return Err(Error::parameter("n_elements", "an RIS needs at least one element"));
    }
    let mu = nakagami_amplitude_mean(m1)? * nakagami_amplitude_mean(m2)?;
    let n = f64::from(n);
    Ok(MomentPair {
        mean: n * mu,
        second_moment: n + n * (n - 1.0) * mu * mu,
    })
}

pub fn gamma_fit_from_moments(mp: &MomentPair) -> Result<GammaFit> {
    let variance = mp.variance();
    if !(variance > 0.0) || !(mp.mean > 0.0) {
        return Err(Error::Degenerate { variance });
    }
    Ok(GammaFit {
        shape: mp.mean * mp.mean / variance,
        scale: variance / mp.mean,
    })
}

/// Moments of S₀ = (√PL_d |g₀| + √PL_r S_r)².
///
/// The first moment is exact. The second expands the fourth power
/// binomially, with Rayleigh moments E|g₀|^k = Γ(1 + k/2) and the moments of
/// S_r taken from its gamma fit. Each cross term carries
/// √(PL_d^(4−j) PL_r^j) for the j-th power of S_r.
pub fn s0_moments(pl_direct: f64, pl_reflected: f64, n: u32, m1: f64, m2: f64) -> Result<MomentPair> {
    if !(pl_direct >= 0.0 && pl_reflected >= 0.0) {
        return Err(Error::parameter("pathloss", format!("gains ({pl_direct}, {pl_reflected}) must be nonnegative")));
    }
    let sr = sr_moments(n, m1, m2)?;
    let a = pl_direct.sqrt();
    let b = pl_reflected.sqrt();
    let g = |k: u32| (ln_gamma(1.0 + f64::from(k) / 2.0)).map(f64::exp);

    let mean = pl_direct * g(2)? + 2.0 * a * b * g(1)? * sr.mean + pl_reflected * sr.second_moment;

    let sr_moment: Box<dyn Fn(u32) -> f64> = match gamma_fit_from_moments(&sr) {
        Ok(fit) => Box::new(move |k| fit.raw_moment(k)),
        // Hardened fading: S_r is deterministic.
        Err(Error::Degenerate { .. }) => {
            let m = sr.mean;
            Box::new(move |k| m.powi(k as i32))
        }
        Err(e) => return Err(e),
    };
    let binomial = [1.0, 4.0, 6.0, 4.0, 1.0];
    let mut second = 0.0;
    for j in 0..=4u32 {
        let direct_power = 4 - j;
        let coefficient = binomial[j as usize] * a.powi(direct_power as i32) * b.powi(j as i32);
        if coefficient == 0.0 {
            continue;
        }
        let s_r = if j == 0 { 1.0 } else { sr_moment(j) };
        second += coefficient * g(direct_power)? * s_r;
    }
    Ok(MomentPair {
        mean,
        second_moment: second,
    })
}

/// Gamma fit of S₀ for a serving triangle.
pub fn s0_fit(channel: &ChannelParams, geometry: &ServingGeometry) -> Result<GammaFit> {
    geometry.validate()?;
    let (pd, pr) = geometry.pathloss(channel)?;
    gamma_fit_from_moments(&s0_moments(pd, pr, channel.n_elements, channel.m1, channel.m2)?)
}

/// γ(k_s, x/η_s)/Γ(k_s).
pub fn s0_gamma_cdf(x: f64, fit: &GammaFit) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain("s0_gamma_cdf", format!("argument {x} must be nonnegative")));
    }
    gamma_p(fit.shape, x / fit.scale)
}
