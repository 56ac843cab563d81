//! Laplace transforms of the aggregate interference.
//!
//! Closed forms are evaluated term by term as log-factors so that the same
//! code serves scalar evaluation and jet (derivative) propagation. The
//! quadrature oracle integrates the underlying PGFL expressions directly.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::geometry::TopologyConfig;
use crate::special::{csc, integrate, integrate_to_infinity, Jet, QuadSettings};
use crate::stats::{mean_and_stderr, Estimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceParams {
    pub lambda_b: f64,
    pub lambda_r: f64,
    pub lambda_u: f64,
    pub c: f64,
    pub alpha: f64,
    pub n_elements: u32,
    /// Lower truncation of the reflected-link distance integrals, m.
    pub d_min: f64,
    /// Upper truncation of the reflected-link distance integrals, m.
    pub d_max: f64,
    /// Radius within which moved UEs interfere, m.
    pub r_i: f64,
}

impl Default for LaplaceParams {
    fn default() -> Self {
        LaplaceParams {
            lambda_b: 1e-5,
            lambda_r: 1e-5,
            lambda_u: 1e-2,
            c: 6.3326e-5,
            alpha: 3.0,
            n_elements: 200,
            d_min: 1.0,
            d_max: 1000.0,
            r_i: 10.0,
        }
    }
}

impl LaplaceParams {
    pub fn from_parts(topology: &TopologyConfig, channel: &ChannelParams, d_min: f64, d_max: f64, r_i: f64) -> Self {
        LaplaceParams {
            lambda_b: topology.lambda_b,
            lambda_r: topology.lambda_r,
            lambda_u: topology.lambda_u,
            c: channel.c,
            alpha: channel.alpha,
            n_elements: channel.n_elements,
            d_min,
            d_max,
            r_i,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda_b", self.lambda_b), ("lambda_r", self.lambda_r), ("lambda_u", self.lambda_u)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::parameter(name, format!("density {v} must be finite and nonnegative")));
            }
        }
        if !(self.alpha > 2.0) {
            return Err(Error::domain("laplace", format!("path-loss exponent {} must exceed 2 for convergence", self.alpha)));
        }
        if !(self.c > 0.0) {
            return Err(Error::parameter("c", format!("{} must be positive", self.c)));
        }
        if !(self.d_min > 0.0 && self.d_max > self.d_min) || !self.d_max.is_finite() {
            return Err(Error::parameter("d_min/d_max", format!("need 0 < {} < {}", self.d_min, self.d_max)));
        }
        if !(self.r_i > 0.0) {
            return Err(Error::parameter("r_i", format!("{} must be positive", self.r_i)));
        }
        csc(2.0 * PI / self.alpha).map(|_| ())
    }

    /// Density of moved interferers, λ_B λ_U π r_I².
    pub fn lambda_u_near(&self) -> f64 {
        self.lambda_b * self.lambda_u * PI * self.r_i * self.r_i
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Before,
    After,
}

/// Logarithms of the three multiplicative factors of the transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogFactors {
    pub direct: f64,
    pub reflected: f64,
    pub near: f64,
}

impl LogFactors {
    pub fn total(&self, stage: Stage) -> f64 {
        match stage {
            Stage::Before => self.direct + self.reflected,
            Stage::After => self.direct + self.reflected + self.near,
        }
    }
}

fn check_s(s: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::domain("laplace", format!("transform variable {s} must be finite and nonnegative")));
    }
    Ok(())
}

/// −2π² λ csc(2π/α) (sC)^{2/α} / α, the PPP interference exponent.
fn ppp_exponent(s: &Jet, lambda: f64, p: &LaplaceParams) -> Result<Jet> {
    let order = s.order();
    if lambda == 0.0 || s.coeffs().iter().all(|&c| c == 0.0) {
        return Ok(Jet::constant(0.0, order));
    }
    if !(s.value() > 0.0) {
        return Err(Error::domain("laplace", "the transform is not analytic at s = 0"));
    }
    let k = 2.0 * PI * PI * lambda * csc(2.0 * PI / p.alpha)? / p.alpha;
    Ok(s.scale(p.c).powf(2.0 / p.alpha)?.scale(-k))
}

/// Verbatim reflected exponent, affine in s including its s-free offset.
fn reflected_exponent(s: &Jet, p: &LaplaceParams) -> Result<Jet> {
    let a = p.alpha;
    let n = f64::from(p.n_elements);
    let slope = 2.0 * PI * PI * p.lambda_r * csc(2.0 * PI / a)? * n * n * p.c * p.c / (a * a) * (p.d_max.ln() - p.d_min.ln());
    let offset = a / (a - 1.0) * (p.d_max.powf(1.0 - 1.0 / a) - p.d_min.powf(1.0 - 1.0 / a));
    Ok(s.scale(slope).add_scalar(offset).scale(-2.0 * PI * p.lambda_b))
}

/// Closed-form log-transform as a jet in the transform variable.
pub fn log_laplace_jet(s: &Jet, p: &LaplaceParams, stage: Stage) -> Result<Jet> {
    p.validate()?;
    let mut total = &ppp_exponent(s, p.lambda_b, p)? + &reflected_exponent(s, p)?;
    if stage == Stage::After {
        total = &total + &ppp_exponent(s, p.lambda_u_near(), p)?;
    }
    Ok(total)
}

pub fn log_factors(s: f64, p: &LaplaceParams) -> Result<LogFactors> {
    check_s(s)?;
    p.validate()?;
    let sj = Jet::constant(s, 0);
    Ok(LogFactors {
        direct: ppp_exponent(&sj, p.lambda_b, p)?.value(),
        reflected: reflected_exponent(&sj, p)?.value(),
        near: ppp_exponent(&sj, p.lambda_u_near(), p)?.value(),
    })
}

pub fn laplace_before(s: f64, p: &LaplaceParams) -> Result<f64> {
    Ok(log_factors(s, p)?.total(Stage::Before).exp())
}

pub fn laplace_after(s: f64, p: &LaplaceParams) -> Result<f64> {
    Ok(log_factors(s, p)?.total(Stage::After).exp())
}

pub fn laplace(s: f64, p: &LaplaceParams, stage: Stage) -> Result<f64> {
    Ok(log_factors(s, p)?.total(stage).exp())
}

fn oracle_settings() -> QuadSettings {
    QuadSettings {
        abs_tol: 0.0,
        rel_tol: 1e-12,
        max_intervals: 4000,
    }
}

/// −2πλ ∫₀^∞ (1 − 1/(1 + s C ν^{−α})) ν dν by quadrature.
fn ppp_exponent_quadrature(s: &Jet, lambda: f64, p: &LaplaceParams) -> Result<Jet> {
    let order = s.order();
    if lambda == 0.0 || s.coeffs().iter().all(|&c| c == 0.0) {
        return Ok(Jet::constant(0.0, order));
    }
    if !(s.value() > 0.0) {
        return Err(Error::domain("laplace oracle", "the transform is not analytic at s = 0"));
    }
    let scale = (s.value() * p.c).powf(1.0 / p.alpha);
    let integrand = |nu: f64| -> Jet {
        let x = s.scale(p.c * nu.powf(-p.alpha));
        saturating_ratio(&x).scale(nu)
    };
    let r = integrate_to_infinity(integrand, 0.0, scale, oracle_settings())?;
    Ok(r.value.scale(-2.0 * PI * lambda))
}

// x / (1 + x) for x ≥ 0
fn saturating_ratio(x: &Jet) -> Jet {
    let one_plus = x.add_scalar(1.0);
    x.div(&one_plus).expect("1 + x is positive for x ≥ 0")
}

/// Nested PGFL over the global RIS process, both distances truncated to [d_min, d_max]:
/// −2πλ_B ∫ (1 − exp(−2πλ_R ∫ (1 − 1/(1 + sNC²ν^{−α}u^{−α})) u du)) ν dν.
fn reflected_exponent_quadrature(s: &Jet, p: &LaplaceParams) -> Result<Jet> {
    let order = s.order();
    if p.lambda_b == 0.0 || p.lambda_r == 0.0 || s.coeffs().iter().all(|&c| c == 0.0) {
        return Ok(Jet::constant(0.0, order));
    }
    let n = f64::from(p.n_elements);
    let gain = n * p.c * p.c;
    let mut failure: Option<Error> = None;
    let outer = |nu: f64| -> Jet {
        let inner = integrate(
            |u: f64| {
                let x = s.scale(gain * (nu * u).powf(-p.alpha));
                saturating_ratio(&x).scale(u)
            },
            p.d_min,
            p.d_max,
            oracle_settings(),
        );
        match inner {
            Ok(r) => r.value.scale(-2.0 * PI * p.lambda_r).exp_m1().scale(-nu),
            Err(e) => {
                failure.get_or_insert(e);
                Jet::constant(f64::NAN, order)
            }
        }
    };
    let r = integrate(outer, p.d_min, p.d_max, oracle_settings());
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r?.value.scale(-2.0 * PI * p.lambda_b))
}

/// Quadrature log-transform as a jet in the transform variable.
pub fn log_laplace_oracle_jet(s: &Jet, p: &LaplaceParams, stage: Stage) -> Result<Jet> {
    p.validate()?;
    let mut total = &ppp_exponent_quadrature(s, p.lambda_b, p)? + &reflected_exponent_quadrature(s, p)?;
    if stage == Stage::After {
        total = &total + &ppp_exponent_quadrature(s, p.lambda_u_near(), p)?;
    }
    Ok(total)
}

/// Per-factor logarithms from the quadrature oracle.
pub fn oracle_log_factors(s: f64, p: &LaplaceParams) -> Result<LogFactors> {
    check_s(s)?;
    p.validate()?;
    let sj = Jet::constant(s, 0);
    Ok(LogFactors {
        direct: ppp_exponent_quadrature(&sj, p.lambda_b, p)?.value(),
        reflected: reflected_exponent_quadrature(&sj, p)?.value(),
        near: ppp_exponent_quadrature(&sj, p.lambda_u_near(), p)?.value(),
    })
}

pub fn laplace_quadrature_oracle(s: f64, p: &LaplaceParams, stage: Stage) -> Result<f64> {
    Ok(oracle_log_factors(s, p)?.total(stage).exp())
}

/// Sample mean of exp(−s I) with its standard error.
pub fn empirical_laplace(s: f64, interference: &[f64]) -> Result<Estimate> {
    check_s(s)?;
    let values: Vec<f64> = interference.iter().map(|&i| (-s * i).exp()).collect();
    mean_and_stderr(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a / b - 1.0).abs()
    }

    #[test]
    fn no_base_stations_means_no_interference() {
        let p = LaplaceParams { lambda_b: 0.0, ..LaplaceParams::default() };
        for s in [0.0, 1e3, 1e9] {
            assert_eq!(laplace_before(s, &p).unwrap(), 1.0);
            assert_eq!(laplace_quadrature_oracle(s, &p, Stage::After).unwrap(), 1.0);
        }
    }

    #[test]
    fn verbatim_offset_at_zero() {
        let p = LaplaceParams::default();
        let f = log_factors(0.0, &p).unwrap();
        assert_eq!(f.direct, 0.0);
        let offset = -2.0 * PI * p.lambda_b * 1.5 * (100.0 - 1.0);
        assert!(rel(f.reflected, offset) < 1e-12);
        assert_eq!(laplace_quadrature_oracle(0.0, &p, Stage::Before).unwrap(), 1.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = LaplaceParams::default();
        assert!(laplace_before(-1.0, &p).is_err());
        assert!(laplace_before(1.0, &LaplaceParams { alpha: 2.0, ..p.clone() }).is_err());
        assert!(laplace_before(1.0, &LaplaceParams { d_min: 5.0, d_max: 5.0, ..p.clone() }).is_err());
    }

    #[test]
    fn direct_factor_matches_ppp_identity() {
        // λ_R = 0, α = 3, sC = 1
        let p = LaplaceParams { lambda_r: 0.0, c: 1.0, ..LaplaceParams::default() };
        let oracle = oracle_log_factors(1.0, &p).unwrap().direct;
        let closed = -2.0 * PI * PI * p.lambda_b / (2.0 * PI / 3.0).sin() / 3.0;
        assert!(rel(oracle, closed) < 1e-9, "{oracle} vs {closed}");
    }

    #[test]
    fn direct_and_near_factors_agree_with_oracle() {
        let p = LaplaceParams::default();
        for s in [1e3, 1e6, 1e9] {
            let c = log_factors(s, &p).unwrap();
            let o = oracle_log_factors(s, &p).unwrap();
            assert!(rel(c.direct, o.direct) < 1e-9);
            assert!(rel(c.near, o.near) < 1e-9);
        }
    }

    #[test]
    fn after_never_exceeds_before() {
        let p = LaplaceParams::default();
        for k in 0..20 {
            let s = 10f64.powf(k as f64 * 0.5);
            assert!(laplace_after(s, &p).unwrap() <= laplace_before(s, &p).unwrap());
        }
        let still = LaplaceParams { lambda_u: 0.0, ..p };
        assert_eq!(laplace_after(1e6, &still).unwrap(), laplace_before(1e6, &still).unwrap());
    }

    #[test]
    fn verbatim_is_nonincreasing_and_bounded() {
        let p = LaplaceParams::default();
        let mut last = f64::INFINITY;
        for k in 0..50 {
            let s = 10f64.powf(k as f64 * 12.0 / 49.0);
            let v = laplace_before(s, &p).unwrap();
            assert!(v > 0.0 && v <= 1.0);
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn jet_derivatives_match_finite_differences() {
        let p = LaplaceParams::default();
        for stage in [Stage::Before, Stage::After] {
            let s0 = 1.6e8;
            let jet = log_laplace_jet(&Jet::variable(s0, 2), &p, stage).unwrap();
            let f = |s: f64| log_factors(s, &p).unwrap().total(stage);
            let h = s0 * 1e-4;
            let d1 = (f(s0 + h) - f(s0 - h)) / (2.0 * h);
            let d2 = (f(s0 + h) - 2.0 * f(s0) + f(s0 - h)) / (h * h);
            assert!(rel(jet.derivative(1), d1) < 1e-6);
            assert!(rel(jet.derivative(2), d2) < 1e-4);
        }
    }

    #[test]
    fn oracle_jet_carries_derivatives() {
        let p = LaplaceParams { lambda_r: 0.0, ..LaplaceParams::default() };
        let s = Jet::variable(1e6, 3);
        // drop the verbatim s-free offset, which survives λ_R = 0
        let closed = &log_laplace_jet(&s, &p, Stage::After).unwrap() - &reflected_exponent(&s, &p).unwrap();
        let oracle = log_laplace_oracle_jet(&s, &p, Stage::After).unwrap();
        for k in 0..=3 {
            assert!(rel(oracle.coeff(k), closed.coeff(k)) < 1e-8, "order {k}");
        }
    }

    #[test]
    fn empirical_laplace_trivia() {
        let samples = [0.0, 1.0, 2.0];
        assert_eq!(empirical_laplace(0.0, &samples).unwrap().value, 1.0);
        let zeros = [0.0; 10];
        assert_eq!(empirical_laplace(5.0, &zeros).unwrap().value, 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn monotone_in_densities(
            log_s in 0.0f64..10.0,
            bump in 1.0f64..3.0,
            which in 0usize..3,
        ) {
            let s = 10f64.powf(log_s);
            let p = LaplaceParams::default();
            let mut q = p.clone();
            match which {
                0 => q.lambda_b *= bump,
                1 => q.lambda_r *= bump,
                _ => q.lambda_u *= bump,
            }
            prop_assert!(laplace_before(s, &q).unwrap() <= laplace_before(s, &p).unwrap());
            prop_assert!(laplace_after(s, &q).unwrap() <= laplace_after(s, &p).unwrap());
        }
    }
}
