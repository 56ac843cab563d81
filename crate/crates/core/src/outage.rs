//! Outage probability, infection/recovery rates and SIS dynamics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interference::{log_laplace_jet, log_laplace_oracle_jet, LaplaceParams, Stage};
use crate::power::GammaFit;
use crate::special::Jet;

pub const MAX_SERIES_ORDER: usize = 60;

/// Which interference transform feeds the outage series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplaceMode {
    /// Closed-form factors, including the reflected s-free offset.
    #[default]
    Verbatim,
    /// Quadrature of the PGFL integrals.
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageParams {
    /// Gamma fit of the serving power S₀.
    pub fit: GammaFit,
    /// SINR threshold, linear.
    pub threshold: f64,
    /// Transmit power, W.
    pub p_tx: f64,
    /// Noise power, W.
    pub sigma2: f64,
    pub laplace: LaplaceParams,
    /// Number of terms k in the Erlang tail sum.
    pub series_order: usize,
}

/// round(k_s) clamped to [1, 60].
pub fn default_series_order(shape: f64) -> usize {
    if !shape.is_finite() {
        return MAX_SERIES_ORDER;
    }
    (shape.round().max(1.0) as usize).min(MAX_SERIES_ORDER)
}

impl OutageParams {
    pub fn new(fit: GammaFit, threshold: f64, p_tx: f64, sigma2: f64, laplace: LaplaceParams) -> Self {
        OutageParams {
            series_order: default_series_order(fit.shape),
            fit,
            threshold,
            p_tx,
            sigma2,
            laplace,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold >= 0.0) || !self.threshold.is_finite() {
            return Err(Error::parameter("threshold", format!("{} must be finite and nonnegative", self.threshold)));
        }
        if !(self.p_tx > 0.0) {
            return Err(Error::parameter("p_tx", format!("{} must be positive", self.p_tx)));
        }
        if !(self.sigma2 >= 0.0) {
            return Err(Error::parameter("sigma2", format!("{} must be nonnegative", self.sigma2)));
        }
        if !(self.fit.shape > 0.0 && self.fit.scale > 0.0) {
            return Err(Error::parameter("fit", format!("{:?} must have positive shape and scale", self.fit)));
        }
        if self.series_order == 0 || self.series_order > MAX_SERIES_ORDER {
            return Err(Error::parameter(
                "series_order",
                format!("{} is outside [1, {MAX_SERIES_ORDER}]", self.series_order),
            ));
        }
        self.laplace.validate()
    }
}

/// log L(sT/η) as a jet in s around s = 1, without the noise term.
///
/// This part does not depend on transmit power, so sweeps over power can
/// reuse it.
pub fn interference_log_jet(params: &OutageParams, stage: Stage, mode: LaplaceMode) -> Result<Jet> {
    params.validate()?;
    let order = params.series_order - 1;
    let arg = Jet::variable(1.0, order).scale(params.threshold / params.fit.scale);
    match mode {
        LaplaceMode::Verbatim => log_laplace_jet(&arg, &params.laplace, stage),
        LaplaceMode::Oracle => log_laplace_oracle_jet(&arg, &params.laplace, stage),
    }
}

fn compose(log_interference: &Jet, params: &OutageParams) -> Result<Jet> {
    let rate = params.threshold * params.sigma2 / (params.p_tx * params.fit.scale);
    let noise = Jet::variable(1.0, log_interference.order()).scale(-rate);
    let composite = (&noise + log_interference).exp();
    if !composite.is_finite() {
        return Err(Error::numeric(
            "outage series",
            format!("non-finite Taylor coefficients at order {}", log_interference.order()),
        ));
    }
    Ok(composite)
}

/// Taylor coefficients of exp(−sTσ²/(Pη)) · L(sT/η) around s = 1.
pub fn jet_compose_transform(params: &OutageParams, stage: Stage, mode: LaplaceMode) -> Result<Jet> {
    compose(&interference_log_jet(params, stage, mode)?, params)
}

// 1 − Σ_{x<k} (−1)^x c_x, with c_x = F^{(x)}(1)/x!.
fn erlang_tail(composite: &Jet, k: usize) -> Result<f64> {
    let covered: f64 = (0..k)
        .map(|x| if x % 2 == 0 { composite.coeff(x) } else { -composite.coeff(x) })
        .sum();
    let p = 1.0 - covered;
    // tolerate rounding at the edges of [0, 1]
    if !(-1e-9..=1.0 + 1e-9).contains(&p) {
        return Err(Error::numeric("outage series", format!("probability {p} left [0, 1] with k = {k}")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Outage probability from the verbatim closed-form transform.
pub fn outage_probability(params: &OutageParams, stage: Stage) -> Result<f64> {
    outage_probability_with(params, stage, LaplaceMode::Verbatim)
}

pub fn outage_probability_with(params: &OutageParams, stage: Stage, mode: LaplaceMode) -> Result<f64> {
    erlang_tail(&jet_compose_transform(params, stage, mode)?, params.series_order)
}

/// Outage before and after movement for a fixed fit and threshold, reusing
/// the interference jets across transmit powers.
#[derive(Debug, Clone)]
pub struct OutageCurve {
    base: OutageParams,
    before: Jet,
    after: Jet,
}

impl OutageCurve {
    pub fn new(params: &OutageParams, mode: LaplaceMode) -> Result<Self> {
        Ok(OutageCurve {
            before: interference_log_jet(params, Stage::Before, mode)?,
            after: interference_log_jet(params, Stage::After, mode)?,
            base: params.clone(),
        })
    }

    /// (P_o, P_o') at transmit power `p_tx`.
    pub fn at_power(&self, p_tx: f64) -> Result<(f64, f64)> {
        let params = OutageParams { p_tx, ..self.base.clone() };
        params.validate()?;
        let k = params.series_order;
        Ok((
            erlang_tail(&compose(&self.before, &params)?, k)?,
            erlang_tail(&compose(&self.after, &params)?, k)?,
        ))
    }
}

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(name, format!("probability {p} is outside [0, 1]")));
    }
    Ok(())
}

/// β = (1 − P_o) P_o'.
pub fn infection_rate(p_o: f64, p_o_prime: f64) -> Result<f64> {
    check_probability("infection_rate", p_o)?;
    check_probability("infection_rate", p_o_prime)?;
    Ok((1.0 - p_o) * p_o_prime)
}

/// μ = P_o (1 − P_o').
pub fn recovery_rate(p_o: f64, p_o_prime: f64) -> Result<f64> {
    check_probability("recovery_rate", p_o)?;
    check_probability("recovery_rate", p_o_prime)?;
    Ok(p_o * (1.0 - p_o_prime))
}

/// R₀ = β/μ, with the degenerate cases made explicit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum PropagationIntensity {
    Finite(f64),
    /// μ = 0 < β: interference never clears.
    Infinite,
    /// β = μ = 0: no transitions either way.
    Undefined,
}

impl PropagationIntensity {
    pub fn from_rates(beta: f64, mu: f64) -> Self {
        if mu > 0.0 {
            PropagationIntensity::Finite(beta / mu)
        } else if beta > 0.0 {
            PropagationIntensity::Infinite
        } else {
            PropagationIntensity::Undefined
        }
    }

    /// Numeric view: +∞ and NaN for the degenerate cases.
    pub fn value(&self) -> f64 {
        match *self {
            PropagationIntensity::Finite(r) => r,
            PropagationIntensity::Infinite => f64::INFINITY,
            PropagationIntensity::Undefined => f64::NAN,
        }
    }
}

pub fn propagation_intensity(p_o: f64, p_o_prime: f64) -> Result<PropagationIntensity> {
    Ok(PropagationIntensity::from_rates(
        infection_rate(p_o, p_o_prime)?,
        recovery_rate(p_o, p_o_prime)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SisParams {
    pub beta: f64,
    pub mu: f64,
    pub n_total: f64,
    pub x0: f64,
}

impl SisParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !(self.mu >= 0.0) {
            return Err(Error::parameter("beta/mu", format!("rates ({}, {}) must be nonnegative", self.beta, self.mu)));
        }
        if !(self.n_total >= 0.0) || !(0.0..=self.n_total).contains(&self.x0) {
            return Err(Error::parameter("x0", format!("need 0 ≤ {} ≤ {}", self.x0, self.n_total)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SisPoint {
    pub t: f64,
    pub s: f64,
    pub x: f64,
}

/// Fixed-step RK4 for dX/dt = βX(N − X) − μX with S = N − X.
///
/// The last step is shortened so the trajectory ends exactly at `t_end`.
pub fn sis_ode_solve(p: &SisParams, t_end: f64, dt: f64) -> Result<Vec<SisPoint>> {
    p.validate()?;
    if !(dt > 0.0) || !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::parameter("dt/t_end", format!("need positive step {dt} and horizon {t_end}")));
    }
    let n = p.n_total;
    let f = |x: f64| p.beta * x * (n - x) - p.mu * x;
    let steps = (t_end / dt).ceil() as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = p.x0;
    out.push(SisPoint { t: 0.0, s: n - x, x });
    for i in 0..steps {
        let t = i as f64 * dt;
        let h = dt.min(t_end - t);
        let k1 = f(x);
        let k2 = f(x + 0.5 * h * k1);
        let k3 = f(x + 0.5 * h * k2);
        let k4 = f(x + h * k3);
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        let t_next = if i + 1 == steps { t_end } else { (i + 1) as f64 * dt };
        out.push(SisPoint { t: t_next, s: n - x, x });
    }
    Ok(out)
}

/// Long-run infected count: max(0, N − μ/β), or 0 without infection.
pub fn sis_equilibrium(p: &SisParams) -> f64 {
    if p.beta == 0.0 {
        return 0.0;
    }
    (p.n_total - p.mu / p.beta).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelParams;
    use crate::interference::laplace_quadrature_oracle;
    use crate::power::{s0_fit, ServingGeometry};
    use proptest::prelude::*;

    fn table_params(p_dbm: f64) -> OutageParams {
        let fit = s0_fit(&ChannelParams::default(), &ServingGeometry::default()).unwrap();
        OutageParams::new(fit, 1e-2, crate::channel::dbm_to_watts(p_dbm), 1e-12, LaplaceParams::default())
    }

    // Logistic solution of dX/dt = rX(1 − X/K) with r = βN − μ, K = r/β.
    fn logistic(p: &SisParams, t: f64) -> f64 {
        let r = p.beta * p.n_total - p.mu;
        if r == 0.0 {
            return p.x0 / (1.0 + p.beta * p.x0 * t);
        }
        let k = r / p.beta;
        let e = (r * t).exp();
        k * p.x0 * e / (k + p.x0 * (e - 1.0))
    }

    #[test]
    fn series_order_rounding() {
        assert_eq!(default_series_order(6.18), 6);
        assert_eq!(default_series_order(0.2), 1);
        assert_eq!(default_series_order(712.0), 60);
        let mut p = table_params(-5.0);
        p.series_order = 61;
        assert!(outage_probability(&p, Stage::Before).is_err());
    }

    #[test]
    fn zero_threshold() {
        let mut p = table_params(-5.0);
        p.threshold = 0.0;
        assert_eq!(outage_probability_with(&p, Stage::After, LaplaceMode::Oracle).unwrap(), 0.0);
        // the verbatim offset leaves 1 − L(0) behind
        let verbatim = outage_probability(&p, Stage::Before).unwrap();
        let l0 = crate::interference::laplace_before(0.0, &p.laplace).unwrap();
        assert!((verbatim - (1.0 - l0)).abs() < 1e-15);
        assert!((laplace_quadrature_oracle(0.0, &p.laplace, Stage::Before).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn no_interference_no_noise() {
        let mut p = table_params(-5.0);
        p.laplace.lambda_b = 0.0;
        p.sigma2 = 0.0;
        for stage in [Stage::Before, Stage::After] {
            assert_eq!(outage_probability(&p, stage).unwrap(), 0.0);
        }
    }

    #[test]
    fn noise_only_matches_gamma_cdf() {
        // Without interference, P_o = P(S₀ < Tσ²/P) exactly for integer shape.
        let mut p = table_params(-10.0);
        p.laplace.lambda_b = 0.0;
        p.fit.shape = 6.0;
        let po = outage_probability(&p, Stage::Before).unwrap();
        let x = p.threshold * p.sigma2 / p.p_tx;
        let exact = crate::special::gamma_p(6.0, x / p.fit.scale).unwrap();
        assert!((po - exact).abs() < 1e-12, "{po} vs {exact}");
    }

    #[test]
    fn affine_exponent_series() {
        let mut p = table_params(-20.0);
        p.laplace.lambda_b = 0.0;
        p.series_order = 8;
        let jet = jet_compose_transform(&p, Stage::Before, LaplaceMode::Verbatim).unwrap();
        let a = p.threshold * p.sigma2 / (p.p_tx * p.fit.scale);
        let mut expected = (-a).exp();
        for n in 0..8 {
            assert!((jet.coeff(n) / expected - 1.0).abs() < 1e-12, "order {n}");
            expected *= -a / (n + 1) as f64;
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = table_params(-5.0);
        for stage in [Stage::Before, Stage::After] {
            let jet = jet_compose_transform(&p, stage, LaplaceMode::Verbatim).unwrap();
            let f = |s: f64| {
                let arg = s * p.threshold / p.fit.scale;
                let l = crate::interference::laplace(arg, &p.laplace, stage).unwrap();
                (-s * p.threshold * p.sigma2 / (p.p_tx * p.fit.scale)).exp() * l
            };
            let h = 1e-4;
            let d1 = (f(1.0 + h) - f(1.0 - h)) / (2.0 * h);
            let d2 = (f(1.0 + h) - 2.0 * f(1.0) + f(1.0 - h)) / (h * h);
            // at h = 1e-4 the third difference is rounding-bound (ε/h³ ≈ 1e-4)
            let h3 = 1e-3;
            let d3 = (f(1.0 + 2.0 * h3) - 2.0 * f(1.0 + h3) + 2.0 * f(1.0 - h3) - f(1.0 - 2.0 * h3)) / (2.0 * h3.powi(3));
            for (k, fd) in [(1, d1), (2, d2), (3, d3)] {
                let exact = jet.derivative(k);
                assert!((exact / fd - 1.0).abs() < 1e-5, "order {k}: {exact} vs {fd}");
            }
        }
    }

    #[test]
    fn movement_raises_outage_and_power_lowers_it() {
        let mut last = (1.0, 1.0);
        let curve = OutageCurve::new(&table_params(-5.0), LaplaceMode::Verbatim).unwrap();
        for dbm in [-20.0, -10.0, -5.0, 0.0, 10.0, 20.0, 30.0] {
            let (po, pp) = curve.at_power(crate::channel::dbm_to_watts(dbm)).unwrap();
            assert!(pp >= po);
            assert!(po <= last.0 && pp <= last.1);
            let direct = (
                outage_probability(&table_params(dbm), Stage::Before).unwrap(),
                outage_probability(&table_params(dbm), Stage::After).unwrap(),
            );
            assert!((direct.0 - po).abs() < 1e-15 && (direct.1 - pp).abs() < 1e-15);
            last = (po, pp);
        }
    }

    #[test]
    fn rate_examples() {
        assert_eq!(infection_rate(0.0, 1.0).unwrap(), 1.0);
        assert_eq!(infection_rate(1.0, 0.4).unwrap(), 0.0);
        assert!((infection_rate(0.2, 0.3).unwrap() - 0.24).abs() < 1e-15);
        assert_eq!(recovery_rate(0.5, 1.0).unwrap(), 0.0);
        assert_eq!(recovery_rate(0.0, 0.3).unwrap(), 0.0);
        assert!((recovery_rate(0.2, 0.3).unwrap() - 0.14).abs() < 1e-15);
        assert!(infection_rate(1.2, 0.3).is_err());
        assert!(recovery_rate(0.2, -0.1).is_err());
    }

    #[test]
    fn intensity_examples() {
        assert_eq!(propagation_intensity(0.3, 0.3).unwrap().value(), 1.0);
        assert!((propagation_intensity(0.2, 0.3).unwrap().value() - 12.0 / 7.0).abs() < 1e-14);
        assert_eq!(propagation_intensity(0.0, 0.3).unwrap(), PropagationIntensity::Infinite);
        assert_eq!(propagation_intensity(0.0, 0.0).unwrap(), PropagationIntensity::Undefined);
        assert!(propagation_intensity(0.4, 0.2).unwrap().value() < 1.0);
    }

    #[test]
    fn sis_trivia() {
        let p = SisParams { beta: 0.01, mu: 0.5, n_total: 100.0, x0: 0.0 };
        assert!(sis_ode_solve(&p, 10.0, 0.1).unwrap().iter().all(|q| q.x == 0.0));
        let p = SisParams { x0: 5.0, ..p };
        assert_eq!(sis_equilibrium(&p), 50.0);
        let end = sis_ode_solve(&p, 50.0, 1e-2).unwrap();
        assert!((end.last().unwrap().x - 50.0).abs() < 1e-6);
        assert_eq!(sis_equilibrium(&SisParams { beta: 0.001, mu: 0.5, n_total: 100.0, x0: 5.0 }), 0.0);
        assert_eq!(sis_equilibrium(&SisParams { beta: 0.01, mu: 0.0, n_total: 100.0, x0: 5.0 }), 100.0);
        assert!(sis_ode_solve(&p, 1.0, 0.0).is_err());
    }

    #[test]
    fn sis_matches_logistic() {
        for p in [
            SisParams { beta: 0.01, mu: 0.5, n_total: 100.0, x0: 5.0 },
            SisParams { beta: 0.002, mu: 0.5, n_total: 100.0, x0: 60.0 },
            SisParams { beta: 0.005, mu: 0.5, n_total: 100.0, x0: 20.0 },
        ] {
            let traj = sis_ode_solve(&p, 50.0, 1e-3).unwrap();
            assert_eq!(traj.last().unwrap().t, 50.0);
            let worst = traj.iter().map(|q| (q.x - logistic(&p, q.t)).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-6, "{p:?}: {worst}");
        }
    }

    proptest! {
        #[test]
        fn rates_sum_at_most_one(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            prop_assert!(infection_rate(a, b).unwrap() + recovery_rate(a, b).unwrap() <= 1.0 + 1e-15);
        }

        #[test]
        fn intensity_monotone(a in 0.01f64..0.99, b in 0.01f64..0.98, bump in 0.001f64..0.01) {
            let r = propagation_intensity(a, b).unwrap().value();
            prop_assert!(propagation_intensity(a, b + bump).unwrap().value() > r);
            if a + bump < 1.0 {
                prop_assert!(propagation_intensity(a + bump, b).unwrap().value() < r);
            }
        }

        #[test]
        fn ode_conserves_population(beta in 0.0f64..0.05, mu in 0.0f64..1.0, x0 in 0.0f64..100.0) {
            let p = SisParams { beta, mu, n_total: 100.0, x0 };
            for q in sis_ode_solve(&p, 5.0, 0.05).unwrap() {
                prop_assert!((q.s + q.x - 100.0).abs() < 1e-12);
            }
        }
    }
}
