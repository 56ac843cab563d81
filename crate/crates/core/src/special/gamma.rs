//! Gamma function family.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_ITER: usize = 10_000;

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("ln_gamma", format!("argument {x} must be positive and finite")));
    }
    Ok(ln_gamma_unchecked(x))
}

fn ln_gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        // reflection: Γ(x)Γ(1−x) = π / sin(πx)
        return (PI / (PI * x).sin()).ln() - ln_gamma_unchecked(1.0 - x);
    }
    let z = x - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + series.ln()
}

/// Γ(x) for moderate positive arguments.
pub fn gamma(x: f64) -> Result<f64> {
    ln_gamma(x).map(f64::exp)
}

/// Γ(x + a) / Γ(x), evaluated as a log difference.
pub fn gamma_ratio(x: f64, a: f64) -> Result<f64> {
    Ok((ln_gamma(x + a)? - ln_gamma(x)?).exp())
}

/// Rising factorial x(x+1)…(x+k−1) = Γ(x+k)/Γ(x) for integer `k`.
pub fn rising_factorial(x: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (x + f64::from(i)))
}

/// Regularized lower incomplete gamma P(shape, x) = γ(shape, x) / Γ(shape).
pub fn gamma_p(shape: f64, x: f64) -> Result<f64> {
    incomplete_pair(shape, x).map(|(p, _)| p)
}

/// Regularized upper incomplete gamma Q(shape, x) = 1 − P(shape, x).
pub fn gamma_q(shape: f64, x: f64) -> Result<f64> {
    incomplete_pair(shape, x).map(|(_, q)| q)
}

fn incomplete_pair(a: f64, x: f64) -> Result<(f64, f64)> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain("incomplete gamma", format!("shape {a} must be positive")));
    }
    if !(x >= 0.0) {
        return Err(Error::domain("incomplete gamma", format!("argument {x} must be nonnegative")));
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if x.is_infinite() {
        return Ok((1.0, 0.0));
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma_unchecked(a);
    if x < a + 1.0 {
        let p = (series_sum(a, x)?.ln() + log_prefactor).exp().min(1.0);
        Ok((p, 1.0 - p))
    } else {
        let q = (log_prefactor - continued_fraction(a, x)?.ln()).exp().min(1.0);
        Ok((1.0 - q, q))
    }
}

// Σ xⁿ / (a(a+1)…(a+n))
fn series_sum(a: f64, x: f64) -> Result<f64> {
    let mut denom = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        denom += 1.0;
        term *= x / denom;
        sum += term;
        if term.abs() < sum.abs() * f64::EPSILON {
            return Ok(sum);
        }
    }
    Err(Error::numeric("incomplete gamma series", format!("no convergence for a={a}, x={x}")))
}

// Modified Lentz evaluation of x + 1 − a − 1(1−a)/(x + 3 − a − …)
fn continued_fraction(a: f64, x: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / if b.abs() < TINY { TINY } else { b };
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < f64::EPSILON {
            return Ok(1.0 / h);
        }
    }
    Err(Error::numeric("incomplete gamma continued fraction", format!("no convergence for a={a}, x={x}")))
}

/// Cosecant, rejecting arguments where sin vanishes.
pub fn csc(x: f64) -> Result<f64> {
    let s = x.sin();
    if s.abs() < 1e-12 {
        return Err(Error::domain("csc", format!("sin({x}) vanishes")));
    }
    Ok(1.0 / s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_reference_points() {
        assert!(ln_gamma(1.0).unwrap().abs() < 1e-15);
        assert!((ln_gamma(2.0).unwrap()).abs() < 1e-15);
        assert!((ln_gamma(0.5).unwrap() - 0.5 * PI.ln()).abs() < 1e-14);
        let ratio = gamma_ratio(2.0, 0.5).unwrap();
        assert!((ratio - 0.75 * PI.sqrt()).abs() < 1e-13, "{ratio}");
    }

    #[test]
    fn ln_gamma_rejects_nonpositive() {
        assert!(matches!(ln_gamma(0.0), Err(Error::Domain { .. })));
        assert!(ln_gamma(-1.5).is_err());
        assert!(ln_gamma(f64::NAN).is_err());
    }

    #[test]
    fn incomplete_gamma_closed_forms() {
        assert_eq!(gamma_p(3.0, 0.0).unwrap(), 0.0);
        assert!((gamma_p(1.0, 2f64.ln()).unwrap() - 0.5).abs() < 1e-14);
        let erlang2 = 1.0 - 3.0 * (-2.0f64).exp();
        assert!((gamma_p(2.0, 2.0).unwrap() - erlang2).abs() < 1e-14);
        assert!((gamma_p(4.0, 1e4).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn incomplete_gamma_domain() {
        assert!(gamma_p(0.0, 1.0).is_err());
        assert!(gamma_p(1.0, -1e-9).is_err());
    }

    #[test]
    fn rising_factorial_matches_ratio() {
        let x = 711.9974;
        for k in 0..5 {
            let direct = rising_factorial(x, k);
            let via_log = gamma_ratio(x, f64::from(k)).unwrap();
            assert!((direct / via_log - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn csc_rejects_multiples_of_pi() {
        assert!(csc(PI).is_err());
        assert!((csc(PI / 2.0).unwrap() - 1.0).abs() < 1e-15);
    }
}
