//! Adaptive Gauss–Kronrod (7/15) quadrature for scalar and jet integrands.

use std::collections::BinaryHeap;
use std::cmp::Ordering;

use super::jet::Jet;
use crate::error::{Error, Result};

/// Values that can be accumulated by the integrator.
pub trait QuadValue: Clone {
    fn scaled(&self, w: f64) -> Self;
    fn add_assign(&mut self, other: &Self);
    /// Magnitude used for error control.
    fn norm(&self) -> f64;
    fn is_finite(&self) -> bool;
}

impl QuadValue for f64 {
    fn scaled(&self, w: f64) -> Self {
        self * w
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn is_finite(&self) -> bool {
        f64::is_finite(*self)
    }
}

impl QuadValue for Jet {
    fn scaled(&self, w: f64) -> Self {
        self.scale(w)
    }
    fn add_assign(&mut self, other: &Self) {
        *self = &*self + other;
    }
    fn norm(&self) -> f64 {
        self.max_abs()
    }
    fn is_finite(&self) -> bool {
        Jet::is_finite(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSettings {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        QuadSettings {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Integral<V> {
    pub value: V,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment<V> {
    a: f64,
    b: f64,
    value: V,
    error: f64,
}

impl<V> PartialEq for Segment<V> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V> Eq for Segment<V> {}
impl<V> PartialOrd for Segment<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Segment<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<V: QuadValue, F: FnMut(f64) -> V>(f: &mut F, a: f64, b: f64) -> (V, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc.scaled(WGK[7]);
    let mut gauss = fc.scaled(WG[3]);
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let mut pair = f1;
        pair.add_assign(&f2);
        kron.add_assign(&pair.scaled(WGK[j]));
        if j % 2 == 1 {
            gauss.add_assign(&pair.scaled(WG[j / 2]));
        }
    }
    let kron = kron.scaled(half);
    let mut diff = gauss.scaled(half);
    diff = diff.scaled(-1.0);
    diff.add_assign(&kron);
    (kron, diff.norm())
}

/// Integrates `f` over the finite interval `[a, b]`.
pub fn integrate<V, F>(mut f: F, a: f64, b: f64, settings: QuadSettings) -> Result<Integral<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    if !(a.is_finite() && b.is_finite()) || a > b {
        return Err(Error::domain("integrate", format!("invalid interval [{a}, {b}]")));
    }
    let (value, error) = kronrod(&mut f, a, b);
    let mut evaluations = 15;
    let mut total = value.clone();
    let mut total_error = error;
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });

    loop {
        let converged = total_error <= settings.abs_tol.max(settings.rel_tol * total.norm());
        if converged {
            break;
        }
        if heap.len() >= settings.max_intervals || !total.is_finite() {
            return Err(Error::Quadrature {
                lower: a,
                upper: b,
                estimate: total.norm(),
                error: total_error,
                evaluations,
            });
        }
        let worst = heap.pop().expect("heap holds at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = kronrod(&mut f, worst.a, mid);
        let (rv, re) = kronrod(&mut f, mid, worst.b);
        evaluations += 30;

        total_error += le + re - worst.error;
        total.add_assign(&worst.value.scaled(-1.0));
        total.add_assign(&lv);
        total.add_assign(&rv);
        heap.push(Segment { a: worst.a, b: mid, value: lv, error: le });
        heap.push(Segment { a: mid, b: worst.b, value: rv, error: re });
        total_error = total_error.max(0.0);
    }
    // Final re-summation removes drift from the incremental updates.
    let mut iter = heap.into_iter();
    let mut value = iter.next().expect("nonempty").value;
    for seg in iter {
        value.add_assign(&seg.value);
    }
    Ok(Integral {
        value,
        error: total_error,
        evaluations,
    })
}

/// Integrates `f` over `[a, ∞)`.
///
/// `[a, a + scale]` is handled directly; the tail is mapped onto `(0, 1]`
/// through `x = a + scale / u`. `scale` should sit near the integrand's
/// transition so that both pieces are smooth.
pub fn integrate_to_infinity<V, F>(mut f: F, a: f64, scale: f64, settings: QuadSettings) -> Result<Integral<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> V,
{
    if !(scale > 0.0) {
        return Err(Error::domain("integrate_to_infinity", format!("scale {scale} must be positive")));
    }
    let head = integrate(&mut f, a, a + scale, settings)?;
    let tail = integrate(|u: f64| f(a + scale / u).scaled(scale / (u * u)), 0.0, 1.0, settings)?;
    let mut value = head.value;
    value.add_assign(&tail.value);
    Ok(Integral {
        value,
        error: head.error + tail.error,
        evaluations: head.evaluations + tail.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x: f64| x.powi(5) - 3.0 * x * x, -1.0, 2.0, QuadSettings::default()).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-13);
        assert_eq!(r.evaluations, 15);
    }

    #[test]
    fn peaked_integrand_adapts() {
        let r = integrate(|x: f64| 1.0 / (1e-4 + x * x), -1.0, 1.0, QuadSettings::default()).unwrap();
        let exact = 2.0 * 100.0 * (100.0f64).atan();
        assert!((r.value / exact - 1.0).abs() < 1e-10, "{}", r.value);
        assert!(r.evaluations > 15);
    }

    #[test]
    fn semi_infinite_ppp_identity() {
        // ∫₀^∞ ν/(1+ν^α) dν = (π/α) csc(2π/α)
        for alpha in [2.5, 3.0, 4.0, 5.5] {
            let r = integrate_to_infinity(|v: f64| v / (1.0 + v.powf(alpha)), 0.0, 1.0, QuadSettings::default()).unwrap();
            let exact = PI / alpha / (2.0 * PI / alpha).sin();
            assert!((r.value / exact - 1.0).abs() < 1e-9, "alpha {alpha}: {}", r.value);
        }
    }

    #[test]
    fn jet_integrand_differentiates_under_the_integral() {
        // F(s) = ∫₀¹ e^{−s x} dx, F'(s) = −∫ x e^{−sx} dx
        let s = Jet::variable(2.0, 2);
        let r = integrate(|x: f64| s.scale(-x).exp(), 0.0, 1.0, QuadSettings::default()).unwrap();
        let f0 = (1.0 - (-2.0f64).exp()) / 2.0;
        let f1 = -((1.0 - 3.0 * (-2.0f64).exp()) / 4.0);
        assert!((r.value.value() - f0).abs() < 1e-13);
        assert!((r.value.derivative(1) - f1).abs() < 1e-13);
    }

    #[test]
    fn nonconvergence_reports_diagnostics() {
        let settings = QuadSettings { abs_tol: 0.0, rel_tol: 1e-14, max_intervals: 3 };
        let err = integrate(|x: f64| x.sqrt().recip(), 0.0, 1.0, settings).unwrap_err();
        assert!(matches!(err, Error::Quadrature { evaluations, .. } if evaluations > 15));
    }
}
