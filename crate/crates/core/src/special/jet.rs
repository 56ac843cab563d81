//! Truncated Taylor series ("jets") for exact high-order derivatives.
//!
//! A jet of order `k` holds the coefficients `c_0..=c_k` of `f(x0 + δ)` in
//! powers of `δ`. Binary operations between jets of different order truncate
//! to the smaller order.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    coeffs: Vec<f64>,
}

impl Jet {
    /// Builds a jet from raw Taylor coefficients; `coeffs` must be nonempty.
    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "a jet needs at least the value coefficient");
        Jet { coeffs }
    }

    pub fn constant(value: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = value;
        Jet { coeffs }
    }

    /// The independent variable expanded around `point`.
    pub fn variable(point: f64, order: usize) -> Self {
        let mut jet = Jet::constant(point, order);
        if order >= 1 {
            jet.coeffs[1] = 1.0;
        }
        jet
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Coefficient of `δ^k`, zero beyond the truncation order.
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).copied().unwrap_or(0.0)
    }

    /// k-th derivative at the expansion point, `k! · c_k`.
    pub fn derivative(&self, k: usize) -> f64 {
        let factorial: f64 = (1..=k).map(|i| i as f64).product();
        factorial * self.coeff(k)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Largest coefficient magnitude.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    pub fn scale(&self, factor: f64) -> Jet {
        Jet {
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn add_scalar(&self, value: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += value;
        out
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let keep = (order + 1).min(self.coeffs.len());
        Jet {
            coeffs: self.coeffs[..keep].to_vec(),
        }
    }

    pub fn exp(&self) -> Jet {
        let a = &self.coeffs;
        let mut b = vec![0.0; a.len()];
        b[0] = a[0].exp();
        // b' = a' b  ⇒  n b_n = Σ_{k=1}^{n} k a_k b_{n−k}
        for n in 1..a.len() {
            let s: f64 = (1..=n).map(|k| k as f64 * a[k] * b[n - k]).sum();
            b[n] = s / n as f64;
        }
        Jet { coeffs: b }
    }

    /// exp(self) − 1 without cancellation in the value coefficient.
    pub fn exp_m1(&self) -> Jet {
        let mut out = self.exp();
        out.coeffs[0] = self.coeffs[0].exp_m1();
        out
    }

    pub fn ln(&self) -> Result<Jet> {
        let a = &self.coeffs;
        if !(a[0] > 0.0) {
            return Err(Error::domain("jet ln", format!("value {} must be positive", a[0])));
        }
        let mut b = vec![0.0; a.len()];
        b[0] = a[0].ln();
        // a' = a b'  ⇒  n a_0 b_n = n a_n − Σ_{k=1}^{n−1} k b_k a_{n−k}
        for n in 1..a.len() {
            let s: f64 = (1..n).map(|k| k as f64 * b[k] * a[n - k]).sum();
            b[n] = (n as f64 * a[n] - s) / (n as f64 * a[0]);
        }
        Ok(Jet { coeffs: b })
    }

    /// Real power `self^p` for a jet with positive value.
    pub fn powf(&self, p: f64) -> Result<Jet> {
        let a = &self.coeffs;
        if !(a[0] > 0.0) {
            return Err(Error::domain("jet powf", format!("value {} must be positive", a[0])));
        }
        let mut c = vec![0.0; a.len()];
        c[0] = a[0].powf(p);
        // a c' = p a' c  ⇒  n a_0 c_n = Σ_{k=1}^{n} (p k − (n − k)) a_k c_{n−k}
        for n in 1..a.len() {
            let s: f64 = (1..=n)
                .map(|k| (p * k as f64 - (n - k) as f64) * a[k] * c[n - k])
                .sum();
            c[n] = s / (n as f64 * a[0]);
        }
        Ok(Jet { coeffs: c })
    }

    pub fn recip(&self) -> Result<Jet> {
        let a = &self.coeffs;
        if a[0] == 0.0 {
            return Err(Error::domain("jet recip", "value is zero"));
        }
        let mut b = vec![0.0; a.len()];
        b[0] = 1.0 / a[0];
        for n in 1..a.len() {
            let s: f64 = (1..=n).map(|k| a[k] * b[n - k]).sum();
            b[n] = -s / a[0];
        }
        Ok(Jet { coeffs: b })
    }

    pub fn div(&self, rhs: &Jet) -> Result<Jet> {
        let order = self.order().min(rhs.order());
        let (a, d) = (&self.coeffs, &rhs.coeffs);
        if d[0] == 0.0 {
            return Err(Error::domain("jet div", "divisor value is zero"));
        }
        let mut q = vec![0.0; order + 1];
        for n in 0..=order {
            let s: f64 = (1..=n).map(|k| d[k] * q[n - k]).sum();
            q[n] = (a[n] - s) / d[0];
        }
        Ok(Jet { coeffs: q })
    }
}

fn zip_with(lhs: &Jet, rhs: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
    Jet {
        coeffs: lhs.coeffs.iter().zip(&rhs.coeffs).map(|(&a, &b)| f(a, b)).collect(),
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        zip_with(self, rhs, |a, b| a + b)
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        zip_with(self, rhs, |a, b| a - b)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let order = self.order().min(rhs.order());
        let (a, b) = (&self.coeffs, &rhs.coeffs);
        let coeffs = (0..=order)
            .map(|n| (0..=n).map(|k| a[k] * b[n - k]).sum())
            .collect();
        Jet { coeffs }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($($tr:ident :: $method:ident),*) => {$(
        impl $tr for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
    )*};
}

forward_owned!(Add::add, Sub::sub, Mul::mul);

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, rhs: f64) -> Jet {
        self.add_scalar(rhs)
    }
}
