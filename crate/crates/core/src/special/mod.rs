//! Numerical kernel: gamma family, jets and adaptive quadrature.

mod gamma;
mod jet;
mod quadrature;

pub use gamma::{csc, gamma, gamma_p, gamma_q, gamma_ratio, ln_gamma, rising_factorial};
pub use jet::Jet;
pub use quadrature::{integrate, integrate_to_infinity, Integral, QuadSettings, QuadValue};

/// Regularized lower incomplete gamma γ(shape, x)/Γ(shape).
pub fn lower_incomplete_gamma_regularized(shape: f64, x: f64) -> crate::error::Result<f64> {
    gamma_p(shape, x)
}
