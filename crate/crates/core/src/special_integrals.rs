//! The constants
//!
//! ```text
//! L(p, q) = ∫₀¹ s^q (1 − s^(p+1))^(−1/2) ds,   M(p, m) = ∫₀¹ (1 − s^(p+1))^((m−1)/2) ds
//! ```
//!
//! Both are evaluated after the substitution `s = 1 − v²`, for which
//! `1 − s^(p+1) = v² h(v²)` with `h(w) = (1 − (1 − w)^(p+1)) / w` smooth and
//! bounded between 1 and `p + 1` on `[0, 1]`. The inverse square root at
//! `s = 1` cancels against `ds = 2v dv`, so the `L` integrand becomes
//! `2 (1 − v²)^q / √h(v²)`, which is bounded and C¹ for `q = 0` or `q ≥ 1`.
//! The `M` integrand becomes `2 v^m h(v²)^((m−1)/2)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Error, Result};
use crate::quadrature;

/// Default absolute tolerance for both integral families.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralValue {
    pub value: f64,
    pub abs_error_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "UPPERCASE")]
pub enum IntegralRequest {
    L { p: f64, q: f64 },
    M { p: f64, m: f64 },
}

impl IntegralRequest {
    pub fn validate(&self) -> Result<()> {
        match *self {
            IntegralRequest::L { p, q } => {
                check_exponent(p)?;
                if !(q.is_finite() && q >= 0.0) {
                    return Err(Error::Domain(format!("weight q must be ≥ 0, got {q}")));
                }
            }
            IntegralRequest::M { p, m } => {
                check_exponent(p)?;
                if !(m.is_finite() && m >= 1.0) {
                    return Err(Error::Domain(format!("order m must be ≥ 1, got {m}")));
                }
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, tol: f64) -> Result<IntegralValue> {
        match *self {
            IntegralRequest::L { p, q } => eval_l_with_tol(p, q, tol),
            IntegralRequest::M { p, m } => eval_m_with_tol(p, m, tol),
        }
    }

    /// The same constant from the Beta-function identity.
    pub fn beta_value(&self) -> Result<f64> {
        self.validate()?;
        match *self {
            IntegralRequest::L { p, q } => Ok(beta_oracle((q + 1.0) / (p + 1.0), 0.5)? / (p + 1.0)),
            IntegralRequest::M { p, m } => Ok(beta_oracle(1.0 / (p + 1.0), (m + 1.0) / 2.0)? / (p + 1.0)),
        }
    }
}

/// `h(w) = (1 − (1 − w)^(p+1)) / w`, extended by continuity with `h(0) = p + 1`.
pub(crate) fn tail_factor(p: f64, w: f64) -> f64 {
    if w == 0.0 {
        return p + 1.0;
    }
    -((p + 1.0) * (-w).ln_1p()).exp_m1() / w
}

pub fn eval_l(p: f64, q: f64) -> Result<IntegralValue> {
    eval_l_with_tol(p, q, DEFAULT_TOL)
}

pub fn eval_l_with_tol(p: f64, q: f64, tol: f64) -> Result<IntegralValue> {
    IntegralRequest::L { p, q }.validate()?;
    let integrand = |v: f64| {
        let w = v * v;
        let weight = if q == 0.0 { 1.0 } else { (1.0 - w).powf(q) };
        2.0 * weight / tail_factor(p, w).sqrt()
    };
    finish(quadrature::integrate(integrand, 0.0, 1.0, tol)?, tol)
}

pub fn eval_m(p: f64, m: f64) -> Result<IntegralValue> {
    eval_m_with_tol(p, m, DEFAULT_TOL)
}

pub fn eval_m_with_tol(p: f64, m: f64, tol: f64) -> Result<IntegralValue> {
    IntegralRequest::M { p, m }.validate()?;
    let integrand = |v: f64| 2.0 * v.powf(m) * tail_factor(p, v * v).powf(0.5 * (m - 1.0));
    finish(quadrature::integrate(integrand, 0.0, 1.0, tol)?, tol)
}

fn finish(q: quadrature::Quadrature, tol: f64) -> Result<IntegralValue> {
    if q.abs_error > tol || !(q.value > 0.0) {
        return Err(Error::Convergence(format!(
            "integral {} with error estimate {:e} (tolerance {tol:e})",
            q.value, q.abs_error
        )));
    }
    Ok(IntegralValue { value: q.value, abs_error_estimate: q.abs_error })
}

/// Euler Beta function through log-Gamma. Independent of the quadrature
/// path and intended for cross-checking [`eval_l`] and [`eval_m`].
pub fn beta_oracle(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
        return Err(Error::Domain(format!("Beta arguments must be positive, got ({x}, {y})")));
    }
    use statrs::function::gamma::ln_gamma;
    Ok((ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)).exp())
}
