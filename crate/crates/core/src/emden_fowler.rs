//! The ground profile `W_p`: the positive solution of `−W'' = W^p` on
//! `(0, 1)` with `W(0) = W(1) = 0`.
//!
//! `W_p` is symmetric about `x = 1/2`, increasing on `[0, 1/2)` and attains
//! its maximum `ξ` at the midpoint. Energy conservation gives
//! `W' = √(2/(p+1) · (ξ^(p+1) − W^(p+1)))` on the left half, so position is
//! an explicit integral over amplitude (the time map). Pointwise values come
//! from inverting that map.
//!
//! The inversion is done in `v = √(1 − W/ξ)`. With `h` as in
//! [`crate::special_integrals`], the left-half position is
//!
//! ```text
//! x(v) = ½ (1 − J(v) / L(p,0)),   J(v) = ∫₀^v 2 / √h(r²) dr,
//! ```
//!
//! and `J' = 2/√h` stays within `[2/√(p+1), 2]`, so the inverse is well
//! conditioned up to and including the apex.

use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Error, Result};
use crate::quadrature;
use crate::roots::{brent_with_values, RootTolerance};
use crate::special_integrals::{eval_l, eval_m, tail_factor};

/// Accepted mismatch between the requested and the recovered position.
pub const INVERSION_TOL: f64 = 1e-10;
const TAIL_QUAD_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmdenFowlerProfile {
    pub p: f64,
    /// `ξ = ‖W_p‖∞ = W_p(1/2)`.
    pub sup_norm: f64,
    pub l2_norm: f64,
    pub grad_l2_norm: f64,
    l_p0: f64,
    l_p2: f64,
}

impl EmdenFowlerProfile {
    pub fn build(p: f64) -> Result<Self> {
        check_exponent(p)?;
        let l_p0 = eval_l(p, 0.0)?.value;
        let l_p2 = eval_l(p, 2.0)?.value;
        let sup_norm = sup_norm_from(p, l_p0);
        let l2_norm = (l_p2 / l_p0).sqrt() * sup_norm;
        let grad_l2_norm = grad_norm_from(p, 2.0, l_p0, eval_m(p, 2.0)?.value).sqrt();
        Ok(Self { p, sup_norm, l2_norm, grad_l2_norm, l_p0, l_p2 })
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_norm * self.l2_norm
    }

    pub fn grad_l2_norm_sq(&self) -> f64 {
        self.grad_l2_norm * self.grad_l2_norm
    }

    /// `L(p, 0)`, cached from construction.
    pub fn l_p0(&self) -> f64 {
        self.l_p0
    }

    /// `L(p, 2)`, cached from construction.
    pub fn l_p2(&self) -> f64 {
        self.l_p2
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        Ok(self.sample(x)?.0)
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        Ok(self.sample(x)?.1)
    }

    /// `(W_p(x), W_p'(x))`.
    pub fn sample(&self, x: f64) -> Result<(f64, f64)> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("position must lie in [0, 1], got {x}")));
        }
        let left = x.min(1.0 - x);
        let v = self.invert(left)?;
        let value = self.sup_norm * (1.0 - v * v);
        let slope = self.slope_at(v);
        Ok((value, if x > 0.5 { -slope } else { slope }))
    }

    /// Forward time map: the left-half position where `W_p = theta`.
    pub fn position_of(&self, theta: f64) -> Result<f64> {
        if !(0.0..=self.sup_norm).contains(&theta) {
            return Err(Error::Domain(format!(
                "amplitude must lie in [0, {}], got {theta}",
                self.sup_norm
            )));
        }
        let v = (1.0 - theta / self.sup_norm).max(0.0).sqrt();
        Ok(0.5 * (1.0 - self.tail(v)? / self.l_p0))
    }

    fn slope_at(&self, v: f64) -> f64 {
        let p = self.p;
        (2.0 / (p + 1.0)).sqrt()
            * self.sup_norm.powf(0.5 * (p + 1.0))
            * v
            * tail_factor(p, v * v).sqrt()
    }

    fn tail(&self, v: f64) -> Result<f64> {
        if v == 0.0 {
            return Ok(0.0);
        }
        if v >= 1.0 {
            return Ok(self.l_p0);
        }
        let p = self.p;
        let q = quadrature::integrate(|r| 2.0 / tail_factor(p, r * r).sqrt(), 0.0, v, TAIL_QUAD_TOL)
            .or_else(|_| {
                quadrature::integrate(|r| 2.0 / tail_factor(p, r * r).sqrt(), 0.0, v, 1e-13)
            })?;
        Ok(q.value)
    }

    /// Solves `x(v) = left` for `v ∈ [0, 1]`.
    fn invert(&self, left: f64) -> Result<f64> {
        if left <= 0.0 {
            return Ok(1.0);
        }
        if left >= 0.5 {
            return Ok(0.0);
        }
        let target = self.l_p0 * (1.0 - 2.0 * left);
        let residual = |v: f64| self.tail(v).map(|j| j - target);
        let mut failure = None;
        let tol = RootTolerance { rtol: 4.0 * f64::EPSILON, atol: 1e-17, max_iter: 200 };
        let v = brent_with_values(
            |v| match residual(v) {
                Ok(r) => r,
                Err(e) => {
                    failure = Some(e);
                    f64::NAN
                }
            },
            0.0,
            -target,
            1.0,
            self.l_p0 - target,
            tol,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let v = v?;
        let recovered = 0.5 * (1.0 - self.tail(v)? / self.l_p0);
        if (recovered - left).abs() > INVERSION_TOL {
            return Err(Error::Convergence(format!(
                "time-map inversion missed x = {left} by {:e}",
                (recovered - left).abs()
            )));
        }
        Ok(v)
    }
}

fn sup_norm_from(p: f64, l_p0: f64) -> f64 {
    (2.0 * (p + 1.0)).powf(1.0 / (p - 1.0)) * l_p0.powf(2.0 / (p - 1.0))
}

fn grad_norm_from(p: f64, m: f64, l_p0: f64, m_pm: f64) -> f64 {
    let e = p - 1.0;
    2f64.powf(m * p / e) * (p + 1.0).powf(m / e) * l_p0.powf((m * p + m - p + 1.0) / e) * m_pm
}

pub fn build_profile(p: f64) -> Result<EmdenFowlerProfile> {
    EmdenFowlerProfile::build(p)
}

/// `‖W_p'‖_m^m` in closed form.
pub fn grad_norm_m(p: f64, m: f64) -> Result<f64> {
    check_exponent(p)?;
    if !(m.is_finite() && m >= 1.0) {
        return Err(Error::Domain(format!("order m must be ≥ 1, got {m}")));
    }
    Ok(grad_norm_from(p, m, eval_l(p, 0.0)?.value, eval_m(p, m)?.value))
}

pub fn evaluate(p: f64, x: f64) -> Result<f64> {
    EmdenFowlerProfile::build(p)?.evaluate(x)
}

pub fn derivative(p: f64, x: f64) -> Result<f64> {
    EmdenFowlerProfile::build(p)?.derivative(x)
}
