//! Reduction of the coefficient `log(a‖u'‖₂² + b‖u‖₂² + 1)` to
//! `log(d₀‖u‖₂² + 1)`.
//!
//! Every solution is a multiple of `W_p`, and for those the ratio
//! `‖u'‖₂² / ‖u‖₂²` is the constant `4 L(p,0)² M(p,2) / L(p,2)`, so
//! `d₀ = a · ratio + b`. The coefficient of `a` enters linearly; a second
//! factor of `a` in `d₀` would break `d₀‖u‖₂² = a‖u'‖₂² + b‖u‖₂²`.

use serde::{Deserialize, Serialize};

use crate::emden_fowler::EmdenFowlerProfile;
use crate::error::{check_exponent, Error, Result};
use crate::scalar_map::KirchhoffScalarProblem;
use crate::special_integrals::{eval_l, eval_m};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullProblemParams {
    pub a: f64,
    pub b: f64,
    pub p: f64,
}

impl FullProblemParams {
    pub fn new(a: f64, b: f64, p: f64) -> Result<Self> {
        let params = Self { a, b, p };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        check_exponent(self.p)?;
        if !(self.a.is_finite() && self.a >= 0.0) {
            return Err(Error::Domain(format!("a must be ≥ 0, got {}", self.a)));
        }
        if !(self.b.is_finite() && self.b > 0.0) {
            return Err(Error::Domain(format!("b must be > 0, got {}", self.b)));
        }
        Ok(())
    }
}

/// `‖u'‖₂² / ‖u‖₂²` shared by every multiple of `W_p`.
pub fn gradient_ratio(p: f64) -> Result<f64> {
    check_exponent(p)?;
    let l0 = eval_l(p, 0.0)?.value;
    let l2 = eval_l(p, 2.0)?.value;
    let m2 = eval_m(p, 2.0)?.value;
    Ok(4.0 * l0 * l0 * m2 / l2)
}

/// `d₀ = a · gradient_ratio(p) + b`.
pub fn reduced_coefficient(full: &FullProblemParams) -> Result<f64> {
    full.validate()?;
    Ok(full.a * gradient_ratio(full.p)? + full.b)
}

pub fn reduce(full: &FullProblemParams) -> Result<KirchhoffScalarProblem> {
    let d = reduced_coefficient(full)?;
    let profile = EmdenFowlerProfile::build(full.p)?;
    KirchhoffScalarProblem::from_profile(&profile, d)
}
