//! Scalar reduction of the nonlocal problem with coefficient `log(d‖u‖₂² + 1)`.
//!
//! A function `u = c·W_p` solves the problem exactly when `t = ‖u‖₂²` is a
//! positive root of
//!
//! ```text
//! f(t) = log(dt + 1) / t^((p−1)/2) = λ ‖W_p‖₂^(1−p)
//! ```
//!
//! with `c = √t / ‖W_p‖₂`. The sign of `f'` is the sign of
//! `g(t) = −(p−1)/2 · log(dt + 1) + dt/(dt + 1)`, which splits the problem
//! into three regimes by `p`:
//!
//! * `p > 3`: `f` decreases from `+∞` to `0`, one root for every `λ`.
//! * `p = 3`: `f` decreases from `d` to `0`, one root iff `λ < d‖W_3‖₂²`.
//! * `1 < p < 3`: `f` rises from `0` to its maximum at the fold `t₂`
//!   (the positive zero of `g`) and decays to `0`; two roots below the fold
//!   value `ν`, none above.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::emden_fowler::EmdenFowlerProfile;
use crate::error::{check_exponent, Error, Result};
use crate::roots::{brent, expand_geometric, RootTolerance};

/// `|p − 3|` below this is treated as the critical exponent.
pub const CRITICAL_BAND: f64 = 1e-12;
/// Relative half-width of the band around `ν` reported as a single,
/// fold-degenerate root.
pub const FOLD_BAND: f64 = 1e-8;
/// Accepted root residual, relative to `max(1, target)`.
pub const RESIDUAL_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Supercritical,
    Critical,
    Subcritical,
}

impl Regime {
    pub fn of(p: f64) -> Self {
        if (p - 3.0).abs() <= CRITICAL_BAND {
            Regime::Critical
        } else if p > 3.0 {
            Regime::Supercritical
        } else {
            Regime::Subcritical
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::Supercritical => "Supercritical",
            Regime::Critical => "Critical",
            Regime::Subcritical => "Subcritical",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub t2: f64,
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchResult {
    pub regime: Regime,
    pub lambda: f64,
    /// Positive roots in ascending order.
    pub roots: Vec<f64>,
    pub fold: Option<Fold>,
    /// Set when `λ` lies within [`FOLD_BAND`] of `ν` and the two roots were
    /// merged into `t₂`.
    pub fold_degenerate: bool,
}

/// The small-`t` root written as `t_lead·(1 + offset)` with
/// `t_lead = (λ‖W_p‖₂^(1−p)/d)^(2/(3−p))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawRoot {
    pub t_lead: f64,
    pub offset: f64,
}

impl PowerLawRoot {
    pub fn t(&self) -> f64 {
        self.t_lead * (1.0 + self.offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KirchhoffScalarProblem {
    pub p: f64,
    pub d: f64,
    /// `‖W_p‖₂`.
    pub wp_l2: f64,
    pub root_tol: RootToleranceSpec,
}

/// Serializable mirror of the root tolerance used by [`KirchhoffScalarProblem`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootToleranceSpec {
    pub rtol: f64,
}

impl Default for RootToleranceSpec {
    fn default() -> Self {
        Self { rtol: 1e-14 }
    }
}

impl RootToleranceSpec {
    fn brent(self) -> RootTolerance {
        RootTolerance { rtol: self.rtol, atol: 0.0, max_iter: 400 }
    }
}

impl KirchhoffScalarProblem {
    /// Builds the problem, computing `‖W_p‖₂` from the closed form.
    pub fn new(p: f64, d: f64) -> Result<Self> {
        check_exponent(p)?;
        let profile = EmdenFowlerProfile::build(p)?;
        Self::with_norm(p, d, profile.l2_norm)
    }

    pub fn from_profile(profile: &EmdenFowlerProfile, d: f64) -> Result<Self> {
        Self::with_norm(profile.p, d, profile.l2_norm)
    }

    pub fn with_norm(p: f64, d: f64, wp_l2: f64) -> Result<Self> {
        check_exponent(p)?;
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::Domain(format!("Kirchhoff coefficient d must be positive, got {d}")));
        }
        if !(wp_l2.is_finite() && wp_l2 > 0.0) {
            return Err(Error::Domain(format!("‖W_p‖₂ must be positive, got {wp_l2}")));
        }
        Ok(Self { p, d, wp_l2, root_tol: RootToleranceSpec::default() })
    }

    pub fn with_root_tolerance(mut self, rtol: f64) -> Result<Self> {
        if !(rtol > 0.0 && rtol < 1.0) {
            return Err(Error::Domain(format!("root tolerance must lie in (0, 1), got {rtol}")));
        }
        self.root_tol = RootToleranceSpec { rtol };
        Ok(self)
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.p)
    }

    /// Right-hand side `λ ‖W_p‖₂^(1−p)` of the scalar equation.
    pub fn target(&self, lambda: f64) -> f64 {
        lambda * self.wp_l2.powf(1.0 - self.p)
    }

    pub fn f(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("f requires t > 0, got {t}")));
        }
        Ok(self.f_unchecked(t))
    }

    fn f_unchecked(&self, t: f64) -> f64 {
        (self.d * t).ln_1p() / t.powf(0.5 * (self.p - 1.0))
    }

    pub fn g(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("g requires t ≥ 0, got {t}")));
        }
        Ok(self.g_unchecked(t))
    }

    fn g_unchecked(&self, t: f64) -> f64 {
        let y = self.d * t;
        -0.5 * (self.p - 1.0) * y.ln_1p() + y / (y + 1.0)
    }

    /// `f'(t) = t^(−(1+p)/2) g(t)`.
    pub fn f_prime(&self, t: f64) -> Result<f64> {
        Ok(self.g(t)? * t.powf(-0.5 * (1.0 + self.p)))
    }

    /// Scale factor `c = √t / ‖W_p‖₂` with `u = c·W_p`.
    pub fn amplitude(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("amplitude requires t > 0, got {t}")));
        }
        Ok(t.sqrt() / self.wp_l2)
    }

    /// Fold point `(t₂, ν)`, only defined for `1 < p < 3`.
    pub fn fold(&self) -> Result<Fold> {
        if self.regime() != Regime::Subcritical {
            return Err(Error::Regime(format!("fold requires 1 < p < 3, got p = {}", self.p)));
        }
        let p = self.p;
        // g increases up to t0 and decreases afterwards.
        let t0 = (3.0 - p) / (self.d * (p - 1.0));
        let g = |t: f64| self.g_unchecked(t);
        if !(g(t0) > 0.0) {
            return Err(Error::Convergence(format!(
                "g(t0) = {:e} is not positive at t0 = {t0:e}",
                g(t0)
            )));
        }
        let upper = expand_geometric(2.0 * t0, 2.0, MAX_DOUBLINGS, |t| g(t) < 0.0)?;
        let tol = RootTolerance { rtol: 2.0 * f64::EPSILON, atol: 0.0, max_iter: 400 };
        let t2 = brent(g, t0, upper, tol)?;
        let dt2 = self.d * t2;
        let nu = 2.0 / (p - 1.0) * self.d * t2.powf(0.5 * (3.0 - p)) / (dt2 + 1.0)
            * self.wp_l2.powf(p - 1.0);
        Ok(Fold { t2, nu })
    }

    /// Nonexistence threshold in `λ`: `ν` for `p < 3`, `d‖W_3‖₂²` for `p = 3`.
    pub fn lambda_threshold(&self) -> Result<Option<f64>> {
        Ok(match self.regime() {
            Regime::Supercritical => None,
            Regime::Critical => Some(self.d * self.wp_l2 * self.wp_l2),
            Regime::Subcritical => Some(self.fold()?.nu),
        })
    }

    /// All positive roots of `f(t) = λ‖W_p‖₂^(1−p)`.
    pub fn solve_branch(&self, lambda: f64) -> Result<BranchResult> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Domain(format!("λ must be positive, got {lambda}")));
        }
        let regime = self.regime();
        let target = self.target(lambda);
        let mut result =
            BranchResult { regime, lambda, roots: Vec::new(), fold: None, fold_degenerate: false };
        match regime {
            Regime::Supercritical => {
                result.roots.push(self.decreasing_root(target)?);
            }
            Regime::Critical => {
                // f decreases from its limit d at 0⁺.
                if target < self.d {
                    result.roots.push(self.decreasing_root(target)?);
                }
            }
            Regime::Subcritical => {
                let fold = self.fold()?;
                result.fold = Some(fold);
                if (lambda - fold.nu).abs() <= FOLD_BAND * fold.nu {
                    result.fold_degenerate = true;
                    result.roots.push(fold.t2);
                } else if lambda < fold.nu {
                    let f = |t: f64| self.f_unchecked(t) - target;
                    let lower = expand_geometric(0.5 * fold.t2, 0.5, MAX_DOUBLINGS, |t| f(t) < 0.0)?;
                    let upper = expand_geometric(2.0 * fold.t2, 2.0, MAX_DOUBLINGS, |t| f(t) < 0.0)?;
                    let tol = self.root_tol.brent();
                    result.roots.push(self.checked(brent(f, lower, fold.t2, tol)?, target)?);
                    result.roots.push(self.checked(brent(f, fold.t2, upper, tol)?, target)?);
                }
            }
        }
        Ok(result)
    }

    fn decreasing_root(&self, target: f64) -> Result<f64> {
        let f = |t: f64| self.f_unchecked(t) - target;
        let (lo, hi) = if f(1.0) > 0.0 {
            let hi = expand_geometric(2.0, 2.0, MAX_DOUBLINGS, |t| f(t) < 0.0)?;
            (0.5 * hi, hi)
        } else {
            let lo = expand_geometric(0.5, 0.5, MAX_DOUBLINGS, |t| f(t) > 0.0)?;
            (lo, 2.0 * lo)
        };
        self.checked(brent(f, lo, hi, self.root_tol.brent())?, target)
    }

    fn checked(&self, t: f64, target: f64) -> Result<f64> {
        let residual = (self.f_unchecked(t) - target).abs();
        if residual > RESIDUAL_TOL * target.max(1.0) {
            return Err(Error::Convergence(format!(
                "root t = {t:e} leaves residual {residual:e}"
            )));
        }
        Ok(t)
    }

    /// Solves for the small-`t` root relative to its power-law leading term.
    ///
    /// Writing `t = t_lead(1 + δ)` and `φ(y) = log(1 + y)/y`, the equation
    /// becomes `(3−p)/2 · log(1 + δ) + log φ(d t_lead (1 + δ)) = 0`, free of
    /// the cancellation that limits `t/t_lead − 1` computed from `t` itself.
    /// Valid for `p > 3` (the only root) and `p < 3` below the fold (the
    /// lower root).
    pub fn power_law_offset(&self, lambda: f64) -> Result<PowerLawRoot> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Domain(format!("λ must be positive, got {lambda}")));
        }
        let p = self.p;
        let target = self.target(lambda);
        let t_lead = (target / self.d).powf(2.0 / (3.0 - p));
        let y0 = self.d * t_lead;
        let k = 0.5 * (3.0 - p);
        let g = |delta: f64| k * delta.ln_1p() + ln_phi(y0 * (1.0 + delta));
        let tol = RootTolerance { rtol: 2.0 * f64::EPSILON, atol: 0.0, max_iter: 400 };
        let offset = match self.regime() {
            Regime::Critical => {
                return Err(Error::Regime("no power-law root at p = 3".into()));
            }
            Regime::Supercritical => {
                // g decreases from +∞ at δ = −1 to g(0) = log φ(y0) < 0.
                let scale = expand_geometric(0.5, 0.5, MAX_DOUBLINGS, |s| g(s - 1.0) > 0.0)?;
                brent(g, scale - 1.0, 0.0, tol)?
            }
            Regime::Subcritical => {
                let fold = self.fold()?;
                if lambda >= fold.nu * (1.0 - FOLD_BAND) {
                    return Err(Error::Regime(format!(
                        "λ = {lambda} is not below the fold value ν = {}",
                        fold.nu
                    )));
                }
                // g increases on (−1, t₂/t_lead − 1) and g(0) < 0.
                brent(g, 0.0, fold.t2 / t_lead - 1.0, tol)?
            }
        };
        Ok(PowerLawRoot { t_lead, offset })
    }
}

/// `log(log(1 + y) / y)`, accurate for small `y`.
fn ln_phi(y: f64) -> f64 {
    if y < 0.05 {
        // log(1+y)/y − 1 = Σ_{k≥1} (−y)^k / (k + 1)
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..60 {
            term *= -y;
            let next = term / (k as f64 + 1.0);
            sum += next;
            if next.abs() <= f64::EPSILON * 1e-3 * sum.abs() {
                break;
            }
        }
        sum.ln_1p()
    } else {
        (y.ln_1p() / y).ln()
    }
}

pub fn f(problem: &KirchhoffScalarProblem, t: f64) -> Result<f64> {
    problem.f(t)
}

pub fn g(problem: &KirchhoffScalarProblem, t: f64) -> Result<f64> {
    problem.g(t)
}

pub fn fold(problem: &KirchhoffScalarProblem) -> Result<Fold> {
    problem.fold()
}

pub fn solve_branch(problem: &KirchhoffScalarProblem, lambda: f64) -> Result<BranchResult> {
    problem.solve_branch(lambda)
}

pub fn amplitude(problem: &KirchhoffScalarProblem, t: f64) -> Result<f64> {
    problem.amplitude(t)
}
