//! Direct numerical solution of the nonlocal problem, independent of the
//! closed-form profile: shooting on the frozen-coefficient equation
//! `c·(−u'') = λ u^p` plus a fixed-point iteration on the coefficient.
//!
//! The frozen problem is integrated from `x = 0` with `u(0) = 0`,
//! `u'(0) = s` by classical fixed-step RK4, and `s` is adjusted until
//! `u(1) = 0`. Negative excursions use the odd extension `|u|^(p−1) u`.

use serde::{Deserialize, Serialize};

use crate::error::{check_exponent, Error, Result};
use crate::reduction::FullProblemParams;
use crate::roots::{brent_with_values, RootTolerance};
use crate::scalar_map::{KirchhoffScalarProblem, Regime};

pub const DEFAULT_GRID: usize = 4096;
pub const MIN_GRID: usize = 128;
pub const SHOOTING_TOL: f64 = 1e-10;
pub const BLOWUP_GUARD: f64 = 1e12;
const MAX_BRACKET_STEPS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub p: f64,
    pub lambda: f64,
    /// Frozen coefficient `H` the profile was shot with.
    pub coeff: f64,
    /// `u'(0)`.
    pub slope0: f64,
    /// `u` on the uniform grid `x_i = i/(N−1)`.
    pub u: Vec<f64>,
    /// `u'` on the same grid.
    pub du: Vec<f64>,
    /// `‖u‖₂²`, composite Simpson.
    pub l2_sq: f64,
    /// `‖u'‖₂²`, composite Simpson.
    pub grad_l2_sq: f64,
    /// Grid maximum refined by cubic Hermite interpolation.
    pub sup_norm: f64,
    /// `|u(1)|` after shooting.
    pub residual: f64,
}

impl OracleSolution {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / (self.u.len() - 1) as f64
    }

    pub fn grid(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.u.iter().enumerate().map(|(i, &u)| (self.x(i), u))
    }

    /// `c u'²/2 + λ |u|^(p+1)/(p+1)` at grid point `i`; constant along exact
    /// trajectories.
    pub fn energy(&self, i: usize) -> f64 {
        let u = self.u[i];
        0.5 * self.coeff * self.du[i] * self.du[i]
            + self.lambda / (self.p + 1.0) * u.abs().powf(self.p + 1.0)
    }

    /// `max_i |u(x_i) − u(1 − x_i)|`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.u.len();
        (0..n / 2).map(|i| (self.u[i] - self.u[n - 1 - i]).abs()).fold(0.0, f64::max)
    }
}

/// Frozen-coefficient right-hand side `u'' = −k |u|^(p−1) u`.
#[derive(Debug, Clone, Copy)]
struct Frozen {
    k: f64,
    p: f64,
}

impl Frozen {
    fn accel(&self, u: f64) -> f64 {
        -self.k * u.abs().powf(self.p - 1.0) * u
    }

    fn step(&self, u: f64, v: f64, h: f64) -> (f64, f64) {
        let k1u = v;
        let k1v = self.accel(u);
        let k2u = v + 0.5 * h * k1v;
        let k2v = self.accel(u + 0.5 * h * k1u);
        let k3u = v + 0.5 * h * k2v;
        let k3v = self.accel(u + 0.5 * h * k2u);
        let k4u = v + h * k3v;
        let k4v = self.accel(u + h * k3u);
        (
            u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
            v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        )
    }
}

/// Outcome of one shot: endpoint value and whether `u` changed sign inside.
#[derive(Debug, Clone, Copy)]
struct Shot {
    end: f64,
    crossed: bool,
    peak: f64,
}

fn fire(sys: Frozen, slope: f64, n: usize, mut record: Option<(&mut Vec<f64>, &mut Vec<f64>)>) -> Result<Shot> {
    let h = 1.0 / (n - 1) as f64;
    let (mut u, mut v) = (0.0, slope);
    let mut crossed = false;
    let mut peak: f64 = 0.0;
    if let Some((us, vs)) = record.as_mut() {
        us.push(u);
        vs.push(v);
    }
    for _ in 1..n {
        (u, v) = sys.step(u, v, h);
        if !(u.abs() <= BLOWUP_GUARD && v.abs() <= BLOWUP_GUARD) {
            return Err(Error::Blowup(format!("|u| or |u'| exceeded {BLOWUP_GUARD:e} (slope {slope:e})")));
        }
        peak = peak.max(u.abs());
        if let Some((us, vs)) = record.as_mut() {
            us.push(u);
            vs.push(v);
        } else if u < 0.0 {
            crossed = true;
            break;
        }
        crossed |= u < 0.0;
    }
    Ok(Shot { end: u, crossed, peak })
}

/// Shoots `c·(−u'') = λ u^p`, `u(0) = u(1) = 0` on an `n`-point grid.
pub fn shoot_frozen(c: f64, lambda: f64, p: f64, n: usize) -> Result<OracleSolution> {
    shoot_frozen_from(c, lambda, p, n, 1.0)
}

/// As [`shoot_frozen`], starting the slope search at `slope_hint`.
pub fn shoot_frozen_from(c: f64, lambda: f64, p: f64, n: usize, slope_hint: f64) -> Result<OracleSolution> {
    check_exponent(p)?;
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Domain(format!("frozen coefficient must be positive, got {c}")));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Domain(format!("λ must be positive, got {lambda}")));
    }
    if n < MIN_GRID {
        return Err(Error::Domain(format!("grid needs at least {MIN_GRID} points, got {n}")));
    }
    let sys = Frozen { k: lambda / c, p };
    let hint = if slope_hint.is_finite() && slope_hint > 0.0 { slope_hint } else { 1.0 };

    // A slope is "short" when u stays positive on (0, 1]. Half-periods scale
    // like s^(−(p−1)/(p+1)), so doubling a short slope overshoots by at most
    // one zero and [short, 2·short] brackets the root with a sign change.
    let short = |s: f64| -> Result<(bool, Shot)> {
        let shot = fire(sys, s, n, None)?;
        Ok((!shot.crossed && shot.end > 0.0, shot))
    };
    let (mut lo, mut hi);
    let (first_short, first) = short(hint)?;
    let (mut f_lo, mut f_hi);
    if first_short {
        lo = hint;
        f_lo = first.end;
        let mut steps = 0;
        loop {
            hi = 2.0 * lo;
            let (is_short, shot) = short(hi)?;
            if !is_short {
                f_hi = shot.end;
                break;
            }
            lo = hi;
            f_lo = shot.end;
            steps += 1;
            if steps > MAX_BRACKET_STEPS {
                return Err(Error::Convergence("slope bracket expansion failed".into()));
            }
        }
    } else {
        hi = hint;
        f_hi = first.end;
        let mut steps = 0;
        loop {
            lo = 0.5 * hi;
            let (is_short, shot) = short(lo)?;
            if is_short {
                f_lo = shot.end;
                break;
            }
            hi = lo;
            f_hi = shot.end;
            steps += 1;
            if steps > MAX_BRACKET_STEPS {
                return Err(Error::Convergence("slope bracket contraction failed".into()));
            }
        }
    }
    // The upper slope crossed zero once; a later crossing makes the endpoint
    // positive again, so retreat until it is non-positive.
    while f_hi > 0.0 {
        hi = 0.5 * (lo + hi);
        let shot = fire(sys, hi, n, None)?;
        if !shot.crossed && shot.end > 0.0 {
            lo = hi;
            f_lo = shot.end;
            hi *= 2.0;
            f_hi = fire(sys, hi, n, None)?.end;
            if f_hi > 0.0 {
                return Err(Error::Convergence("could not isolate a single-hump shot".into()));
            }
            break;
        }
        f_hi = shot.end;
    }

    let mut failure = None;
    let tol = RootTolerance { rtol: 4.0 * f64::EPSILON, atol: 0.0, max_iter: 200 };
    let slope = brent_with_values(
        |s| {
            let mut us = Vec::new();
            let mut vs = Vec::new();
            match fire(sys, s, n, Some((&mut us, &mut vs))) {
                Ok(shot) => shot.end,
                Err(e) => {
                    failure = Some(e);
                    f64::NAN
                }
            }
        },
        lo,
        f_lo,
        hi,
        f_hi,
        tol,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let slope = slope?;

    let mut u = Vec::with_capacity(n);
    let mut du = Vec::with_capacity(n);
    let shot = fire(sys, slope, n, Some((&mut u, &mut du)))?;
    let residual = shot.end.abs();
    if residual > SHOOTING_TOL * shot.peak.max(1.0) {
        return Err(Error::Convergence(format!(
            "shooting residual |u(1)| = {residual:e} above tolerance"
        )));
    }
    if u[1..n - 1].iter().any(|&x| x <= 0.0) {
        return Err(Error::Convergence("shot profile is not positive inside (0, 1)".into()));
    }
    let h = 1.0 / (n - 1) as f64;
    let l2_sq = simpson(&u.iter().map(|x| x * x).collect::<Vec<_>>(), h);
    let grad_l2_sq = simpson(&du.iter().map(|x| x * x).collect::<Vec<_>>(), h);
    let sup_norm = hermite_peak(&u, &du, h);
    Ok(OracleSolution { p, lambda, coeff: c, slope0: slope, u, du, l2_sq, grad_l2_sq, sup_norm, residual })
}

/// Composite Simpson on a uniform grid, closed with a 3/8 panel when the
/// number of intervals is odd.
pub fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len() - 1;
    assert!(n >= 2, "Simpson needs at least three samples");
    let simpson_end = if n.is_multiple_of(2) { n } else { n - 3 };
    let mut sum = 0.0;
    let mut i = 0;
    while i < simpson_end {
        sum += h / 3.0 * (y[i] + 4.0 * y[i + 1] + y[i + 2]);
        i += 2;
    }
    if simpson_end < n {
        let j = simpson_end;
        sum += 3.0 * h / 8.0 * (y[j] + 3.0 * y[j + 1] + 3.0 * y[j + 2] + y[j + 3]);
    }
    sum
}

/// Maximum of the piecewise cubic Hermite interpolant around the grid peak.
fn hermite_peak(u: &[f64], du: &[f64], h: f64) -> f64 {
    let (imax, &umax) = u
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    let mut best = umax;
    for j in [imax.saturating_sub(1), imax] {
        if j + 1 >= u.len() || !(du[j] >= 0.0 && du[j + 1] <= 0.0) {
            continue;
        }
        let (u0, u1, d0, d1) = (u[j], u[j + 1], h * du[j], h * du[j + 1]);
        let a2 = 3.0 * (u1 - u0) - (2.0 * d0 + d1);
        let a3 = 2.0 * (u0 - u1) + d0 + d1;
        let slope = |t: f64| d0 + 2.0 * a2 * t + 3.0 * a3 * t * t;
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        best = best.max(u0 + d0 * t + a2 * t * t + a3 * t * t * t);
    }
    best
}

/// Which nonlocal coefficient the fixed-point iteration uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NonlocalParams {
    /// `log(d‖u‖₂² + 1)`.
    Reduced { d: f64, p: f64 },
    /// `log(a‖u'‖₂² + b‖u‖₂² + 1)`.
    Full(FullProblemParams),
}

impl NonlocalParams {
    pub fn p(&self) -> f64 {
        match self {
            NonlocalParams::Reduced { p, .. } => *p,
            NonlocalParams::Full(full) => full.p,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            NonlocalParams::Reduced { d, p } => {
                check_exponent(*p)?;
                if !(d.is_finite() && *d > 0.0) {
                    return Err(Error::Domain(format!("d must be positive, got {d}")));
                }
                Ok(())
            }
            NonlocalParams::Full(full) => full.validate(),
        }
    }

    /// Coefficient induced by a shot profile.
    pub fn coefficient_of(&self, sol: &OracleSolution) -> f64 {
        match self {
            NonlocalParams::Reduced { d, .. } => (d * sol.l2_sq).ln_1p(),
            NonlocalParams::Full(full) => (full.a * sol.grad_l2_sq + full.b * sol.l2_sq).ln_1p(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointConfig {
    /// Stop once the relative change in `t = ‖u‖₂²` is below this.
    pub tol: f64,
    /// Damping `θ ∈ (0, 1]` in `log H ← (1−θ) log H + θ log Ψ(H)`.
    pub damping: f64,
    pub max_iter: usize,
    pub grid_n: usize,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self { tol: 1e-10, damping: 0.5, max_iter: 200, grid_n: DEFAULT_GRID }
    }
}

/// Iterates the coefficient map until `H = log(d‖u_H‖₂² + 1)` (or its
/// `(a, b)` analogue), starting from `‖u‖₂² ≈ t_init`.
///
/// Damped steps are taken in `log H` and extrapolated with Aitken's Δ²
/// every two steps. The extrapolation converges to repelling fixed points
/// as well, which the lower subcritical solution is.
pub fn solve_nonlocal(
    params: &NonlocalParams,
    lambda: f64,
    t_init: f64,
    config: &FixedPointConfig,
) -> Result<OracleSolution> {
    let (mut state, x0) = prepare(params, lambda, t_init, config)?;
    let p = params.p();
    let theta = config.damping;
    let mut x = x0;
    let mut theta_now = theta;
    let mut prev_residual = 0.0;
    let mut boost: f64 = 1.0;
    for _ in 0..config.max_iter {
        let (sol, mapped) = state.map(x)?;
        let residual = mapped - x;
        // t ∝ H^(2/(p−1)) for fixed λ, so this is the relative step in t.
        let t_change = (2.0 / (p - 1.0) * residual).exp_m1().abs();
        if t_change <= config.tol {
            return finish(params, sol, config.tol);
        }
        if sol.l2_sq < COLLAPSE_T {
            return Err(no_solution(lambda));
        }
        // Halve the damping when the plain iteration starts to oscillate.
        if residual * prev_residual < 0.0 && theta_now > 1e-3 {
            theta_now *= 0.5;
        }
        prev_residual = residual;
        let x1 = x + theta_now * residual;
        let (_, mapped1) = state.map(x1)?;
        let x2 = x1 + theta_now * (mapped1 - x1);
        let denom = x2 - 2.0 * x1 + x;
        let aitken = x - (x1 - x) * (x1 - x) / denom;
        if denom.abs() > 1e-6 * (x1 - x).abs() && aitken.is_finite() {
            x = aitken;
            boost = 1.0;
        } else {
            // No measurable curvature: the map is a pure drift, so lengthen
            // the stride until the iterates either turn or collapse.
            boost = (2.0 * boost).min(1e6);
            x = x2 + boost * (x2 - x);
        }
        if x < COLLAPSE_LOG_H {
            return Err(no_solution(lambda));
        }
        if x > 700.0 {
            return Err(Error::Convergence("coefficient iterates diverged to +∞".into()));
        }
    }
    Err(Error::Convergence(format!(
        "fixed-point iteration did not converge in {} cycles",
        config.max_iter
    )))
}

/// Checks the inputs and returns the evaluator with the starting `log H`.
fn prepare(
    params: &NonlocalParams,
    lambda: f64,
    t_init: f64,
    config: &FixedPointConfig,
) -> Result<(Evaluator, f64)> {
    params.validate()?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Domain(format!("λ must be positive, got {lambda}")));
    }
    if !(t_init.is_finite() && t_init > 0.0) {
        return Err(Error::Domain(format!("t_init must be positive, got {t_init}")));
    }
    if !(config.tol > 0.0 && config.damping > 0.0 && config.damping <= 1.0) {
        return Err(Error::Domain("fixed-point tolerance and damping must be positive, damping ≤ 1".into()));
    }
    let mut state =
        Evaluator { params: *params, lambda, p: params.p(), n: config.grid_n, slope_hint: 1.0, last_coeff: None };
    let h0 = match params {
        NonlocalParams::Reduced { d, .. } => (d * t_init).ln_1p(),
        NonlocalParams::Full(full) => {
            // Gradient-to-mass ratio from a probe shot.
            let probe = state.shoot(1.0)?;
            let ratio = probe.grad_l2_sq / probe.l2_sq;
            ((full.a * ratio + full.b) * t_init).ln_1p()
        }
    };
    Ok((state, h0.ln()))
}

/// Scan stride in `log H`.
const SCAN_STEP: f64 = std::f64::consts::LN_2;

/// Walks `log H` away from `t_init` (downward or upward) until the residual
/// `log Ψ(H) − log H` changes sign, then polishes the root with Brent.
/// Roots whose `‖u‖₂²` matches an entry of `exclude` (relative `1e−6`) are
/// skipped and the walk continues.
///
/// Unlike [`solve_nonlocal`] this does not care whether the fixed point
/// attracts or repels.
pub fn solve_nonlocal_scan(
    params: &NonlocalParams,
    lambda: f64,
    t_init: f64,
    downward: bool,
    exclude: &[f64],
    config: &FixedPointConfig,
) -> Result<OracleSolution> {
    let (mut state, mut x) = prepare(params, lambda, t_init, config)?;
    let step = if downward { -SCAN_STEP } else { SCAN_STEP };
    let (_, mapped) = state.map(x)?;
    let mut r = mapped - x;
    // δ(log H) maps to a relative change 2/(p−1)·δ in t.
    let atol = 0.1 * config.tol * (0.5 * (params.p() - 1.0)).min(1.0);
    let tol = RootTolerance { rtol: 0.0, atol, max_iter: 200 };
    loop {
        let x_next = x + step;
        if x_next < COLLAPSE_LOG_H {
            return Err(no_solution(lambda));
        }
        if x_next > 700.0 {
            return Err(Error::Convergence("scan left the representable coefficient range".into()));
        }
        let (sol_next, mapped_next) = state.map(x_next)?;
        if sol_next.l2_sq < COLLAPSE_T {
            return Err(no_solution(lambda));
        }
        let r_next = mapped_next - x_next;
        if r * r_next <= 0.0 {
            let mut failure = None;
            let root = brent_with_values(
                |y| match state.map(y) {
                    Ok((_, m)) => m - y,
                    Err(e) => {
                        failure = Some(e);
                        f64::NAN
                    }
                },
                x,
                r,
                x_next,
                r_next,
                tol,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            let (sol, _) = state.map(root?)?;
            if !exclude.iter().any(|&t| (sol.l2_sq / t - 1.0).abs() < 1e-6) {
                return finish(params, sol, config.tol);
            }
        }
        x = x_next;
        r = r_next;
    }
}

/// `log H` below this means the iterates are collapsing onto `u ≡ 0`.
const COLLAPSE_LOG_H: f64 = -460.0;
/// `‖u‖₂²` below this counts as collapse.
const COLLAPSE_T: f64 = 1e-200;

fn no_solution(lambda: f64) -> Error {
    Error::Regime(format!(
        "no solution at λ = {lambda}: coefficient iterates collapse to u ≡ 0 (consistent with nonexistence)"
    ))
}

fn finish(params: &NonlocalParams, sol: OracleSolution, tol: f64) -> Result<OracleSolution> {
    let induced = params.coefficient_of(&sol);
    if (induced.ln() - sol.coeff.ln()).abs() > tol {
        return Err(Error::Convergence(format!(
            "fixed point mismatch: H = {}, induced {induced}",
            sol.coeff
        )));
    }
    Ok(sol)
}

struct Evaluator {
    params: NonlocalParams,
    lambda: f64,
    p: f64,
    n: usize,
    slope_hint: f64,
    last_coeff: Option<f64>,
}

impl Evaluator {
    fn shoot(&mut self, coeff: f64) -> Result<OracleSolution> {
        // Frozen solutions scale like (λ/H)^(−1/(p−1)); carry the last slope over.
        let hint = match self.last_coeff {
            Some(prev) => self.slope_hint * (coeff / prev).powf(1.0 / (self.p - 1.0)),
            None => self.slope_hint,
        };
        let sol = shoot_frozen_from(coeff, self.lambda, self.p, self.n, hint)?;
        self.slope_hint = sol.slope0;
        self.last_coeff = Some(coeff);
        Ok(sol)
    }

    /// Returns the shot at `H = e^x` and `log Ψ(H)`.
    fn map(&mut self, x: f64) -> Result<(OracleSolution, f64)> {
        let sol = self.shoot(x.exp())?;
        let induced = self.params.coefficient_of(&sol);
        if !(induced > 0.0) {
            return Err(no_solution(self.lambda));
        }
        Ok((sol, induced.ln()))
    }
}

/// Runs [`solve_nonlocal`] from several starts and keeps the distinct
/// solutions (by `‖u‖₂²`, relative separation `1e−6`), sorted ascending.
///
/// A start whose iteration fails or lands on a solution already found is
/// retried with [`solve_nonlocal_scan`], walking away from where the
/// iteration went. This recovers repelling fixed points that sit far from
/// every start.
pub fn solve_multistart(
    params: &NonlocalParams,
    lambda: f64,
    starts: &[f64],
    config: &FixedPointConfig,
) -> Result<Vec<OracleSolution>> {
    let mut found: Vec<OracleSolution> = Vec::new();
    let mut last_err = None;
    let known = |found: &[OracleSolution], t: f64| found.iter().any(|s| (s.l2_sq / t - 1.0).abs() < 1e-6);
    for &t0 in starts {
        let downward = match solve_nonlocal(params, lambda, t0, config) {
            Ok(sol) if !known(&found, sol.l2_sq) => {
                found.push(sol);
                continue;
            }
            Ok(sol) => sol.l2_sq > t0,
            Err(e) => {
                last_err = Some(e);
                true
            }
        };
        let exclude: Vec<f64> = found.iter().map(|s| s.l2_sq).collect();
        match solve_nonlocal_scan(params, lambda, t0, downward, &exclude, config) {
            Ok(sol) if !known(&found, sol.l2_sq) => found.push(sol),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    if found.is_empty() {
        return Err(last_err.unwrap_or_else(|| Error::Domain("no starting points".into())));
    }
    found.sort_by(|a, b| a.l2_sq.total_cmp(&b.l2_sq));
    Ok(found)
}

/// Starting values of `t`: `{t₂/10, 10·t₂}` around the fold for `p < 3`,
/// `{1}` otherwise. `t₂` depends only on `(d, p)`.
pub fn default_starts(d: f64, p: f64) -> Result<Vec<f64>> {
    if Regime::of(p) == Regime::Subcritical {
        // ‖W_p‖₂ does not enter t₂; any positive norm will do.
        let t2 = KirchhoffScalarProblem::with_norm(p, d, 1.0)?.fold()?.t2;
        Ok(vec![0.1 * t2, 10.0 * t2])
    } else {
        Ok(vec![1.0])
    }
}
