//! First-order asymptotic expansions of the solution branches, written as
//! `u ≈ leading · (1 + correction) · W_p`, and diagnostics comparing them with
//! exact branch data.
//!
//! Large-`λ` and lower-branch expansions come from `t → 0`, where
//! `f(t) ≈ d t^((3−p)/2)(1 − dt/2)`. Small-`λ` expansions of the unbounded
//! branches come from `t → ∞`, where `log(dt + 1) ≈ log t`, and carry a
//! `log log(1/λ) / log(1/λ)` correction. The critical near-threshold
//! expansion comes from `f(t) ≈ d − d²t/2 + d³t²/3`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar_map::{KirchhoffScalarProblem, Regime};

/// `|correction|` below this makes [`error_ratio`] meaningless.
pub const DEGENERATE_CORRECTION: f64 = 1e-15;
/// Fraction of `d‖W_3‖₂²` above which [`predict_critical`] uses the
/// near-threshold expansion.
pub const CRITICAL_SELECTION: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeTag {
    #[serde(rename = "P_gt3_large_lambda")]
    SupercriticalLarge,
    #[serde(rename = "P_gt3_small_lambda")]
    SupercriticalSmall,
    #[serde(rename = "P_lt3_lower_small_lambda")]
    SubcriticalLower,
    #[serde(rename = "P_lt3_upper_small_lambda")]
    SubcriticalUpper,
    #[serde(rename = "P_eq3_near_fold")]
    CriticalNearFold,
    #[serde(rename = "P_eq3_small_lambda")]
    CriticalSmall,
}

impl RegimeTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegimeTag::SupercriticalLarge => "P_gt3_large_lambda",
            RegimeTag::SupercriticalSmall => "P_gt3_small_lambda",
            RegimeTag::SubcriticalLower => "P_lt3_lower_small_lambda",
            RegimeTag::SubcriticalUpper => "P_lt3_upper_small_lambda",
            RegimeTag::CriticalNearFold => "P_eq3_near_fold",
            RegimeTag::CriticalSmall => "P_eq3_small_lambda",
        }
    }

    /// Whether the expansion describes the small-`t` root.
    fn is_power_law(&self) -> bool {
        matches!(self, RegimeTag::SupercriticalLarge | RegimeTag::SubcriticalLower)
    }
}

impl fmt::Display for RegimeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticPrediction {
    pub regime_tag: RegimeTag,
    pub lambda: f64,
    /// Predicted scale factor `c` in `u = c·W_p`.
    pub leading: f64,
    /// Relative first-order correction.
    pub correction: f64,
    pub with_correction: f64,
}

impl AsymptoticPrediction {
    fn new(regime_tag: RegimeTag, lambda: f64, leading: f64, correction: f64) -> Self {
        Self { regime_tag, lambda, leading, correction, with_correction: leading * (1.0 + correction) }
    }
}

fn require_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("λ must be positive, got {lambda}")))
    }
}

/// `log(1/λ)`, required to exceed 1 so that `log log(1/λ) > 0`.
fn log_inverse(lambda: f64) -> Result<f64> {
    let l = -lambda.ln();
    if l > 1.0 {
        Ok(l)
    } else {
        Err(Error::Regime(format!("small-λ expansion needs log(1/λ) > 1, got λ = {lambda}")))
    }
}

fn require_regime(problem: &KirchhoffScalarProblem, regime: Regime) -> Result<()> {
    if problem.regime() == regime {
        Ok(())
    } else {
        Err(Error::Regime(format!(
            "expansion is for the {regime} regime, p = {} is {}",
            problem.p,
            problem.regime()
        )))
    }
}

/// `t → 0` power law shared by the large-`λ` (p > 3) and lower-branch
/// (p < 3) expansions.
fn power_law(problem: &KirchhoffScalarProblem, lambda: f64, tag: RegimeTag) -> AsymptoticPrediction {
    let p = problem.p;
    let target = problem.target(lambda);
    let leading = (target / problem.d).powf(1.0 / (3.0 - p)) / problem.wp_l2;
    let correction = 1.0 / (2.0 * (3.0 - p))
        * problem.d.powf((p - 1.0) / (p - 3.0))
        * target.powf(2.0 / (3.0 - p));
    AsymptoticPrediction::new(tag, lambda, leading, correction)
}

/// `t → ∞` expansion shared by every unbounded branch; independent of `d`.
fn log_log(p: f64, lambda: f64, tag: RegimeTag) -> Result<AsymptoticPrediction> {
    let l = log_inverse(lambda)?;
    let e = 1.0 / (p - 1.0);
    let leading = (2.0 * e).powf(e) * lambda.powf(-e) * l.powf(e);
    let correction = e * l.ln() / l;
    Ok(AsymptoticPrediction::new(tag, lambda, leading, correction))
}

/// `p > 3`, `λ → ∞`.
pub fn predict_supercritical_large(
    problem: &KirchhoffScalarProblem,
    lambda: f64,
) -> Result<AsymptoticPrediction> {
    require_lambda(lambda)?;
    require_regime(problem, Regime::Supercritical)?;
    Ok(power_law(problem, lambda, RegimeTag::SupercriticalLarge))
}

/// `p > 3`, `λ → 0`.
pub fn predict_supercritical_small(
    problem: &KirchhoffScalarProblem,
    lambda: f64,
) -> Result<AsymptoticPrediction> {
    require_lambda(lambda)?;
    require_regime(problem, Regime::Supercritical)?;
    log_log(problem.p, lambda, RegimeTag::SupercriticalSmall)
}

/// `1 < p < 3`, `λ → 0`: the (lower, upper) pair.
pub fn predict_subcritical_pair(
    problem: &KirchhoffScalarProblem,
    lambda: f64,
) -> Result<(AsymptoticPrediction, AsymptoticPrediction)> {
    require_lambda(lambda)?;
    require_regime(problem, Regime::Subcritical)?;
    let nu = problem.fold()?.nu;
    if lambda >= nu {
        return Err(Error::Regime(format!("λ = {lambda} is not below the fold value ν = {nu}")));
    }
    let lower = power_law(problem, lambda, RegimeTag::SubcriticalLower);
    let upper = log_log(problem.p, lambda, RegimeTag::SubcriticalUpper)?;
    Ok((lower, upper))
}

fn critical_guard(problem: &KirchhoffScalarProblem, lambda: f64) -> Result<f64> {
    require_lambda(lambda)?;
    require_regime(problem, Regime::Critical)?;
    let threshold = problem.d * problem.wp_l2 * problem.wp_l2;
    if lambda >= threshold {
        return Err(Error::Regime(format!(
            "no solution for λ = {lambda} ≥ d‖W_3‖₂² = {threshold}"
        )));
    }
    Ok(threshold)
}

fn critical_near_fold(problem: &KirchhoffScalarProblem, lambda: f64) -> AsymptoticPrediction {
    let d = problem.d;
    let eps = d - problem.target(lambda);
    let leading = 2f64.sqrt() / d * eps.sqrt() / problem.wp_l2;
    // Second-order term of t = 2ε/d² (1 + 4ε/(3d) + …); coincides with the
    // published 2ε/3 at d = 1.
    let correction = 2.0 * eps / (3.0 * d);
    AsymptoticPrediction::new(RegimeTag::CriticalNearFold, lambda, leading, correction)
}

/// `p = 3`: near-threshold expansion when `λ > 0.5·d‖W_3‖₂²` (or when the
/// small-`λ` guard fails), small-`λ` expansion otherwise.
pub fn predict_critical(problem: &KirchhoffScalarProblem, lambda: f64) -> Result<AsymptoticPrediction> {
    let (near, small) = predict_critical_both(problem, lambda)?;
    let threshold = problem.d * problem.wp_l2 * problem.wp_l2;
    match small {
        Some(s) if lambda <= CRITICAL_SELECTION * threshold => Ok(s),
        _ => Ok(near),
    }
}

/// Both `p = 3` expansions; the small-`λ` one is `None` when
/// `log(1/λ) ≤ 1`.
pub fn predict_critical_both(
    problem: &KirchhoffScalarProblem,
    lambda: f64,
) -> Result<(AsymptoticPrediction, Option<AsymptoticPrediction>)> {
    critical_guard(problem, lambda)?;
    let near = critical_near_fold(problem, lambda);
    let small = log_log(3.0, lambda, RegimeTag::CriticalSmall).ok();
    Ok((near, small))
}

/// `(exact/leading − 1) / correction`; tends to 1 when the first-order
/// correction is right.
pub fn error_ratio(prediction: &AsymptoticPrediction, exact_scale: f64) -> Result<f64> {
    if !(exact_scale > 0.0) {
        return Err(Error::Domain(format!("exact scale must be positive, got {exact_scale}")));
    }
    error_ratio_from_offset(prediction, exact_scale / prediction.leading - 1.0)
}

/// As [`error_ratio`], given `exact/leading − 1` directly.
pub fn error_ratio_from_offset(prediction: &AsymptoticPrediction, offset: f64) -> Result<f64> {
    if prediction.correction.abs() < DEGENERATE_CORRECTION {
        return Err(Error::Degenerate(format!(
            "correction {:e} too small for a remainder ratio",
            prediction.correction
        )));
    }
    Ok(offset / prediction.correction)
}

/// The exact branch point matching `prediction`, as `exact/leading − 1`.
///
/// Power-law expansions use [`KirchhoffScalarProblem::power_law_offset`] so
/// that the offset keeps full relative precision even when it is far below
/// machine epsilon relative to 1.
pub fn exact_offset(problem: &KirchhoffScalarProblem, prediction: &AsymptoticPrediction) -> Result<f64> {
    if prediction.regime_tag.is_power_law() {
        let root = problem.power_law_offset(prediction.lambda)?;
        return Ok((0.5 * root.offset.ln_1p()).exp_m1());
    }
    let branch = problem.solve_branch(prediction.lambda)?;
    let t = *branch.roots.last().ok_or_else(|| {
        Error::Regime(format!("no branch point at λ = {}", prediction.lambda))
    })?;
    Ok(problem.amplitude(t)? / prediction.leading - 1.0)
}

/// One row of an exact-vs-asymptotic table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub regime_tag: RegimeTag,
    pub lambda: f64,
    pub exact: f64,
    pub leading: f64,
    pub with_correction: f64,
    /// `|exact/with_correction − 1|`.
    pub deviation: f64,
    pub error_ratio: Option<f64>,
}

pub fn compare(problem: &KirchhoffScalarProblem, prediction: &AsymptoticPrediction) -> Result<Comparison> {
    let offset = exact_offset(problem, prediction)?;
    let correction = prediction.correction;
    Ok(Comparison {
        regime_tag: prediction.regime_tag,
        lambda: prediction.lambda,
        exact: prediction.leading * (1.0 + offset),
        leading: prediction.leading,
        with_correction: prediction.with_correction,
        deviation: (offset - correction).abs() / (1.0 + correction).abs(),
        error_ratio: error_ratio_from_offset(prediction, offset).ok(),
    })
}

/// Leading term rebuilt from the predicted `t` as `√t / ‖W_p‖₂`.
pub fn leading_from_t(problem: &KirchhoffScalarProblem, tag: RegimeTag, lambda: f64) -> Result<f64> {
    let p = problem.p;
    let w = problem.wp_l2;
    let t = match tag {
        RegimeTag::SupercriticalLarge | RegimeTag::SubcriticalLower => {
            (problem.target(lambda) / problem.d).powf(2.0 / (3.0 - p))
        }
        RegimeTag::SupercriticalSmall | RegimeTag::SubcriticalUpper | RegimeTag::CriticalSmall => {
            let l = log_inverse(lambda)?;
            let c = (2.0 / (p - 1.0)).powf(2.0 / (p - 1.0)) * w * w;
            c * lambda.powf(-2.0 / (p - 1.0)) * l.powf(2.0 / (p - 1.0))
        }
        RegimeTag::CriticalNearFold => {
            let d = problem.d;
            2.0 / (d * d) * (d - problem.target(lambda))
        }
    };
    Ok(t.sqrt() / w)
}

#[cfg(test)]
mod tests {
    use super::*;

    const W5SQ: f64 = 1.813_799_364_234_217_9;
    const W2SQ: f64 = 66.164_418_920_526_813;
    const W3SQ: f64 = std::f64::consts::TAU;

    fn problem(p: f64, d: f64, w2: f64) -> KirchhoffScalarProblem {
        KirchhoffScalarProblem::with_norm(p, d, w2.sqrt()).unwrap()
    }

    #[test]
    fn supercritical_large_leading_and_sign() {
        let pr = problem(5.0, 1.0, W5SQ);
        let lambda = 1e6;
        let pred = predict_supercritical_large(&pr, lambda).unwrap();
        let w = W5SQ.sqrt();
        let expected = (lambda * w.powi(-4)).powf(-0.5) / w;
        assert!((pred.leading / expected - 1.0).abs() < 1e-14);
        assert!(pred.correction < 0.0);
        assert_eq!(pred.with_correction, pred.leading * (1.0 + pred.correction));
        let exact = pr.amplitude(pr.solve_branch(lambda).unwrap().roots[0]).unwrap();
        assert!((exact / pred.with_correction - 1.0).abs() < 1e-10);
    }

    #[test]
    fn supercritical_small_guard_and_closed_values() {
        let pr = problem(5.0, 1.0, W5SQ);
        let e = std::f64::consts::E;
        let pred = predict_supercritical_small(&pr, (-e).exp()).unwrap();
        assert!((pred.correction - 0.25 / e).abs() < 1e-15);
        assert!(matches!(predict_supercritical_small(&pr, 0.5), Err(Error::Regime(_))));
        let pr10 = problem(5.0, 10.0, W5SQ);
        assert_eq!(
            predict_supercritical_small(&pr, 1e-6).unwrap(),
            predict_supercritical_small(&pr10, 1e-6).unwrap()
        );
    }

    #[test]
    fn supercritical_small_bracket() {
        let pr = problem(5.0, 1.0, W5SQ);
        let pred = predict_supercritical_small(&pr, 1e-8).unwrap();
        let exact = pr.amplitude(pr.solve_branch(1e-8).unwrap().roots[0]).unwrap();
        let ratio = exact / pred.leading;
        assert!(ratio >= 1.0 && ratio <= 1.0 + 2.0 * pred.correction, "ratio {ratio}");
    }

    #[test]
    fn regime_errors() {
        let pr3 = problem(3.0, 1.0, W3SQ);
        let pr2 = problem(2.0, 1.0, W2SQ);
        assert!(matches!(predict_supercritical_large(&pr3, 1.0), Err(Error::Regime(_))));
        assert!(matches!(predict_supercritical_small(&pr2, 1e-3), Err(Error::Regime(_))));
        assert!(matches!(predict_subcritical_pair(&pr3, 1e-3), Err(Error::Regime(_))));
        assert!(matches!(predict_subcritical_pair(&pr2, 7.0), Err(Error::Regime(_))));
        assert!(matches!(predict_critical(&pr2, 1e-3), Err(Error::Regime(_))));
        assert!(matches!(predict_critical(&pr3, W3SQ), Err(Error::Regime(_))));
    }

    #[test]
    fn subcritical_lower_correction_scales_quadratically_at_p2() {
        let pr = problem(2.0, 1.0, W2SQ);
        let (a, _) = predict_subcritical_pair(&pr, 1e-6).unwrap();
        let (b, _) = predict_subcritical_pair(&pr, 1e-7).unwrap();
        assert!((a.correction / b.correction - 100.0).abs() < 1e-9);
        // 1/(3−p) = 1: leading = λ/(d‖W_2‖₂²)
        assert!((a.leading / (1e-6 / W2SQ) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn subcritical_pair_tracks_exact_roots() {
        let pr = problem(2.0, 1.0, W2SQ);
        let (lower, upper) = predict_subcritical_pair(&pr, 1e-6).unwrap();
        let roots = pr.solve_branch(1e-6).unwrap().roots;
        let exact_lower = pr.amplitude(roots[0]).unwrap();
        let exact_upper = pr.amplitude(roots[1]).unwrap();
        assert!((exact_lower / lower.leading - 1.0).abs() < 1e-12);
        assert!((exact_upper / upper.with_correction - 1.0).abs() < 0.25);
    }

    #[test]
    fn critical_near_fold_vanishes_at_threshold() {
        let pr = problem(3.0, 1.0, W3SQ);
        let mut last = f64::INFINITY;
        for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
            let pred = predict_critical(&pr, (1.0 - eps) * W3SQ).unwrap();
            assert_eq!(pred.regime_tag, RegimeTag::CriticalNearFold);
            assert!(pred.leading < last);
            last = pred.leading;
        }
        assert!(last < 1e-4);
    }

    #[test]
    fn critical_near_fold_ratio_trend_at_d1() {
        let pr = problem(3.0, 1.0, W3SQ);
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-3, 1e-4] {
            let pred = predict_critical(&pr, (1.0 - eps) * W3SQ).unwrap();
            let c = compare(&pr, &pred).unwrap();
            assert!(c.deviation < prev);
            prev = c.deviation;
            assert!((c.error_ratio.unwrap() - 1.0).abs() < 2.0 * eps);
        }
    }

    #[test]
    fn critical_near_fold_correction_carries_d() {
        // At d = 2 the published 2ε/3 would give error_ratio → 2.
        let pr = problem(3.0, 2.0, W3SQ);
        let eps = 1e-4;
        let pred = predict_critical(&pr, (2.0 - eps) * W3SQ).unwrap();
        let ratio = compare(&pr, &pred).unwrap().error_ratio.unwrap();
        assert!((ratio - 1.0).abs() < 1e-3, "ratio {ratio}");
    }

    #[test]
    fn critical_selection_rule() {
        let pr = problem(3.0, 1.0, W3SQ);
        assert_eq!(predict_critical(&pr, 1e-8).unwrap().regime_tag, RegimeTag::CriticalSmall);
        assert_eq!(predict_critical(&pr, 0.6 * W3SQ).unwrap().regime_tag, RegimeTag::CriticalNearFold);
        // 1/e < λ < 0.5 d‖W_3‖₂²: small-λ guard fails, near-fold is used
        assert_eq!(predict_critical(&pr, 1.0).unwrap().regime_tag, RegimeTag::CriticalNearFold);
        let (_, small) = predict_critical_both(&pr, 1.0).unwrap();
        assert!(small.is_none());
    }

    #[test]
    fn error_ratio_trivial_cases() {
        let pr = problem(5.0, 1.0, W5SQ);
        let pred = predict_supercritical_small(&pr, 1e-5).unwrap();
        assert!((error_ratio(&pred, pred.with_correction).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(error_ratio(&pred, pred.leading).unwrap(), 0.0);
        let flat = AsymptoticPrediction::new(RegimeTag::SupercriticalLarge, 1.0, 1.0, 1e-16);
        assert!(matches!(error_ratio(&flat, 1.0), Err(Error::Degenerate(_))));
        assert!(matches!(error_ratio(&pred, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn error_ratio_approaches_one_for_large_lambda() {
        let pr = problem(5.0, 1.0, W5SQ);
        let r6 = compare(&pr, &predict_supercritical_large(&pr, 1e6).unwrap()).unwrap();
        let r8 = compare(&pr, &predict_supercritical_large(&pr, 1e8).unwrap()).unwrap();
        let (a, b) = (r6.error_ratio.unwrap(), r8.error_ratio.unwrap());
        assert!((a - 1.0).abs() < 0.25 && (b - 1.0).abs() < (a - 1.0).abs());
    }

    #[test]
    fn leading_terms_agree_in_t_and_u_space() {
        let cases: Vec<(KirchhoffScalarProblem, AsymptoticPrediction)> = {
            let p5 = problem(5.0, 1.3, W5SQ);
            let p2 = problem(2.0, 0.7, W2SQ);
            let p3 = problem(3.0, 1.9, W3SQ);
            let (lo, up) = predict_subcritical_pair(&p2, 1e-4).unwrap();
            vec![
                (p5, predict_supercritical_large(&p5, 1e4).unwrap()),
                (p5, predict_supercritical_small(&p5, 1e-4).unwrap()),
                (p2, lo),
                (p2, up),
                (p3, predict_critical(&p3, 0.9 * 1.9 * W3SQ).unwrap()),
                (p3, predict_critical(&p3, 1e-4).unwrap()),
            ]
        };
        for (pr, pred) in cases {
            let from_t = leading_from_t(&pr, pred.regime_tag, pred.lambda).unwrap();
            assert!((from_t / pred.leading - 1.0).abs() < 1e-13, "{}", pred.regime_tag);
        }
    }
}
