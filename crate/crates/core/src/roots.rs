//! Bracketed scalar root finding (Brent's method) and bracket expansion.

use crate::error::{Error, Result};

/// Stopping rule for [`brent`]: the bracket is accepted once its half-width
/// drops below `rtol * |x| + atol` (plus a few ulps of `x`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootTolerance {
    pub rtol: f64,
    pub atol: f64,
    pub max_iter: usize,
}

impl Default for RootTolerance {
    fn default() -> Self {
        Self { rtol: 1e-13, atol: 1e-14, max_iter: 200 }
    }
}

impl RootTolerance {
    pub fn relative(rtol: f64) -> Self {
        Self { rtol, ..Self::default() }
    }
}

/// Finds a zero of `f` in `[a, b]`, which must bracket a sign change.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: RootTolerance) -> Result<f64> {
    let fa = f(a);
    let fb = f(b);
    brent_with_values(f, a, fa, b, fb, tol)
}

/// Same as [`brent`] when `f(a)` and `f(b)` are already known.
pub fn brent_with_values<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut fa: f64,
    mut b: f64,
    mut fb: f64,
    tol: RootTolerance,
) -> Result<f64> {
    if fa.is_nan() || fb.is_nan() {
        return Err(Error::Convergence("NaN at bracket endpoint".into()));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::Convergence(format!(
            "no sign change on [{a}, {b}]: f = ({fa:e}, {fb:e})"
        )));
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..tol.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * (tol.rtol * b.abs() + tol.atol);
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Inverse quadratic interpolation, or secant when only two points are distinct.
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if fb.is_nan() {
            return Err(Error::Convergence(format!("NaN while iterating at x = {b}")));
        }
    }
    Err(Error::Convergence(format!(
        "Brent iteration budget ({}) exhausted near x = {b}",
        tol.max_iter
    )))
}

/// Multiplies (or divides) `start` by `factor` until `pred` holds, at most
/// `max_steps` times. Returns the first point satisfying the predicate.
pub fn expand_geometric<P: FnMut(f64) -> bool>(
    start: f64,
    factor: f64,
    max_steps: usize,
    mut pred: P,
) -> Result<f64> {
    let mut x = start;
    for _ in 0..=max_steps {
        if pred(x) {
            return Ok(x);
        }
        x *= factor;
        if !x.is_finite() || x == 0.0 {
            break;
        }
    }
    Err(Error::Convergence(format!(
        "bracket expansion from {start} by factor {factor} failed within {max_steps} steps"
    )))
}
