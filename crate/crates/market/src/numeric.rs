//! Scalar root finding and line search used by the solvers.

use crate::error::{Error, Result};

/// Result of a bisection run.
#[derive(Debug, Clone, Copy)]
pub struct BisectionResult {
    pub x: f64,
    pub f_x: f64,
    pub iterations: usize,
    /// False when the initial interval did not bracket a sign change and the
    /// nearer boundary was returned instead.
    pub bracketed: bool,
}

/// Bisection for a strictly decreasing function `f` on `[lo, hi]`.
///
/// Runs until `|f(x)| < f_tol` or the interval collapses. When `f` has the
/// same sign at both ends, returns the boundary on the side the root would
/// lie beyond, flagged via `bracketed = false`.
pub fn bisect_decreasing(
    mut lo: f64,
    mut hi: f64,
    f_tol: f64,
    max_iter: usize,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<BisectionResult> {
    if !(lo < hi) {
        return Err(Error::Bracket(format!("empty interval [{lo}, {hi}]")));
    }
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if f_lo <= 0.0 {
        // Decreasing and already non-positive at the left end: root below lo.
        return Ok(BisectionResult {
            x: lo,
            f_x: f_lo,
            iterations: 0,
            bracketed: false,
        });
    }
    if f_hi >= 0.0 {
        return Ok(BisectionResult {
            x: hi,
            f_x: f_hi,
            iterations: 0,
            bracketed: false,
        });
    }
    let mut mid = 0.5 * (lo + hi);
    let mut f_mid = f(mid)?;
    let mut iterations = 1;
    while f_mid.abs() >= f_tol && iterations < max_iter {
        if f_mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        let next = 0.5 * (lo + hi);
        if next == mid {
            break; // interval exhausted at f64 resolution
        }
        mid = next;
        f_mid = f(mid)?;
        iterations += 1;
    }
    Ok(BisectionResult {
        x: mid,
        f_x: f_mid,
        iterations,
        bracketed: true,
    })
}

/// Bisection on a monotone predicate: returns the boundary point where
/// `pred` flips from true (at `lo`) to false (at `hi`), to within `x_tol`.
pub fn bisect_predicate(
    mut lo: f64,
    mut hi: f64,
    x_tol: f64,
    mut pred: impl FnMut(f64) -> Result<bool>,
) -> Result<f64> {
    if !pred(lo)? {
        return Err(Error::Bracket(format!("predicate already false at {lo}")));
    }
    if pred(hi)? {
        return Err(Error::Bracket(format!("predicate still true at {hi}")));
    }
    while hi - lo > x_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
///
/// Returns `(x, f(x), evaluations)` once the interval is below `x_tol`.
pub fn golden_section_max(
    mut a: f64,
    mut b: f64,
    x_tol: f64,
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64, usize)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    if !(a < b) {
        return Err(Error::Bracket(format!("empty interval [{a}, {b}]")));
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut f_c = f(c)?;
    let mut f_d = f(d)?;
    let mut evals = 2;
    while b - a > x_tol {
        if f_c > f_d {
            b = d;
            d = c;
            f_d = f_c;
            c = b - INV_PHI * (b - a);
            f_c = f(c)?;
        } else {
            a = c;
            c = d;
            f_c = f_d;
            d = a + INV_PHI * (b - a);
            f_d = f(d)?;
        }
        evals += 1;
        if c >= d {
            break; // f64 resolution reached
        }
    }
    let x = 0.5 * (a + b);
    let f_x = f(x)?;
    Ok((x, f_x, evals + 1))
}

/// Central finite difference with a relative step.
pub fn central_diff(x: f64, rel_step: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let h = x.abs().max(1.0) * rel_step;
    Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
}
