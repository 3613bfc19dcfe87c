//! Scalar root finding shared by the bound and envelope modules.

use crate::error::{Error, Result};

/// Positive root of `a x^2 + b x + c = 0` for `a >= 0`, `c <= 0`.
///
/// Uses whichever of the two algebraically equivalent forms avoids
/// cancellation for the sign of `b`; `a = 0` reduces to the linear solution.
pub(crate) fn positive_root(a: f64, b: f64, c: f64) -> f64 {
    debug_assert!(a >= 0.0 && c <= 0.0);
    let disc = b * b - 4.0 * a * c;
    assert!(disc >= 0.0, "discriminant must be nonnegative, got {disc}");
    let sq = disc.sqrt();
    if b >= 0.0 {
        if b + sq == 0.0 {
            return 0.0;
        }
        2.0 * (-c) / (b + sq)
    } else {
        (-b + sq) / (2.0 * a)
    }
}

/// Bisection on a sign-changing bracket, stopping once the bracket is
/// narrower than `tol`.
pub(crate) fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::Numerical(format!(
            "no sign change on bracket [{lo:e}, {hi:e}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::Numerical(format!(
        "bisection did not reach tolerance {tol:e}; final bracket [{lo:e}, {hi:e}]"
    )))
}
