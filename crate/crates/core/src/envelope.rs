//! Lower convex envelopes of sampled rate curves.
//!
//! Time-sharing between two operating points achieves every point on the
//! chord between them, so any achievable curve may be replaced by its
//! greatest convex minorant. For the Weissman-El Gamal function
//! `r(D) = 1/2 log2(sigma_v2/D - sigma_v2/sigma_n2)` with `sigma_n2 < sigma_v2`
//! the envelope leaves `r` at a tangency point `D_c` and follows a straight
//! line down to the zero-rate point `sigma_v2 || sigma_n2`.

use std::f64::consts::LN_2;

use crate::bounds::weissman_elgamal_upper_raw;
use crate::error::{Error, Result};
use crate::model::{parallel_sum, RDCurve, RDPoint};
use crate::roots::bisect;

/// Envelope of a curve together with its tangency and zero-rate points.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeResult {
    pub curve: RDCurve,
    /// Where the envelope leaves the raw curve for the final straight segment, if it does.
    pub d_c: Option<f64>,
    /// First distortion with zero rate.
    pub d_zero: f64,
}

/// Greatest convex minorant of the piecewise-linear interpolant of `curve`.
///
/// Returns the hull vertices; points lying strictly above a chord are
/// dropped, collinear points are kept.
pub fn lower_convex_envelope(curve: &RDCurve) -> Result<RDCurve> {
    let pts = curve.points();
    if pts.len() < 2 {
        return Err(Error::Domain(format!(
            "curve '{}' needs at least 2 points for an envelope, has {}",
            curve.label(),
            pts.len()
        )));
    }
    let mut hull: Vec<RDPoint> = Vec::with_capacity(pts.len());
    for &p in pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            if above_chord(a, b, p) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    RDCurve::new(curve.label(), hull)?
        .with_dropped(curve.dropped())
        .into_convexified()
        .map(|c| match curve.note() {
            Some(n) => c.with_note(n),
            None => c,
        })
}

/// Whether `b` lies strictly above the chord from `a` to `c`, beyond rounding.
fn above_chord(a: RDPoint, b: RDPoint, c: RDPoint) -> bool {
    let chord = a.rate + (c.rate - a.rate) * (b.distortion - a.distortion) / (c.distortion - a.distortion);
    let tol = 4.0 * f64::EPSILON * (a.rate.abs() + b.rate.abs() + c.rate.abs());
    b.rate > chord + tol
}

/// Tangency point `D_c` of the Weissman-El Gamal envelope.
///
/// Solves `r(D_c) = (D_c - D0) r'(D_c)` with `D0 = sigma_v2 || sigma_n2` by
/// bisection to 1e-12. `None` when `sigma_n2 >= sigma_v2`, where `r` is
/// already convex up to its zero-rate point.
pub fn solve_dc(sigma_v2: f64, sigma_n2: f64) -> Result<Option<f64>> {
    if !(sigma_v2 > 0.0 && sigma_n2 > 0.0) {
        return Err(Error::Domain(format!(
            "variances must be positive, got sigma_v2 = {sigma_v2}, sigma_n2 = {sigma_n2}"
        )));
    }
    if sigma_n2 >= sigma_v2 {
        return Ok(None);
    }
    let d0 = parallel_sum(sigma_v2, sigma_n2);
    let g = |d: f64| tangency_gap(d, d0, sigma_v2);

    let lo = d0 * 1e-9;
    let hi = (1..=52)
        .map(|j| d0 - d0 * 0.5f64.powi(j))
        .find(|&d| g(d) > 0.0)
        .ok_or_else(|| {
            Error::Numerical(format!(
                "no positive tangency gap found in ({lo:e}, {d0:e}); envelope bracket unavailable"
            ))
        })?;
    if g(lo) >= 0.0 {
        return Err(Error::Numerical(format!(
            "tangency gap nonnegative at lower bracket end {lo:e} (value {:e})",
            g(lo)
        )));
    }
    bisect(g, lo, hi, 1e-12).map(Some)
}

/// `2 ln2 * (r(D) + (D0 - D) r'(D))`, written in terms of `a = u - 1` with
/// `u = sigma_v2/D - sigma_v2/sigma_n2` so it stays accurate as `D -> D0`.
fn tangency_gap(d: f64, d0: f64, sigma_v2: f64) -> f64 {
    let eps = d0 - d;
    let a = sigma_v2 * eps / (d * d0);
    a.ln_1p() - a * d0 / (d * (1.0 + a))
}

/// Residual of the tangency equation `r(D) - (D - D0) r'(D)` in bits.
pub fn tangency_residual(d: f64, sigma_v2: f64, sigma_n2: f64) -> f64 {
    let d0 = parallel_sum(sigma_v2, sigma_n2);
    let u = sigma_v2 / d - sigma_v2 / sigma_n2;
    let r = 0.5 * u.log2();
    let dr = -(sigma_v2 / (d * d)) / (2.0 * LN_2 * u);
    r - (d - d0) * dr
}

/// Convex envelope of the clipped Weissman-El Gamal curve sampled on `grid`.
///
/// `D_c` (when present) and the zero-rate distortion are inserted into the
/// grid so the final segment is the exact tangent chord.
pub fn weissman_elgamal_envelope(
    sigma_v2: f64,
    sigma_n2: f64,
    grid: &[f64],
) -> Result<EnvelopeResult> {
    let d0 = parallel_sum(sigma_v2, sigma_n2);
    let d_c = solve_dc(sigma_v2, sigma_n2)?;
    let mut ds: Vec<f64> = grid.to_vec();
    ds.push(d0);
    ds.extend(d_c);
    ds.sort_by(f64::total_cmp);
    ds.dedup_by(|b, a| (*b - *a).abs() <= 1e-14 * a.abs());
    let points = ds
        .iter()
        .map(|&d| Ok(RDPoint::new(d, weissman_elgamal_upper_raw(d, sigma_v2, sigma_n2)?)))
        .collect::<Result<Vec<_>>>()?;
    let raw = RDCurve::new("we-upper", points)?;
    let curve = lower_convex_envelope(&raw)?;
    let d_zero = curve
        .points()
        .iter()
        .find(|p| p.rate <= 0.0)
        .map(|p| p.distortion)
        .unwrap_or(f64::INFINITY);
    Ok(EnvelopeResult { curve, d_c, d_zero })
}
