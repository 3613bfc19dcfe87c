//! Closed-form rate-distortion functions for the Gauss-Markov source.
//!
//! Batch (memoryless) functions:
//!
//! ```text
//! R(D)      = 1/2 plog(sigma_v2 / D)                          no side information
//! R^both(D) = 1/2 plog((sigma_v2 || sigma_n2) / D)            two-sided (= non-causal decoder SI)
//! r(D)      = 1/2 plog(sigma_v2 / D - sigma_v2 / sigma_n2)   causal decoder SI, before the convex envelope
//! ```
//!
//! Causal (information) CRDFs:
//!
//! ```text
//! R_c(D)      = 1/2 plog((lambda^2 D + sigma_v2) / D)
//! R_c^both(D) = 1/2 plog((sigma_n2 || (lambda^2 D + sigma_v2)) / D)
//! ```
//!
//! `R_c^both` also equals the Kostina-Hassibi CRDF with decoder side
//! information for Gaussian sources, so that bound is exposed as an alias. The
//! decoder-SI CRDF itself has no closed form; it is bracketed below by
//! [`crdf_two_sided`] and above by the achievable test-channel curves.

use crate::error::{Error, Result};
use crate::model::{parallel_sum, plog, stationary_mmse, RDCurve, RDPoint, ScenarioParams};

fn check_distortion(d: f64) -> Result<()> {
    if d > 0.0 && !d.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain(format!("distortion must be positive, got {d}")))
    }
}

/// Which closed-form bound to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    BatchNoSi,
    /// Two-sided SI; identical to the batch RDF with non-causal decoder SI.
    BatchTwoSided,
    CausalNoSi,
    /// Two-sided SI; identical to the Kostina-Hassibi decoder-SI CRDF.
    CausalTwoSided,
    /// Weissman-El Gamal function `r(D)` for causal decoder SI, without the envelope.
    CausalSiUpper,
}

impl BoundKind {
    pub const ALL: [BoundKind; 5] = [
        BoundKind::BatchNoSi,
        BoundKind::BatchTwoSided,
        BoundKind::CausalNoSi,
        BoundKind::CausalTwoSided,
        BoundKind::CausalSiUpper,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BoundKind::BatchNoSi => "batch-no-si",
            BoundKind::BatchTwoSided => "batch-two-sided",
            BoundKind::CausalNoSi => "no-si",
            BoundKind::CausalTwoSided => "two-sided",
            BoundKind::CausalSiUpper => "we-upper-raw",
        }
    }

    pub fn rate(self, d: f64, p: &ScenarioParams) -> Result<f64> {
        match self {
            BoundKind::BatchNoSi => batch_rdf_no_si(d, p.sigma_v2),
            BoundKind::BatchTwoSided => batch_rdf_two_sided(d, p.sigma_v2, p.sigma_n2),
            BoundKind::CausalNoSi => crdf_no_si(d, p.lambda, p.sigma_v2),
            BoundKind::CausalTwoSided => crdf_two_sided(d, p.lambda, p.sigma_v2, p.sigma_n2),
            BoundKind::CausalSiUpper => weissman_elgamal_upper_raw(d, p.sigma_v2, p.sigma_n2),
        }
    }

    /// Smallest distortion at which the rate reaches zero (may be infinite).
    pub fn zero_rate_distortion(self, p: &ScenarioParams) -> f64 {
        match self {
            BoundKind::BatchNoSi => p.sigma_v2,
            BoundKind::BatchTwoSided | BoundKind::CausalSiUpper => {
                parallel_sum(p.sigma_v2, p.sigma_n2)
            }
            BoundKind::CausalNoSi => stationary_mmse(p.lambda, p.sigma_v2, f64::INFINITY),
            BoundKind::CausalTwoSided => stationary_mmse(p.lambda, p.sigma_v2, p.sigma_n2),
        }
    }

    /// Samples the bound on `grid` (which must be strictly increasing and positive).
    pub fn curve(self, p: &ScenarioParams, grid: &[f64]) -> Result<RDCurve> {
        let points = grid
            .iter()
            .map(|&d| Ok(RDPoint::new(d, self.rate(d, p)?)))
            .collect::<Result<Vec<_>>>()?;
        RDCurve::new(self.label(), points)
    }
}

pub fn batch_rdf_no_si(d: f64, sigma_v2: f64) -> Result<f64> {
    check_distortion(d)?;
    Ok(0.5 * plog(sigma_v2 / d)?)
}

pub fn batch_rdf_two_sided(d: f64, sigma_v2: f64, sigma_n2: f64) -> Result<f64> {
    check_distortion(d)?;
    Ok(0.5 * plog(parallel_sum(sigma_v2, sigma_n2) / d)?)
}

/// `r(D) = 1/2 plog(sigma_v2/D - sigma_v2/sigma_n2)`; the convex envelope is
/// applied separately (see [`crate::envelope`]).
pub fn weissman_elgamal_upper_raw(d: f64, sigma_v2: f64, sigma_n2: f64) -> Result<f64> {
    check_distortion(d)?;
    let arg = sigma_v2 / d - sigma_v2 / sigma_n2;
    Ok(0.5 * plog(arg.max(0.0))?)
}

pub fn crdf_no_si(d: f64, lambda: f64, sigma_v2: f64) -> Result<f64> {
    check_distortion(d)?;
    Ok(0.5 * plog((lambda * lambda * d + sigma_v2) / d)?)
}

pub fn crdf_two_sided(d: f64, lambda: f64, sigma_v2: f64, sigma_n2: f64) -> Result<f64> {
    check_distortion(d)?;
    Ok(0.5 * plog(parallel_sum(sigma_n2, lambda * lambda * d + sigma_v2) / d)?)
}

/// Kostina-Hassibi decoder-SI CRDF; equal to [`crdf_two_sided`] for Gaussian sources.
pub fn crdf_kostina_hassibi(d: f64, lambda: f64, sigma_v2: f64, sigma_n2: f64) -> Result<f64> {
    crdf_two_sided(d, lambda, sigma_v2, sigma_n2)
}

/// Variance of the two-sided prediction error: `sigma_n2 || (lambda^2 D_prev + sigma_v2)`.
pub fn prediction_error_variance(d_prev: f64, p: &ScenarioParams) -> f64 {
    parallel_sum(p.sigma_n2, p.lambda2() * d_prev + p.sigma_v2)
}

/// Average two-sided rate of a finite-horizon distortion allocation
/// `D_1..D_T` (with `D_0 = 0`):
/// `(1/T) sum_t [1/2 log2(sigma_n2 || (lambda^2 D_{t-1} + sigma_v2)) - 1/2 log2 D_t]`.
///
/// The horizon is the allocation length.
pub fn crdf_two_sided_finite_horizon(allocation: &[f64], p: &ScenarioParams) -> Result<f64> {
    if allocation.is_empty() {
        return Err(Error::Config("empty distortion allocation".into()));
    }
    let mut prev = 0.0;
    let mut total = 0.0;
    for &d in allocation {
        check_distortion(d)?;
        total += 0.5 * (prediction_error_variance(prev, p) / d).log2();
        prev = d;
    }
    Ok(total / allocation.len() as f64)
}

/// Distortion at which `curve` attains `rate`.
///
/// Convexified curves are inverted on their piecewise-linear interpolant;
/// sampled smooth curves are interpolated linearly in `ln D`, which is exact
/// for the memoryless bounds. A flat zero-rate tail inverts to its left end.
pub fn invert_rdf(curve: &RDCurve, rate: f64) -> Result<f64> {
    let pts = curve.points();
    let (first, last) = match (pts.first(), pts.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::Config(format!("curve '{}' is empty", curve.label()))),
    };
    let (min, max) = (last.rate, first.rate);
    if !(rate >= min - 1e-12 && rate <= max + 1e-12) {
        return Err(Error::OutOfRange { rate, min, max });
    }
    let i = pts.partition_point(|p| p.rate > rate);
    if i == 0 {
        return Ok(first.distortion);
    }
    if i == pts.len() {
        return Ok(last.distortion);
    }
    let (a, b) = (pts[i - 1], pts[i]);
    if b.rate == rate {
        return Ok(b.distortion);
    }
    let t = (a.rate - rate) / (a.rate - b.rate);
    if curve.is_convexified() {
        Ok(a.distortion + t * (b.distortion - a.distortion))
    } else {
        let (la, lb) = (a.distortion.ln(), b.distortion.ln());
        Ok((la + t * (lb - la)).exp())
    }
}

/// The curves compared by [`check_inequality_chain`].
#[derive(Debug, Clone)]
pub struct ChainCurves<'a> {
    /// `R_c^both`, the lower bound for every decoder-SI curve.
    pub two_sided: &'a RDCurve,
    /// `R_c`, the no-SI CRDF.
    pub no_si: &'a RDCurve,
    /// Achievable decoder-SI curves (Gaussian / modulo test channels).
    pub achievable: Vec<&'a RDCurve>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainViolation {
    /// `"<lower> <= <upper>"`.
    pub relation: String,
    pub distortion: f64,
    pub lower_rate: f64,
    pub upper_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainReport {
    /// Number of pointwise comparisons performed.
    pub comparisons: usize,
    /// Smallest `upper - lower` seen over all comparisons.
    pub min_margin: f64,
    pub violations: Vec<ChainViolation>,
}

impl ChainReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first_violation(&self) -> Option<&ChainViolation> {
        self.violations.first()
    }
}

/// Slack used by the ordering checks.
pub const CHAIN_SLACK: f64 = 1e-9;

/// Checks pointwise, on the shared distortion grid, that
/// `two_sided <= no_si`, `two_sided <= achievable` and `achievable <= no_si`.
///
/// Every curve must be sampled on a subset of `grid` (a convexified curve
/// can be brought onto the grid with [`RDCurve::resample`]); comparisons are
/// made wherever both curves are defined.
pub fn check_inequality_chain(grid: &[f64], curves: &ChainCurves<'_>) -> Result<ChainReport> {
    let on_grid = |c: &RDCurve| -> Result<Vec<Option<f64>>> {
        let mut values = vec![None; grid.len()];
        for p in c.points() {
            let i = grid
                .iter()
                .position(|&g| (g - p.distortion).abs() <= 1e-12 * g.abs().max(p.distortion))
                .ok_or_else(|| {
                    Error::Config(format!(
                        "curve '{}' has distortion {} that is not on the comparison grid",
                        c.label(),
                        p.distortion
                    ))
                })?;
            values[i] = Some(p.rate);
        }
        Ok(values)
    };

    let two_sided = on_grid(curves.two_sided)?;
    let no_si = on_grid(curves.no_si)?;
    let mut pairs = vec![(curves.two_sided.label(), &two_sided, curves.no_si.label(), &no_si)];
    let achievable = curves
        .achievable
        .iter()
        .map(|c| Ok((c.label(), on_grid(c)?)))
        .collect::<Result<Vec<_>>>()?;
    for (label, values) in &achievable {
        pairs.push((curves.two_sided.label(), &two_sided, label, values));
        pairs.push((label, values, curves.no_si.label(), &no_si));
    }

    let mut report = ChainReport {
        comparisons: 0,
        min_margin: f64::INFINITY,
        violations: Vec::new(),
    };
    for (lower_label, lower, upper_label, upper) in pairs {
        for (i, &d) in grid.iter().enumerate() {
            if let (Some(lo), Some(up)) = (lower[i], upper[i]) {
                report.comparisons += 1;
                report.min_margin = report.min_margin.min(up - lo);
                if lo > up + CHAIN_SLACK {
                    report.violations.push(ChainViolation {
                        relation: format!("{lower_label} <= {upper_label}"),
                        distortion: d,
                        lower_rate: lo,
                        upper_rate: up,
                    });
                }
            }
        }
    }
    Ok(report)
}
