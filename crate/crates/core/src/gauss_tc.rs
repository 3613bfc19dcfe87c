//! Additive Gaussian test channel `w_t = x_t + z_t`, `z_t ~ N(0, sigma_z2)`.
//!
//! The decoder MMSE with side information `D_t` and without it `D~_t` evolve as
//!
//! ```text
//! D_1 = sigma_v2 || sigma_n2 || sigma_z2,  D_{t+1} = sigma_n2 || sigma_z2 || (lambda^2 D_t + sigma_v2)
//! D~_0 = 0,                                D~_{t+1} = sigma_z2 || (lambda^2 D~_t + sigma_v2)
//! ```
//!
//! with per-step rates `R_1 = 1/2 log2(1 + sigma_v2/sigma_z2)` and
//! `R_t = 1/2 log2(lambda^2 + sigma_v2/D~_t)` for `t > 1`. Eliminating
//! `sigma_z2` gives a recursion directly in `(D_t, R_t)` that is used to sweep a
//! uniform distortion allocation.

use rayon::prelude::*;

use crate::bounds::BoundKind;
use crate::envelope::lower_convex_envelope;
use crate::error::{Error, Result};
use crate::model::{log_grid, parallel_sum, plog, stationary_mmse, RDCurve, RDPoint, ScenarioParams};

/// Per-step distortions and rates of the Gaussian test channel.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceState {
    /// Decoder MMSE given `(y^t, w^t)`.
    pub d: Vec<f64>,
    /// MMSE given `w^t` alone.
    pub d_tilde: Vec<f64>,
    /// Per-step rates in bits.
    pub rate: Vec<f64>,
    pub sigma_z2: f64,
}

impl TraceState {
    pub fn horizon(&self) -> usize {
        self.d.len()
    }

    pub fn average_distortion(&self) -> f64 {
        self.d.iter().sum::<f64>() / self.horizon() as f64
    }

    pub fn average_rate(&self) -> f64 {
        self.total_rate() / self.horizon() as f64
    }

    pub fn total_rate(&self) -> f64 {
        self.rate.iter().sum()
    }

    /// Exact per-step directed information `I(x^t; w_t | w^{t-1})`
    /// `= 1/2 log2((lambda^2 D~_{t-1} + sigma_v2) / D~_t)`.
    ///
    /// Summed over `t` this differs from [`TraceState::total_rate`] by the
    /// telescoping boundary term `1/2 log2((lambda^2 D~_1 + sigma_v2) / (lambda^2 D~_T + sigma_v2))`,
    /// which vanishes for `lambda = 0` and is `O(1/T)` after averaging.
    pub fn directed_info_steps(&self, params: &ScenarioParams) -> Vec<f64> {
        let l2 = params.lambda2();
        let mut prev = 0.0;
        self.d_tilde
            .iter()
            .map(|&dt| {
                let step = 0.5 * ((l2 * prev + params.sigma_v2) / dt).log2();
                prev = dt;
                step
            })
            .collect()
    }
}

fn check_sigma_z2(sigma_z2: f64) -> Result<()> {
    if sigma_z2 > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("sigma_z2 must be positive, got {sigma_z2}")))
    }
}

/// Runs both distortion recursions for `horizon` steps at fixed `sigma_z2`.
pub fn run_recursion(params: &ScenarioParams, sigma_z2: f64, horizon: usize) -> Result<TraceState> {
    params.validate()?;
    check_sigma_z2(sigma_z2)?;
    if horizon == 0 {
        return Err(Error::Config("horizon must be at least 1".into()));
    }
    let l2 = params.lambda2();
    let sv2 = params.sigma_v2;
    let obs = parallel_sum(params.sigma_n2, sigma_z2);

    let mut d = Vec::with_capacity(horizon);
    let mut d_tilde = Vec::with_capacity(horizon);
    let mut rate = Vec::with_capacity(horizon);
    let (mut dc, mut dtc) = (0.0, 0.0);
    for t in 0..horizon {
        dc = parallel_sum(obs, l2 * dc + sv2);
        dtc = parallel_sum(sigma_z2, l2 * dtc + sv2);
        let r = if t == 0 {
            0.5 * (1.0 + sv2 / sigma_z2).log2()
        } else {
            0.5 * plog(l2 + sv2 / dtc)?
        };
        d.push(dc);
        d_tilde.push(dtc);
        rate.push(r);
    }
    Ok(TraceState {
        d,
        d_tilde,
        rate,
        sigma_z2,
    })
}

/// Fixed point of both recursions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub d: f64,
    pub d_tilde: f64,
    pub rate: f64,
}

/// Steady state from the positive roots of
/// `lambda^2 D~^2 + [sigma_v2 + (1 - lambda^2) sigma_z2] D~ - sigma_v2 sigma_z2 = 0`
/// and the same quadratic with `sigma_z2` replaced by `sigma_z2 || sigma_n2`.
pub fn steady_state(params: &ScenarioParams, sigma_z2: f64) -> Result<SteadyState> {
    params.validate()?;
    check_sigma_z2(sigma_z2)?;
    let (lambda, sv2) = (params.lambda, params.sigma_v2);
    let d_tilde = stationary_mmse(lambda, sv2, sigma_z2);
    let d = stationary_mmse(lambda, sv2, parallel_sum(sigma_z2, params.sigma_n2));
    let rate = 0.5 * plog(params.lambda2() + sv2 / d_tilde)?;
    Ok(SteadyState { d, d_tilde, rate })
}

/// Channel noise variance consistent with consecutive rates:
/// `sigma_z2 = sigma_v2 / (2^{2 R_{t+1}} - 1 - lambda^2 (1 - 2^{-2 R_t}))`.
pub fn invert_sigma_z(r_next: f64, r_cur: f64, lambda: f64, sigma_v2: f64) -> Result<f64> {
    let den = (2.0 * r_next).exp2() - 1.0 - lambda * lambda * (1.0 - (-2.0 * r_cur).exp2());
    if den > 0.0 {
        Ok(sigma_v2 / den)
    } else {
        Err(Error::Infeasible {
            step: 0,
            reason: format!(
                "rate pair (R_t = {r_cur}, R_t+1 = {r_next}) needs denominator {den:e} <= 0"
            ),
        })
    }
}

/// Argument of the logarithm in the rate recursion
/// `R_{t+1} = 1/2 log2(sigma_v2/D_{t+1} - sigma_v2/sigma_n2 - sigma_v2/(lambda^2 D_t + sigma_v2) + lambda^2 (1 - 2^{-2 R_t}) + 1)`.
pub fn rate_recursion_argument(d_next: f64, d_cur: f64, r_cur: f64, params: &ScenarioParams) -> f64 {
    let sv2 = params.sigma_v2;
    let l2 = params.lambda2();
    sv2 / d_next - sv2 / params.sigma_n2 - sv2 / (l2 * d_cur + sv2)
        + l2 * (1.0 - (-2.0 * r_cur).exp2())
        + 1.0
}

/// Per-step rates for the uniform allocation `D_1 = ... = D_T = D`.
///
/// `R_1 = 1/2 plog(sigma_v2/D - sigma_v2/sigma_n2)`, later steps follow the
/// rate recursion; every step is clipped at zero before it feeds the next.
pub fn rate_recursion_uniform_d(d: f64, params: &ScenarioParams, horizon: usize) -> Result<Vec<f64>> {
    params.validate()?;
    if !(d > 0.0) {
        return Err(Error::Domain(format!("distortion must be positive, got {d}")));
    }
    let infeasible = |step: usize, arg: f64| Error::Infeasible {
        step,
        reason: format!("log argument {arg:e} <= 0 at D = {d}"),
    };
    let mut rates = Vec::with_capacity(horizon);
    let first = params.sigma_v2 / d - params.sigma_v2 / params.sigma_n2;
    if first <= 0.0 {
        return Err(infeasible(1, first));
    }
    let mut r = 0.5 * plog(first)?;
    rates.push(r);
    for step in 2..=horizon {
        let arg = rate_recursion_argument(d, d, r, params);
        if arg <= 0.0 {
            return Err(infeasible(step, arg));
        }
        r = 0.5 * plog(arg)?;
        rates.push(r);
    }
    Ok(rates)
}

/// How a Gaussian test-channel curve is parameterized.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepMode {
    /// One point per channel noise variance: `((1/T) sum D_t, (1/T) sum R_t)`.
    FixedSigmaZ(Vec<f64>),
    /// One point per distortion level with `D_t = D` for all `t`.
    UniformD(Vec<f64>),
}

/// 256 log-spaced distortions from `1e-4 sigma_v2` to the zero-rate
/// distortion of the two-sided CRDF.
pub fn default_distortion_grid(params: &ScenarioParams) -> Result<Vec<f64>> {
    let d_max = BoundKind::CausalTwoSided.zero_rate_distortion(params);
    if !d_max.is_finite() {
        return Err(Error::Config(
            "zero-rate distortion is infinite (|lambda| >= 1 without side information); give explicit grid bounds"
                .into(),
        ));
    }
    log_grid(1e-4 * params.sigma_v2, d_max, 256)
}

/// Raw (unconvexified) Gaussian test-channel curve. Infeasible grid points are
/// dropped and counted.
pub fn sweep_curve(params: &ScenarioParams, mode: &SweepMode) -> Result<RDCurve> {
    params.validate()?;
    let horizon = params.horizon;
    let evaluated: Vec<Option<RDPoint>> = match mode {
        SweepMode::FixedSigmaZ(grid) => grid
            .par_iter()
            .map(|&sz2| {
                run_recursion(params, sz2, horizon)
                    .ok()
                    .map(|tr| RDPoint::new(tr.average_distortion(), tr.average_rate()))
            })
            .collect(),
        SweepMode::UniformD(grid) => grid
            .par_iter()
            .map(|&d| {
                rate_recursion_uniform_d(d, params, horizon)
                    .ok()
                    .map(|r| RDPoint::new(d, r.iter().sum::<f64>() / horizon as f64))
            })
            .collect(),
    };
    if evaluated.is_empty() {
        return Err(Error::Config("empty sweep grid".into()));
    }
    let mut points: Vec<RDPoint> = evaluated.iter().flatten().copied().collect();
    points.sort_by(|a, b| a.distortion.total_cmp(&b.distortion));
    let before = points.len();
    points.dedup_by(|b, a| b.distortion <= a.distortion);
    let dropped = evaluated.len() - before + (before - points.len());
    Ok(RDCurve::new("gauss-tc", points)?.with_dropped(dropped))
}

/// Convex envelope of a raw Gaussian test-channel curve after appending the
/// zero-rate point (the two-sided prediction limit, i.e. time-sharing with `R = 0`).
pub fn convexified_curve(params: &ScenarioParams, raw: &RDCurve) -> Result<RDCurve> {
    let d_max = BoundKind::CausalTwoSided.zero_rate_distortion(params);
    let mut points: Vec<RDPoint> = raw
        .points()
        .iter()
        .copied()
        .filter(|p| p.distortion < d_max)
        .collect();
    points.push(RDPoint::new(d_max, 0.0));
    let with_zero = RDCurve::new(raw.label(), points)?.with_dropped(raw.dropped());
    Ok(lower_convex_envelope(&with_zero)?.with_label("gauss-tc-convexified"))
}
