//! One-dimensional modulo test channel
//! `w = alpha * [x]_delta + beta * (x - [x]_delta) + z`.
//!
//! On each quantizer cell `[delta (k - 1/2), delta (k + 1/2))` the map is
//! affine, `g(x) = alpha x + (beta - alpha) k delta`, so every cell contributes
//! a Gaussian-times-interval-probability term to the output density and to
//! the posterior mean. All x-integrals are therefore closed form; only the
//! integrals over `w` (trapezoid) and over the side information `y`
//! (trapezoid by default, Gauss-Hermite optional) are numerical.

use std::f64::consts::{E, PI, SQRT_2};
use std::num::NonZero;

use gauss_quad::GaussHermite;
use rayon::prelude::*;

use crate::bounds::BoundKind;
use crate::envelope::lower_convex_envelope;
use crate::error::{Error, Result};
use crate::model::{log_grid, RDCurve, RDPoint, ScenarioParams};

/// Label suffix of curves computed under the steady-state approximation.
pub const STEADY_STATE_NOTE: &str = "steady-state approximation";

/// Centered modulo in `[-delta/2, delta/2)`.
pub fn centered_mod(x: f64, delta: f64) -> f64 {
    x - cell_center(quantize_index(x, delta), delta)
}

/// Index `k` of the cell `[delta (k - 1/2), delta (k + 1/2))` containing `x`.
///
/// Rounding is half away from zero, except that `-delta/2` (and every other
/// lower cell boundary) belongs to the cell above it.
pub fn quantize_index(x: f64, delta: f64) -> i64 {
    if !delta.is_finite() {
        return 0;
    }
    let mut k = (x / delta).round();
    let r = x - k * delta;
    if r >= 0.5 * delta {
        k += 1.0;
    } else if r < -0.5 * delta {
        k -= 1.0;
    }
    k as i64
}

fn cell_center(k: i64, delta: f64) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * delta
    }
}

/// Parameters of one modulo mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuloMapParams {
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub sigma_z2: f64,
    pub sigma_x2: f64,
}

impl ModuloMapParams {
    /// Builds a power-preserving map by fitting `beta`.
    pub fn fitted(delta: f64, alpha: f64, sigma_z2: f64, sigma_x2: f64) -> Result<Self> {
        let beta = fit_beta(delta, alpha, sigma_x2)?;
        Ok(Self { delta, alpha, beta, sigma_z2, sigma_x2 })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::Domain(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.sigma_x2 > 0.0 && self.sigma_x2.is_finite()) {
            return Err(Error::Domain(format!("sigma_x2 must be positive and finite, got {}", self.sigma_x2)));
        }
        if !(self.sigma_z2 > 0.0 && self.sigma_z2.is_finite()) {
            return Err(Error::Domain(format!("sigma_z2 must be positive and finite, got {}", self.sigma_z2)));
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::Domain("alpha and beta must be finite".into()));
        }
        Ok(())
    }

    /// `E[(w - z)^2]` under the Gaussian input.
    pub fn output_power(&self) -> f64 {
        let m = cell_moments(self.delta, self.sigma_x2);
        self.alpha * self.alpha * m.mm + self.beta * self.beta * m.qq + 2.0 * self.alpha * self.beta * m.mq
    }

    /// Noise-free channel input `alpha [x] + beta (x - [x])`.
    pub fn apply(&self, x: f64) -> f64 {
        let q = cell_center(quantize_index(x, self.delta), self.delta);
        self.alpha * (x - q) + self.beta * q
    }
}

/// Second moments of `m(x) = [x]_delta` and `q(x) = x - m(x)` for `x ~ N(0, sigma_x2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMoments {
    pub mm: f64,
    pub qq: f64,
    pub mq: f64,
}

/// Exact moments from truncated-Gaussian integrals over each cell.
pub fn cell_moments(delta: f64, sigma_x2: f64) -> CellMoments {
    let s = sigma_x2.sqrt();
    let span = 12.0 * s;
    let (k_lo, k_hi) = (quantize_index(-span, delta), quantize_index(span, delta));
    let mut out = CellMoments { mm: 0.0, qq: 0.0, mq: 0.0 };
    for k in k_lo..=k_hi {
        let c = cell_center(k, delta);
        let a = if k == k_lo { f64::NEG_INFINITY } else { c - 0.5 * delta };
        let b = if k == k_hi { f64::INFINITY } else { c + 0.5 * delta };
        let t = TruncatedMoments::new(0.0, s, a, b);
        // m = x - c, q = c
        out.mm += t.m2 - 2.0 * c * t.m1 + c * c * t.m0;
        out.qq += c * c * t.m0;
        out.mq += c * (t.m1 - c * t.m0);
    }
    out
}

/// Solves the power-preservation quadratic in `beta`, returning the root closest to 1.
pub fn fit_beta(delta: f64, alpha: f64, sigma_x2: f64) -> Result<f64> {
    if !(delta > 0.0) || !(sigma_x2 > 0.0) || !alpha.is_finite() {
        return Err(Error::Domain(format!("bad modulo parameters delta={delta} alpha={alpha} sigma_x2={sigma_x2}")));
    }
    let m = cell_moments(delta, sigma_x2);
    let a = m.qq;
    let b = 2.0 * alpha * m.mq;
    let c = alpha * alpha * m.mm - sigma_x2;
    let infeasible = |reason: String| Error::Infeasible { step: 0, reason };
    if a <= 1e-300 {
        // Quantized part never fires: power is preserved only if alpha already does it.
        return if c.abs() <= 1e-9 * sigma_x2 {
            Ok(1.0)
        } else if b.abs() > 1e-300 {
            Ok(-c / b)
        } else {
            Err(infeasible(format!("delta={delta}: alpha={alpha} alone cannot preserve power")))
        };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Err(infeasible(format!("no real beta for delta={delta}, alpha={alpha}")));
    }
    let qv = -0.5 * (b + b.signum() * disc.sqrt());
    let roots = if qv == 0.0 { [0.0, 0.0] } else { [qv / a, c / qv] };
    Ok(if (roots[0] - 1.0).abs() <= (roots[1] - 1.0).abs() { roots[0] } else { roots[1] })
}

/// `P(a < X < b)` and the partial moments `E[X 1]`, `E[X^2 1]` for `X ~ N(mean, sd^2)`.
struct TruncatedMoments {
    m0: f64,
    m1: f64,
    m2: f64,
}

impl TruncatedMoments {
    fn new(mean: f64, sd: f64, a: f64, b: f64) -> Self {
        let (za, zb) = ((a - mean) / sd, (b - mean) / sd);
        let p = interval_prob(za, zb);
        let (pa, pb) = (std_pdf(za), std_pdf(zb));
        let (zpa, zpb) = (z_pdf(za), z_pdf(zb));
        let m1 = mean * p + sd * (pa - pb);
        let central2 = sd * sd * (p + zpa - zpb);
        Self { m0: p, m1, m2: central2 + 2.0 * mean * sd * (pa - pb) + mean * mean * p }
    }
}

fn std_pdf(z: f64) -> f64 {
    if z.is_infinite() {
        0.0
    } else {
        (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
    }
}

fn z_pdf(z: f64) -> f64 {
    if z.is_infinite() {
        0.0
    } else {
        z * std_pdf(z)
    }
}

/// `Phi(zb) - Phi(za)` without cancellation in either tail.
fn interval_prob(za: f64, zb: f64) -> f64 {
    if za >= 0.0 {
        0.5 * (libm::erfc(za / SQRT_2) - libm::erfc(zb / SQRT_2))
    } else if zb <= 0.0 {
        0.5 * (libm::erfc(-zb / SQRT_2) - libm::erfc(-za / SQRT_2))
    } else {
        1.0 - 0.5 * (libm::erfc(-za / SQRT_2) + libm::erfc(zb / SQRT_2))
    }
}

/// Numerical resolution of the w- and y-integrals.
///
/// The side-information integral can use Gauss-Hermite nodes or a plain
/// trapezoid rule. The conditional posterior energy is periodic-looking in
/// `y` with period about `delta / rho`, which Gauss-Hermite resolves slowly
/// (80 nodes still err by 2e-5); the trapezoid rule converges geometrically
/// and is the default.
#[derive(Debug, Clone)]
pub struct Quadrature {
    /// Trapezoid step over `w`, in units of `sigma_z`.
    pub w_step: f64,
    /// Half-width of the x-range kept around the prior mean, in prior standard deviations.
    pub x_span: f64,
    /// Margin added to the image of each cell over `w`, in units of `sigma_z`.
    pub w_margin: f64,
    y_rule: YRule,
    nodes: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum YRule {
    Hermite,
    Trapezoid { step: f64, span: f64 },
}

impl Quadrature {
    pub fn new(hermite_nodes: usize, w_step: f64) -> Result<Self> {
        let n = NonZero::new(hermite_nodes).ok_or_else(|| Error::Config("need at least one Hermite node".into()))?;
        if !(w_step > 0.0) {
            return Err(Error::Config(format!("w_step must be positive, got {w_step}")));
        }
        let nodes = GaussHermite::new(n).iter().map(|(x, w)| (*x, *w / PI.sqrt())).collect();
        Ok(Self { w_step, x_span: 9.0, w_margin: 8.0, y_rule: YRule::Hermite, nodes })
    }

    /// Trapezoid rule over the side information on `+-span` standard
    /// deviations with spacing `y_step` (also in standard deviations).
    pub fn trapezoid(y_step: f64, span: f64, w_step: f64) -> Result<Self> {
        if !(y_step > 0.0) || !(span > 0.0) || !(w_step > 0.0) {
            return Err(Error::Config("quadrature steps and span must be positive".into()));
        }
        let n = (span / y_step).ceil() as i64;
        let nodes = (-n..=n)
            .map(|i| {
                let t = i as f64 * y_step;
                (t / SQRT_2, y_step * std_pdf(t))
            })
            .collect();
        Ok(Self { w_step, x_span: 9.0, w_margin: 8.0, y_rule: YRule::Trapezoid { step: y_step, span }, nodes })
    }

    /// Twice the side-information nodes and half the w step.
    pub fn refined(&self) -> Result<Self> {
        let mut q = match self.y_rule {
            YRule::Hermite => Self::new(2 * self.nodes.len(), 0.5 * self.w_step)?,
            YRule::Trapezoid { step, span } => Self::trapezoid(0.5 * step, span, 0.5 * self.w_step)?,
        };
        q.x_span = self.x_span;
        q.w_margin = self.w_margin;
        Ok(q)
    }

    /// Number of nodes of the side-information rule.
    pub fn y_nodes(&self) -> usize {
        self.nodes.len()
    }
}

impl Default for Quadrature {
    /// Trapezoid over `y` with step `sigma_y / 6` on `+-8.5 sigma_y`, w step `sigma_z / 2`.
    fn default() -> Self {
        Self::trapezoid(1.0 / 6.0, 8.5, 0.5).expect("valid default quadrature")
    }
}

/// Output density and posterior-mean numerator of `w` when `x ~ N(mean, var)`
/// restricted to `mean +- span * sd`, accumulated on a uniform w grid.
struct WGrid {
    step: f64,
    density: Vec<f64>,
    first_moment: Vec<f64>,
}

impl WGrid {
    fn build(p: &ModuloMapParams, mean: f64, var: f64, quad: &Quadrature, with_moment: bool) -> Self {
        let sd = var.sqrt();
        let sz = p.sigma_z2.sqrt();
        let (lo, hi) = (mean - quad.x_span * sd, mean + quad.x_span * sd);
        let (k_lo, k_hi) = (quantize_index(lo, p.delta), quantize_index(hi, p.delta));
        let cells: Vec<(f64, f64, f64)> = (k_lo..=k_hi)
            .filter_map(|k| {
                let c = cell_center(k, p.delta);
                let a = if k == k_lo { lo } else { c - 0.5 * p.delta };
                let b = if k == k_hi { hi } else { c + 0.5 * p.delta };
                (a < b).then_some((a, b, c))
            })
            .collect();
        let image = |a: f64, b: f64, c: f64| {
            let off = (p.beta - p.alpha) * c;
            let (ga, gb) = (p.alpha * a + off, p.alpha * b + off);
            (ga.min(gb) - quad.w_margin * sz, ga.max(gb) + quad.w_margin * sz)
        };
        let (w_lo, w_hi) = cells.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |acc, &(a, b, c)| {
            let (l, h) = image(a, b, c);
            (acc.0.min(l), acc.1.max(h))
        });
        let step = quad.w_step * sz;
        let n = ((w_hi - w_lo) / step).ceil() as usize + 1;
        let mut density = vec![0.0; n];
        let mut first_moment = if with_moment { vec![0.0; n] } else { Vec::new() };

        // Posterior of x given w within a cell: linear-Gaussian update of the prior.
        let a2 = p.alpha * p.alpha;
        let post_var = 1.0 / (1.0 / var + a2 / p.sigma_z2);
        let post_sd = post_var.sqrt();
        let marg_var = a2 * var + p.sigma_z2;
        let marg_norm = 1.0 / (2.0 * PI * marg_var).sqrt();
        for &(a, b, c) in &cells {
            let off = (p.beta - p.alpha) * c;
            let (l, h) = image(a, b, c);
            let i0 = ((l - w_lo) / step).floor().max(0.0) as usize;
            let i1 = (((h - w_lo) / step).ceil() as usize).min(n - 1);
            for i in i0..=i1 {
                let w = w_lo + i as f64 * step;
                let dw = w - p.alpha * mean - off;
                let pw = marg_norm * (-0.5 * dw * dw / marg_var).exp();
                if pw == 0.0 {
                    continue;
                }
                let m = post_var * (mean / var + p.alpha * (w - off) / p.sigma_z2);
                let (za, zb) = ((a - m) / post_sd, (b - m) / post_sd);
                if za > 40.0 || zb < -40.0 {
                    continue;
                }
                if za < -10.0 && zb > 10.0 {
                    // Whole posterior inside the cell.
                    density[i] += pw;
                    if with_moment {
                        first_moment[i] += pw * m;
                    }
                    continue;
                }
                let prob = interval_prob(za, zb);
                density[i] += pw * prob;
                if with_moment {
                    first_moment[i] += pw * (m * prob + post_sd * (std_pdf(za) - std_pdf(zb)));
                }
            }
        }
        Self { step, density, first_moment }
    }
}

/// `I(x; w)` in bits for `x ~ N(0, sigma_x2)`.
pub fn modulo_rate(params: &ModuloMapParams, quad: &Quadrature) -> Result<f64> {
    params.validate()?;
    let g = WGrid::build(params, 0.0, params.sigma_x2, quad, false);
    let h_w: f64 = g
        .density
        .iter()
        .filter(|&&p| p > 1e-300)
        .map(|&p| -p * p.log2())
        .sum::<f64>()
        * g.step;
    let h_z = 0.5 * (2.0 * PI * E * params.sigma_z2).log2();
    Ok((h_w - h_z).max(0.0))
}

fn posterior_energy(g: &WGrid) -> f64 {
    g.density
        .iter()
        .zip(&g.first_moment)
        .filter(|(&p, _)| p > 1e-300)
        .map(|(&p, &m)| m * m / p)
        .sum::<f64>()
        * g.step
}

/// `E[(x - E[x | w, y])^2]` with `y = x + n`, `n ~ N(0, sigma_n2)`.
/// An infinite `sigma_n2` means the decoder sees only `w`.
pub fn modulo_distortion(params: &ModuloMapParams, sigma_n2: f64, quad: &Quadrature) -> Result<f64> {
    params.validate()?;
    if !(sigma_n2 > 0.0) {
        return Err(Error::Domain(format!("sigma_n2 must be positive, got {sigma_n2}")));
    }
    let sx2 = params.sigma_x2;
    let energy = if sigma_n2.is_infinite() {
        posterior_energy(&WGrid::build(params, 0.0, sx2, quad, true))
    } else {
        let rho = sx2 / (sx2 + sigma_n2);
        let cond_var = sx2 * sigma_n2 / (sx2 + sigma_n2);
        let sy = (sx2 + sigma_n2).sqrt();
        quad.nodes
            .iter()
            .map(|&(node, weight)| {
                let y = SQRT_2 * sy * node;
                weight * posterior_energy(&WGrid::build(params, rho * y, cond_var, quad, true))
            })
            .sum()
    };
    let d = sx2 - energy;
    if !d.is_finite() || d < -1e-9 * sx2 {
        return Err(Error::Numerical(format!("distortion quadrature failed: {d}")));
    }
    Ok(d.max(0.0))
}

/// Scale-free parameter grid: `delta = delta_rel * sigma_x`,
/// `sigma_z2 = zeta * sigma_x2`, `alpha` as is.
#[derive(Debug, Clone, PartialEq)]
pub struct ModuloGrid {
    pub delta_rel: Vec<f64>,
    pub alpha: Vec<f64>,
    pub zeta: Vec<f64>,
}

impl Default for ModuloGrid {
    fn default() -> Self {
        Self {
            delta_rel: log_grid(0.5, 8.0, 16).expect("static grid"),
            alpha: log_grid(0.25, 4.0, 16).expect("static grid"),
            zeta: log_grid(1e-3, 10.0, 32).expect("static grid"),
        }
    }
}

impl ModuloGrid {
    pub fn len(&self) -> usize {
        self.delta_rel.len() * self.alpha.len() * self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModuloPoint {
    pub map: ModuloMapParams,
    pub distortion: f64,
    pub rate: f64,
}

/// Result of a grid sweep: every feasible point and the convexified frontier.
#[derive(Debug, Clone)]
pub struct ModuloSweep {
    pub points: Vec<ModuloPoint>,
    pub curve: RDCurve,
    pub dropped: usize,
}

/// Distortion at the self-consistent input variance
/// `sigma_x2 = lambda^2 D(sigma_x2) + sigma_v2`, solved by secant steps on
/// the relative residual to 1e-9.
fn steady_state_point(
    scenario: &ScenarioParams,
    delta_rel: f64,
    alpha: f64,
    beta: f64,
    zeta: f64,
    quad: &Quadrature,
) -> Result<(f64, f64)> {
    let l2 = scenario.lambda2();
    let dist = |sx2: f64| {
        let map = ModuloMapParams {
            delta: delta_rel * sx2.sqrt(),
            alpha,
            beta,
            sigma_z2: zeta * sx2,
            sigma_x2: sx2,
        };
        modulo_distortion(&map, scenario.sigma_n2, quad)
    };
    let sv2 = scenario.sigma_v2;
    if l2 == 0.0 {
        return Ok((sv2, dist(sv2)?));
    }
    let resid = |sx2: f64, d: f64| l2 * d + sv2 - sx2;
    let mut x0 = sv2;
    let d0 = dist(x0)?;
    let mut f0 = resid(x0, d0);
    let mut x1 = l2 * d0 + sv2;
    let mut d1 = dist(x1)?;
    let mut f1 = resid(x1, d1);
    for _ in 0..50 {
        if (x1 - x0).abs() <= 1e-9 * x1 || f1 == 0.0 {
            return Ok((x1, d1));
        }
        let slope = (f1 - f0) / (x1 - x0);
        // The residual has slope in (-1, lambda^2 - 1]; fall back to a plain
        // fixed-point step if the secant estimate leaves that range.
        let next = if slope < 0.0 && slope.is_finite() { x1 - f1 / slope } else { l2 * d1 + sv2 };
        let next = next.clamp(sv2, sv2 / (1.0 - l2).max(1e-12));
        (x0, f0) = (x1, f1);
        x1 = next;
        d1 = dist(x1)?;
        f1 = resid(x1, d1);
    }
    Err(Error::Numerical(format!("steady-state fixed point did not converge (delta_rel={delta_rel}, alpha={alpha}, zeta={zeta})")))
}

/// Evaluates the modulo channel over the grid and returns the convexified
/// lower frontier, closed at `(D_max, 0)` of the two-sided bound.
///
/// For `lambda != 0` each point uses the steady-state approximation and the
/// curve carries [`STEADY_STATE_NOTE`].
pub fn sweep_modulo_curve(scenario: &ScenarioParams, grid: &ModuloGrid, quad: &Quadrature) -> Result<ModuloSweep> {
    scenario.validate()?;
    if grid.is_empty() {
        return Err(Error::Config("empty modulo grid".into()));
    }
    // beta depends only on (delta_rel, alpha) and the rate only on (delta_rel, alpha, zeta).
    let maps: Vec<(f64, f64, Option<f64>)> = grid
        .delta_rel
        .iter()
        .flat_map(|&d| grid.alpha.iter().map(move |&a| (d, a)))
        .map(|(d, a)| (d, a, fit_beta(d, a, 1.0).ok()))
        .collect();
    let jobs: Vec<(f64, f64, f64, f64)> = maps
        .iter()
        .filter_map(|&(d, a, b)| b.map(|b| (d, a, b)))
        .flat_map(|(d, a, b)| grid.zeta.iter().map(move |&z| (d, a, b, z)))
        .collect();
    let infeasible_maps = maps.iter().filter(|m| m.2.is_none()).count() * grid.zeta.len();

    let evaluated: Vec<Option<ModuloPoint>> = jobs
        .par_iter()
        .map(|&(d, a, b, z)| {
            let unit = ModuloMapParams { delta: d, alpha: a, beta: b, sigma_z2: z, sigma_x2: 1.0 };
            let rate = modulo_rate(&unit, quad).ok()?;
            let (sx2, dist) = steady_state_point(scenario, d, a, b, z, quad).ok()?;
            let map = ModuloMapParams { delta: d * sx2.sqrt(), alpha: a, beta: b, sigma_z2: z * sx2, sigma_x2: sx2 };
            (dist > 0.0).then_some(ModuloPoint { map, distortion: dist, rate })
        })
        .collect();
    let failed = evaluated.iter().filter(|p| p.is_none()).count();
    let points: Vec<ModuloPoint> = evaluated.into_iter().flatten().collect();

    let d_max = BoundKind::CausalTwoSided.zero_rate_distortion(scenario);
    let mut candidates: Vec<(f64, f64)> =
        points.iter().filter(|p| p.distortion < d_max).map(|p| (p.distortion, p.rate)).collect();
    candidates.push((d_max, 0.0));
    let frontier = pareto_frontier(candidates);
    let mut curve = RDCurve::new("modulo", frontier)?;
    if scenario.lambda != 0.0 {
        curve = curve.with_note(STEADY_STATE_NOTE);
    }
    let curve = lower_convex_envelope(&curve)?.with_dropped(infeasible_maps + failed);
    Ok(ModuloSweep { points, curve, dropped: infeasible_maps + failed })
}

/// Points not dominated by any other point (smaller-or-equal distortion and
/// rate), sorted by distortion.
pub fn pareto_frontier(mut pts: Vec<(f64, f64)>) -> Vec<RDPoint> {
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<RDPoint> = Vec::new();
    for (d, r) in pts {
        match out.last() {
            Some(last) if r >= last.rate || d <= last.distortion => continue,
            _ => out.push(RDPoint::new(d, r)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_mod_examples() {
        assert!((centered_mod(0.6, 1.0) + 0.4).abs() < 1e-15);
        assert_eq!(centered_mod(0.5, 1.0), -0.5);
        assert_eq!(centered_mod(-0.5, 1.0), -0.5);
        assert_eq!(quantize_index(-0.5, 1.0), 0);
        assert_eq!(quantize_index(0.5, 1.0), 1);
        for k in -5..=5 {
            assert_eq!(centered_mod(k as f64 * 0.3, 0.3), 0.0);
        }
        assert_eq!(centered_mod(2.7, f64::INFINITY), 2.7);
    }

    #[test]
    fn spec_reconstruction_off_boundaries() {
        for &x in &[0.6, -0.6, 3.3, -7.1, 0.0, 1e-9] {
            assert_eq!(centered_mod(x, 1.0) + (x / 1.0f64).round(), x);
        }
    }

    #[test]
    fn moments_sum_to_variance() {
        for &(d, s2) in &[(0.5, 1.0), (2.0, 3.0), (8.0, 1.0), (1e3, 1.0)] {
            let m = cell_moments(d, s2);
            assert!((m.mm + 2.0 * m.mq + m.qq - s2).abs() < 1e-12 * s2, "{d} {s2} {m:?}");
        }
        let m = cell_moments(f64::INFINITY, 2.0);
        assert!((m.mm - 2.0).abs() < 1e-14 && m.qq == 0.0);
    }

    #[test]
    fn fit_beta_examples() {
        assert_eq!(fit_beta(1e6, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(fit_beta(f64::INFINITY, 1.0, 1.0).unwrap(), 1.0);
        assert!(fit_beta(f64::INFINITY, 1.5, 1.0).is_err());
        assert!((fit_beta(2.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let p = ModuloMapParams::fitted(2.0, 1.5, 0.1, 1.0).unwrap();
        assert!((p.output_power() - 1.0).abs() < 1e-9);
        assert!(fit_beta(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn identity_map_rate_and_distortion() {
        let q = Quadrature::default();
        for &d in &[0.7, 3.0, f64::INFINITY] {
            let p = ModuloMapParams { delta: d, alpha: 1.0, beta: 1.0, sigma_z2: 0.5, sigma_x2: 1.0 };
            assert!((modulo_rate(&p, &q).unwrap() - 0.5 * 3.0f64.log2()).abs() < 1e-6);
            let dist = modulo_distortion(&p, 1.0 / 9.0, &q).unwrap();
            assert!((dist - 1.0 / 12.0).abs() < 1e-6, "{dist}");
            let dist = modulo_distortion(&p, f64::INFINITY, &q).unwrap();
            assert!((dist - 1.0 / 3.0).abs() < 1e-6, "{dist}");
        }
    }

    #[test]
    fn domain_errors() {
        let q = Quadrature::default();
        let p = ModuloMapParams { delta: 1.0, alpha: 1.0, beta: 1.0, sigma_z2: 0.0, sigma_x2: 1.0 };
        assert!(matches!(modulo_rate(&p, &q), Err(Error::Domain(_))));
        assert!(matches!(modulo_distortion(&p, 0.1, &q), Err(Error::Domain(_))));
    }

    #[test]
    fn folding_map_reduces_to_at_most_side_info_mmse() {
        let q = Quadrature::default();
        let p = ModuloMapParams::fitted(1.0, 2.0, 0.05, 1.0).unwrap();
        let d = modulo_distortion(&p, 1.0 / 9.0, &q).unwrap();
        assert!(d <= 0.1 + 1e-9 && d > 0.0);
        let huge = ModuloMapParams { sigma_z2: 1e8, ..p };
        assert!((modulo_distortion(&huge, 1.0 / 9.0, &q).unwrap() - 0.1).abs() < 1e-6);
    }

    #[test]
    fn pareto_examples() {
        let f = pareto_frontier(vec![(0.3, 0.1), (0.1, 1.0), (0.2, 1.2), (0.2, 0.5), (0.4, 0.1)]);
        assert_eq!(f, vec![RDPoint::new(0.1, 1.0), RDPoint::new(0.2, 0.5), RDPoint::new(0.3, 0.1)]);
    }
}
