//! System model: scenario parameters, rate-distortion containers, scalar
//! helpers and trajectory sampling for the Gauss-Markov source
//!
//! ```text
//! x_t = lambda * x_{t-1} + v_t,   v_t ~ N(0, sigma_v2),   x_0 = 0
//! y_t = x_t + n_t,                n_t ~ N(0, sigma_n2)
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::roots::positive_root;

/// Parameters every curve in the crate is indexed by.
///
/// `sigma_n2 = f64::INFINITY` means the decoder has no side information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    pub lambda: f64,
    pub sigma_v2: f64,
    pub sigma_n2: f64,
    pub horizon: usize,
}

impl ScenarioParams {
    pub fn new(lambda: f64, sigma_v2: f64, sigma_n2: f64, horizon: usize) -> Result<Self> {
        let params = Self {
            lambda,
            sigma_v2,
            sigma_n2,
            horizon,
        };
        params.validate()?;
        Ok(params)
    }

    /// Reference scenario of the fig2a/fig2b presets: `sigma_v = 1`, `sigma_n = 1/3`, `T = 2048`.
    pub fn reference(lambda: f64) -> Self {
        Self {
            lambda,
            sigma_v2: 1.0,
            sigma_n2: 1.0 / 9.0,
            horizon: 2048,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::Config(format!("lambda must be finite, got {}", self.lambda)));
        }
        if !(self.sigma_v2 > 0.0 && self.sigma_v2.is_finite()) {
            return Err(Error::Config(format!(
                "sigma_v2 must be positive and finite, got {}",
                self.sigma_v2
            )));
        }
        if !(self.sigma_n2 > 0.0) {
            return Err(Error::Config(format!(
                "sigma_n2 must be positive (or infinite for no side information), got {}",
                self.sigma_n2
            )));
        }
        if self.horizon == 0 {
            return Err(Error::Config("horizon must be at least 1".into()));
        }
        Ok(())
    }

    pub fn has_side_info(&self) -> bool {
        self.sigma_n2.is_finite()
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda * self.lambda
    }

    /// Stationary variance of `x_t`, infinite when `|lambda| >= 1`.
    pub fn stationary_source_variance(&self) -> f64 {
        let l2 = self.lambda2();
        if l2 < 1.0 {
            self.sigma_v2 / (1.0 - l2)
        } else {
            f64::INFINITY
        }
    }
}

/// Positive-part base-2 logarithm, `max(log2 x, 0)`.
pub fn plog(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain(format!("plog argument must be >= 0, got {x}")));
    }
    Ok(x.log2().max(0.0))
}

/// `a || b = ab / (a + b)`, the MMSE of fusing two independent Gaussian
/// observations of variances `a` and `b`.
///
/// Evaluated as `1 / (1/a + 1/b)` so an infinite argument drops out and a
/// zero argument forces zero.
pub fn parallel_sum(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        return 0.0;
    }
    1.0 / (1.0 / a + 1.0 / b)
}

/// Parallel sum of any number of variances.
pub fn parallel_sum_all(values: &[f64]) -> f64 {
    if values.contains(&0.0) {
        return 0.0;
    }
    1.0 / values.iter().map(|v| 1.0 / v).sum::<f64>()
}

/// Positive fixed point of `D = obs_var || (lambda^2 D + sigma_v2)`.
///
/// This is the steady-state MMSE of the scalar Kalman filter observing the
/// source through noise of variance `obs_var`, i.e. the positive root of
/// `lambda^2 D^2 + (sigma_v2 + (1 - lambda^2) obs_var) D - sigma_v2 obs_var = 0`.
/// With `obs_var = inf` it is the stationary source variance.
pub fn stationary_mmse(lambda: f64, sigma_v2: f64, obs_var: f64) -> f64 {
    let l2 = lambda * lambda;
    if obs_var.is_infinite() {
        return if l2 < 1.0 { sigma_v2 / (1.0 - l2) } else { f64::INFINITY };
    }
    if obs_var == 0.0 {
        return 0.0;
    }
    positive_root(l2, sigma_v2 + (1.0 - l2) * obs_var, -sigma_v2 * obs_var)
}

/// `n` log-spaced values from `min` to `max` inclusive.
pub fn log_grid(min: f64, max: f64, n: usize) -> Result<Vec<f64>> {
    if !(min > 0.0 && max > min && max.is_finite()) {
        return Err(Error::Config(format!("invalid grid bounds [{min}, {max}]")));
    }
    match n {
        0 => Err(Error::Config("grid needs at least one point".into())),
        1 => Ok(vec![min]),
        _ => {
            let (lo, hi) = (min.ln(), max.ln());
            let step = (hi - lo) / (n - 1) as f64;
            let mut grid: Vec<f64> = (0..n).map(|i| (lo + step * i as f64).exp()).collect();
            grid[0] = min;
            grid[n - 1] = max;
            Ok(grid)
        }
    }
}

/// One (distortion, rate) pair; distortion in mean-square units of `x`, rate in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RDPoint {
    pub distortion: f64,
    pub rate: f64,
}

impl RDPoint {
    pub fn new(distortion: f64, rate: f64) -> Self {
        Self { distortion, rate }
    }
}

/// Slack allowed on the monotonicity and convexity invariants.
pub const CURVE_TOLERANCE: f64 = 1e-12;

/// A sampled rate-distortion curve: distortions strictly increasing, rates
/// nonincreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct RDCurve {
    points: Vec<RDPoint>,
    label: String,
    is_convexified: bool,
    /// Grid points that were infeasible and left out.
    dropped: usize,
    note: Option<String>,
}

impl RDCurve {
    pub fn new(label: impl Into<String>, points: Vec<RDPoint>) -> Result<Self> {
        let label = label.into();
        for p in &points {
            if !(p.distortion.is_finite() && p.rate.is_finite())
                || p.distortion < 0.0
                || p.rate < 0.0
            {
                return Err(Error::Domain(format!(
                    "curve '{label}': point ({}, {}) is not finite and nonnegative",
                    p.distortion, p.rate
                )));
            }
        }
        for w in points.windows(2) {
            if w[1].distortion <= w[0].distortion {
                return Err(Error::Config(format!(
                    "curve '{label}': distortions not strictly increasing at {} -> {}",
                    w[0].distortion, w[1].distortion
                )));
            }
            if w[1].rate > w[0].rate + CURVE_TOLERANCE {
                return Err(Error::Config(format!(
                    "curve '{label}': rate increases from {} to {} at D = {}",
                    w[0].rate, w[1].rate, w[1].distortion
                )));
            }
        }
        Ok(Self {
            points,
            label,
            is_convexified: false,
            dropped: 0,
            note: None,
        })
    }

    pub fn from_pairs(label: impl Into<String>, pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(label, pairs.iter().map(|&(d, r)| RDPoint::new(d, r)).collect())
    }

    pub fn points(&self) -> &[RDPoint] {
        &self.points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn is_convexified(&self) -> bool {
        self.is_convexified
    }

    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn note(&self) -> Option<&str> {
        self.note.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_dropped(mut self, dropped: usize) -> Self {
        self.dropped = dropped;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Marks the curve as a convex envelope after checking the second-difference invariant.
    pub(crate) fn into_convexified(mut self) -> Result<Self> {
        if !self.is_convex(CURVE_TOLERANCE) {
            return Err(Error::Numerical(format!(
                "curve '{}' is not convex within {CURVE_TOLERANCE:e}",
                self.label
            )));
        }
        self.is_convexified = true;
        Ok(self)
    }

    /// Whether the slopes of the piecewise-linear interpolant are nondecreasing
    /// (up to `tol` on the implied second differences).
    pub fn is_convex(&self, tol: f64) -> bool {
        self.points.windows(3).all(|w| {
            let s0 = (w[1].rate - w[0].rate) / (w[1].distortion - w[0].distortion);
            let s1 = (w[2].rate - w[1].rate) / (w[2].distortion - w[1].distortion);
            (s1 - s0) * (w[2].distortion - w[0].distortion) >= -tol
        })
    }

    pub fn distortion_range(&self) -> Option<(f64, f64)> {
        Some((self.points.first()?.distortion, self.points.last()?.distortion))
    }

    /// Rate of the piecewise-linear interpolant at `d`, `None` outside the sampled range.
    pub fn rate_at(&self, d: f64) -> Option<f64> {
        let (lo, hi) = self.distortion_range()?;
        if d < lo || d > hi {
            return None;
        }
        let i = self.points.partition_point(|p| p.distortion < d);
        if i < self.points.len() && self.points[i].distortion == d {
            return Some(self.points[i].rate);
        }
        let (a, b) = (self.points[i - 1], self.points[i]);
        let t = (d - a.distortion) / (b.distortion - a.distortion);
        Some(a.rate + t * (b.rate - a.rate))
    }

    /// Evaluates the interpolant on the grid points that fall inside the sampled range.
    pub fn resample(&self, grid: &[f64]) -> Result<RDCurve> {
        let points: Vec<RDPoint> = grid
            .iter()
            .filter_map(|&d| self.rate_at(d).map(|r| RDPoint::new(d, r.max(0.0))))
            .collect();
        let mut out = RDCurve::new(self.label.clone(), points)?;
        out.is_convexified = self.is_convexified;
        out.dropped = self.dropped;
        out.note = self.note.clone();
        Ok(out)
    }
}

/// A sampled source path together with its side-information path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub x: Vec<f64>,
    /// `None` when the scenario has no side information.
    pub y: Option<Vec<f64>>,
    pub seed: u64,
}

/// Seeded generator used for every random draw in the crate.
///
/// ChaCha8 keyed by the 64-bit seed via `SeedableRng::seed_from_u64`;
/// Gaussians come from `rand_distr::StandardNormal` (ziggurat). Streams are
/// reproducible bit-for-bit for a given seed and crate version.
pub fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn gaussian(rng: &mut ChaCha8Rng, variance: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    variance.sqrt() * z
}

/// Draws one path of length `horizon`. Per step the disturbance `v_t` is drawn
/// before the side-information noise `n_t`.
pub fn sample_trajectory(params: &ScenarioParams, seed: u64) -> Result<Trajectory> {
    params.validate()?;
    let mut rng = seeded_rng(seed, 0);
    let with_si = params.has_side_info();
    let mut x = Vec::with_capacity(params.horizon);
    let mut y = with_si.then(|| Vec::with_capacity(params.horizon));
    let mut prev = 0.0;
    for _ in 0..params.horizon {
        let xt = params.lambda * prev + gaussian(&mut rng, params.sigma_v2);
        x.push(xt);
        if let Some(y) = y.as_mut() {
            y.push(xt + gaussian(&mut rng, params.sigma_n2));
        }
        prev = xt;
    }
    Ok(Trajectory { x, y, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn plog_examples() {
        assert_eq!(plog(4.0).unwrap(), 2.0);
        assert_eq!(plog(0.5).unwrap(), 0.0);
        assert_eq!(plog(1.0).unwrap(), 0.0);
        assert_eq!(plog(0.0).unwrap(), 0.0);
        assert!(matches!(plog(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn parallel_sum_examples() {
        assert_eq!(parallel_sum(1.0, 1.0), 0.5);
        assert_eq!(parallel_sum(0.7, f64::INFINITY), 0.7);
        assert_eq!(parallel_sum(0.0, 3.0), 0.0);
        // 1/D = 1 + 9 + 3
        let chained = parallel_sum(parallel_sum(1.0, 1.0 / 9.0), 1.0 / 3.0);
        assert!((chained - 1.0 / 13.0).abs() < 1e-15);
        assert!((parallel_sum_all(&[1.0, 1.0 / 9.0, 1.0 / 3.0]) - 1.0 / 13.0).abs() < 1e-15);
    }

    #[test]
    fn stationary_mmse_limits() {
        assert!((stationary_mmse(0.9, 1.0, f64::INFINITY) - 1.0 / 0.19).abs() < 1e-12);
        assert!((stationary_mmse(0.0, 1.0, 1.0 / 9.0) - 0.1).abs() < 1e-15);
        let d = stationary_mmse(0.9, 1.0, 1.0 / 9.0);
        assert!((d - parallel_sum(1.0 / 9.0, 0.81 * d + 1.0)).abs() < 1e-15);
        assert_eq!(stationary_mmse(1.2, 1.0, f64::INFINITY), f64::INFINITY);
    }

    #[test]
    fn scenario_validation() {
        assert!(ScenarioParams::new(0.9, 1.0, f64::INFINITY, 4).is_ok());
        assert!(ScenarioParams::new(1.5, 1.0, 0.1, 4).is_ok());
        assert!(ScenarioParams::new(0.9, 0.0, 0.1, 4).is_err());
        assert!(ScenarioParams::new(0.9, 1.0, 0.0, 4).is_err());
        assert!(ScenarioParams::new(0.9, 1.0, 0.1, 0).is_err());
        assert!(ScenarioParams::new(f64::NAN, 1.0, 0.1, 1).is_err());
    }

    #[test]
    fn curve_invariants_enforced() {
        assert!(RDCurve::from_pairs("ok", &[(0.1, 1.0), (0.2, 0.5), (0.3, 0.5)]).is_ok());
        assert!(RDCurve::from_pairs("dup", &[(0.1, 1.0), (0.1, 0.5)]).is_err());
        assert!(RDCurve::from_pairs("up", &[(0.1, 1.0), (0.2, 1.5)]).is_err());
        assert!(RDCurve::from_pairs("neg", &[(0.1, -1.0)]).is_err());
        let c = RDCurve::from_pairs("c", &[(0.1, 1.0), (0.3, 0.0)]).unwrap();
        assert!((c.rate_at(0.2).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(c.rate_at(0.3).unwrap(), 0.0);
        assert!(c.rate_at(0.4).is_none());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-4, 0.1, 256).unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g[0], 1e-4);
        assert_eq!(g[255], 0.1);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn trajectory_is_deterministic() {
        let p = ScenarioParams::new(0.9, 1.0, 0.1, 64).unwrap();
        let a = sample_trajectory(&p, 7).unwrap();
        let b = sample_trajectory(&p, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.x, sample_trajectory(&p, 8).unwrap().x);
        let no_si = ScenarioParams::new(0.9, 1.0, f64::INFINITY, 8).unwrap();
        assert!(sample_trajectory(&no_si, 1).unwrap().y.is_none());
    }

    /// Sample mean and standard error of `f` over independent paths.
    fn moment(params: &ScenarioParams, paths: u64, f: impl Fn(&Trajectory) -> f64) -> (f64, f64) {
        let vals: Vec<f64> = (0..paths)
            .map(|s| f(&sample_trajectory(params, s).unwrap()))
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn memoryless_source_variance() {
        let p = ScenarioParams::new(0.0, 2.0, 0.5, 3).unwrap();
        let (m, se) = moment(&p, 100_000, |t| t.x[2] * t.x[2]);
        assert!((m - 2.0).abs() < 3.0 * se, "{m} vs 2 (se {se})");
    }

    #[test]
    fn stationary_variance_geometric_series() {
        let p = ScenarioParams::new(0.9, 1.0, 1.0 / 9.0, 100).unwrap();
        let (m, se) = moment(&p, 40_000, |t| t.x[99] * t.x[99]);
        // exact variance at t = 100 differs from 1/(1-0.81) by 0.81^100 / 0.19
        assert!((m - 1.0 / 0.19).abs() < 3.0 * se, "{m} vs 5.263 (se {se})");
    }

    #[test]
    fn side_info_noise_independent_of_source() {
        let p = ScenarioParams::new(0.9, 1.0, 0.25, 10).unwrap();
        let (m, se) = moment(&p, 40_000, |t| (t.y.as_ref().unwrap()[6] - t.x[6]) * t.x[3]);
        assert!(m.abs() < 3.0 * se, "{m} (se {se})");
        let (v, se) = moment(&p, 40_000, |t| (t.y.as_ref().unwrap()[6] - t.x[6]).powi(2));
        assert!((v - 0.25).abs() < 3.0 * se);
    }

    proptest! {
        #[test]
        fn parallel_sum_below_min(a in 1e-6f64..1e6, b in 1e-6f64..1e6, c in 1e-6f64..1e6) {
            let p = parallel_sum(a, b);
            prop_assert!(p <= a.min(b));
            prop_assert!((p - parallel_sum(b, a)).abs() <= 1e-15 * p);
            let left = parallel_sum(parallel_sum(a, b), c);
            let right = parallel_sum(a, parallel_sum(b, c));
            prop_assert!((left - right).abs() <= 1e-13 * left);
        }

        #[test]
        fn plog_monotone(x in 0.0f64..100.0, dx in 0.0f64..10.0) {
            prop_assert!(plog(x + dx).unwrap() >= plog(x).unwrap());
            if x <= 1.0 {
                prop_assert_eq!(plog(x).unwrap(), 0.0);
            }
        }
    }
}
