//! Independent checks for the test-channel recursions: the scalar Kalman
//! (Riccati) variance recursion and a seeded Monte-Carlo run of the Kalman
//! mean filter on simulated paths.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{gaussian, parallel_sum, seeded_rng, ScenarioParams};

/// Which noisy observations of `x_t` the estimator sees at each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observations {
    /// `w_t = x_t + z_t`.
    pub channel: bool,
    /// `y_t = x_t + n_t`.
    pub side_info: bool,
}

impl Observations {
    pub const CHANNEL: Self = Self { channel: true, side_info: false };
    pub const SIDE_INFO: Self = Self { channel: false, side_info: true };
    pub const BOTH: Self = Self { channel: true, side_info: true };

    fn noise_variances(self, params: &ScenarioParams, sigma_z2: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(2);
        if self.channel {
            v.push(sigma_z2);
        }
        if self.side_info && params.has_side_info() {
            v.push(params.sigma_n2);
        }
        v
    }
}

/// Prior and posterior variances of `x_t` from the Riccati recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanPosterior {
    pub prior_var: Vec<f64>,
    pub post_var: Vec<f64>,
    pub observations: Observations,
}

/// Scalar Riccati recursion: `prior_1 = sigma_v2`,
/// `post_t = prior_t || (each active observation noise)`,
/// `prior_{t+1} = lambda^2 post_t + sigma_v2`.
pub fn riccati(
    params: &ScenarioParams,
    sigma_z2: f64,
    observations: Observations,
) -> Result<KalmanPosterior> {
    params.validate()?;
    if observations.channel && !(sigma_z2 > 0.0) {
        return Err(Error::Domain(format!("sigma_z2 must be positive, got {sigma_z2}")));
    }
    let noises = observations.noise_variances(params, sigma_z2);
    let mut prior_var = Vec::with_capacity(params.horizon);
    let mut post_var = Vec::with_capacity(params.horizon);
    let mut prior = params.sigma_v2;
    for _ in 0..params.horizon {
        let post = noises.iter().fold(prior, |acc, &n| parallel_sum(acc, n));
        prior_var.push(prior);
        post_var.push(post);
        prior = params.lambda2() * post + params.sigma_v2;
    }
    Ok(KalmanPosterior {
        prior_var,
        post_var,
        observations,
    })
}

/// Per-step empirical mean-square error with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub mse: Vec<f64>,
    pub std_err: Vec<f64>,
    pub trials: usize,
}

impl McEstimate {
    /// Fraction of steps where `|mse_t - reference_t| <= k * std_err_t`.
    pub fn agreement(&self, reference: &[f64], k: f64) -> f64 {
        let hits = self
            .mse
            .iter()
            .zip(&self.std_err)
            .zip(reference)
            .filter(|((m, s), r)| (*m - *r).abs() <= k * *s)
            .count();
        hits as f64 / self.mse.len() as f64
    }
}

/// Trials per independent random stream.
const BLOCK: usize = 4096;

/// Simulates `trials` paths of the source, channel and side information and
/// runs the Kalman mean filter on the selected observations.
///
/// Trials are split into blocks of 4096, each drawing from its own ChaCha
/// stream of `seed`; per-step sums of squared errors are combined by pairwise
/// summation over blocks so the result does not depend on scheduling.
pub fn monte_carlo_mmse(
    params: &ScenarioParams,
    sigma_z2: f64,
    observations: Observations,
    trials: usize,
    seed: u64,
) -> Result<McEstimate> {
    if trials < 2 {
        return Err(Error::Config(format!("need at least 2 trials, got {trials}")));
    }
    let post = riccati(params, sigma_z2, observations)?;
    let horizon = params.horizon;
    let use_channel = observations.channel;
    let use_si = observations.side_info && params.has_side_info();

    let blocks: Vec<(usize, usize)> = (0..trials)
        .step_by(BLOCK)
        .enumerate()
        .map(|(i, start)| (i, BLOCK.min(trials - start)))
        .collect();
    let sums: Vec<(Vec<f64>, Vec<f64>)> = blocks
        .par_iter()
        .map(|&(block, count)| {
            let mut rng = seeded_rng(seed, block as u64 + 1);
            let mut s1 = vec![0.0; horizon];
            let mut s2 = vec![0.0; horizon];
            for _ in 0..count {
                let (mut x, mut est) = (0.0, 0.0);
                for t in 0..horizon {
                    x = params.lambda * x + gaussian(&mut rng, params.sigma_v2);
                    let w = x + gaussian(&mut rng, sigma_z2);
                    let y = x + gaussian(&mut rng, params.sigma_n2.min(f64::MAX));
                    est *= params.lambda;
                    let mut var = post.prior_var[t];
                    if use_channel {
                        let gain = var / (var + sigma_z2);
                        est += gain * (w - est);
                        var = parallel_sum(var, sigma_z2);
                    }
                    if use_si {
                        let gain = var / (var + params.sigma_n2);
                        est += gain * (y - est);
                    }
                    let e2 = (x - est) * (x - est);
                    s1[t] += e2;
                    s2[t] += e2 * e2;
                }
            }
            (s1, s2)
        })
        .collect();

    let n = trials as f64;
    let mut mse = Vec::with_capacity(horizon);
    let mut std_err = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let m1 = pairwise_sum(&sums.iter().map(|b| b.0[t]).collect::<Vec<_>>()) / n;
        let m2 = pairwise_sum(&sums.iter().map(|b| b.1[t]).collect::<Vec<_>>()) / n;
        let var = (m2 - m1 * m1).max(0.0) * n / (n - 1.0);
        mse.push(m1);
        std_err.push((var / n).sqrt());
    }
    Ok(McEstimate { mse, std_err, trials })
}

fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n => pairwise_sum(&values[..n / 2]) + pairwise_sum(&values[n / 2..]),
    }
}
