//! Directed information for jointly Gaussian processes.
//!
//! A [`GaussianSystem`] is a finite family of scalar streams, each indexed by
//! time `0..T`, with an exact joint covariance. Systems are assembled by
//! [`SystemBuilder`] from causal linear recursions driven by independent
//! Gaussian noises; every information quantity is then a combination of
//! log-determinants of covariance submatrices.

use std::collections::{BTreeSet, HashMap};

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{seeded_rng, ScenarioParams};

/// Pivots below this are floored when factorizing conditional covariances.
pub const PIVOT_FLOOR: f64 = 1e-12;

/// Largest per-stream horizon accepted for exact covariance computations.
pub const MAX_HORIZON: usize = 256;

/// One stream of a system: its global indices ordered by time.
#[derive(Debug, Clone, PartialEq)]
pub struct Stream {
    pub name: String,
    pub indices: Vec<usize>,
    /// Streams read by this stream's recursion, when the system was built
    /// from one. `None` for systems given directly by a covariance.
    pub parents: Option<BTreeSet<String>>,
}

/// Zero-mean jointly Gaussian family with labelled streams.
#[derive(Debug, Clone)]
pub struct GaussianSystem {
    cov: DMatrix<f64>,
    streams: Vec<Stream>,
    horizon: usize,
}

impl GaussianSystem {
    /// Wraps an explicit covariance. Each stream lists its indices in time order.
    pub fn from_covariance(cov: DMatrix<f64>, streams: Vec<(String, Vec<usize>)>) -> Result<Self> {
        let n = cov.nrows();
        if cov.ncols() != n || n == 0 {
            return Err(Error::Config("covariance must be square and nonempty".into()));
        }
        let scale = cov.diagonal().amax().max(1.0);
        for i in 0..n {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Config(format!("covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        let min_eig = cov.clone().symmetric_eigenvalues().min();
        if min_eig < -1e-10 * scale {
            return Err(Error::Config(format!("covariance not PSD, min eigenvalue {min_eig}")));
        }
        let horizon = streams.first().map_or(0, |s| s.1.len());
        let mut seen = BTreeSet::new();
        for (name, idx) in &streams {
            if idx.len() != horizon {
                return Err(Error::Config(format!("stream {name} has {} steps, expected {horizon}", idx.len())));
            }
            for &i in idx {
                if i >= n || !seen.insert(i) {
                    return Err(Error::Config(format!("stream {name}: index {i} out of range or shared")));
                }
            }
        }
        let streams = streams
            .into_iter()
            .map(|(name, indices)| Stream { name, indices, parents: None })
            .collect();
        Ok(Self { cov, streams, horizon })
    }

    pub fn dim(&self) -> usize {
        self.cov.nrows()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn streams(&self) -> &[Stream] {
        &self.streams
    }

    pub fn stream(&self, name: &str) -> Result<&Stream> {
        self.streams
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Config(format!("no stream named {name}")))
    }

    /// Global indices of `name` at times `0..=t`.
    pub fn prefix(&self, name: &str, t: usize) -> Result<&[usize]> {
        let s = self.stream(name)?;
        Ok(&s.indices[..=t.min(self.horizon - 1)])
    }
}

/// A read of `source` at `lag` steps in the past, scaled by `coef`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tap {
    pub source: String,
    pub lag: usize,
    pub coef: f64,
}

impl Tap {
    pub fn new(source: &str, lag: usize, coef: f64) -> Self {
        Self { source: source.to_string(), lag, coef }
    }
}

/// Time-invariant causal linear recursion for one stream:
/// `s_t = sum(coef * source_{t - lag}) + noise_t`, with out-of-range reads equal to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamDef {
    pub name: String,
    pub taps: Vec<Tap>,
    pub noise_var: f64,
}

/// Assembles a [`GaussianSystem`] by forward propagation of noise loadings.
///
/// Streams are evaluated in declaration order within each time step, so a
/// lag-0 tap may only read a stream declared earlier. Past values of any
/// declared stream may be read.
#[derive(Debug, Clone)]
pub struct SystemBuilder {
    horizon: usize,
    defs: Vec<StreamDef>,
}

impl SystemBuilder {
    pub fn new(horizon: usize) -> Self {
        Self { horizon, defs: Vec::new() }
    }

    pub fn stream(mut self, name: &str, noise_var: f64, taps: Vec<Tap>) -> Self {
        self.defs.push(StreamDef { name: name.to_string(), taps, noise_var });
        self
    }

    pub fn build(self) -> Result<GaussianSystem> {
        let t_max = self.horizon;
        if t_max == 0 || t_max > MAX_HORIZON {
            return Err(Error::Config(format!("horizon must be in 1..={MAX_HORIZON}, got {t_max}")));
        }
        let position: HashMap<&str, usize> =
            self.defs.iter().enumerate().map(|(i, d)| (d.name.as_str(), i)).collect();
        if position.len() != self.defs.len() {
            return Err(Error::Config("duplicate stream name".into()));
        }
        for (k, def) in self.defs.iter().enumerate() {
            if !(def.noise_var >= 0.0) || !def.noise_var.is_finite() {
                return Err(Error::Config(format!("stream {}: bad noise variance {}", def.name, def.noise_var)));
            }
            for tap in &def.taps {
                let src = *position.get(tap.source.as_str()).ok_or_else(|| {
                    Error::Config(format!("stream {}: unknown source {}", def.name, tap.source))
                })?;
                if tap.lag == 0 && src >= k {
                    return Err(Error::Config(format!(
                        "causality violation: {} reads {} at the same time step",
                        def.name, tap.source
                    )));
                }
                if !tap.coef.is_finite() {
                    return Err(Error::Config(format!("stream {}: non-finite coefficient", def.name)));
                }
            }
        }

        let s = self.defs.len();
        let noises = s * t_max;
        // rows[k * T + t] is the loading of stream k at time t on the noise vector.
        let mut rows = vec![vec![0.0; noises]; noises];
        let mut global = vec![0usize; noises];
        let mut next = 0;
        for t in 0..t_max {
            for (k, def) in self.defs.iter().enumerate() {
                let mut row = vec![0.0; noises];
                for tap in &def.taps {
                    if tap.lag > t {
                        continue;
                    }
                    let src = position[tap.source.as_str()];
                    let from = &rows[src * t_max + t - tap.lag];
                    for (r, f) in row.iter_mut().zip(from) {
                        *r += tap.coef * f;
                    }
                }
                row[k * t_max + t] += def.noise_var.sqrt();
                rows[k * t_max + t] = row;
                global[k * t_max + t] = next;
                next += 1;
            }
        }
        let mut loading = DMatrix::zeros(noises, noises);
        for (i, row) in rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                loading[(global[i], j)] = *v;
            }
        }
        let cov = &loading * loading.transpose();
        let cov = (&cov + cov.transpose()) * 0.5;
        let streams = self
            .defs
            .iter()
            .enumerate()
            .map(|(k, def)| Stream {
                name: def.name.clone(),
                indices: (0..t_max).map(|t| global[k * t_max + t]).collect(),
                parents: Some(def.taps.iter().filter(|tap| tap.coef != 0.0).map(|tap| tap.source.clone()).collect()),
            })
            .collect();
        Ok(GaussianSystem { cov, streams, horizon: t_max })
    }
}

/// Causal channel producing `w_t` from `x_t..x_{t-lag}` and past `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearStageMap {
    pub taps: Vec<Tap>,
    pub noise_var: f64,
}

impl LinearStageMap {
    /// `w_t = x_t + z_t`, `z_t ~ N(0, sigma_z2)`.
    pub fn awgn(sigma_z2: f64) -> Self {
        Self { taps: vec![Tap::new("x", 0, 1.0)], noise_var: sigma_z2 }
    }
}

/// Joint system of the source `x`, the side information `y` (omitted when
/// there is none) and the channel output `w`.
pub fn build_system(params: &ScenarioParams, channel: &LinearStageMap) -> Result<GaussianSystem> {
    params.validate()?;
    for tap in &channel.taps {
        if tap.source != "x" && tap.source != "w" {
            return Err(Error::Config(format!("channel may read x and w only, got {}", tap.source)));
        }
        if tap.source == "w" && tap.lag == 0 {
            return Err(Error::Config("causality violation: w_t reads itself".into()));
        }
    }
    let mut b = SystemBuilder::new(params.horizon).stream("x", params.sigma_v2, vec![Tap::new("x", 1, params.lambda)]);
    if params.has_side_info() {
        b = b.stream("y", params.sigma_n2, vec![Tap::new("x", 0, 1.0)]);
    }
    b.stream("w", channel.noise_var, channel.taps.clone()).build()
}

/// LDL^T factorization of the covariance restricted to `order`, returning the
/// log-determinant (natural log) of every leading block: `out[k]` covers
/// `order[..k]`, so `out[0] = 0`.
fn prefix_logdets(cov: &DMatrix<f64>, order: &[usize]) -> Vec<f64> {
    let n = order.len();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| (0..=i).map(|j| cov[(order[i], order[j])]).collect()).collect();
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut floored = 0usize;
    for j in 0..n {
        let mut d = a[j][j];
        if d < PIVOT_FLOOR {
            floored += 1;
            d = PIVOT_FLOOR;
        }
        out.push(out[j] + d.ln());
        let col: Vec<f64> = (j + 1..n).map(|i| a[i][j] / d).collect();
        for i in j + 1..n {
            if col[i - j - 1] == 0.0 {
                continue;
            }
            let row_i = &mut a[i];
            let aij = row_i[j];
            for k in j + 1..=i {
                row_i[k] -= aij * col[k - j - 1];
            }
        }
    }
    if floored > 0 {
        log::warn!("{floored} conditional variance(s) floored at {PIVOT_FLOOR:e}; system is near-degenerate");
    }
    out
}

fn logdet(cov: &DMatrix<f64>, idx: &[usize]) -> f64 {
    *prefix_logdets(cov, idx).last().unwrap()
}

/// `I(A; B | C)` in bits.
///
/// Indices of `A` and `B` that also appear in `C` are dropped; `A` and `B`
/// must otherwise be disjoint.
pub fn conditional_mi(sys: &GaussianSystem, a: &[usize], b: &[usize], c: &[usize]) -> Result<f64> {
    let n = sys.dim();
    if a.iter().chain(b).chain(c).any(|&i| i >= n) {
        return Err(Error::Config("index out of range".into()));
    }
    let cset: BTreeSet<usize> = c.iter().copied().collect();
    let aset: BTreeSet<usize> = a.iter().copied().filter(|i| !cset.contains(i)).collect();
    let bset: BTreeSet<usize> = b.iter().copied().filter(|i| !cset.contains(i)).collect();
    if aset.is_empty() || bset.is_empty() {
        return Ok(0.0);
    }
    if aset.intersection(&bset).next().is_some() {
        return Err(Error::Domain("A and B overlap outside C".into()));
    }
    let cv: Vec<usize> = cset.iter().copied().collect();
    let join = |x: &BTreeSet<usize>| -> Vec<usize> { cv.iter().copied().chain(x.iter().copied()).collect() };
    let ab: BTreeSet<usize> = aset.union(&bset).copied().collect();
    let nats = 0.5
        * (logdet(&sys.cov, &join(&aset)) + logdet(&sys.cov, &join(&bset))
            - logdet(&sys.cov, &join(&ab))
            - logdet(&sys.cov, &cv));
    Ok(nats.max(0.0) / std::f64::consts::LN_2)
}

/// Builds a time-major ordering from per-step groups, skipping indices
/// already placed, and records the prefix length after each group.
struct Ordering {
    order: Vec<usize>,
    seen: BTreeSet<usize>,
}

impl Ordering {
    fn new() -> Self {
        Self { order: Vec::new(), seen: BTreeSet::new() }
    }

    fn push(&mut self, idx: Option<usize>) -> usize {
        if let Some(i) = idx {
            if self.seen.insert(i) {
                self.order.push(i);
            }
        }
        self.order.len()
    }
}

/// Per-step terms `I(from^t; to_t | to^{t-1}, given^{t-lag})` in bits.
fn di_steps(sys: &GaussianSystem, from: &str, to: &str, given: Option<(&str, usize)>) -> Result<Vec<f64>> {
    let f = &sys.stream(from)?.indices;
    let o = &sys.stream(to)?.indices;
    if f.iter().any(|i| o.contains(i)) {
        return Err(Error::Domain(format!("{from} and {to} share indices")));
    }
    let g: Option<(&Vec<usize>, usize)> = match given {
        Some((name, lag)) if lag <= 1 => Some((&sys.stream(name)?.indices, lag)),
        Some((_, lag)) => return Err(Error::Config(format!("lag must be 0 or 1, got {lag}"))),
        None => None,
    };
    let t_max = sys.horizon();
    let given_at = |t: usize, lag: usize| g.filter(|gg| gg.1 == lag).map(|gg| gg.0[t]);

    // Joint ordering: [g_t if lag 0], from_t, to_t, [g_t if lag 1].
    let mut joint = Ordering::new();
    // Output ordering: [g_t if lag 0], to_t, [g_t if lag 1].
    let mut out = Ordering::new();
    let mut pos = Vec::with_capacity(t_max);
    for t in 0..t_max {
        joint.push(given_at(t, 0));
        let c_len = out.push(given_at(t, 0));
        let a_len = joint.push(Some(f[t]));
        let ab_len = joint.push(Some(o[t]));
        let b_len = out.push(Some(o[t]));
        pos.push((a_len, ab_len, b_len, c_len));
        joint.push(given_at(t, 1));
        out.push(given_at(t, 1));
    }
    let lj = prefix_logdets(&sys.cov, &joint.order);
    let lo = prefix_logdets(&sys.cov, &out.order);
    Ok(pos
        .into_iter()
        .map(|(a, ab, b, c)| (0.5 * (lj[a] + lo[b] - lj[ab] - lo[c])).max(0.0) / std::f64::consts::LN_2)
        .collect())
}

/// `I(from -> to) = sum_t I(from^t; to_t | to^{t-1})` in bits.
pub fn directed_info(sys: &GaussianSystem, from: &str, to: &str) -> Result<f64> {
    Ok(di_steps(sys, from, to, None)?.iter().sum())
}

/// Per-step terms of [`directed_info`].
pub fn directed_info_steps(sys: &GaussianSystem, from: &str, to: &str) -> Result<Vec<f64>> {
    di_steps(sys, from, to, None)
}

/// `sum_t I(from^t; to_t | to^{t-1}, given^{t-lag})` in bits, `lag` 0 or 1.
pub fn causally_conditional_di(sys: &GaussianSystem, from: &str, to: &str, given: &str, lag: usize) -> Result<f64> {
    Ok(di_steps(sys, from, to, Some((given, lag)))?.iter().sum())
}

/// Mutual information between two whole streams.
pub fn stream_mi(sys: &GaussianSystem, a: &str, b: &str) -> Result<f64> {
    conditional_mi(sys, &sys.stream(a)?.indices, &sys.stream(b)?.indices, &[])
}

/// `sum_t I(from^t; (p_t, q_t) | (p, q)^{t-1})`.
fn di_to_pair(sys: &GaussianSystem, from: &str, p: &str, q: &str) -> Result<f64> {
    let f = &sys.stream(from)?.indices;
    let pi = &sys.stream(p)?.indices;
    let qi = &sys.stream(q)?.indices;
    let mut joint = Ordering::new();
    let mut out = Ordering::new();
    let mut pos = Vec::new();
    for t in 0..sys.horizon() {
        let c = out.len_now();
        let a = joint.push(Some(f[t]));
        joint.push(Some(pi[t]));
        let ab = joint.push(Some(qi[t]));
        out.push(Some(pi[t]));
        let b = out.push(Some(qi[t]));
        pos.push((a, ab, b, c));
    }
    pair_sum(sys, &joint, &out, pos)
}

/// `sum_t I((p, q)^t; to_t | to^{t-1})`.
fn di_from_pair(sys: &GaussianSystem, p: &str, q: &str, to: &str) -> Result<f64> {
    let pi = &sys.stream(p)?.indices;
    let qi = &sys.stream(q)?.indices;
    let o = &sys.stream(to)?.indices;
    let mut joint = Ordering::new();
    let mut out = Ordering::new();
    let mut pos = Vec::new();
    for t in 0..sys.horizon() {
        let c = out.len_now();
        joint.push(Some(pi[t]));
        let a = joint.push(Some(qi[t]));
        let ab = joint.push(Some(o[t]));
        let b = out.push(Some(o[t]));
        pos.push((a, ab, b, c));
    }
    pair_sum(sys, &joint, &out, pos)
}

impl Ordering {
    fn len_now(&self) -> usize {
        self.order.len()
    }
}

fn pair_sum(sys: &GaussianSystem, joint: &Ordering, out: &Ordering, pos: Vec<(usize, usize, usize, usize)>) -> Result<f64> {
    let lj = prefix_logdets(&sys.cov, &joint.order);
    let lo = prefix_logdets(&sys.cov, &out.order);
    Ok(pos
        .into_iter()
        .map(|(a, ab, b, c)| (0.5 * (lj[a] + lo[b] - lj[ab] - lo[c])).max(0.0) / std::f64::consts::LN_2)
        .sum())
}

/// Both decompositions of the chain rule for directed information.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainRuleReport {
    /// `I((x,y) -> z)` against `I(x -> z) + I(y -> z || x)`.
    pub joint_input: (f64, f64),
    /// `I(x -> (y,z))` against `I(x -> y || z^{T-1}) + I(x -> z || y)`.
    pub joint_output: (f64, f64),
}

impl ChainRuleReport {
    pub fn residuals(&self) -> (f64, f64) {
        (
            (self.joint_input.0 - self.joint_input.1).abs(),
            (self.joint_output.0 - self.joint_output.1).abs(),
        )
    }

    pub fn max_residual(&self) -> f64 {
        let (a, b) = self.residuals();
        a.max(b)
    }
}

pub fn verify_chain_rule(sys: &GaussianSystem, x: &str, y: &str, z: &str) -> Result<ChainRuleReport> {
    let lhs1 = di_from_pair(sys, x, y, z)?;
    let rhs1 = directed_info(sys, x, z)? + causally_conditional_di(sys, y, z, x, 0)?;
    let lhs2 = di_to_pair(sys, x, y, z)?;
    let rhs2 = causally_conditional_di(sys, x, y, z, 1)? + causally_conditional_di(sys, x, z, y, 0)?;
    Ok(ChainRuleReport { joint_input: (lhs1, rhs1), joint_output: (lhs2, rhs2) })
}

/// Both sides of `I(x -> u) <= I(x -> a || u^{T-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct DpiReport {
    pub lhs: f64,
    pub rhs: f64,
}

impl DpiReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= self.rhs + slack
    }
}

/// Evaluates the directed-information processing inequality.
///
/// Both `u` and `x` must come from a recorded construction: `u` may read only
/// `a` and its own past (plus fresh noise), and `x` only its own past and
/// past `u`. The second condition is not implied by the Markov chain
/// `(x_t, a^{t-1}) -> (a^t, u^{t-1}) -> u_t` alone; with `x_t` reading past
/// `a` the inequality can fail.
pub fn verify_dpi(sys: &GaussianSystem, x: &str, a: &str, u: &str) -> Result<DpiReport> {
    let check = |name: &str, allowed: &[&str]| -> Result<()> {
        let parents = sys.stream(name)?.parents.as_ref().ok_or_else(|| {
            Error::Config(format!("stream {name} has no recorded construction; Markov premise unknown"))
        })?;
        match parents.iter().find(|p| !allowed.contains(&p.as_str())) {
            Some(bad) => Err(Error::Config(format!("stream {name} reads {bad}; allowed: {}", allowed.join(", ")))),
            None => Ok(()),
        }
    };
    check(u, &[a, u])?;
    check(x, &[x, u])?;
    Ok(DpiReport {
        lhs: directed_info(sys, x, u)?,
        rhs: causally_conditional_di(sys, x, a, u, 1)?,
    })
}

/// Random causal system. Each entry is a stream name with the names it may
/// read; lag-0 taps are drawn only from earlier entries, lags 1 and 2 from
/// any allowed stream. Coefficients are uniform on [-1, 1] and noise
/// variances uniform on [0.1, 2].
pub fn random_causal_system(seed: u64, horizon: usize, streams: &[(&str, &[&str])]) -> Result<GaussianSystem> {
    let mut rng = seeded_rng(seed, 0);
    let mut b = SystemBuilder::new(horizon);
    for (k, (name, allowed)) in streams.iter().enumerate() {
        let mut taps = Vec::new();
        for src in allowed.iter() {
            let earlier = streams[..k].iter().any(|s| s.0 == *src);
            for lag in 0..=2usize {
                if lag == 0 && !earlier {
                    continue;
                }
                if rng.random_bool(0.6) {
                    taps.push(Tap::new(src, lag, rng.random_range(-1.0..=1.0)));
                }
            }
        }
        b = b.stream(name, rng.random_range(0.1..=2.0), taps);
    }
    b.build()
}
