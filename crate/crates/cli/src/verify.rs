//! The verification suite behind `crdflab verify` and `run --verify`.
//!
//! Report format, one line per check: `<name> <PASS|FAIL> <value>`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crdflab_core::bounds::{check_inequality_chain, crdf_no_si, crdf_two_sided, ChainCurves, ChainReport, ChainViolation, CHAIN_SLACK};
use crdflab_core::di::{random_causal_system, verify_chain_rule, verify_dpi};
use crdflab_core::envelope::{solve_dc, tangency_residual};
use crdflab_core::gauss_tc::run_recursion;
use crdflab_core::oracle::{monte_carlo_mmse, riccati, Observations};
use crdflab_core::{RDCurve, ScenarioParams};

use crate::config::{CurveSelector, RunConfig};
use crate::output::read_csv_points;
use crate::CliError;

/// Curves every verification needs besides the selected ones.
pub const REQUIRED: [CurveSelector; 3] =
    [CurveSelector::NoSi, CurveSelector::TwoSided, CurveSelector::GaussTcConvexified];

const RANDOM_SYSTEMS: u64 = 100;
const MC_TRIALS: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: String,
}

impl CheckResult {
    fn new(name: impl Into<String>, passed: bool, value: impl Into<String>) -> Self {
        Self { name: name.into(), passed, value: value.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {} {}", c.name, if c.passed { "PASS" } else { "FAIL" }, c.value)?;
        }
        Ok(())
    }
}

/// Curves that must lie between the two-sided bound and the no-SI CRDF.
/// The memoryless envelope bound only qualifies for `lambda = 0`.
fn bracketed(sel: CurveSelector, scenario: &ScenarioParams) -> bool {
    match sel {
        CurveSelector::GaussTcConvexified => true,
        CurveSelector::WeUpper => scenario.lambda == 0.0,
        _ => false,
    }
}

fn chain_result(name: &str, report: &ChainReport) -> CheckResult {
    match report.first_violation() {
        None => CheckResult::new(
            name,
            true,
            format!("min_margin={:.3e} comparisons={}", report.min_margin, report.comparisons),
        ),
        Some(v) => CheckResult::new(
            name,
            false,
            format!(
                "{} violated at D={:.11e}: {:.11e} > {:.11e} ({} violations)",
                v.relation,
                v.distortion,
                v.lower_rate,
                v.upper_rate,
                report.violations.len()
            ),
        ),
    }
}

/// The ordering `two-sided <= bracketed curves <= no-si`, and `two-sided <=
/// modulo`. The modulo frontier interpolates between sparse grid vertices, so
/// it is not compared with the no-SI CRDF.
fn chain_checks(
    grid: &[f64],
    curves: &BTreeMap<CurveSelector, RDCurve>,
    scenario: &ScenarioParams,
) -> Result<Vec<CheckResult>, CliError> {
    let on_grid = |s: CurveSelector| curves[&s].resample(grid);
    let two_sided = on_grid(CurveSelector::TwoSided)?;
    let no_si = on_grid(CurveSelector::NoSi)?;
    let upper: Vec<RDCurve> = curves
        .keys()
        .filter(|s| bracketed(**s, scenario))
        .map(|&s| on_grid(s))
        .collect::<Result<_, _>>()?;
    let report = check_inequality_chain(
        grid,
        &ChainCurves { two_sided: &two_sided, no_si: &no_si, achievable: upper.iter().collect() },
    )?;
    let mut out = vec![chain_result("inequality-chain", &report)];
    if let Some(modulo) = curves.get(&CurveSelector::Modulo) {
        let mut report = ChainReport { comparisons: 0, min_margin: f64::INFINITY, violations: Vec::new() };
        for p in two_sided.points() {
            let Some(r) = modulo.rate_at(p.distortion) else { continue };
            report.comparisons += 1;
            report.min_margin = report.min_margin.min(r - p.rate);
            if p.rate > r + CHAIN_SLACK {
                report.violations.push(ChainViolation {
                    relation: "two-sided <= modulo".into(),
                    distortion: p.distortion,
                    lower_rate: p.rate,
                    upper_rate: r,
                });
            }
        }
        out.push(chain_result("modulo-above-two-sided", &report));
    }
    Ok(out)
}

/// Largest rate saving of the modulo frontier over the convexified Gaussian curve on the grid.
fn modulo_gain(grid: &[f64], curves: &BTreeMap<CurveSelector, RDCurve>) -> CheckResult {
    let (m, g) = (&curves[&CurveSelector::Modulo], &curves[&CurveSelector::GaussTcConvexified]);
    let best = grid
        .iter()
        .filter_map(|&d| Some((d, g.rate_at(d)? - m.rate_at(d)?)))
        .fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    CheckResult::new(
        "modulo-improves-gauss-tc",
        best.1 > CHAIN_SLACK,
        format!("max_gain={:.3e} at D={:.11e}", best.1, best.0),
    )
}

fn di_checks(seed: u64) -> Result<Vec<CheckResult>, CliError> {
    const ALL: &[&str] = &["x", "y", "z"];
    let mut worst: f64 = 0.0;
    let mut dpi_margin = f64::INFINITY;
    for i in 0..RANDOM_SYSTEMS {
        let s = seed.wrapping_mul(1_000_003).wrapping_add(i);
        let horizon = 1 + (i as usize % 4);
        let sys = random_causal_system(s, horizon, &[("x", ALL), ("y", ALL), ("z", ALL)])?;
        worst = worst.max(verify_chain_rule(&sys, "x", "y", "z")?.max_residual());
        let sys = random_causal_system(s, horizon, &[("x", &["x", "u"]), ("a", &["x", "a", "u"]), ("u", &["a", "u"])])?;
        let r = verify_dpi(&sys, "x", "a", "u")?;
        dpi_margin = dpi_margin.min(r.rhs - r.lhs);
    }
    Ok(vec![
        CheckResult::new("di-chain-rule", worst < 1e-9, format!("max_residual={worst:.3e} systems={RANDOM_SYSTEMS}")),
        CheckResult::new("di-dpi", dpi_margin >= -1e-9, format!("min_margin={dpi_margin:.3e} systems={RANDOM_SYSTEMS}")),
    ])
}

fn oracle_checks(scenario: &ScenarioParams, seed: u64) -> Result<Vec<CheckResult>, CliError> {
    let sz2 = scenario.sigma_v2;
    let tr = run_recursion(scenario, sz2, scenario.horizon)?;
    let k = riccati(scenario, sz2, Observations::BOTH)?;
    let worst = tr.d.iter().zip(&k.post_var).map(|(a, b)| (a - b).abs() / b.max(1.0)).fold(0.0, f64::max);

    let short = ScenarioParams { horizon: scenario.horizon.min(50), ..*scenario };
    let mc = monte_carlo_mmse(&short, sz2, Observations::BOTH, MC_TRIALS, seed)?;
    let k = riccati(&short, sz2, Observations::BOTH)?;
    let agreement = mc.agreement(&k.post_var, 3.0);
    Ok(vec![
        CheckResult::new("riccati-trace", worst < 1e-12, format!("max_rel_diff={worst:.3e} steps={}", scenario.horizon)),
        CheckResult::new(
            "mc-oracle",
            agreement >= 0.95,
            format!("within_3se={agreement:.3} trials={MC_TRIALS} steps={}", short.horizon),
        ),
    ])
}

fn tangency_check(scenario: &ScenarioParams) -> Result<Option<CheckResult>, CliError> {
    let Some(d_c) = solve_dc(scenario.sigma_v2, scenario.sigma_n2)? else {
        return Ok(None);
    };
    let res = tangency_residual(d_c, scenario.sigma_v2, scenario.sigma_n2).abs();
    Ok(Some(CheckResult::new("we-tangency", res < 1e-9, format!("D_c={d_c:.11e} residual={res:.3e}"))))
}

/// Checks a curve file against the two-sided bound (below) and the no-SI
/// CRDF (above) at its own distortions, and that it is non-increasing.
pub fn check_curve_file(path: &Path, scenario: &ScenarioParams) -> Result<CheckResult, CliError> {
    let (label, rows) = read_csv_points(path)?;
    let name = format!("check-file:{label}");
    if rows.is_empty() {
        return Ok(CheckResult::new(name, false, "no data rows"));
    }
    let mut failures = Vec::new();
    for (i, &(d, r)) in rows.iter().enumerate() {
        if !(d > 0.0 && d.is_finite() && r >= 0.0 && r.is_finite()) {
            failures.push(format!("row {} (D={d:.11e}, R={r:.11e}): not a valid point", i + 1));
            continue;
        }
        let lo = crdf_two_sided(d, scenario.lambda, scenario.sigma_v2, scenario.sigma_n2)?;
        let hi = crdf_no_si(d, scenario.lambda, scenario.sigma_v2)?;
        if r < lo - CHAIN_SLACK {
            failures.push(format!("row {} (D={d:.11e}, R={r:.11e}): below two-sided bound {lo:.11e}", i + 1));
        } else if r > hi + CHAIN_SLACK {
            failures.push(format!("row {} (D={d:.11e}, R={r:.11e}): above no-si bound {hi:.11e}", i + 1));
        }
        if let Some(&(dp, rp)) = i.checked_sub(1).map(|j| &rows[j]) {
            if d <= dp || r > rp + CHAIN_SLACK {
                failures.push(format!("row {} (D={d:.11e}, R={r:.11e}): not monotone after (D={dp:.11e}, R={rp:.11e})", i + 1));
            }
        }
    }
    Ok(match failures.first() {
        None => CheckResult::new(name, true, format!("rows={}", rows.len())),
        Some(first) => CheckResult::new(name, false, format!("{first} ({} failures)", failures.len())),
    })
}

/// Runs every check on already computed curves. `curves` must contain [`REQUIRED`].
pub fn run_checks(
    config: &RunConfig,
    grid: &[f64],
    curves: &BTreeMap<CurveSelector, RDCurve>,
    check_file: Option<&Path>,
) -> Result<VerifyReport, CliError> {
    let scenario = &config.scenario;
    let mut checks = chain_checks(grid, curves, scenario)?;
    if curves.contains_key(&CurveSelector::Modulo) {
        checks.push(modulo_gain(grid, curves));
    }
    checks.extend(di_checks(config.seed)?);
    checks.extend(oracle_checks(scenario, config.seed)?);
    checks.extend(tangency_check(scenario)?);
    if let Some(path) = check_file {
        checks.push(check_curve_file(path, scenario)?);
    }
    Ok(VerifyReport { checks })
}
