//! Library side of the `crdflab` command: curve computation for a
//! [`RunConfig`], artifact writing and the verification report.

pub mod config;
pub mod output;
pub mod verify;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crdflab_core::bounds::BoundKind;
use crdflab_core::envelope::weissman_elgamal_envelope;
use crdflab_core::gauss_tc::{convexified_curve, sweep_curve, SweepMode};
use crdflab_core::model::log_grid;
use crdflab_core::modulo::{sweep_modulo_curve, ModuloGrid, Quadrature};
use crdflab_core::RDCurve;

pub use config::{CurveSelector, GaussMode, Overrides, Preset, RunConfig};
pub use verify::{CheckResult, VerifyReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] crdflab_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    /// The message without the variant prefix.
    pub fn message(&self) -> String {
        match self {
            CliError::Config(m) => m.clone(),
            other => other.to_string(),
        }
    }
}

/// Computes one curve. Bounds and the Gaussian curves are evaluated on `grid`;
/// the modulo frontier keeps its own vertices.
pub fn compute_curve(sel: CurveSelector, config: &RunConfig, grid: &[f64]) -> Result<RDCurve, CliError> {
    let p = &config.scenario;
    let gauss_raw = || -> Result<RDCurve, CliError> {
        let mode = match config.gauss_mode {
            GaussMode::UniformD => SweepMode::UniformD(grid.to_vec()),
            GaussMode::FixedSigmaZ => SweepMode::FixedSigmaZ(log_grid(1e-5 * p.sigma_v2, 1e4 * p.sigma_v2, grid.len())?),
        };
        Ok(sweep_curve(p, &mode)?)
    };
    let curve = match sel {
        CurveSelector::NoSi => BoundKind::CausalNoSi.curve(p, grid)?,
        CurveSelector::TwoSided => BoundKind::CausalTwoSided.curve(p, grid)?,
        CurveSelector::GaussTc => gauss_raw()?,
        CurveSelector::GaussTcConvexified => convexified_curve(p, &gauss_raw()?)?,
        CurveSelector::Modulo => sweep_modulo_curve(p, &ModuloGrid::default(), &Quadrature::default())?.curve,
        CurveSelector::WeUpper => weissman_elgamal_envelope(p.sigma_v2, p.sigma_n2, grid)?.curve.with_label("we-upper"),
    };
    Ok(curve.with_label(sel.label()))
}

/// All requested curves, computed concurrently.
pub fn compute_curves(
    selectors: &[CurveSelector],
    config: &RunConfig,
    grid: &[f64],
) -> Result<BTreeMap<CurveSelector, RDCurve>, CliError> {
    selectors
        .par_iter()
        .map(|&s| Ok((s, compute_curve(s, config, grid)?)))
        .collect()
}

#[derive(Debug)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub report: Option<VerifyReport>,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.report.as_ref().is_none_or(VerifyReport::passed)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Writes one CSV per selected curve and the combined SVG; with
/// `config.verify` also runs the verification suite and writes `verify.txt`.
pub fn run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    config.validate()?;
    let grid = config.grid.resolve(&config.scenario)?;
    let mut wanted = config.curves.clone();
    if config.verify {
        wanted.extend(verify::REQUIRED);
        wanted.sort();
        wanted.dedup();
    }
    let curves = compute_curves(&wanted, config, &grid)?;

    let out = &config.output;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut files = Vec::new();
    let selected: Vec<RDCurve> = config.curves.iter().map(|s| curves[s].clone()).collect();
    if config.formats.csv {
        for c in &selected {
            let path = out.join(format!("{}.csv", c.label()));
            write_file(&path, &output::curve_csv(c, config))?;
            files.push(path);
        }
    }
    if config.formats.svg {
        let path = out.join(format!("{}.svg", config.name));
        write_file(&path, &output::curves_svg(&selected, config, grid[0], grid[grid.len() - 1]))?;
        files.push(path);
    }

    let report = if config.verify {
        let report = verify::run_checks(config, &grid, &curves, None)?;
        let path = out.join("verify.txt");
        write_file(&path, &report.to_string())?;
        files.push(path);
        Some(report)
    } else {
        None
    };
    Ok(RunOutcome { files, report })
}

/// Computes the curves needed for the ordering checks, runs every check and
/// writes `verify.txt` into the output directory.
pub fn verify(config: &RunConfig, check_file: Option<&Path>) -> Result<VerifyReport, CliError> {
    config.validate()?;
    let grid = config.grid.resolve(&config.scenario)?;
    let mut wanted = config.curves.clone();
    wanted.extend(verify::REQUIRED);
    wanted.sort();
    wanted.dedup();
    let curves = compute_curves(&wanted, config, &grid)?;
    let report = verify::run_checks(config, &grid, &curves, check_file)?;
    let out = &config.output;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_file(&out.join("verify.txt"), &report.to_string())?;
    Ok(report)
}
