//! Run configuration: presets, the flat `key = value` file format and flag overrides.
//!
//! File grammar, one entry per line:
//!
//! ```text
//! # comment
//! key = value
//! ```
//!
//! Keys: `preset`, `lambda`, `sigma_v`, `sigma_n`, `horizon`, `grid_min`,
//! `grid_max`, `grid_points`, `curves`, `out`, `seed`, `verify`, `format`,
//! `gauss_mode`. `curves` and `format` take comma-separated lists; `sigma_n =
//! inf` removes the side information. Blank lines and text after `#` are ignored.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crdflab_core::model::log_grid;
use crdflab_core::ScenarioParams;
use crdflab_core::bounds::BoundKind;

use crate::CliError;

/// One curve the run can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CurveSelector {
    NoSi,
    TwoSided,
    GaussTc,
    GaussTcConvexified,
    Modulo,
    WeUpper,
}

impl CurveSelector {
    pub const ALL: [CurveSelector; 6] = [
        CurveSelector::NoSi,
        CurveSelector::TwoSided,
        CurveSelector::GaussTc,
        CurveSelector::GaussTcConvexified,
        CurveSelector::Modulo,
        CurveSelector::WeUpper,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CurveSelector::NoSi => "no-si",
            CurveSelector::TwoSided => "two-sided",
            CurveSelector::GaussTc => "gauss-tc",
            CurveSelector::GaussTcConvexified => "gauss-tc-convexified",
            CurveSelector::Modulo => "modulo",
            CurveSelector::WeUpper => "we-upper",
        }
    }
}

impl fmt::Display for CurveSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CurveSelector {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Self::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| CliError::Config(format!("unknown curve '{s}'")))
    }
}

/// How the Gaussian test-channel curve is swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussMode {
    /// `D_t = D` for every step, one point per grid distortion.
    UniformD,
    /// Fixed channel noise, `sigma_z2` log-spaced over `[1e-5, 1e4] sigma_v2`.
    FixedSigmaZ,
}

impl FromStr for GaussMode {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "uniform-d" => Ok(GaussMode::UniformD),
            "fixed-sigma-z" => Ok(GaussMode::FixedSigmaZ),
            _ => Err(CliError::Config(format!("unknown gauss_mode '{s}' (uniform-d | fixed-sigma-z)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2a,
    Fig2b,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2a => "fig2a",
            Preset::Fig2b => "fig2b",
        }
    }

    pub fn lambda(self) -> f64 {
        match self {
            Preset::Fig2a => 0.0,
            Preset::Fig2b => 0.9,
        }
    }

    /// The memoryless envelope bound is only an achievable curve for `lambda = 0`.
    pub fn curves(self) -> Vec<CurveSelector> {
        let mut c = vec![
            CurveSelector::NoSi,
            CurveSelector::TwoSided,
            CurveSelector::GaussTc,
            CurveSelector::GaussTcConvexified,
            CurveSelector::Modulo,
        ];
        if self == Preset::Fig2a {
            c.push(CurveSelector::WeUpper);
        }
        c
    }
}

impl FromStr for Preset {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "fig2a" => Ok(Preset::Fig2a),
            "fig2b" => Ok(Preset::Fig2b),
            _ => Err(CliError::Config(format!("unknown preset '{s}' (fig2a | fig2b)"))),
        }
    }
}

/// Log-spaced distortion grid; unset bounds default to `1e-4 sigma_v2` and
/// the zero-rate distortion of the two-sided bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub points: usize,
}

impl GridSpec {
    pub fn resolve(&self, scenario: &ScenarioParams) -> Result<Vec<f64>, CliError> {
        let min = self.min.unwrap_or(1e-4 * scenario.sigma_v2);
        let max = match self.max {
            Some(m) => m,
            None => {
                let d = BoundKind::CausalTwoSided.zero_rate_distortion(scenario);
                if !d.is_finite() {
                    return Err(CliError::Config(
                        "zero-rate distortion is infinite for this scenario; set grid_max".into(),
                    ));
                }
                d
            }
        };
        if !(min > 0.0 && max > min && max.is_finite()) {
            return Err(CliError::Config(format!("grid bounds must satisfy 0 < min < max, got [{min}, {max}]")));
        }
        if self.points < 2 {
            return Err(CliError::Config(format!("grid needs at least 2 points, got {}", self.points)));
        }
        Ok(log_grid(min, max, self.points)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Base name of the SVG (the preset name, or `crdf`).
    pub name: String,
    pub scenario: ScenarioParams,
    pub curves: Vec<CurveSelector>,
    pub grid: GridSpec,
    pub output: PathBuf,
    pub seed: u64,
    pub verify: bool,
    pub formats: Formats,
    pub gauss_mode: GaussMode,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        Self {
            name: preset.name().into(),
            scenario: ScenarioParams::reference(preset.lambda()),
            curves: preset.curves(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.curves.is_empty() {
            return Err(CliError::Config("at least one curve must be selected".into()));
        }
        self.scenario.validate()?;
        self.grid.resolve(&self.scenario)?;
        if !self.formats.csv && !self.formats.svg {
            return Err(CliError::Config("no output format selected".into()));
        }
        Ok(())
    }

    pub fn sigma_v(&self) -> f64 {
        self.scenario.sigma_v2.sqrt()
    }

    pub fn sigma_n(&self) -> f64 {
        self.scenario.sigma_n2.sqrt()
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: "crdf".into(),
            scenario: ScenarioParams::reference(0.0),
            curves: vec![CurveSelector::NoSi, CurveSelector::TwoSided, CurveSelector::GaussTcConvexified],
            grid: GridSpec { min: None, max: None, points: 256 },
            output: PathBuf::from("out"),
            seed: 1,
            verify: false,
            formats: Formats { csv: true, svg: true },
            gauss_mode: GaussMode::UniformD,
        }
    }
}

/// Partial settings from a config file or from flags. Later layers win.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub preset: Option<Preset>,
    pub lambda: Option<f64>,
    pub sigma_v: Option<f64>,
    pub sigma_n: Option<f64>,
    pub horizon: Option<usize>,
    pub grid_min: Option<f64>,
    pub grid_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub curves: Option<Vec<CurveSelector>>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub verify: Option<bool>,
    pub formats: Option<Formats>,
    pub gauss_mode: Option<GaussMode>,
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("invalid value '{value}' for {key}")))
}

pub fn parse_curves(value: &str) -> Result<Vec<CurveSelector>, CliError> {
    let mut out: Vec<CurveSelector> = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let c: CurveSelector = part.parse()?;
        if !out.contains(&c) {
            out.push(c);
        }
    }
    Ok(out)
}

pub fn parse_formats(value: &str) -> Result<Formats, CliError> {
    let mut f = Formats { csv: false, svg: false };
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part {
            "csv" => f.csv = true,
            "svg" => f.svg = true,
            _ => return Err(CliError::Config(format!("unknown format '{part}' (csv | svg)"))),
        }
    }
    Ok(f)
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("invalid value '{value}' for {key}"))),
    }
}

impl Overrides {
    pub fn parse_file(text: &str) -> Result<Self, CliError> {
        let mut o = Overrides::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", n + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            o.set(key, value)
                .map_err(|e| CliError::Config(format!("line {}: {}", n + 1, e.message())))?;
        }
        Ok(o)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse_file(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "preset" => self.preset = Some(value.parse()?),
            "lambda" => self.lambda = Some(parse_num(key, value)?),
            "sigma_v" => self.sigma_v = Some(parse_num(key, value)?),
            "sigma_n" => self.sigma_n = Some(parse_num(key, value)?),
            "horizon" => self.horizon = Some(parse_num(key, value)?),
            "grid_min" => self.grid_min = Some(parse_num(key, value)?),
            "grid_max" => self.grid_max = Some(parse_num(key, value)?),
            "grid_points" => self.grid_points = Some(parse_num(key, value)?),
            "curves" => self.curves = Some(parse_curves(value)?),
            "out" => self.out = Some(PathBuf::from(value)),
            "seed" => self.seed = Some(parse_num(key, value)?),
            "verify" => self.verify = Some(parse_bool(key, value)?),
            "format" => self.formats = Some(parse_formats(value)?),
            "gauss_mode" => self.gauss_mode = Some(value.parse()?),
            _ => return Err(CliError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// `self` with every field that `later` sets replaced.
    pub fn merge(self, later: Overrides) -> Overrides {
        Overrides {
            preset: later.preset.or(self.preset),
            lambda: later.lambda.or(self.lambda),
            sigma_v: later.sigma_v.or(self.sigma_v),
            sigma_n: later.sigma_n.or(self.sigma_n),
            horizon: later.horizon.or(self.horizon),
            grid_min: later.grid_min.or(self.grid_min),
            grid_max: later.grid_max.or(self.grid_max),
            grid_points: later.grid_points.or(self.grid_points),
            curves: later.curves.or(self.curves),
            out: later.out.or(self.out),
            seed: later.seed.or(self.seed),
            verify: later.verify.or(self.verify),
            formats: later.formats.or(self.formats),
            gauss_mode: later.gauss_mode.or(self.gauss_mode),
        }
    }

    /// Applies the layers on top of the preset (or the defaults) and validates.
    pub fn resolve(self) -> Result<RunConfig, CliError> {
        let mut c = match self.preset {
            Some(p) => RunConfig::preset(p),
            None => RunConfig::default(),
        };
        if let Some(v) = self.lambda {
            c.scenario.lambda = v;
        }
        if let Some(v) = self.sigma_v {
            c.scenario.sigma_v2 = v * v;
        }
        if let Some(v) = self.sigma_n {
            c.scenario.sigma_n2 = v * v;
        }
        if let Some(v) = self.horizon {
            c.scenario.horizon = v;
        }
        if let Some(v) = self.grid_min {
            c.grid.min = Some(v);
        }
        if let Some(v) = self.grid_max {
            c.grid.max = Some(v);
        }
        if let Some(v) = self.grid_points {
            c.grid.points = v;
        }
        if let Some(v) = self.curves {
            c.curves = v;
        }
        if let Some(v) = self.out {
            c.output = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.verify {
            c.verify = v;
        }
        if let Some(v) = self.formats {
            c.formats = v;
        }
        if let Some(v) = self.gauss_mode {
            c.gauss_mode = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_grammar() {
        let o = Overrides::parse_file(
            "# fig 2b variant\npreset = fig2b\n\nsigma_n = inf  # no side information\ncurves = no-si, gauss-tc\n",
        )
        .unwrap();
        assert_eq!(o.preset, Some(Preset::Fig2b));
        assert_eq!(o.sigma_n, Some(f64::INFINITY));
        assert_eq!(o.curves, Some(vec![CurveSelector::NoSi, CurveSelector::GaussTc]));
        let err = Overrides::parse_file("lambda 0.5").unwrap_err();
        assert!(err.to_string().contains("line 1"));
        assert!(Overrides::parse_file("colour = red").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let file = Overrides { lambda: Some(0.5), seed: Some(3), ..Default::default() };
        let flags = Overrides { lambda: Some(0.7), ..Default::default() };
        let c = file.merge(flags).resolve().unwrap();
        assert_eq!(c.scenario.lambda, 0.7);
        assert_eq!(c.seed, 3);
    }

    #[test]
    fn presets_pin_reference_parameters() {
        let c = RunConfig::preset(Preset::Fig2b);
        assert_eq!(c.scenario, ScenarioParams::reference(0.9));
        assert_eq!(c.grid.resolve(&c.scenario).unwrap().len(), 256);
        assert!(c.curves.contains(&CurveSelector::Modulo));
    }

    #[test]
    fn empty_curve_list_is_rejected() {
        let o = Overrides { curves: Some(parse_curves("").unwrap()), ..Default::default() };
        assert!(matches!(o.resolve(), Err(CliError::Config(_))));
    }
}
