use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crdflab::config::{parse_curves, parse_formats, Formats};
use crdflab::{CliError, CurveSelector, GaussMode, Overrides, Preset};

/// Causal rate-distortion curves and their verification.
#[derive(Parser)]
#[command(name = "crdflab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the selected curves and write CSV files and an SVG plot.
    Run(CommonArgs),
    /// Run the verification suite and write verify.txt.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// Extra curve file to check against the closed-form bounds.
        #[arg(long)]
        check_file: Option<PathBuf>,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_preset)]
    preset: Option<Preset>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    #[arg(long)]
    sigma_v: Option<f64>,
    /// Side-information noise standard deviation (`inf` for none).
    #[arg(long)]
    sigma_n: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    grid_min: Option<f64>,
    #[arg(long)]
    grid_max: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// Comma-separated: no-si, two-sided, gauss-tc, gauss-tc-convexified, modulo, we-upper.
    #[arg(long, value_parser = parse_curve_list)]
    curves: Option<CurveList>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run the verification suite after writing the curves.
    #[arg(long)]
    verify: bool,
    /// Comma-separated output formats: csv, svg.
    #[arg(long, value_parser = parse_format_list)]
    format: Option<Formats>,
    /// uniform-d or fixed-sigma-z.
    #[arg(long, value_parser = parse_gauss_mode)]
    gauss_mode: Option<GaussMode>,
}

#[derive(Clone)]
struct CurveList(Vec<CurveSelector>);

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: CliError| e.message())
}

fn parse_curve_list(s: &str) -> Result<CurveList, String> {
    parse_curves(s).map(CurveList).map_err(|e| e.message())
}

fn parse_format_list(s: &str) -> Result<Formats, String> {
    parse_formats(s).map_err(|e| e.message())
}

fn parse_gauss_mode(s: &str) -> Result<GaussMode, String> {
    s.parse().map_err(|e: CliError| e.message())
}

impl CommonArgs {
    fn overrides(&self) -> Result<Overrides, CliError> {
        let file = match &self.config {
            Some(path) => Overrides::load(path)?,
            None => Overrides::default(),
        };
        let flags = Overrides {
            preset: self.preset,
            lambda: self.lambda,
            sigma_v: self.sigma_v,
            sigma_n: self.sigma_n,
            horizon: self.horizon,
            grid_min: self.grid_min,
            grid_max: self.grid_max,
            grid_points: self.grid_points,
            curves: self.curves.clone().map(|c| c.0),
            out: self.out.clone(),
            seed: self.seed,
            verify: self.verify.then_some(true),
            formats: self.format,
            gauss_mode: self.gauss_mode,
        };
        Ok(file.merge(flags))
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("CRDFLAB_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("CRDFLAB_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    init_threads()?;
    match cli.command {
        Command::Run(args) => {
            let config = args.overrides()?.resolve()?;
            let outcome = crdflab::run(&config)?;
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if let Some(report) = &outcome.report {
                print!("{report}");
            }
            Ok(outcome.passed())
        }
        Command::Verify { common, check_file } => {
            let config = common.overrides()?.resolve()?;
            let report = crdflab::verify(&config, check_file.as_deref())?;
            print!("{report}");
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("crdflab: verification failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("crdflab: {e}");
            ExitCode::from(2)
        }
    }
}
