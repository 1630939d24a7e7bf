//! Command-line argument definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geofield::Grid;

#[derive(Parser, Debug)]
#[command(
    name = "geofield",
    version,
    about = "Spatial prediction: variograms, kriging, thin-plate splines, and their comparison"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate the empirical semivariogram and fit a Gaussian covariogram
    Variogram(VariogramArgs),
    /// Kriging prediction with variance on a regular grid
    Krige(KrigeArgs),
    /// Thin-plate spline prediction on a regular grid
    Spline(SplineArgs),
    /// Leave-one-out comparison of the kriging and spline predictors
    Compare(CompareArgs),
    /// Draw a seeded Gaussian random field realization
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Clone, Copy)]
pub struct TrendOpts {
    /// Detrending applied before analysis
    #[arg(long, value_enum, default_value_t = TrendKind::None)]
    pub trend: TrendKind,
    /// Rows of the median-polish binning table (default: ceil(sqrt(n/2)))
    #[arg(long)]
    pub trend_rows: Option<usize>,
    /// Columns of the median-polish binning table
    #[arg(long)]
    pub trend_cols: Option<usize>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendKind {
    None,
    MedianPolish,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefitArg {
    Fixed,
    Strict,
}

#[derive(Args, Debug)]
pub struct VariogramArgs {
    /// Observations CSV with header x,y,value
    #[arg(long)]
    pub input: PathBuf,
    /// Report file to write
    #[arg(long)]
    pub output: PathBuf,
    /// Number of lag bins
    #[arg(long, default_value_t = geofield::variogram::DEFAULT_BINS)]
    pub bins: usize,
    /// Maximum lag (default: half the maximum pairwise distance)
    #[arg(long)]
    pub max_lag: Option<f64>,
    #[command(flatten)]
    pub trend: TrendOpts,
}

#[derive(Args, Debug)]
pub struct KrigeArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Grid CSV to write (x,y,prediction,variance)
    #[arg(long)]
    pub output: PathBuf,
    /// Drift degree: 0 = constant (ordinary), 1 = affine (universal)
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub drift: u8,
    #[arg(long, default_value_t = geofield::variogram::DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long)]
    pub max_lag: Option<f64>,
    /// Explicit covariogram nugget (bypasses variogram fitting; give all
    /// three of --nugget --partial-sill --range)
    #[arg(long, requires = "partial_sill")]
    pub nugget: Option<f64>,
    /// Explicit covariogram partial sill
    #[arg(long, requires = "range")]
    pub partial_sill: Option<f64>,
    /// Explicit covariogram range
    #[arg(long, requires = "nugget")]
    pub range: Option<f64>,
    /// Prediction grid as xmin,xmax,ymin,ymax,nx,ny
    #[arg(long, value_parser = parse_grid)]
    pub grid: Grid,
    #[command(flatten)]
    pub trend: TrendOpts,
}

#[derive(Args, Debug)]
pub struct SplineArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Grid CSV to write (x,y,prediction)
    #[arg(long)]
    pub output: PathBuf,
    /// Smoothing parameter: "auto" for GCV selection or a number
    #[arg(long, default_value = "auto", value_parser = parse_alpha)]
    pub alpha: AlphaArg,
    /// Prediction grid as xmin,xmax,ymin,ymax,nx,ny
    #[arg(long, value_parser = parse_grid)]
    pub grid: Grid,
    #[command(flatten)]
    pub trend: TrendOpts,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Report file to write
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
    pub drift: u8,
    #[arg(long, default_value_t = geofield::variogram::DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long)]
    pub max_lag: Option<f64>,
    #[arg(long, default_value = "auto", value_parser = parse_alpha)]
    pub alpha: AlphaArg,
    /// Hold hyperparameters from the full fit, or refit per deletion
    #[arg(long, value_enum, default_value_t = RefitArg::Fixed)]
    pub refit: RefitArg,
    #[command(flatten)]
    pub trend: TrendOpts,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Observations CSV to write
    #[arg(long)]
    pub output: PathBuf,
    /// Simulation sites as xmin,xmax,ymin,ymax,nx,ny
    #[arg(long, value_parser = parse_grid)]
    pub grid: Grid,
    /// RNG seed; the output is a pure function of seed + parameters
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Covariogram nugget
    #[arg(long, default_value_t = 0.0)]
    pub nugget: f64,
    /// Covariogram partial sill
    #[arg(long, default_value_t = 1.0)]
    pub partial_sill: f64,
    /// Covariogram range
    #[arg(long, default_value_t = 1.0)]
    pub range: f64,
    /// Affine trend coefficients b0,b1,b2 to add to the field
    #[arg(long, value_parser = parse_field_trend)]
    pub field_trend: Option<FieldTrend>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaArg {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldTrend(pub [f64; 3]);

fn parse_alpha(s: &str) -> Result<AlphaArg, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(AlphaArg::Auto);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| format!("expected \"auto\" or a number, got {s:?}"))?;
    if !v.is_finite() || v < 0.0 {
        return Err(format!("alpha must be finite and nonnegative, got {v}"));
    }
    Ok(AlphaArg::Fixed(v))
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 6 {
        return Err(format!(
            "expected xmin,xmax,ymin,ymax,nx,ny (6 fields), got {} fields",
            parts.len()
        ));
    }
    let num = |k: usize, name: &str| -> Result<f64, String> {
        parts[k]
            .trim()
            .parse()
            .map_err(|_| format!("invalid {name}: {:?}", parts[k]))
    };
    let count = |k: usize, name: &str| -> Result<usize, String> {
        parts[k]
            .trim()
            .parse()
            .map_err(|_| format!("invalid {name}: {:?}", parts[k]))
    };
    Grid::new(
        num(0, "xmin")?,
        num(1, "xmax")?,
        num(2, "ymin")?,
        num(3, "ymax")?,
        count(4, "nx")?,
        count(5, "ny")?,
    )
    .map_err(|e| e.to_string())
}

fn parse_field_trend(s: &str) -> Result<FieldTrend, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected b0,b1,b2 (3 fields), got {}", parts.len()));
    }
    let mut out = [0.0f64; 3];
    for (k, p) in parts.iter().enumerate() {
        out[k] = p
            .trim()
            .parse()
            .map_err(|_| format!("invalid trend coefficient {p:?}"))?;
    }
    Ok(FieldTrend(out))
}
