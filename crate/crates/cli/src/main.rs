//! Batch command-line front end for the geofield toolkit.

mod args;
mod io;
mod report;

use std::fmt;
use std::fmt::Write as _;

use clap::Parser;
use geofield::error::StageExt;
use geofield::{
    assemble_system, compare_methods, crossval, fit_tps, select_alpha_gcv, simulate_field,
    AlphaChoice, DriftBasis, FieldSpec, GaussianCovariogram, Grid, KrigingConfig,
    MedianPolishFit, Observations, RefitPolicy, SplineConfig, TrendConfig,
};

use args::{
    AlphaArg, Cli, Command, CompareArgs, KrigeArgs, RefitArg, SimulateArgs, SplineArgs,
    TrendKind, TrendOpts, VariogramArgs,
};
use io::{fmt_f64, observations_csv, read_observations, write_file};
use report::{comparison_sections, covariogram_section, empirical_section, Report};

/// Errors surfaced to the user as a single line on stderr.
#[derive(Debug)]
pub enum CliError {
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    Io {
        path: String,
        message: String,
    },
    Core(geofield::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse {
                path,
                line,
                message,
            } => write!(f, "parse: {path}:{line}: {message}"),
            CliError::Io { path, message } => write!(f, "io: {path}: {message}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Variogram(a) => cmd_variogram(a),
        Command::Krige(a) => cmd_krige(a),
        Command::Spline(a) => cmd_spline(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}

fn trend_config(opts: &TrendOpts) -> TrendConfig {
    match opts.trend {
        TrendKind::None => TrendConfig::None,
        TrendKind::MedianPolish => TrendConfig::MedianPolish {
            rows: opts.trend_rows,
            cols: opts.trend_cols,
        },
    }
}

/// Detrends the observations when requested; returns the residual field and
/// the fitted trend.
fn apply_trend(
    obs: &Observations,
    opts: &TrendOpts,
) -> Result<(Observations, Option<MedianPolishFit>), CliError> {
    let cfg = trend_config(opts);
    let fit = crossval::fit_trend(obs, &cfg)
        .stage("trend")
        .map_err(CliError::Core)?;
    match &fit {
        None => Ok((obs.clone(), None)),
        Some(f) => {
            let resid = geofield::detrend(obs, f)
                .stage("trend")
                .map_err(CliError::Core)?;
            Ok((resid, fit))
        }
    }
}

fn trend_opts_config(report: &mut Report, opts: &TrendOpts) {
    report.kv(
        "trend",
        match opts.trend {
            TrendKind::None => "none",
            TrendKind::MedianPolish => "median-polish",
        },
    );
    if let Some(r) = opts.trend_rows {
        report.kv("trend_rows", r.to_string());
    }
    if let Some(c) = opts.trend_cols {
        report.kv("trend_cols", c.to_string());
    }
}

fn trend_fit_section(report: &mut Report, fit: &Option<MedianPolishFit>) {
    if let Some(f) = fit {
        report
            .section("trend")
            .kv("method", "median-polish")
            .kv("rows", f.row_effects.len().to_string())
            .kv("cols", f.col_effects.len().to_string())
            .kv("iterations", f.iterations.to_string())
            .kv("converged", f.converged.to_string());
    }
}

fn max_lag_display(max_lag: Option<f64>) -> String {
    max_lag.map_or_else(|| "auto".to_string(), fmt_f64)
}

fn cmd_variogram(a: VariogramArgs) -> Result<(), CliError> {
    let obs = read_observations(&a.input)?;
    let (residual, trend_fit) = apply_trend(&obs, &a.trend)?;
    let ev = geofield::empirical_semivariogram(&residual, a.bins, a.max_lag)
        .stage("variogram")
        .map_err(CliError::Core)?;
    let model = geofield::fit_gaussian_wls(&ev)
        .stage("variogram")
        .map_err(CliError::Core)?;

    let mut rep = Report::new("variogram");
    rep.section("config")
        .kv("input", a.input.display().to_string())
        .kv("bins", a.bins.to_string())
        .kv("max_lag", max_lag_display(a.max_lag));
    trend_opts_config(&mut rep, &a.trend);
    trend_fit_section(&mut rep, &trend_fit);
    empirical_section(&mut rep, &ev);
    covariogram_section(&mut rep, &model);
    write_file(&a.output, &rep.finish())
}

fn fit_covariogram(
    residual: &Observations,
    bins: usize,
    max_lag: Option<f64>,
) -> Result<GaussianCovariogram, CliError> {
    let ev = geofield::empirical_semivariogram(residual, bins, max_lag)
        .stage("variogram")
        .map_err(CliError::Core)?;
    geofield::fit_gaussian_wls(&ev)
        .stage("variogram")
        .map_err(CliError::Core)
}

fn cmd_krige(a: KrigeArgs) -> Result<(), CliError> {
    let obs = read_observations(&a.input)?;
    let (residual, trend_fit) = apply_trend(&obs, &a.trend)?;
    let (model, model_source) = match (a.nugget, a.partial_sill, a.range) {
        (Some(c0), Some(c1), Some(r)) => (
            GaussianCovariogram::new(c0, c1, r)
                .stage("kriging")
                .map_err(CliError::Core)?,
            "explicit",
        ),
        (None, None, None) => (fit_covariogram(&residual, a.bins, a.max_lag)?, "fitted-wls"),
        // clap `requires` chains make partial specification unreachable.
        _ => unreachable!("explicit model flags must be given together"),
    };
    let basis = DriftBasis::from_degree(a.drift).map_err(CliError::Core)?;
    let sys = assemble_system(&residual, model, basis)
        .stage("kriging")
        .map_err(CliError::Core)?;

    let mut out = String::new();
    let _ = writeln!(out, "# command: krige");
    let _ = writeln!(out, "# drift: {}", a.drift);
    let _ = writeln!(out, "# model_source: {model_source}");
    let _ = writeln!(out, "# nugget: {}", fmt_f64(model.nugget()));
    let _ = writeln!(out, "# partial_sill: {}", fmt_f64(model.partial_sill()));
    let _ = writeln!(out, "# range: {}", fmt_f64(model.range()));
    out.push_str("x,y,prediction,variance\n");
    for site in a.grid.sites() {
        let p = match sys.predict_primal(&site) {
            Ok(p) => p,
            Err(_) => sys.predict_bordered(&site),
        };
        let mut value = p.value;
        if let Some(f) = &trend_fit {
            value += f.trend_at(&site);
        }
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(site.x()),
            fmt_f64(site.y()),
            fmt_f64(value),
            fmt_f64(p.variance)
        );
    }
    write_file(&a.output, &out)
}

fn cmd_spline(a: SplineArgs) -> Result<(), CliError> {
    let obs = read_observations(&a.input)?;
    let (residual, trend_fit) = apply_trend(&obs, &a.trend)?;
    let (alpha, source) = match a.alpha {
        AlphaArg::Fixed(v) => (v, "fixed"),
        AlphaArg::Auto => (
            select_alpha_gcv(&residual, None)
                .stage("alpha-selection")
                .map_err(CliError::Core)?
                .alpha,
            "gcv",
        ),
    };
    let fit = fit_tps(&residual, alpha)
        .stage("spline")
        .map_err(CliError::Core)?;

    let mut out = String::new();
    let _ = writeln!(out, "# command: spline");
    let _ = writeln!(out, "# alpha: {}", fmt_f64(alpha));
    let _ = writeln!(out, "# alpha_source: {source}");
    out.push_str("x,y,prediction\n");
    for site in a.grid.sites() {
        let mut value = fit.predict(&site);
        if let Some(f) = &trend_fit {
            value += f.trend_at(&site);
        }
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(site.x()),
            fmt_f64(site.y()),
            fmt_f64(value)
        );
    }
    write_file(&a.output, &out)
}

fn cmd_compare(a: CompareArgs) -> Result<(), CliError> {
    let obs = read_observations(&a.input)?;
    let refit = match a.refit {
        RefitArg::Fixed => RefitPolicy::Fixed,
        RefitArg::Strict => RefitPolicy::Strict,
    };
    let kriging = KrigingConfig {
        drift: DriftBasis::from_degree(a.drift).map_err(CliError::Core)?,
        bins: a.bins,
        max_lag: a.max_lag,
        refit,
    };
    let spline = SplineConfig {
        alpha: match a.alpha {
            AlphaArg::Auto => AlphaChoice::Auto,
            AlphaArg::Fixed(v) => AlphaChoice::Fixed(v),
        },
        refit,
    };
    let trend = trend_config(&a.trend);
    let cmp = compare_methods(&obs, &kriging, &spline, &trend).map_err(CliError::Core)?;

    let mut rep = Report::new("compare");
    rep.section("config")
        .kv("input", a.input.display().to_string())
        .kv("drift", a.drift.to_string())
        .kv("bins", a.bins.to_string())
        .kv("max_lag", max_lag_display(a.max_lag))
        .kv(
            "alpha",
            match a.alpha {
                AlphaArg::Auto => "auto".to_string(),
                AlphaArg::Fixed(v) => fmt_f64(v),
            },
        )
        .kv(
            "refit",
            match a.refit {
                RefitArg::Fixed => "fixed",
                RefitArg::Strict => "strict",
            },
        );
    trend_opts_config(&mut rep, &a.trend);
    let site_of = |i: usize| {
        let s = obs.site(i);
        (s.x(), s.y())
    };
    comparison_sections(&mut rep, &cmp, site_of);
    write_file(&a.output, &rep.finish())
}

fn cmd_simulate(a: SimulateArgs) -> Result<(), CliError> {
    let model = GaussianCovariogram::new(a.nugget, a.partial_sill, a.range)
        .stage("simulate")
        .map_err(CliError::Core)?;
    let spec = FieldSpec {
        model,
        trend: a.field_trend.map(|t| t.0),
        seed: a.seed,
    };
    let sites = a.grid.sites();
    let obs = simulate_field(&spec, &sites)
        .stage("simulate")
        .map_err(CliError::Core)?;

    let mut metadata = vec![
        ("command".to_string(), "simulate".to_string()),
        (
            "generator".to_string(),
            geofield::simulate::GENERATOR_ID.to_string(),
        ),
        ("seed".to_string(), a.seed.to_string()),
        ("nugget".to_string(), fmt_f64(a.nugget)),
        ("partial_sill".to_string(), fmt_f64(a.partial_sill)),
        ("range".to_string(), fmt_f64(a.range)),
        ("grid".to_string(), grid_display(&a.grid)),
    ];
    if let Some(t) = a.field_trend {
        metadata.push((
            "field_trend".to_string(),
            format!("{},{},{}", fmt_f64(t.0[0]), fmt_f64(t.0[1]), fmt_f64(t.0[2])),
        ));
    }
    write_file(&a.output, &observations_csv(&obs, &metadata))
}

fn grid_display(g: &Grid) -> String {
    format!(
        "{},{},{},{},{},{}",
        fmt_f64(g.x_min),
        fmt_f64(g.x_max),
        fmt_f64(g.y_min),
        fmt_f64(g.y_max),
        g.nx,
        g.ny
    )
}
