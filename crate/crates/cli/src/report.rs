//! Structured text reports: `key: value` sections plus CSV record tables.
//!
//! Reports are self-describing (schema version + full effective
//! configuration) and deterministic: the same inputs produce byte-identical
//! files.

use std::fmt::Write as _;

use geofield::{ComparisonReport, EmpiricalVariogram, GaussianCovariogram, LooRecord, Winner};

use crate::io::fmt_f64;

pub const SCHEMA: &str = "geofield-report/1";

pub const GAUSSIAN_PARAMETRIZATION: &str =
    "gamma(h) = nugget + partial_sill*(1 - exp(-(h/range)^2))";

pub const SPLINE_SIGMA_METHOD: &str =
    "kriging variance on the dual system with the thin-plate kernel plus ridge as generalized covariance";

/// Incremental report writer.
pub struct Report {
    out: String,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut out = String::new();
        let _ = writeln!(out, "schema: {SCHEMA}");
        let _ = writeln!(out, "command: {command}");
        Report { out }
    }

    pub fn section(&mut self, name: &str) -> &mut Self {
        let _ = writeln!(self.out, "\n[{name}]");
        self
    }

    pub fn kv(&mut self, key: &str, value: impl AsRef<str>) -> &mut Self {
        let _ = writeln!(self.out, "{key}: {}", value.as_ref());
        self
    }

    pub fn kv_f64(&mut self, key: &str, value: f64) -> &mut Self {
        self.kv(key, fmt_f64(value))
    }

    pub fn records(&mut self, header: &str, rows: impl Iterator<Item = String>) -> &mut Self {
        let _ = writeln!(self.out, "records: {header}");
        for row in rows {
            let _ = writeln!(self.out, "{row}");
        }
        self
    }

    pub fn finish(self) -> String {
        self.out
    }
}

pub fn covariogram_section(report: &mut Report, model: &GaussianCovariogram) {
    report
        .section("covariogram")
        .kv("model", "gaussian")
        .kv("parametrization", GAUSSIAN_PARAMETRIZATION)
        .kv_f64("nugget", model.nugget())
        .kv_f64("partial_sill", model.partial_sill())
        .kv_f64("range", model.range());
}

pub fn empirical_section(report: &mut Report, ev: &EmpiricalVariogram) {
    report
        .section("empirical")
        .kv_f64("max_lag_used", ev.max_lag())
        .kv("bins_occupied", ev.len().to_string());
    let rows = ev
        .lag_centers()
        .iter()
        .zip(ev.gamma_hat())
        .zip(ev.pair_counts())
        .map(|((&lag, &gamma), &count)| {
            format!("{},{},{count}", fmt_f64(lag), fmt_f64(gamma))
        });
    report.records("lag,gamma,count", rows);
}

fn loo_rows<'a>(
    records: &'a [LooRecord],
    sites: impl Fn(usize) -> (f64, f64) + 'a,
) -> impl Iterator<Item = String> + 'a {
    records.iter().map(move |r| {
        let (x, y) = sites(r.site_index);
        format!(
            "{},{},{},{},{},{},{}",
            r.site_index,
            fmt_f64(x),
            fmt_f64(y),
            fmt_f64(r.truth),
            fmt_f64(r.prediction),
            fmt_f64(r.sigma),
            fmt_f64(r.standardized_residual)
        )
    })
}

pub fn comparison_sections(
    report: &mut Report,
    cmp: &ComparisonReport,
    site_of: impl Fn(usize) -> (f64, f64) + Copy,
) {
    if let Some(t) = &cmp.trend {
        report
            .section("trend")
            .kv("method", "median-polish")
            .kv("rows", t.rows.to_string())
            .kv("cols", t.cols.to_string())
            .kv("iterations", t.iterations.to_string())
            .kv("converged", t.converged.to_string());
    }
    covariogram_section(report, &cmp.covariogram);
    report
        .section("spline")
        .kv_f64("alpha", cmp.alpha)
        .kv(
            "alpha_source",
            if cmp.alpha_selection.is_some() {
                "gcv"
            } else {
                "fixed"
            },
        )
        .kv("sigma_method", SPLINE_SIGMA_METHOD);
    report
        .section("msp")
        .kv_f64("kriging", cmp.msp_kriging)
        .kv_f64("spline", cmp.msp_spline)
        .kv(
            "winner",
            match cmp.winner {
                Winner::Kriging => "kriging",
                Winner::Spline => "spline",
                Winner::Tie => "tie",
            },
        );
    let header = "index,x,y,truth,prediction,sigma,standardized_residual";
    report.section("records kriging");
    report.records(header, loo_rows(&cmp.kriging_records, site_of));
    report.section("records spline");
    report.records(header, loo_rows(&cmp.spline_records, site_of));
}
