//! Leave-one-out cross-validation, the standardized mean-square prediction
//! error (MSP), and the kriging-versus-spline comparison pipeline.
//!
//! For each deletion index `j` a method is refitted on the remaining sites
//! and asked for a prediction and its variance at the deleted site. The
//! criterion is
//!
//! ```text
//! MSP = sqrt( (1/n) * sum_j ((Z(t_j) - Zhat_-j(t_j)) / sigma_-j(t_j))^2 )
//! ```
//!
//! Values near 1 indicate calibrated prediction variances; the method with
//! the smaller MSP wins the comparison.

use crate::error::{Error, Result, StageExt};
use crate::geometry::{Observations, Site};
use crate::kriging::{assemble_system, DriftBasis, KrigingSystem};
use crate::spline::{fit_tps, select_alpha_gcv, tps_system, AlphaSelection, TpsFit,
    TpsGeneralizedCovariance};
use crate::trend::{bin_to_table, default_table_shape, detrend, median_polish, MedianPolishFit,
    DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::variogram::{empirical_semivariogram, fit_gaussian_wls, GaussianCovariogram,
    DEFAULT_BINS};

/// Point prediction with variance at an arbitrary site.
pub trait PredictorWithVariance {
    /// Returns `(value, variance)`.
    fn predict_with_variance(&self, t0: &Site) -> (f64, f64);
}

/// A fittable prediction method for leave-one-out evaluation.
pub trait LooMethod {
    type Fitted: PredictorWithVariance;

    fn fit(&self, obs: &Observations) -> Result<Self::Fitted>;
}

/// One leave-one-out deletion: truth, prediction, standard error, and the
/// standardized residual `(truth - prediction) / sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct LooRecord {
    pub site_index: usize,
    pub truth: f64,
    pub prediction: f64,
    pub sigma: f64,
    pub standardized_residual: f64,
}

/// Leave-one-out standardized MSP. Deletions run in index order; the record
/// list preserves that order so the criterion is permutation-stable.
pub fn loo_msp<M: LooMethod>(obs: &Observations, method: &M) -> Result<(f64, Vec<LooRecord>)> {
    if obs.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "leave-one-out needs at least 4 observations, got {}",
            obs.len()
        )));
    }
    let mut records = Vec::with_capacity(obs.len());
    for j in 0..obs.len() {
        let reduced = obs.without(j)?;
        let fitted = method.fit(&reduced).map_err(|e| Error::FitFailure {
            index: j,
            source: Box::new(e),
        })?;
        let (prediction, variance) = fitted.predict_with_variance(obs.site(j));
        let sigma = variance.max(0.0).sqrt();
        if sigma <= 1e-12 {
            return Err(Error::ZeroSigma { index: j });
        }
        let truth = obs.value(j);
        records.push(LooRecord {
            site_index: j,
            truth,
            prediction,
            sigma,
            standardized_residual: (truth - prediction) / sigma,
        });
    }
    Ok((msp_from_records(&records), records))
}

/// Root mean squared standardized residual, accumulated in record order.
pub fn msp_from_records(records: &[LooRecord]) -> f64 {
    let mut acc = 0.0;
    for r in records {
        acc += r.standardized_residual * r.standardized_residual;
    }
    (acc / records.len() as f64).sqrt()
}

/// Whether hyperparameters are held from the full-data fit or refitted on
/// every deletion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefitPolicy {
    /// Covariogram model and smoothing parameter fitted once on the full
    /// data and held fixed across deletions (the default).
    Fixed,
    /// Refit hyperparameters on each reduced data set.
    Strict,
}

/// Smoothing-parameter source for the spline method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaChoice {
    /// Select by generalized cross-validation.
    Auto,
    /// Use the given value.
    Fixed(f64),
}

/// Kriging side of the comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrigingConfig {
    pub drift: DriftBasis,
    pub bins: usize,
    pub max_lag: Option<f64>,
    pub refit: RefitPolicy,
}

impl Default for KrigingConfig {
    fn default() -> Self {
        Self {
            drift: DriftBasis::Constant,
            bins: DEFAULT_BINS,
            max_lag: None,
            refit: RefitPolicy::Fixed,
        }
    }
}

/// Spline side of the comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineConfig {
    pub alpha: AlphaChoice,
    pub refit: RefitPolicy,
}

impl Default for SplineConfig {
    fn default() -> Self {
        Self {
            alpha: AlphaChoice::Auto,
            refit: RefitPolicy::Fixed,
        }
    }
}

/// Median-polish detrending ahead of both methods. The trend is always
/// fitted once on the full data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TrendConfig {
    #[default]
    None,
    MedianPolish {
        rows: Option<usize>,
        cols: Option<usize>,
    },
}

/// Leave-one-out kriging with a fixed or per-deletion refitted covariogram.
#[derive(Debug, Clone)]
pub struct KrigingLooMethod {
    drift: DriftBasis,
    source: KrigingModelSource,
}

#[derive(Debug, Clone)]
enum KrigingModelSource {
    Fixed(GaussianCovariogram),
    Refit { bins: usize, max_lag: Option<f64> },
}

impl KrigingLooMethod {
    pub fn fixed(model: GaussianCovariogram, drift: DriftBasis) -> Self {
        Self {
            drift,
            source: KrigingModelSource::Fixed(model),
        }
    }

    pub fn refitting(bins: usize, max_lag: Option<f64>, drift: DriftBasis) -> Self {
        Self {
            drift,
            source: KrigingModelSource::Refit { bins, max_lag },
        }
    }
}

/// Fitted kriging system wrapper exposing primal value + variance.
pub struct KrigingLooFit {
    system: KrigingSystem<GaussianCovariogram>,
}

impl PredictorWithVariance for KrigingLooFit {
    fn predict_with_variance(&self, t0: &Site) -> (f64, f64) {
        match self.system.predict_primal(t0) {
            Ok(p) => (p.value, p.variance),
            // Primal operator unavailable: fall back to the bordered solve,
            // which computes the same quantities.
            Err(_) => {
                let p = self.system.predict_bordered(t0);
                (p.value, p.variance)
            }
        }
    }
}

impl LooMethod for KrigingLooMethod {
    type Fitted = KrigingLooFit;

    fn fit(&self, obs: &Observations) -> Result<Self::Fitted> {
        let model = match &self.source {
            KrigingModelSource::Fixed(m) => *m,
            KrigingModelSource::Refit { bins, max_lag } => {
                let ev = empirical_semivariogram(obs, *bins, *max_lag)?;
                fit_gaussian_wls(&ev)?
            }
        };
        let system = assemble_system(obs, model, self.drift)?;
        Ok(KrigingLooFit { system })
    }
}

/// Leave-one-out thin-plate spline. Predictions come from the spline fit;
/// the standard error comes from the kriging variance evaluated on the same
/// bordered system with the kernel-plus-ridge generalized covariance.
#[derive(Debug, Clone)]
pub struct SplineLooMethod {
    source: AlphaSource,
}

#[derive(Debug, Clone)]
enum AlphaSource {
    Fixed(f64),
    Refit,
}

impl SplineLooMethod {
    pub fn fixed(alpha: f64) -> Self {
        Self {
            source: AlphaSource::Fixed(alpha),
        }
    }

    pub fn refitting() -> Self {
        Self {
            source: AlphaSource::Refit,
        }
    }
}

pub struct SplineLooFit {
    fit: TpsFit,
    system: KrigingSystem<TpsGeneralizedCovariance>,
}

impl PredictorWithVariance for SplineLooFit {
    fn predict_with_variance(&self, t0: &Site) -> (f64, f64) {
        let value = self.fit.predict(t0);
        let variance = self.system.predict_bordered(t0).variance;
        (value, variance)
    }
}

impl LooMethod for SplineLooMethod {
    type Fitted = SplineLooFit;

    fn fit(&self, obs: &Observations) -> Result<Self::Fitted> {
        let alpha = match &self.source {
            AlphaSource::Fixed(a) => *a,
            AlphaSource::Refit => select_alpha_gcv(obs, None)?.alpha,
        };
        Ok(SplineLooFit {
            fit: fit_tps(obs, alpha)?,
            system: tps_system(obs, alpha)?,
        })
    }
}

/// Which method won the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    Kriging,
    Spline,
    Tie,
}

/// Trend metadata carried in the report.
#[derive(Debug, Clone)]
pub struct TrendSummary {
    pub rows: usize,
    pub cols: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Full comparison output: both MSPs, the winner, per-site records, and the
/// fitted model metadata.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub msp_kriging: f64,
    pub msp_spline: f64,
    pub winner: Winner,
    pub kriging_records: Vec<LooRecord>,
    pub spline_records: Vec<LooRecord>,
    pub covariogram: GaussianCovariogram,
    pub alpha: f64,
    pub alpha_selection: Option<AlphaSelection>,
    pub trend: Option<TrendSummary>,
}

/// Winner by strictly smaller MSP; a difference within 1e-12 is a tie.
pub fn decide_winner(msp_kriging: f64, msp_spline: f64) -> Winner {
    if (msp_kriging - msp_spline).abs() <= 1e-12 {
        Winner::Tie
    } else if msp_kriging < msp_spline {
        Winner::Kriging
    } else {
        Winner::Spline
    }
}

/// Runs the full comparison pipeline: optional median-polish detrend, then
/// variogram fit + kriging leave-one-out and smoothing-parameter selection +
/// spline leave-one-out on the same residual field. Predictions are
/// re-trended before the records are assembled, so truth and prediction are
/// reported on the original data scale.
pub fn compare_methods(
    obs: &Observations,
    kriging: &KrigingConfig,
    spline: &SplineConfig,
    trend: &TrendConfig,
) -> Result<ComparisonReport> {
    if obs.len() < 8 {
        return Err(Error::InvalidParameter(format!(
            "comparison needs at least 8 observations, got {}",
            obs.len()
        )));
    }

    // Trend stage: fitted once on the full data.
    let (residual_field, trend_fit, trend_summary) = match trend {
        TrendConfig::None => (obs.clone(), None, None),
        TrendConfig::MedianPolish { rows, cols } => {
            let (dr, dc) = default_table_shape(obs.len());
            let rows = rows.unwrap_or(dr);
            let cols = cols.unwrap_or(dc);
            let (table, _) = bin_to_table(obs, rows, cols).stage("trend")?;
            let fit = median_polish(&table, DEFAULT_TOL, DEFAULT_MAX_ITER).stage("trend")?;
            let resid = detrend(obs, &fit).stage("trend")?;
            let summary = TrendSummary {
                rows,
                cols,
                iterations: fit.iterations,
                converged: fit.converged,
            };
            (resid, Some(fit), Some(summary))
        }
    };

    // Variogram stage on the residual field.
    let ev = empirical_semivariogram(&residual_field, kriging.bins, kriging.max_lag)
        .stage("variogram")?;
    let covariogram = fit_gaussian_wls(&ev).stage("variogram")?;

    // Kriging leave-one-out.
    let kriging_method = match kriging.refit {
        RefitPolicy::Fixed => KrigingLooMethod::fixed(covariogram, kriging.drift),
        RefitPolicy::Strict => {
            KrigingLooMethod::refitting(kriging.bins, kriging.max_lag, kriging.drift)
        }
    };
    let (_, mut kriging_records) =
        loo_msp(&residual_field, &kriging_method).stage("kriging-loo")?;

    // Smoothing parameter stage.
    let (alpha, alpha_selection) = match spline.alpha {
        AlphaChoice::Fixed(a) => (a, None),
        AlphaChoice::Auto => {
            let sel = select_alpha_gcv(&residual_field, None).stage("alpha-selection")?;
            (sel.alpha, Some(sel))
        }
    };

    // Spline leave-one-out.
    let spline_method = match spline.refit {
        RefitPolicy::Fixed => SplineLooMethod::fixed(alpha),
        RefitPolicy::Strict => SplineLooMethod::refitting(),
    };
    let (_, mut spline_records) = loo_msp(&residual_field, &spline_method).stage("spline-loo")?;

    // Report truth and prediction on the original scale.
    if let Some(fit) = &trend_fit {
        for records in [&mut kriging_records, &mut spline_records] {
            for r in records.iter_mut() {
                let shift = fit.trend_at(obs.site(r.site_index));
                r.truth += shift;
                r.prediction += shift;
                r.standardized_residual = (r.truth - r.prediction) / r.sigma;
            }
        }
    }
    let msp_kriging = msp_from_records(&kriging_records);
    let msp_spline = msp_from_records(&spline_records);

    Ok(ComparisonReport {
        msp_kriging,
        msp_spline,
        winner: decide_winner(msp_kriging, msp_spline),
        kriging_records,
        spline_records,
        covariogram,
        alpha,
        alpha_selection,
        trend: trend_summary,
    })
}

/// Re-fits the trend used by [`compare_methods`] for the same inputs; used
/// by callers that need to re-trend additional predictions.
pub fn fit_trend(obs: &Observations, trend: &TrendConfig) -> Result<Option<MedianPolishFit>> {
    match trend {
        TrendConfig::None => Ok(None),
        TrendConfig::MedianPolish { rows, cols } => {
            let (dr, dc) = default_table_shape(obs.len());
            let (table, _) = bin_to_table(obs, rows.unwrap_or(dr), cols.unwrap_or(dc))?;
            Ok(Some(median_polish(&table, DEFAULT_TOL, DEFAULT_MAX_ITER)?))
        }
    }
}
