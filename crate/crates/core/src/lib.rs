//! Spatial prediction toolkit for scattered planar data.
//!
//! The pipeline goes: optional median-polish detrending, classic
//! semivariogram estimation with Gaussian covariogram fitting, then
//! prediction by ordinary/universal kriging (primal and dual forms) or by
//! degree-2 thin-plate spline smoothing, and finally a leave-one-out
//! standardized-MSP comparison of the two predictors. A seeded Gaussian
//! random field simulator supports testing and experiments.

pub mod crossval;
pub mod error;
pub mod geometry;
pub mod kriging;
mod linalg;
pub mod simulate;
pub mod spline;
pub mod trend;
pub mod variogram;

pub use crossval::{
    compare_methods, loo_msp, AlphaChoice, ComparisonReport, KrigingConfig, KrigingLooMethod,
    LooMethod, LooRecord, PredictorWithVariance, RefitPolicy, SplineConfig, SplineLooMethod,
    TrendConfig, Winner,
};
pub use error::{Error, Result};
pub use geometry::{distance, grid_sites, Grid, Observations, Site};
pub use kriging::{
    assemble_system, Covariance, DriftBasis, DualKrigingFit, KrigingPrediction, KrigingSystem,
};
pub use simulate::{simulate_field, FieldSpec};
pub use spline::{
    fit_tps, select_alpha_gcv, tps_kernel, tps_system, AlphaSelection, TpsFit,
    TpsGeneralizedCovariance,
};
pub use trend::{
    bin_to_table, detrend, median_polish, retrend, MedianPolishFit, TwoWayTable,
};
pub use variogram::{
    empirical_semivariogram, fit_gaussian_wls, EmpiricalVariogram, GaussianCovariogram,
};
