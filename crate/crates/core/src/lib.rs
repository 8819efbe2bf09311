//! State-switching predictive regressions for the equity premium.
//!
//! The crate covers ingestion of a monthly predictor panel, the real-time
//! yield-curve state indicator, PLS/PCA/forecast-combination aggregate
//! predictors, recursive out-of-sample forecasting and its evaluation.

pub mod backtest;
pub mod error;
pub mod factors;
pub mod ingest;
pub mod ols;
pub mod regimes;
pub mod series;
pub mod synthetic;

pub use backtest::{
    clark_west, evaluate, evaluate_spec, fit_switching, historical_mean, r2_oos, run_recursive,
    significance_stars, BacktestData, ClarkWest, Coefficients, EvalReport, ForecastRow,
    ForecastTable, ModelForm, ModelSpec, OosMetric, PredictorSource, Subset, SubsetR2Method,
};
pub use error::{Error, ErrorClass, Result, ResultExt};
pub use factors::{
    build_fc_predictor, build_pca_factor, build_pls_index, FactorInput, FactorKind,
    FactorOptions, FactorSeries, PlsLoadings, WeightPath,
};
pub use ingest::{load_panel, ColumnSchema};
pub use ols::{newey_west_cov, ols_fit, DesignMatrix, NwLags, RegressionFit};
pub use regimes::{load_recession_mask, state_indicator, RecessionMask, StateSeries};
pub use series::{MonthKey, MonthlySeries, PredictorPanel, SampleWindow};
