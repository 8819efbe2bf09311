//! Predictive regressions, recursive out-of-sample forecasts and their evaluation.
//!
//! The state-switching regression is
//!
//! ```text
//! R_{t+1} = (β0 + δ0 S_t) + β1 S_t x_t + γ1 (1 - S_t) x_t + ε_{t+1}
//! ```
//!
//! and collapses to the one-state regression `R_{t+1} = β0 + β1 x_t` when
//! `β1 = γ1` and `δ0 = 0`. At each forecast origin `t` the model is re-fitted
//! on the pairs `(x_s, R_{s+1})`, `s = M, ..., t-1` (with `M` the first month
//! of the sample) and the forecast `r_{t+1|t}` is formed from `x_t` and `S_t`.
//! The benchmark is the historical mean of returns through `t`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result, ResultExt};
use crate::factors::{
    build_fc_predictor_from, build_pls_index_with_loadings, combination_forecast,
    pca_factor_history, pls_factor_history, FactorInput, FactorKind, FactorOptions,
};
use crate::ols::{
    newey_west_cov, ols_fit, subset_adjusted_r2, subset_adjusted_r2_refit, DesignMatrix, NwLags,
    RegressionFit,
};
use crate::regimes::{RecessionMask, StateSeries};
use crate::series::{MonthKey, MonthlySeries, PredictorPanel, SampleWindow};

/// Minimum observations of each state before the switching model is fitted.
pub const MIN_STATE_OBS: usize = 8;
/// Minimum masked months for an out-of-sample statistic.
pub const MIN_OOS_OBS: usize = 12;
/// Out-of-sample R² above which a forecast counts as economically relevant.
pub const ECONOMIC_THRESHOLD: f64 = 0.005;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelForm {
    OneState,
    Switching,
}

impl ModelForm {
    pub fn label(self) -> &'static str {
        match self {
            ModelForm::OneState => "one_state",
            ModelForm::Switching => "switching",
        }
    }
}

/// What enters the regression as `x_t`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictorSource {
    /// One of the panel's predictors, as observed.
    Variable(String),
    Factor(FactorKind),
}

impl PredictorSource {
    pub fn label(&self) -> String {
        match self {
            PredictorSource::Variable(name) => name.clone(),
            PredictorSource::Factor(kind) => kind.label().to_string(),
        }
    }

    /// Parses `PLS`/`PCA`/`FC` (optionally prefixed `E_`) or a predictor name.
    pub fn parse(name: &str) -> Self {
        match name.trim_start_matches("E_").to_ascii_uppercase().as_str() {
            "PLS" => PredictorSource::Factor(FactorKind::Pls),
            "PCA" => PredictorSource::Factor(FactorKind::Pca),
            "FC" => PredictorSource::Factor(FactorKind::Fc),
            _ => PredictorSource::Variable(name.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub predictor: PredictorSource,
    pub form: ModelForm,
    pub tau: usize,
    pub nw_lags: NwLags,
    pub initial_window: SampleWindow,
}

impl ModelSpec {
    pub fn label(&self) -> String {
        format!("{} ({})", self.predictor.label(), self.form.label())
    }
}

/// `(b0, d0, b1, g1)`; a one-state fit reports `d0 = 0` and `b1 = g1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub b0: f64,
    pub d0: f64,
    pub b1: f64,
    pub g1: f64,
}

impl Coefficients {
    pub const MISSING: Coefficients = Coefficients {
        b0: f64::NAN,
        d0: f64::NAN,
        b1: f64::NAN,
        g1: f64::NAN,
    };

    pub fn forecast(&self, x: f64, s: f64) -> f64 {
        (self.b0 + self.d0 * s) + self.b1 * s * x + self.g1 * (1.0 - s) * x
    }
}

/// A fitted one-state or switching regression.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveFit {
    pub fit: RegressionFit,
    /// Form actually estimated.
    pub form: ModelForm,
    /// The switching model was requested but a state had too few observations.
    pub fallback: bool,
}

impl PredictiveFit {
    pub fn coefficients(&self) -> Coefficients {
        let c = &self.fit.coefficients;
        match self.form {
            ModelForm::OneState => Coefficients {
                b0: c[0],
                d0: 0.0,
                b1: c[1],
                g1: c[1],
            },
            ModelForm::Switching => Coefficients {
                b0: c[0],
                d0: c[1],
                b1: c[2],
                g1: c[3],
            },
        }
    }

    /// NW t-statistics in `(b0, d0, b1, g1)` order, `NaN` where not estimated.
    pub fn t_stats(&self) -> Coefficients {
        let t = &self.fit.t_stats;
        match self.form {
            ModelForm::OneState => Coefficients {
                b0: t[0],
                d0: f64::NAN,
                b1: t[1],
                g1: t[1],
            },
            ModelForm::Switching => Coefficients {
                b0: t[0],
                d0: t[1],
                b1: t[2],
                g1: t[3],
            },
        }
    }
}

pub fn one_state_design(x: &[f64]) -> Result<DesignMatrix> {
    DesignMatrix::with_intercept("x", x)
}

/// Columns `{1, S, S·x, (1-S)·x}`.
pub fn switching_design(x: &[f64], s: &[f64]) -> Result<DesignMatrix> {
    if x.len() != s.len() {
        return Err(Error::Alignment("predictor and state differ in length".into()));
    }
    let ones = vec![1.0; x.len()];
    let sx: Vec<f64> = x.iter().zip(s).map(|(a, b)| a * b).collect();
    let ux: Vec<f64> = x.iter().zip(s).map(|(a, b)| a * (1.0 - b)).collect();
    DesignMatrix::from_columns(&[
        ("const", ones.as_slice()),
        ("S", s),
        ("S*x", sx.as_slice()),
        ("(1-S)*x", ux.as_slice()),
    ])
}

pub fn fit_one_state(y: &[f64], x: &[f64], nw_lags: usize) -> Result<PredictiveFit> {
    Ok(PredictiveFit {
        fit: ols_fit(y, &one_state_design(x)?, nw_lags)?,
        form: ModelForm::OneState,
        fallback: false,
    })
}

/// Switching regression; falls back to one state (flagged) when either state
/// has fewer than [`MIN_STATE_OBS`] observations.
pub fn fit_switching(y: &[f64], x: &[f64], s: &[f64], nw_lags: usize) -> Result<PredictiveFit> {
    if s.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Parameter("states must be 0 or 1".into()));
    }
    let down = s.iter().filter(|&&v| v == 1.0).count();
    let up = s.len() - down;
    if down < MIN_STATE_OBS || up < MIN_STATE_OBS {
        let mut fit = fit_one_state(y, x, nw_lags)?;
        fit.fallback = true;
        return Ok(fit);
    }
    Ok(PredictiveFit {
        fit: ols_fit(y, &switching_design(x, s)?, nw_lags)?,
        form: ModelForm::Switching,
        fallback: false,
    })
}

pub fn fit_model(
    y: &[f64],
    x: &[f64],
    s: Option<&[f64]>,
    form: ModelForm,
    nw_lags: usize,
) -> Result<PredictiveFit> {
    match form {
        ModelForm::OneState => fit_one_state(y, x, nw_lags),
        ModelForm::Switching => {
            let s = s.ok_or_else(|| Error::Parameter("switching model needs a state series".into()))?;
            fit_switching(y, x, s, nw_lags)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forecast {
    pub forecast: f64,
    pub coefficients: Coefficients,
    pub fallback: bool,
}

/// Fits on `(x_s, y_s)` for `s < end`, where `y_s` holds `R_{s+1}`, and forecasts from `x[end]`.
pub fn fit_and_forecast(
    y: &[f64],
    x: &[f64],
    s: Option<&[f64]>,
    end: usize,
    form: ModelForm,
) -> Result<Forecast> {
    if y.len() < end || x.len() <= end || s.is_some_and(|s| s.len() <= end) {
        return Err(Error::Alignment(format!("forecast origin {end} beyond the data")));
    }
    let fit = fit_model(&y[..end], &x[..end], s.map(|s| &s[..end]), form, 0)?;
    let coefficients = fit.coefficients();
    let state = s.map_or(0.0, |s| s[end]);
    Ok(Forecast {
        forecast: coefficients.forecast(x[end], state),
        coefficients,
        fallback: fit.fallback,
    })
}

/// Mean of the observed returns up to and including `up_to`.
pub fn historical_mean(exret: &MonthlySeries, up_to: MonthKey) -> Result<f64> {
    let (count, sum) = exret
        .observations()
        .take_while(|(m, _)| *m <= up_to)
        .fold((0usize, 0.0), |(c, s), (_, v)| (c + 1, s + v));
    if count == 0 {
        return Err(Error::insufficient(format!("historical mean through {up_to}"), 1, 0));
    }
    Ok(sum / count as f64)
}

/// Everything a backtest needs, aligned on the sample window.
#[derive(Debug, Clone)]
pub struct BacktestData {
    pub input: FactorInput,
    /// `S_t` as 0/1 over the sample window.
    pub states: Vec<f64>,
    /// Recession flags over the sample window, if supplied.
    pub recession: Option<Vec<bool>>,
    pub factor_opts: FactorOptions,
}

impl BacktestData {
    pub fn new(
        panel: &PredictorPanel,
        predictors: &[impl AsRef<str>],
        exret: &MonthlySeries,
        states: &StateSeries,
        recession: Option<&RecessionMask>,
        window: &SampleWindow,
        factor_opts: FactorOptions,
    ) -> Result<Self> {
        let input = FactorInput::new(&panel.select(predictors)?, exret, window)?;
        let states = states.window(window)?.iter().map(|&s| s as f64).collect();
        let recession = recession.map(|r| r.window(window)).transpose()?;
        Ok(Self {
            input,
            states,
            recession,
            factor_opts,
        })
    }

    pub fn window(&self) -> &SampleWindow {
        self.input.window()
    }

    fn variable(&self, name: &str) -> Result<&[f64]> {
        self.input
            .names()
            .iter()
            .position(|n| n == name)
            .map(|j| self.input.columns()[j].as_slice())
            .ok_or_else(|| Error::Schema {
                column: name.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    /// Month being forecast (`t + 1`).
    pub target: MonthKey,
    pub forecast: f64,
    pub benchmark: f64,
    pub realized: f64,
    /// `S_t` at the origin.
    pub state: u8,
    /// Recession flag of the target month.
    pub recession: Option<bool>,
    pub coefficients: Coefficients,
    pub fallback: bool,
}

impl ForecastRow {
    pub fn origin(&self) -> MonthKey {
        self.target.pred()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastTable {
    pub label: String,
    pub rows: Vec<ForecastRow>,
}

/// Month masks over the rows of a forecast table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    Full,
    Expansion,
    Recession,
    Up,
    Down,
}

impl Subset {
    pub const CONDITIONAL: [Subset; 4] = [Subset::Expansion, Subset::Recession, Subset::Up, Subset::Down];

    pub fn label(self) -> &'static str {
        match self {
            Subset::Full => "full",
            Subset::Expansion => "expansion",
            Subset::Recession => "recession",
            Subset::Up => "up",
            Subset::Down => "down",
        }
    }
}

impl ForecastTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn mask(&self, subset: Subset) -> Option<Vec<bool>> {
        self.rows
            .iter()
            .map(|r| match subset {
                Subset::Full => Some(true),
                Subset::Up => Some(r.state == 0),
                Subset::Down => Some(r.state == 1),
                Subset::Expansion => r.recession.map(|f| !f),
                Subset::Recession => r.recession,
            })
            .collect()
    }

    pub fn forecasts(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.forecast).collect()
    }

    pub fn realized(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.realized).collect()
    }

    pub fn benchmarks(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.benchmark).collect()
    }

    fn selected<'a>(&'a self, mask: Option<&'a [bool]>) -> Result<Vec<&'a ForecastRow>> {
        if let Some(m) = mask {
            if m.len() != self.rows.len() {
                return Err(Error::Alignment(format!(
                    "mask has {} entries for {} forecasts",
                    m.len(),
                    self.rows.len()
                )));
            }
        }
        Ok(self
            .rows
            .iter()
            .enumerate()
            .filter(|(i, _)| mask.is_none_or(|m| m[*i]))
            .map(|(_, r)| r)
            .collect())
    }

    /// Model and benchmark squared-error sums over the masked rows.
    pub fn sse(&self, mask: Option<&[bool]>) -> Result<(f64, f64)> {
        Ok(self.selected(mask)?.iter().fold((0.0, 0.0), |(m, b), r| {
            (
                m + (r.realized - r.forecast).powi(2),
                b + (r.realized - r.benchmark).powi(2),
            )
        }))
    }
}

fn forecast_at(spec: &ModelSpec, data: &BacktestData, end: usize) -> Result<Forecast> {
    let input = &data.input;
    let y = &input.exret()[1..=end];
    let states = match spec.form {
        ModelForm::OneState => None,
        ModelForm::Switching => Some(data.states.as_slice()),
    };
    match &spec.predictor {
        PredictorSource::Variable(name) => {
            fit_and_forecast(y, data.variable(name)?, states, end, spec.form)
        }
        PredictorSource::Factor(FactorKind::Pls) => {
            let history = pls_factor_history(input, end, &data.factor_opts)?;
            fit_and_forecast(y, &history, states, end, spec.form)
        }
        PredictorSource::Factor(FactorKind::Pca) => {
            let history = pca_factor_history(input, end, &data.factor_opts)?;
            fit_and_forecast(y, &history, states, end, spec.form)
        }
        PredictorSource::Factor(FactorKind::Fc) => Ok(Forecast {
            forecast: combination_forecast(input, end, spec.form, states)?,
            coefficients: Coefficients::MISSING,
            fallback: false,
        }),
    }
}

/// Expanding-window forecasts for every month after the initial window.
pub fn run_recursive(spec: &ModelSpec, data: &BacktestData) -> Result<ForecastTable> {
    let window = *data.window();
    let init = &spec.initial_window;
    if init.first() != window.first() || !window.contains(init.last()) || init.last() == window.last() {
        return Err(Error::Parameter(format!(
            "initial window {init} must start the sample {window} and end before it"
        )));
    }
    let first_origin = window.index_of(init.last()).expect("inside window");
    if let PredictorSource::Factor(FactorKind::Fc) = spec.predictor {
        if init.len() < data.factor_opts.fc_min_initial {
            return Err(Error::insufficient(
                "combination forecast initial window",
                data.factor_opts.fc_min_initial,
                init.len(),
            ));
        }
    }
    let exret = data.input.exret();
    let last_origin = exret.len() - 2;
    let mut prefix_sums = Vec::with_capacity(exret.len());
    let mut acc = 0.0;
    for v in exret {
        acc += v;
        prefix_sums.push(acc);
    }
    let rows = (first_origin..=last_origin)
        .into_par_iter()
        .map(|end| {
            let f = forecast_at(spec, data, end)
                .with_context(|| format!("{} at origin {}", spec.label(), window.month_at(end)))?;
            Ok(ForecastRow {
                target: window.month_at(end + 1),
                forecast: f.forecast,
                benchmark: prefix_sums[end] / (end + 1) as f64,
                realized: exret[end + 1],
                state: data.states[end] as u8,
                recession: data.recession.as_ref().map(|r| r[end + 1]),
                coefficients: f.coefficients,
                fallback: f.fallback,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForecastTable {
        label: spec.label(),
        rows,
    })
}

/// Campbell-Thompson out-of-sample R² (as a fraction) over the masked rows.
pub fn r2_oos(table: &ForecastTable, mask: Option<&[bool]>) -> Result<f64> {
    let count = table.selected(mask)?.len();
    if count < MIN_OOS_OBS {
        return Err(Error::insufficient("out-of-sample R²", MIN_OOS_OBS, count));
    }
    let (model, bench) = table.sse(mask)?;
    if !(bench > 0.0) {
        return Err(Error::Undefined("benchmark squared error is zero".into()));
    }
    Ok(1.0 - model / bench)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClarkWest {
    pub t_stat: f64,
    /// One-sided p-value against the alternative that the model beats the benchmark.
    pub p_value: f64,
}

/// Adjusted loss differential `(R - r̄)² - (R - r̂)² + (r̄ - r̂)²`.
pub fn clark_west_adjusted_loss(row: &ForecastRow) -> f64 {
    (row.realized - row.benchmark).powi(2) - (row.realized - row.forecast).powi(2)
        + (row.benchmark - row.forecast).powi(2)
}

/// MSFE-adjusted statistic: the adjusted loss regressed on a constant with a
/// Newey-West variance. Identical forecasts report `t = 0`, `p = 0.5`.
///
/// With a mask the selected months are treated as one consecutive sequence.
pub fn clark_west(table: &ForecastTable, mask: Option<&[bool]>, nw_lags: NwLags) -> Result<ClarkWest> {
    let rows = table.selected(mask)?;
    if rows.len() < MIN_OOS_OBS {
        return Err(Error::insufficient("Clark-West statistic", MIN_OOS_OBS, rows.len()));
    }
    let (_, bench) = table.sse(mask)?;
    if !(bench > 0.0) {
        return Err(Error::Undefined("benchmark squared error is zero".into()));
    }
    let f: Vec<f64> = rows.iter().map(|r| clark_west_adjusted_loss(r)).collect();
    if f.iter().all(|&v| v == 0.0) {
        return Ok(ClarkWest {
            t_stat: 0.0,
            p_value: 0.5,
        });
    }
    let n = f.len();
    let mean = f.iter().sum::<f64>() / n as f64;
    let u: Vec<f64> = f.iter().map(|v| v - mean).collect();
    let ones = vec![1.0; n];
    let design = DesignMatrix::from_columns(&[("const", ones.as_slice())])?;
    let lags = nw_lags.resolve(n).min(n - 1);
    let var = newey_west_cov(&design, &u, lags)?[(0, 0)];
    let t_stat = if var > 0.0 {
        mean / var.sqrt()
    } else {
        mean.signum() * f64::INFINITY
    };
    Ok(ClarkWest {
        t_stat,
        p_value: one_sided_p(t_stat),
    })
}

fn standard_normal() -> Normal {
    Normal::standard()
}

/// `P(Z > t)` for a standard normal `Z`.
pub fn one_sided_p(t: f64) -> f64 {
    standard_normal().sf(t)
}

/// `P(|Z| > |t|)`.
pub fn two_sided_p(t: f64) -> f64 {
    2.0 * standard_normal().sf(t.abs())
}

/// `***` below 1%, `**` below 5%, `*` below 10%.
pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.10 {
        "*"
    } else {
        ""
    }
}

/// How within-subset in-sample R² values are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SubsetR2Method {
    /// Restrict the full-sample residuals to the subset.
    #[default]
    Masked,
    /// Re-estimate the regression inside the subset.
    Refit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InSampleReport {
    pub window: SampleWindow,
    pub n: usize,
    pub nw_lags: usize,
    pub form: ModelForm,
    pub fallback: bool,
    pub coefficients: Coefficients,
    pub t_stats: Coefficients,
    pub r2_adj: f64,
    pub subset_r2_adj: Vec<(Subset, Option<f64>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OosMetric {
    pub r2_oos: f64,
    pub clark_west: ClarkWest,
    pub months: usize,
    pub exceeds_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub spec: ModelSpec,
    pub label: String,
    pub in_sample: InSampleReport,
    pub oos: Vec<(Subset, Option<OosMetric>)>,
    /// Rows of the forecast table that used the one-state fallback.
    pub fallback_origins: usize,
    pub notes: Vec<String>,
}

impl EvalReport {
    pub fn oos_metric(&self, subset: Subset) -> Option<&OosMetric> {
        self.oos
            .iter()
            .find(|(s, _)| *s == subset)
            .and_then(|(_, m)| m.as_ref())
    }

    pub fn subset_r2(&self, subset: Subset) -> Option<f64> {
        if subset == Subset::Full {
            return Some(self.in_sample.r2_adj);
        }
        self.in_sample
            .subset_r2_adj
            .iter()
            .find(|(s, _)| *s == subset)
            .and_then(|(_, v)| *v)
    }
}

/// Regressor history for the in-sample fit and the first usable index.
fn in_sample_regressor(spec: &ModelSpec, data: &BacktestData) -> Result<(Vec<f64>, usize)> {
    let input = &data.input;
    match &spec.predictor {
        PredictorSource::Variable(name) => Ok((data.variable(name)?.to_vec(), 0)),
        PredictorSource::Factor(FactorKind::Pls) => {
            let (series, _) = build_pls_index_with_loadings(input, false, &data.factor_opts)?;
            Ok((series.values.into_values(), 0))
        }
        PredictorSource::Factor(FactorKind::Pca) => {
            let last = input.len() - 1;
            Ok((pca_factor_history(input, last, &data.factor_opts)?, 0))
        }
        PredictorSource::Factor(FactorKind::Fc) => {
            let series = build_fc_predictor_from(input, &spec.initial_window, &data.factor_opts)?;
            let first = series.values.first_valid().expect("non-empty tail");
            let offset = data.window().index_of(first).expect("inside window");
            Ok((series.values.into_values(), offset))
        }
    }
}

/// Full-sample fit plus state- and recession-conditional adjusted R².
pub fn in_sample(spec: &ModelSpec, data: &BacktestData, method: SubsetR2Method) -> Result<InSampleReport> {
    let (x_full, first) = in_sample_regressor(spec, data)?;
    let exret = data.input.exret();
    let last = exret.len() - 1;
    let x = &x_full[first..last];
    let y = &exret[first + 1..=last];
    let s = &data.states[first..last];
    let n = y.len();
    let nw_lags = spec.nw_lags.resolve(n);
    let states = (spec.form == ModelForm::Switching).then_some(s);
    let fit = fit_model(y, x, states, spec.form, nw_lags)?;
    let design = match fit.form {
        ModelForm::OneState => one_state_design(x)?,
        ModelForm::Switching => switching_design(x, s)?,
    };
    let mut subset_r2_adj = Vec::new();
    for subset in Subset::CONDITIONAL {
        let mask: Option<Vec<bool>> = match subset {
            Subset::Up => Some(s.iter().map(|&v| v == 0.0).collect()),
            Subset::Down => Some(s.iter().map(|&v| v == 1.0).collect()),
            Subset::Expansion => data
                .recession
                .as_ref()
                .map(|r| r[first + 1..=last].iter().map(|f| !f).collect()),
            Subset::Recession => data.recession.as_ref().map(|r| r[first + 1..=last].to_vec()),
            Subset::Full => unreachable!(),
        };
        let value = mask.and_then(|m| {
            match method {
                SubsetR2Method::Masked => subset_adjusted_r2(&fit.fit, y, &m),
                SubsetR2Method::Refit => subset_adjusted_r2_refit(y, &design, &m),
            }
            .ok()
        });
        subset_r2_adj.push((subset, value));
    }
    let window = SampleWindow::new(data.window().month_at(first + 1), data.window().last())?;
    Ok(InSampleReport {
        window,
        n,
        nw_lags,
        form: fit.form,
        fallback: fit.fallback,
        coefficients: fit.coefficients(),
        t_stats: fit.t_stats(),
        r2_adj: fit.fit.r2_adj,
        subset_r2_adj,
    })
}

fn oos_metric(table: &ForecastTable, mask: Option<&[bool]>, lags: NwLags) -> Result<OosMetric> {
    let r2 = r2_oos(table, mask)?;
    let cw = clark_west(table, mask, lags)?;
    Ok(OosMetric {
        r2_oos: r2,
        clark_west: cw,
        months: mask.map_or(table.len(), |m| m.iter().filter(|&&b| b).count()),
        exceeds_threshold: r2 > ECONOMIC_THRESHOLD,
    })
}

/// Out-of-sample metrics on the full evaluation window and each subset.
pub fn evaluate_table(table: &ForecastTable, lags: NwLags, notes: &mut Vec<String>) -> Result<Vec<(Subset, Option<OosMetric>)>> {
    let mut out = vec![(Subset::Full, Some(oos_metric(table, None, lags)?))];
    for subset in Subset::CONDITIONAL {
        let metric = match table.mask(subset) {
            None => {
                notes.push(format!("{}: no recession mask supplied", subset.label()));
                None
            }
            Some(mask) => match oos_metric(table, Some(&mask), lags) {
                Ok(m) => Some(m),
                Err(e) => {
                    notes.push(format!("{}: {e}", subset.label()));
                    None
                }
            },
        };
        out.push((subset, metric));
    }
    Ok(out)
}

/// In-sample and out-of-sample evaluation of one model.
pub fn evaluate_spec(
    spec: &ModelSpec,
    data: &BacktestData,
    method: SubsetR2Method,
) -> Result<(EvalReport, ForecastTable)> {
    let label = spec.label();
    let in_sample = in_sample(spec, data, method).with_context(|| format!("{label}, in-sample fit"))?;
    let table = run_recursive(spec, data)?;
    let mut notes = Vec::new();
    let oos = evaluate_table(&table, spec.nw_lags, &mut notes).with_context(|| format!("{label}, evaluation"))?;
    let fallback_origins = table.rows.iter().filter(|r| r.fallback).count();
    Ok((
        EvalReport {
            spec: spec.clone(),
            label,
            in_sample,
            oos,
            fallback_origins,
            notes,
        },
        table,
    ))
}

/// Evaluates every spec; results keep the order of `specs`.
pub fn evaluate(
    specs: &[ModelSpec],
    data: &BacktestData,
    method: SubsetR2Method,
) -> Result<Vec<(EvalReport, ForecastTable)>> {
    specs
        .par_iter()
        .map(|spec| evaluate_spec(spec, data, method))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn row(realized: f64, forecast: f64, benchmark: f64, state: u8, recession: bool) -> ForecastRow {
        ForecastRow {
            target: MonthKey::from_yyyymm(200001).unwrap(),
            forecast,
            benchmark,
            realized,
            state,
            recession: Some(recession),
            coefficients: Coefficients::MISSING,
            fallback: false,
        }
    }

    fn table(rows: Vec<ForecastRow>) -> ForecastTable {
        ForecastTable {
            label: "test".into(),
            rows,
        }
    }

    #[test]
    fn historical_mean_examples() {
        let s = MonthlySeries::new(MonthKey::from_yyyymm(200001).unwrap(), vec![1.0, 3.0]).unwrap();
        assert_eq!(historical_mean(&s, MonthKey::from_yyyymm(200002).unwrap()).unwrap(), 2.0);
        let s = MonthlySeries::new(
            MonthKey::from_yyyymm(200001).unwrap(),
            (1..=5).map(f64::from).collect(),
        )
        .unwrap();
        let expanding: Vec<f64> = s
            .span()
            .months()
            .map(|m| historical_mean(&s, m).unwrap())
            .collect();
        assert_eq!(expanding, vec![1.0, 1.5, 2.0, 2.5, 3.0]);
        assert!(historical_mean(&s, MonthKey::from_yyyymm(199912).unwrap()).is_err());
    }

    #[test]
    fn historical_mean_spreadsheet_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let v: Vec<f64> = (0..100).map(|_| rng.random_range(-5.0..5.0)).collect();
        let s = MonthlySeries::new(MonthKey::from_yyyymm(199001).unwrap(), v.clone()).unwrap();
        let mut running = 0.0;
        for (i, m) in s.span().months().enumerate() {
            running += v[i];
            let want = running / (i + 1) as f64;
            assert!((historical_mean(&s, m).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_table_r2() {
        let rows = (1..=5)
            .map(|i| row(i as f64, if i == 5 { 4.0 } else { i as f64 }, 3.0, 0, false))
            .collect::<Vec<_>>();
        let mut rows12 = rows.clone();
        // replicate to satisfy the 12-month floor without changing the ratio
        rows12.extend(rows.iter().copied());
        rows12.extend(rows.iter().copied());
        let t = table(rows12);
        assert!((r2_oos(&t, None).unwrap() - 0.9).abs() < 1e-15);
        assert!(matches!(r2_oos(&table(rows), None), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn r2_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let rows: Vec<ForecastRow> = (0..40)
            .map(|_| {
                let r: f64 = rng.sample(StandardNormal);
                row(r, 0.1, 0.1, 0, false)
            })
            .collect();
        assert_eq!(r2_oos(&table(rows.clone()), None).unwrap(), 0.0);
        let perfect: Vec<ForecastRow> = rows.iter().map(|r| ForecastRow { forecast: r.realized, ..*r }).collect();
        assert_eq!(r2_oos(&table(perfect.clone()), None).unwrap(), 1.0);

        let cw = clark_west(&table(rows), None, NwLags::Auto).unwrap();
        assert_eq!((cw.t_stat, cw.p_value), (0.0, 0.5));

        for r in &perfect {
            let f = clark_west_adjusted_loss(r);
            assert!((f - 2.0 * (r.realized - r.benchmark).powi(2)).abs() < 1e-12);
        }
        assert!(clark_west(&table(perfect), None, NwLags::Auto).unwrap().t_stat > 0.0);
    }

    #[test]
    fn zero_benchmark_error_is_undefined() {
        let rows: Vec<ForecastRow> = (0..20).map(|_| row(1.0, 1.0, 1.0, 0, false)).collect();
        assert!(matches!(r2_oos(&table(rows.clone()), None), Err(Error::Undefined(_))));
        assert!(matches!(clark_west(&table(rows), None, NwLags::Auto), Err(Error::Undefined(_))));
    }

    #[test]
    fn stars() {
        let fixture = [(0.0005, "***"), (0.0099, "***"), (0.01, "**"), (0.049, "**"), (0.05, "*"), (0.0999, "*"), (0.1, ""), (0.7, "")];
        for (p, want) in fixture {
            assert_eq!(significance_stars(p), want, "{p}");
        }
        assert!((one_sided_p(1.6448536269514722) - 0.05).abs() < 1e-9);
        assert!((two_sided_p(-1.959963984540054) - 0.05).abs() < 1e-9);
    }

    #[test]
    fn switching_recovers_nested_one_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 400;
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let s: Vec<f64> = (0..n).map(|i| f64::from((i / 20) % 3 == 0)).collect();
        // exact one-state data: the switching fit must reproduce it
        let y: Vec<f64> = x.iter().map(|v| 0.4 + 0.7 * v).collect();
        let sw = fit_switching(&y, &x, &s, 0).unwrap();
        let c = sw.coefficients();
        assert!(!sw.fallback);
        assert!((c.b1 - c.g1).abs() < 1e-10 && c.d0.abs() < 1e-10);
        let one = fit_one_state(&y, &x, 0).unwrap();
        for (a, b) in sw.fit.residuals.iter().zip(&one.fit.residuals) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn single_state_sample_falls_back() {
        let x: Vec<f64> = (0..50).map(|i| (i as f64).cos()).collect();
        let y: Vec<f64> = x.iter().map(|v| 0.1 * v + 0.02).collect();
        let fit = fit_switching(&y, &x, &[1.0; 50], 0).unwrap();
        assert!(fit.fallback);
        assert_eq!(fit.form, ModelForm::OneState);
        // The caller must not pass an all-zero state column to the raw design.
        let zeros = vec![0.0; 50];
        let d = switching_design(&x, &zeros).unwrap();
        assert!(matches!(ols_fit(&y, &d, 0), Err(Error::SingularDesign { .. })));
    }

    #[test]
    fn predictor_source_parsing() {
        assert_eq!(PredictorSource::parse("pls"), PredictorSource::Factor(FactorKind::Pls));
        assert_eq!(PredictorSource::parse("E_FC"), PredictorSource::Factor(FactorKind::Fc));
        assert_eq!(PredictorSource::parse("DP"), PredictorSource::Variable("DP".into()));
    }

    #[test]
    fn partition_of_squared_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let rows: Vec<ForecastRow> = (0..60)
            .map(|i| {
                row(
                    rng.sample(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal) * 0.1,
                    0.05,
                    (i % 5 == 0) as u8,
                    i % 7 == 0,
                )
            })
            .collect();
        let t = table(rows);
        let (m, b) = t.sse(None).unwrap();
        let (me, be) = t.sse(Some(&t.mask(Subset::Expansion).unwrap())).unwrap();
        let (mr, br) = t.sse(Some(&t.mask(Subset::Recession).unwrap())).unwrap();
        assert!((m - me - mr).abs() < 1e-12 && (b - be - br).abs() < 1e-12);
    }
}
