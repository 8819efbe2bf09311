//! Aggregate predictors built from the predictor panel.
//!
//! Three single-index summaries of `N` predictors are provided:
//!
//! * `PLS`: a two-pass targeted factor. Under the latent structure
//!
//!   ```text
//!   R_{t+1} = α0 + α1 F_t + ξ_{t+1}
//!   x_{i,t} = δ_{i,0} + δ_{i,1} F_t + δ_{i,2} Y_t + η_{i,t}
//!   ```
//!
//!   (with `Y_t` a common noise component), the first pass runs `N`
//!   time-series regressions of each lagged predictor on the realized return,
//!   `x_{i,t-1} = φ_{i,0} + φ_{i,1} R_t + ν_{i,t}`, so that `φ_{i,1}` measures
//!   how predictor `i` loads on the return-relevant factor. The second pass
//!   runs, month by month, the cross-sectional regression
//!   `x_{i,t} = φ_{0,t} + F_t φ_{i,1} + ϕ_{i,t}` and keeps the slope `F_t`.
//! * `PCA`: the first principal component of the predictor correlation matrix.
//! * `FC`: the equal-weighted mean of the `N` univariate forecasts.
//!
//! Predictors (and, in the first pass, the return) are standardized with the
//! sample moments of the estimation window. Factor signs are fixed so that the
//! factor covaries non-negatively with next-month returns over the
//! estimation window.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backtest::{fit_and_forecast, ModelForm};
use crate::error::{Error, Result, ResultExt};
use crate::series::{
    is_degenerate_sd, mean_sd, MonthKey, MonthlySeries, PredictorPanel, SampleWindow,
};

/// Months of data required before any factor value is produced.
pub const MIN_FACTOR_HISTORY: usize = 24;
/// Default floor on the initial estimation window of the combination forecast.
pub const MIN_FC_INITIAL_WINDOW: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FactorKind {
    Pls,
    Pca,
    Fc,
}

impl FactorKind {
    pub fn label(self) -> &'static str {
        match self {
            FactorKind::Pls => "E_PLS",
            FactorKind::Pca => "E_PCA",
            FactorKind::Fc => "E_FC",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorOptions {
    pub min_history: usize,
    /// Include the cross-sectional intercept `φ_{0,t}` in the PLS second pass.
    pub pls_intercept: bool,
    pub fc_min_initial: usize,
}

impl Default for FactorOptions {
    fn default() -> Self {
        Self {
            min_history: MIN_FACTOR_HISTORY,
            pls_intercept: true,
            fc_min_initial: MIN_FC_INITIAL_WINDOW,
        }
    }
}

/// Predictor columns and the excess return over one window.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorInput {
    window: SampleWindow,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
    exret: Vec<f64>,
}

impl FactorInput {
    /// Aligns every series of `panel` and `exret` to `window`.
    pub fn new(panel: &PredictorPanel, exret: &MonthlySeries, window: &SampleWindow) -> Result<Self> {
        let aligned = panel.align(window)?;
        let exret = exret.slice(window).ok_or_else(|| Error::Coverage {
            series: crate::series::EXRET.into(),
            first: window.first(),
            last: window.last(),
        })?;
        Ok(Self {
            window: *window,
            names: aligned.names().map(str::to_string).collect(),
            columns: aligned.iter().map(|(_, s)| s.values().to_vec()).collect(),
            exret: exret.into_values(),
        })
    }

    pub fn from_columns(
        start: MonthKey,
        names: Vec<String>,
        columns: Vec<Vec<f64>>,
        exret: Vec<f64>,
    ) -> Result<Self> {
        if names.len() != columns.len() || columns.is_empty() {
            return Err(Error::Parameter("one name per predictor column required".into()));
        }
        let t = exret.len();
        if t == 0 || columns.iter().any(|c| c.len() != t) {
            return Err(Error::Alignment("predictor columns and return differ in length".into()));
        }
        if exret.iter().chain(columns.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput("factor input contains missing values".into()));
        }
        let window = SampleWindow::new(start, start.add_months(t as i64 - 1))?;
        Ok(Self {
            window,
            names,
            columns,
            exret,
        })
    }

    pub fn window(&self) -> &SampleWindow {
        &self.window
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn exret(&self) -> &[f64] {
        &self.exret
    }

    pub fn n_predictors(&self) -> usize {
        self.columns.len()
    }

    pub fn len(&self) -> usize {
        self.exret.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exret.is_empty()
    }

    fn index_of(&self, month: MonthKey) -> Result<usize> {
        self.window.index_of(month).ok_or(Error::Coverage {
            series: "factor input".into(),
            first: month,
            last: month,
        })
    }

    /// Standardizes predictor `j` with the moments of indices `0..=end`.
    fn standardized(&self, j: usize, end: usize) -> Result<(f64, f64)> {
        let head = &self.columns[j][..=end];
        let (mean, sd) = mean_sd(head);
        if is_degenerate_sd(sd, head) {
            return Err(Error::DegenerateInput(format!(
                "predictor `{}` has zero variance through {}",
                self.names[j],
                self.window.month_at(end)
            )));
        }
        Ok((mean, sd))
    }
}

/// First-pass PLS loadings estimated on `start..=end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsLoadings {
    pub names: Vec<String>,
    /// `φ_{i,1}`.
    pub slopes: Vec<f64>,
    /// `φ_{i,0}`.
    pub intercepts: Vec<f64>,
    pub start: MonthKey,
    pub end: MonthKey,
    /// Standardization moments of each predictor over the estimation window.
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub intercept_in_second_stage: bool,
    /// `±1`, chosen so the scored factor covaries non-negatively with next-month returns.
    pub orientation: f64,
}

/// `FactorSeries` output: the index as a monthly series plus its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSeries {
    pub kind: FactorKind,
    pub values: MonthlySeries,
    pub sign_anchor: String,
}

/// Per-month ℓ1-normalized PLS loadings.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPath {
    pub start: MonthKey,
    pub names: Vec<String>,
    pub weights: Vec<Vec<f64>>,
}

fn sign_anchor(window: &SampleWindow) -> String {
    format!("cov(F_t, EXRET_t+1) >= 0 over {window}")
}

/// Sample covariance of `factor[t]` with `ret[t + 1]` for `t + 1 <= end`.
fn lead_covariance(factor: &[f64], ret: &[f64], end: usize) -> f64 {
    if end == 0 {
        return 0.0;
    }
    let f = &factor[..end];
    let r = &ret[1..=end];
    let n = f.len() as f64;
    let (fm, rm) = (f.iter().sum::<f64>() / n, r.iter().sum::<f64>() / n);
    f.iter().zip(r).map(|(a, b)| (a - fm) * (b - rm)).sum::<f64>()
}

fn check_history(input: &FactorInput, end: usize, needed: usize, what: &str) -> Result<()> {
    if end >= input.len() {
        return Err(Error::Parameter(format!("estimation end beyond the input window ({what})")));
    }
    if end + 1 < needed {
        return Err(Error::insufficient(
            format!("{what} through {}", input.window.month_at(end)),
            needed,
            end + 1,
        ));
    }
    Ok(())
}

/// Cross-sectional slope of `z` on `phi`, with or without intercept.
fn cross_section_slope(z: &[f64], phi: &[f64], intercept: bool) -> f64 {
    if intercept {
        let n = phi.len() as f64;
        let pm = phi.iter().sum::<f64>() / n;
        let zm = z.iter().sum::<f64>() / n;
        let sxy: f64 = phi.iter().zip(z).map(|(p, v)| (p - pm) * (v - zm)).sum();
        let sxx: f64 = phi.iter().map(|p| (p - pm).powi(2)).sum();
        sxy / sxx
    } else {
        let sxy: f64 = phi.iter().zip(z).map(|(p, v)| p * v).sum();
        let sxx: f64 = phi.iter().map(|p| p * p).sum();
        sxy / sxx
    }
}

fn check_loadings(slopes: &[f64], intercept: bool) -> Result<()> {
    let ss: f64 = slopes.iter().map(|p| p * p).sum();
    if !(ss > 1e-20) {
        return Err(Error::DegenerateLoadings("all first-pass loadings are zero".into()));
    }
    if intercept {
        if slopes.len() < 3 {
            return Err(Error::DegenerateLoadings(format!(
                "a cross-section with intercept needs at least 3 predictors, have {}",
                slopes.len()
            )));
        }
        let mean = slopes.iter().sum::<f64>() / slopes.len() as f64;
        let dispersion: f64 = slopes.iter().map(|p| (p - mean).powi(2)).sum();
        if !(dispersion > 1e-12 * ss) {
            return Err(Error::DegenerateLoadings(
                "first-pass loadings have no cross-sectional dispersion".into(),
            ));
        }
    }
    Ok(())
}

impl PlsLoadings {
    fn score_standardized(&self, z: &[f64]) -> f64 {
        self.orientation * cross_section_slope(z, &self.slopes, self.intercept_in_second_stage)
    }

    /// Factor value for raw predictor values `x` (one per predictor).
    pub fn score(&self, x: &[f64]) -> f64 {
        let z: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(j, v)| (v - self.means[j]) / self.sds[j])
            .collect();
        self.score_standardized(&z)
    }
}

/// First pass and in-window factor history through index `end`.
fn pls_estimate(input: &FactorInput, end: usize, opts: &FactorOptions) -> Result<(PlsLoadings, Vec<f64>)> {
    check_history(input, end, opts.min_history.max(3), "PLS first pass")?;
    let n_pred = input.n_predictors();
    let mut means = Vec::with_capacity(n_pred);
    let mut sds = Vec::with_capacity(n_pred);
    for j in 0..n_pred {
        let (m, s) = input.standardized(j, end)?;
        means.push(m);
        sds.push(s);
    }
    // Target R_t for t = 1..=end, standardized on that sample.
    let target = &input.exret[1..=end];
    let (rm, rs) = mean_sd(target);
    if is_degenerate_sd(rs, target) {
        return Err(Error::DegenerateInput(format!(
            "excess return has zero variance through {}",
            input.window.month_at(end)
        )));
    }
    let r: Vec<f64> = target.iter().map(|v| (v - rm) / rs).collect();
    let r_mean = r.iter().sum::<f64>() / r.len() as f64;
    let r_ss: f64 = r.iter().map(|v| (v - r_mean).powi(2)).sum();

    let mut slopes = Vec::with_capacity(n_pred);
    let mut intercepts = Vec::with_capacity(n_pred);
    for j in 0..n_pred {
        // x_{j,t-1} for t = 1..=end
        let lagged: Vec<f64> = input.columns[j][..end]
            .iter()
            .map(|v| (v - means[j]) / sds[j])
            .collect();
        let z_mean = lagged.iter().sum::<f64>() / lagged.len() as f64;
        let sxy: f64 = lagged
            .iter()
            .zip(&r)
            .map(|(z, rv)| (z - z_mean) * (rv - r_mean))
            .sum();
        let slope = sxy / r_ss;
        slopes.push(slope);
        intercepts.push(z_mean - slope * r_mean);
    }
    check_loadings(&slopes, opts.pls_intercept)
        .with_context(|| format!("PLS through {}", input.window.month_at(end)))?;

    let mut loadings = PlsLoadings {
        names: input.names.clone(),
        slopes,
        intercepts,
        start: input.window.first(),
        end: input.window.month_at(end),
        means,
        sds,
        intercept_in_second_stage: opts.pls_intercept,
        orientation: 1.0,
    };
    let mut z = vec![0.0; n_pred];
    let mut factor: Vec<f64> = (0..=end)
        .map(|t| {
            for j in 0..n_pred {
                z[j] = (input.columns[j][t] - loadings.means[j]) / loadings.sds[j];
            }
            loadings.score_standardized(&z)
        })
        .collect();
    if lead_covariance(&factor, &input.exret, end) < 0.0 {
        loadings.orientation = -1.0;
        factor.iter_mut().for_each(|f| *f = -*f);
    }
    Ok((loadings, factor))
}

/// PLS factor history on indices `0..=end` estimated with data through `end`.
pub fn pls_factor_history(input: &FactorInput, end: usize, opts: &FactorOptions) -> Result<Vec<f64>> {
    pls_estimate(input, end, opts).map(|(_, f)| f)
}

/// First pass over the panel's common window up to `end`.
pub fn pls_first_stage(
    panel: &PredictorPanel,
    exret: &MonthlySeries,
    end: MonthKey,
    opts: &FactorOptions,
) -> Result<PlsLoadings> {
    let first = panel
        .iter()
        .map(|(name, s)| {
            s.first_valid().ok_or_else(|| Error::DegenerateInput(format!("`{name}` has no data")))
        })
        .chain(std::iter::once(
            exret.first_valid().ok_or_else(|| Error::DegenerateInput("EXRET has no data".into())),
        ))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .expect("at least EXRET");
    let window = SampleWindow::new(first, end)?;
    let input = FactorInput::new(panel, exret, &window)?;
    pls_estimate(&input, input.len() - 1, opts).map(|(l, _)| l)
}

/// Scores `months` with fixed loadings.
///
/// Predictors are standardized with the moments stored in `loadings`; months
/// after the estimation end are allowed but are then not real-time values.
pub fn pls_second_stage(
    panel: &PredictorPanel,
    loadings: &PlsLoadings,
    months: &SampleWindow,
) -> Result<FactorSeries> {
    check_loadings(&loadings.slopes, loadings.intercept_in_second_stage)?;
    let aligned = panel.select(&loadings.names)?.align(months)?;
    let columns: Vec<&[f64]> = aligned.iter().map(|(_, s)| s.values()).collect();
    let values = (0..months.len())
        .map(|t| {
            let x: Vec<f64> = columns.iter().map(|c| c[t]).collect();
            loadings.score(&x)
        })
        .collect();
    Ok(FactorSeries {
        kind: FactorKind::Pls,
        values: MonthlySeries::new(months.first(), values)?,
        sign_anchor: sign_anchor(&SampleWindow::new(loadings.start, loadings.end)?),
    })
}

/// Full-sample or real-time PLS index together with the loadings behind each value.
pub fn build_pls_index_with_loadings(
    input: &FactorInput,
    recursive: bool,
    opts: &FactorOptions,
) -> Result<(FactorSeries, Vec<PlsLoadings>)> {
    let last = input.len() - 1;
    if !recursive {
        let (loadings, factor) = pls_estimate(input, last, opts)?;
        let series = FactorSeries {
            kind: FactorKind::Pls,
            values: MonthlySeries::new(input.window.first(), factor)?,
            sign_anchor: sign_anchor(&input.window),
        };
        return Ok((series, vec![loadings]));
    }
    let first = opts.min_history.max(3) - 1;
    check_history(input, last, first + 1, "recursive PLS")?;
    let fits: Vec<(PlsLoadings, f64)> = (first..=last)
        .into_par_iter()
        .map(|end| pls_estimate(input, end, opts).map(|(l, f)| (l, f[end])))
        .collect::<Result<_>>()?;
    let mut values = vec![f64::NAN; first];
    values.extend(fits.iter().map(|(_, v)| *v));
    let series = FactorSeries {
        kind: FactorKind::Pls,
        values: MonthlySeries::new(input.window.first(), values)?,
        sign_anchor: format!("{} (re-estimated each month)", sign_anchor(&input.window)),
    };
    Ok((series, fits.into_iter().map(|(l, _)| l).collect()))
}

pub fn build_pls_index(
    panel: &PredictorPanel,
    exret: &MonthlySeries,
    window: &SampleWindow,
    recursive: bool,
    opts: &FactorOptions,
) -> Result<FactorSeries> {
    let input = FactorInput::new(panel, exret, window)?;
    build_pls_index_with_loadings(&input, recursive, opts).map(|(s, _)| s)
}

/// Signed loadings divided by their ℓ1 norm, one row per estimation month.
pub fn pls_weight_path(loadings: &[PlsLoadings]) -> Result<WeightPath> {
    let first = loadings
        .first()
        .ok_or_else(|| Error::insufficient("PLS weight path", 1, 0))?;
    let mut weights = Vec::with_capacity(loadings.len());
    for (i, l) in loadings.iter().enumerate() {
        if l.end != first.end.add_months(i as i64) {
            return Err(Error::Alignment("loadings are not consecutive months".into()));
        }
        let norm: f64 = l.slopes.iter().map(|p| p.abs()).sum();
        if !(norm > 0.0) {
            return Err(Error::DegenerateLoadings(format!("all loadings zero at {}", l.end)));
        }
        weights.push(l.slopes.iter().map(|p| l.orientation * p / norm).collect());
    }
    Ok(WeightPath {
        start: first.end,
        names: first.names.clone(),
        weights,
    })
}

/// First principal component estimated through `end`.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaLoadings {
    pub names: Vec<String>,
    /// Unit-norm eigenvector of the correlation matrix (sign-normalized).
    pub eigenvector: Vec<f64>,
    pub eigenvalue: f64,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub end: MonthKey,
}

fn pca_estimate(input: &FactorInput, end: usize, opts: &FactorOptions) -> Result<(PcaLoadings, Vec<f64>)> {
    let n_pred = input.n_predictors();
    check_history(input, end, opts.min_history.max(n_pred + 2), "principal component")?;
    let rows = end + 1;
    let mut means = Vec::with_capacity(n_pred);
    let mut sds = Vec::with_capacity(n_pred);
    for j in 0..n_pred {
        let (m, s) = input.standardized(j, end)?;
        means.push(m);
        sds.push(s);
    }
    let z = DMatrix::from_fn(rows, n_pred, |t, j| (input.columns[j][t] - means[j]) / sds[j]);
    let corr = (z.transpose() * &z) / (rows as f64 - 1.0);
    let eig = SymmetricEigen::try_new(corr, 1e-14, 10_000).ok_or_else(|| {
        Error::Numerical(format!(
            "eigen-decomposition did not converge through {}",
            input.window.month_at(end)
        ))
    })?;
    let top = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > eig.eigenvalues[best] { i } else { best });
    let mut w: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    // Deterministic orientation first, then the return-covariance convention.
    let anchor = w
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if v.abs() > w[best].abs() + 1e-12 { i } else { best });
    if w[anchor] < 0.0 {
        w.iter_mut().for_each(|v| *v = -*v);
    }
    let mut factor: Vec<f64> = (0..rows)
        .map(|t| z.row(t).iter().zip(&w).map(|(a, b)| a * b).sum())
        .collect();
    if lead_covariance(&factor, &input.exret, end) < 0.0 {
        w.iter_mut().for_each(|v| *v = -*v);
        factor.iter_mut().for_each(|f| *f = -*f);
    }
    Ok((
        PcaLoadings {
            names: input.names.clone(),
            eigenvector: w,
            eigenvalue: eig.eigenvalues[top],
            means,
            sds,
            end: input.window.month_at(end),
        },
        factor,
    ))
}

pub fn pca_factor_history(input: &FactorInput, end: usize, opts: &FactorOptions) -> Result<Vec<f64>> {
    pca_estimate(input, end, opts).map(|(_, f)| f)
}

pub fn pca_loadings(input: &FactorInput, end: usize, opts: &FactorOptions) -> Result<PcaLoadings> {
    pca_estimate(input, end, opts).map(|(l, _)| l)
}

pub fn build_pca_factor_from(input: &FactorInput, recursive: bool, opts: &FactorOptions) -> Result<FactorSeries> {
    let last = input.len() - 1;
    if !recursive {
        let factor = pca_factor_history(input, last, opts)?;
        return Ok(FactorSeries {
            kind: FactorKind::Pca,
            values: MonthlySeries::new(input.window.first(), factor)?,
            sign_anchor: sign_anchor(&input.window),
        });
    }
    let first = opts.min_history.max(input.n_predictors() + 2) - 1;
    check_history(input, last, first + 1, "recursive principal component")?;
    let tail: Vec<f64> = (first..=last)
        .into_par_iter()
        .map(|end| pca_factor_history(input, end, opts).map(|f| f[end]))
        .collect::<Result<_>>()?;
    let mut values = vec![f64::NAN; first];
    values.extend(tail);
    Ok(FactorSeries {
        kind: FactorKind::Pca,
        values: MonthlySeries::new(input.window.first(), values)?,
        sign_anchor: format!("{} (re-estimated each month)", sign_anchor(&input.window)),
    })
}

pub fn build_pca_factor(
    panel: &PredictorPanel,
    exret: &MonthlySeries,
    window: &SampleWindow,
    recursive: bool,
    opts: &FactorOptions,
) -> Result<FactorSeries> {
    let input = FactorInput::new(panel, exret, window)?;
    build_pca_factor_from(&input, recursive, opts)
}

/// Equal-weighted mean of the univariate forecasts of `R_{end+1}` made at `end`.
///
/// Predictors whose univariate regression is degenerate over the estimation
/// window are left out of the mean.
pub fn combination_forecast(
    input: &FactorInput,
    end: usize,
    form: ModelForm,
    states: Option<&[f64]>,
) -> Result<f64> {
    if end < 3 {
        return Err(Error::insufficient("combination forecast", 4, end + 1));
    }
    let y = &input.exret[1..=end];
    let mut total = 0.0;
    let mut used = 0usize;
    for (j, x) in input.columns.iter().enumerate() {
        match fit_and_forecast(y, x, states, end, form) {
            Ok(f) => {
                total += f.forecast;
                used += 1;
            }
            Err(e) if matches!(
                e.root(),
                Error::SingularDesign { .. } | Error::DegenerateInput(_)
            ) => {
                log::warn!(
                    "dropping `{}` from the combination at {}: {e}",
                    input.names[j],
                    input.window.month_at(end)
                );
            }
            Err(e) => return Err(e),
        }
    }
    if used == 0 {
        return Err(Error::DegenerateInput(format!(
            "no usable predictor for the combination at {}",
            input.window.month_at(end)
        )));
    }
    Ok(total / used as f64)
}

/// Real-time combination forecasts from the end of `initial_window` onward.
///
/// The value at month `t` is the forecast of `R_{t+1}`; earlier months are missing.
pub fn build_fc_predictor_from(
    input: &FactorInput,
    initial_window: &SampleWindow,
    opts: &FactorOptions,
) -> Result<FactorSeries> {
    if initial_window.first() != input.window.first() || !input.window.contains(initial_window.last()) {
        return Err(Error::Parameter(format!(
            "initial window {initial_window} must start the sample {}",
            input.window
        )));
    }
    if initial_window.len() < opts.fc_min_initial {
        return Err(Error::insufficient(
            "combination forecast initial window",
            opts.fc_min_initial,
            initial_window.len(),
        ));
    }
    let first = input.index_of(initial_window.last())?;
    let last = input.len() - 1;
    let tail: Vec<f64> = (first..=last)
        .into_par_iter()
        .map(|end| combination_forecast(input, end, ModelForm::OneState, None))
        .collect::<Result<_>>()?;
    let mut values = vec![f64::NAN; first];
    values.extend(tail);
    Ok(FactorSeries {
        kind: FactorKind::Fc,
        values: MonthlySeries::new(input.window.first(), values)?,
        sign_anchor: "equal-weighted mean of univariate forecasts (no sign freedom)".into(),
    })
}

pub fn build_fc_predictor(
    panel: &PredictorPanel,
    exret: &MonthlySeries,
    window: &SampleWindow,
    initial_window: &SampleWindow,
    opts: &FactorOptions,
) -> Result<FactorSeries> {
    let input = FactorInput::new(panel, exret, window)?;
    build_fc_predictor_from(&input, initial_window, opts)
}
