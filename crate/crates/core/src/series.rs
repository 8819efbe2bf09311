//! Monthly time series, sample windows and predictor panels.
//!
//! Missing observations are stored as `NaN` and may only appear before the
//! first observed value of a series. A series with an interior gap cannot be
//! constructed.

use std::fmt;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Canonical names of the sixteen predictors, in display order.
pub const PREDICTOR_NAMES: [&str; 16] = [
    "DP", "DY", "EP", "DE", "SVAR", "BM", "NTIS", "TBL", "LTY", "LTR", "TMS", "DFY", "DFR", "INFL",
    "ERM", "EBM",
];

/// Name of the constructed excess-return series.
pub const EXRET: &str = "EXRET";
/// Log total market return (input to [`excess_return`]).
pub const RET: &str = "RET";
/// Risk-free rate (input to [`excess_return`]).
pub const RFREE: &str = "RFREE";
/// Lagged equity premium, always generated from `EXRET`.
pub const ERM: &str = "ERM";
/// Default driver of the yield-curve state indicator.
pub const TMS: &str = "TMS";

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct MonthKey {
    year: i32,
    month: u8,
}

impl MonthKey {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Parameter(format!(
                "month {month} outside 1..=12 (year {year})"
            )));
        }
        Ok(Self {
            year,
            month: month as u8,
        })
    }

    /// Parses the `yyyymm` integer encoding.
    pub fn from_yyyymm(code: i64) -> Result<Self> {
        if code < 0 {
            return Err(Error::Parameter(format!("invalid yyyymm code {code}")));
        }
        let year = i32::try_from(code / 100)
            .map_err(|_| Error::Parameter(format!("invalid yyyymm code {code}")))?;
        Self::new(year, (code % 100) as u32)
    }

    pub fn yyyymm(self) -> u32 {
        self.year as u32 * 100 + self.month as u32
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month as u32
    }

    fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    fn from_ordinal(ordinal: i64) -> Self {
        Self {
            year: ordinal.div_euclid(12) as i32,
            month: (ordinal.rem_euclid(12) + 1) as u8,
        }
    }

    pub fn succ(self) -> Self {
        self.add_months(1)
    }

    pub fn pred(self) -> Self {
        self.add_months(-1)
    }

    pub fn add_months(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    /// Signed number of months from `self` to `later`.
    pub fn months_until(self, later: MonthKey) -> i64 {
        later.ordinal() - self.ordinal()
    }
}

impl fmt::Display for MonthKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl TryFrom<u32> for MonthKey {
    type Error = Error;

    fn try_from(code: u32) -> Result<Self> {
        Self::from_yyyymm(code as i64)
    }
}

impl From<MonthKey> for u32 {
    fn from(m: MonthKey) -> u32 {
        m.yyyymm()
    }
}

/// An inclusive range of months.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SampleWindow {
    first: MonthKey,
    last: MonthKey,
}

impl SampleWindow {
    pub fn new(first: MonthKey, last: MonthKey) -> Result<Self> {
        if first > last {
            return Err(Error::Parameter(format!(
                "window start {first} is after its end {last}"
            )));
        }
        Ok(Self { first, last })
    }

    pub fn from_yyyymm(first: i64, last: i64) -> Result<Self> {
        Self::new(MonthKey::from_yyyymm(first)?, MonthKey::from_yyyymm(last)?)
    }

    pub fn first(&self) -> MonthKey {
        self.first
    }

    pub fn last(&self) -> MonthKey {
        self.last
    }

    pub fn len(&self) -> usize {
        (self.first.months_until(self.last) + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, month: MonthKey) -> bool {
        self.first <= month && month <= self.last
    }

    pub fn contains_window(&self, other: &SampleWindow) -> bool {
        self.contains(other.first) && self.contains(other.last)
    }

    /// Position of `month` inside the window.
    pub fn index_of(&self, month: MonthKey) -> Option<usize> {
        self.contains(month)
            .then(|| self.first.months_until(month) as usize)
    }

    pub fn month_at(&self, index: usize) -> MonthKey {
        self.first.add_months(index as i64)
    }

    pub fn months(&self) -> impl Iterator<Item = MonthKey> + '_ {
        (0..self.len()).map(move |i| self.month_at(i))
    }
}

impl fmt::Display for SampleWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..={}", self.first, self.last)
    }
}

/// One value per month starting at `start`; `NaN` marks pre-sample months.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlySeries {
    start: MonthKey,
    values: Vec<f64>,
}

impl MonthlySeries {
    pub fn new(start: MonthKey, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DegenerateInput(format!(
                "series starting {start} has no values"
            )));
        }
        let mut seen_value = false;
        for (i, v) in values.iter().enumerate() {
            if v.is_nan() {
                if seen_value {
                    return Err(Error::Ingestion {
                        row: i,
                        message: format!(
                            "missing value at {} after the series has started",
                            start.add_months(i as i64)
                        ),
                    });
                }
            } else if v.is_infinite() {
                return Err(Error::DegenerateInput(format!(
                    "non-finite value at {}",
                    start.add_months(i as i64)
                )));
            } else {
                seen_value = true;
            }
        }
        Ok(Self { start, values })
    }

    pub fn start(&self) -> MonthKey {
        self.start
    }

    pub fn end(&self) -> MonthKey {
        self.start.add_months(self.values.len() as i64 - 1)
    }

    pub fn span(&self) -> SampleWindow {
        SampleWindow {
            first: self.start,
            last: self.end(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn index_of(&self, month: MonthKey) -> Option<usize> {
        let offset = self.start.months_until(month);
        (offset >= 0 && (offset as usize) < self.values.len()).then_some(offset as usize)
    }

    /// Observed value at `month`, `None` outside the series or in the missing head.
    pub fn get(&self, month: MonthKey) -> Option<f64> {
        self.index_of(month)
            .map(|i| self.values[i])
            .filter(|v| !v.is_nan())
    }

    /// First month carrying an observed value.
    pub fn first_valid(&self) -> Option<MonthKey> {
        self.values
            .iter()
            .position(|v| !v.is_nan())
            .map(|i| self.start.add_months(i as i64))
    }

    /// Months with observed values.
    pub fn valid_span(&self) -> Option<SampleWindow> {
        self.first_valid().map(|first| SampleWindow {
            first,
            last: self.end(),
        })
    }

    pub fn covers(&self, window: &SampleWindow) -> bool {
        self.valid_span()
            .is_some_and(|span| span.contains_window(window))
    }

    /// Restriction to `window`; the window must lie inside the observed span.
    pub fn slice(&self, window: &SampleWindow) -> Option<MonthlySeries> {
        if !self.covers(window) {
            return None;
        }
        let from = self.index_of(window.first)?;
        let to = self.index_of(window.last)?;
        Some(MonthlySeries {
            start: window.first,
            values: self.values[from..=to].to_vec(),
        })
    }

    /// Values shifted forward by `months`: the output at `m` is the input at `m - months`.
    pub fn lag(&self, months: u32) -> MonthlySeries {
        MonthlySeries {
            start: self.start.add_months(months as i64),
            values: self.values.clone(),
        }
    }

    pub fn scaled(&self, factor: f64) -> MonthlySeries {
        MonthlySeries {
            start: self.start,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// `(month, value)` pairs for observed months.
    pub fn observations(&self) -> impl Iterator<Item = (MonthKey, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .map(|(i, &v)| (self.start.add_months(i as i64), v))
    }
}

/// Element-wise `log_total_return - risk_free` over identical months.
pub fn excess_return(
    log_total_return: &MonthlySeries,
    risk_free: &MonthlySeries,
) -> Result<MonthlySeries> {
    if log_total_return.span() != risk_free.span() {
        return Err(Error::Alignment(format!(
            "return covers {} but risk-free rate covers {}",
            log_total_return.span(),
            risk_free.span()
        )));
    }
    let values = log_total_return
        .values
        .iter()
        .zip(&risk_free.values)
        .map(|(r, f)| r - f)
        .collect();
    MonthlySeries::new(log_total_return.start, values)
}

/// Sample mean and standard deviation (n - 1 denominator).
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Whether a standard deviation is zero relative to the data's magnitude.
pub(crate) fn is_degenerate_sd(sd: f64, values: &[f64]) -> bool {
    let scale = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    !(sd > 1e-12 * scale)
}

/// Standardizes the observations dated `end` or earlier with their own mean
/// and sample standard deviation. Later values are dropped.
pub fn standardize_through(series: &MonthlySeries, end: MonthKey) -> Result<MonthlySeries> {
    if end < series.start {
        return Err(Error::insufficient(
            format!("standardizing through {end}"),
            2,
            0,
        ));
    }
    let last = series
        .index_of(end)
        .unwrap_or(series.values.len() - 1);
    let head = &series.values[..=last];
    let observed: Vec<f64> = head.iter().copied().filter(|v| !v.is_nan()).collect();
    if observed.len() < 2 {
        return Err(Error::insufficient(
            format!("standardizing through {end}"),
            2,
            observed.len(),
        ));
    }
    let (mean, sd) = mean_sd(&observed);
    if is_degenerate_sd(sd, &observed) {
        return Err(Error::DegenerateInput(format!(
            "zero variance through {end}"
        )));
    }
    let values = head.iter().map(|v| (v - mean) / sd).collect();
    MonthlySeries::new(series.start, values)
}

/// Named monthly series sharing a calendar; insertion order is preserved.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictorPanel {
    series: IndexMap<String, MonthlySeries>,
}

impl PredictorPanel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, series: MonthlySeries) {
        self.series.insert(name.into(), series);
    }

    pub fn get(&self, name: &str) -> Option<&MonthlySeries> {
        self.series.get(name)
    }

    /// Like [`get`](Self::get) but reports a schema error for unknown names.
    pub fn require(&self, name: &str) -> Result<&MonthlySeries> {
        self.series.get(name).ok_or_else(|| Error::Schema {
            column: name.to_string(),
        })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.series.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.series.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &MonthlySeries)> {
        self.series.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    /// Number of canonical predictors present.
    pub fn predictor_count(&self) -> usize {
        PREDICTOR_NAMES
            .iter()
            .filter(|n| self.series.contains_key(**n))
            .count()
    }

    /// Smallest window containing every series' observed span.
    pub fn span(&self) -> Option<SampleWindow> {
        let mut spans = self.series.values().filter_map(|s| s.valid_span());
        let first = spans.next()?;
        Some(spans.fold(first, |acc, s| SampleWindow {
            first: acc.first.min(s.first),
            last: acc.last.max(s.last),
        }))
    }

    /// Trims every series to `window`.
    pub fn align(&self, window: &SampleWindow) -> Result<PredictorPanel> {
        let mut out = IndexMap::with_capacity(self.series.len());
        for (name, series) in &self.series {
            let trimmed = series.slice(window).ok_or_else(|| Error::Coverage {
                series: name.clone(),
                first: window.first,
                last: window.last,
            })?;
            out.insert(name.clone(), trimmed);
        }
        Ok(PredictorPanel { series: out })
    }

    /// Sub-panel with the named series in the given order.
    pub fn select(&self, names: &[impl AsRef<str>]) -> Result<PredictorPanel> {
        let mut out = IndexMap::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            out.insert(name.to_string(), self.require(name)?.clone());
        }
        Ok(PredictorPanel { series: out })
    }
}

/// Free-function form of [`PredictorPanel::align`].
pub fn align(panel: &PredictorPanel, window: &SampleWindow) -> Result<PredictorPanel> {
    panel.align(window)
}
