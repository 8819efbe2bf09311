//! Real-time yield-curve states and ex-post recession masks.

use std::path::Path;

use crate::error::{Error, Result};
use crate::ingest::{read_monthly_table, DEFAULT_PERIOD_COLUMN};
use crate::series::{MonthKey, MonthlySeries, SampleWindow};

pub const DEFAULT_TAU: usize = 9;

/// Binary market state per month; 1 marks a down state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSeries {
    start: MonthKey,
    states: Vec<u8>,
    tau: usize,
}

impl StateSeries {
    pub fn start(&self) -> MonthKey {
        self.start
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn states(&self) -> &[u8] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn span(&self) -> SampleWindow {
        SampleWindow::new(self.start, self.start.add_months(self.states.len() as i64 - 1))
            .expect("non-empty")
    }

    pub fn get(&self, month: MonthKey) -> Option<u8> {
        let offset = self.start.months_until(month);
        (offset >= 0)
            .then(|| self.states.get(offset as usize).copied())
            .flatten()
    }

    /// States over `window`, or a coverage error.
    pub fn window(&self, window: &SampleWindow) -> Result<Vec<u8>> {
        if !self.span().contains_window(window) {
            return Err(Error::Coverage {
                series: "state indicator".into(),
                first: window.first(),
                last: window.last(),
            });
        }
        let from = self.start.months_until(window.first()) as usize;
        Ok(self.states[from..from + window.len()].to_vec())
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.states.iter().map(|&s| s as f64).collect()
    }

    /// Builds a state series directly; used for scenarios with a fixed regime path.
    pub fn from_states(start: MonthKey, states: Vec<u8>, tau: usize) -> Result<Self> {
        if states.is_empty() || states.iter().any(|&s| s > 1) {
            return Err(Error::Parameter("states must be a non-empty 0/1 vector".into()));
        }
        Ok(Self { start, states, tau })
    }
}

/// `S_t = 1` iff `tms_{t-i} <= 0` for some `i` in `1..=tau`.
///
/// Months with fewer than `tau` months of history look back over whatever
/// history exists; the first month of the series is therefore always an up
/// state. Missing values never signal an inversion.
pub fn state_indicator(tms: &MonthlySeries, tau: usize) -> Result<StateSeries> {
    if tau < 1 {
        return Err(Error::Parameter(format!("tau must be at least 1, got {tau}")));
    }
    if tms.len() < tau + 1 {
        return Err(Error::insufficient(
            format!("state indicator with tau = {tau}"),
            tau + 1,
            tms.len(),
        ));
    }
    let mut last_inversion: Option<usize> = None;
    let states = tms
        .values()
        .iter()
        .enumerate()
        .map(|(t, &v)| {
            let s = match last_inversion {
                Some(j) if t - j <= tau => 1,
                _ => 0,
            };
            if v <= 0.0 {
                last_inversion = Some(t);
            }
            s
        })
        .collect();
    Ok(StateSeries {
        start: tms.start(),
        states,
        tau,
    })
}

/// NBER-style recession flags over an evaluation window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecessionMask {
    start: MonthKey,
    flags: Vec<bool>,
}

impl RecessionMask {
    pub fn new(start: MonthKey, flags: Vec<bool>) -> Self {
        Self { start, flags }
    }

    /// Every month of `window` flagged as an expansion.
    pub fn all_expansion(window: &SampleWindow) -> Self {
        Self::new(window.first(), vec![false; window.len()])
    }

    pub fn start(&self) -> MonthKey {
        self.start
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn span(&self) -> SampleWindow {
        SampleWindow::new(self.start, self.start.add_months(self.flags.len() as i64 - 1))
            .expect("non-empty")
    }

    pub fn get(&self, month: MonthKey) -> Option<bool> {
        let offset = self.start.months_until(month);
        (offset >= 0)
            .then(|| self.flags.get(offset as usize).copied())
            .flatten()
    }

    /// Flags over a sub-window.
    pub fn window(&self, window: &SampleWindow) -> Result<Vec<bool>> {
        window
            .months()
            .map(|m| {
                self.get(m).ok_or(Error::Coverage {
                    series: "recession mask".into(),
                    first: window.first(),
                    last: window.last(),
                })
            })
            .collect()
    }

    pub fn share(&self) -> f64 {
        self.flags.iter().filter(|&&f| f).count() as f64 / self.flags.len() as f64
    }
}

pub const RECESSION_COLUMN: &str = "recession";

/// Reads a `yyyymm,recession` file and restricts it to `window`.
pub fn load_recession_mask(path: &Path, window: &SampleWindow) -> Result<RecessionMask> {
    let table = read_monthly_table(path, DEFAULT_PERIOD_COLUMN, &[RECESSION_COLUMN], "NaN")?;
    let flags = &table.columns[RECESSION_COLUMN];
    let mut out = Vec::with_capacity(window.len());
    for month in window.months() {
        let offset = table.start.months_until(month);
        let value = (offset >= 0)
            .then(|| flags.get(offset as usize).copied())
            .flatten()
            .filter(|v| !v.is_nan())
            .ok_or(Error::Coverage {
                series: RECESSION_COLUMN.into(),
                first: window.first(),
                last: window.last(),
            })?;
        out.push(match value {
            v if v == 0.0 => false,
            v if v == 1.0 => true,
            v => {
                return Err(Error::Parse {
                    row: offset as usize + 1,
                    column: RECESSION_COLUMN.into(),
                    value: v.to_string(),
                })
            }
        });
    }
    Ok(RecessionMask::new(window.first(), out))
}
