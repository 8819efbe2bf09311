//! Plot-ready CSV files derived from a bundle.

use std::io::BufWriter;
use std::path::Path;

use aei_core::backtest::ModelForm;
use aei_core::ingest::{read_monthly_table, write_columns, MonthlyTable, DEFAULT_MISSING_MARKER, DEFAULT_PERIOD_COLUMN};
use aei_core::series::{mean_sd, EXRET};
use serde::Serialize;

use crate::bundle::{forecast_file, FACTORS_FILE, WEIGHTS_FILE};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// The PLS index against the standardized excess return.
    IndexVsPremium,
    /// PLS and combination forecasts against realized returns.
    Forecasts,
    /// PLS loadings over time beside the equal combination weights.
    Weights,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] = [PlotKind::IndexVsPremium, PlotKind::Forecasts, PlotKind::Weights];

    pub fn label(self) -> &'static str {
        match self {
            PlotKind::IndexVsPremium => "index_vs_premium",
            PlotKind::Forecasts => "forecasts",
            PlotKind::Weights => "weights",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label() == s)
    }

    pub fn file_name(self) -> &'static str {
        match self {
            PlotKind::IndexVsPremium => "plot_index_vs_premium.csv",
            PlotKind::Forecasts => "plot_forecasts.csv",
            PlotKind::Weights => "plot_weights.csv",
        }
    }
}

/// Co-movement of the PLS and combination forecasts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ForecastSummary {
    pub months: usize,
    pub correlation: f64,
    pub variance_pls: f64,
    pub variance_fc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotData {
    pub csv: Vec<u8>,
    pub summary: Option<ForecastSummary>,
}

fn read(dir: &Path, name: &str, columns: &[&str]) -> CliResult<MonthlyTable> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(CliError::bundle(dir, format!("missing member `{name}`")));
    }
    read_monthly_table(&path, DEFAULT_PERIOD_COLUMN, columns, DEFAULT_MISSING_MARKER).map_err(|e| match e {
        aei_core::Error::Schema { column } => CliError::bundle(dir, format!("`{name}` has no column `{column}`")),
        e => e.into(),
    })
}

fn render(table_start: aei_core::MonthKey, columns: &[(&str, &[f64])]) -> Vec<u8> {
    let mut out = Vec::new();
    write_columns(BufWriter::new(&mut out), table_start, columns, DEFAULT_MISSING_MARKER).expect("in-memory write");
    out
}

pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let (am, asd) = mean_sd(a);
    let (bm, bsd) = mean_sd(b);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - am) * (y - bm)).sum::<f64>() / (a.len() as f64 - 1.0);
    cov / (asd * bsd)
}

/// Builds plot data from the files in `dir` (forecasts use the given model form).
pub fn build_from_dir(dir: &Path, kind: PlotKind, form: ModelForm) -> CliResult<PlotData> {
    match kind {
        PlotKind::IndexVsPremium => {
            let t = read(dir, FACTORS_FILE, &["E_PLS", EXRET, "recession"])?;
            let exret = &t.columns[EXRET];
            let (m, sd) = mean_sd(exret);
            let normalized: Vec<f64> = exret.iter().map(|r| (r - m) / sd).collect();
            Ok(PlotData {
                csv: render(
                    t.start,
                    &[
                        ("E_pls", &t.columns["E_PLS"]),
                        ("exret_normalized", &normalized),
                        ("recession", &t.columns["recession"]),
                    ],
                ),
                summary: None,
            })
        }
        PlotKind::Forecasts => {
            let pls = read(dir, &forecast_file("E_PLS", form), &["forecast", "realized", "recession"])?;
            let fc = read(dir, &forecast_file("E_FC", form), &["forecast"])?;
            if pls.start != fc.start || pls.months != fc.months {
                return Err(CliError::bundle(dir, "PLS and combination forecasts cover different months"));
            }
            let f_pls = &pls.columns["forecast"];
            let f_fc = &fc.columns["forecast"];
            let summary = ForecastSummary {
                months: pls.months,
                correlation: correlation(f_pls, f_fc),
                variance_pls: mean_sd(f_pls).1.powi(2),
                variance_fc: mean_sd(f_fc).1.powi(2),
            };
            Ok(PlotData {
                csv: render(
                    pls.start,
                    &[
                        ("f_pls", f_pls),
                        ("f_fc", f_fc),
                        ("realized", &pls.columns["realized"]),
                        ("recession", &pls.columns["recession"]),
                    ],
                ),
                summary: Some(summary),
            })
        }
        PlotKind::Weights => {
            let path = dir.join(WEIGHTS_FILE);
            let header = std::fs::read_to_string(&path)
                .map_err(|_| CliError::bundle(dir, format!("missing member `{WEIGHTS_FILE}`")))?;
            let names: Vec<String> = header
                .lines()
                .next()
                .unwrap_or_default()
                .split(',')
                .skip(1)
                .map(str::to_string)
                .collect();
            if names.is_empty() {
                return Err(CliError::bundle(dir, format!("`{WEIGHTS_FILE}` has no weight columns")));
            }
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            let t = read(dir, WEIGHTS_FILE, &refs)?;
            let fc = vec![1.0 / names.len() as f64; t.months];
            let mut columns: Vec<(&str, &[f64])> = names.iter().map(|n| (n.as_str(), t.columns[n].as_slice())).collect();
            columns.push(("fc", &fc));
            Ok(PlotData {
                csv: render(t.start, &columns),
                summary: None,
            })
        }
    }
}
