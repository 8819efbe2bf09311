//! On-disk report bundle: results, forecasts, factor series and a manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use aei_core::backtest::{EvalReport, ModelForm, Subset};
use aei_core::ingest::read_monthly_table;
use aei_core::SampleWindow;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const RESULTS_FILE: &str = "results.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FACTORS_FILE: &str = "factors.csv";
pub const WEIGHTS_FILE: &str = "pls_weights.csv";

pub fn forecast_file(label: &str, form: ModelForm) -> String {
    format!("forecasts_{label}_{}.csv", form.label())
}

/// `None` for values JSON cannot carry.
fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub b0: Option<f64>,
    pub d0: Option<f64>,
    pub b1: Option<f64>,
    pub g1: Option<f64>,
}

impl From<aei_core::Coefficients> for CoefficientRow {
    fn from(c: aei_core::Coefficients) -> Self {
        Self {
            b0: finite(c.b0),
            d0: finite(c.d0),
            b1: finite(c.b1),
            g1: finite(c.g1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OosEntry {
    pub subset: Subset,
    pub r2_oos_pct: Option<f64>,
    pub cw_t: Option<f64>,
    pub cw_p: Option<f64>,
    pub months: Option<usize>,
    pub exceeds_threshold: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InSampleEntry {
    pub subset: Subset,
    pub r2_adj_pct: Option<f64>,
}

/// One evaluated model, in reporting units (percent).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub predictor: String,
    pub form: ModelForm,
    /// Form actually fitted in-sample; differs from `form` after a fallback.
    pub fitted_form: ModelForm,
    pub observations: usize,
    pub nw_lags_in_sample: usize,
    pub coefficients: CoefficientRow,
    pub t_stats: CoefficientRow,
    pub in_sample: Vec<InSampleEntry>,
    pub oos: Vec<OosEntry>,
    pub fallback_origins: usize,
    pub notes: Vec<String>,
}

impl ModelResult {
    pub fn from_report(report: &EvalReport) -> Self {
        let is = &report.in_sample;
        let mut in_sample = vec![InSampleEntry {
            subset: Subset::Full,
            r2_adj_pct: finite(is.r2_adj * 100.0),
        }];
        for subset in Subset::CONDITIONAL {
            in_sample.push(InSampleEntry {
                subset,
                r2_adj_pct: report.subset_r2(subset).map(|v| v * 100.0).and_then(finite),
            });
        }
        let oos = report
            .oos
            .iter()
            .map(|(subset, m)| OosEntry {
                subset: *subset,
                r2_oos_pct: m.and_then(|m| finite(m.r2_oos * 100.0)),
                cw_t: m.and_then(|m| finite(m.clark_west.t_stat)),
                cw_p: m.map(|m| m.clark_west.p_value),
                months: m.map(|m| m.months),
                exceeds_threshold: m.map(|m| m.exceeds_threshold),
            })
            .collect();
        Self {
            predictor: report.spec.predictor.label(),
            form: report.spec.form,
            fitted_form: is.form,
            observations: is.n,
            nw_lags_in_sample: is.nw_lags,
            coefficients: is.coefficients.into(),
            t_stats: is.t_stats.into(),
            in_sample,
            oos,
            fallback_origins: report.fallback_origins,
            notes: report.notes.clone(),
        }
    }

    pub fn r2_adj(&self, subset: Subset) -> Option<f64> {
        self.in_sample.iter().find(|e| e.subset == subset).and_then(|e| e.r2_adj_pct)
    }

    pub fn oos(&self, subset: Subset) -> Option<&OosEntry> {
        self.oos.iter().find(|e| e.subset == subset)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub sample: SampleWindow,
    pub evaluation: SampleWindow,
    pub tau: usize,
    pub models: Vec<ModelResult>,
}

impl Results {
    pub fn model(&self, predictor: &str, form: ModelForm) -> Option<&ModelResult> {
        self.models.iter().find(|m| m.predictor == predictor && m.form == form)
    }

    /// Predictor labels in first-seen order.
    pub fn predictors(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for m in &self.models {
            if !out.contains(&m.predictor) {
                out.push(m.predictor.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config_sha256: String,
    /// Canonical config, enough to re-run.
    pub config: serde_json::Value,
    pub data_sha256: String,
    pub recession_sha256: Option<String>,
    /// Out-of-sample Newey-West lags per model label.
    pub nw_lags_oos: BTreeMap<String, usize>,
    pub nw_lags_in_sample: BTreeMap<String, usize>,
    pub fallback_origins: BTreeMap<String, usize>,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reference_deviations: Vec<crate::reference::Deviation>,
    /// SHA-256 of every other file in the bundle.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn write_file(dir: &Path, name: &str, contents: &[u8]) -> CliResult<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_file(dir, name, text.as_bytes())
}

/// A bundle directory opened for reading.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl Bundle {
    /// Opens `dir` and checks every file listed in the manifest against its hash.
    pub fn open(dir: &Path) -> CliResult<Self> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&manifest_path)
            .map_err(|e| CliError::bundle(dir, format!("cannot read {MANIFEST_FILE}: {e}")))?;
        let manifest: Manifest = serde_json::from_str(&text)
            .map_err(|e| CliError::bundle(dir, format!("malformed {MANIFEST_FILE}: {e}")))?;
        for (name, want) in &manifest.files {
            let path = dir.join(name);
            if !path.exists() {
                return Err(CliError::bundle(dir, format!("missing member `{name}`")));
            }
            if &sha256_file(&path)? != want {
                return Err(CliError::bundle(dir, format!("member `{name}` does not match its hash")));
            }
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
        })
    }

    pub fn path(&self, name: &str) -> CliResult<PathBuf> {
        if !self.manifest.files.contains_key(name) {
            return Err(CliError::bundle(&self.dir, format!("missing member `{name}`")));
        }
        Ok(self.dir.join(name))
    }

    pub fn results(&self) -> CliResult<Results> {
        let path = self.path(RESULTS_FILE)?;
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::bundle(&self.dir, format!("malformed {RESULTS_FILE}: {e}")))
    }

    /// Reads `columns` of a bundle CSV, failing with an integrity error when absent.
    pub fn table(&self, name: &str, columns: &[&str]) -> CliResult<aei_core::ingest::MonthlyTable> {
        let path = self.path(name)?;
        read_monthly_table(&path, aei_core::ingest::DEFAULT_PERIOD_COLUMN, columns, aei_core::ingest::DEFAULT_MISSING_MARKER)
            .map_err(|e| match e {
                aei_core::Error::Schema { column } => {
                    CliError::bundle(&self.dir, format!("`{name}` has no column `{column}`"))
                }
                e => e.into(),
            })
    }
}
