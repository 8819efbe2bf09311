//! Run configuration, read from TOML.
//!
//! ```toml
//! data = "data/synthetic.csv"
//! recession = "data/synthetic_recessions.csv"
//! output_dir = "out/synthetic"
//! tau = 9
//! nw_lags = "auto"        # or an integer
//! models = ["E_PLS", "E_PCA", "E_FC"]
//!
//! [columns]
//! DP = "log(D12) - log(Index)"
//! ```
//!
//! Relative paths are resolved against the directory holding the config file.

use std::path::{Path, PathBuf};

use aei_core::backtest::SubsetR2Method;
use aei_core::factors::{FactorOptions, MIN_FACTOR_HISTORY, MIN_FC_INITIAL_WINDOW};
use aei_core::ingest::{ColumnSchema, DEFAULT_MISSING_MARKER, DEFAULT_PERIOD_COLUMN};
use aei_core::regimes::DEFAULT_TAU;
use aei_core::series::{PREDICTOR_NAMES, ERM, RET, RFREE, TMS};
use aei_core::{MonthKey, NwLags, SampleWindow};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const OUTPUT_DIR_ENV: &str = "AEI_OUTPUT_DIR";
pub const MAX_TAU: i64 = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReturnUnits {
    /// Input returns are decimals; reported in percent.
    #[default]
    Percent,
    Decimal,
}

impl ReturnUnits {
    pub fn scale(self) -> f64 {
        match self {
            ReturnUnits::Percent => 100.0,
            ReturnUnits::Decimal => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LagSetting {
    Fixed(i64),
    Policy(String),
}

impl Default for LagSetting {
    fn default() -> Self {
        LagSetting::Policy("auto".into())
    }
}

impl LagSetting {
    pub fn resolve(&self) -> CliResult<NwLags> {
        match self {
            LagSetting::Fixed(l) if *l >= 0 => Ok(NwLags::Fixed(*l as usize)),
            LagSetting::Fixed(l) => Err(CliError::Config(format!("nw_lags must be non-negative, got {l}"))),
            LagSetting::Policy(p) if p.eq_ignore_ascii_case("auto") => Ok(NwLags::Auto),
            LagSetting::Policy(p) => Err(CliError::Config(format!("nw_lags must be \"auto\" or an integer, got {p:?}"))),
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_sample_start() -> u32 {
    196001
}
fn default_sample_end() -> u32 {
    201712
}
fn default_initial_end() -> u32 {
    197912
}
fn default_tau() -> i64 {
    DEFAULT_TAU as i64
}
fn default_predictors() -> Vec<String> {
    PREDICTOR_NAMES.iter().map(|s| s.to_string()).collect()
}
fn default_models() -> Vec<String> {
    ["E_PLS", "E_PCA", "E_FC"].map(String::from).to_vec()
}
fn default_marker() -> String {
    DEFAULT_MISSING_MARKER.into()
}
fn default_period_column() -> String {
    DEFAULT_PERIOD_COLUMN.into()
}
fn default_true() -> bool {
    true
}
fn default_min_history() -> usize {
    MIN_FACTOR_HISTORY
}
fn default_fc_min_initial() -> usize {
    MIN_FC_INITIAL_WINDOW
}
fn default_state_driver() -> String {
    TMS.into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: PathBuf,
    #[serde(default)]
    pub recession: Option<PathBuf>,
    /// Optional table of reference values; deviations go into the manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<PathBuf>,
    /// Not part of the config hash.
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
    #[serde(default = "default_sample_start")]
    pub sample_start: u32,
    #[serde(default = "default_sample_end")]
    pub sample_end: u32,
    #[serde(default = "default_initial_end")]
    pub initial_end: u32,
    #[serde(default = "default_tau")]
    pub tau: i64,
    #[serde(default)]
    pub nw_lags: LagSetting,
    #[serde(default = "default_predictors")]
    pub predictors: Vec<String>,
    /// Regressors to evaluate: `E_PLS`, `E_PCA`, `E_FC` or any predictor name.
    #[serde(default = "default_models")]
    pub models: Vec<String>,
    #[serde(default = "default_marker")]
    pub missing_marker: String,
    #[serde(default = "default_period_column")]
    pub period_column: String,
    #[serde(default)]
    pub return_units: ReturnUnits,
    #[serde(default)]
    pub subset_r2: SubsetR2Method,
    #[serde(default = "default_true")]
    pub pls_intercept: bool,
    #[serde(default = "default_min_history")]
    pub min_factor_history: usize,
    #[serde(default = "default_fc_min_initial")]
    pub fc_min_initial: usize,
    #[serde(default = "default_state_driver")]
    pub state_driver: String,
    /// Canonical name → column expression; unmapped names are read as-is.
    #[serde(default)]
    pub columns: IndexMap<String, String>,
}

/// A validated config with paths resolved.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub raw: RunConfig,
    pub data: PathBuf,
    pub recession: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub sample: SampleWindow,
    pub initial: SampleWindow,
    pub tau: usize,
    pub nw_lags: NwLags,
    pub factor_opts: FactorOptions,
}

impl ResolvedConfig {
    pub fn evaluation(&self) -> SampleWindow {
        SampleWindow::new(self.initial.last().succ(), self.sample.last()).expect("validated")
    }

    pub fn config_hash(&self) -> String {
        self.raw.hash()
    }
}

fn month(code: u32, key: &str) -> CliResult<MonthKey> {
    MonthKey::from_yyyymm(code as i64).map_err(|e| CliError::Config(format!("{key}: {e}")))
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// SHA-256 of the canonical JSON form of every semantic field.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    /// Checks every knob before any data is touched.
    pub fn validate(&self, base: &Path, output_override: Option<PathBuf>) -> CliResult<ResolvedConfig> {
        if !(1..=MAX_TAU).contains(&self.tau) {
            return Err(CliError::Config(format!("tau must lie in 1..={MAX_TAU}, got {}", self.tau)));
        }
        let sample = SampleWindow::new(
            month(self.sample_start, "sample_start")?,
            month(self.sample_end, "sample_end")?,
        )
        .map_err(|e| CliError::Config(format!("sample window: {e}")))?;
        let initial_end = month(self.initial_end, "initial_end")?;
        if !sample.contains(initial_end) || initial_end == sample.last() {
            return Err(CliError::Config(format!(
                "initial_end {initial_end} must lie inside the sample {sample} and before its last month"
            )));
        }
        let initial = SampleWindow::new(sample.first(), initial_end).expect("ordered");
        if self.predictors.is_empty() {
            return Err(CliError::Config("predictor list is empty".into()));
        }
        if self.models.is_empty() {
            return Err(CliError::Config("model list is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for p in &self.predictors {
            if !seen.insert(p) {
                return Err(CliError::Config(format!("predictor `{p}` listed twice")));
            }
        }
        for m in &self.models {
            let source = aei_core::PredictorSource::parse(m);
            if let aei_core::PredictorSource::Variable(name) = &source {
                if !self.predictors.contains(name) {
                    return Err(CliError::Config(format!("model `{m}` is not a factor and not a listed predictor")));
                }
            }
        }
        if self.min_factor_history < 3 {
            return Err(CliError::Config("min_factor_history must be at least 3".into()));
        }
        let nw_lags = self.nw_lags.resolve()?;
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let output_dir = output_override.unwrap_or_else(|| resolve(&self.output_dir));
        Ok(ResolvedConfig {
            raw: self.clone(),
            data: resolve(&self.data),
            recession: self.recession.as_deref().map(resolve),
            reference: self.reference.as_deref().map(resolve),
            output_dir,
            sample,
            initial,
            tau: self.tau as usize,
            nw_lags,
            factor_opts: FactorOptions {
                min_history: self.min_factor_history,
                pls_intercept: self.pls_intercept,
                fc_min_initial: self.fc_min_initial,
            },
        })
    }

    /// Columns to read: the predictors, the return inputs and the state driver.
    ///
    /// `ERM` is always derived from the excess return and never read.
    pub fn schema(&self) -> ColumnSchema {
        let mut schema = ColumnSchema {
            period_column: self.period_column.clone(),
            missing_marker: self.missing_marker.clone(),
            columns: IndexMap::new(),
        };
        let wanted = self
            .predictors
            .iter()
            .map(String::as_str)
            .chain([RET, RFREE, self.state_driver.as_str()])
            .filter(|n| *n != ERM);
        for name in wanted {
            if schema.columns.contains_key(name) {
                continue;
            }
            let expr = self.columns.get(name).cloned().unwrap_or_else(|| name.to_string());
            schema.columns.insert(name.to_string(), expr);
        }
        schema
    }
}

/// Reads, parses and validates `path`; `AEI_OUTPUT_DIR` overrides the output directory.
pub fn load_config(path: &Path) -> CliResult<ResolvedConfig> {
    let cfg = RunConfig::load(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let output_override = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    cfg.validate(&base, output_override)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> RunConfig {
        RunConfig::parse(text).unwrap()
    }

    #[test]
    fn defaults() {
        let cfg = parse("data = \"x.csv\"");
        let r = cfg.validate(Path::new("/base"), None).unwrap();
        assert_eq!(r.tau, 9);
        assert_eq!(r.sample.len(), 696);
        assert_eq!(r.evaluation().len(), 456);
        assert_eq!(r.initial.len(), 240);
        assert_eq!(r.data, PathBuf::from("/base/x.csv"));
        assert_eq!(r.nw_lags, NwLags::Auto);
        assert_eq!(cfg.predictors.len(), 16);
    }

    #[test]
    fn tau_bounds() {
        for bad in ["0", "25", "-1"] {
            let cfg = parse(&format!("data = \"x.csv\"\ntau = {bad}"));
            assert!(matches!(cfg.validate(Path::new("."), None), Err(CliError::Config(_))));
        }
        assert!(parse("data = \"x\"\ntau = 24").validate(Path::new("."), None).is_ok());
    }

    #[test]
    fn missing_data_path_is_an_error() {
        assert!(matches!(RunConfig::parse("tau = 9"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::parse("data = \"x\"\nbogus = 1"), Err(CliError::Config(_))));
    }

    #[test]
    fn window_nesting() {
        let cfg = parse("data = \"x\"\ninitial_end = 201712");
        assert!(cfg.validate(Path::new("."), None).is_err());
        let cfg = parse("data = \"x\"\ninitial_end = 195912");
        assert!(cfg.validate(Path::new("."), None).is_err());
        let cfg = parse("data = \"x\"\nsample_end = 195001");
        assert!(cfg.validate(Path::new("."), None).is_err());
    }

    #[test]
    fn lag_settings() {
        assert_eq!(parse("data = \"x\"\nnw_lags = 6").validate(Path::new("."), None).unwrap().nw_lags, NwLags::Fixed(6));
        assert!(parse("data = \"x\"\nnw_lags = \"bartlett\"").validate(Path::new("."), None).is_err());
        assert!(parse("data = \"x\"\nnw_lags = -2").validate(Path::new("."), None).is_err());
    }

    #[test]
    fn hash_tracks_semantic_fields_only() {
        let a = parse("data = \"x.csv\"");
        let b = parse("# comment\ndata = \"x.csv\"\ntau = 9\noutput_dir = \"elsewhere\"\n");
        assert_eq!(a.hash(), b.hash());
        let c = parse("data = \"x.csv\"\ntau = 10");
        assert_ne!(a.hash(), c.hash());
        let d = parse("data = \"x.csv\"\n[columns]\nDP = \"log(D12) - log(Index)\"");
        assert_ne!(a.hash(), d.hash());
    }

    #[test]
    fn empty_lists_rejected() {
        assert!(parse("data = \"x\"\npredictors = []").validate(Path::new("."), None).is_err());
        assert!(parse("data = \"x\"\nmodels = []").validate(Path::new("."), None).is_err());
        assert!(parse("data = \"x\"\nmodels = [\"XYZ\"]").validate(Path::new("."), None).is_err());
    }

    #[test]
    fn schema_derives_erm() {
        let cfg = parse("data = \"x\"\n[columns]\nDP = \"log(D12) - log(Index)\"\nERM = \"foo\"");
        let s = cfg.schema();
        assert!(!s.columns.contains_key(ERM));
        assert_eq!(s.columns["DP"], "log(D12) - log(Index)");
        assert_eq!(s.columns[TMS], TMS);
        assert!(s.columns.contains_key(RET) && s.columns.contains_key(RFREE));
    }
}
