//! Comparison of a run against a user-supplied table of reference values.
//!
//! ```toml
//! tolerance = 1.0          # percentage points
//!
//! [[value]]
//! model = "E_PLS"
//! form = "switching"
//! metric = "r2_oos"        # r2_adj, r2_oos, r2_adj_<subset>, r2_oos_<subset>
//! value = 4.12
//! ```

use std::path::Path;

use aei_core::backtest::{ModelForm, Subset};
use serde::{Deserialize, Serialize};

use crate::bundle::Results;
use crate::error::{CliError, CliResult};

fn default_tolerance() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceValue {
    pub model: String,
    pub form: ModelForm,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceTable {
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default, rename = "value")]
    pub values: Vec<ReferenceValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deviation {
    pub model: String,
    pub form: ModelForm,
    pub metric: String,
    pub reference: f64,
    pub computed: Option<f64>,
    /// `computed - reference`, in percentage points.
    pub deviation: Option<f64>,
    pub within_tolerance: bool,
}

fn parse_metric(metric: &str) -> Option<(bool, Subset)> {
    let (oos, rest) = if let Some(rest) = metric.strip_prefix("r2_oos") {
        (true, rest)
    } else {
        (false, metric.strip_prefix("r2_adj")?)
    };
    let subset = match rest {
        "" => Subset::Full,
        "_expansion" => Subset::Expansion,
        "_recession" => Subset::Recession,
        "_up" => Subset::Up,
        "_down" => Subset::Down,
        _ => return None,
    };
    Some((oos, subset))
}

impl ReferenceTable {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let table: Self = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(v) = table.values.iter().find(|v| parse_metric(&v.metric).is_none()) {
            return Err(CliError::Config(format!("unknown reference metric `{}`", v.metric)));
        }
        Ok(table)
    }

    pub fn compare(&self, results: &Results) -> Vec<Deviation> {
        self.values
            .iter()
            .map(|v| {
                let (oos, subset) = parse_metric(&v.metric).expect("validated on load");
                let computed = results.model(&v.model, v.form).and_then(|m| {
                    if oos {
                        m.oos(subset).and_then(|e| e.r2_oos_pct)
                    } else {
                        m.r2_adj(subset)
                    }
                });
                let deviation = computed.map(|c| c - v.value);
                Deviation {
                    model: v.model.clone(),
                    form: v.form,
                    metric: v.metric.clone(),
                    reference: v.value,
                    computed,
                    deviation,
                    within_tolerance: deviation.is_some_and(|d| d.abs() <= self.tolerance),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metric_names() {
        assert_eq!(parse_metric("r2_oos"), Some((true, Subset::Full)));
        assert_eq!(parse_metric("r2_adj_recession"), Some((false, Subset::Recession)));
        assert_eq!(parse_metric("r2_oos_down"), Some((true, Subset::Down)));
        assert_eq!(parse_metric("r2_oos_sideways"), None);
        assert_eq!(parse_metric("beta1"), None);
    }

    #[test]
    fn parses_table() {
        let t: ReferenceTable = toml::from_str(
            "tolerance = 0.5\n[[value]]\nmodel = \"E_PLS\"\nform = \"one_state\"\nmetric = \"r2_oos\"\nvalue = 2.6\n",
        )
        .unwrap();
        assert_eq!(t.values.len(), 1);
        assert_eq!(t.values[0].form, ModelForm::OneState);
    }
}
