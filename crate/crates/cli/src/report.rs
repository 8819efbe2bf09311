//! Text and CSV rendering of the coefficient and conditional-performance tables.

use std::fmt::Write as _;

use aei_core::backtest::{significance_stars, two_sided_p, ModelForm, Subset};

use crate::bundle::{ModelResult, Results};
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    /// Coefficients, t-statistics, adjusted and out-of-sample R².
    Combination,
    /// Adjusted and out-of-sample R² within expansions, recessions, up and down states.
    States,
}

impl TableKind {
    pub const ALL: [TableKind; 2] = [TableKind::Combination, TableKind::States];

    pub fn label(self) -> &'static str {
        match self {
            TableKind::Combination => "combination",
            TableKind::States => "states",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.label() == s)
    }

    pub fn text_file(self) -> String {
        format!("table_{}.txt", self.label())
    }

    pub fn csv_file(self, form: ModelForm) -> String {
        format!("table_{}_{}.csv", self.label(), form.label())
    }

    /// Column headers of one panel, after the predictor column.
    pub fn headers(self, form: ModelForm) -> &'static [&'static str] {
        match (self, form) {
            (TableKind::Combination, ModelForm::OneState) => &["β1", "t-stat", "R̄²", "R²oos"],
            (TableKind::Combination, ModelForm::Switching) => {
                &["δ0", "t-stat", "β1", "t-stat", "γ1", "t-stat", "R̄²", "R²oos"]
            }
            (TableKind::States, _) => &[
                "R̄²exp", "R̄²rec", "R²oos,exp", "R²oos,rec", "R̄²up", "R̄²down", "R²oos,up", "R²oos,down",
            ],
        }
    }

    fn csv_headers(self, form: ModelForm) -> &'static [&'static str] {
        match (self, form) {
            (TableKind::Combination, ModelForm::OneState) => {
                &["beta1", "beta1_t", "r2_adj", "r2_oos", "r2_oos_cw_p"]
            }
            (TableKind::Combination, ModelForm::Switching) => &[
                "delta0", "delta0_t", "beta1", "beta1_t", "gamma1", "gamma1_t", "r2_adj", "r2_oos", "r2_oos_cw_p",
            ],
            (TableKind::States, _) => &[
                "r2_adj_exp", "r2_adj_rec", "r2_oos_exp", "r2_oos_rec", "r2_adj_up", "r2_adj_down", "r2_oos_up",
                "r2_oos_down", "cw_p_exp", "cw_p_rec", "cw_p_up", "cw_p_down",
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub text: String,
    /// `(file name, contents)` per panel.
    pub csv: Vec<(String, String)>,
}

/// Display cell: value with two decimals and optional stars.
fn cell(v: Option<f64>, stars: &str) -> String {
    match v {
        Some(v) => format!("{v:.2}{stars}"),
        None => "NA".into(),
    }
}

fn csv_value(v: Option<f64>) -> String {
    v.map_or("NA".into(), |v| format!("{v}"))
}

fn coefficient_stars(t: Option<f64>) -> &'static str {
    t.map_or("", |t| significance_stars(two_sided_p(t)))
}

fn oos_cell(m: &ModelResult, subset: Subset) -> (Option<f64>, &'static str, Option<f64>) {
    match m.oos(subset) {
        Some(e) => (e.r2_oos_pct, e.cw_p.map_or("", significance_stars), e.cw_p),
        None => (None, "", None),
    }
}

/// `(display cells, csv cells)` of one row.
fn row(kind: TableKind, m: &ModelResult) -> (Vec<String>, Vec<String>) {
    let c = &m.coefficients;
    let t = &m.t_stats;
    match (kind, m.form) {
        (TableKind::Combination, form) => {
            let (oos, oos_stars, cw_p) = oos_cell(m, Subset::Full);
            let r2 = m.r2_adj(Subset::Full);
            let coefs: Vec<(Option<f64>, Option<f64>)> = match form {
                ModelForm::OneState => vec![(c.b1, t.b1)],
                ModelForm::Switching => vec![(c.d0, t.d0), (c.b1, t.b1), (c.g1, t.g1)],
            };
            let mut display = Vec::new();
            let mut csv = Vec::new();
            for (v, tv) in coefs {
                display.push(cell(v, coefficient_stars(tv)));
                display.push(cell(tv, ""));
                csv.push(csv_value(v));
                csv.push(csv_value(tv));
            }
            display.push(cell(r2, ""));
            display.push(cell(oos, oos_stars));
            csv.extend([csv_value(r2), csv_value(oos), csv_value(cw_p)]);
            (display, csv)
        }
        (TableKind::States, _) => {
            let mut display = Vec::new();
            let mut csv = Vec::new();
            let mut pvalues = Vec::new();
            for pair in [[Subset::Expansion, Subset::Recession], [Subset::Up, Subset::Down]] {
                for s in pair {
                    let v = m.r2_adj(s);
                    display.push(cell(v, ""));
                    csv.push(csv_value(v));
                }
                for s in pair {
                    let (v, stars, p) = oos_cell(m, s);
                    display.push(cell(v, stars));
                    csv.push(csv_value(v));
                    pvalues.push(csv_value(p));
                }
            }
            csv.extend(pvalues);
            (display, csv)
        }
    }
}

fn panel_title(kind: TableKind, form: ModelForm) -> &'static str {
    match (kind, form) {
        (_, ModelForm::OneState) => "Panel A: One-state model",
        (_, ModelForm::Switching) => "Panel B: State-switching model",
    }
}

/// Renders both panels; errors when the bundle holds no models.
pub fn render(results: &Results, kind: TableKind) -> CliResult<Rendered> {
    let predictors = results.predictors();
    if predictors.is_empty() {
        return Err(CliError::EmptyTable(format!("no models to show in the {} table", kind.label())));
    }
    let width = predictors.iter().map(|p| p.chars().count()).max().unwrap_or(0).max(9) + 2;
    let mut text = String::new();
    let title = match kind {
        TableKind::Combination => "Forecasting the market excess return with predictor-combination methods",
        TableKind::States => "Forecasting the market excess return across different states",
    };
    let _ = writeln!(text, "{title}");
    let _ = writeln!(
        text,
        "Sample {}; evaluation {}; tau = {}. R² in percent; *** 1%, ** 5%, * 10%.",
        results.sample, results.evaluation, results.tau
    );
    let mut csv = Vec::new();
    for form in [ModelForm::OneState, ModelForm::Switching] {
        let headers = kind.headers(form);
        let _ = writeln!(text, "\n{}", panel_title(kind, form));
        let mut line = format!("{:<width$}", "Predictor");
        for h in headers {
            let _ = write!(line, "{h:>12}");
        }
        let _ = writeln!(text, "{}", line.trim_end());
        let mut body = format!("predictor,{}\n", kind.csv_headers(form).join(","));
        for p in &predictors {
            let Some(m) = results.model(p, form) else {
                continue;
            };
            let (display, values) = row(kind, m);
            let mut line = format!("{p:<width$}");
            for d in display {
                let _ = write!(line, "{d:>12}");
            }
            let _ = writeln!(text, "{}", line.trim_end());
            if m.fitted_form != m.form {
                let _ = writeln!(text, "{:<width$}(one-state fallback in-sample)", "");
            }
            let _ = writeln!(body, "{p},{}", values.join(","));
        }
        csv.push((kind.csv_file(form), body));
    }
    Ok(Rendered { text, csv })
}
