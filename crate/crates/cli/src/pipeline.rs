//! `run`: ingest, states, factors, backtests, evaluation and bundle output.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::PathBuf;

use aei_core::backtest::{evaluate, BacktestData, ForecastTable, ModelForm, ModelSpec, PredictorSource};
use aei_core::factors::{
    build_fc_predictor_from, build_pca_factor_from, build_pls_index_with_loadings, pls_weight_path,
    FactorInput, FactorKind,
};
use aei_core::ingest::{add_excess_return, load_panel, write_columns, DEFAULT_MISSING_MARKER};
use aei_core::series::EXRET;
use aei_core::{
    load_recession_mask, state_indicator, EvalReport, MonthlySeries, PredictorPanel, RecessionMask,
    ResultExt, StateSeries,
};

use crate::bundle::{
    forecast_file, sha256_file, write_file, write_json, Manifest, ModelResult, Results, FACTORS_FILE,
    MANIFEST_FILE, RESULTS_FILE, WEIGHTS_FILE,
};
use crate::config::ResolvedConfig;
use crate::error::{CliError, CliResult};
use crate::reference::ReferenceTable;
use crate::{plotdata, report};

/// Everything read from disk, aligned and validated.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub panel: PredictorPanel,
    pub exret: MonthlySeries,
    pub states: StateSeries,
    pub recession: Option<RecessionMask>,
    pub data: BacktestData,
}

pub fn load_inputs(cfg: &ResolvedConfig) -> CliResult<Inputs> {
    let raw = &cfg.raw;
    let mut panel = load_panel(&cfg.data, &raw.schema()).context("ingest")?;
    add_excess_return(&mut panel, raw.return_units.scale()).context("ingest")?;
    let exret = panel.require(EXRET)?.clone();
    let driver = panel.require(&raw.state_driver).context("state indicator")?;
    let states = state_indicator(driver, cfg.tau).context("state indicator")?;
    let recession = cfg
        .recession
        .as_deref()
        .map(|p| load_recession_mask(p, &cfg.sample))
        .transpose()
        .context("recession mask")?;
    let data = BacktestData::new(
        &panel,
        &raw.predictors,
        &exret,
        &states,
        recession.as_ref(),
        &cfg.sample,
        cfg.factor_opts,
    )
    .context("alignment")?;
    Ok(Inputs {
        panel,
        exret,
        states,
        recession,
        data,
    })
}

/// One-state and switching specs for every configured model.
pub fn specs(cfg: &ResolvedConfig) -> Vec<ModelSpec> {
    cfg.raw
        .models
        .iter()
        .flat_map(|m| {
            [ModelForm::OneState, ModelForm::Switching].map(|form| ModelSpec {
                predictor: PredictorSource::parse(m),
                form,
                tau: cfg.tau,
                nw_lags: cfg.nw_lags,
                initial_window: cfg.initial,
            })
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub results: Results,
    pub reports: Vec<EvalReport>,
    pub tables: Vec<ForecastTable>,
    pub manifest: Manifest,
}

fn bool_value(b: Option<bool>) -> f64 {
    b.map_or(f64::NAN, |b| f64::from(u8::from(b)))
}

fn forecast_csv(table: &ForecastTable) -> Vec<u8> {
    let rows = &table.rows;
    let col = |f: &dyn Fn(&aei_core::ForecastRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let columns = [
        ("forecast", col(&|r| r.forecast)),
        ("benchmark", col(&|r| r.benchmark)),
        ("realized", col(&|r| r.realized)),
        ("state", col(&|r| f64::from(r.state))),
        ("recession", col(&|r| bool_value(r.recession))),
        ("b0", col(&|r| r.coefficients.b0)),
        ("d0", col(&|r| r.coefficients.d0)),
        ("b1", col(&|r| r.coefficients.b1)),
        ("g1", col(&|r| r.coefficients.g1)),
        ("fallback", col(&|r| f64::from(u8::from(r.fallback)))),
    ];
    let refs: Vec<(&str, &[f64])> = columns.iter().map(|(n, v)| (*n, v.as_slice())).collect();
    let mut out = Vec::new();
    let start = rows.first().map_or(aei_core::MonthKey::from_yyyymm(190001).unwrap(), |r| r.target);
    write_columns(BufWriter::new(&mut out), start, &refs, DEFAULT_MISSING_MARKER).expect("in-memory write");
    out
}

fn columns_csv(start: aei_core::MonthKey, columns: &[(String, Vec<f64>)]) -> Vec<u8> {
    let refs: Vec<(&str, &[f64])> = columns.iter().map(|(n, v)| (n.as_str(), v.as_slice())).collect();
    let mut out = Vec::new();
    write_columns(BufWriter::new(&mut out), start, &refs, DEFAULT_MISSING_MARKER).expect("in-memory write");
    out
}

/// Factor series over the sample plus the PLS weight path over the evaluation window.
fn factor_outputs(cfg: &ResolvedConfig, inputs: &Inputs) -> CliResult<(Vec<u8>, Option<Vec<u8>>)> {
    let data = &inputs.data;
    let input: &FactorInput = &data.input;
    let opts = &data.factor_opts;
    let mut columns: Vec<(String, Vec<f64>)> = vec![
        (EXRET.to_string(), input.exret().to_vec()),
        ("state".into(), data.states.clone()),
        (
            "recession".into(),
            match &data.recession {
                Some(r) => r.iter().map(|&b| bool_value(Some(b))).collect(),
                None => vec![f64::NAN; input.len()],
            },
        ),
    ];
    let kinds: Vec<FactorKind> = cfg
        .raw
        .models
        .iter()
        .filter_map(|m| match PredictorSource::parse(m) {
            PredictorSource::Factor(k) => Some(k),
            PredictorSource::Variable(_) => None,
        })
        .collect();
    let mut weights = None;
    for kind in kinds {
        match kind {
            FactorKind::Pls => {
                let (full, _) = build_pls_index_with_loadings(input, false, opts).context("E_PLS index")?;
                let (rt, loadings) = build_pls_index_with_loadings(input, true, opts).context("E_PLS index")?;
                let from = cfg.initial.last();
                let oos: Vec<_> = loadings.into_iter().filter(|l| l.end >= from).collect();
                let path = pls_weight_path(&oos).context("E_PLS weights")?;
                let weight_columns: Vec<(String, Vec<f64>)> = path
                    .names
                    .iter()
                    .enumerate()
                    .map(|(j, n)| (n.clone(), path.weights.iter().map(|w| w[j]).collect()))
                    .collect();
                weights = Some(columns_csv(path.start, &weight_columns));
                columns.push(("E_PLS".into(), full.values.into_values()));
                columns.push(("E_PLS_recursive".into(), rt.values.into_values()));
            }
            FactorKind::Pca => {
                let full = build_pca_factor_from(input, false, opts).context("E_PCA index")?;
                columns.push(("E_PCA".into(), full.values.into_values()));
            }
            FactorKind::Fc => {
                let fc = build_fc_predictor_from(input, &cfg.initial, opts).context("E_FC index")?;
                columns.push(("E_FC".into(), fc.values.into_values()));
            }
        }
    }
    Ok((columns_csv(cfg.sample.first(), &columns), weights))
}

/// Runs the full pipeline and writes the bundle into `cfg.output_dir`.
pub fn run(cfg: &ResolvedConfig) -> CliResult<RunOutput> {
    let reference = cfg.reference.as_deref().map(ReferenceTable::load).transpose()?;
    let inputs = load_inputs(cfg)?;
    let specs = specs(cfg);
    let evaluated = evaluate(&specs, &inputs.data, cfg.raw.subset_r2)?;
    let (reports, tables): (Vec<EvalReport>, Vec<ForecastTable>) = evaluated.into_iter().unzip();

    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut written: Vec<String> = Vec::new();
    let mut put = |name: String, bytes: &[u8]| -> CliResult<()> {
        write_file(&dir, &name, bytes)?;
        written.push(name);
        Ok(())
    };

    for (report, table) in reports.iter().zip(&tables) {
        put(forecast_file(&report.spec.predictor.label(), report.spec.form), &forecast_csv(table))?;
    }
    let (factors, weights) = factor_outputs(cfg, &inputs)?;
    put(FACTORS_FILE.into(), &factors)?;
    if let Some(w) = weights {
        put(WEIGHTS_FILE.into(), &w)?;
    }

    let results = Results {
        sample: cfg.sample,
        evaluation: cfg.evaluation(),
        tau: cfg.tau,
        models: reports.iter().map(ModelResult::from_report).collect(),
    };
    let mut json = serde_json::to_string_pretty(&results).expect("serializable");
    json.push('\n');
    put(RESULTS_FILE.into(), json.as_bytes())?;
    for which in report::TableKind::ALL {
        let rendered = report::render(&results, which)?;
        put(which.text_file(), rendered.text.as_bytes())?;
        for (name, csv) in &rendered.csv {
            put(name.clone(), csv.as_bytes())?;
        }
    }
    for which in plotdata::PlotKind::ALL {
        match plotdata::build_from_dir(&dir, which, ModelForm::Switching) {
            Ok(plot) => put(which.file_name().into(), &plot.csv)?,
            Err(e) => log::warn!("plot data `{}` not produced: {e}", which.label()),
        }
    }

    let mut files = BTreeMap::new();
    for name in &written {
        files.insert(name.clone(), sha256_file(&dir.join(name))?);
    }
    let label = |r: &EvalReport| r.spec.label();
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: cfg.config_hash(),
        config: serde_json::to_value(&cfg.raw).expect("serializable"),
        data_sha256: sha256_file(&cfg.data)?,
        recession_sha256: cfg.recession.as_deref().map(sha256_file).transpose()?,
        nw_lags_oos: reports
            .iter()
            .map(|r| (label(r), r.spec.nw_lags.resolve(cfg.evaluation().len())))
            .collect(),
        nw_lags_in_sample: reports.iter().map(|r| (label(r), r.in_sample.nw_lags)).collect(),
        fallback_origins: reports.iter().map(|r| (label(r), r.fallback_origins)).collect(),
        notes: reports
            .iter()
            .flat_map(|r| r.notes.iter().map(move |n| format!("{}: {n}", label(r))))
            .collect(),
        reference_deviations: reference.map(|r| r.compare(&results)).unwrap_or_default(),
        files,
    };
    write_json(&dir, MANIFEST_FILE, &manifest)?;
    Ok(RunOutput {
        dir,
        results,
        reports,
        tables,
        manifest,
    })
}

