//! Acceptance suite. Prints one PASS/FAIL/SKIPPED line per criterion, with the
//! individual checks indented below it. The verdicts are a report: the process
//! exits non-zero on a failure only when `AEI_ACCEPTANCE_STRICT=1`.
//!
//! Criteria 4 and 5 need the Welch-Goyal monthly file. They run when
//! `AEI_GOYAL_CONFIG` names a run config, or when `configs/goyal.toml` points
//! at an existing data file; otherwise they are reported as SKIPPED.

use std::path::{Path, PathBuf};
use std::time::Instant;

use aei_cli::bundle::Manifest;
use aei_cli::plotdata::{build_from_dir, PlotKind};
use aei_cli::{pipeline, RunConfig};
use aei_core::backtest::{
    clark_west, clark_west_adjusted_loss, fit_one_state, fit_switching, r2_oos, run_recursive, BacktestData,
    ForecastTable, ModelForm, ModelSpec, PredictorSource, Subset,
};
use aei_core::factors::{
    build_fc_predictor_from, build_pca_factor_from, build_pls_index_with_loadings, FactorInput, FactorKind,
    FactorOptions,
};
use aei_core::ols::{newey_west_cov, ols_fit, DesignMatrix};
use aei_core::regimes::state_indicator;
use aei_core::series::{mean_sd, EXRET, PREDICTOR_NAMES, RET, RFREE, TMS};
use aei_core::synthetic::{generate, SyntheticConfig, FTRUE};
use aei_core::{MonthKey, MonthlySeries, NwLags, SampleWindow};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

type Check = (&'static str, Result<String, String>);

fn ensure(cond: bool, detail: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(detail.into())
    }
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let (am, asd) = mean_sd(a);
    let (bm, bsd) = mean_sd(b);
    a.iter().zip(b).map(|(x, y)| (x - am) * (y - bm)).sum::<f64>() / ((a.len() as f64 - 1.0) * asd * bsd)
}

/// Synthetic backtest data over `first..=last` with the planted panel.
fn synthetic_data(seed: u64, first: i64, last: i64, opts: FactorOptions) -> (BacktestData, Vec<f64>) {
    let window = SampleWindow::from_yyyymm(first, last).unwrap();
    let cfg = SyntheticConfig {
        seed,
        window: SampleWindow::new(window.first().add_months(-12), window.last()).unwrap(),
        ..SyntheticConfig::default()
    };
    let data = generate(&cfg).unwrap();
    let mut panel = data.panel;
    aei_core::ingest::add_excess_return(&mut panel, 100.0).unwrap();
    let exret = panel.get(EXRET).unwrap().clone();
    let states = state_indicator(panel.get(TMS).unwrap(), cfg.tau).unwrap();
    let ftrue = panel.get(FTRUE).unwrap().slice(&window).unwrap().into_values();
    let bt = BacktestData::new(&panel, &PREDICTOR_NAMES, &exret, &states, Some(&data.recession), &window, opts).unwrap();
    (bt, ftrue)
}

fn spec(source: PredictorSource, form: ModelForm, initial_end: i64, first: i64) -> ModelSpec {
    ModelSpec {
        predictor: source,
        form,
        tau: 9,
        nw_lags: NwLags::Auto,
        initial_window: SampleWindow::from_yyyymm(first, initial_end).unwrap(),
    }
}

/// Copy of `data` with every observation after index `k` replaced by noise.
fn perturb_after(data: &BacktestData, k: usize, seed: u64) -> BacktestData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input = &data.input;
    let mut columns = input.columns().to_vec();
    for c in &mut columns {
        for v in c.iter_mut().skip(k + 1) {
            *v += 3.0 * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let mut exret = input.exret().to_vec();
    for v in exret.iter_mut().skip(k + 1) {
        *v = 10.0 * rng.sample::<f64, _>(StandardNormal);
    }
    let mut states = data.states.clone();
    for s in states.iter_mut().skip(k + 1) {
        *s = f64::from(u8::from(rng.random_bool(0.5)));
    }
    BacktestData {
        input: FactorInput::from_columns(input.window().first(), input.names().to_vec(), columns, exret).unwrap(),
        states,
        recession: data.recession.clone(),
        factor_opts: data.factor_opts,
    }
}

fn same_bits(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits()
}

fn tables_identical(a: &ForecastTable, b: &ForecastTable) -> bool {
    a.rows.len() == b.rows.len()
        && a.rows.iter().zip(&b.rows).all(|(x, y)| {
            x.target == y.target
                && same_bits(x.forecast, y.forecast)
                && same_bits(x.benchmark, y.benchmark)
                && same_bits(x.realized, y.realized)
                && x.state == y.state
                && x.fallback == y.fallback
                && [x.coefficients.b0, x.coefficients.d0, x.coefficients.b1, x.coefficients.g1]
                    .iter()
                    .zip([y.coefficients.b0, y.coefficients.d0, y.coefficients.b1, y.coefficients.g1])
                    .all(|(p, q)| same_bits(*p, q))
        })
}

// ---------------------------------------------------------------- criterion 1

fn no_look_ahead_states() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let start = MonthKey::from_yyyymm(199001).unwrap();
    for trial in 0..50 {
        let n = rng.random_range(40..160);
        let tau = rng.random_range(1..=12);
        let tms: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..2.0)).collect();
        let k = rng.random_range(tau..n - 1);
        let mut shocked = tms.clone();
        for v in shocked.iter_mut().skip(k + 1) {
            *v = rng.random_range(-3.0..3.0);
        }
        let a = state_indicator(&MonthlySeries::new(start, tms).unwrap(), tau).unwrap();
        let b = state_indicator(&MonthlySeries::new(start, shocked).unwrap(), tau).unwrap();
        // S_{k+1} uses spreads through k only.
        ensure(a.states()[..=k + 1] == b.states()[..=k + 1], format!("trial {trial}: state changed before k + 2"))?;
    }
    Ok("50 perturbed series".into())
}

fn no_look_ahead_factors() -> Result<String, String> {
    let opts = FactorOptions {
        fc_min_initial: 60,
        ..FactorOptions::default()
    };
    let (data, _) = synthetic_data(11, 199001, 200412, opts);
    let initial = SampleWindow::from_yyyymm(199001, 199712).unwrap();
    let k = 130;
    let shocked = perturb_after(&data, k, 12);
    let series = |d: &BacktestData| -> Vec<Vec<f64>> {
        vec![
            build_pls_index_with_loadings(&d.input, true, &opts).unwrap().0.values.into_values(),
            build_pca_factor_from(&d.input, true, &opts).unwrap().values.into_values(),
            build_fc_predictor_from(&d.input, &initial, &opts).unwrap().values.into_values(),
        ]
    };
    let (a, b) = (series(&data), series(&shocked));
    for (name, (x, y)) in ["PLS", "PCA", "FC"].iter().zip(a.iter().zip(&b)) {
        ensure(
            x[..=k].iter().zip(&y[..=k]).all(|(p, q)| same_bits(*p, *q)),
            format!("recursive {name} changed before the perturbation"),
        )?;
        ensure(x[k + 1..] != y[k + 1..], format!("recursive {name} ignores later data"))?;
    }
    Ok("PLS, PCA and FC histories unchanged through the perturbation month".into())
}

fn no_look_ahead_forecasts() -> Result<String, String> {
    let opts = FactorOptions {
        fc_min_initial: 60,
        ..FactorOptions::default()
    };
    let (data, _) = synthetic_data(13, 199001, 200412, opts);
    let k = 140;
    let shocked = perturb_after(&data, k, 14);
    let origin_limit = data.window().month_at(k);
    let mut checked = 0;
    for (source, form) in [
        (PredictorSource::Factor(FactorKind::Pls), ModelForm::Switching),
        (PredictorSource::Factor(FactorKind::Pca), ModelForm::OneState),
        (PredictorSource::Factor(FactorKind::Fc), ModelForm::Switching),
        (PredictorSource::Variable("DP".into()), ModelForm::Switching),
    ] {
        let s = spec(source, form, 199712, 199001);
        let a = run_recursive(&s, &data).map_err(|e| e.to_string())?;
        let b = run_recursive(&s, &shocked).map_err(|e| e.to_string())?;
        for (x, y) in a.rows.iter().zip(&b.rows).filter(|(x, _)| x.origin() <= origin_limit) {
            ensure(
                same_bits(x.forecast, y.forecast) && same_bits(x.benchmark, y.benchmark),
                format!("{}: forecast for {} changed", s.label(), x.target),
            )?;
            checked += 1;
        }
        ensure(
            a.rows.iter().zip(&b.rows).any(|(x, y)| x.forecast != y.forecast),
            format!("{}: later forecasts ignore the perturbation", s.label()),
        )?;
    }
    Ok(format!("{checked} forecasts unchanged across 4 models"))
}

fn nesting() -> Result<String, String> {
    let (mut data, _) = synthetic_data(15, 197001, 199912, FactorOptions::default());
    data.states = vec![0.0; data.states.len()];
    for source in [PredictorSource::Variable("TBL".into()), PredictorSource::Factor(FactorKind::Pls)] {
        let one = run_recursive(&spec(source.clone(), ModelForm::OneState, 198912, 197001), &data).unwrap();
        let sw = run_recursive(&spec(source.clone(), ModelForm::Switching, 198912, 197001), &data).unwrap();
        ensure(
            one.rows.iter().zip(&sw.rows).all(|(a, b)| same_bits(a.forecast, b.forecast)),
            format!("{}: S = 0 switching forecasts differ from one-state", source.label()),
        )?;
    }
    let x = data.input.columns()[0].clone();
    let y = &data.input.exret()[1..];
    let s = vec![0.0; y.len()];
    let a = fit_switching(y, &x[..y.len()], &s, 3).unwrap();
    let b = fit_one_state(y, &x[..y.len()], 3).unwrap();
    ensure(a.coefficients() == b.coefficients(), "in-sample fit differs")?;
    Ok("identical forecasts and coefficients".into())
}

fn sample_tables() -> Vec<ForecastTable> {
    let (data, _) = synthetic_data(17, 196001, 199912, FactorOptions::default());
    [
        (PredictorSource::Factor(FactorKind::Pls), ModelForm::Switching),
        (PredictorSource::Variable("DP".into()), ModelForm::OneState),
    ]
    .into_iter()
    .map(|(s, f)| run_recursive(&spec(s, f, 197912, 196001), &data).unwrap())
    .collect()
}

fn r2_identities(tables: &[ForecastTable]) -> Result<String, String> {
    for t in tables {
        let mut flat = t.clone();
        flat.rows.iter_mut().for_each(|r| r.forecast = r.benchmark);
        ensure(r2_oos(&flat, None).unwrap() == 0.0, "benchmark-equal forecasts do not give 0")?;
        let cw = clark_west(&flat, None, NwLags::Auto).unwrap();
        ensure(cw.t_stat == 0.0 && cw.p_value == 0.5, "identical forecasts do not give t = 0, p = 0.5")?;
        let mut perfect = t.clone();
        perfect.rows.iter_mut().for_each(|r| r.forecast = r.realized);
        ensure(r2_oos(&perfect, None).unwrap() == 1.0, "perfect forecasts do not give 1")?;
    }
    Ok("0 for benchmark-equal, 1 for perfect".into())
}

fn cw_identity(tables: &[ForecastTable]) -> Result<String, String> {
    let mut rows = 0;
    for t in tables {
        for r in &t.rows {
            let direct = clark_west_adjusted_loss(r);
            let factored = 2.0 * (r.realized - r.benchmark) * (r.forecast - r.benchmark);
            let scale = 1.0 + (r.realized - r.benchmark).powi(2) + (r.forecast - r.benchmark).powi(2);
            ensure((direct - factored).abs() <= 1e-12 * scale, format!("row {}: {direct} vs {factored}", r.target))?;
            rows += 1;
        }
    }
    Ok(format!("{rows} rows"))
}

fn partition(tables: &[ForecastTable]) -> Result<String, String> {
    for t in tables {
        let (m, b) = t.sse(None).unwrap();
        for pair in [[Subset::Expansion, Subset::Recession], [Subset::Up, Subset::Down]] {
            let (m1, b1) = t.sse(Some(&t.mask(pair[0]).unwrap())).unwrap();
            let (m2, b2) = t.sse(Some(&t.mask(pair[1]).unwrap())).unwrap();
            ensure(
                (m - m1 - m2).abs() <= 1e-10 * m && (b - b1 - b2).abs() <= 1e-10 * b,
                format!("{}: {:?} does not add up", t.label, pair),
            )?;
        }
    }
    Ok("model and benchmark SSE add up for both partitions".into())
}

fn determinism() -> Result<String, String> {
    let tables_a = sample_tables();
    let tables_b = sample_tables();
    ensure(
        tables_a.iter().zip(&tables_b).all(|(a, b)| tables_identical(a, b)),
        "forecast tables differ between runs",
    )?;
    let config = workspace_root().join("configs/smoke.toml");
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut manifests = Vec::new();
    for d in &dirs {
        let cfg = RunConfig::load(&config)
            .and_then(|c| c.validate(config.parent().unwrap(), Some(d.path().to_path_buf())))
            .map_err(|e| e.to_string())?;
        manifests.push(pipeline::run(&cfg).map_err(|e| e.to_string())?.manifest);
    }
    ensure(manifests[0] == manifests[1], "bundle manifests differ")?;
    for name in manifests[0].files.keys().chain(std::iter::once(&"manifest.json".to_string())) {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        ensure(a == b, format!("{name} differs"))?;
    }
    Ok(format!("bit-identical tables; {} bundle files byte-identical", manifests[0].files.len() + 1))
}

fn criterion_1() -> Vec<Check> {
    let tables = sample_tables();
    vec![
        ("no look-ahead: state indicator", no_look_ahead_states()),
        ("no look-ahead: recursive factors", no_look_ahead_factors()),
        ("no look-ahead: recursive forecasts", no_look_ahead_forecasts()),
        ("switching nests one-state when S = 0", nesting()),
        ("R2_oos identities", r2_identities(&tables)),
        ("Clark-West loss identity", cw_identity(&tables)),
        ("partition additivity", partition(&tables)),
        ("determinism", determinism()),
    ]
}

// ---------------------------------------------------------------- criterion 2

fn ols_oracle() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(201);
    let mut worst: f64 = 0.0;
    for design in 0..20 {
        let n = rng.random_range(30..300);
        let k = rng.random_range(1..6);
        let mut columns: Vec<Vec<f64>> = vec![vec![1.0; n]];
        for _ in 0..k {
            let scale = rng.random_range(0.1..10.0);
            columns.push((0..n).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect());
        }
        let beta: Vec<f64> = (0..=k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| (0..=k).map(|j| beta[j] * columns[j][i]).sum::<f64>() + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let named: Vec<(String, &[f64])> = columns.iter().enumerate().map(|(j, c)| (format!("x{j}"), c.as_slice())).collect();
        let x = DesignMatrix::from_columns(&named).unwrap();
        let fit = ols_fit(&y, &x, 0).map_err(|e| e.to_string())?;
        let xm = DMatrix::from_fn(n, k + 1, |i, j| columns[j][i]);
        let xty = xm.transpose() * DVector::from_vec(y.clone());
        let oracle = (xm.transpose() * &xm).cholesky().ok_or("X'X not positive definite")?.solve(&xty);
        for j in 0..=k {
            let err = (fit.coefficients[j] - oracle[j]).abs() / (1.0 + oracle[j].abs());
            worst = worst.max(err);
            ensure(err <= 1e-10, format!("design {design}: coefficient {j} off by {err:e}"))?;
        }
    }
    Ok(format!("20 designs, worst relative error {worst:.1e}"))
}

fn nw_hand_expansion() -> Result<String, String> {
    let x = [0.3, -1.2, 2.5, 0.7];
    let u = [0.9, -0.4, 1.3, -2.1];
    let design = DesignMatrix::with_intercept("x", &x).unwrap();
    let got = newey_west_cov(&design, &u, 2).map_err(|e| e.to_string())?;
    // Outer products of x_t = (1, x[t]) and x_s.
    let outer = |t: usize, s: usize| [[1.0, x[s]], [x[t], x[t] * x[s]]];
    let mut meat = [[0.0; 2]; 2];
    let mut add = |w: f64, m: [[f64; 2]; 2]| {
        for a in 0..2 {
            for b in 0..2 {
                meat[a][b] += w * m[a][b];
            }
        }
    };
    add(u[0] * u[0], outer(0, 0));
    add(u[1] * u[1], outer(1, 1));
    add(u[2] * u[2], outer(2, 2));
    add(u[3] * u[3], outer(3, 3));
    let (w1, w2) = (2.0 / 3.0, 1.0 / 3.0);
    for (t, s) in [(1, 0), (2, 1), (3, 2)] {
        add(w1 * u[t] * u[s], outer(t, s));
        add(w1 * u[t] * u[s], outer(s, t));
    }
    for (t, s) in [(2, 0), (3, 1)] {
        add(w2 * u[t] * u[s], outer(t, s));
        add(w2 * u[t] * u[s], outer(s, t));
    }
    let sx: f64 = x.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let det = 4.0 * sxx - sx * sx;
    let inv = [[sxx / det, -sx / det], [-sx / det, 4.0 / det]];
    let mut worst: f64 = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            let mut v = 0.0;
            for c in 0..2 {
                for d in 0..2 {
                    v += inv[a][c] * meat[c][d] * inv[d][b];
                }
            }
            worst = worst.max((got[(a, b)] - v).abs());
        }
    }
    ensure(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    Ok(format!("n = 4, L = 2, max deviation {worst:.1e}"))
}

fn state_scan() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let start = MonthKey::from_yyyymm(197001).unwrap();
    for trial in 0..50 {
        let n = rng.random_range(30..240);
        let tau = rng.random_range(1..=24.min(n - 1));
        let tms: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.05) { 0.0 } else { rng.random_range(-1.0..3.0) })
            .collect();
        let got = state_indicator(&MonthlySeries::new(start, tms.clone()).unwrap(), tau).unwrap();
        for t in 0..n {
            let mut down = 0u8;
            for i in 1..=tau {
                if t >= i && tms[t - i] <= 0.0 {
                    down = 1;
                }
            }
            ensure(got.states()[t] == down, format!("trial {trial}, month {t}, tau {tau}"))?;
        }
    }
    Ok("50 random series".into())
}

fn recursive_oracle() -> Result<String, String> {
    let (data, _) = synthetic_data(21, 196001, 201712, FactorOptions::default());
    let s = spec(PredictorSource::Variable("BM".into()), ModelForm::OneState, 197912, 196001);
    let table = run_recursive(&s, &data).map_err(|e| e.to_string())?;
    let x = &data.input.columns()[data.input.names().iter().position(|n| n == "BM").unwrap()];
    let r = data.input.exret();
    let first = 239;
    let mut worst: f64 = 0.0;
    for (i, row) in table.rows.iter().enumerate() {
        let t = first + i;
        let n = t as f64;
        let (mut sx, mut sy) = (0.0, 0.0);
        for s in 0..t {
            sx += x[s];
            sy += r[s + 1];
        }
        let (mx, my) = (sx / n, sy / n);
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for s in 0..t {
            sxy += (x[s] - mx) * (r[s + 1] - my);
            sxx += (x[s] - mx).powi(2);
        }
        let slope = sxy / sxx;
        let forecast = my + slope * (x[t] - mx);
        let benchmark = r[..=t].iter().sum::<f64>() / (t + 1) as f64;
        let err = (row.forecast - forecast).abs().max((row.benchmark - benchmark).abs());
        worst = worst.max(err);
        ensure(err <= 1e-10, format!("origin {}: off by {err:e}", row.origin()))?;
    }
    Ok(format!("{} origins, worst error {worst:.1e}", table.len()))
}

fn criterion_2() -> Vec<Check> {
    vec![
        ("OLS vs normal equations", ols_oracle()),
        ("Newey-West vs hand expansion", nw_hand_expansion()),
        ("state indicator vs double-loop scan", state_scan()),
        ("recursive one-state forecasts vs loop oracle", recursive_oracle()),
    ]
}

// ---------------------------------------------------------------- criterion 3

fn switching_recovery() -> Result<String, String> {
    let truth = SyntheticConfig::default();
    let planted = [truth.beta0, truth.delta0, truth.beta1, truth.gamma1];
    let reps = 200;
    let mut draws: Vec<[f64; 4]> = Vec::with_capacity(reps);
    for seed in 0..reps as u64 {
        let data = generate(&SyntheticConfig { seed: 5000 + seed, ..truth.clone() }).unwrap();
        let panel = &data.panel;
        let f = panel.get(FTRUE).unwrap().values();
        let ret = panel.get(RET).unwrap().values();
        let rf = panel.get(RFREE).unwrap().values();
        let exret: Vec<f64> = ret.iter().zip(rf).map(|(r, f)| (r - f) * 100.0).collect();
        let s = state_indicator(panel.get(TMS).unwrap(), truth.tau).unwrap().as_f64();
        let n = f.len();
        let fit = fit_switching(&exret[1..], &f[..n - 1], &s[..n - 1], 0).map_err(|e| e.to_string())?;
        ensure(!fit.fallback, format!("seed {seed}: fell back to one state"))?;
        let c = fit.coefficients();
        draws.push([c.b0, c.d0, c.b1, c.g1]);
    }
    let mut detail = Vec::new();
    for (j, name) in ["beta0", "delta0", "beta1", "gamma1"].iter().enumerate() {
        let values: Vec<f64> = draws.iter().map(|d| d[j]).collect();
        let (mean, sd) = mean_sd(&values);
        let mcse = sd / (reps as f64).sqrt();
        let z = (mean - planted[j]) / mcse;
        ensure(z.abs() <= 2.0, format!("{name}: mean {mean:.4} vs {:.4} ({z:.2} MC SEs)", planted[j]))?;
        detail.push(format!("{name} {z:+.2}"));
    }
    Ok(format!("{reps} replications; deviation in MC SEs: {}", detail.join(", ")))
}

fn noiseless_pls() -> Result<String, String> {
    let cfg = SyntheticConfig {
        seed: 301,
        noise_sd: 0.0,
        idio_sd: 0.0,
        ..SyntheticConfig::default()
    };
    let data = generate(&cfg).unwrap();
    let names: Vec<String> = PREDICTOR_NAMES.iter().filter(|n| **n != TMS).map(|n| n.to_string()).collect();
    let panel = &data.panel;
    let columns: Vec<Vec<f64>> = names.iter().map(|n| panel.get(n).unwrap().values().to_vec()).collect();
    let ret = panel.get(RET).unwrap().values();
    let rf = panel.get(RFREE).unwrap().values();
    let exret: Vec<f64> = ret.iter().zip(rf).map(|(r, f)| (r - f) * 100.0).collect();
    let input = FactorInput::from_columns(cfg.window.first(), names, columns, exret).unwrap();
    let (index, _) = build_pls_index_with_loadings(&input, false, &FactorOptions::default()).map_err(|e| e.to_string())?;
    let c = corr(index.values.values(), panel.get(FTRUE).unwrap().values());
    ensure(c > 0.999, format!("correlation {c:.6}"))?;
    Ok(format!("correlation {c:.6}"))
}

/// Common noise dominates the predictor panel, so its first principal component
/// tracks the noise while the target factor drives returns.
fn common_noise_config(seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        seed,
        noise_sd: 2.0,
        idio_sd: 0.5,
        ..SyntheticConfig::default()
    }
}

fn pls_beats_pca() -> Result<String, String> {
    let opts = FactorOptions::default();
    let mut wins = 0;
    let seeds = 100;
    for seed in 0..seeds {
        let cfg = common_noise_config(7000 + seed);
        let data = generate(&cfg).unwrap();
        let panel = &data.panel;
        let names: Vec<String> = PREDICTOR_NAMES.iter().map(|n| n.to_string()).collect();
        let columns: Vec<Vec<f64>> = names.iter().map(|n| panel.get(n).unwrap().values().to_vec()).collect();
        let ret = panel.get(RET).unwrap().values();
        let rf = panel.get(RFREE).unwrap().values();
        let exret: Vec<f64> = ret.iter().zip(rf).map(|(r, f)| (r - f) * 100.0).collect();
        let input = FactorInput::from_columns(cfg.window.first(), names, columns, exret).unwrap();
        let truth = panel.get(FTRUE).unwrap().values();
        let pls = build_pls_index_with_loadings(&input, false, &opts).map_err(|e| e.to_string())?.0;
        let pca = build_pca_factor_from(&input, false, &opts).map_err(|e| e.to_string())?;
        if corr(pls.values.values(), truth).abs() > corr(pca.values.values(), truth).abs() {
            wins += 1;
        }
    }
    ensure(wins >= 90, format!("PLS closer to the factor in {wins}/{seeds} seeds"))?;
    Ok(format!("PLS closer to the factor in {wins}/{seeds} seeds"))
}

fn cw_size() -> Result<String, String> {
    let trials = 500;
    let start = MonthKey::from_yyyymm(198001).unwrap();
    let n = 240;
    let window = SampleWindow::new(start, start.add_months(n as i64 - 1)).unwrap();
    let initial = SampleWindow::new(start, start.add_months(119)).unwrap();
    let ret_dist = Normal::new(0.5, 4.0).unwrap();
    let mut rejections = 0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(40_000 + trial);
        let mut x = vec![0.0; n];
        for t in 1..n {
            x[t] = 0.95 * x[t - 1] + rng.sample::<f64, _>(StandardNormal);
        }
        let r: Vec<f64> = (0..n).map(|_| ret_dist.sample(&mut rng)).collect();
        let data = BacktestData {
            input: FactorInput::from_columns(window.first(), vec!["X".into()], vec![x], r).unwrap(),
            states: vec![0.0; n],
            recession: None,
            factor_opts: FactorOptions::default(),
        };
        let s = ModelSpec {
            predictor: PredictorSource::Variable("X".into()),
            form: ModelForm::OneState,
            tau: 9,
            nw_lags: NwLags::Auto,
            initial_window: initial,
        };
        let table = run_recursive(&s, &data).map_err(|e| e.to_string())?;
        if clark_west(&table, None, NwLags::Auto).map_err(|e| e.to_string())?.p_value < 0.10 {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / trials as f64;
    ensure((0.05..=0.15).contains(&rate), format!("rejection rate {rate:.3}"))?;
    Ok(format!("rejection rate {rate:.3} at nominal 10% over {trials} trials"))
}

fn criterion_3() -> Vec<Check> {
    vec![
        ("switching coefficients recovered", switching_recovery()),
        ("noiseless PLS recovers the factor", noiseless_pls()),
        ("PLS beats PCA under common noise", pls_beats_pca()),
        ("Clark-West size under the null", cw_size()),
    ]
}

// ---------------------------------------------------------- criteria 4 and 5

struct RealRun {
    results: aei_cli::bundle::Results,
    manifest: Manifest,
    dir: tempfile::TempDir,
}

fn goyal_config() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("AEI_GOYAL_CONFIG") {
        return Some(PathBuf::from(p));
    }
    let default = workspace_root().join("configs/goyal.toml");
    let cfg = RunConfig::load(&default).ok()?;
    default.parent().unwrap().join(&cfg.data).exists().then_some(default)
}

fn real_run(config: &Path) -> Result<RealRun, String> {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::load(config)
        .and_then(|c| c.validate(config.parent().unwrap_or(Path::new(".")), Some(dir.path().to_path_buf())))
        .map_err(|e| e.to_string())?;
    let out = pipeline::run(&cfg).map_err(|e| e.to_string())?;
    Ok(RealRun {
        results: out.results,
        manifest: out.manifest,
        dir,
    })
}

fn oos(run: &RealRun, model: &str, form: ModelForm, subset: Subset) -> Result<f64, String> {
    run.results
        .model(model, form)
        .and_then(|m| m.oos(subset))
        .and_then(|e| e.r2_oos_pct)
        .ok_or_else(|| format!("no {} R2_oos for {model} ({})", subset.label(), form.label()))
}

fn criterion_4(run: &RealRun) -> Vec<Check> {
    let factors = ["E_PLS", "E_PCA", "E_FC"];
    let switching_gain = || -> Result<String, String> {
        let mut parts = Vec::new();
        for f in factors {
            let (a, b) = (oos(run, f, ModelForm::OneState, Subset::Full)?, oos(run, f, ModelForm::Switching, Subset::Full)?);
            ensure(b > a, format!("{f}: switching {b:.2} <= one-state {a:.2}"))?;
            parts.push(format!("{f} {a:.2} -> {b:.2}"));
        }
        Ok(parts.join(", "))
    };
    let pls_first = || -> Result<String, String> {
        for form in [ModelForm::OneState, ModelForm::Switching] {
            let pls = oos(run, "E_PLS", form, Subset::Full)?;
            for f in &factors[1..] {
                let other = oos(run, f, form, Subset::Full)?;
                ensure(pls > other, format!("{}: {f} {other:.2} >= E_PLS {pls:.2}", form.label()))?;
            }
        }
        Ok("E_PLS has the highest R2_oos in both panels".into())
    };
    let recession_gap = || -> Result<String, String> {
        let rec = oos(run, "E_PLS", ModelForm::Switching, Subset::Recession)?;
        let exp = oos(run, "E_PLS", ModelForm::Switching, Subset::Expansion)?;
        ensure(rec > exp, format!("recession {rec:.2} <= expansion {exp:.2}"))?;
        Ok(format!("recession {rec:.2} > expansion {exp:.2}"))
    };
    let down_state = || -> Result<String, String> {
        let one = oos(run, "E_PLS", ModelForm::OneState, Subset::Down)?;
        let sw = oos(run, "E_PLS", ModelForm::Switching, Subset::Down)?;
        ensure(one < 0.0 && sw > 0.0, format!("down-state one-state {one:.2}, switching {sw:.2}"))?;
        Ok(format!("down-state one-state {one:.2} < 0 < switching {sw:.2}"))
    };
    let quantitative = || -> Result<String, String> {
        let full: Vec<_> = run
            .manifest
            .reference_deviations
            .iter()
            .filter(|d| d.metric == "r2_adj" || d.metric == "r2_oos")
            .collect();
        ensure(!full.is_empty(), "run config has no reference table")?;
        let misses: Vec<String> = full
            .iter()
            .filter(|d| !d.within_tolerance)
            .map(|d| format!("{} {} {}: {:?} vs {}", d.model, d.form.label(), d.metric, d.computed, d.reference))
            .collect();
        ensure(misses.is_empty(), misses.join("; "))?;
        Ok(format!("{} values within tolerance", full.len()))
    };
    vec![
        ("switching beats one-state out of sample", switching_gain()),
        ("E_PLS ranks first", pls_first()),
        ("recession R2_oos above expansion (E_PLS switching)", recession_gap()),
        ("down-state sign flip (E_PLS)", down_state()),
        ("adjusted and out-of-sample R2 within tolerance", quantitative()),
    ]
}

fn criterion_5(run: &RealRun) -> Vec<Check> {
    let summary = build_from_dir(run.dir.path(), PlotKind::Forecasts, ModelForm::Switching)
        .map_err(|e| e.to_string())
        .and_then(|p| p.summary.ok_or_else(|| "no summary".to_string()));
    let correlation = summary.clone().and_then(|s| {
        ensure((0.55..=0.75).contains(&s.correlation), format!("corr {:.3}", s.correlation))?;
        Ok(format!("corr(f_pls, f_fc) = {:.3} over {} months", s.correlation, s.months))
    });
    let variance = summary.and_then(|s| {
        ensure(s.variance_pls > s.variance_fc, format!("var pls {:.4} <= var fc {:.4}", s.variance_pls, s.variance_fc))?;
        Ok(format!("var(f_pls) = {:.4} > var(f_fc) = {:.4}", s.variance_pls, s.variance_fc))
    });
    vec![("forecast correlation", correlation), ("PLS forecasts more volatile", variance)]
}

// ---------------------------------------------------------------- driver

fn report(number: usize, title: &str, started: Instant, checks: &[Check]) -> bool {
    let passed = checks.iter().filter(|(_, r)| r.is_ok()).count();
    let ok = passed == checks.len();
    println!(
        "criterion {number} {title}: {} ({passed}/{} checks, {:.1}s)",
        if ok { "PASS" } else { "FAIL" },
        checks.len(),
        started.elapsed().as_secs_f64()
    );
    for (name, r) in checks {
        match r {
            Ok(detail) => println!("    ok    {name}: {detail}"),
            Err(detail) => println!("    FAIL  {name}: {detail}"),
        }
    }
    ok
}

fn main() {
    let mut all_ok = true;
    let t = Instant::now();
    all_ok &= report(1, "property suite", t, &criterion_1());
    let t = Instant::now();
    all_ok &= report(2, "oracle equivalence", t, &criterion_2());
    let t = Instant::now();
    all_ok &= report(3, "simulation recovery", t, &criterion_3());

    match goyal_config() {
        None => {
            let why = "no Welch-Goyal data (set AEI_GOYAL_CONFIG or add data/goyal_monthly.csv)";
            println!("criterion 4 reproduction on real data: SKIPPED ({why})");
            println!("criterion 5 figure data on real data: SKIPPED ({why})");
        }
        Some(config) => {
            let t = Instant::now();
            match real_run(&config) {
                Ok(run) => {
                    all_ok &= report(4, "reproduction on real data", t, &criterion_4(&run));
                    let t = Instant::now();
                    all_ok &= report(5, "figure data on real data", t, &criterion_5(&run));
                }
                Err(e) => {
                    println!("criterion 4 reproduction on real data: FAIL (run failed: {e})");
                    println!("criterion 5 figure data on real data: FAIL (run failed: {e})");
                    all_ok = false;
                }
            }
        }
    }
    if !all_ok {
        println!("acceptance: at least one criterion failed");
        if std::env::var_os("AEI_ACCEPTANCE_STRICT").is_some_and(|v| v == "1") {
            std::process::exit(1);
        }
    }
}
