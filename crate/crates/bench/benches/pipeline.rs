use std::hint::black_box;

use aei_bench::sample_data;
use aei_core::backtest::{run_recursive, ModelForm, ModelSpec, PredictorSource};
use aei_core::factors::{pls_factor_history, FactorKind};
use aei_core::ols::{ols_fit, DesignMatrix};
use aei_core::regimes::state_indicator;
use aei_core::{MonthKey, MonthlySeries, NwLags, SampleWindow};
use criterion::{criterion_group, criterion_main, Criterion};

fn states(c: &mut Criterion) {
    let tms: Vec<f64> = (0..696).map(|t| ((t as f64) * 0.37).sin() + 0.4).collect();
    let series = MonthlySeries::new(MonthKey::from_yyyymm(196001).unwrap(), tms).unwrap();
    c.bench_function("state_indicator/696x24", |b| b.iter(|| state_indicator(black_box(&series), 24).unwrap()));
}

fn ols(c: &mut Criterion) {
    let data = sample_data();
    let n = data.input.len() - 1;
    let x = &data.input.columns()[0][..n];
    let s: Vec<f64> = data.states[..n].to_vec();
    let ones = vec![1.0; n];
    let up: Vec<f64> = x.iter().zip(&s).map(|(x, s)| x * s).collect();
    let down: Vec<f64> = x.iter().zip(&s).map(|(x, s)| x * (1.0 - s)).collect();
    let design = DesignMatrix::from_columns(&[("const", ones.as_slice()), ("S", &s), ("Sx", &up), ("x", &down)]).unwrap();
    let y = &data.input.exret()[1..];
    c.bench_function("ols_fit/switching_nw6", |b| b.iter(|| ols_fit(black_box(y), &design, 6).unwrap()));
}

fn pls(c: &mut Criterion) {
    let data = sample_data();
    let end = data.input.len() - 1;
    c.bench_function("pls_factor_history/full", |b| {
        b.iter(|| pls_factor_history(&data.input, black_box(end), &data.factor_opts).unwrap())
    });
}

fn backtest(c: &mut Criterion) {
    let data = sample_data();
    let mut group = c.benchmark_group("run_recursive");
    group.sample_size(10);
    for kind in [FactorKind::Pls, FactorKind::Pca, FactorKind::Fc] {
        let spec = ModelSpec {
            predictor: PredictorSource::Factor(kind),
            form: ModelForm::Switching,
            tau: 9,
            nw_lags: NwLags::Auto,
            initial_window: SampleWindow::from_yyyymm(196001, 197912).unwrap(),
        };
        group.bench_function(kind.label(), |b| b.iter(|| run_recursive(&spec, &data).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, states, ols, pls, backtest);
criterion_main!(benches);
