//! Criterion benchmarks for the hot paths of `aei-core`; see `benches/`.

use aei_core::backtest::BacktestData;
use aei_core::factors::FactorOptions;
use aei_core::ingest::add_excess_return;
use aei_core::regimes::state_indicator;
use aei_core::series::{EXRET, PREDICTOR_NAMES, TMS};
use aei_core::synthetic::{generate, SyntheticConfig};
use aei_core::SampleWindow;

/// Synthetic 1960-2017 backtest data with twelve pre-sample months.
pub fn sample_data() -> BacktestData {
    let window = SampleWindow::from_yyyymm(196001, 201712).unwrap();
    let cfg = SyntheticConfig {
        window: SampleWindow::new(window.first().add_months(-12), window.last()).unwrap(),
        ..SyntheticConfig::default()
    };
    let generated = generate(&cfg).unwrap();
    let mut panel = generated.panel;
    add_excess_return(&mut panel, 100.0).unwrap();
    let exret = panel.get(EXRET).unwrap().clone();
    let states = state_indicator(panel.get(TMS).unwrap(), cfg.tau).unwrap();
    BacktestData::new(
        &panel,
        &PREDICTOR_NAMES,
        &exret,
        &states,
        Some(&generated.recession),
        &window,
        FactorOptions::default(),
    )
    .unwrap()
}
