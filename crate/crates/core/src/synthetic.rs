//! Seeded synthetic monthly panels with a planted factor and planted regimes.
//!
//! A latent AR(1) factor `F_t` drives next-month returns through the
//! switching regression, and every predictor loads on `F_t` plus a common
//! noise component `Y_t`. `TMS` is an independent AR(1) whose dips below zero
//! drive the state indicator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regimes::{state_indicator, RecessionMask, DEFAULT_TAU};
use crate::series::{MonthKey, MonthlySeries, PredictorPanel, SampleWindow, PREDICTOR_NAMES, RET, RFREE, TMS};

pub const FTRUE: &str = "FTRUE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub window: SampleWindow,
    /// AR(1) coefficient of the latent factor.
    pub factor_ar: f64,
    /// Planted switching coefficients `(β0, δ0, β1, γ1)`; returns in percent.
    pub beta0: f64,
    pub delta0: f64,
    pub beta1: f64,
    pub gamma1: f64,
    pub return_sd: f64,
    /// Standard deviation of the common noise component.
    pub noise_sd: f64,
    /// Idiosyncratic predictor noise.
    pub idio_sd: f64,
    pub tms_mean: f64,
    pub tms_ar: f64,
    pub tms_sd: f64,
    pub tau: usize,
    /// Monthly risk-free rate, as a decimal.
    pub rfree: f64,
    pub recession_threshold: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            seed: 20180101,
            window: SampleWindow::from_yyyymm(196001, 201712).expect("valid window"),
            factor_ar: 0.9,
            beta0: 0.6,
            delta0: -0.5,
            beta1: 0.8,
            gamma1: 0.4,
            return_sd: 4.0,
            noise_sd: 1.0,
            idio_sd: 0.5,
            tms_mean: 1.5,
            tms_ar: 0.95,
            tms_sd: 0.45,
            tau: DEFAULT_TAU,
            rfree: 0.004,
            recession_threshold: -0.9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    /// The 16 predictors plus `RET`, `RFREE` and `FTRUE`.
    pub panel: PredictorPanel,
    /// Loadings of each predictor on `F_t`; `TMS` has none.
    pub loadings: Vec<(String, f64)>,
    /// Months where the trailing 3-month mean of `F_t` is below the recession threshold.
    pub recession: RecessionMask,
}

fn signed_loading(j: usize) -> f64 {
    let magnitude = 0.4 + 0.1 * (j % 5) as f64;
    if j % 3 == 1 {
        -magnitude
    } else {
        magnitude
    }
}

fn recession_flags(f: &[f64], threshold: f64) -> Vec<bool> {
    (0..f.len())
        .map(|t| {
            let from = t.saturating_sub(2);
            let window = &f[from..=t];
            window.iter().sum::<f64>() / (window.len() as f64) < threshold
        })
        .collect()
}

/// Draws a panel from `config`; identical seeds give identical panels.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticData> {
    let n = config.window.len();
    if n < 2 * config.tau + 2 {
        return Err(Error::insufficient("synthetic sample", 2 * config.tau + 2, n));
    }
    for (name, v) in [
        ("factor_ar", config.factor_ar),
        ("tms_ar", config.tms_ar),
    ] {
        if !(v.abs() < 1.0) {
            return Err(Error::Parameter(format!("{name} must lie strictly inside (-1, 1)")));
        }
    }
    let normal = |sd: f64| {
        Normal::new(0.0, sd).map_err(|e| Error::Parameter(format!("standard deviation {sd}: {e}")))
    };
    let unit = normal(1.0)?;
    let ret_noise = normal(config.return_sd)?;
    let common = normal(config.noise_sd)?;
    let idio = normal(config.idio_sd)?;
    let tms_noise = normal(config.tms_sd)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let innovation_sd = (1.0 - config.factor_ar.powi(2)).sqrt();
    let mut f = vec![0.0; n];
    let mut tms = vec![0.0; n];
    f[0] = unit.sample(&mut rng);
    tms[0] = config.tms_mean;
    for t in 1..n {
        f[t] = config.factor_ar * f[t - 1] + innovation_sd * unit.sample(&mut rng);
        tms[t] = config.tms_mean + config.tms_ar * (tms[t - 1] - config.tms_mean) + tms_noise.sample(&mut rng);
    }
    let start = config.window.first();
    let tms_series = MonthlySeries::new(start, tms.clone())?;
    let states = state_indicator(&tms_series, config.tau)?.as_f64();

    let mut exret = vec![0.0; n];
    exret[0] = config.beta0 + ret_noise.sample(&mut rng);
    for t in 0..n - 1 {
        let s = states[t];
        let mean = config.beta0 + config.delta0 * s + config.beta1 * s * f[t] + config.gamma1 * (1.0 - s) * f[t];
        exret[t + 1] = mean + ret_noise.sample(&mut rng);
    }

    let y: Vec<f64> = (0..n).map(|_| common.sample(&mut rng)).collect();
    let mut panel = PredictorPanel::new();
    let mut loadings = Vec::new();
    for (j, name) in PREDICTOR_NAMES.iter().enumerate() {
        if *name == TMS {
            panel.insert(TMS, tms_series.clone());
            loadings.push((TMS.to_string(), 0.0));
            continue;
        }
        let lambda = signed_loading(j);
        let offset = rng.random_range(-1.0..1.0);
        let noise_loading = if j % 2 == 0 { 1.0 } else { -0.5 };
        let values = (0..n)
            .map(|t| offset + lambda * f[t] + noise_loading * y[t] + idio.sample(&mut rng))
            .collect();
        panel.insert(*name, MonthlySeries::new(start, values)?);
        loadings.push((name.to_string(), lambda));
    }
    let ret = exret.iter().map(|r| r / 100.0 + config.rfree).collect();
    panel.insert(RET, MonthlySeries::new(start, ret)?);
    panel.insert(RFREE, MonthlySeries::new(start, vec![config.rfree; n])?);
    let flags = recession_flags(&f, config.recession_threshold);
    panel.insert(FTRUE, MonthlySeries::new(start, f)?);


    Ok(SyntheticData {
        panel,
        loadings,
        recession: RecessionMask::new(start, flags),
    })
}

/// Convenience: month key of index `i` in the configured window.
pub fn month(config: &SyntheticConfig, i: usize) -> MonthKey {
    config.window.month_at(i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_panel() {
        let cfg = SyntheticConfig::default();
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        for (name, s) in a.panel.iter() {
            assert_eq!(s.values(), b.panel.get(name).unwrap().values());
        }
        let c = generate(&SyntheticConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a.panel.get(RET).unwrap().values(), c.panel.get(RET).unwrap().values());
    }

    #[test]
    fn both_states_occur() {
        let cfg = SyntheticConfig::default();
        let data = generate(&cfg).unwrap();
        let share = data.recession.share();
        assert!(share > 0.05 && share < 0.3, "recession share {share}");
        let tms = data.panel.get(TMS).unwrap();
        let down = state_indicator(tms, cfg.tau).unwrap();
        let down_share = down.states().iter().filter(|&&s| s == 1).count() as f64 / down.len() as f64;
        assert!(down_share > 0.05 && down_share < 0.6, "down share {down_share}");
        assert_eq!(data.panel.predictor_count(), 16);
    }
}
