//! `synth`: writes a seeded synthetic dataset, its recession file and a config.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use aei_core::ingest::{write_columns, write_panel_csv, DEFAULT_MISSING_MARKER};
use aei_core::synthetic::{generate, SyntheticConfig};
use aei_core::SampleWindow;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone)]
pub struct SynthFiles {
    pub data: PathBuf,
    pub recession: PathBuf,
    pub config: PathBuf,
}

/// Months of data written ahead of the sample so lagged series cover it.
pub const PRESAMPLE_MONTHS: i64 = 12;

/// Writes `<name>.csv`, `<name>_recessions.csv` and `<name>.toml` into `dir`.
///
/// The data start [`PRESAMPLE_MONTHS`] before `sample`; `config.window` is ignored.
pub fn write_synthetic(
    dir: &Path,
    name: &str,
    config: &SyntheticConfig,
    sample: &SampleWindow,
    initial_end: u32,
    fc_min_initial: Option<usize>,
) -> CliResult<SynthFiles> {
    let initial = aei_core::MonthKey::from_yyyymm(initial_end as i64)
        .map_err(|e| CliError::Config(format!("initial_end: {e}")))?;
    if !sample.contains(initial) || initial == sample.last() {
        return Err(CliError::Config(format!("initial_end {initial} must lie inside {sample}")));
    }
    let config = &SyntheticConfig {
        window: SampleWindow::new(sample.first().add_months(-PRESAMPLE_MONTHS), sample.last())?,
        ..config.clone()
    };
    let data = generate(config)?;
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let data_path = dir.join(format!("{name}.csv"));
    write_panel_csv(&data.panel, &data_path, DEFAULT_MISSING_MARKER)?;

    let rec_path = dir.join(format!("{name}_recessions.csv"));
    let flags: Vec<f64> = data.recession.flags().iter().map(|&b| f64::from(u8::from(b))).collect();
    let file = fs::File::create(&rec_path).map_err(|e| CliError::io(&rec_path, e))?;
    write_columns(BufWriter::new(file), data.recession.start(), &[("recession", &flags)], DEFAULT_MISSING_MARKER)
        .map_err(|e| CliError::io(&rec_path, e))?;

    let window = sample;
    let mut toml = format!(
        "# Synthetic panel (seed {seed}) with planted switching coefficients\n\
         # beta0 = {b0}, delta0 = {d0}, beta1 = {b1}, gamma1 = {g1}; returns in percent.\n\
         data = \"{name}.csv\"\n\
         recession = \"{name}_recessions.csv\"\n\
         output_dir = \"out/{name}\"\n\
         sample_start = {start}\n\
         sample_end = {end}\n\
         initial_end = {initial_end}\n\
         tau = {tau}\n\
         nw_lags = \"auto\"\n",
        seed = config.seed,
        b0 = config.beta0,
        d0 = config.delta0,
        b1 = config.beta1,
        g1 = config.gamma1,
        start = window.first().yyyymm(),
        end = window.last().yyyymm(),
        tau = config.tau,
    );
    if let Some(floor) = fc_min_initial {
        toml.push_str(&format!("fc_min_initial = {floor}\n"));
    }
    let config_path = dir.join(format!("{name}.toml"));
    fs::write(&config_path, toml).map_err(|e| CliError::io(&config_path, e))?;
    Ok(SynthFiles {
        data: data_path,
        recession: rec_path,
        config: config_path,
    })
}
