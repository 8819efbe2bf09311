use std::path::PathBuf;
use std::process::ExitCode;

use aei_cli::bundle::Bundle;
use aei_cli::plotdata::{self, PlotKind};
use aei_cli::report::{self, TableKind};
use aei_cli::synth::write_synthetic;
use aei_cli::{load_config, pipeline, CliError, CliResult};
use aei_core::backtest::ModelForm;
use aei_core::synthetic::SyntheticConfig;
use aei_core::SampleWindow;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "aei", version, about = "State-switching equity premium forecasts with the aligned economic index")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TableArg {
    Combination,
    States,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotArg {
    IndexVsPremium,
    Forecasts,
    Weights,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormArg {
    OneState,
    Switching,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write a report bundle.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Render a results table from a bundle.
    Table {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, value_enum)]
        which: TableArg,
    },
    /// Write plot-ready CSV data from a bundle.
    Plotdata {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, value_enum)]
        which: PlotArg,
        /// Model form whose forecasts are plotted.
        #[arg(long, value_enum, default_value = "switching")]
        form: FormArg,
    },
    /// Write a seeded synthetic dataset with planted switching predictability.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "synthetic")]
        name: String,
        #[arg(long, default_value_t = SyntheticConfig::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = 196001)]
        start: u32,
        #[arg(long, default_value_t = 201712)]
        end: u32,
        #[arg(long, default_value_t = 197912)]
        initial_end: u32,
        /// Lower floor on the combination-forecast initial window, for short samples.
        #[arg(long)]
        fc_min_initial: Option<usize>,
    },
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load_config(&config)?;
            let out = pipeline::run(&cfg)?;
            for m in &out.results.models {
                if m.fallback_origins > 0 {
                    log::warn!(
                        "{} ({}): {} origins used the one-state fallback",
                        m.predictor,
                        m.form.label(),
                        m.fallback_origins
                    );
                }
            }
            println!("{}", report::render(&out.results, TableKind::Combination)?.text);
            println!("bundle written to {}", out.dir.display());
        }
        Command::Table { bundle, which } => {
            let kind = match which {
                TableArg::Combination => TableKind::Combination,
                TableArg::States => TableKind::States,
            };
            let b = Bundle::open(&bundle)?;
            let rendered = report::render(&b.results()?, kind)?;
            for (name, csv) in &rendered.csv {
                aei_cli::bundle::write_file(&b.dir, name, csv.as_bytes())?;
            }
            print!("{}", rendered.text);
        }
        Command::Plotdata { bundle, which, form } => {
            let kind = match which {
                PlotArg::IndexVsPremium => PlotKind::IndexVsPremium,
                PlotArg::Forecasts => PlotKind::Forecasts,
                PlotArg::Weights => PlotKind::Weights,
            };
            let form = match form {
                FormArg::OneState => ModelForm::OneState,
                FormArg::Switching => ModelForm::Switching,
            };
            let b = Bundle::open(&bundle)?;
            let plot = plotdata::build_from_dir(&b.dir, kind, form)?;
            let name = match form {
                ModelForm::Switching => kind.file_name().to_string(),
                ModelForm::OneState => kind.file_name().replace(".csv", "_one_state.csv"),
            };
            let path = aei_cli::bundle::write_file(&b.dir, &name, &plot.csv)?;
            println!("wrote {}", path.display());
            if let Some(s) = plot.summary {
                println!(
                    "months = {}, corr(f_pls, f_fc) = {:.4}, var(f_pls) = {:.6}, var(f_fc) = {:.6}",
                    s.months, s.correlation, s.variance_pls, s.variance_fc
                );
            }
        }
        Command::Synth {
            out,
            name,
            seed,
            start,
            end,
            initial_end,
            fc_min_initial,
        } => {
            let window = SampleWindow::from_yyyymm(start as i64, end as i64)
                .map_err(|e| CliError::Config(format!("synthetic window: {e}")))?;
            let cfg = SyntheticConfig {
                seed,
                ..SyntheticConfig::default()
            };
            let files = write_synthetic(&out, &name, &cfg, &window, initial_end, fc_min_initial)?;
            println!("wrote {}, {} and {}", files.data.display(), files.recession.display(), files.config.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
