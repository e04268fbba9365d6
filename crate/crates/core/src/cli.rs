//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 runtime
//! error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::channel::FadingModel;
use crate::estimation::FilterKind;
use crate::harness::output::write_text;
use crate::harness::{
    attach_cn0_csv, emit_svg_plot, monte_carlo, read_epoch_csv, run_scenario, summary_json, write_cn0_csv,
    write_epoch_csv, write_summary_json, PlotSeries,
};
use crate::scenario::{load_config_file, ScenarioConfig};
use crate::tracking::TrackingMode;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "lmsnav",
    version,
    about = "GPS vector-tracking receiver simulation over fading channels"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario and write epochs.csv, cn0.csv and summary.json.
    Run(RunArgs),
    /// Run seeded repetitions of a scenario and aggregate the error statistics.
    Montecarlo(MonteCarloArgs),
    /// Draw an SVG chart from an epochs.csv file.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FilterArg {
    Ekf,
    Ukf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChannelArg {
    None,
    Rayleigh,
    Rician,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TrackingArg {
    Vector,
    Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
enum SeriesArg {
    ErrorEnu,
    RaimStatistic,
    Cn0,
}

/// Settings that override the scenario file.
#[derive(Debug, Args)]
struct Overrides {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, value_enum)]
    filter: Option<FilterArg>,
    #[arg(long, value_enum)]
    raim: Option<Switch>,
    #[arg(long, value_enum)]
    fde: Option<Switch>,
    /// Fading model of every link.
    #[arg(long, value_enum)]
    channel: Option<ChannelArg>,
    /// Code tracking architecture.
    #[arg(long, value_enum)]
    tracking: Option<TrackingArg>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MonteCarloArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long)]
    runs: usize,
    /// Base seed; run i uses seed + i. Defaults to the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    series: SeriesArg,
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn apply_overrides(o: &Overrides, seed: Option<u64>) -> Result<ScenarioConfig, Failure> {
    let mut cfg = load_config_file(&o.config).map_err(runtime)?;
    if let Some(f) = o.filter {
        cfg.filter.kind = match f {
            FilterArg::Ekf => FilterKind::Ekf,
            FilterArg::Ukf => FilterKind::Ukf,
        };
    }
    if let Some(c) = o.channel {
        cfg.channel.model = match c {
            ChannelArg::None => FadingModel::None,
            ChannelArg::Rayleigh => FadingModel::Rayleigh,
            ChannelArg::Rician => FadingModel::Rician,
        };
    }
    if let Some(t) = o.tracking {
        cfg.tracking.mode = match t {
            TrackingArg::Vector => TrackingMode::Vector,
            TrackingArg::Scalar => TrackingMode::Scalar,
        };
    }
    match o.raim {
        Some(Switch::On) => cfg.integrity.raim = true,
        Some(Switch::Off) => {
            if o.fde == Some(Switch::On) {
                return Err(Failure::Usage(
                    "--fde on requires RAIM; it conflicts with --raim off".into(),
                ));
            }
            cfg.integrity.raim = false;
            cfg.integrity.fde = false;
        }
        None => {}
    }
    match o.fde {
        Some(Switch::On) if !cfg.integrity.raim => {
            return Err(Failure::Usage("--fde on requires RAIM (use --raim on)".into()));
        }
        Some(s) => cfg.integrity.fde = s == Switch::On,
        None => {}
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(runtime)?;
    Ok(cfg)
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", dir.display())))
}

fn cmd_run(a: &RunArgs) -> Result<(), Failure> {
    let cfg = apply_overrides(&a.overrides, a.seed)?;
    let (records, summary) = run_scenario(&cfg).map_err(runtime)?;
    ensure_dir(&a.out)?;
    write_epoch_csv(&records, &a.out.join("epochs.csv")).map_err(runtime)?;
    write_cn0_csv(&records, &a.out.join("cn0.csv")).map_err(runtime)?;
    write_summary_json(&summary, &a.out.join("summary.json")).map_err(runtime)?;
    print!("{}", summary_json(&summary));
    Ok(())
}

fn cmd_montecarlo(a: &MonteCarloArgs) -> Result<(), Failure> {
    if a.runs == 0 {
        return Err(Failure::Usage("--runs must be at least 1".into()));
    }
    let cfg = apply_overrides(&a.overrides, None)?;
    let base = a.seed.unwrap_or(cfg.seed);
    let report = monte_carlo(&cfg, a.runs, base, a.jobs);
    ensure_dir(&a.out)?;
    let mut text = serde_json::to_string_pretty(&report).map_err(runtime)?;
    text.push('\n');
    write_text(&a.out.join("montecarlo.json"), &text).map_err(runtime)?;
    println!(
        "{} of {} runs succeeded (seeds {}..{})",
        report.runs.len(),
        a.runs,
        base,
        base + a.runs as u64 - 1
    );
    for (name, agg) in &report.aggregates {
        println!(
            "{name:>13}: median {:.4}  mean {:.4}  std {:.4}",
            agg.median, agg.mean, agg.std
        );
    }
    for f in &report.failures {
        eprintln!("seed {} failed: {}", f.seed, f.error);
    }
    if report.runs.is_empty() {
        return Err(Failure::Runtime("every run failed".into()));
    }
    Ok(())
}

fn cmd_plot(a: &PlotArgs) -> Result<(), Failure> {
    let mut records = read_epoch_csv(&a.input).map_err(runtime)?;
    let series = match a.series {
        SeriesArg::ErrorEnu => PlotSeries::ErrorEnu,
        SeriesArg::RaimStatistic => PlotSeries::RaimStatistic,
        SeriesArg::Cn0 => {
            let companion = a.input.with_file_name("cn0.csv");
            attach_cn0_csv(&mut records, &companion).map_err(runtime)?;
            PlotSeries::Cn0
        }
    };
    emit_svg_plot(&records, series, &a.out).map_err(runtime)
}

/// Parses `args` (program name first) and runs the command.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Montecarlo(a) => cmd_montecarlo(a),
        Command::Plot(a) => cmd_plot(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            EXIT_RUNTIME
        }
    }
}
