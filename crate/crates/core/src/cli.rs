//! Command-line front end.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{
    empirical_crossover, sensitivity_grid, DEFAULT_BASE_RATE, DEFAULT_BASE_YEAR, DEFAULT_DELTAS,
    DEFAULT_MULTIPLES,
};
use crate::config::{load_config, ScenarioConfig};
use crate::error::{Error, Result};
use crate::evolution::{run_scenario, run_scenario_with_workers, ResultSet};
use crate::modes::{adjust_reference_cost, builtin_modes, ModeId};
use crate::report::{render_scatter_svg, write_records_csv, PlotSpec};

#[derive(Debug, Parser)]
#[command(
    name = "freightsim",
    version,
    about = "Monte-Carlo intermodal freight cost simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Inspect the builtin transport modes.
    Modes {
        #[command(subcommand)]
        action: ModesAction,
    },
    /// Run a scenario and write its trip records.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_csv: PathBuf,
        #[arg(long, requires = "focus")]
        out_svg: Option<PathBuf>,
        /// Mode whose distance share colours the scatter points.
        #[arg(long, requires = "out_svg")]
        focus: Option<String>,
        /// Worker threads (default: all cores). Output does not depend on it.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Pairwise scenario of MODE against auto_MODE, with cross-over years.
    Crossover {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        mode: String,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Cross-over year grid over cost multiples and rate deltas.
    Sensitivity {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_MULTIPLES.to_vec())]
        multiples: Vec<f64>,
        /// Rate deltas as fractions per year, e.g. 0.02,0.04.
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_DELTAS.to_vec())]
        deltas: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_BASE_RATE)]
        base_rate: f64,
        #[arg(long, default_value_t = DEFAULT_BASE_YEAR)]
        base_year: i32,
        #[arg(long)]
        json: bool,
    },
    /// Compound a reference cost forward to another year.
    Calibrate {
        #[arg(long)]
        value: f64,
        #[arg(long)]
        rate: f64,
        #[arg(long = "from")]
        from_year: i32,
        #[arg(long = "to")]
        to_year: i32,
    },
}

#[derive(Debug, Subcommand)]
enum ModesAction {
    /// Print the dataset with provenance notes.
    List {
        #[arg(long)]
        json: bool,
    },
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code: 0 on success, 1 on runtime failure, 2 on bad usage.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        // reader went away, e.g. piped into `head`
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<()> {
    match command {
        Command::Modes {
            action: ModesAction::List { json },
        } => {
            let reg = builtin_modes();
            if json {
                writeln!(out, "{}", reg.to_json()?)?;
                return Ok(());
            }
            writeln!(
                out,
                "{:<12} {:>10} {:>6} {:>8} {:>6}",
                "id", "$/t-km", "year", "rate/yr", "auto"
            )?;
            for m in &reg.modes {
                writeln!(
                    out,
                    "{:<12} {:>10} {:>6} {:>7.1}% {:>6}",
                    m.id.as_str(),
                    m.base_cost_mean,
                    m.base_year,
                    m.improvement_rate_mean * 100.0,
                    if m.autonomous { "yes" } else { "no" }
                )?;
                if let Some(p) = &m.provenance {
                    writeln!(out, "    {p}")?;
                }
            }
            Ok(())
        }
        Command::Simulate {
            config,
            out_csv,
            out_svg,
            focus,
            workers,
        } => {
            let config = read_config(&config)?;
            let results = simulate(&config, workers)?;
            write_file(&out_csv, |w| write_records_csv(&results, w))?;
            if let (Some(path), Some(focus)) = (out_svg, focus) {
                let focus = ModeId::new(&focus);
                if !results.has_mode(&focus) {
                    return Err(Error::UnknownMode(focus.to_string()));
                }
                write_file(&path, |w| {
                    render_scatter_svg(&results, &PlotSpec::new(focus.clone()), w)
                })?;
            }
            writeln!(
                out,
                "{}: {} records ({} years x {} iterations), fingerprint {}",
                config.name,
                results.records.len(),
                config.n_years(),
                config.iterations,
                results.fingerprint
            )?;
            Ok(())
        }
        Command::Crossover {
            config,
            mode,
            json,
            workers,
        } => {
            let mode = ModeId::new(&mode);
            let auto = mode.autonomous();
            let mut config = read_config(&config)?;
            config.enabled_modes = vec![mode.clone(), auto.clone()];
            config.validate(&builtin_modes())?;
            let results = simulate(&config, workers)?;
            let report = empirical_crossover(&results, &mode, &auto)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
            } else {
                write!(out, "{report}")?;
            }
            Ok(())
        }
        Command::Sensitivity {
            multiples,
            deltas,
            base_rate,
            base_year,
            json,
        } => {
            let grid = sensitivity_grid(&multiples, &deltas, base_rate, base_year)?;
            if json {
                writeln!(out, "{}", serde_json::to_string_pretty(&grid)?)?;
            } else {
                write!(out, "{grid}")?;
            }
            Ok(())
        }
        Command::Calibrate {
            value,
            rate,
            from_year,
            to_year,
        } => {
            let adjusted = adjust_reference_cost(value, rate, from_year, to_year)?;
            writeln!(out, "{}", four_significant(adjusted))?;
            Ok(())
        }
    }
}

fn four_significant(v: f64) -> String {
    let decimals = (3 - v.abs().log10().floor() as i32).max(0) as usize;
    format!("{v:.decimals$}")
}

fn read_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path)?;
    load_config(&text)
}

fn simulate(config: &ScenarioConfig, workers: Option<usize>) -> Result<ResultSet> {
    let reg = builtin_modes();
    match workers {
        Some(n) => run_scenario_with_workers(config, &reg, n),
        None => run_scenario(config, &reg),
    }
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}
