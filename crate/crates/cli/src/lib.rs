//! `fda` command-line front end.
//!
//! Every subcommand writes to `--out` or standard output. Exit status is 0
//! on success, 1 on usage or validation errors and 2 when `verify` sees a
//! property behave differently from what the physics predicts.

pub mod units;
pub mod verify;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use fda_core::analysis::estimate_focus_velocity;
use fda_core::config::{load_config_file, ModelKind, DEFAULT_WINDOW_NS};
use fda_core::grid_io::sig9;
use fda_core::{
    compare_models, find_focus, read_grid, sweep_range_angle, sweep_time_range, write_grid,
    AxisKind, Execution, SimulationConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_PROPERTY: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "fda",
    version,
    about = "Frequency diverse array beampattern simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Render a normalized power grid.
    #[command(subcommand)]
    Simulate(Simulate),
    /// Extract the per-slice focus from a grid file and fit its velocity.
    Focus {
        #[arg(long)]
        grid: PathBuf,
        /// Peaks below this level (dB) are left out of the velocity fit.
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        min_peak_db: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the causality, invariance and constancy checks.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        /// Largest light-cone shift for the invariance probes.
        #[arg(long, default_value = "50ns", value_parser = units::parse_time, allow_hyphen_values = true)]
        max_shift: f64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        serial: bool,
    },
    /// Paired naive and causal time-range grids with their dB difference.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Angle of the slice; defaults to the focus angle.
        #[arg(long, value_parser = units::parse_angle, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        serial: bool,
    },
}

#[derive(Debug, Subcommand)]
enum Simulate {
    /// Range-angle slice at a fixed time.
    RangeAngle {
        #[arg(long)]
        config: PathBuf,
        /// Observation time (`ns` or `s`; bare numbers are ns).
        #[arg(long, default_value = "0ns", value_parser = units::parse_time, allow_hyphen_values = true)]
        t: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        serial: bool,
    },
    /// Time-range slice at a fixed angle.
    TimeRange {
        #[arg(long)]
        config: PathBuf,
        /// Angle (`deg` or `rad`; bare numbers are degrees). Defaults to the
        /// focus angle.
        #[arg(long, value_parser = units::parse_angle, allow_hyphen_values = true)]
        theta: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        serial: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug)]
enum Failure {
    Invalid(String),
    Property(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Invalid(e.to_string())
    }
}

/// Runs the CLI with `argv` (program name first) and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(Failure::Invalid(msg)) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
        Err(Failure::Property(msg)) => {
            eprintln!("{msg}");
            EXIT_PROPERTY
        }
    }
}

fn execution(serial: bool) -> Execution {
    if serial {
        Execution::Serial
    } else {
        Execution::Parallel
    }
}

fn load(path: &Path) -> Result<SimulationConfig, Failure> {
    load_config_file(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

/// Buffers output and writes it in one go, so a failed run leaves no
/// partial file behind.
fn emit(out: Option<&Path>, body: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(
                File::create(path)
                    .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?,
            );
            w.write_all(body)?;
            w.flush()?;
        }
        None => {
            let mut lock = io::stdout().lock();
            match lock.write_all(body).and_then(|_| lock.flush()) {
                // A closed pipe (`fda ... | head`) is not an error.
                Err(e) if e.kind() != io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Simulate(Simulate::RangeAngle {
            config,
            t,
            out,
            serial,
        }) => {
            let cfg = load(&config)?;
            let grid = sweep_range_angle(
                &cfg.scenario()?,
                cfg.range_axis(),
                cfg.angle_axis(),
                t,
                execution(serial),
            )?;
            let mut buf = Vec::new();
            write_grid(&grid, &mut buf)?;
            emit(out.as_deref(), &buf)
        }
        Command::Simulate(Simulate::TimeRange {
            config,
            theta,
            out,
            serial,
        }) => {
            let cfg = load(&config)?;
            let theta = theta.unwrap_or_else(|| cfg.theta0());
            let grid = sweep_time_range(
                &cfg.scenario()?,
                cfg.time_axis(),
                cfg.range_axis(),
                theta,
                execution(serial),
            )?;
            let mut buf = Vec::new();
            write_grid(&grid, &mut buf)?;
            emit(out.as_deref(), &buf)
        }
        Command::Focus {
            grid,
            min_peak_db,
            format,
            out,
        } => {
            let file = File::open(&grid)
                .map_err(|e| Failure::Invalid(format!("{}: {e}", grid.display())))?;
            let grid = read_grid(BufReader::new(file))?;
            focus(&grid, min_peak_db, format, out.as_deref())
        }
        Command::Verify {
            config,
            samples,
            max_shift,
            format,
            out,
            serial,
        } => {
            let cfg = load(&config)?;
            let opts = verify::VerifyOptions {
                samples,
                max_shift,
                execution: execution(serial),
            };
            let outcomes = verify::run(&cfg, &opts).map_err(Failure::Invalid)?;
            let body = match format {
                Format::Text => verify::render_text(&outcomes),
                Format::Json => verify::render_json(&outcomes, &cfg, &opts),
            };
            emit(out.as_deref(), body.as_bytes())?;
            let unexpected: Vec<&str> = outcomes
                .iter()
                .filter(|o| !o.as_expected())
                .map(|o| o.name.as_str())
                .collect();
            if unexpected.is_empty() {
                Ok(())
            } else {
                Err(Failure::Property(format!(
                    "unexpected outcome: {}",
                    unexpected.join("; ")
                )))
            }
        }
        Command::Compare {
            config,
            theta,
            out,
            serial,
        } => {
            let cfg = load(&config)?;
            let theta = theta.unwrap_or_else(|| cfg.theta0());
            compare(&cfg, theta, execution(serial), out.as_deref())
        }
    }
}

fn focus(
    grid: &fda_core::PowerGrid,
    min_peak_db: f64,
    format: Format,
    out: Option<&Path>,
) -> Result<(), Failure> {
    // Time-range grids are traced slice by slice; anything else has a single
    // global peak.
    let time_sliced = grid.axis(AxisKind::Time).is_some();
    let slice_axis = if time_sliced {
        AxisKind::Time
    } else {
        grid.fixed.kind
    };
    let traj = find_focus(grid, slice_axis)?;
    let ridge = traj.main_ridge(min_peak_db);
    let velocity = if time_sliced {
        let c = grid
            .metadata
            .pointer("/array/c_m_per_s")
            .and_then(|v| v.as_f64())
            .unwrap_or(fda_core::model::SPEED_OF_LIGHT);
        Some(estimate_focus_velocity(&ridge, c).map_err(|e| Failure::Invalid(e.to_string()))?)
    } else {
        None
    };

    let body = match format {
        Format::Json => {
            let doc = serde_json::json!({
                "trajectory": traj,
                "min_peak_db": min_peak_db,
                "ridge_points": ridge.points.len(),
                "velocity": velocity,
            });
            let mut s = serde_json::to_string_pretty(&doc)?;
            s.push('\n');
            s
        }
        Format::Text => {
            let mut s = String::new();
            if let Some(v) = &velocity {
                s.push_str(&format!("# {v}\n"));
            }
            if !traj.omitted.is_empty() {
                s.push_str(&format!(
                    "# {} slices without power omitted\n",
                    traj.omitted.len()
                ));
            }
            let columns: Vec<&str> = traj.points[0]
                .location
                .iter()
                .map(|(k, _)| k.column())
                .collect();
            s.push_str(&format!(
                "{},{},peak_db,ridge\n",
                slice_axis.column(),
                columns.join(",")
            ));
            for p in &traj.points {
                let coords: Vec<String> = p
                    .location
                    .iter()
                    .map(|(k, v)| sig9(k.to_display(*v)))
                    .collect();
                let on_ridge = !p.on_edge && p.peak_db >= min_peak_db;
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    sig9(slice_axis.to_display(p.slice)),
                    coords.join(","),
                    p.peak_db,
                    u8::from(on_ridge)
                ));
            }
            s
        }
    };
    emit(out, body.as_bytes())
}

fn compare(
    cfg: &SimulationConfig,
    theta: f64,
    exec: Execution,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let scenario = cfg.scenario_for(ModelKind::Causal)?;
    let r1 = cfg.focus_range()?;
    let window = cfg.modulation_window();
    let (time, range) = (cfg.time_axis(), cfg.range_axis());
    let cmp = compare_models(&scenario, r1, window, time, range, theta, exec)?;

    let header = serde_json::json!({
        "naive_reference_magnitude": cmp.naive.reference_magnitude,
        "causal_reference_magnitude": cmp.causal.reference_magnitude,
        "floor_db": cmp.naive.floor_db,
        "theta_deg": theta.to_degrees(),
        "r1_m": r1,
        "T_ns": cfg.model.window_ns.unwrap_or(DEFAULT_WINDOW_NS),
    });
    let mut s = String::new();
    s.push_str(&format!(
        "# config: {}\n",
        serde_json::to_string(&scenario.metadata)?
    ));
    s.push_str(&format!("# compare: {header}\n"));
    s.push_str("t_ns,r_m,naive_db,causal_db,diff_db\n");
    let cell = |ok: bool, v: f64| if ok { v.to_string() } else { "nan".into() };
    let r_labels: Vec<String> = range.values().iter().map(|r| sig9(*r)).collect();
    for (i, t) in time.values().iter().enumerate() {
        let t_label = sig9(AxisKind::Time.to_display(*t));
        for (j, r_label) in r_labels.iter().enumerate() {
            let k = cmp.naive.index(i, j);
            s.push_str(&format!(
                "{t_label},{r_label},{},{},{}\n",
                cell(cmp.naive.valid_mask[k], cmp.naive.values[k]),
                cell(cmp.causal.valid_mask[k], cmp.causal.values[k]),
                cell(cmp.difference_valid[k], cmp.difference[k]),
            ));
        }
    }
    emit(out, s.as_bytes())
}
