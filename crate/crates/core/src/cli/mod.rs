// Copyright 2026 The ctap-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! The `sim` command line.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 usage error (including
//! an unknown subcommand), 3 configuration error, 4 runtime invariant
//! violation. Failures print exactly one line on stderr:
//!
//! ```text
//! error: code=3 kind=config message="t_max_ns: required for kind run"
//! ```

pub mod config;
pub mod plot;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::experiments::{
    self, compare_orderings, disorder_monte_carlo_with, fmt_float, run_transport,
    sweep_error_surface_with, write_disorder_row, write_metadata, write_sweep_row,
    write_trajectory, Scheme, DISORDER_HEADER, SWEEP_HEADER,
};
use crate::spectra::analytic_ctap3_states;
use config::{ConfigError, Experiment, ExperimentConfig, Kind};

pub const THREADS_ENV: &str = "CTAP_SIM_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "sim",
    about = "Coherent transport by adiabatic passage on donor chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single transport run: trajectory CSV and a summary line.
    Run(Common),
    /// Transfer-error surface over (gamma, t_max).
    Sweep(Common),
    /// Tunnelling-rate disorder Monte Carlo.
    Disorder(Common),
    /// Counter-intuitive vs intuitive ordering at equal parameters.
    Compare(Common),
    /// Analytic three-site dressed states; no simulation.
    Darkstate(DarkArgs),
    /// Print the version.
    Version,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment config.
    #[arg(short = 'c', long)]
    config: PathBuf,
    /// Also write SVG plots next to the CSV output.
    #[arg(long)]
    plot: bool,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed override for configs that carry one.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads, 0 for automatic. Falls back to $CTAP_SIM_THREADS.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct DarkArgs {
    /// JSON config of kind darkstate, instead of the flags below.
    #[arg(short = 'c', long, conflicts_with_all = ["o12", "o23", "delta"])]
    config: Option<PathBuf>,
    #[arg(
        long,
        allow_negative_numbers = true,
        required_unless_present = "config"
    )]
    o12: Option<f64>,
    #[arg(
        long,
        allow_negative_numbers = true,
        required_unless_present = "config"
    )]
    o23: Option<f64>,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    delta: f64,
}

#[derive(Debug)]
struct Failure {
    code: i32,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Self {
        Failure {
            code,
            kind,
            message: message.into(),
        }
    }

    fn line(&self) -> String {
        let msg = serde_json::to_string(&self.message).expect("string serializes");
        format!("error: code={} kind={} message={msg}", self.code, self.kind)
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::new(3, "config", e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvariantViolation { .. } => Failure::new(4, "invariant", e.to_string()),
            Error::Io(_) => Failure::new(1, "io", e.to_string()),
            _ => Failure::new(3, "config", e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(1, "io", e.to_string())
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, S>(args: I, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                let _ = write!(err, "{e}");
                return 2;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("usage error");
            let msg = first.trim_start_matches("error: ").to_string();
            let _ = writeln!(err, "{}", Failure::new(2, "usage", msg).line());
            return 2;
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(f) => {
            let _ = writeln!(err, "{}", f.line());
            f.code
        }
    }
}

fn dispatch(
    cli: Cli,
    out: &mut (dyn Write + Send),
    err: &mut (dyn Write + Send),
) -> Result<(), Failure> {
    let (kind, common) = match cli.command {
        Command::Version => {
            writeln!(out, "sim {}", experiments::VERSION)?;
            return Ok(());
        }
        Command::Darkstate(d) => return darkstate(d, out),
        Command::Run(c) => (Kind::Run, c),
        Command::Sweep(c) => (Kind::Sweep, c),
        Command::Disorder(c) => (Kind::Disorder, c),
        Command::Compare(c) => (Kind::Compare, c),
    };
    let mut cfg = config::parse_config_file(&common.config)?;
    let found = cfg.experiment.kind();
    if found != kind {
        return Err(Failure::new(
            3,
            "config",
            format!(
                "kind: config is {} but the subcommand is {}",
                found.as_str(),
                kind.as_str()
            ),
        ));
    }
    if let Some(dir) = common.out {
        cfg.out_dir = dir;
    }
    cfg.plot |= common.plot;
    if let Some(seed) = common.seed {
        match &mut cfg.experiment {
            Experiment::Sweep(s) => s.seed = seed,
            Experiment::Disorder(d) => d.seed = seed,
            _ => {}
        }
    }
    let threads = match common.threads {
        Some(n) => n,
        None => match std::env::var(THREADS_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| {
                Failure::new(
                    3,
                    "config",
                    format!("{THREADS_ENV}: not a thread count: {v:?}"),
                )
            })?,
            Err(_) => 0,
        },
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::new(1, "runtime", e.to_string()))?;
    fs::create_dir_all(&cfg.out_dir)?;
    pool.install(|| execute(&cfg, out, err))
}

/// Metadata written at the top of every output file.
fn metadata(cfg: &ExperimentConfig) -> Vec<(&'static str, String)> {
    let mut m = vec![
        ("ctap-sim version", experiments::VERSION.to_string()),
        ("kind", cfg.experiment.kind().as_str().to_string()),
    ];
    let run = match &cfg.experiment {
        Experiment::Run(r) => Some((r, None)),
        Experiment::Sweep(s) => Some((&s.base, Some(s.seed))),
        Experiment::Disorder(d) => Some((&d.base, Some(d.seed))),
        _ => None,
    };
    if let Some((r, seed)) = run {
        m.push(("scheme", r.scheme.name().to_string()));
        m.push(("n_sites", r.n_sites().to_string()));
        m.push(("omega_max_rad_ns", fmt_float(r.omega_max)));
        if let Some(s) = seed {
            m.push(("seed", s.to_string()));
        }
        if let Scheme::Ctapn(_) = r.scheme {
            m.push((
                "geometry",
                "30 nm end-donor spacings, 20 nm between central donors (label only)".into(),
            ));
        }
    }
    let mut echo = config::to_raw(cfg);
    echo.out_dir = None;
    echo.plot = None;
    m.push((
        "config",
        serde_json::to_string(&echo).expect("config serializes"),
    ));
    m
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::new(1, "io", format!("{}: {e}", path.display())))
}

fn execute(
    cfg: &ExperimentConfig,
    out: &mut (dyn Write + Send),
    err: &mut (dyn Write + Send),
) -> Result<(), Failure> {
    let meta = metadata(cfg);
    let dir = &cfg.out_dir;
    match &cfg.experiment {
        Experiment::Run(rc) => {
            let r = run_transport(rc)?;
            let mut w = create(&dir.join("run.csv"))?;
            write_metadata(&mut w, &meta)?;
            write_trajectory(&mut w, &r.trajectory, r.profile.as_ref())?;
            w.flush()?;
            if cfg.plot {
                let n = rc.n_sites();
                let series = (0..n)
                    .map(|k| plot::Series {
                        label: format!("site {}", k + 1),
                        points: r
                            .trajectory
                            .times
                            .iter()
                            .zip(&r.trajectory.populations)
                            .map(|(t, p)| (*t, p[k]))
                            .collect(),
                    })
                    .collect();
                let chart = plot::Chart {
                    title: format!("{} populations", rc.scheme.name()),
                    x_label: "t (ns)".into(),
                    y_label: "population".into(),
                    x_axis: plot::Axis::Linear,
                    y_axis: plot::Axis::Linear,
                    series,
                };
                fs::write(dir.join("run.svg"), plot::render(&chart))?;
            }
            let mut line = format!(
                "error={} max_mid_pop={} max_adiab={}",
                fmt_float(r.transfer_error),
                fmt_float(r.max_mid_population),
                fmt_float(r.max_adiabaticity().unwrap_or(f64::NAN))
            );
            if let Some(p) = r.spin_phase_error() {
                line.push_str(&format!(" spin_phase_error={}", fmt_float(p)));
            }
            writeln!(out, "{line}")?;
            Ok(())
        }
        Experiment::Sweep(sc) => {
            let mut w = create(&dir.join("sweep.csv"))?;
            write_metadata(&mut w, &meta)?;
            writeln!(w, "{SWEEP_HEADER}")?;
            let total = sc.n_points();
            let res = sweep_error_surface_with(sc, |i, rec| {
                write_sweep_row(&mut w, i, rec)?;
                w.flush()?;
                writeln!(err, "point {}/{total}", i + 1)
            })?;
            if cfg.plot {
                let m = sc.t_max_grid.len();
                let series = sc
                    .gamma_grid
                    .iter()
                    .enumerate()
                    .map(|(gi, g)| plot::Series {
                        label: format!("gamma={g:.3e}"),
                        points: (0..m)
                            .map(|ti| {
                                let r = res.at(gi, ti, m);
                                (r.t_max, r.error)
                            })
                            .collect(),
                    })
                    .collect();
                let chart = plot::Chart {
                    title: format!(
                        "{} transfer error (n={})",
                        sc.base.scheme.name(),
                        sc.base.n_sites()
                    ),
                    x_label: "t_max (ns)".into(),
                    y_label: "transfer error".into(),
                    x_axis: plot::Axis::Log,
                    y_axis: plot::Axis::Log,
                    series,
                };
                fs::write(dir.join("sweep.svg"), plot::render(&chart))?;
            }
            let failed = res.records.iter().filter(|r| r.failure.is_some()).count();
            let adiabatic = res.records.iter().filter(|r| r.adiabatic).count();
            writeln!(
                out,
                "points={} failed={failed} adiabatic={adiabatic}",
                res.records.len()
            )?;
            if failed > 0 {
                return Err(Failure::new(
                    4,
                    "invariant",
                    format!("{failed} of {total} sweep points failed"),
                ));
            }
            Ok(())
        }
        Experiment::Disorder(dc) => {
            let mut w = create(&dir.join("disorder.csv"))?;
            write_metadata(&mut w, &meta)?;
            writeln!(w, "{DISORDER_HEADER}")?;
            let total = dc.trials;
            let stats = disorder_monte_carlo_with(dc, |i, t| {
                write_disorder_row(&mut w, t)?;
                w.flush()?;
                writeln!(err, "trial {}/{total}", i + 1)
            })?;
            if cfg.plot {
                let chart = plot::Chart {
                    title: format!("disorder sigma={}", dc.sigma),
                    x_label: "trial".into(),
                    y_label: "transfer error".into(),
                    x_axis: plot::Axis::Linear,
                    y_axis: plot::Axis::Log,
                    series: vec![plot::Series {
                        label: "error".into(),
                        points: stats
                            .trials
                            .iter()
                            .map(|t| (t.index as f64, t.error))
                            .collect(),
                    }],
                };
                fs::write(dir.join("disorder.svg"), plot::render(&chart))?;
            }
            writeln!(
                out,
                "mean={} max={} std={} failures={}",
                fmt_float(stats.mean),
                fmt_float(stats.max),
                fmt_float(stats.std),
                stats.failures
            )?;
            if stats.failures > 0 {
                return Err(Failure::new(
                    4,
                    "invariant",
                    format!("{} of {total} trials failed", stats.failures),
                ));
            }
            Ok(())
        }
        Experiment::Compare {
            omega_max,
            t_max,
            gamma,
        } => {
            let c = compare_orderings(*omega_max, *t_max, *gamma)?;
            let mut w = create(&dir.join("compare.csv"))?;
            write_metadata(&mut w, &meta)?;
            writeln!(w, "scheme,error,max_mid_pop")?;
            for (name, m) in [("ctap3", c.ctap3), ("intuitive3", c.intuitive3)] {
                writeln!(
                    w,
                    "{name},{},{}",
                    fmt_float(m.error),
                    fmt_float(m.max_mid_population)
                )?;
                writeln!(
                    out,
                    "{name} error={} max_mid_pop={}",
                    fmt_float(m.error),
                    fmt_float(m.max_mid_population)
                )?;
            }
            w.flush()?;
            Ok(())
        }
        Experiment::Darkstate { o12, o23, delta } => print_darkstate(*o12, *o23, *delta, out),
    }
}

fn darkstate(d: DarkArgs, out: &mut (dyn Write + Send)) -> Result<(), Failure> {
    let (o12, o23, delta) = match d.config {
        Some(path) => match config::parse_config_file(&path)?.experiment {
            Experiment::Darkstate { o12, o23, delta } => (o12, o23, delta),
            other => {
                return Err(Failure::new(
                    3,
                    "config",
                    format!(
                        "kind: config is {} but the subcommand is darkstate",
                        other.kind().as_str()
                    ),
                ))
            }
        },
        None => (
            d.o12.expect("required by clap"),
            d.o23.expect("required by clap"),
            d.delta,
        ),
    };
    print_darkstate(o12, o23, delta, out)
}

fn print_darkstate(
    o12: f64,
    o23: f64,
    delta: f64,
    out: &mut (dyn Write + Send),
) -> Result<(), Failure> {
    let s = analytic_ctap3_states(o12, o23, delta)?;
    let vec = |v: &nalgebra::DVector<num_complex::Complex<f64>>| {
        // + 0.0 turns -0.0 into 0.0
        let parts: Vec<String> = v.iter().map(|z| fmt_float(z.re + 0.0)).collect();
        format!("({})", parts.join(","))
    };
    writeln!(out, "theta1={}", fmt_float(s.theta1))?;
    writeln!(out, "theta2={}", fmt_float(s.theta2))?;
    writeln!(out, "e_plus={}", fmt_float(s.e_plus))?;
    writeln!(out, "e_zero={}", fmt_float(s.e_zero))?;
    writeln!(out, "e_minus={}", fmt_float(s.e_minus))?;
    writeln!(out, "d_plus={}", vec(&s.d_plus))?;
    writeln!(out, "d_zero={}", vec(&s.d_zero))?;
    writeln!(out, "d_minus={}", vec(&s.d_minus))?;
    Ok(())
}
