// Copyright 2026 The ctap-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Transport runs, error-surface sweeps, ordering comparison and disorder
//! Monte Carlo, plus their CSV encodings.
//!
//! Sweeps and Monte Carlo trials run in parallel on the current rayon pool.
//! Results are handed to the caller strictly in index order, so outputs do
//! not depend on the thread count.

use std::io::{self, Write};

use nalgebra::DVector;
use num_complex::Complex;
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::chain::{ChainSpec, Spin, SpinMode};
use crate::dynamics::{
    evolve, rk4_plan, step_bound, transfer_error, DensityMatrix, IntegratorConfig, Method,
    Trajectory,
};
use crate::error::{Error, Result};
use crate::pulses::{ctapn_schedule, three_site, Envelope, PulseSchedule};
use crate::scalar::{real, Scalar};
use crate::spectra::{adiabaticity_profile, AdiabaticityProfile, MIN_PROFILE_SAMPLES};

/// Points with `max_adiab` below this count as adiabatic.
pub const ADIABATIC_THRESHOLD: f64 = 0.01;

/// `|alpha|^2 + |beta|^2` must equal one within this.
pub const SPIN_NORM_TOL: f64 = 1e-12;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Ctap3,
    Intuitive3,
    /// Straddling scheme on an odd chain of at least five sites.
    Ctapn(usize),
}

impl Scheme {
    pub fn n_sites(self) -> usize {
        match self {
            Scheme::Ctap3 | Scheme::Intuitive3 => 3,
            Scheme::Ctapn(n) => n,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Ctap3 => "ctap3",
            Scheme::Intuitive3 => "intuitive3",
            Scheme::Ctapn(_) => "ctapn",
        }
    }
}

/// One transport simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T: Scalar> {
    pub scheme: Scheme,
    /// End-link peak amplitude in rad/ns.
    pub omega_max: T,
    pub t_max: T,
    pub gamma: T,
    pub spin_mode: SpinMode,
    /// Initial spin amplitudes on the down and up states (site-spin mode only).
    pub alpha: Complex<T>,
    pub beta: Complex<T>,
    pub straddle_ratio: T,
    pub envelope: Envelope,
    pub integrator: IntegratorConfig<T>,
    /// Multipliers applied on top of the nominal link waveforms.
    pub link_scales: Option<Vec<T>>,
    /// Compute the adiabaticity metric alongside the dynamics.
    pub adiabaticity: bool,
}

impl<T: Scalar> RunConfig<T> {
    /// Defaults: `omega_max = 20 pi`, no dephasing, charge-only, spin down,
    /// straddle ratio 3 with a gaussian envelope.
    pub fn new(scheme: Scheme, t_max: T) -> Self {
        RunConfig {
            scheme,
            omega_max: T::lit(20.0) * T::PI(),
            t_max,
            gamma: T::zero(),
            spin_mode: SpinMode::ChargeOnly,
            alpha: real(T::one()),
            beta: real(T::zero()),
            straddle_ratio: T::lit(3.0),
            envelope: Envelope::Gaussian,
            integrator: IntegratorConfig::default(),
            link_scales: None,
            adiabaticity: true,
        }
    }

    pub fn n_sites(&self) -> usize {
        self.scheme.n_sites()
    }

    pub fn validate(&self) -> Result<()> {
        finite_nonneg("omega_max", self.omega_max)?;
        if !(self.t_max > T::zero()) || !self.t_max.is_finite() {
            return Err(Error::NonPositive {
                what: "t_max",
                value: self.t_max.to_f64_lossy(),
            });
        }
        if !(self.gamma >= T::zero()) {
            return Err(Error::NegativeDephasing(self.gamma.to_f64_lossy()));
        }
        let norm = self.alpha.norm_sqr() + self.beta.norm_sqr();
        if !(Float::abs(norm - T::one()) <= T::lit(SPIN_NORM_TOL)) {
            return Err(Error::SpinNormalization(norm.to_f64_lossy()));
        }
        if let Scheme::Ctapn(n) = self.scheme {
            if n < 5 || n % 2 == 0 {
                return Err(Error::InvalidStraddleSites(n));
            }
        }
        Ok(())
    }

    pub fn chain(&self) -> Result<ChainSpec<T>> {
        let n = self.n_sites();
        let mut base = vec![self.omega_max; n - 1];
        if let Scheme::Ctapn(_) = self.scheme {
            for b in &mut base[1..n - 2] {
                *b = self.omega_max * self.straddle_ratio;
            }
        }
        ChainSpec::new(n, vec![T::zero(); n], base, self.spin_mode)
    }

    /// Builds the schedule. The three-site schemes accept `omega_max = 0`
    /// (controls off), the straddling scheme does not.
    pub fn schedule(&self) -> Result<PulseSchedule<T>> {
        self.validate()?;
        let s = match self.scheme {
            Scheme::Ctap3 => three_site(self.omega_max, self.t_max, false)?,
            Scheme::Intuitive3 => three_site(self.omega_max, self.t_max, true)?,
            Scheme::Ctapn(n) => ctapn_schedule(
                n,
                self.omega_max,
                self.t_max,
                self.straddle_ratio,
                self.envelope,
            )?,
        };
        match &self.link_scales {
            Some(f) => s.with_link_scales(f),
            None => Ok(s),
        }
    }

    /// Spin part of the initial and target states.
    pub fn spinor(&self) -> [Complex<T>; 2] {
        [self.alpha, self.beta]
    }

    fn site_state(&self, spec: &ChainSpec<T>, site: usize) -> DVector<Complex<T>> {
        let mut v = DVector::from_element(spec.dimension(), real(T::zero()));
        match spec.spin_mode() {
            SpinMode::ChargeOnly => v[site] = real(T::one()),
            SpinMode::SiteSpin => {
                v[spec.basis_index(site, Spin::Down)] = self.alpha;
                v[spec.basis_index(site, Spin::Up)] = self.beta;
            }
        }
        v
    }
}

fn finite_nonneg<T: Scalar>(what: &'static str, v: T) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::NonFinite {
            what,
            value: v.to_f64_lossy(),
        });
    }
    if v < T::zero() {
        return Err(Error::NonPositive {
            what,
            value: v.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Number of samples the integrator will record for this schedule.
pub fn recorded_samples<T: Scalar>(
    schedule: &PulseSchedule<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<usize> {
    match cfg.method {
        Method::OracleExpm => Ok(cfg.samples + 1),
        Method::Rk4Fixed => rk4_plan(schedule, cfg).map(|(n, stride)| n / stride + 1),
    }
}

/// Adiabaticity profile on the integrator's sample grid (at least
/// [`MIN_PROFILE_SAMPLES`] points). `None` when the dark state is not
/// isolated somewhere in the window, e.g. with all controls off.
pub fn run_profile<T: Scalar>(
    spec: &ChainSpec<T>,
    schedule: &PulseSchedule<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<Option<AdiabaticityProfile<T>>> {
    let n = recorded_samples(schedule, cfg)?.max(MIN_PROFILE_SAMPLES);
    match adiabaticity_profile(spec, schedule, n) {
        Ok(p) => Ok(Some(p)),
        Err(Error::InvariantViolation { .. }) | Err(Error::NearDegenerate { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult<T: Scalar> {
    pub trajectory: Trajectory<T>,
    pub transfer_error: T,
    /// Largest population on any interior site over the whole run.
    pub max_mid_population: T,
    pub profile: Option<AdiabaticityProfile<T>>,
    /// `arg(rho[n down, n up])` of the final state; `None` in charge-only mode.
    pub final_spin_phase: Option<T>,
    /// `arg(alpha conj(beta))`; `None` in charge-only mode.
    pub initial_spin_phase: Option<T>,
}

impl<T: Scalar> RunResult<T> {
    pub fn max_adiabaticity(&self) -> Option<T> {
        self.profile.as_ref().map(|p| p.max_metric)
    }

    /// Wrapped phase change of the end-site spin coherence, in `[0, pi]`.
    pub fn spin_phase_error(&self) -> Option<T> {
        match (self.initial_spin_phase, self.final_spin_phase) {
            (Some(a), Some(b)) => Some(wrapped_distance(a, b)),
            _ => None,
        }
    }
}

/// Distance between two angles on the circle.
pub fn wrapped_distance<T: Scalar>(a: T, b: T) -> T {
    let tau = T::TAU();
    let d = Float::abs((b - a) % tau);
    Float::min(d, tau - d)
}

/// Largest interior-site population over a trajectory.
pub fn max_mid_population<T: Scalar>(traj: &Trajectory<T>) -> T {
    traj.populations.iter().fold(T::zero(), |m, p| {
        let n = p.len();
        p[1..n - 1].iter().fold(m, |m, v| Float::max(m, *v))
    })
}

/// Starts on site 1 with spin `alpha|down> + beta|up>` (or just site 1 in
/// charge-only mode) and measures the error against the same spin on the far
/// end site.
pub fn run_transport<T: Scalar>(cfg: &RunConfig<T>) -> Result<RunResult<T>> {
    let schedule = cfg.schedule()?;
    let spec = cfg.chain()?;
    let profile = if cfg.adiabaticity {
        run_profile(&spec, &schedule, &cfg.integrator)?
    } else {
        None
    };
    transport_with(cfg, &spec, &schedule, profile)
}

fn transport_with<T: Scalar>(
    cfg: &RunConfig<T>,
    spec: &ChainSpec<T>,
    schedule: &PulseSchedule<T>,
    profile: Option<AdiabaticityProfile<T>>,
) -> Result<RunResult<T>> {
    let n = spec.n_sites();
    let rho0 = DensityMatrix::pure(&cfg.site_state(spec, 0))?;
    let target = cfg.site_state(spec, n - 1);
    let trajectory = evolve(spec, schedule, &rho0, cfg.gamma, &cfg.integrator)?;
    let err = transfer_error(trajectory.final_state(), &target)?;
    let (initial_spin_phase, final_spin_phase) = match spec.spin_mode() {
        SpinMode::ChargeOnly => (None, None),
        SpinMode::SiteSpin => {
            let dn = spec.basis_index(n - 1, Spin::Down);
            let up = spec.basis_index(n - 1, Spin::Up);
            let c = trajectory.final_state().matrix()[(dn, up)];
            (Some((cfg.alpha * cfg.beta.conj()).arg()), Some(c.arg()))
        }
    };
    Ok(RunResult {
        max_mid_population: max_mid_population(&trajectory),
        transfer_error: err,
        trajectory,
        profile,
        final_spin_phase,
        initial_spin_phase,
    })
}

/// Error-surface sweep over `gamma_grid x t_max_grid`. The `t_max` and
/// `gamma` fields of `base` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig<T: Scalar> {
    pub base: RunConfig<T>,
    pub gamma_grid: Vec<T>,
    pub t_max_grid: Vec<T>,
    /// Recorded in the output metadata; the sweep itself is deterministic.
    pub seed: u64,
}

impl<T: Scalar> SweepConfig<T> {
    pub fn validate(&self) -> Result<()> {
        check_grid("gamma_grid", &self.gamma_grid)?;
        check_grid("t_max_grid", &self.t_max_grid)?;
        if self.gamma_grid[0] < T::zero() {
            return Err(Error::NegativeDephasing(self.gamma_grid[0].to_f64_lossy()));
        }
        let mut probe = self.base.clone();
        probe.t_max = self.t_max_grid[0];
        probe.gamma = T::zero();
        probe.validate()
    }

    pub fn n_points(&self) -> usize {
        self.gamma_grid.len() * self.t_max_grid.len()
    }

    /// Grid point `index` in gamma-major order: `(gamma, t_max)`.
    pub fn point(&self, index: usize) -> (T, T) {
        let m = self.t_max_grid.len();
        (self.gamma_grid[index / m], self.t_max_grid[index % m])
    }
}

fn check_grid<T: Scalar>(what: &'static str, grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::IntegratorConfig(format!("{what} is empty")));
    }
    if let Some(v) = grid.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what,
            value: v.to_f64_lossy(),
        });
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::IntegratorConfig(format!(
            "{what} must be strictly increasing"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord<T> {
    pub gamma: T,
    pub t_max: T,
    /// NaN when the point failed.
    pub error: T,
    pub max_mid_population: T,
    /// NaN when the metric is undefined.
    pub max_adiabaticity: T,
    pub adiabatic: bool,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult<T> {
    pub records: Vec<SweepRecord<T>>,
    pub scheme: Scheme,
    pub seed: u64,
    pub version: &'static str,
}

impl<T: Scalar> SweepResult<T> {
    /// Record at `(gamma index, t_max index)`.
    pub fn at(&self, gi: usize, ti: usize, n_t: usize) -> &SweepRecord<T> {
        &self.records[gi * n_t + ti]
    }
}

/// Runs every grid point and returns the records in gamma-major order.
pub fn sweep_error_surface<T: Scalar>(cfg: &SweepConfig<T>) -> Result<SweepResult<T>> {
    sweep_error_surface_with(cfg, |_, _| Ok(()))
}

/// As [`sweep_error_surface`], calling `sink(index, record)` for each point
/// in grid order as soon as it and all earlier points are done.
pub fn sweep_error_surface_with<T, F>(cfg: &SweepConfig<T>, mut sink: F) -> Result<SweepResult<T>>
where
    T: Scalar,
    F: FnMut(usize, &SweepRecord<T>) -> io::Result<()>,
{
    cfg.validate()?;
    let spec = cfg.base.chain()?;

    // The metric does not depend on gamma; compute it once per t_max.
    let profiles: Vec<std::result::Result<Option<T>, String>> = cfg
        .t_max_grid
        .par_iter()
        .map(|&t| {
            let mut c = cfg.base.clone();
            c.t_max = t;
            let s = c.schedule().map_err(|e| e.to_string())?;
            if !c.adiabaticity {
                return Ok(None);
            }
            run_profile(&spec, &s, &c.integrator)
                .map(|p| p.map(|p| p.max_metric))
                .map_err(|e| e.to_string())
        })
        .collect();

    let run_point = |index: usize| -> SweepRecord<T> {
        let (gamma, t_max) = cfg.point(index);
        let mut c = cfg.base.clone();
        c.gamma = gamma;
        c.t_max = t_max;
        let adiab = &profiles[index % cfg.t_max_grid.len()];
        let max_adiab = adiab.clone().ok().flatten();
        let outcome = adiab
            .clone()
            .map_err(Error::IntegratorConfig)
            .and_then(|_| c.schedule())
            .and_then(|s| transport_with(&c, &spec, &s, None));
        let nan = T::nan();
        let adiabatic = max_adiab.is_some_and(|m| m < T::lit(ADIABATIC_THRESHOLD));
        match outcome {
            Ok(r) => SweepRecord {
                gamma,
                t_max,
                error: r.transfer_error,
                max_mid_population: r.max_mid_population,
                max_adiabaticity: max_adiab.unwrap_or(nan),
                adiabatic,
                failure: None,
            },
            Err(e) => SweepRecord {
                gamma,
                t_max,
                error: nan,
                max_mid_population: nan,
                max_adiabaticity: max_adiab.unwrap_or(nan),
                adiabatic,
                failure: Some(e.to_string()),
            },
        }
    };

    let records = ordered_parallel(cfg.n_points(), run_point, |i, r| sink(i, r))?;
    Ok(SweepResult {
        records,
        scheme: cfg.base.scheme,
        seed: cfg.seed,
        version: VERSION,
    })
}

/// Maps `0..n` in parallel chunks, delivering results to `sink` in order.
fn ordered_parallel<R, F, S>(n: usize, f: F, mut sink: S) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize) -> R + Sync,
    S: FnMut(usize, &R) -> io::Result<()>,
{
    let chunk = (2 * rayon::current_num_threads()).max(1);
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        let part: Vec<R> = (start..end).into_par_iter().map(&f).collect();
        for (k, r) in part.into_iter().enumerate() {
            sink(start + k, &r).map_err(|e| Error::Io(e.to_string()))?;
            out.push(r);
        }
        start = end;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingMetrics<T> {
    pub error: T,
    pub max_mid_population: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderingComparison<T> {
    pub ctap3: OrderingMetrics<T>,
    pub intuitive3: OrderingMetrics<T>,
}

/// Runs the counter-intuitive and intuitive three-site orderings from site 1
/// at identical parameters.
///
/// Both use half the largest admissible RK4 step. The intuitive ordering
/// keeps the bright states populated, and at the full step its accumulated
/// truncation error reaches the positivity tolerance near
/// `omega_max * t_max = 5000`; halving the step cuts it sixteenfold.
pub fn compare_orderings<T: Scalar>(
    omega_max: T,
    t_max: T,
    gamma: T,
) -> Result<OrderingComparison<T>> {
    let run = |scheme| -> Result<OrderingMetrics<T>> {
        let mut c = RunConfig::new(scheme, t_max);
        c.omega_max = omega_max;
        c.gamma = gamma;
        c.adiabaticity = false;
        c.integrator.step = Some(step_bound(&c.schedule()?) * T::lit(0.5));
        let r = run_transport(&c)?;
        Ok(OrderingMetrics {
            error: r.transfer_error,
            max_mid_population: r.max_mid_population,
        })
    };
    Ok(OrderingComparison {
        ctap3: run(Scheme::Ctap3)?,
        intuitive3: run(Scheme::Intuitive3)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisorderConfig<T: Scalar> {
    pub base: RunConfig<T>,
    /// Relative spread: link factors are uniform on `[1 - sigma, 1 + sigma]`.
    pub sigma: T,
    pub trials: usize,
    pub seed: u64,
}

impl<T: Scalar> DisorderConfig<T> {
    pub fn validate(&self) -> Result<()> {
        finite_nonneg("sigma", self.sigma)?;
        if self.trials == 0 {
            return Err(Error::IntegratorConfig("trials must be >= 1".into()));
        }
        self.base.validate()
    }

    /// Link factors of trial `index`. Each trial has its own ChaCha stream
    /// keyed by `(seed, index)`, so trials can be replayed individually.
    pub fn factors(&self, index: usize) -> Vec<T> {
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        (0..self.base.n_sites() - 1)
            .map(|_| {
                let u: f64 = rng.gen();
                T::one() + self.sigma * T::lit(2.0 * u - 1.0)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisorderTrial<T> {
    pub index: usize,
    pub factors: Vec<T>,
    /// NaN when the trial failed.
    pub error: T,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisorderStats<T> {
    /// Statistics over successful trials (population standard deviation).
    pub mean: T,
    pub max: T,
    pub std: T,
    pub failures: usize,
    pub trials: Vec<DisorderTrial<T>>,
}

/// Runs a single disorder trial.
pub fn disorder_trial<T: Scalar>(cfg: &DisorderConfig<T>, index: usize) -> DisorderTrial<T> {
    let factors = cfg.factors(index);
    let mut c = cfg.base.clone();
    c.adiabaticity = false;
    c.link_scales = Some(match &cfg.base.link_scales {
        Some(base) => base.iter().zip(&factors).map(|(a, b)| *a * *b).collect(),
        None => factors.clone(),
    });
    match run_transport(&c) {
        Ok(r) => DisorderTrial {
            index,
            factors,
            error: r.transfer_error,
            failure: None,
        },
        Err(e) => DisorderTrial {
            index,
            factors,
            error: T::nan(),
            failure: Some(e.to_string()),
        },
    }
}

pub fn disorder_monte_carlo<T: Scalar>(cfg: &DisorderConfig<T>) -> Result<DisorderStats<T>> {
    disorder_monte_carlo_with(cfg, |_, _| Ok(()))
}

pub fn disorder_monte_carlo_with<T, F>(cfg: &DisorderConfig<T>, sink: F) -> Result<DisorderStats<T>>
where
    T: Scalar,
    F: FnMut(usize, &DisorderTrial<T>) -> io::Result<()>,
{
    cfg.validate()?;
    // surface configuration errors once instead of per trial
    cfg.base.schedule()?;
    let trials = ordered_parallel(cfg.trials, |i| disorder_trial(cfg, i), sink)?;
    let ok: Vec<T> = trials
        .iter()
        .filter(|t| t.failure.is_none())
        .map(|t| t.error)
        .collect();
    let failures = trials.len() - ok.len();
    let (mean, max, std) = if ok.is_empty() {
        (T::nan(), T::nan(), T::nan())
    } else {
        let n = T::count(ok.len());
        let mean = ok.iter().fold(T::zero(), |s, v| s + *v) / n;
        let max = ok.iter().fold(T::neg_infinity(), |m, v| Float::max(m, *v));
        let var = ok
            .iter()
            .fold(T::zero(), |s, v| s + (*v - mean) * (*v - mean))
            / n;
        (mean, max, Float::sqrt(var))
    };
    Ok(DisorderStats {
        mean,
        max,
        std,
        failures,
        trials,
    })
}

/// Formats with 17 significant digits.
pub fn fmt_float<T: Scalar>(v: T) -> String {
    let x = v.to_f64_lossy();
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}

pub const SWEEP_HEADER: &str = "gamma,t_max,error,max_mid_pop,max_adiab,adiabatic_flag";

/// Writes `# key: value` metadata lines.
pub fn write_metadata<W: Write>(w: &mut W, meta: &[(&str, String)]) -> io::Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

/// One CSV row. Failed points get a NaN error and are followed by a
/// `# failed` comment carrying the reason.
pub fn write_sweep_row<W: Write, T: Scalar>(
    w: &mut W,
    index: usize,
    r: &SweepRecord<T>,
) -> io::Result<()> {
    writeln!(
        w,
        "{},{},{},{},{},{}",
        fmt_float(r.gamma),
        fmt_float(r.t_max),
        fmt_float(r.error),
        fmt_float(r.max_mid_population),
        fmt_float(r.max_adiabaticity),
        u8::from(r.adiabatic)
    )?;
    if let Some(f) = &r.failure {
        writeln!(w, "# failed point {index}: {f}")?;
    }
    Ok(())
}

pub const DISORDER_HEADER: &str = "trial,error,factors";

pub fn write_disorder_row<W: Write, T: Scalar>(w: &mut W, t: &DisorderTrial<T>) -> io::Result<()> {
    let factors: Vec<String> = t.factors.iter().map(|f| fmt_float(*f)).collect();
    writeln!(
        w,
        "{},{},{}",
        t.index,
        fmt_float(t.error),
        factors.join(";")
    )?;
    if let Some(f) = &t.failure {
        writeln!(w, "# failed trial {}: {f}", t.index)?;
    }
    Ok(())
}

/// `t,p1..pn,purity` and an `adiab` column when a profile on the same time
/// grid is supplied.
pub fn write_trajectory<W: Write, T: Scalar>(
    w: &mut W,
    traj: &Trajectory<T>,
    profile: Option<&AdiabaticityProfile<T>>,
) -> io::Result<()> {
    let n = traj.populations.first().map_or(0, Vec::len);
    let metric = profile.filter(|p| p.metric.len() == traj.len());
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|k| format!("p{k}")));
    header.push("purity".into());
    if metric.is_some() {
        header.push("adiab".into());
    }
    writeln!(w, "{}", header.join(","))?;
    for k in 0..traj.len() {
        let mut row = vec![fmt_float(traj.times[k])];
        row.extend(traj.populations[k].iter().map(|p| fmt_float(*p)));
        row.push(fmt_float(traj.purity[k]));
        if let Some(p) = metric {
            row.push(fmt_float(p.metric[k]));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}
