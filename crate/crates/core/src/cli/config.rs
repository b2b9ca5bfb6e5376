// Copyright 2026 The ctap-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! JSON experiment configuration.
//!
//! The file format is one flat object tagged by `kind`. Keys that the kind
//! does not use are rejected, as are unknown keys, so a typo never silently
//! falls back to a default.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::chain::SpinMode;
use crate::dynamics::{IntegratorConfig, Method};
use crate::experiments::{DisorderConfig, RunConfig, Scheme, SweepConfig};
use crate::pulses::Envelope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Run,
    Sweep,
    Disorder,
    Darkstate,
    Compare,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Run => "run",
            Kind::Sweep => "sweep",
            Kind::Disorder => "disorder",
            Kind::Darkstate => "darkstate",
            Kind::Compare => "compare",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    Ctap3,
    Ctapn,
    Intuitive3,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawIntegrator {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub substeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

/// On-disk form. Every field except `kind` is optional here; which ones are
/// required or allowed depends on `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max_rad_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_rad_ns: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_grid_rad_ns: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max_grid_ns: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spin_mode: Option<SpinMode>,
    /// `[re, im]`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub straddle_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<Envelope>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<RawIntegrator>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link_scales: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adiabaticity: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub o12: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub o23: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<bool>,
}

impl RawConfig {
    fn empty(kind: Kind) -> Self {
        RawConfig {
            kind,
            scheme: None,
            n_sites: None,
            omega_max_rad_ns: None,
            t_max_ns: None,
            gamma_rad_ns: None,
            gamma_grid_rad_ns: None,
            t_max_grid_ns: None,
            spin_mode: None,
            alpha: None,
            beta: None,
            straddle_ratio: None,
            envelope: None,
            integrator: None,
            link_scales: None,
            adiabaticity: None,
            sigma: None,
            trials: None,
            seed: None,
            o12: None,
            o23: None,
            delta: None,
            out_dir: None,
            plot: None,
        }
    }

    /// Names of the keys that are set.
    fn present(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        macro_rules! check {
            ($($f:ident),*) => { $( if self.$f.is_some() { v.push(stringify!($f)); } )* };
        }
        check!(
            scheme,
            n_sites,
            omega_max_rad_ns,
            t_max_ns,
            gamma_rad_ns,
            gamma_grid_rad_ns,
            t_max_grid_ns,
            spin_mode,
            alpha,
            beta,
            straddle_ratio,
            envelope,
            integrator,
            link_scales,
            adiabaticity,
            sigma,
            trials,
            seed,
            o12,
            o23,
            delta,
            out_dir,
            plot
        );
        v
    }
}

const RUN_KEYS: &[&str] = &[
    "scheme",
    "n_sites",
    "omega_max_rad_ns",
    "spin_mode",
    "alpha",
    "beta",
    "straddle_ratio",
    "envelope",
    "integrator",
    "link_scales",
    "adiabaticity",
    "out_dir",
    "plot",
];

fn allowed(kind: Kind) -> Vec<&'static str> {
    let mut v: Vec<&'static str> = Vec::new();
    match kind {
        Kind::Run => {
            v.extend(RUN_KEYS);
            v.extend(["t_max_ns", "gamma_rad_ns"]);
        }
        Kind::Sweep => {
            v.extend(RUN_KEYS);
            v.extend(["gamma_grid_rad_ns", "t_max_grid_ns", "seed"]);
        }
        Kind::Disorder => {
            v.extend(RUN_KEYS);
            v.extend(["t_max_ns", "gamma_rad_ns", "sigma", "trials", "seed"]);
        }
        Kind::Darkstate => v.extend(["o12", "o23", "delta", "out_dir", "plot"]),
        Kind::Compare => v.extend([
            "omega_max_rad_ns",
            "t_max_ns",
            "gamma_rad_ns",
            "out_dir",
            "plot",
        ]),
    }
    v
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Run(RunConfig<f64>),
    Sweep(SweepConfig<f64>),
    Disorder(DisorderConfig<f64>),
    Darkstate {
        o12: f64,
        o23: f64,
        delta: f64,
    },
    Compare {
        omega_max: f64,
        t_max: f64,
        gamma: f64,
    },
}

impl Experiment {
    pub fn kind(&self) -> Kind {
        match self {
            Experiment::Run(_) => Kind::Run,
            Experiment::Sweep(_) => Kind::Sweep,
            Experiment::Disorder(_) => Kind::Disorder,
            Experiment::Darkstate { .. } => Kind::Darkstate,
            Experiment::Compare { .. } => Kind::Compare,
        }
    }
}

/// Validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub out_dir: PathBuf,
    pub plot: bool,
}

pub const DEFAULT_OUT_DIR: &str = "out";
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_TRIALS: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

fn require<T: Clone>(v: &Option<T>, field: &str, kind: Kind) -> Result<T, ConfigError> {
    v.clone()
        .ok_or_else(|| invalid(field, format!("required for kind {}", kind.as_str())))
}

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn non_negative(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(
            field,
            format!("must be non-negative and finite, got {v}"),
        ))
    }
}

fn grid(field: &str, g: &[f64], lower_ok: fn(f64) -> bool) -> Result<Vec<f64>, ConfigError> {
    if g.is_empty() {
        return Err(invalid(field, "must not be empty"));
    }
    if let Some(v) = g.iter().find(|v| !v.is_finite() || !lower_ok(**v)) {
        return Err(invalid(field, format!("value {v} out of range")));
    }
    if g.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(field, "must be strictly increasing"));
    }
    Ok(g.to_vec())
}

pub fn parse_config_file(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            ConfigError::Parse(inner.to_string())
        } else {
            ConfigError::Parse(format!("{path}: {inner}"))
        }
    })?;
    from_raw(&raw)
}

/// Validates a raw config and applies defaults.
pub fn from_raw(raw: &RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let ok = allowed(raw.kind);
    if let Some(k) = raw.present().into_iter().find(|k| !ok.contains(k)) {
        return Err(invalid(
            k,
            format!("not allowed for kind {}", raw.kind.as_str()),
        ));
    }
    let experiment = match raw.kind {
        Kind::Run => {
            let mut c = run_config(raw)?;
            c.t_max = positive("t_max_ns", require(&raw.t_max_ns, "t_max_ns", raw.kind)?)?;
            c.gamma = non_negative("gamma_rad_ns", raw.gamma_rad_ns.unwrap_or(0.0))?;
            Experiment::Run(c)
        }
        Kind::Sweep => {
            let base = run_config(raw)?;
            let g = require(&raw.gamma_grid_rad_ns, "gamma_grid_rad_ns", raw.kind)?;
            let t = require(&raw.t_max_grid_ns, "t_max_grid_ns", raw.kind)?;
            let mut base = base;
            base.t_max = grid("t_max_grid_ns", &t, |v| v > 0.0)?[0];
            Experiment::Sweep(SweepConfig {
                base,
                gamma_grid: grid("gamma_grid_rad_ns", &g, |v| v >= 0.0)?,
                t_max_grid: t,
                seed: raw.seed.unwrap_or(DEFAULT_SEED),
            })
        }
        Kind::Disorder => {
            let mut base = run_config(raw)?;
            base.t_max = positive("t_max_ns", require(&raw.t_max_ns, "t_max_ns", raw.kind)?)?;
            base.gamma = non_negative("gamma_rad_ns", raw.gamma_rad_ns.unwrap_or(0.0))?;
            let trials = raw.trials.unwrap_or(DEFAULT_TRIALS);
            if trials == 0 {
                return Err(invalid("trials", "must be at least 1"));
            }
            Experiment::Disorder(DisorderConfig {
                base,
                sigma: non_negative("sigma", require(&raw.sigma, "sigma", raw.kind)?)?,
                trials,
                seed: raw.seed.unwrap_or(DEFAULT_SEED),
            })
        }
        Kind::Darkstate => {
            let o12 = non_negative("o12", require(&raw.o12, "o12", raw.kind)?)?;
            let o23 = non_negative("o23", require(&raw.o23, "o23", raw.kind)?)?;
            let delta = raw.delta.unwrap_or(0.0);
            if !delta.is_finite() {
                return Err(invalid("delta", "must be finite"));
            }
            if o12 == 0.0 && o23 == 0.0 {
                return Err(invalid("o12", "o12 and o23 cannot both be zero"));
            }
            Experiment::Darkstate { o12, o23, delta }
        }
        Kind::Compare => Experiment::Compare {
            omega_max: non_negative(
                "omega_max_rad_ns",
                raw.omega_max_rad_ns.unwrap_or(20.0 * PI),
            )?,
            t_max: positive("t_max_ns", require(&raw.t_max_ns, "t_max_ns", raw.kind)?)?,
            gamma: non_negative("gamma_rad_ns", raw.gamma_rad_ns.unwrap_or(0.0))?,
        },
    };
    Ok(ExperimentConfig {
        experiment,
        out_dir: raw
            .out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
        plot: raw.plot.unwrap_or(false),
    })
}

/// Shared run fields; `t_max` and `gamma` are left for the caller.
fn run_config(raw: &RawConfig) -> Result<RunConfig<f64>, ConfigError> {
    let scheme = match require(&raw.scheme, "scheme", raw.kind)? {
        SchemeName::Ctap3 | SchemeName::Intuitive3 => {
            if let Some(n) = raw.n_sites {
                if n != 3 {
                    return Err(invalid(
                        "n_sites",
                        format!("must be 3 for this scheme, got {n}"),
                    ));
                }
            }
            if raw.scheme == Some(SchemeName::Ctap3) {
                Scheme::Ctap3
            } else {
                Scheme::Intuitive3
            }
        }
        SchemeName::Ctapn => {
            let n = require(&raw.n_sites, "n_sites", raw.kind)?;
            if n % 2 == 0 {
                return Err(invalid("n_sites", format!("must be odd, got {n}")));
            }
            if n < 5 {
                return Err(invalid("n_sites", format!("must be at least 5, got {n}")));
            }
            Scheme::Ctapn(n)
        }
    };
    if !matches!(scheme, Scheme::Ctapn(_)) {
        for (k, set) in [
            ("straddle_ratio", raw.straddle_ratio.is_some()),
            ("envelope", raw.envelope.is_some()),
        ] {
            if set {
                return Err(invalid(k, "only applies to scheme ctapn"));
            }
        }
    }
    let mut c = RunConfig::new(scheme, 1.0);
    c.omega_max = positive(
        "omega_max_rad_ns",
        raw.omega_max_rad_ns.unwrap_or(c.omega_max),
    )?;
    c.spin_mode = raw.spin_mode.unwrap_or(SpinMode::ChargeOnly);
    if c.spin_mode == SpinMode::ChargeOnly && (raw.alpha.is_some() || raw.beta.is_some()) {
        return Err(invalid(
            "alpha",
            "spin amplitudes require spin_mode site_spin",
        ));
    }
    if let Some([re, im]) = raw.alpha {
        c.alpha = Complex::new(re, im);
    }
    if let Some([re, im]) = raw.beta {
        c.beta = Complex::new(re, im);
    }
    let norm = c.alpha.norm_sqr() + c.beta.norm_sqr();
    if (norm - 1.0).abs() > crate::experiments::SPIN_NORM_TOL || !norm.is_finite() {
        return Err(invalid(
            "beta",
            format!("|alpha|^2 + |beta|^2 = {norm}, expected 1"),
        ));
    }
    if let Some(r) = raw.straddle_ratio {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(invalid("straddle_ratio", format!("must be >= 1, got {r}")));
        }
        c.straddle_ratio = r;
    }
    c.envelope = raw.envelope.unwrap_or_default();
    c.integrator = integrator(raw.integrator.as_ref().cloned().unwrap_or_default())?;
    if let Some(s) = &raw.link_scales {
        if s.len() != scheme.n_sites() - 1 {
            return Err(invalid(
                "link_scales",
                format!("expected {} entries, got {}", scheme.n_sites() - 1, s.len()),
            ));
        }
        if let Some(v) = s.iter().find(|v| !v.is_finite()) {
            return Err(invalid("link_scales", format!("non-finite entry {v}")));
        }
        c.link_scales = Some(s.clone());
    }
    c.adiabaticity = raw.adiabaticity.unwrap_or(true);
    Ok(c)
}

fn integrator(raw: RawIntegrator) -> Result<IntegratorConfig<f64>, ConfigError> {
    let mut c = IntegratorConfig {
        method: raw.method.unwrap_or_default(),
        ..Default::default()
    };
    if let Some(s) = raw.step_ns {
        c.step = Some(positive("integrator.step_ns", s)?);
    }
    if let Some(k) = raw.record_every {
        if k == 0 {
            return Err(invalid("integrator.record_every", "must be at least 1"));
        }
        c.record_every = Some(k);
    }
    if let Some(s) = raw.substeps {
        if s < crate::dynamics::oracle::MIN_SUBSTEPS {
            return Err(invalid(
                "integrator.substeps",
                format!("must be at least {}", crate::dynamics::oracle::MIN_SUBSTEPS),
            ));
        }
        c.substeps = s;
    }
    if let Some(s) = raw.samples {
        if s == 0 {
            return Err(invalid("integrator.samples", "must be at least 1"));
        }
        c.samples = s;
    }
    Ok(c)
}

fn raw_run(kind: Kind, c: &RunConfig<f64>) -> RawConfig {
    let mut r = RawConfig::empty(kind);
    let (name, n) = match c.scheme {
        Scheme::Ctap3 => (SchemeName::Ctap3, 3),
        Scheme::Intuitive3 => (SchemeName::Intuitive3, 3),
        Scheme::Ctapn(n) => (SchemeName::Ctapn, n),
    };
    r.scheme = Some(name);
    r.n_sites = Some(n);
    r.omega_max_rad_ns = Some(c.omega_max);
    r.spin_mode = Some(c.spin_mode);
    if c.spin_mode == SpinMode::SiteSpin {
        r.alpha = Some([c.alpha.re, c.alpha.im]);
        r.beta = Some([c.beta.re, c.beta.im]);
    }
    if let Scheme::Ctapn(_) = c.scheme {
        r.straddle_ratio = Some(c.straddle_ratio);
        r.envelope = Some(c.envelope);
    }
    r.integrator = Some(RawIntegrator {
        method: Some(c.integrator.method),
        step_ns: c.integrator.step,
        record_every: c.integrator.record_every,
        substeps: Some(c.integrator.substeps),
        samples: Some(c.integrator.samples),
    });
    r.link_scales = c.link_scales.clone();
    r.adiabaticity = Some(c.adiabaticity);
    r
}

/// Fully explicit raw form; parsing it gives back an equal config.
pub fn to_raw(cfg: &ExperimentConfig) -> RawConfig {
    let mut r = match &cfg.experiment {
        Experiment::Run(c) => {
            let mut r = raw_run(Kind::Run, c);
            r.t_max_ns = Some(c.t_max);
            r.gamma_rad_ns = Some(c.gamma);
            r
        }
        Experiment::Sweep(s) => {
            let mut r = raw_run(Kind::Sweep, &s.base);
            r.gamma_grid_rad_ns = Some(s.gamma_grid.clone());
            r.t_max_grid_ns = Some(s.t_max_grid.clone());
            r.seed = Some(s.seed);
            r
        }
        Experiment::Disorder(d) => {
            let mut r = raw_run(Kind::Disorder, &d.base);
            r.t_max_ns = Some(d.base.t_max);
            r.gamma_rad_ns = Some(d.base.gamma);
            r.sigma = Some(d.sigma);
            r.trials = Some(d.trials);
            r.seed = Some(d.seed);
            r
        }
        Experiment::Darkstate { o12, o23, delta } => {
            let mut r = RawConfig::empty(Kind::Darkstate);
            r.o12 = Some(*o12);
            r.o23 = Some(*o23);
            r.delta = Some(*delta);
            r
        }
        Experiment::Compare {
            omega_max,
            t_max,
            gamma,
        } => {
            let mut r = RawConfig::empty(Kind::Compare);
            r.omega_max_rad_ns = Some(*omega_max);
            r.t_max_ns = Some(*t_max);
            r.gamma_rad_ns = Some(*gamma);
            r
        }
    };
    r.out_dir = Some(cfg.out_dir.clone());
    r.plot = Some(cfg.plot);
    r
}

/// Single-line JSON echo of the config.
pub fn to_json(cfg: &ExperimentConfig) -> String {
    serde_json::to_string(&to_raw(cfg)).expect("config serializes")
}
