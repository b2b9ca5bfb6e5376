// Copyright 2026 The ctap-sim Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors raised by model construction, analysis and simulation.
///
/// Numeric payloads are reported as `f64` regardless of the scalar type the
/// computation ran in.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("a chain needs at least 3 sites, got {0}")]
    TooFewSites(usize),
    #[error("{what}: expected {expected} entries, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("link {link} has negative amplitude {value}")]
    NegativeAmplitude { link: usize, value: f64 },
    #[error("{what} must be finite, got {value}")]
    NonFinite { what: &'static str, value: f64 },
    #[error("{what} must be positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("straddling schemes need an odd site count >= 5, got {0}")]
    InvalidStraddleSites(usize),
    #[error("straddle ratio must be >= 1, got {0}")]
    StraddleRatio(f64),
    #[error("time {t} outside the schedule window [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },
    #[error("operation requires spin mode {expected}")]
    SpinModeMismatch { expected: &'static str },
    #[error("{what}: dimension {found} does not match expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("dressed basis undefined: both tunnelling rates are zero")]
    DegenerateDressedBasis,
    #[error("no zero-energy transport state: chain has an even number of sites ({0})")]
    EvenChain(usize),
    #[error("near-degenerate eigenvalues around zero (gap {gap:e} <= threshold {threshold:e})")]
    NearDegenerate { gap: f64, threshold: f64 },
    #[error("need at least {min} samples, got {found}")]
    TooFewSamples { min: usize, found: usize },
    #[error("dephasing rate must be >= 0, got {0}")]
    NegativeDephasing(f64),
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),
    #[error("target state must have unit norm, got {0}")]
    NonUnitTarget(f64),
    #[error("overlap has non-negligible imaginary part {0:e}")]
    ComplexOverlap(f64),
    #[error("integrator step {step:e} exceeds the stability bound {bound:e}")]
    StepTooLarge { step: f64, bound: f64 },
    #[error("invalid integrator setting: {0}")]
    IntegratorConfig(String),
    #[error("invariant violated at t = {t} ns: {what}")]
    InvariantViolation { t: f64, what: String },
    #[error("spin amplitudes have |alpha|^2 + |beta|^2 = {0}, expected 1")]
    SpinNormalization(f64),
    #[error("output: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
