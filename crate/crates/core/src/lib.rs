// Copyright 2026 The ctap-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Coherent transport by adiabatic passage (CTAP) along donor chains.
//!
//! The crate models a single electron hopping along an N-donor chain whose
//! nearest-neighbour tunnelling rates are pulsed in time. It provides
//!
//! * chain descriptions and basis conventions ([`chain`]),
//! * counter-intuitive, intuitive and straddling pulse schedules ([`pulses`]),
//! * charge and site-spin Hamiltonians ([`hamiltonian`]),
//! * dressed-state and adiabaticity analysis ([`spectra`]),
//! * dephased density-matrix dynamics with an independent reference
//!   propagator ([`dynamics`]),
//! * the transport, error-surface, ordering and disorder studies
//!   ([`experiments`]) and the `sim` command line ([`cli`]).
//!
//! All numerics are generic over [`Scalar`]; the aliases below fix `f64`.

// `!(x <= tol)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod pulses;
pub mod scalar;
pub mod spectra;

pub use chain::{ChainSpec, Spin, SpinMode};
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Chain = chain::ChainSpec<f64>;
pub type Schedule = pulses::PulseSchedule<f64>;
pub type Pulse = pulses::Waveform<f64>;
pub type Hamiltonian = hamiltonian::HermitianMatrix<f64>;
pub type Density = dynamics::DensityMatrix<f64>;
pub type Path = dynamics::Trajectory<f64>;
pub type Integrator = dynamics::IntegratorConfig<f64>;
pub type Dressed = spectra::DressedStates3<f64>;
pub type Profile = spectra::AdiabaticityProfile<f64>;
pub type RunConfig = experiments::RunConfig<f64>;
pub type RunResult = experiments::RunResult<f64>;
pub type SweepConfig = experiments::SweepConfig<f64>;
pub type SweepResult = experiments::SweepResult<f64>;
pub type DisorderConfig = experiments::DisorderConfig<f64>;
