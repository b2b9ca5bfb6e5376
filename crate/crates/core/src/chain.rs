// Copyright 2026 The ctap-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Static description of an N-donor chain and its basis conventions.
//!
//! Units are fixed across the crate: hbar = 1, time in ns, energies and
//! tunnelling rates in rad/ns. Detunings are measured from the end-site
//! energy, so a symmetric three-donor chain is `[0, delta, 0]`.
//!
//! Sites are indexed from 0 in the API. In [`SpinMode::SiteSpin`] the basis
//! state `|site, spin>` sits at index `2 * site + spin` with down = 0, up = 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinMode {
    /// One orbital per donor.
    ChargeOnly,
    /// One orbital per donor times a spin-1/2 label.
    SiteSpin,
}

impl SpinMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SpinMode::ChargeOnly => "charge_only",
            SpinMode::SiteSpin => "site_spin",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Down = 0,
    Up = 1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec<T> {
    n_sites: usize,
    detunings: Vec<T>,
    base_amplitudes: Vec<T>,
    spin_mode: SpinMode,
    /// `[E_down, E_up]` per site; zero unless set explicitly.
    spin_splittings: Vec<[T; 2]>,
}

impl<T: Scalar> ChainSpec<T> {
    pub fn new(
        n_sites: usize,
        detunings: Vec<T>,
        base_amplitudes: Vec<T>,
        spin_mode: SpinMode,
    ) -> Result<Self> {
        if n_sites < 3 {
            return Err(Error::TooFewSites(n_sites));
        }
        if detunings.len() != n_sites {
            return Err(Error::LengthMismatch {
                what: "detunings",
                expected: n_sites,
                found: detunings.len(),
            });
        }
        if base_amplitudes.len() != n_sites - 1 {
            return Err(Error::LengthMismatch {
                what: "base_amplitudes",
                expected: n_sites - 1,
                found: base_amplitudes.len(),
            });
        }
        if let Some(d) = detunings.iter().find(|d| !d.is_finite()) {
            return Err(Error::NonFinite {
                what: "detuning",
                value: d.to_f64_lossy(),
            });
        }
        for (link, &a) in base_amplitudes.iter().enumerate() {
            if !a.is_finite() {
                return Err(Error::NonFinite {
                    what: "base amplitude",
                    value: a.to_f64_lossy(),
                });
            }
            if a < T::zero() {
                return Err(Error::NegativeAmplitude {
                    link,
                    value: a.to_f64_lossy(),
                });
            }
        }
        Ok(ChainSpec {
            n_sites,
            detunings,
            base_amplitudes,
            spin_mode,
            spin_splittings: vec![[T::zero(); 2]; n_sites],
        })
    }

    /// Uniform chain: zero detunings and the same nominal amplitude on every link.
    pub fn uniform(n_sites: usize, amplitude: T, spin_mode: SpinMode) -> Result<Self> {
        Self::new(
            n_sites,
            vec![T::zero(); n_sites],
            vec![amplitude; n_sites.saturating_sub(1)],
            spin_mode,
        )
    }

    pub fn with_spin_splittings(mut self, splittings: Vec<[T; 2]>) -> Result<Self> {
        if splittings.len() != self.n_sites {
            return Err(Error::LengthMismatch {
                what: "spin_splittings",
                expected: self.n_sites,
                found: splittings.len(),
            });
        }
        if let Some(e) = splittings.iter().flatten().find(|e| !e.is_finite()) {
            return Err(Error::NonFinite {
                what: "spin splitting",
                value: e.to_f64_lossy(),
            });
        }
        self.spin_splittings = splittings;
        Ok(self)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_links(&self) -> usize {
        self.n_sites - 1
    }

    pub fn detunings(&self) -> &[T] {
        &self.detunings
    }

    pub fn base_amplitudes(&self) -> &[T] {
        &self.base_amplitudes
    }

    pub fn spin_mode(&self) -> SpinMode {
        self.spin_mode
    }

    pub fn spin_splittings(&self) -> &[[T; 2]] {
        &self.spin_splittings
    }

    /// Hilbert-space dimension of the one-electron sector.
    pub fn dimension(&self) -> usize {
        match self.spin_mode {
            SpinMode::ChargeOnly => self.n_sites,
            SpinMode::SiteSpin => 2 * self.n_sites,
        }
    }

    /// Basis index of `|site, spin>`; the spin label is ignored in charge mode.
    pub fn basis_index(&self, site: usize, spin: Spin) -> usize {
        match self.spin_mode {
            SpinMode::ChargeOnly => site,
            SpinMode::SiteSpin => 2 * site + spin as usize,
        }
    }

    /// Site that basis state `index` lives on.
    pub fn site_of(&self, index: usize) -> usize {
        match self.spin_mode {
            SpinMode::ChargeOnly => index,
            SpinMode::SiteSpin => index / 2,
        }
    }

    pub fn has_zero_detunings(&self) -> bool {
        self.detunings.iter().all(|d| *d == T::zero())
    }

    /// The same chain with the spin label dropped.
    pub fn charge_projection(&self) -> Self {
        ChainSpec {
            spin_mode: SpinMode::ChargeOnly,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_chain() {
        let omega = 2.0;
        let c = ChainSpec::new(3, vec![0.0; 3], vec![omega; 2], SpinMode::ChargeOnly).unwrap();
        assert_eq!(c.dimension(), 3);
        assert_eq!(c.spin_splittings(), &[[0.0; 2]; 3]);
    }

    #[test]
    fn middle_detuning() {
        let c =
            ChainSpec::new(3, vec![0.0, 1.5, 0.0], vec![1.0, 1.0], SpinMode::ChargeOnly).unwrap();
        assert_eq!(c.detunings(), &[0.0, 1.5, 0.0]);
        assert!(!c.has_zero_detunings());
    }

    #[test]
    fn dimensions() {
        let spin5 = ChainSpec::uniform(5, 1.0, SpinMode::SiteSpin).unwrap();
        assert_eq!(spin5.dimension(), 10);
        assert_eq!(
            ChainSpec::uniform(3, 1.0, SpinMode::ChargeOnly)
                .unwrap()
                .dimension(),
            3
        );
        assert_eq!(
            ChainSpec::uniform(3, 1.0, SpinMode::SiteSpin)
                .unwrap()
                .dimension(),
            6
        );
        assert_eq!(
            ChainSpec::uniform(9, 1.0, SpinMode::ChargeOnly)
                .unwrap()
                .dimension(),
            9
        );
    }

    #[test]
    fn index_arithmetic() {
        let c = ChainSpec::<f64>::uniform(5, 1.0, SpinMode::SiteSpin).unwrap();
        assert_eq!(c.basis_index(0, Spin::Down), 0);
        assert_eq!(c.basis_index(0, Spin::Up), 1);
        assert_eq!(c.basis_index(4, Spin::Up), 9);
        for i in 0..c.dimension() {
            assert_eq!(c.site_of(i), i / 2);
        }
    }

    #[test]
    fn validation_errors_are_distinct() {
        assert_eq!(
            ChainSpec::new(2, vec![0.0; 2], vec![1.0], SpinMode::ChargeOnly),
            Err(Error::TooFewSites(2))
        );
        assert!(matches!(
            ChainSpec::new(3, vec![0.0; 2], vec![1.0; 2], SpinMode::ChargeOnly),
            Err(Error::LengthMismatch {
                what: "detunings",
                ..
            })
        ));
        assert!(matches!(
            ChainSpec::new(3, vec![0.0; 3], vec![1.0; 3], SpinMode::ChargeOnly),
            Err(Error::LengthMismatch {
                what: "base_amplitudes",
                ..
            })
        ));
        assert_eq!(
            ChainSpec::new(3, vec![0.0; 3], vec![1.0, -0.5], SpinMode::ChargeOnly),
            Err(Error::NegativeAmplitude {
                link: 1,
                value: -0.5
            })
        );
        assert!(matches!(
            ChainSpec::new(
                3,
                vec![0.0, f64::NAN, 0.0],
                vec![1.0; 2],
                SpinMode::ChargeOnly
            ),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn accessors_round_trip() {
        let det = vec![0.1, -0.2, 0.3, 0.0, 0.5];
        let amp = vec![1.0, 2.0, 3.0, 4.0];
        let c = ChainSpec::new(5, det.clone(), amp.clone(), SpinMode::SiteSpin).unwrap();
        assert_eq!(c.n_sites(), 5);
        assert_eq!(c.detunings(), det.as_slice());
        assert_eq!(c.base_amplitudes(), amp.as_slice());
        assert_eq!(c.spin_mode(), SpinMode::SiteSpin);
        assert_eq!(c.charge_projection().dimension(), 5);
    }
}
