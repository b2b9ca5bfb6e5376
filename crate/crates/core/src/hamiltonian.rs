// Copyright 2026 The ctap-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Instantaneous one-electron Hamiltonian of a donor chain.
//!
//! Nearest-neighbour tunnelling enters with a minus sign, `H[i][i+1] = -Omega_i`,
//! in both the charge and the site-spin basis. Tunnelling conserves spin.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::chain::{ChainSpec, SpinMode};
use crate::error::{Error, Result};
use crate::scalar::{real, Scalar};

/// Dense Hermitian matrix in rad/ns.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<T: Scalar>(DMatrix<Complex<T>>);

impl<T: Scalar> HermitianMatrix<T> {
    pub const TOLERANCE: f64 = 1e-12;

    /// Wraps `m` after checking Hermiticity elementwise to [`Self::TOLERANCE`].
    pub fn new(m: DMatrix<Complex<T>>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                what: "hermitian matrix columns",
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let dev = hermiticity_defect(&m);
        if !(dev <= T::lit(Self::TOLERANCE)) {
            return Err(Error::InvalidDensityMatrix(format!(
                "matrix is not Hermitian (defect {:e})",
                dev.to_f64_lossy()
            )));
        }
        Ok(HermitianMatrix(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<Complex<T>> {
        self.0
    }

    /// Real part, valid whenever the matrix is real symmetric (always true for
    /// chain Hamiltonians built here).
    pub fn real_part(&self) -> DMatrix<T> {
        self.0.map(|z| z.re)
    }
}

pub(crate) fn hermiticity_defect<T: Scalar>(m: &DMatrix<Complex<T>>) -> T {
    let d = m.nrows();
    let mut worst = T::zero();
    for j in 0..d {
        for i in 0..=j {
            let e = (m[(i, j)] - m[(j, i)].conj()).norm();
            if e > worst {
                worst = e;
            }
        }
    }
    worst
}

/// Sparse form of a chain Hamiltonian: real diagonal plus real symmetric bonds.
///
/// This is what the time stepper consumes; the dense builders below are thin
/// wrappers over it so the two views cannot drift apart.
#[derive(Debug, Clone, PartialEq)]
pub struct Couplings<T> {
    pub(crate) diag: Vec<T>,
    /// `(a, b, value)` with `a < b`; `H[a][b] = H[b][a] = value`.
    pub(crate) bonds: Vec<(usize, usize, T)>,
    spin_copies: usize,
}

impl<T: Scalar> Couplings<T> {
    pub fn new(spec: &ChainSpec<T>) -> Self {
        let n = spec.n_sites();
        let (diag, spin_copies) = match spec.spin_mode() {
            SpinMode::ChargeOnly => (spec.detunings().to_vec(), 1),
            SpinMode::SiteSpin => {
                let mut diag = Vec::with_capacity(2 * n);
                for (d, e) in spec.detunings().iter().zip(spec.spin_splittings()) {
                    diag.push(*d + e[0]);
                    diag.push(*d + e[1]);
                }
                (diag, 2)
            }
        };
        let mut bonds = Vec::with_capacity(spin_copies * (n - 1));
        for link in 0..n - 1 {
            for s in 0..spin_copies {
                let a = spin_copies * link + s;
                bonds.push((a, a + spin_copies, T::zero()));
            }
        }
        Couplings {
            diag,
            bonds,
            spin_copies,
        }
    }

    /// Sets the tunnelling amplitudes; `amplitudes.len()` must equal the link count.
    #[inline]
    pub(crate) fn set_amplitudes(&mut self, amplitudes: &[T]) {
        let c = self.spin_copies;
        for (k, bond) in self.bonds.iter_mut().enumerate() {
            bond.2 = -amplitudes[k / c];
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> HermitianMatrix<T> {
        let d = self.dim();
        let mut m = DMatrix::from_element(d, d, Complex::new(T::zero(), T::zero()));
        for (i, &e) in self.diag.iter().enumerate() {
            m[(i, i)] = real(e);
        }
        for &(a, b, v) in &self.bonds {
            m[(a, b)] = real(v);
            m[(b, a)] = real(v);
        }
        HermitianMatrix(m)
    }
}

fn check_amplitudes<T: Scalar>(spec: &ChainSpec<T>, amplitudes: &[T]) -> Result<()> {
    if amplitudes.len() != spec.n_links() {
        return Err(Error::LengthMismatch {
            what: "amplitudes",
            expected: spec.n_links(),
            found: amplitudes.len(),
        });
    }
    if let Some(a) = amplitudes.iter().find(|a| !a.is_finite()) {
        return Err(Error::NonFinite {
            what: "amplitude",
            value: a.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Tridiagonal charge-basis Hamiltonian: detunings on the diagonal and
/// `-amplitude[k]` on the `(k, k+1)` off-diagonals.
pub fn charge_hamiltonian<T: Scalar>(
    spec: &ChainSpec<T>,
    amplitudes: &[T],
) -> Result<HermitianMatrix<T>> {
    if spec.spin_mode() != SpinMode::ChargeOnly {
        return Err(Error::SpinModeMismatch {
            expected: "charge_only",
        });
    }
    check_amplitudes(spec, amplitudes)?;
    let mut c = Couplings::new(spec);
    c.set_amplitudes(amplitudes);
    Ok(c.to_dense())
}

/// Site-spin Hamiltonian of dimension `2 n`: site energies plus spin offsets on
/// the diagonal, spin-conserving tunnelling between neighbouring sites.
pub fn spin_site_hamiltonian<T: Scalar>(
    spec: &ChainSpec<T>,
    amplitudes: &[T],
) -> Result<HermitianMatrix<T>> {
    if spec.spin_mode() != SpinMode::SiteSpin {
        return Err(Error::SpinModeMismatch {
            expected: "site_spin",
        });
    }
    check_amplitudes(spec, amplitudes)?;
    let mut c = Couplings::new(spec);
    c.set_amplitudes(amplitudes);
    Ok(c.to_dense())
}

/// Dispatches on the chain's spin mode.
pub fn hamiltonian<T: Scalar>(spec: &ChainSpec<T>, amplitudes: &[T]) -> Result<HermitianMatrix<T>> {
    match spec.spin_mode() {
        SpinMode::ChargeOnly => charge_hamiltonian(spec, amplitudes),
        SpinMode::SiteSpin => spin_site_hamiltonian(spec, amplitudes),
    }
}
