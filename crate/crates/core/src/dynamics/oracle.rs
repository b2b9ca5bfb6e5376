// Copyright 2026 The ctap-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Reference propagator built on the vectorised (Liouville-space) generator.
//!
//! `vec(rho)` stacks columns, so `vec(A rho B) = (B^T kron A) vec(rho)` and
//!
//! ```text
//! L(t) = -i (I kron H(t) - H(t)^T kron I) - diag(vec(Gamma C)).
//! ```
//!
//! Each micro-interval of length `h` is advanced by `exp(Omega)` with the
//! constant fourth-order Magnus exponent
//!
//! ```text
//! Omega = h/2 (L1 + L2) + sqrt(3) h^2 / 12 [L2, L1]
//! ```
//!
//! built from the generator at the two Gauss-Legendre nodes. The exponential
//! is applied with a scaled Taylor series summed to machine precision. None
//! of this shares code with the RK4 stepper.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::Float;

use super::{check_inputs, dephasing_rates, DensityMatrix, Trajectory};
use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::hamiltonian::{hamiltonian, HermitianMatrix};
use crate::pulses::PulseSchedule;
use crate::scalar::{cplx, real, Scalar};

/// Minimum number of micro-intervals between recorded samples.
pub const MIN_SUBSTEPS: usize = 10;

/// `I kron X - X^T kron I`, the superoperator of `rho -> [X, rho]`.
pub fn commutator_superop<T: Scalar>(x: &DMatrix<Complex<T>>) -> DMatrix<Complex<T>> {
    let id = DMatrix::<Complex<T>>::identity(x.nrows(), x.nrows());
    id.kronecker(x) - x.transpose().kronecker(&id)
}

/// Liouvillian of the dephased master equation for a fixed Hamiltonian.
pub fn liouvillian<T: Scalar>(h: &HermitianMatrix<T>, damp: &[T]) -> DMatrix<Complex<T>> {
    let mut l = commutator_superop(h.matrix()) * cplx(T::zero(), -T::one());
    for (p, g) in damp.iter().enumerate() {
        l[(p, p)] -= real(*g);
    }
    l
}

/// Fourth-order Magnus exponent for one micro-interval.
///
/// The commutator uses `[L2, L1] = -K([H2, H1]) - [L_H2 - L_H1, D]`, where
/// `K` is [`commutator_superop`] and `D` the diagonal dephasing part; the
/// second term is elementwise because `D` is diagonal.
fn magnus_exponent<T: Scalar>(
    h1: &HermitianMatrix<T>,
    h2: &HermitianMatrix<T>,
    damp: &[T],
    dt: T,
) -> DMatrix<Complex<T>> {
    let minus_i = cplx(T::zero(), -T::one());
    let l1 = liouvillian(h1, damp);
    let l2 = liouvillian(h2, damp);
    let x = h2.matrix() * h1.matrix() - h1.matrix() * h2.matrix();
    let mut comm = -commutator_superop(&x);
    let dh = commutator_superop(&(h2.matrix() - h1.matrix())) * minus_i;
    let n = comm.nrows();
    for q in 0..n {
        for p in 0..n {
            comm[(p, q)] -= dh[(p, q)] * (damp[q] - damp[p]);
        }
    }
    let c = Float::sqrt(T::lit(3.0)) * dt * dt / T::lit(12.0);
    (l1 + l2) * real(dt * T::lit(0.5)) + comm * real(c)
}

fn one_norm<T: Scalar>(a: &DMatrix<Complex<T>>) -> T {
    a.column_iter()
        .map(|c| c.iter().fold(T::zero(), |s, z| s + z.norm()))
        .fold(T::zero(), |m, v| Float::max(m, v))
}

/// `exp(a) v` by Taylor series on `s` equal sub-steps with `||a||_1 / s <= 1/2`.
pub fn expm_apply<T: Scalar>(
    a: &DMatrix<Complex<T>>,
    v: &DVector<Complex<T>>,
) -> DVector<Complex<T>> {
    let norm = one_norm(a);
    let s = Float::ceil(norm * T::lit(2.0)).to_f64_lossy().max(1.0) as usize;
    let b = a * real(T::one() / T::count(s));
    let eps = T::epsilon() * T::lit(1e-2);
    let mut out = v.clone();
    for _ in 0..s {
        let mut term = out.clone();
        let mut sum = out.clone();
        for k in 1..=60 {
            term = &b * term * real(T::one() / T::count(k));
            sum += &term;
            if term.norm() <= eps * sum.norm() {
                break;
            }
        }
        out = sum;
    }
    out
}

/// Piecewise-exponential propagation recording `samples` states after the
/// initial one, each separated by `substeps` micro-intervals.
pub fn propagate_oracle<T: Scalar>(
    spec: &ChainSpec<T>,
    schedule: &PulseSchedule<T>,
    rho0: &DensityMatrix<T>,
    gamma: T,
    samples: usize,
    substeps: usize,
) -> Result<Trajectory<T>> {
    check_inputs(spec, schedule, rho0, gamma)?;
    if samples == 0 {
        return Err(Error::IntegratorConfig(
            "oracle needs at least one sample".into(),
        ));
    }
    if substeps < MIN_SUBSTEPS {
        return Err(Error::IntegratorConfig(format!(
            "oracle needs at least {MIN_SUBSTEPS} substeps per sample, got {substeps}"
        )));
    }
    let d = spec.dimension();
    let damp = dephasing_rates(spec, gamma);
    let t_max = schedule.t_max();
    let n = samples * substeps;
    let n_t = T::count(n);
    let dt = t_max / n_t;
    let offset = Float::sqrt(T::lit(3.0)) / T::lit(6.0);
    let half = T::lit(0.5);

    let mut v = DVector::from_column_slice(rho0.matrix().as_slice());
    let mut traj = Trajectory::with_capacity(samples + 1);
    traj.record(spec, T::zero(), rho0.clone(), gamma)?;

    for m in 0..n {
        let t0 = t_max * T::count(m) / n_t;
        let t1 = Float::min(t0 + dt * (half - offset), t_max);
        let t2 = Float::min(t0 + dt * (half + offset), t_max);
        let h1 = hamiltonian(spec, &schedule.sample(t1)?)?;
        let h2 = hamiltonian(spec, &schedule.sample(t2)?)?;
        let omega = magnus_exponent(&h1, &h2, &damp, dt);
        v = expm_apply(&omega, &v);

        if (m + 1) % substeps == 0 {
            let t = t_max * T::count(m + 1) / n_t;
            let state = DensityMatrix::new(DMatrix::from_column_slice(d, d, v.as_slice()))
                .map_err(|e| Error::InvariantViolation {
                    t: t.to_f64_lossy(),
                    what: e.to_string(),
                })?;
            traj.record(spec, t, state, gamma)?;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::SpinMode;
    use crate::dynamics::trace_distance;
    use crate::pulses::{ScheduleLabel, Waveform};
    use nalgebra::SymmetricEigen;

    fn random_hermitian(d: usize, seed: u64) -> HermitianMatrix<f64> {
        let mut x = seed;
        let mut next = || {
            x = x
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = DMatrix::from_fn(d, d, |_, _| cplx(next(), next()));
        HermitianMatrix::new((&a + a.adjoint()) * real(0.5)).unwrap()
    }

    #[test]
    fn vectorisation_matches_commutator() {
        let h = random_hermitian(3, 7);
        let rho = random_hermitian(3, 11);
        let lhs =
            commutator_superop(h.matrix()) * DVector::from_column_slice(rho.matrix().as_slice());
        let direct = h.matrix() * rho.matrix() - rho.matrix() * h.matrix();
        assert!((lhs - DVector::from_column_slice(direct.as_slice())).norm() < 1e-14);
    }

    #[test]
    fn commutator_identity_matches_matmul() {
        let spec = ChainSpec::uniform(3, 1.0, SpinMode::ChargeOnly).unwrap();
        let damp = dephasing_rates(&spec, 0.8);
        let h1 = random_hermitian(3, 1);
        let h2 = random_hermitian(3, 2);
        let dt = 0.3;
        let l1 = liouvillian(&h1, &damp);
        let l2 = liouvillian(&h2, &damp);
        let direct = (&l1 + &l2) * real(dt / 2.0)
            + (&l2 * &l1 - &l1 * &l2) * real(3f64.sqrt() * dt * dt / 12.0);
        let fast = magnus_exponent(&h1, &h2, &damp, dt);
        assert!((direct - fast).norm() < 1e-14);
    }

    #[test]
    fn taylor_action_matches_pade() {
        let h = random_hermitian(4, 3);
        let spec = ChainSpec::uniform(4, 1.0, SpinMode::ChargeOnly).unwrap();
        let l = liouvillian(&h, &dephasing_rates(&spec, 2.0)) * real(1.7);
        let v = DVector::from_fn(16, |i, _| cplx(i as f64, 1.0 - i as f64 * 0.1));
        let reference = l.clone().exp() * &v;
        let ours = expm_apply(&l, &v);
        assert!((reference - ours).norm() < 1e-11 * v.norm());
    }

    #[test]
    fn constant_hamiltonian_closed_form() {
        let spec = ChainSpec::uniform(3, 1.0, SpinMode::ChargeOnly).unwrap();
        let (a12, a23, t_max) = (1.3, 0.6, 5.0);
        let s = PulseSchedule::new(
            t_max,
            vec![
                Waveform::constant(a12).unwrap(),
                Waveform::constant(a23).unwrap(),
            ],
            ScheduleLabel::Custom,
        )
        .unwrap();
        let rho0 = DensityMatrix::basis(3, 0).unwrap();
        let tr = propagate_oracle(&spec, &s, &rho0, 0.0, 5, 20).unwrap();
        let h = hamiltonian(&spec, &[a12, a23]).unwrap();
        let eig = SymmetricEigen::new(h.matrix().clone());
        for (t, st) in tr.times.iter().zip(&tr.states) {
            let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| cplx(0.0, -e * t).exp()));
            let u = &eig.eigenvectors * phases * eig.eigenvectors.adjoint();
            let exact = DensityMatrix::new(&u * rho0.matrix() * u.adjoint()).unwrap();
            assert!(trace_distance(st, &exact) < 1e-12);
        }
    }

    #[test]
    fn strong_dephasing_fixed_point() {
        let spec = ChainSpec::uniform(3, 1.0, SpinMode::ChargeOnly).unwrap();
        let s = PulseSchedule::new(1.0, vec![Waveform::Zero; 2], ScheduleLabel::Custom).unwrap();
        let psi = DVector::from_vec(vec![real(0.6), real(0.0), cplx(0.0, 0.8)]);
        let rho0 = DensityMatrix::pure(&psi).unwrap();
        let tr = propagate_oracle(&spec, &s, &rho0, 1e3, 1, 10).unwrap();
        let last = tr.final_state().matrix();
        assert!(last[(0, 2)].norm() < 1e-12);
        assert!((last[(0, 0)].re - 0.36).abs() < 1e-14);
        assert!((last[(2, 2)].re - 0.64).abs() < 1e-14);
    }

    #[test]
    fn rejects_coarse_substeps() {
        let spec = ChainSpec::uniform(3, 1.0, SpinMode::ChargeOnly).unwrap();
        let s = PulseSchedule::new(1.0, vec![Waveform::Zero; 2], ScheduleLabel::Custom).unwrap();
        let rho0 = DensityMatrix::basis(3, 0).unwrap();
        assert!(matches!(
            propagate_oracle(&spec, &s, &rho0, 0.0, 4, 3),
            Err(Error::IntegratorConfig(_))
        ));
    }
}
