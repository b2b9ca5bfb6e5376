// Copyright 2026 The ctap-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Eigen-analysis of the transport Hamiltonian.
//!
//! * closed-form dressed states of the three-donor system,
//! * the numerically tracked zero-energy (dark) state of an odd chain,
//! * the adiabaticity metric `max_k |<dD0/dt|D_k>| / |E0 - E_k|` along a schedule.
//!
//! The closed form is usually written for the `+Omega` tunnelling sign. This
//! crate uses `H[i][i+1] = -Omega`, which maps onto it by flipping the sign of
//! the middle-site basis state; the vectors returned here are already in the
//! crate's convention.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use num_traits::Float;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::hamiltonian::charge_hamiltonian;
use crate::pulses::PulseSchedule;
use crate::scalar::{real, Scalar};

/// Relative gap below which two eigenvalues are treated as degenerate.
pub const DEGENERACY_RTOL: f64 = 1e-9;

/// Minimum number of samples accepted by [`adiabaticity_profile`].
pub const MIN_PROFILE_SAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct DressedStates3<T: Scalar> {
    pub theta1: T,
    pub theta2: T,
    pub d_plus: DVector<Complex<T>>,
    pub d_minus: DVector<Complex<T>>,
    pub d_zero: DVector<Complex<T>>,
    pub e_plus: T,
    pub e_zero: T,
    pub e_minus: T,
}

/// Closed-form eigenbasis of the three-donor Hamiltonian with tunnelling
/// rates `o12`, `o23` and middle-site detuning `delta`.
///
/// `theta1 = atan(o12 / o23)`, `theta2 = atan(2 sqrt(o12^2 + o23^2) / delta) / 2`
/// with the `delta -> 0` limit `pi / 4`. Energies are Rayleigh quotients.
pub fn analytic_ctap3_states<T: Scalar>(o12: T, o23: T, delta: T) -> Result<DressedStates3<T>> {
    if o12 == T::zero() && o23 == T::zero() {
        return Err(Error::DegenerateDressedBasis);
    }
    for (what, v) in [("o12", o12), ("o23", o23), ("delta", delta)] {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                what,
                value: v.to_f64_lossy(),
            });
        }
    }
    let theta1 = Float::atan2(o12, o23);
    let rms = Float::hypot(o12, o23);
    let theta2 = if delta == T::zero() {
        T::FRAC_PI_4()
    } else {
        Float::atan(T::lit(2.0) * rms / delta) * T::lit(0.5)
    };
    let (s1, c1) = Float::sin_cos(theta1);
    let (s2, c2) = Float::sin_cos(theta2);
    // middle component negated: -Omega gauge
    let vec3 = |a: T, b: T, c: T| DVector::from_vec(vec![real(a), real(-b), real(c)]);
    let d_plus = vec3(s1 * s2, c2, c1 * s2);
    let d_minus = vec3(s1 * c2, -s2, c1 * c2);
    let d_zero = vec3(c1, T::zero(), -s1);

    let spec = ChainSpec::new(
        3,
        vec![T::zero(), delta, T::zero()],
        vec![T::zero(); 2],
        crate::chain::SpinMode::ChargeOnly,
    )?;
    let h = charge_hamiltonian(&spec, &[o12, o23])?;
    let rayleigh = |v: &DVector<Complex<T>>| (v.adjoint() * h.matrix() * v)[(0, 0)].re;
    Ok(DressedStates3 {
        theta1,
        theta2,
        e_plus: rayleigh(&d_plus),
        e_zero: rayleigh(&d_zero),
        e_minus: rayleigh(&d_minus),
        d_plus,
        d_minus,
        d_zero,
    })
}

/// Eigenvalues in ascending order with matching eigenvector columns.
pub(crate) fn sorted_eigensystem<T: Scalar>(h: DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |i, j| {
        eig.eigenvectors[(i, order[j])]
    });
    (values, vectors)
}

/// Index of the eigenvalue nearest zero, failing when the two eigenvalues
/// closest to zero are closer than `DEGENERACY_RTOL * max|E|`.
fn dark_index<T: Scalar>(values: &[T]) -> Result<usize> {
    let mut by_mag: Vec<usize> = (0..values.len()).collect();
    by_mag.sort_by(|&a, &b| {
        Float::abs(values[a])
            .partial_cmp(&Float::abs(values[b]))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let norm = values
        .iter()
        .fold(T::zero(), |m, v| Float::max(m, Float::abs(*v)));
    let gap = Float::abs(values[by_mag[0]] - values[by_mag[1]]);
    let threshold = T::lit(DEGENERACY_RTOL) * norm;
    if gap <= threshold {
        return Err(Error::NearDegenerate {
            gap: gap.to_f64_lossy(),
            threshold: threshold.to_f64_lossy(),
        });
    }
    Ok(by_mag[0])
}

fn check_odd<T: Scalar>(spec: &ChainSpec<T>) -> Result<()> {
    if spec.n_sites().is_multiple_of(2) {
        Err(Error::EvenChain(spec.n_sites()))
    } else {
        Ok(())
    }
}

/// Real eigenvector of the charge Hamiltonian with eigenvalue nearest zero,
/// normalised and with its largest-magnitude component positive.
///
/// Site-spin chains are analysed through their charge projection.
pub fn dark_state<T: Scalar>(spec: &ChainSpec<T>, amplitudes: &[T]) -> Result<DVector<Complex<T>>> {
    let charge = spec.charge_projection();
    check_odd(&charge)?;
    let h = charge_hamiltonian(&charge, amplitudes)?;
    let (values, vectors) = sorted_eigensystem(h.real_part());
    let k = dark_index(&values)?;
    let mut v: DVector<T> = vectors.column(k).into_owned();
    let lead = v.iter().copied().fold(
        T::zero(),
        |m, x| if Float::abs(x) > Float::abs(m) { x } else { m },
    );
    if lead < T::zero() {
        v.neg_mut();
    }
    Ok(v.map(real))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticityProfile<T> {
    pub times: Vec<T>,
    pub metric: Vec<T>,
    pub max_metric: T,
}

/// Adiabaticity metric on `n_samples` uniformly spaced times over `[0, t_max]`.
///
/// The dark state is tracked with a continuity gauge (overlap with the
/// previous sample kept positive), differentiated with second-order finite
/// differences, and compared against every other eigenspace; degenerate
/// eigenvalues are grouped and the projection onto the whole group is used.
pub fn adiabaticity_profile<T: Scalar>(
    spec: &ChainSpec<T>,
    schedule: &PulseSchedule<T>,
    n_samples: usize,
) -> Result<AdiabaticityProfile<T>> {
    if n_samples < MIN_PROFILE_SAMPLES {
        return Err(Error::TooFewSamples {
            min: MIN_PROFILE_SAMPLES,
            found: n_samples,
        });
    }
    let charge = spec.charge_projection();
    check_odd(&charge)?;
    if schedule.n_links() != charge.n_links() {
        return Err(Error::LengthMismatch {
            what: "schedule links",
            expected: charge.n_links(),
            found: schedule.n_links(),
        });
    }
    let t_max = schedule.t_max();
    let dt = t_max / T::count(n_samples - 1);
    let times: Vec<T> = (0..n_samples)
        .map(|k| t_max * T::count(k) / T::count(n_samples - 1))
        .collect();

    let mut amps = vec![T::zero(); charge.n_links()];
    let mut systems = Vec::with_capacity(n_samples);
    let mut dark: Vec<DVector<T>> = Vec::with_capacity(n_samples);
    for &t in &times {
        schedule.sample_into(t, &mut amps);
        let h = charge_hamiltonian(&charge, &amps)?;
        let (values, vectors) = sorted_eigensystem(h.real_part());
        let k = dark_index(&values).map_err(|e| match e {
            Error::NearDegenerate { .. } => Error::InvariantViolation {
                t: t.to_f64_lossy(),
                what: e.to_string(),
            },
            other => other,
        })?;
        let mut v: DVector<T> = vectors.column(k).into_owned();
        let flip =
            match dark.last() {
                Some(prev) => v.dot(prev) < T::zero(),
                None => {
                    v.iter().copied().fold(T::zero(), |m, x| {
                        if Float::abs(x) > Float::abs(m) {
                            x
                        } else {
                            m
                        }
                    }) < T::zero()
                }
            };
        if flip {
            v.neg_mut();
        }
        dark.push(v);
        systems.push((values, vectors, k));
    }

    let two_dt = T::lit(2.0) * dt;
    let n = n_samples;
    let mut metric = Vec::with_capacity(n);
    for (k, (values, vectors, dk)) in systems.iter().enumerate() {
        let deriv: DVector<T> = if k == 0 {
            (&dark[1] * T::lit(4.0) - &dark[0] * T::lit(3.0) - &dark[2]) / two_dt
        } else if k == n - 1 {
            (&dark[n - 1] * T::lit(3.0) - &dark[n - 2] * T::lit(4.0) + &dark[n - 3]) / two_dt
        } else {
            (&dark[k + 1] - &dark[k - 1]) / two_dt
        };
        metric.push(coupling_ratio(values, vectors, *dk, &deriv));
    }
    let max_metric = metric.iter().fold(T::zero(), |m, v| Float::max(m, *v));
    Ok(AdiabaticityProfile {
        times,
        metric,
        max_metric,
    })
}

fn coupling_ratio<T: Scalar>(
    values: &[T],
    vectors: &DMatrix<T>,
    dark: usize,
    deriv: &DVector<T>,
) -> T {
    let norm = values
        .iter()
        .fold(T::zero(), |m, v| Float::max(m, Float::abs(*v)));
    let tol = T::lit(DEGENERACY_RTOL) * norm;
    let e0 = values[dark];
    let others: Vec<usize> = (0..values.len()).filter(|&j| j != dark).collect();
    let mut worst = T::zero();
    let mut start = 0;
    while start < others.len() {
        let mut end = start + 1;
        while end < others.len() && values[others[end]] - values[others[end - 1]] <= tol {
            end += 1;
        }
        let group = &others[start..end];
        let weight = group.iter().fold(T::zero(), |acc, &j| {
            let p = vectors.column(j).dot(deriv);
            acc + p * p
        });
        let mean_e =
            group.iter().fold(T::zero(), |acc, &j| acc + values[j]) / T::count(group.len());
        let ratio = Float::sqrt(weight) / Float::abs(e0 - mean_e);
        worst = Float::max(worst, ratio);
        start = end;
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::SpinMode;
    use crate::pulses::{ctap3_schedule, ScheduleLabel, Waveform};
    use approx::assert_relative_eq;

    fn re(v: &DVector<Complex<f64>>) -> Vec<f64> {
        v.iter().map(|z| z.re).collect()
    }

    #[test]
    fn limit_no_near_coupling() {
        let s = analytic_ctap3_states(0.0, 2.0, 0.0).unwrap();
        assert_eq!(s.theta1, 0.0);
        assert_eq!(re(&s.d_zero), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn symmetric_couplings() {
        let s = analytic_ctap3_states(1.7, 1.7, 0.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(s.theta1, std::f64::consts::FRAC_PI_4);
        assert_relative_eq!(s.theta2, std::f64::consts::FRAC_PI_4);
        let d0 = re(&s.d_zero);
        assert_relative_eq!(d0[0], h, epsilon = 1e-15);
        assert_eq!(d0[1], 0.0);
        assert_relative_eq!(d0[2], -h, epsilon = 1e-15);
    }

    #[test]
    fn three_four_five() {
        // eigenvalues of [[0,-3,0],[-3,0,-4],[0,-4,0]] are 0 and +-5
        let s = analytic_ctap3_states(3.0, 4.0, 0.0).unwrap();
        assert_relative_eq!(s.theta1, 0.75f64.atan(), epsilon = 1e-15);
        assert_relative_eq!(s.theta1, 0.6435011087932844, epsilon = 1e-15);
        let d0 = re(&s.d_zero);
        assert_relative_eq!(d0[0], 0.8, epsilon = 1e-15);
        assert_relative_eq!(d0[2], -0.6, epsilon = 1e-15);
        assert_relative_eq!(s.e_plus.abs(), 5.0, epsilon = 1e-12);
        assert_relative_eq!(s.e_minus.abs(), 5.0, epsilon = 1e-12);
        assert_relative_eq!(s.e_zero, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_dressed_basis() {
        assert_eq!(
            analytic_ctap3_states(0.0, 0.0, 1.0),
            Err(Error::DegenerateDressedBasis)
        );
    }

    #[test]
    fn detuned_states_are_eigenvectors() {
        for &(o12, o23, delta) in &[(1.0, 2.0, 3.0), (5.0, 0.2, -4.0), (0.3, 0.3, 100.0)] {
            let s = analytic_ctap3_states(o12, o23, delta).unwrap();
            let spec = ChainSpec::new(3, vec![0.0, delta, 0.0], vec![1.0; 2], SpinMode::ChargeOnly)
                .unwrap();
            let h = charge_hamiltonian(&spec, &[o12, o23]).unwrap();
            for (v, e) in [
                (&s.d_plus, s.e_plus),
                (&s.d_minus, s.e_minus),
                (&s.d_zero, s.e_zero),
            ] {
                let r = h.matrix() * v - v * real(e);
                assert!(r.norm() < 1e-12, "residual {}", r.norm());
            }
            assert_eq!(s.d_zero[1], real(0.0));
        }
    }

    #[test]
    fn dark_state_symmetric_ctap3() {
        let spec = ChainSpec::uniform(3, 1.0, SpinMode::ChargeOnly).unwrap();
        let d = dark_state(&spec, &[2.0, 2.0]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = re(&d);
        assert_relative_eq!(v[0], h, epsilon = 1e-14);
        assert!(v[1].abs() < 1e-14);
        assert_relative_eq!(v[2], -h, epsilon = 1e-14);
    }

    #[test]
    fn dark_state_five_sites_matches_null_vector() {
        // null vector of the tridiagonal by forward recurrence on odd sites
        let amps = [1.0, 2.0, 0.5, 3.0];
        let mut null = [1.0, 0.0, 0.0, 0.0, 0.0];
        null[2] = -amps[0] * null[0] / amps[1];
        null[4] = -amps[2] * null[2] / amps[3];
        let norm = null.iter().map(|x| x * x).sum::<f64>().sqrt();
        let spec = ChainSpec::uniform(5, 1.0, SpinMode::ChargeOnly).unwrap();
        let d = re(&dark_state(&spec, &amps).unwrap());
        let sign = if d[0] > 0.0 { 1.0 } else { -1.0 };
        for (a, b) in d.iter().zip(null) {
            assert!((a - sign * b / norm).abs() < 1e-12, "{d:?}");
        }
        assert!(d[1].abs() < 1e-12 && d[3].abs() < 1e-12);
    }

    #[test]
    fn dark_state_counter_intuitive_start() {
        let spec = ChainSpec::uniform(3, 1.0, SpinMode::ChargeOnly).unwrap();
        let d = re(&dark_state(&spec, &[1e-4, 10.0]).unwrap());
        assert!(d[0] > 1.0 - 1e-9);
    }

    #[test]
    fn dark_state_errors() {
        let even = ChainSpec::uniform(4, 1.0, SpinMode::ChargeOnly).unwrap();
        assert_eq!(dark_state(&even, &[1.0; 3]), Err(Error::EvenChain(4)));
        let odd = ChainSpec::uniform(3, 1.0, SpinMode::ChargeOnly).unwrap();
        assert!(matches!(
            dark_state(&odd, &[0.0, 0.0]),
            Err(Error::NearDegenerate { .. })
        ));
    }

    #[test]
    fn constant_controls_have_zero_metric() {
        let spec = ChainSpec::uniform(3, 1.0, SpinMode::ChargeOnly).unwrap();
        let s = PulseSchedule::new(
            10.0,
            vec![Waveform::constant(2.0).unwrap(); 2],
            ScheduleLabel::Custom,
        )
        .unwrap();
        let p = adiabaticity_profile(&spec, &s, 101).unwrap();
        assert_eq!(p.times.len(), 101);
        assert!(p.max_metric < 1e-12);
    }

    #[test]
    fn profile_rejects_few_samples() {
        let spec = ChainSpec::uniform(3, 1.0, SpinMode::ChargeOnly).unwrap();
        let s = ctap3_schedule(1.0, 10.0).unwrap();
        assert_eq!(
            adiabaticity_profile(&spec, &s, 50),
            Err(Error::TooFewSamples {
                min: 100,
                found: 50
            })
        );
    }

    #[test]
    fn metric_small_for_long_pulses() {
        let spec = ChainSpec::uniform(3, 1.0, SpinMode::ChargeOnly).unwrap();
        let s = ctap3_schedule(10.0, 100.0).unwrap();
        let p = adiabaticity_profile(&spec, &s, 401).unwrap();
        assert!(p.metric.iter().all(|m| *m >= 0.0));
        assert!(p.max_metric < 0.1, "{}", p.max_metric);
    }
}
