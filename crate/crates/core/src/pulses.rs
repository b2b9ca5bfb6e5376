// Copyright 2026 The ctap-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Tunnelling-rate control waveforms and the CTAP pulse schedules.
//!
//! Links are indexed from 0: link `k` couples sites `k` and `k + 1`. For the
//! three-donor schedules link 0 is the (1,2) coupling and link 1 the (2,3)
//! coupling. Gaussians are never truncated to `[0, t_max]`; the boundary
//! values are the exact tails.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Waveform<T> {
    Gaussian { amplitude: T, center: T, width: T },
    Constant { amplitude: T },
    Zero,
}

impl<T: Scalar> Waveform<T> {
    /// `amplitude * exp(-(t - center)^2 / (2 width^2))`.
    pub fn gaussian(amplitude: T, center: T, width: T) -> Result<Self> {
        check_amplitude(amplitude)?;
        if !center.is_finite() {
            return Err(Error::NonFinite {
                what: "pulse center",
                value: center.to_f64_lossy(),
            });
        }
        if !(width > T::zero()) || !width.is_finite() {
            return Err(Error::NonPositive {
                what: "pulse width",
                value: width.to_f64_lossy(),
            });
        }
        Ok(Waveform::Gaussian {
            amplitude,
            center,
            width,
        })
    }

    pub fn constant(amplitude: T) -> Result<Self> {
        check_amplitude(amplitude)?;
        Ok(Waveform::Constant { amplitude })
    }

    #[inline]
    pub fn eval(&self, t: T) -> T {
        match *self {
            Waveform::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let x = (t - center) / width;
                amplitude * Float::exp(-T::lit(0.5) * x * x)
            }
            Waveform::Constant { amplitude } => amplitude,
            Waveform::Zero => T::zero(),
        }
    }

    pub fn peak(&self) -> T {
        match *self {
            Waveform::Gaussian { amplitude, .. } | Waveform::Constant { amplitude } => amplitude,
            Waveform::Zero => T::zero(),
        }
    }
}

fn check_amplitude<T: Scalar>(amplitude: T) -> Result<()> {
    if !amplitude.is_finite() {
        return Err(Error::NonFinite {
            what: "pulse amplitude",
            value: amplitude.to_f64_lossy(),
        });
    }
    if amplitude < T::zero() {
        return Err(Error::NegativeAmplitude {
            link: usize::MAX,
            value: amplitude.to_f64_lossy(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleLabel {
    Ctap3,
    CtapnStraddle,
    Intuitive3,
    /// Hand-assembled schedule, used for reference runs.
    Custom,
}

impl ScheduleLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleLabel::Ctap3 => "ctap3",
            ScheduleLabel::CtapnStraddle => "ctapn_straddle",
            ScheduleLabel::Intuitive3 => "intuitive3",
            ScheduleLabel::Custom => "custom",
        }
    }
}

/// Shape of the interior couplings in a straddling schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    Constant,
    /// Centered at `t_max / 2` with width `2 w`.
    #[default]
    Gaussian,
}

/// Per-link tunnelling-rate controls over `[0, t_max]`.
///
/// Each link carries a nominal waveform and a real multiplier. Multipliers
/// model placement disorder (positive) and gauge checks (negative); they never
/// change the pulse shape.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSchedule<T> {
    t_max: T,
    links: Vec<Waveform<T>>,
    scales: Vec<T>,
    label: ScheduleLabel,
}

impl<T: Scalar> PulseSchedule<T> {
    pub fn new(t_max: T, links: Vec<Waveform<T>>, label: ScheduleLabel) -> Result<Self> {
        check_positive("t_max", t_max)?;
        if links.len() < 2 {
            return Err(Error::LengthMismatch {
                what: "link waveforms",
                expected: 2,
                found: links.len(),
            });
        }
        let scales = vec![T::one(); links.len()];
        Ok(PulseSchedule {
            t_max,
            links,
            scales,
            label,
        })
    }

    /// Multiplies link `k` by `factors[k]` on top of any existing scaling.
    pub fn with_link_scales(mut self, factors: &[T]) -> Result<Self> {
        if factors.len() != self.links.len() {
            return Err(Error::LengthMismatch {
                what: "link scale factors",
                expected: self.links.len(),
                found: factors.len(),
            });
        }
        if let Some(f) = factors.iter().find(|f| !f.is_finite()) {
            return Err(Error::NonFinite {
                what: "link scale factor",
                value: f.to_f64_lossy(),
            });
        }
        for (s, &f) in self.scales.iter_mut().zip(factors) {
            *s *= f;
        }
        Ok(self)
    }

    pub fn t_max(&self) -> T {
        self.t_max
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn waveforms(&self) -> &[Waveform<T>] {
        &self.links
    }

    pub fn link_scales(&self) -> &[T] {
        &self.scales
    }

    pub fn label(&self) -> ScheduleLabel {
        self.label
    }

    /// Largest peak magnitude over all links, including scale factors.
    pub fn peak_amplitude(&self) -> T {
        self.links
            .iter()
            .zip(&self.scales)
            .fold(T::zero(), |m, (w, s)| {
                Float::max(m, Float::abs(w.peak() * *s))
            })
    }

    /// Per-link amplitudes at `t`, which must lie in `[0, t_max]`.
    pub fn sample(&self, t: T) -> Result<Vec<T>> {
        if !(t >= T::zero() && t <= self.t_max) {
            return Err(Error::TimeOutOfRange {
                t: t.to_f64_lossy(),
                t_max: self.t_max.to_f64_lossy(),
            });
        }
        let mut out = vec![T::zero(); self.links.len()];
        self.sample_into(t, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation into a caller-owned buffer (hot path of the integrators).
    #[inline]
    pub(crate) fn sample_into(&self, t: T, out: &mut [T]) {
        let mut prev: Option<(&Waveform<T>, T)> = None;
        for ((w, s), o) in self.links.iter().zip(&self.scales).zip(out.iter_mut()) {
            // straddle links share one waveform; skip the repeated exp
            let raw = match prev {
                Some((pw, v)) if pw == w => v,
                _ => w.eval(t),
            };
            prev = Some((w, raw));
            *o = raw * *s;
        }
    }
}

fn check_positive<T: Scalar>(what: &'static str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositive {
            what,
            value: v.to_f64_lossy(),
        })
    }
}

/// Width and the two peak times `(w, t_near, t_far)` for a pulse window.
///
/// `w = t_max / 8`; the far coupling peaks at `(t_max - w) / 2` and the near
/// coupling at `(t_max + w) / 2`, one width later.
pub fn ctap_timing<T: Scalar>(t_max: T) -> (T, T, T) {
    let w = t_max / T::lit(8.0);
    let half = T::lit(0.5);
    (w, (t_max + w) * half, (t_max - w) * half)
}

/// Counter-intuitive three-donor schedule: the (2,3) pulse precedes the (1,2) pulse.
pub fn ctap3_schedule<T: Scalar>(omega_max: T, t_max: T) -> Result<PulseSchedule<T>> {
    check_positive("omega_max", omega_max)?;
    check_positive("t_max", t_max)?;
    three_site(omega_max, t_max, false)
}

/// Reference ordering: (1,2) first, then (2,3).
pub fn intuitive3_schedule<T: Scalar>(omega_max: T, t_max: T) -> Result<PulseSchedule<T>> {
    check_positive("omega_max", omega_max)?;
    check_positive("t_max", t_max)?;
    three_site(omega_max, t_max, true)
}

/// Builds either three-site ordering. Accepts `omega_max = 0` so that
/// control-off baselines can reuse the same timing.
pub(crate) fn three_site<T: Scalar>(
    omega_max: T,
    t_max: T,
    intuitive: bool,
) -> Result<PulseSchedule<T>> {
    let (w, t_near, t_far) = ctap_timing(t_max);
    let (c12, c23, label) = if intuitive {
        (t_far, t_near, ScheduleLabel::Intuitive3)
    } else {
        (t_near, t_far, ScheduleLabel::Ctap3)
    };
    PulseSchedule::new(
        t_max,
        vec![
            Waveform::gaussian(omega_max, c12, w)?,
            Waveform::gaussian(omega_max, c23, w)?,
        ],
        label,
    )
}

/// Straddling schedule for an odd chain of `n_sites >= 5`.
///
/// The end links run the counter-intuitive pair of [`ctap3_schedule`]; every
/// interior link carries the same straddle waveform with peak
/// `straddle_ratio * omega_max`.
pub fn ctapn_schedule<T: Scalar>(
    n_sites: usize,
    omega_max: T,
    t_max: T,
    straddle_ratio: T,
    envelope: Envelope,
) -> Result<PulseSchedule<T>> {
    check_positive("omega_max", omega_max)?;
    check_positive("t_max", t_max)?;
    if n_sites < 5 || n_sites.is_multiple_of(2) {
        return Err(Error::InvalidStraddleSites(n_sites));
    }
    if !(straddle_ratio >= T::one()) || !straddle_ratio.is_finite() {
        return Err(Error::StraddleRatio(straddle_ratio.to_f64_lossy()));
    }
    let (w, t_near, t_far) = ctap_timing(t_max);
    let peak = straddle_ratio * omega_max;
    let straddle = match envelope {
        Envelope::Constant => Waveform::constant(peak)?,
        Envelope::Gaussian => Waveform::gaussian(peak, t_max * T::lit(0.5), w * T::lit(2.0))?,
    };
    let n_links = n_sites - 1;
    let mut links = Vec::with_capacity(n_links);
    links.push(Waveform::gaussian(omega_max, t_near, w)?);
    links.extend(std::iter::repeat_n(straddle, n_links - 2));
    links.push(Waveform::gaussian(omega_max, t_far, w)?);
    PulseSchedule::new(t_max, links, ScheduleLabel::CtapnStraddle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_values() {
        let g = Waveform::gaussian(2.0, 10.0, 3.0).unwrap();
        assert_eq!(g.eval(10.0), 2.0);
        assert_relative_eq!(g.eval(13.0), 2.0 * 0.6065306597126334, max_relative = 1e-14);
        assert_relative_eq!(g.eval(22.0), 2.0 * (-8.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(
            g.eval(-2.0),
            2.0 * 3.354626279025119e-4,
            max_relative = 1e-12
        );
    }

    #[test]
    fn gaussian_rejects_bad_width() {
        assert!(matches!(
            Waveform::gaussian(1.0, 0.0, 0.0),
            Err(Error::NonPositive {
                what: "pulse width",
                ..
            })
        ));
        assert!(Waveform::gaussian(1.0, 0.0, -1.0).is_err());
        assert!(Waveform::gaussian(-1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn ctap3_timing_at_80ns() {
        let s = ctap3_schedule(5.0, 80.0).unwrap();
        assert_eq!(s.label(), ScheduleLabel::Ctap3);
        match (s.waveforms()[0], s.waveforms()[1]) {
            (
                Waveform::Gaussian {
                    center: c12,
                    width: w12,
                    amplitude: a12,
                },
                Waveform::Gaussian {
                    center: c23,
                    width: w23,
                    amplitude: a23,
                },
            ) => {
                assert_eq!((c12, c23, w12, w23), (45.0, 35.0, 10.0, 10.0));
                assert_eq!((a12, a23), (5.0, 5.0));
            }
            other => panic!("unexpected waveforms {other:?}"),
        }
        assert_eq!(s.sample(45.0).unwrap()[0], 5.0);
    }

    #[test]
    fn intuitive3_mirrors_ctap3() {
        let s = intuitive3_schedule(5.0, 80.0).unwrap();
        assert_eq!(s.label(), ScheduleLabel::Intuitive3);
        assert_eq!(s.sample(35.0).unwrap()[0], 5.0);
        assert_eq!(s.sample(45.0).unwrap()[1], 5.0);
    }

    #[test]
    fn schedule_boundary_values() {
        // At t = 0 the (2,3) pulse is 3.5 w from its peak and the (1,2) pulse 4.5 w.
        let omega = 7.0;
        let s = ctap3_schedule(omega, 80.0).unwrap();
        let a = s.sample(0.0).unwrap();
        let tail = |k: f64| omega * (-0.5 * k * k).exp();
        assert_relative_eq!(a[0], tail(4.5), max_relative = 1e-12);
        assert_relative_eq!(a[1], tail(3.5), max_relative = 1e-12);
        assert!(a[0] < omega * (-8.0f64).exp());
        assert!(a[1] < 3e-3 * omega);
    }

    #[test]
    fn symmetric_crossing_at_midpoint() {
        let omega = 3.0;
        let s = ctap3_schedule(omega, 64.0).unwrap();
        let a = s.sample(32.0).unwrap();
        let expected = omega * (-0.125f64).exp();
        assert_relative_eq!(a[0], expected, max_relative = 1e-14);
        assert_relative_eq!(a[1], expected, max_relative = 1e-14);
    }

    #[test]
    fn zero_waveform_and_out_of_range() {
        let s = PulseSchedule::new(
            1.0,
            vec![Waveform::Zero, Waveform::Zero],
            ScheduleLabel::Custom,
        )
        .unwrap();
        assert_eq!(s.sample(0.3).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(s.sample(1.5), Err(Error::TimeOutOfRange { .. })));
        assert!(s.sample(-1e-9).is_err());
    }

    #[test]
    fn ordering_and_separation() {
        for &t_max in &[1e-3, 0.7, 10.0, 80.0, 1234.5] {
            let (w, t12, t23) = ctap_timing(t_max);
            assert!(t23 < t12);
            assert_relative_eq!(t12 - t23, w, max_relative = 1e-12);
        }
    }

    #[test]
    fn ctapn_five_sites() {
        let s = ctapn_schedule(5, 2.0, 80.0, 3.0, Envelope::Gaussian).unwrap();
        let w = s.waveforms();
        assert_eq!(w.len(), 4);
        assert_eq!(w[1], w[2]);
        assert_eq!(
            w[1],
            Waveform::Gaussian {
                amplitude: 6.0,
                center: 40.0,
                width: 20.0
            }
        );
        assert_eq!(s.sample(40.0).unwrap()[1], 6.0);
        // end links are the ctap3 pair
        let c3 = ctap3_schedule(2.0, 80.0).unwrap();
        assert_eq!(w[0], c3.waveforms()[0]);
        assert_eq!(w[3], c3.waveforms()[1]);
    }

    #[test]
    fn ctapn_nine_sites() {
        let s = ctapn_schedule(9, 1.0, 10.0, 3.0, Envelope::Constant).unwrap();
        assert_eq!(s.n_links(), 8);
        let inner = &s.waveforms()[1..7];
        assert!(inner
            .iter()
            .all(|w| *w == Waveform::Constant { amplitude: 3.0 }));
        assert_eq!(s.peak_amplitude(), 3.0);
    }

    #[test]
    fn ctapn_preconditions() {
        assert_eq!(
            ctapn_schedule(3, 1.0, 10.0, 3.0, Envelope::Gaussian),
            Err(Error::InvalidStraddleSites(3))
        );
        assert_eq!(
            ctapn_schedule(6, 1.0, 10.0, 3.0, Envelope::Gaussian),
            Err(Error::InvalidStraddleSites(6))
        );
        assert_eq!(
            ctapn_schedule(5, 1.0, 10.0, 0.5, Envelope::Gaussian),
            Err(Error::StraddleRatio(0.5))
        );
        assert!(ctap3_schedule(0.0, 10.0).is_err());
        assert!(ctap3_schedule(1.0, -10.0).is_err());
    }

    #[test]
    fn link_scales_multiply_pointwise() {
        let s = ctap3_schedule(2.0, 8.0).unwrap();
        let scaled = s.clone().with_link_scales(&[1.5, -1.0]).unwrap();
        for &t in &[0.0, 2.5, 4.0, 7.9] {
            let a = s.sample(t).unwrap();
            let b = scaled.sample(t).unwrap();
            assert_eq!(b[0], 1.5 * a[0]);
            assert_eq!(b[1], -a[1]);
        }
        assert_eq!(scaled.peak_amplitude(), 3.0);
    }

    #[test]
    fn single_precision_builds() {
        let s = ctap3_schedule(1.0f32, 80.0).unwrap();
        assert_eq!(s.sample(45.0).unwrap()[0], 1.0f32);
    }
}
