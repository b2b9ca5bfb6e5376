// Copyright 2026 The ctap-sim Authors
// SPDX-License-Identifier: Apache-2.0

//! Density-matrix dynamics with site-basis charge dephasing.
//!
//! The generator is
//!
//! ```text
//! d rho / dt = -i [H(t), rho] - Gamma * C o rho
//! ```
//!
//! where `C[i][j] = 1` when basis states `i` and `j` sit on different donors
//! and 0 otherwise. Same-site spin coherences are never damped.
//!
//! [`evolve`] is a fixed-step classical RK4 on the sparse Hamiltonian; the
//! [`oracle`] module propagates the same model with exponentials of the
//! vectorised generator and is kept free of shared code with the RK4 path.

pub mod oracle;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use num_traits::Float;

use crate::chain::ChainSpec;
use crate::error::{Error, Result};
use crate::hamiltonian::{hermiticity_defect, Couplings, HermitianMatrix};
use crate::pulses::PulseSchedule;
use crate::scalar::{cplx, real, Scalar};

pub use oracle::propagate_oracle;

/// Tolerances enforced on every density matrix the integrators produce.
pub mod tol {
    pub const HERMITIAN: f64 = 1e-10;
    pub const TRACE: f64 = 1e-9;
    pub const MIN_EIGENVALUE: f64 = -1e-8;
    pub const PURITY_STEP: f64 = 1e-8;
    pub const OVERLAP_IMAG: f64 = 1e-10;
    pub const TARGET_NORM: f64 = 1e-10;
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Scalar>(DMatrix<Complex<T>>);

impl<T: Scalar> DensityMatrix<T> {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: DMatrix<Complex<T>>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::InvalidDensityMatrix(format!(
                "shape {}x{} is not square",
                m.nrows(),
                m.ncols()
            )));
        }
        let herm = hermiticity_defect(&m);
        if !(herm <= T::lit(tol::HERMITIAN)) {
            return Err(Error::InvalidDensityMatrix(format!(
                "Hermiticity defect {:e}",
                herm.to_f64_lossy()
            )));
        }
        let rho = DensityMatrix(m);
        let tr = rho.trace();
        if !(Float::abs(tr - T::one()) <= T::lit(tol::TRACE)) {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace {}",
                tr.to_f64_lossy()
            )));
        }
        let min = rho.min_eigenvalue();
        if !(min >= T::lit(tol::MIN_EIGENVALUE)) {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {:e}",
                min.to_f64_lossy()
            )));
        }
        Ok(rho)
    }

    /// `|psi><psi|` for a unit vector `psi`.
    pub fn pure(psi: &DVector<Complex<T>>) -> Result<Self> {
        Self::new(psi * psi.adjoint())
    }

    /// Basis projector `|k><k|` in dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        if k >= dim {
            return Err(Error::DimensionMismatch {
                what: "basis state index",
                expected: dim,
                found: k,
            });
        }
        let mut m = DMatrix::from_element(dim, dim, real(T::zero()));
        m[(k, k)] = real(T::one());
        Ok(DensityMatrix(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.0
    }

    pub fn trace(&self) -> T {
        (0..self.dim()).fold(T::zero(), |acc, i| acc + self.0[(i, i)].re)
    }

    /// `Tr rho^2`.
    pub fn purity(&self) -> T {
        self.0.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn min_eigenvalue(&self) -> T {
        let eig = SymmetricEigen::new(self.0.clone());
        eig.eigenvalues
            .iter()
            .copied()
            .fold(T::infinity(), |m, v| Float::min(m, v))
    }

    /// Population per donor, summing over spin in site-spin mode.
    pub fn site_populations(&self, spec: &ChainSpec<T>) -> Vec<T> {
        let mut p = vec![T::zero(); spec.n_sites()];
        for i in 0..self.dim() {
            p[spec.site_of(i)] = p[spec.site_of(i)] + self.0[(i, i)].re;
        }
        p
    }

    /// `<target| rho |target>` with a check that it is real.
    pub fn expectation(&self, target: &DVector<Complex<T>>) -> Result<T> {
        let v = (target.adjoint() * &self.0 * target)[(0, 0)];
        if Float::abs(v.im) >= T::lit(tol::OVERLAP_IMAG) {
            return Err(Error::ComplexOverlap(v.im.to_f64_lossy()));
        }
        Ok(v.re)
    }
}

/// Trace distance `1/2 || a - b ||_1`.
pub fn trace_distance<T: Scalar>(a: &DensityMatrix<T>, b: &DensityMatrix<T>) -> T {
    let diff = a.matrix() - b.matrix();
    let eig = SymmetricEigen::new(diff);
    eig.eigenvalues
        .iter()
        .fold(T::zero(), |acc, v| acc + Float::abs(*v))
        * T::lit(0.5)
}

/// `1 - <target| rho |target>`.
pub fn transfer_error<T: Scalar>(
    rho: &DensityMatrix<T>,
    target: &DVector<Complex<T>>,
) -> Result<T> {
    if target.len() != rho.dim() {
        return Err(Error::DimensionMismatch {
            what: "target state",
            expected: rho.dim(),
            found: target.len(),
        });
    }
    let norm = target.norm();
    if !(Float::abs(norm - T::one()) <= T::lit(tol::TARGET_NORM)) {
        return Err(Error::NonUnitTarget(norm.to_f64_lossy()));
    }
    Ok(T::one() - rho.expectation(target)?)
}

/// `Gamma * C`: the elementwise dephasing rate, column-major like nalgebra storage.
pub(crate) fn dephasing_rates<T: Scalar>(spec: &ChainSpec<T>, gamma: T) -> Vec<T> {
    let d = spec.dimension();
    let mut out = vec![T::zero(); d * d];
    for j in 0..d {
        for i in 0..d {
            if spec.site_of(i) != spec.site_of(j) {
                out[i + j * d] = gamma;
            }
        }
    }
    out
}

fn check_gamma<T: Scalar>(gamma: T) -> Result<()> {
    if gamma >= T::zero() && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::NegativeDephasing(gamma.to_f64_lossy()))
    }
}

/// `-i [H, rho] - Gamma C o rho` for a dense Hermitian `h`.
pub fn lindblad_rhs<T: Scalar>(
    h: &HermitianMatrix<T>,
    rho: &DensityMatrix<T>,
    gamma: T,
    spec: &ChainSpec<T>,
) -> Result<DMatrix<Complex<T>>> {
    check_gamma(gamma)?;
    let d = spec.dimension();
    for (what, found) in [("hamiltonian", h.dim()), ("density matrix", rho.dim())] {
        if found != d {
            return Err(Error::DimensionMismatch {
                what,
                expected: d,
                found,
            });
        }
    }
    let damp = dephasing_rates(spec, gamma);
    let comm = h.matrix() * rho.matrix() - rho.matrix() * h.matrix();
    Ok(DMatrix::from_fn(d, d, |i, j| {
        let c = comm[(i, j)];
        cplx(c.im, -c.re) - rho.matrix()[(i, j)] * damp[i + j * d]
    }))
}

/// Sparse RHS used by the time stepper. `rho` and `out` are column-major
/// `d x d`; `rho` must be Hermitian. Only the upper triangle is computed,
/// the lower one is filled by conjugation.
#[inline]
fn rhs_into<T: Scalar>(c: &Couplings<T>, damp: &[T], rho: &[Complex<T>], out: &mut [Complex<T>]) {
    let d = c.diag.len();
    for j in 0..d {
        let dj = c.diag[j];
        let (col, src) = (&mut out[j * d..j * d + j + 1], &rho[j * d..j * d + j + 1]);
        for ((o, r), di) in col.iter_mut().zip(src).zip(&c.diag) {
            *o = *r * (*di - dj);
        }
    }
    for &(a, b, v) in &c.bonds {
        if v == T::zero() {
            continue;
        }
        // (H rho) rows a and b, columns j >= row
        let rows = [(a, b), (b, a)];
        for (row, src) in rows {
            let o = out[row + row * d..].iter_mut().step_by(d);
            for (o, r) in o.zip(rho[src + row * d..].iter().step_by(d)) {
                *o += *r * v;
            }
        }
        // -(rho H) columns a and b, rows i <= column
        let cols = [(b, a), (a, b)];
        for (col, src) in cols {
            let o = &mut out[col * d..col * d + col + 1];
            for (o, r) in o.iter_mut().zip(&rho[src * d..src * d + col + 1]) {
                *o -= *r * v;
            }
        }
    }
    for j in 0..d {
        for i in 0..=j {
            let p = i + j * d;
            let (o, r, g) = (out[p], rho[p], damp[p]);
            // multiply the commutator by -i, then damp
            let z = cplx(o.im - r.re * g, -o.re - r.im * g);
            out[p] = z;
            out[j + i * d] = z.conj();
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Rk4Fixed,
    OracleExpm,
}

/// Integrator settings. `None` fields are derived from the schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig<T> {
    pub method: Method,
    /// RK4 step in ns. Defaults to the largest step allowed by [`step_bound`].
    pub step: Option<T>,
    /// Record a sample every this many RK4 steps. Defaults to about 1000 samples per run.
    pub record_every: Option<usize>,
    /// Oracle micro-intervals per recorded sample.
    pub substeps: usize,
    /// Oracle recorded samples (excluding t = 0).
    pub samples: usize,
}

impl<T> Default for IntegratorConfig<T> {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk4Fixed,
            step: None,
            record_every: None,
            substeps: 100,
            samples: 200,
        }
    }
}

pub const DEFAULT_RECORDS: usize = 1000;

/// Largest admissible RK4 step: `min(0.01 / peak amplitude, t_max / 5000)`.
pub fn step_bound<T: Scalar>(schedule: &PulseSchedule<T>) -> T {
    let by_window = schedule.t_max() / T::lit(5000.0);
    let peak = schedule.peak_amplitude();
    if peak > T::zero() {
        Float::min(T::lit(0.01) / peak, by_window)
    } else {
        by_window
    }
}

/// Step count and stride for an RK4 run: `(n_steps, record_every)`, with
/// `n_steps` a multiple of `record_every` so samples are uniformly spaced.
pub fn rk4_plan<T: Scalar>(
    schedule: &PulseSchedule<T>,
    cfg: &IntegratorConfig<T>,
) -> Result<(usize, usize)> {
    let bound = step_bound(schedule);
    let step = match cfg.step {
        Some(s) => {
            if !(s > T::zero()) || !s.is_finite() {
                return Err(Error::NonPositive {
                    what: "integrator step",
                    value: s.to_f64_lossy(),
                });
            }
            if s > bound * T::lit(1.0 + 1e-12) {
                return Err(Error::StepTooLarge {
                    step: s.to_f64_lossy(),
                    bound: bound.to_f64_lossy(),
                });
            }
            s
        }
        None => bound,
    };
    let min_steps = Float::ceil(schedule.t_max() / step * T::lit(1.0 - 1e-12))
        .to_f64_lossy()
        .max(1.0) as usize;
    let stride = match cfg.record_every {
        Some(0) => return Err(Error::IntegratorConfig("record_every must be >= 1".into())),
        Some(k) => k,
        None => min_steps.div_ceil(DEFAULT_RECORDS).max(1),
    };
    let records = min_steps.div_ceil(stride);
    Ok((records * stride, stride))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Scalar> {
    pub times: Vec<T>,
    pub states: Vec<DensityMatrix<T>>,
    /// `populations[k][site]`.
    pub populations: Vec<Vec<T>>,
    pub purity: Vec<T>,
}

impl<T: Scalar> Trajectory<T> {
    fn with_capacity(n: usize) -> Self {
        Trajectory {
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            populations: Vec::with_capacity(n),
            purity: Vec::with_capacity(n),
        }
    }

    /// Appends a sample after checking positivity and, for `gamma > 0`,
    /// that purity did not increase.
    pub(crate) fn record(
        &mut self,
        spec: &ChainSpec<T>,
        t: T,
        rho: DensityMatrix<T>,
        gamma: T,
    ) -> Result<()> {
        let violation = |what: String| Error::InvariantViolation {
            t: t.to_f64_lossy(),
            what,
        };
        let min = rho.min_eigenvalue();
        if !(min >= T::lit(tol::MIN_EIGENVALUE)) {
            return Err(violation(format!(
                "negative eigenvalue {:e}",
                min.to_f64_lossy()
            )));
        }
        let purity = rho.purity();
        if gamma > T::zero() {
            if let Some(&prev) = self.purity.last() {
                if purity > prev + T::lit(tol::PURITY_STEP) {
                    return Err(violation(format!(
                        "purity increased from {} to {}",
                        prev.to_f64_lossy(),
                        purity.to_f64_lossy()
                    )));
                }
            }
        }
        self.times.push(t);
        self.populations.push(rho.site_populations(spec));
        self.purity.push(purity);
        self.states.push(rho);
        Ok(())
    }

    pub fn final_state(&self) -> &DensityMatrix<T> {
        self.states
            .last()
            .expect("trajectory has at least the initial state")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

pub(crate) fn check_inputs<T: Scalar>(
    spec: &ChainSpec<T>,
    schedule: &PulseSchedule<T>,
    rho0: &DensityMatrix<T>,
    gamma: T,
) -> Result<()> {
    check_gamma(gamma)?;
    if schedule.n_links() != spec.n_links() {
        return Err(Error::LengthMismatch {
            what: "schedule links",
            expected: spec.n_links(),
            found: schedule.n_links(),
        });
    }
    if rho0.dim() != spec.dimension() {
        return Err(Error::DimensionMismatch {
            what: "initial density matrix",
            expected: spec.dimension(),
            found: rho0.dim(),
        });
    }
    Ok(())
}

/// Integrates the dephased master equation from `rho0` over the schedule window.
///
/// With [`Method::OracleExpm`] this forwards to [`propagate_oracle`].
pub fn evolve<T: Scalar>(
    spec: &ChainSpec<T>,
    schedule: &PulseSchedule<T>,
    rho0: &DensityMatrix<T>,
    gamma: T,
    cfg: &IntegratorConfig<T>,
) -> Result<Trajectory<T>> {
    if cfg.method == Method::OracleExpm {
        return propagate_oracle(spec, schedule, rho0, gamma, cfg.samples, cfg.substeps);
    }
    check_inputs(spec, schedule, rho0, gamma)?;
    let (n_steps, stride) = rk4_plan(schedule, cfg)?;
    let d = spec.dimension();
    let t_max = schedule.t_max();
    let n_t = T::count(n_steps);
    let h = t_max / n_t;
    let damp = dephasing_rates(spec, gamma);

    let mut couplings = Couplings::new(spec);
    let mut c_start = couplings.clone();
    let mut amps = vec![T::zero(); spec.n_links()];
    schedule.sample_into(T::zero(), &mut amps);
    c_start.set_amplitudes(&amps);

    let mut rho: Vec<Complex<T>> = rho0.matrix().as_slice().to_vec();
    let zero = real(T::zero());
    let mut k = vec![zero; d * d];
    let mut acc = vec![zero; d * d];
    let mut tmp = vec![zero; d * d];

    let mut traj = Trajectory::with_capacity(n_steps / stride + 1);
    traj.record(spec, T::zero(), rho0.clone(), gamma)?;

    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let sixth = h / T::lit(6.0);
    let mut drift = T::zero();

    for step in 0..n_steps {
        let s = T::count(step);
        // stage 1 at t_k
        rhs_into(&c_start, &damp, &rho, &mut acc);
        // stages 2 and 3 at the midpoint
        schedule.sample_into(t_max * (two * s + T::one()) / (two * n_t), &mut amps);
        couplings.set_amplitudes(&amps);
        for ((t, r), a) in tmp.iter_mut().zip(&rho).zip(&acc) {
            *t = *r + *a * (h * half);
        }
        rhs_into(&couplings, &damp, &tmp, &mut k);
        for (((t, r), a), kk) in tmp.iter_mut().zip(&rho).zip(acc.iter_mut()).zip(&k) {
            *a += *kk * two;
            *t = *r + *kk * (h * half);
        }
        rhs_into(&couplings, &damp, &tmp, &mut k);
        // stage 4 at t_{k+1}
        schedule.sample_into(t_max * (s + T::one()) / n_t, &mut amps);
        c_start.set_amplitudes(&amps);
        for (((t, r), a), kk) in tmp.iter_mut().zip(&rho).zip(acc.iter_mut()).zip(&k) {
            *a += *kk * two;
            *t = *r + *kk * h;
        }
        rhs_into(&c_start, &damp, &tmp, &mut k);
        for ((r, a), kk) in rho.iter_mut().zip(&acc).zip(&k) {
            *r += (*a + *kk) * sixth;
        }

        let t_now = t_max * (s + T::one()) / n_t;
        hermitize_and_normalize(&mut rho, d, &mut drift, t_now)?;

        if (step + 1) % stride == 0 {
            let m = DMatrix::from_column_slice(d, d, &rho);
            traj.record(spec, t_now, DensityMatrix(m), gamma)?;
        }
    }
    Ok(traj)
}

/// Replaces `rho` by `(rho + rho^dag) / 2 / Tr`, failing when the Hermiticity
/// defect or the trace correction (per step or accumulated) exceeds tolerance.
pub(crate) fn hermitize_and_normalize<T: Scalar>(
    rho: &mut [Complex<T>],
    d: usize,
    drift: &mut T,
    t: T,
) -> Result<()> {
    let violation = |what: String| Error::InvariantViolation {
        t: t.to_f64_lossy(),
        what,
    };
    let half = T::lit(0.5);
    let mut defect = T::zero();
    for j in 0..d {
        for i in 0..j {
            let a = rho[i + j * d];
            let b = rho[j + i * d].conj();
            defect = Float::max(defect, (a - b).norm());
            let m = (a + b) * half;
            rho[i + j * d] = m;
            rho[j + i * d] = m.conj();
        }
        rho[j + j * d].im = T::zero();
    }
    if !(defect <= T::lit(tol::HERMITIAN)) {
        return Err(violation(format!(
            "Hermiticity defect {:e}",
            defect.to_f64_lossy()
        )));
    }
    let tr = (0..d).fold(T::zero(), |acc, i| acc + rho[i + i * d].re);
    let dev = tr - T::one();
    *drift += dev;
    if !(Float::abs(dev) <= T::lit(tol::TRACE)) || !(Float::abs(*drift) <= T::lit(tol::TRACE)) {
        return Err(violation(format!(
            "trace drift {:e} (accumulated {:e})",
            dev.to_f64_lossy(),
            drift.to_f64_lossy()
        )));
    }
    let inv = T::one() / tr;
    for r in rho.iter_mut() {
        *r *= inv;
    }
    Ok(())
}
