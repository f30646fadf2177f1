//! Fourier representation of real periodic functions on `[-pi, pi]`.
//!
//! A [`SpectralField`] stores complex coefficients `c(k)` for `k = -K..K`
//! (with `K = N/2 - 1`) in the convention
//!
//! ```text
//! c(k) = (1/2pi) * integral of f(x) exp(-i k x) dx,
//! f(x) = sum over k of c(k) exp(i k x).
//! ```
//!
//! The Nyquist mode `k = N/2` is zeroed permanently and every constructor
//! enforces exact Hermitian symmetry `c(-k) = conj(c(k))`, so a field is
//! always real-valued. Products are formed on a grid zero-padded by a factor
//! of two, which leaves quadratic composites alias-free and makes the result
//! equal to the direct convolution restricted to the retained modes.

use std::any::{Any, TypeId};
use std::cell::RefCell;
use std::collections::HashMap;
use std::ops::{Add, Sub};
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::scalar::Real;

/// Smallest admissible grid.
pub const MIN_GRID: usize = 8;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("grid size {0} is invalid: it must be even and at least {MIN_GRID}")]
    GridSize(usize),
    #[error("grid sizes differ: {0} vs {1}")]
    GridMismatch(usize, usize),
    #[error("Hermitian symmetry broken: imaginary residue {residue:.3e} exceeds {limit:.3e}")]
    SymmetryBroken { residue: f64, limit: f64 },
    #[error("X_tau norm requires tau >= 0, got {0}")]
    NegativeTau(f64),
}

pub type Result<T> = std::result::Result<T, SpectralError>;

// One FFT planner per scalar type per thread; rustfft caches plans by length
// internally, so repeated transforms of the same size reuse twiddle tables.
thread_local! {
    static PLANNERS: RefCell<HashMap<TypeId, Box<dyn Any>>> = RefCell::new(HashMap::new());
}

fn plan<T: Real>(len: usize, inverse: bool) -> Arc<dyn Fft<T>> {
    PLANNERS.with(|cell| {
        let mut map = cell.borrow_mut();
        let entry = map
            .entry(TypeId::of::<T>())
            .or_insert_with(|| Box::new(FftPlanner::<T>::new()) as Box<dyn Any>);
        let planner = entry
            .downcast_mut::<FftPlanner<T>>()
            .expect("planner registered under its own TypeId");
        if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        }
    })
}

fn fft_forward<T: Real>(buf: &mut [Complex<T>]) {
    plan::<T>(buf.len(), false).process(buf);
}

fn fft_inverse<T: Real>(buf: &mut [Complex<T>]) {
    plan::<T>(buf.len(), true).process(buf);
}

fn check_grid_size(n: usize) -> Result<()> {
    if n < MIN_GRID || n % 2 != 0 {
        return Err(SpectralError::GridSize(n));
    }
    Ok(())
}

/// Real samples at the collocation points `x_j = -pi + 2 pi j / N`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField<T: Real> {
    samples: Vec<T>,
}

impl<T: Real> GridField<T> {
    pub fn new(samples: Vec<T>) -> Self {
        Self { samples }
    }

    /// Collocation points for a grid of size `n`.
    pub fn points(n: usize) -> Vec<T> {
        let step = T::of(2.0) * T::PI() / T::from_usize(n).unwrap();
        (0..n)
            .map(|j| -T::PI() + step * T::from_usize(j).unwrap())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn min(&self) -> T {
        self.samples.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.samples
            .iter()
            .copied()
            .fold(T::neg_infinity(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.samples
            .iter()
            .fold(T::zero(), |acc, &s| acc.max(s.abs()))
    }
}

/// A real periodic function stored as Hermitian-symmetric Fourier modes.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<T: Real> {
    /// FFT index order: `k` at index `k` for `k >= 0`, `N + k` for `k < 0`.
    modes: Vec<Complex<T>>,
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(n: usize) -> Result<Self> {
        check_grid_size(n)?;
        Ok(Self {
            modes: vec![Complex::new(T::zero(), T::zero()); n],
        })
    }

    /// Build from `(wavenumber, coefficient)` pairs; the mirror coefficient is
    /// set to the conjugate so the field is real.
    pub fn from_coeffs(n: usize, coeffs: &[(i64, Complex<T>)]) -> Result<Self> {
        let mut f = Self::zeros(n)?;
        for &(k, c) in coeffs {
            f.set_coeff(k, c);
        }
        Ok(f)
    }

    /// Sample a closure on the collocation grid and transform.
    pub fn from_fn(n: usize, f: impl Fn(T) -> T) -> Result<Self> {
        let samples = GridField::points(n).into_iter().map(f).collect();
        transform_forward(&GridField::new(samples))
    }

    pub fn grid_size(&self) -> usize {
        self.modes.len()
    }

    /// Largest retained wavenumber `K = N/2 - 1`.
    pub fn max_mode(&self) -> i64 {
        (self.modes.len() / 2 - 1) as i64
    }

    fn index_of(&self, k: i64) -> usize {
        let n = self.modes.len() as i64;
        if k >= 0 {
            k as usize
        } else {
            (n + k) as usize
        }
    }

    pub fn coeff(&self, k: i64) -> Complex<T> {
        if k.abs() > self.max_mode() {
            Complex::new(T::zero(), T::zero())
        } else {
            self.modes[self.index_of(k)]
        }
    }

    /// Set `c(k)` and force `c(-k) = conj(c(k))`. `k = 0` keeps only the real
    /// part. Wavenumbers beyond `K` are ignored (they are not representable).
    pub fn set_coeff(&mut self, k: i64, c: Complex<T>) {
        if k.abs() > self.max_mode() {
            return;
        }
        if k == 0 {
            self.modes[0] = Complex::new(c.re, T::zero());
            return;
        }
        let i = self.index_of(k);
        let j = self.index_of(-k);
        self.modes[i] = c;
        self.modes[j] = c.conj();
    }

    /// Mean value over the period (the `k = 0` coefficient).
    pub fn mean(&self) -> T {
        self.modes[0].re
    }

    fn enforce_invariants(&mut self) {
        let n = self.modes.len();
        self.modes[0] = Complex::new(self.modes[0].re, T::zero());
        self.modes[n / 2] = Complex::new(T::zero(), T::zero());
        let half = T::of(0.5);
        for k in 1..n / 2 {
            let avg = (self.modes[k] + self.modes[n - k].conj()) * half;
            self.modes[k] = avg;
            self.modes[n - k] = avg.conj();
        }
    }

    /// Apply a Fourier multiplier `m(k)`. The caller must supply a Hermitian
    /// symbol (`m(-k) = conj(m(k))`) for the result to stay real; the stored
    /// invariants are re-enforced afterwards either way.
    pub fn map_modes(&self, m: impl Fn(i64) -> Complex<T>) -> Self {
        let n = self.modes.len();
        let mut out = self.clone();
        for idx in 0..n {
            let k = if idx <= n / 2 {
                idx as i64
            } else {
                idx as i64 - n as i64
            };
            out.modes[idx] = self.modes[idx] * m(k);
        }
        out.enforce_invariants();
        out
    }

    /// Exact spectral derivative: multiplies by `(ik)^order`.
    pub fn derivative(&self, order: usize) -> Self {
        assert!(order <= 4, "derivative order {order} exceeds supported 4");
        self.map_modes(|k| {
            let kp = T::of((k as f64).powi(order as i32));
            match order % 4 {
                0 => Complex::new(kp, T::zero()),
                1 => Complex::new(T::zero(), kp),
                2 => Complex::new(-kp, T::zero()),
                _ => Complex::new(T::zero(), -kp),
            }
        })
    }

    /// Evaluate at an arbitrary point by direct mode summation; exact for a
    /// band-limited field.
    pub fn evaluate_at(&self, x: T) -> T {
        let two = T::of(2.0);
        let mut acc = self.modes[0].re;
        for k in 1..=self.max_mode() {
            let c = self.modes[k as usize];
            let kx = T::from_i64(k).unwrap() * x;
            acc = acc + two * (c.re * kx.cos() - c.im * kx.sin());
        }
        acc
    }

    /// Pointwise product computed on a grid zero-padded by 2 and truncated:
    /// equal to the direct convolution restricted to the retained modes.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        let n = self.modes.len();
        if other.modes.len() != n {
            return Err(SpectralError::GridMismatch(n, other.modes.len()));
        }
        let m = 2 * n;
        let mut a = self.padded_values(m);
        let b = other.padded_values(m);
        for (av, bv) in a.iter_mut().zip(&b) {
            *av = *av * *bv;
        }
        fft_forward(&mut a);
        let scale = T::one() / T::from_usize(m).unwrap();
        let mut out = Self::zeros(n)?;
        for k in -(self.max_mode())..=self.max_mode() {
            let src = if k >= 0 { k as usize } else { (m as i64 + k) as usize };
            let idx = out.index_of(k);
            out.modes[idx] = a[src] * scale;
        }
        out.enforce_invariants();
        Ok(out)
    }

    /// Complex grid values on a (possibly larger) grid of size `m`; used for
    /// dealiased products and exact quadrature of composite integrands.
    fn padded_values(&self, m: usize) -> Vec<Complex<T>> {
        let mut buf = vec![Complex::new(T::zero(), T::zero()); m];
        for k in -(self.max_mode())..=self.max_mode() {
            let dst = if k >= 0 { k as usize } else { (m as i64 + k) as usize };
            buf[dst] = self.coeff(k);
        }
        fft_inverse(&mut buf);
        buf
    }

    /// Real samples on a grid of `m >= N` points (uniform, period `2 pi`).
    /// The absolute location of the sample points is irrelevant for full
    /// period sums, which is what this is used for.
    pub fn padded_samples(&self, m: usize) -> Vec<T> {
        self.padded_values(m).into_iter().map(|v| v.re).collect()
    }

    /// The `X_tau` norm `sum over k of exp(tau |k|) |c(k)|`.
    pub fn x_tau_norm(&self, tau: T) -> Result<T> {
        if tau < T::zero() {
            return Err(SpectralError::NegativeTau(tau.lossy_f64()));
        }
        let mut acc = self.modes[0].norm();
        for k in 1..=self.max_mode() {
            let w = (tau * T::from_i64(k).unwrap()).exp();
            let c = self.modes[k as usize].norm();
            acc = acc + T::of(2.0) * w * c;
        }
        Ok(acc)
    }

    /// `sum |c(k)|`, an upper bound for the sup norm.
    pub fn coeff_l1(&self) -> T {
        self.x_tau_norm(T::zero()).expect("tau = 0 is valid")
    }

    pub fn scaled(&self, c: T) -> Self {
        let mut out = self.clone();
        for v in &mut out.modes {
            *v = *v * c;
        }
        out
    }

    /// In-place `self += c * other` (grids must match).
    pub fn add_scaled(&mut self, c: T, other: &Self) {
        assert_eq!(
            self.modes.len(),
            other.modes.len(),
            "grid sizes differ in add_scaled"
        );
        for (a, b) in self.modes.iter_mut().zip(&other.modes) {
            *a = *a + *b * c;
        }
    }

    /// Even part `(f(x) + f(-x)) / 2`; for a real field this keeps the real
    /// part of every coefficient.
    pub fn even_projection(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.modes {
            *v = Complex::new(v.re, T::zero());
        }
        out.enforce_invariants();
        out
    }

    /// Odd part `(f(x) - f(-x)) / 2`; keeps the imaginary part.
    pub fn odd_projection(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.modes {
            *v = Complex::new(T::zero(), v.im);
        }
        out.enforce_invariants();
        out
    }

    /// Largest deviation from even symmetry (zero for a real even field).
    pub fn even_defect(&self) -> T {
        self.modes
            .iter()
            .fold(T::zero(), |acc, c| acc.max(c.im.abs()))
    }

    /// Largest deviation from odd symmetry (zero for a real odd field).
    pub fn odd_defect(&self) -> T {
        self.modes
            .iter()
            .fold(T::zero(), |acc, c| acc.max(c.re.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.modes.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn to_grid(&self) -> Result<GridField<T>> {
        transform_inverse(self)
    }
}

impl<T: Real> Add for &SpectralField<T> {
    type Output = SpectralField<T>;
    fn add(self, rhs: Self) -> SpectralField<T> {
        let mut out = self.clone();
        out.add_scaled(T::one(), rhs);
        out
    }
}

impl<T: Real> Sub for &SpectralField<T> {
    type Output = SpectralField<T>;
    fn sub(self, rhs: Self) -> SpectralField<T> {
        let mut out = self.clone();
        out.add_scaled(-T::one(), rhs);
        out
    }
}

/// Forward transform: `c(k) = (1/N) sum_j g(x_j) exp(-i k x_j)`.
///
/// The grid starts at `-pi`, which contributes the phase `(-1)^k` relative to
/// a textbook DFT; with `N` even this is `(-1)^idx` uniformly in FFT index
/// order.
pub fn transform_forward<T: Real>(g: &GridField<T>) -> Result<SpectralField<T>> {
    let n = g.len();
    check_grid_size(n)?;
    let mut buf: Vec<Complex<T>> = g
        .samples()
        .iter()
        .map(|&s| Complex::new(s, T::zero()))
        .collect();
    fft_forward(&mut buf);
    let inv_n = T::one() / T::from_usize(n).unwrap();
    let mut field = SpectralField::zeros(n)?;
    for (idx, v) in buf.into_iter().enumerate() {
        let sign = if idx % 2 == 0 { T::one() } else { -T::one() };
        field.modes[idx] = v * (sign * inv_n);
    }
    field.enforce_invariants();
    Ok(field)
}

/// Inverse transform back to grid samples. The imaginary residue of the
/// complex inverse FFT must stay below `1e-12` relative to the sample scale;
/// anything larger means the Hermitian symmetry was broken by hand.
pub fn transform_inverse<T: Real>(f: &SpectralField<T>) -> Result<GridField<T>> {
    let mut buf = f.modes.clone();
    for (idx, v) in buf.iter_mut().enumerate() {
        if idx % 2 == 1 {
            *v = -*v;
        }
    }
    fft_inverse(&mut buf);
    let mut max_re = T::zero();
    let mut max_im = T::zero();
    for v in &buf {
        max_re = max_re.max(v.re.abs());
        max_im = max_im.max(v.im.abs());
    }
    // 1e-12 at f64 scale; wider types would keep it, narrower ones fall
    // back to a machine-epsilon multiple.
    let limit = T::of(1e-12).max(T::of(100.0) * T::epsilon()) * max_re.max(T::one());
    if max_im > limit {
        return Err(SpectralError::SymmetryBroken {
            residue: max_im.lossy_f64(),
            limit: limit.lossy_f64(),
        });
    }
    Ok(GridField::new(buf.into_iter().map(|v| v.re).collect()))
}
