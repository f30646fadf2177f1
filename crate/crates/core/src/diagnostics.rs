//! Blow-up instrumentation: analyticity-strip fitting from Fourier decay,
//! analytic-norm energies on a linearly shrinking strip, singular weighted
//! functionals with hypothesis monitoring, and the sign-change criterion for
//! the `b != 0` Boussinesq case.

use thiserror::Error;

use crate::models::{hamiltonian, ModelParams, ModelState};
use crate::reduction::PointJet;
use crate::scalar::Real;
use crate::spectral::SpectralField;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("strip exhausted: nu = {nu:.4} has fallen to 0.25 or below")]
    StripExhausted { nu: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("functional hypotheses violated; rate bounds are not applicable")]
    HypothesesViolated,
}

pub type Result<T> = std::result::Result<T, DiagnosticsError>;

/// Number of cells in the exact-moment product quadrature.
pub const SINGULAR_QUADRATURE_CELLS: usize = 2048;
/// Fixed evaluation grid for the five hypothesis checks.
pub const HYPOTHESIS_GRID: usize = 512;
/// Tolerance for the pointwise hypothesis inequalities.
pub const HYPOTHESIS_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Analyticity-strip fitting
// ---------------------------------------------------------------------------

/// Least-squares fit of `log |c(k)|` against `|k|`; the negated slope
/// estimates the analyticity-strip half-width.
#[derive(Clone, Copy, Debug)]
pub struct AnalyticityFit<T: Real> {
    pub tau: T,
    pub log_amp: T,
    /// RMS residual of the log-linear fit.
    pub residual: T,
    pub k_min: i64,
    pub k_max: i64,
    pub modes_used: usize,
    /// Set when fewer than 8 modes exceed the floor.
    pub degenerate: bool,
}

pub fn analyticity_fit<T: Real>(f: &SpectralField<T>, floor: T) -> AnalyticityFit<T> {
    let mut pts: Vec<(T, T)> = Vec::new();
    let mut k_min = i64::MAX;
    let mut k_max = i64::MIN;
    for k in 0..=f.max_mode() {
        let a = f.coeff(k).norm();
        if a > floor {
            pts.push((T::from_i64(k).unwrap(), a.ln()));
            k_min = k_min.min(k);
            k_max = k_max.max(k);
        }
    }
    let used = pts.len();
    if used < 8 {
        return AnalyticityFit {
            tau: T::zero(),
            log_amp: T::zero(),
            residual: T::zero(),
            k_min: if used == 0 { 0 } else { k_min },
            k_max: if used == 0 { 0 } else { k_max },
            modes_used: used,
            degenerate: true,
        };
    }
    let n = T::from_usize(used).unwrap();
    let (mut sx, mut sy, mut sxx, mut sxy) = (T::zero(), T::zero(), T::zero(), T::zero());
    for &(x, y) in &pts {
        sx = sx + x;
        sy = sy + y;
        sxx = sxx + x * x;
        sxy = sxy + x * y;
    }
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mut ss = T::zero();
    for &(x, y) in &pts {
        let r = y - (intercept + slope * x);
        ss = ss + r * r;
    }
    AnalyticityFit {
        tau: (-slope).max(T::zero()),
        log_amp: intercept,
        residual: (ss / n).sqrt(),
        k_min,
        k_max,
        modes_used: used,
        degenerate: false,
    }
}

// ---------------------------------------------------------------------------
// Shrinking-strip energies
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnergyCase {
    /// `b, d > 0`: `E = ||h||_{X^nu} + ||u||_{X^nu}`.
    Case1,
    /// `b = c = 0, d > 0`: `E = ||h||_{X^nu} + ||u_xx||_{X^nu}`.
    Case2,
}

/// Select the energy case the parameters fall into.
pub fn energy_case_for<T: Real>(p: &ModelParams<T>) -> Result<EnergyCase> {
    if p.b > T::zero() && p.d > T::zero() {
        Ok(EnergyCase::Case1)
    } else if p.b == T::zero() && p.c == T::zero() && p.d > T::zero() {
        Ok(EnergyCase::Case2)
    } else {
        Err(DiagnosticsError::Domain(format!(
            "parameters (b = {}, c = {}, d = {}) fit neither energy case",
            p.b, p.c, p.d
        )))
    }
}

/// Strip shrink rate: `max(|a|/b, |c|/d) + 1` in case 1 and
/// `max(|a|, 2/d + 4 E(0)) + 1` in case 2.
pub fn shrink_rate<T: Real>(p: &ModelParams<T>, frak_e0: T) -> Result<T> {
    match energy_case_for(p)? {
        EnergyCase::Case1 => Ok((p.a.abs() / p.b).max(p.c.abs() / p.d) + T::one()),
        EnergyCase::Case2 => {
            if frak_e0 < T::zero() {
                return Err(DiagnosticsError::Domain(
                    "case 2 requires a nonnegative initial energy".into(),
                ));
            }
            Ok(p.a.abs().max(T::of(2.0) / p.d + T::of(4.0) * frak_e0) + T::one())
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EnergySample<T: Real> {
    /// Current strip width `nu(t) = 0.9 - k |t|`.
    pub nu: T,
    pub k_rate: T,
    pub value: T,
    pub case: EnergyCase,
}

pub fn energy_sample<T: Real>(
    s: &ModelState<T>,
    k_rate: T,
    case: EnergyCase,
) -> Result<EnergySample<T>> {
    let nu = T::of(0.9) - k_rate * s.t.abs();
    if nu <= T::of(0.25) {
        return Err(DiagnosticsError::StripExhausted { nu: nu.lossy_f64() });
    }
    let norm = |f: &SpectralField<T>| f.x_tau_norm(nu).expect("nu > 0");
    let value = match case {
        EnergyCase::Case1 => norm(&s.h) + norm(&s.u),
        EnergyCase::Case2 => norm(&s.h) + norm(&s.u.derivative(2)),
    };
    Ok(EnergySample {
        nu,
        k_rate,
        value,
        case,
    })
}

// ---------------------------------------------------------------------------
// Singular weighted functionals and their growth bounds
// ---------------------------------------------------------------------------

/// `F_h = -int_0^omega h/x^lambda dx`, `F_u` likewise, plus the five
/// pointwise hypothesis flags evaluated on a fixed 512-point grid:
/// `h < -sigma`, `u <= 0`, `h_x >= 0`, `c h_xxx >= 0`, `a u_xx >= 0`.
#[derive(Clone, Copy, Debug)]
pub struct FunctionalSample<T: Real> {
    pub f_h: T,
    pub f_u: T,
    pub lambda: T,
    pub omega: T,
    pub sigma: T,
    pub hypotheses_ok: [bool; 5],
}

impl<T: Real> FunctionalSample<T> {
    pub fn all_hypotheses_hold(&self) -> bool {
        self.hypotheses_ok.iter().all(|&b| b)
    }
}

fn check_functional_domain<T: Real>(lambda: T, omega: T, sigma: T) -> Result<()> {
    if !(lambda > T::zero() && lambda < T::of(0.5)) {
        return Err(DiagnosticsError::Domain(format!(
            "lambda = {lambda} must lie strictly inside (0, 1/2)"
        )));
    }
    if !(omega > T::zero() && omega <= T::PI()) {
        return Err(DiagnosticsError::Domain(format!(
            "omega = {omega} must lie in (0, pi]"
        )));
    }
    if !(sigma > T::zero()) {
        return Err(DiagnosticsError::Domain(format!(
            "sigma = {sigma} must be positive"
        )));
    }
    Ok(())
}

/// `int_0^omega f(x) x^(-lambda) dx` by a product rule with exact moments:
/// the smooth factor is interpolated by a quadratic through each cell's
/// endpoints and midpoint, and the moments of `x^-lambda`, `x^(1-lambda)`,
/// `x^(2-lambda)` are integrated in closed form. Exact for integrands that
/// are piecewise-linear (or -quadratic) on the quadrature mesh; the `x^-lambda`
/// singularity at the origin is handled by the moments, never sampled.
pub fn singular_moment_integral<T: Real>(
    f: impl Fn(T) -> T,
    lambda: T,
    omega: T,
    cells: usize,
) -> Result<T> {
    if !(lambda > T::zero() && lambda < T::one()) {
        return Err(DiagnosticsError::Domain(format!(
            "moment integral needs 0 < lambda < 1, got {lambda}"
        )));
    }
    if !(omega > T::zero()) || cells == 0 {
        return Err(DiagnosticsError::Domain(
            "moment integral needs omega > 0 and at least one cell".into(),
        ));
    }
    let half_cells = T::from_usize(2 * cells).unwrap();
    let p1 = T::one() - lambda;
    let p2 = T::of(2.0) - lambda;
    let p3 = T::of(3.0) - lambda;
    // Samples at all cell endpoints and midpoints.
    let point = |i: usize| omega * T::from_usize(i).unwrap() / half_cells;
    let samples: Vec<T> = (0..=2 * cells).map(|i| f(point(i))).collect();

    let mut acc = T::zero();
    let mut x0 = T::zero();
    let mut x0p1 = T::zero();
    let mut x0p2 = T::zero();
    let mut x0p3 = T::zero();
    for i in 0..cells {
        let xm = point(2 * i + 1);
        let x1 = point(2 * i + 2);
        let x1p1 = x1.powf(p1);
        let x1p2 = x1.powf(p2);
        let x1p3 = x1.powf(p3);
        let m0 = (x1p1 - x0p1) / p1;
        let m1 = (x1p2 - x0p2) / p2;
        let m2 = (x1p3 - x0p3) / p3;
        // Newton form through (x0, f0), (xm, fm), (x1, f1).
        let f0 = samples[2 * i];
        let fm = samples[2 * i + 1];
        let f1 = samples[2 * i + 2];
        let c1 = (fm - f0) / (xm - x0);
        let c2 = ((f1 - fm) / (x1 - xm) - c1) / (x1 - x0);
        acc = acc
            + f0 * m0
            + c1 * (m1 - x0 * m0)
            + c2 * (m2 - (x0 + xm) * m1 + x0 * xm * m0);
        x0 = x1;
        x0p1 = x1p1;
        x0p2 = x1p2;
        x0p3 = x1p3;
    }
    Ok(acc)
}

pub fn singular_functionals<T: Real>(
    s: &ModelState<T>,
    p: &ModelParams<T>,
    lambda: T,
    omega: T,
    sigma: T,
) -> Result<FunctionalSample<T>> {
    check_functional_domain(lambda, omega, sigma)?;
    let f_h = singular_moment_integral(
        |x| -s.h.evaluate_at(x),
        lambda,
        omega,
        SINGULAR_QUADRATURE_CELLS,
    )?;
    let f_u = singular_moment_integral(
        |x| -s.u.evaluate_at(x),
        lambda,
        omega,
        SINGULAR_QUADRATURE_CELLS,
    )?;

    let hx = s.h.derivative(1);
    let hxxx = s.h.derivative(3);
    let uxx = s.u.derivative(2);
    let tol = T::of(HYPOTHESIS_TOL);
    let mut ok = [true; 5];
    let m = T::from_usize(HYPOTHESIS_GRID - 1).unwrap();
    for i in 0..HYPOTHESIS_GRID {
        let x = omega * T::from_usize(i).unwrap() / m;
        ok[0] &= s.h.evaluate_at(x) < -sigma + tol;
        ok[1] &= s.u.evaluate_at(x) <= tol;
        ok[2] &= hx.evaluate_at(x) >= -tol;
        ok[3] &= p.c * hxxx.evaluate_at(x) >= -tol;
        ok[4] &= p.a * uxx.evaluate_at(x) >= -tol;
    }
    Ok(FunctionalSample {
        f_h,
        f_u,
        lambda,
        omega,
        sigma,
        hypotheses_ok: ok,
    })
}

/// Lower bounds for the functional growth rates,
/// `dF_h/dt >= (lambda sigma / omega) F_u` and
/// `dF_u/dt >= lambda / (2 omega^(2 - lambda)) F_u^2`.
pub fn functional_rate_bounds<T: Real>(fs: &FunctionalSample<T>) -> Result<(T, T)> {
    if !fs.all_hypotheses_hold() {
        return Err(DiagnosticsError::HypothesesViolated);
    }
    let rate_h = fs.lambda * fs.sigma / fs.omega * fs.f_u;
    let rate_u =
        fs.lambda / (T::of(2.0) * fs.omega.powf(T::of(2.0) - fs.lambda)) * fs.f_u * fs.f_u;
    Ok((rate_h, rate_u))
}

/// Pole time of the comparison ODE `z' = lambda/(2 omega^(2-lambda)) z^2`
/// from `z(0) = F_u(0) > 0`: an upper bound for the maximal lifespan under
/// the functional hypotheses.
pub fn riccati_lower_blowup_time<T: Real>(f_u0: T, lambda: T, omega: T) -> Result<T> {
    if !(f_u0 > T::zero()) {
        return Err(DiagnosticsError::Domain(format!(
            "blow-up bound needs F_u(0) > 0, got {f_u0}"
        )));
    }
    if !(lambda > T::zero() && lambda < T::of(0.5)) || !(omega > T::zero()) {
        return Err(DiagnosticsError::Domain(
            "blow-up bound needs lambda in (0, 1/2) and omega > 0".into(),
        ));
    }
    Ok(T::of(2.0) * omega.powf(T::of(2.0) - lambda) / (lambda * f_u0))
}

/// Largest window `[0, omega]` on which all five functional hypotheses hold
/// with a strict margin, together with `sigma = -max h` on it. `None` when no
/// usable window exists.
pub fn suggest_functional_window<T: Real>(
    s: &ModelState<T>,
    p: &ModelParams<T>,
) -> Option<(T, T)> {
    let margin = T::of(1e-9);
    let hx = s.h.derivative(1);
    let hxxx = s.h.derivative(3);
    let uxx = s.u.derivative(2);
    let m = HYPOTHESIS_GRID;
    let mf = T::from_usize(m).unwrap();
    let mut h_max = s.h.evaluate_at(T::zero());
    let mut omega = None;
    for i in 0..m {
        let x = T::PI() * T::from_usize(i + 1).unwrap() / mf;
        let good = s.h.evaluate_at(x) <= -margin
            && s.u.evaluate_at(x) <= margin
            && hx.evaluate_at(x) >= -margin
            && p.c * hxxx.evaluate_at(x) >= -margin
            && p.a * uxx.evaluate_at(x) >= -margin;
        if !good {
            break;
        }
        h_max = h_max.max(s.h.evaluate_at(x));
        omega = Some(x);
    }
    let omega = omega?;
    let sigma = -h_max;
    if sigma > margin {
        Some((omega, sigma))
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Sign-change criterion for b != 0
// ---------------------------------------------------------------------------

/// Sign-change criterion for the `b != 0` Boussinesq case:
///
/// ```text
/// (a/b) u0_x(0) + int_T K(y) [ (h0 u0)_x + a u0_x ](y) dy,   K(y) = sum_n exp(-|y + 2 pi n|/sqrt(b)) / sqrt(b)
/// ```
///
/// Negativity is the sign-change hypothesis. Evaluated in Fourier space: the
/// periodized kernel has coefficients `2 / (2 pi (1 + b k^2))`, i.e. exactly
/// twice the Green's function of `(1 - b d^2/dx^2)`; that factor 2 is the
/// calibration constant between this expression and the multiplier form.
pub fn sign_change_criterion_b<T: Real>(
    h0: &SpectralField<T>,
    u0: &SpectralField<T>,
    a: T,
    b: T,
) -> Result<T> {
    validate_b(b)?;
    let w = bracket_field(h0, u0, a)?;
    let mut integral = w.coeff(0).re;
    for k in 1..=w.max_mode() {
        let k2 = T::of((k * k) as f64);
        integral = integral + T::of(2.0) * w.coeff(k).re / (T::one() + b * k2);
    }
    let slope = u0.derivative(1).evaluate_at(T::zero());
    Ok(a / b * slope + T::of(2.0) * integral)
}

/// Same expression, evaluated by direct quadrature of the periodized kernel
/// lattice sum (truncated once `exp(-2 pi n / sqrt(b)) < 1e-15`); retained as
/// a cross-check of the Fourier path.
pub fn sign_change_kernel_sum<T: Real>(
    h0: &SpectralField<T>,
    u0: &SpectralField<T>,
    a: T,
    b: T,
) -> Result<T> {
    validate_b(b)?;
    let w = bracket_field(h0, u0, a)?;
    let s = b.sqrt();
    let n_max = (s * T::of(1e15_f64.ln()) / (T::of(2.0) * T::PI()))
        .ceil()
        .to_usize()
        .unwrap_or(0) as i64;
    let kernel = |y: T| {
        let mut acc = T::zero();
        for n in -n_max..=n_max {
            let shift = y + T::of(2.0) * T::PI() * T::from_i64(n).unwrap();
            acc = acc + (-shift.abs() / s).exp() / s;
        }
        acc
    };
    // The kernel kinks at y = 0; integrate each half with composite
    // Gauss-Legendre panels.
    let (nodes, weights) = gauss_legendre::<T>(10);
    let panels = 48;
    let mut integral = T::zero();
    for half in [(-T::PI(), T::zero()), (T::zero(), T::PI())] {
        let width = (half.1 - half.0) / T::from_usize(panels).unwrap();
        for p in 0..panels {
            let lo = half.0 + width * T::from_usize(p).unwrap();
            let mid = lo + width * T::of(0.5);
            let scale = width * T::of(0.5);
            for (x, wq) in nodes.iter().zip(&weights) {
                let y = mid + scale * *x;
                integral = integral + *wq * scale * kernel(y) * w.evaluate_at(y);
            }
        }
    }
    let slope = u0.derivative(1).evaluate_at(T::zero());
    Ok(a / b * slope + integral)
}

fn bracket_field<T: Real>(
    h0: &SpectralField<T>,
    u0: &SpectralField<T>,
    a: T,
) -> Result<SpectralField<T>> {
    let hu = h0
        .multiply(u0)
        .map_err(|e| DiagnosticsError::Domain(e.to_string()))?;
    let mut w = hu.derivative(1);
    w.add_scaled(a, &u0.derivative(1));
    Ok(w)
}

fn validate_b<T: Real>(b: T) -> Result<()> {
    if !(b > T::zero()) {
        return Err(DiagnosticsError::Domain(format!(
            "sign-change criterion needs b > 0, got {b}"
        )));
    }
    Ok(())
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    for i in 0..n {
        let mut x = T::of(
            (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos(),
        );
        for _ in 0..100 {
            let (pn, dpn) = legendre(n, x);
            let dx = pn / dpn;
            x = x - dx;
            if dx.abs() < T::of(1e-16) {
                break;
            }
        }
        let (_, dpn) = legendre(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = T::of(2.0) / ((T::one() - x * x) * dpn * dpn);
    }
    (nodes, weights)
}

fn legendre<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for k in 2..=n {
        let kf = T::from_usize(k).unwrap();
        let p2 = ((T::of(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = T::from_usize(n).unwrap() * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}

// ---------------------------------------------------------------------------
// Per-step sampling used by the integrator
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct EnergyTracking<T: Real> {
    pub case: EnergyCase,
    pub k_rate: T,
}

#[derive(Clone, Copy, Debug)]
pub struct FunctionalTracking<T: Real> {
    pub lambda: T,
    pub omega: T,
    pub sigma: T,
}

#[derive(Clone, Debug)]
pub struct DiagnosticsConfig<T: Real> {
    pub jets: bool,
    pub analyticity: bool,
    pub analyticity_floor: T,
    pub hamiltonian: bool,
    pub energy: Option<EnergyTracking<T>>,
    pub functionals: Option<FunctionalTracking<T>>,
}

impl<T: Real> Default for DiagnosticsConfig<T> {
    fn default() -> Self {
        Self {
            jets: false,
            analyticity: false,
            analyticity_floor: T::of(1e-13),
            hamiltonian: false,
            energy: None,
            functionals: None,
        }
    }
}

impl<T: Real> DiagnosticsConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if let Some(f) = &self.functionals {
            check_functional_domain(f.lambda, f.omega, f.sigma)?;
        }
        if !(self.analyticity_floor > T::zero()) {
            return Err(DiagnosticsError::Domain(
                "analyticity floor must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One time-slice record.
#[derive(Clone, Debug)]
pub struct DiagnosticsSample<T: Real> {
    pub t: T,
    pub x0_norm_h: T,
    pub x0_norm_u: T,
    pub jet: Option<PointJet<T>>,
    pub fit_h: Option<AnalyticityFit<T>>,
    pub fit_u: Option<AnalyticityFit<T>>,
    pub hamiltonian: Option<T>,
    pub energy: Option<EnergySample<T>>,
    pub strip_exhausted: bool,
    pub functionals: Option<FunctionalSample<T>>,
}

#[derive(Clone, Debug)]
pub struct DiagnosticsSeries<T: Real> {
    pub samples: Vec<DiagnosticsSample<T>>,
}

impl<T: Real> Default for DiagnosticsSeries<T> {
    fn default() -> Self {
        Self {
            samples: Vec::new(),
        }
    }
}

pub fn sample_diagnostics<T: Real>(
    s: &ModelState<T>,
    p: &ModelParams<T>,
    cfg: &DiagnosticsConfig<T>,
) -> DiagnosticsSample<T> {
    let (energy, strip_exhausted) = match &cfg.energy {
        None => (None, false),
        Some(track) => match energy_sample(s, track.k_rate, track.case) {
            Ok(sample) => (Some(sample), false),
            Err(_) => (None, true),
        },
    };
    DiagnosticsSample {
        t: s.t,
        x0_norm_h: s.h.coeff_l1(),
        x0_norm_u: s.u.coeff_l1(),
        jet: cfg.jets.then(|| PointJet::from_state(s)),
        fit_h: cfg
            .analyticity
            .then(|| analyticity_fit(&s.h, cfg.analyticity_floor)),
        fit_u: cfg
            .analyticity
            .then(|| analyticity_fit(&s.u, cfg.analyticity_floor)),
        hamiltonian: cfg.hamiltonian.then(|| hamiltonian(s, p)),
        energy,
        strip_exhausted,
        functionals: cfg
            .functionals
            .as_ref()
            .and_then(|f| singular_functionals(s, p, f.lambda, f.omega, f.sigma).ok()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelParams, ModelState, ModelVariant};
    use num_complex::Complex;

    type F = SpectralField<f64>;

    fn synthetic_decay(n: usize, tau: f64) -> F {
        let mut f = F::zeros(n).unwrap();
        for k in 0..=f.max_mode() {
            f.set_coeff(k, Complex::new((-tau * k as f64).exp(), 0.0));
        }
        f
    }

    #[test]
    fn fit_recovers_exact_decay() {
        for tau in [0.1, 0.7, 2.0] {
            let f = synthetic_decay(64, tau);
            let fit = analyticity_fit(&f, 1e-13);
            assert!(!fit.degenerate);
            assert!((fit.tau - tau).abs() < 1e-6, "tau = {tau}, fit = {}", fit.tau);
        }
    }

    #[test]
    fn fit_recovers_geometric_ratio() {
        let n = 64;
        let mut f = F::zeros(n).unwrap();
        for k in 0..=f.max_mode() {
            f.set_coeff(k, Complex::new(0.5 * 0.5f64.powi(k as i32), 0.0));
        }
        let fit = analyticity_fit(&f, 1e-13);
        assert!((fit.tau - 2.0f64.ln()).abs() < 1e-3);
    }

    #[test]
    fn fit_flags_degenerate_spectrum() {
        let f = F::from_coeffs(32, &[(1, Complex::new(0.5, 0.0))]).unwrap();
        assert!(analyticity_fit(&f, 1e-13).degenerate);
    }

    #[test]
    fn shrink_rate_cases() {
        let p1 = ModelParams::abcd(-1.0, 1.0 / 3.0, -1.0, 1.0 / 3.0);
        assert_eq!(shrink_rate(&p1, 0.0).unwrap(), 4.0);
        let p2 = ModelParams::abcd(-1.0, 0.0, 0.0, 1.0);
        assert_eq!(shrink_rate(&p2, 0.0).unwrap(), 3.0);
        let p3 = ModelParams::abcd(-1.0, 0.0, 0.0, 0.0);
        assert!(matches!(
            shrink_rate(&p3, 0.0),
            Err(DiagnosticsError::Domain(_))
        ));
    }

    #[test]
    fn energy_samples_and_exhaustion() {
        let n = 32;
        let h = F::from_coeffs(n, &[(1, Complex::new(0.5, 0.0))]).unwrap();
        let u = F::zeros(n).unwrap();
        let s = ModelState::new(h.clone(), u.clone(), 0.0).unwrap();
        let e = energy_sample(&s, 4.0, EnergyCase::Case1).unwrap();
        assert!((e.value - 0.9f64.exp()).abs() < 1e-12);
        assert_eq!(e.nu, 0.9);

        let s2 = ModelState::new(u, h, 0.0).unwrap(); // h = 0, u = cos x
        let e2 = energy_sample(&s2, 4.0, EnergyCase::Case2).unwrap();
        assert!((e2.value - 0.9f64.exp()).abs() < 1e-12);

        let late = ModelState::new(s.h.clone(), s.u.clone(), 0.17).unwrap();
        assert!(matches!(
            energy_sample(&late, 4.0, EnergyCase::Case1),
            Err(DiagnosticsError::StripExhausted { .. })
        ));
    }

    #[test]
    fn moment_integral_closed_forms() {
        let lambda = 0.25;
        for omega in [1.0, std::f64::consts::FRAC_PI_2] {
            let i0 = singular_moment_integral(|_| 1.0, lambda, omega, 2048).unwrap();
            assert!((i0 - omega.powf(1.0 - lambda) / (1.0 - lambda)).abs() < 1e-13);
            let i1 = singular_moment_integral(|x| x, lambda, omega, 2048).unwrap();
            assert!((i1 - omega.powf(2.0 - lambda) / (2.0 - lambda)).abs() < 1e-13);
        }
    }

    #[test]
    fn functional_flags_and_bounds() {
        let n = 64;
        // h = -1 - 0.5 cos x, u = -0.5 (sin x - sin 2x / 4): hypotheses hold
        // on [0, 1] for a = c = -0.2.
        let h = F::from_fn(n, |x| -1.0 - 0.5 * x.cos()).unwrap();
        let u = F::from_fn(n, |x| -0.5 * (x.sin() - (2.0 * x).sin() / 4.0)).unwrap();
        let s = ModelState::new(h, u, 0.0).unwrap();
        let p = {
            let mut p = ModelParams::abcd(-0.2, 0.0, -0.2, 0.0);
            p.variant = ModelVariant::Abcd;
            p
        };
        let omega: f64 = 1.0;
        let sigma = 1.0 + 0.5 * omega.cos() - 1e-6;
        let fs = singular_functionals(&s, &p, 0.25, omega, sigma).unwrap();
        assert!(fs.all_hypotheses_hold(), "flags = {:?}", fs.hypotheses_ok);
        assert!(fs.f_h > 0.0 && fs.f_u > 0.0);
        let (rh, ru) = functional_rate_bounds(&fs).unwrap();
        assert!(rh > 0.0 && ru > 0.0);

        // Direct substitution check of the bound formulas.
        let synthetic = FunctionalSample::<f64> {
            f_h: 1.0,
            f_u: 2.0,
            lambda: 0.25,
            omega: 1.0,
            sigma: 1.0,
            hypotheses_ok: [true; 5],
        };
        let (rh, ru) = functional_rate_bounds(&synthetic).unwrap();
        assert!((rh - 0.5).abs() < 1e-15);
        assert!((ru - 0.5).abs() < 1e-15);

        let mut violated = synthetic;
        violated.hypotheses_ok[3] = false;
        assert!(matches!(
            functional_rate_bounds(&violated),
            Err(DiagnosticsError::HypothesesViolated)
        ));
    }

    #[test]
    fn riccati_lower_times() {
        assert!((riccati_lower_blowup_time(2.0f64, 0.25, 1.0).unwrap() - 4.0).abs() < 1e-15);
        assert!((riccati_lower_blowup_time(1.0f64, 0.25, 1.0).unwrap() - 8.0).abs() < 1e-15);
        assert!(
            riccati_lower_blowup_time(100.0f64, 0.25, 1.0).unwrap()
                < riccati_lower_blowup_time(1.0f64, 0.25, 1.0).unwrap()
        );
        assert!(riccati_lower_blowup_time(0.0f64, 0.25, 1.0).is_err());
    }

    #[test]
    fn sign_change_zero_velocity() {
        let n = 32;
        let h = F::from_fn(n, |x| 1.0 + 0.3 * x.cos()).unwrap();
        let u = F::zeros(n).unwrap();
        let v = sign_change_criterion_b(&h, &u, -1.0, 1.0).unwrap();
        assert!(v.abs() < 1e-14);
        assert!(sign_change_criterion_b(&h, &u, -1.0, 0.0).is_err());
    }

    #[test]
    fn kernel_sum_matches_fourier_route() {
        let n = 64;
        let h = F::from_fn(n, |x| 1.0 + 0.2 * x.cos() - 0.05 * (2.0 * x).sin()).unwrap();
        let u = F::from_fn(n, |x| 0.4 * x.sin() + 0.1 * (3.0 * x).cos()).unwrap();
        for b in [0.25, 1.0, 4.0] {
            let fourier = sign_change_criterion_b(&h, &u, -1.0, b).unwrap();
            let kernel = sign_change_kernel_sum(&h, &u, -1.0, b).unwrap();
            assert!(
                (fourier - kernel).abs() < 1e-8 * fourier.abs().max(1.0),
                "b = {b}: fourier = {fourier}, kernel = {kernel}"
            );
        }
    }

    #[test]
    fn window_suggestion_matches_construction() {
        let n = 64;
        let h = F::from_fn(n, |x| -1.0 - 0.3 * x.cos()).unwrap();
        let u = F::from_fn(n, |x| -0.3 * (x.sin() - (2.0 * x).sin() / 4.0)).unwrap();
        let s = ModelState::new(h, u, 0.0).unwrap();
        let p = ModelParams::abcd(-0.1, 0.0, -0.1, 0.0);
        let (omega, sigma) = suggest_functional_window(&s, &p).expect("window exists");
        // Hypothesis 5 fails beyond x = pi/3 where 1 - 2 cos x changes sign.
        assert!(omega > 0.9 && omega < std::f64::consts::FRAC_PI_3 + 0.05);
        assert!(sigma > 0.0);
        let fs = singular_functionals(&s, &p, 0.25, omega, sigma).unwrap();
        assert!(fs.all_hypotheses_hold());
    }
}
