//! Pointwise jet reduction: the ODE system satisfied by the derivatives of
//! `(h, u)` at the origin for even-`h` / odd-`u` states,
//!
//! ```text
//! alpha2' = -3 beta1 alpha2
//! beta1'  = -beta1^2 - alpha2        (full system)
//! beta1'  = -alpha2                  (simplified system)
//! ```
//!
//! together with the Riccati comparison bound, the conserved quantity of the
//! simplified system, and extraction of jets from PDE states.

use crate::models::ModelState;
use crate::scalar::Real;

/// Spatial derivatives of `(h, u)` at `x = 0`: `alpha[i] = d^i h/dx^i (0)`,
/// `beta[i] = d^i u/dx^i (0)` for `i = 0..3`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointJet<T: Real> {
    pub alpha: [T; 4],
    pub beta: [T; 4],
}

impl<T: Real> PointJet<T> {
    /// Extract the jet spectrally: exact for the resolved field.
    pub fn from_state(s: &ModelState<T>) -> Self {
        let mut alpha = [T::zero(); 4];
        let mut beta = [T::zero(); 4];
        for i in 0..4 {
            alpha[i] = s.h.derivative(i).evaluate_at(T::zero());
            beta[i] = s.u.derivative(i).evaluate_at(T::zero());
        }
        Self { alpha, beta }
    }

    /// For even-`h`/odd-`u` states `beta0 = beta2 = alpha1 = alpha3 = 0`;
    /// returns the largest violation.
    pub fn symmetry_defect(&self) -> T {
        self.beta[0]
            .abs()
            .max(self.beta[2].abs())
            .max(self.alpha[1].abs())
            .max(self.alpha[3].abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JetVariant {
    Full,
    Simplified,
}

impl std::str::FromStr for JetVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(JetVariant::Full),
            "simplified" => Ok(JetVariant::Simplified),
            other => Err(format!("unknown jet variant '{other}' (expected full|simplified)")),
        }
    }
}

/// State of the reduced ODE system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JetState<T: Real> {
    pub alpha2: T,
    pub beta1: T,
    pub t: T,
    pub variant: JetVariant,
}

impl<T: Real> JetState<T> {
    pub fn new(variant: JetVariant, alpha2: T, beta1: T) -> Self {
        Self {
            alpha2,
            beta1,
            t: T::zero(),
            variant,
        }
    }
}

/// Right-hand side `(d alpha2/dt, d beta1/dt)`.
pub fn jet_rhs<T: Real>(j: &JetState<T>) -> (T, T) {
    let da = -T::of(3.0) * j.beta1 * j.alpha2;
    let db = match j.variant {
        JetVariant::Full => -j.beta1 * j.beta1 - j.alpha2,
        JetVariant::Simplified => -j.alpha2,
    };
    (da, db)
}

/// Riccati comparison: with `alpha2(0) >= 0` the full system obeys
/// `beta1(t) <= beta1(0) / (1 + t beta1(0))`, which reaches `-inf` at
/// `t = -1/beta1(0)` when `beta1(0) < 0`. Returns `+inf` otherwise (the
/// bound is vacuous for nonnegative starts).
pub fn riccati_upper_time<T: Real>(beta1_0: T) -> T {
    if beta1_0 < T::zero() {
        -T::one() / beta1_0
    } else {
        T::infinity()
    }
}

/// Conserved along the simplified flow: `alpha2 - (3/2) beta1^2`.
pub fn simplified_invariant<T: Real>(j: &JetState<T>) -> T {
    j.alpha2 - T::of(1.5) * j.beta1 * j.beta1
}

/// `d alpha0/dt = -a beta3 - alpha0 beta1` for the `b = 0` abcd system with
/// even `h` / odd `u`.
pub fn acd_alpha0_rate<T: Real>(j: &PointJet<T>, a: T) -> T {
    -a * j.beta[3] - j.alpha[0] * j.beta[1]
}

#[derive(Clone, Copy, Debug)]
pub struct JetSample<T: Real> {
    pub t: T,
    pub alpha2: T,
    pub beta1: T,
}

#[derive(Clone, Debug)]
pub struct JetBlowup<T: Real> {
    /// Time at which `|beta1|` crossed the detection threshold.
    pub t_detect: T,
    pub beta1_at_detect: T,
    /// Pole time from fitting `beta1 ~ C / (t* - t)` over the last decade of
    /// growth; `None` if fewer than two samples were available.
    pub t_star_estimate: Option<T>,
    pub samples_in_fit: usize,
}

#[derive(Clone, Debug)]
pub struct JetTrace<T: Real> {
    pub samples: Vec<JetSample<T>>,
    pub blowup: Option<JetBlowup<T>>,
    /// True when `t_end` was reached without detection.
    pub completed: bool,
}

const BLOWUP_THRESHOLD: f64 = 1e12;
const STEP_REL_TOL: f64 = 1e-12;

fn rk4_step<T: Real>(j: &JetState<T>, dt: T) -> JetState<T> {
    let eval = |a2: T, b1: T| {
        jet_rhs(&JetState {
            alpha2: a2,
            beta1: b1,
            t: j.t,
            variant: j.variant,
        })
    };
    let half = T::of(0.5);
    let (k1a, k1b) = eval(j.alpha2, j.beta1);
    let (k2a, k2b) = eval(j.alpha2 + half * dt * k1a, j.beta1 + half * dt * k1b);
    let (k3a, k3b) = eval(j.alpha2 + half * dt * k2a, j.beta1 + half * dt * k2b);
    let (k4a, k4b) = eval(j.alpha2 + dt * k3a, j.beta1 + dt * k3b);
    let sixth = dt / T::of(6.0);
    let two = T::of(2.0);
    JetState {
        alpha2: j.alpha2 + sixth * (k1a + two * k2a + two * k3a + k4a),
        beta1: j.beta1 + sixth * (k1b + two * k2b + two * k3b + k4b),
        t: j.t + dt,
        variant: j.variant,
    }
}

/// Adaptive RK4 march of the jet system with step-doubling error control.
/// Records every accepted step. Detection triggers at `|beta1| > 1e12`; the
/// pole time is then extrapolated from the recorded tail.
pub fn integrate_jet<T: Real>(j0: &JetState<T>, dt: T, t_end: T) -> JetTrace<T> {
    assert!(dt > T::zero(), "integrate_jet requires dt > 0");
    let threshold = T::of(BLOWUP_THRESHOLD);
    let tol = T::of(STEP_REL_TOL);
    let dt_floor = T::of(1e-15);
    let dir = if t_end >= j0.t { T::one() } else { -T::one() };

    let mut state = *j0;
    let mut samples = vec![JetSample {
        t: state.t,
        alpha2: state.alpha2,
        beta1: state.beta1,
    }];
    let mut dt_cur = dt;

    loop {
        let remaining = (t_end - state.t).abs();
        if remaining <= T::of(1e-15) * t_end.abs().max(T::one()) {
            return JetTrace {
                samples,
                blowup: None,
                completed: true,
            };
        }
        let dt_eff = dt_cur.min(remaining);
        let step = dir * dt_eff;
        let half = T::of(0.5);

        let full = rk4_step(&state, step);
        let mid = rk4_step(&state, step * half);
        let fine = rk4_step(&mid, step * half);

        let scale = state.alpha2.abs().max(state.beta1.abs()).max(T::one());
        let err = ((full.alpha2 - fine.alpha2).abs()).max((full.beta1 - fine.beta1).abs()) / scale;

        if !err.is_finite() || err > tol {
            dt_cur = dt_eff * half;
            if dt_cur < dt_floor * state.t.abs().max(T::one()) {
                // Cannot resolve further; treat as detection at current state.
                let blowup = fit_pole(&samples, state.beta1, state.t);
                return JetTrace {
                    samples,
                    blowup: Some(blowup),
                    completed: false,
                };
            }
            continue;
        }

        state = fine;
        samples.push(JetSample {
            t: state.t,
            alpha2: state.alpha2,
            beta1: state.beta1,
        });

        if state.beta1.abs() > threshold {
            let blowup = fit_pole(&samples, state.beta1, state.t);
            return JetTrace {
                samples,
                blowup: Some(blowup),
                completed: false,
            };
        }

        if err < tol * T::of(0.015625) && dt_cur < dt {
            dt_cur = (dt_cur * T::of(2.0)).min(dt);
        }
    }
}

/// Fit `beta1 ~ C / (t* - t)` over the last decade of `|beta1|` growth by
/// regressing `t` on `1/beta1`; the intercept is `t*`.
fn fit_pole<T: Real>(samples: &[JetSample<T>], beta1_final: T, t_final: T) -> JetBlowup<T> {
    let cutoff = beta1_final.abs() / T::of(10.0);
    let tail: Vec<&JetSample<T>> = samples
        .iter()
        .filter(|s| s.beta1.abs() >= cutoff && s.beta1 != T::zero())
        .collect();
    let t_star = if tail.len() >= 2 {
        let n = T::from_usize(tail.len()).unwrap();
        let mut sx = T::zero();
        let mut sy = T::zero();
        let mut sxx = T::zero();
        let mut sxy = T::zero();
        for s in &tail {
            let x = T::one() / s.beta1;
            sx = sx + x;
            sy = sy + s.t;
            sxx = sxx + x * x;
            sxy = sxy + x * s.t;
        }
        let denom = n * sxx - sx * sx;
        if denom.abs() > T::zero() {
            let slope = (n * sxy - sx * sy) / denom;
            Some((sy - slope * sx) / n)
        } else {
            None
        }
    } else {
        None
    };
    JetBlowup {
        t_detect: t_final,
        beta1_at_detect: beta1_final,
        t_star_estimate: t_star,
        samples_in_fit: tail.len(),
    }
}
