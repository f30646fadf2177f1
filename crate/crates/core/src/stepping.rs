//! Explicit time integration, forward or backward, with step-doubling error
//! control and three independent blow-up detectors: norm threshold,
//! analyticity-radius collapse, and time-step underflow.

use thiserror::Error;

use crate::diagnostics::{
    analyticity_fit, sample_diagnostics, DiagnosticsConfig, DiagnosticsSeries,
};
use crate::models::{tendencies, ModelError, ModelParams, ModelState};
use crate::scalar::Real;

#[derive(Debug, Error)]
pub enum SteppingError {
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T> = std::result::Result<T, SteppingError>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig<T: Real> {
    /// Base step; the error controller may shrink below this but never grows
    /// past it. Always positive, also for backward runs (`t_end < t_start`).
    pub dt: T,
    pub t_end: T,
    /// Record a snapshot every this many accepted steps.
    pub record_every: usize,
    pub blowup_norm_threshold: T,
    pub dt_min: T,
    /// Re-project `(h, u)` onto even/odd parity at every recorded step.
    pub symmetry_projection: bool,
    /// Relative step-doubling tolerance; `infinity` disables error control.
    pub step_rel_tol: T,
}

impl<T: Real> IntegratorConfig<T> {
    pub fn new(dt: T, t_end: T) -> Self {
        Self {
            dt,
            t_end,
            record_every: 1,
            blowup_norm_threshold: T::of(1e6),
            dt_min: T::of(1e-10),
            symmetry_projection: false,
            step_rel_tol: T::of(1e-8),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > T::zero()) {
            return Err(SteppingError::InvalidConfig("dt must be positive".into()));
        }
        if !(self.dt_min > T::zero() && self.dt_min < self.dt) {
            return Err(SteppingError::InvalidConfig(
                "dt_min must be positive and below dt".into(),
            ));
        }
        if self.record_every == 0 {
            return Err(SteppingError::InvalidConfig(
                "record_every must be at least 1".into(),
            ));
        }
        if !(self.blowup_norm_threshold > T::zero()) {
            return Err(SteppingError::InvalidConfig(
                "blow-up norm threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BlowupReason {
    /// `||h||_{X^0} + ||u||_{X^0}` crossed the threshold.
    NormThreshold { norm: f64, t: f64 },
    /// Fitted analyticity radius fell below three grid spacings.
    AnalyticityCollapse { tau: f64, limit: f64, t: f64 },
    /// Error control pushed the step below `dt_min`.
    DtUnderflow { dt: f64, t: f64 },
}

impl std::fmt::Display for BlowupReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlowupReason::NormThreshold { norm, t } => {
                write!(f, "norm_threshold(norm={norm:.3e},t={t:.6})")
            }
            BlowupReason::AnalyticityCollapse { tau, limit, t } => {
                write!(f, "analyticity_collapse(tau={tau:.3e},limit={limit:.3e},t={t:.6})")
            }
            BlowupReason::DtUnderflow { dt, t } => {
                write!(f, "dt_underflow(dt={dt:.3e},t={t:.6})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Termination {
    Completed,
    BlowupDetected(BlowupReason),
    SolverError(String),
}

impl Termination {
    pub fn label(&self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::BlowupDetected(_) => "blowup",
            Termination::SolverError(_) => "solver_error",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    /// Snapshots at the record cadence; times strictly monotone in the run
    /// direction. Always contains the initial and final states.
    pub samples: Vec<ModelState<T>>,
    pub termination: Termination,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub smallest_dt: T,
}

impl<T: Real> Trajectory<T> {
    pub fn final_state(&self) -> &ModelState<T> {
        self.samples.last().expect("trajectory holds >= 1 sample")
    }
}

/// One classical RK4 update of `(h, u)`; `dt` may be negative for backward
/// steps and `dt = 0` is the identity.
pub fn step_rk4<T: Real>(
    s: &ModelState<T>,
    dt: T,
    p: &ModelParams<T>,
) -> Result<ModelState<T>> {
    let half = T::of(0.5);
    let stage = |base: &ModelState<T>,
                 w: T,
                 k: &(crate::spectral::SpectralField<T>, crate::spectral::SpectralField<T>)|
     -> Result<ModelState<T>> {
        let mut h = base.h.clone();
        let mut u = base.u.clone();
        h.add_scaled(w, &k.0);
        u.add_scaled(w, &k.1);
        Ok(ModelState { h, u, t: base.t + w })
    };

    let k1 = tendencies(s, p)?;
    let s2 = stage(s, dt * half, &k1)?;
    let k2 = tendencies(&s2, p)?;
    let s3 = stage(s, dt * half, &k2)?;
    let k3 = tendencies(&s3, p)?;
    let s4 = stage(s, dt, &k3)?;
    let k4 = tendencies(&s4, p)?;

    let sixth = dt / T::of(6.0);
    let two = T::of(2.0);
    let mut h = s.h.clone();
    let mut u = s.u.clone();
    h.add_scaled(sixth, &k1.0);
    h.add_scaled(sixth * two, &k2.0);
    h.add_scaled(sixth * two, &k3.0);
    h.add_scaled(sixth, &k4.0);
    u.add_scaled(sixth, &k1.1);
    u.add_scaled(sixth * two, &k2.1);
    u.add_scaled(sixth * two, &k3.1);
    u.add_scaled(sixth, &k4.1);
    Ok(ModelState { h, u, t: s.t + dt })
}

fn state_norm<T: Real>(s: &ModelState<T>) -> T {
    s.h.coeff_l1() + s.u.coeff_l1()
}

fn rel_step_error<T: Real>(full: &ModelState<T>, fine: &ModelState<T>) -> T {
    if !full.is_finite() || !fine.is_finite() {
        return T::infinity();
    }
    let dh = &full.h - &fine.h;
    let du = &full.u - &fine.u;
    (dh.coeff_l1() + du.coeff_l1()) / (state_norm(fine) + T::one())
}

/// RK4 march with step halving whenever the step-doubling error estimate
/// exceeds the relative tolerance. Terminates early with `BlowupDetected`
/// when the `X^0` norm crosses the threshold, the fitted analyticity radius
/// drops below `3 * (2 pi / N)`, or the step underflows `dt_min`; model
/// failures (degenerate depth, no convergence) surface as `SolverError` with
/// the partial trajectory retained.
pub fn integrate<T: Real>(
    s0: &ModelState<T>,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
    diag: &DiagnosticsConfig<T>,
) -> Result<(Trajectory<T>, DiagnosticsSeries<T>)> {
    cfg.validate()?;
    p.validate()?;
    diag.validate()
        .map_err(|e| SteppingError::InvalidConfig(e.to_string()))?;

    let dir = if cfg.t_end >= s0.t { T::one() } else { -T::one() };
    let total = (cfg.t_end - s0.t).abs();
    let tau_limit = T::of(3.0) * T::of(2.0) * T::PI() / T::from_usize(s0.grid_size()).unwrap();

    let mut state = s0.clone();
    let mut samples = vec![state.clone()];
    let mut series = DiagnosticsSeries::default();
    series.samples.push(sample_diagnostics(&state, p, diag));

    let mut dt_cur = cfg.dt;
    let mut smallest_dt = cfg.dt;
    let mut accepted = 0usize;
    let mut rejected = 0usize;
    let mut since_record = 0usize;

    let finish = |samples: &mut Vec<ModelState<T>>,
                  series: &mut DiagnosticsSeries<T>,
                  state: &ModelState<T>,
                  since_record: usize,
                  p: &ModelParams<T>,
                  diag: &DiagnosticsConfig<T>| {
        if since_record != 0 {
            samples.push(state.clone());
            series.samples.push(sample_diagnostics(state, p, diag));
        }
    };

    loop {
        let done = (cfg.t_end - state.t) * dir;
        if done <= T::of(1e-14) * total.max(T::one()) {
            finish(&mut samples, &mut series, &state, since_record, p, diag);
            return Ok((
                Trajectory {
                    samples,
                    termination: Termination::Completed,
                    steps_accepted: accepted,
                    steps_rejected: rejected,
                    smallest_dt,
                },
                series,
            ));
        }

        let dt_eff = dt_cur.min((cfg.t_end - state.t).abs());
        let signed = dir * dt_eff;
        let half = T::of(0.5);

        let attempt = || -> Result<(ModelState<T>, T)> {
            let full = step_rk4(&state, signed, p)?;
            let mid = step_rk4(&state, signed * half, p)?;
            let fine = step_rk4(&mid, signed * half, p)?;
            let err = rel_step_error(&full, &fine);
            Ok((fine, err))
        };

        let (fine, err) = match attempt() {
            Ok(pair) => pair,
            Err(SteppingError::Model(e)) => {
                finish(&mut samples, &mut series, &state, since_record, p, diag);
                return Ok((
                    Trajectory {
                        samples,
                        termination: Termination::SolverError(e.to_string()),
                        steps_accepted: accepted,
                        steps_rejected: rejected,
                        smallest_dt,
                    },
                    series,
                ));
            }
            Err(other) => return Err(other),
        };

        if err > cfg.step_rel_tol {
            rejected += 1;
            dt_cur = dt_eff * half;
            smallest_dt = smallest_dt.min(dt_cur);
            if dt_cur < cfg.dt_min {
                finish(&mut samples, &mut series, &state, since_record, p, diag);
                let reason = BlowupReason::DtUnderflow {
                    dt: dt_cur.lossy_f64(),
                    t: state.t.lossy_f64(),
                };
                return Ok((
                    Trajectory {
                        samples,
                        termination: Termination::BlowupDetected(reason),
                        steps_accepted: accepted,
                        steps_rejected: rejected,
                        smallest_dt,
                    },
                    series,
                ));
            }
            continue;
        }

        state = fine;
        accepted += 1;
        since_record += 1;
        smallest_dt = smallest_dt.min(dt_eff);

        // With error control disabled a non-finite state would otherwise be
        // accepted silently (the norm detector cannot compare NaN).
        if !state.is_finite() {
            finish(&mut samples, &mut series, &state, since_record, p, diag);
            return Ok((
                Trajectory {
                    samples,
                    termination: Termination::SolverError(
                        "state became non-finite".to_string(),
                    ),
                    steps_accepted: accepted,
                    steps_rejected: rejected,
                    smallest_dt,
                },
                series,
            ));
        }

        if since_record >= cfg.record_every {
            since_record = 0;
            if cfg.symmetry_projection {
                state.h = state.h.even_projection();
                state.u = state.u.odd_projection();
            }
            samples.push(state.clone());
            series.samples.push(sample_diagnostics(&state, p, diag));
        }

        // Detector 1: norm threshold.
        let norm = state_norm(&state);
        if norm > cfg.blowup_norm_threshold {
            finish(&mut samples, &mut series, &state, since_record, p, diag);
            let reason = BlowupReason::NormThreshold {
                norm: norm.lossy_f64(),
                t: state.t.lossy_f64(),
            };
            return Ok((
                Trajectory {
                    samples,
                    termination: Termination::BlowupDetected(reason),
                    steps_accepted: accepted,
                    steps_rejected: rejected,
                    smallest_dt,
                },
                series,
            ));
        }

        // Detector 2: analyticity-radius collapse. Skipped while the spectra
        // are too clean to fit (degenerate fits).
        let floor = T::of(1e-13);
        let fits = [
            analyticity_fit(&state.h, floor),
            analyticity_fit(&state.u, floor),
        ];
        let mut radius = T::infinity();
        for fit in &fits {
            if !fit.degenerate {
                radius = radius.min(fit.tau);
            }
        }
        if radius < tau_limit {
            finish(&mut samples, &mut series, &state, since_record, p, diag);
            let reason = BlowupReason::AnalyticityCollapse {
                tau: radius.lossy_f64(),
                limit: tau_limit.lossy_f64(),
                t: state.t.lossy_f64(),
            };
            return Ok((
                Trajectory {
                    samples,
                    termination: Termination::BlowupDetected(reason),
                    steps_accepted: accepted,
                    steps_rejected: rejected,
                    smallest_dt,
                },
                series,
            ));
        }

        if err < cfg.step_rel_tol * T::of(0.015625) && dt_cur < cfg.dt {
            dt_cur = (dt_cur * T::of(2.0)).min(cfg.dt);
        }
    }
}
