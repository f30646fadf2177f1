//! Initial-data constructors with built-in hypothesis validation, and the
//! orchestrated experiments built on them: the backward/forward sign-change
//! construction and the singular-functional monitor. Constructors never
//! return unvalidated data; every hypothesis check records the measured
//! quantity, not just a verdict.

use thiserror::Error;

use crate::diagnostics::{
    suggest_functional_window, DiagnosticsConfig, DiagnosticsSeries, FunctionalTracking,
};
use crate::models::{ModelParams, ModelState, ModelVariant};
use crate::reduction::{acd_alpha0_rate, riccati_upper_time, PointJet};
use crate::scalar::Real;
use crate::spectral::SpectralField;
use crate::stepping::{integrate, step_rk4, IntegratorConfig, SteppingError, Termination, Trajectory};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("scenario domain error: {0}")]
    Domain(String),
    #[error("initial-data construction failed validation: {0}")]
    ConstructionFailed(String),
    #[error("delta too large: margins still violated after shrinking from {requested} to {final_delta}")]
    DeltaTooLarge { requested: f64, final_delta: f64 },
    #[error("solver failure inside scenario: {0}")]
    Solver(String),
    #[error(transparent)]
    Stepping(#[from] SteppingError),
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

/// One validated hypothesis entry: the measured quantity, the threshold it
/// was compared against, and the verdict.
#[derive(Clone, Debug)]
pub struct HypothesisCheck<T: Real> {
    pub name: String,
    pub measured: T,
    pub threshold: T,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct ScenarioReport<T: Real> {
    pub scenario: String,
    pub checks: Vec<HypothesisCheck<T>>,
    pub outcomes: Vec<(String, T)>,
    pub notes: Vec<String>,
}

impl<T: Real> ScenarioReport<T> {
    fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.to_string(),
            checks: Vec::new(),
            outcomes: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, name: &str, measured: T, threshold: T, passed: bool) {
        self.checks.push(HypothesisCheck {
            name: name.to_string(),
            measured,
            threshold,
            passed,
        });
    }

    fn outcome(&mut self, name: &str, value: T) {
        self.outcomes.push((name.to_string(), value));
    }

    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get_outcome(&self, name: &str) -> Option<T> {
        self.outcomes
            .iter()
            .find(|(n, _)| n == name)
            .map(|&(_, v)| v)
    }
}

const DENSE_GRID: usize = 2048;

fn dense_points<T: Real>() -> Vec<T> {
    let m = T::from_usize(DENSE_GRID).unwrap();
    (0..DENSE_GRID)
        .map(|i| -T::PI() + T::of(2.0) * T::PI() * T::from_usize(i).unwrap() / m)
        .collect()
}

// ---------------------------------------------------------------------------
// Dry-spot data (SGN blow-up hypotheses)
// ---------------------------------------------------------------------------

/// `h0 = 1 - cos x` (dry spot at the origin, `h0''(0) = 1`) and
/// `u0 = -steepness sin x`. The depth is degenerate at `x = 0`, so this data
/// feeds the jet reduction rather than the PDE solver.
pub fn make_dry_spot_data<T: Real>(
    steepness: T,
    n: usize,
) -> Result<(ModelState<T>, PointJet<T>, ScenarioReport<T>)> {
    if !(steepness > T::zero()) {
        return Err(ScenarioError::Domain(format!(
            "steepness must be positive, got {steepness}"
        )));
    }
    if n < 32 {
        return Err(ScenarioError::Domain(format!(
            "dry-spot data needs N >= 32, got {n}"
        )));
    }
    let h = SpectralField::from_fn(n, |x: T| T::one() - x.cos())
        .map_err(|e| ScenarioError::Domain(e.to_string()))?;
    let u = SpectralField::from_fn(n, |x: T| -steepness * x.sin())
        .map_err(|e| ScenarioError::Domain(e.to_string()))?;
    let state = ModelState::new(h, u, T::zero()).map_err(|e| ScenarioError::Domain(e.to_string()))?;
    let jet = PointJet::from_state(&state);

    let mut report = ScenarioReport::new("dry_spot");
    let tol = T::of(1e-12);
    let min_h = dense_points::<T>()
        .iter()
        .map(|&x| state.h.evaluate_at(x))
        .fold(T::infinity(), T::min);
    report.check("a1_depth_nonnegative_min_h", min_h, -tol, min_h >= -tol);
    report.check(
        "a2_even_depth_defect",
        state.h.even_defect(),
        tol,
        state.h.even_defect() <= tol,
    );
    let h0_at_origin = state.h.evaluate_at(T::zero());
    report.check(
        "a2_dry_spot_h_at_origin",
        h0_at_origin,
        tol,
        h0_at_origin.abs() <= tol,
    );
    report.check(
        "a2_alpha2_nonnegative",
        jet.alpha[2],
        T::zero(),
        jet.alpha[2] >= -tol,
    );
    report.check(
        "a3_odd_velocity_defect",
        state.u.odd_defect(),
        tol,
        state.u.odd_defect() <= tol,
    );
    report.check(
        "a3_beta1_negative",
        jet.beta[1],
        T::zero(),
        jet.beta[1] < T::zero(),
    );
    report.outcome("alpha2_0", jet.alpha[2]);
    report.outcome("beta1_0", jet.beta[1]);
    report.outcome("riccati_upper_time", riccati_upper_time(jet.beta[1]));

    if !report.all_checks_passed() {
        return Err(ScenarioError::ConstructionFailed(
            "dry-spot hypotheses failed on constructed data".into(),
        ));
    }
    Ok((state, jet, report))
}

// ---------------------------------------------------------------------------
// Sign-change data (b = c = 0 Boussinesq)
// ---------------------------------------------------------------------------

/// Even analytic `h0` vanishing only at the origin and odd analytic `u0`
/// with `a u0'''(0) > 0`:
///
/// ```text
/// h0 = c1 (1 - cos x) + c2 (1 - cos 2x)^2,   u0 = 2.5 sin x - 0.25 sin 2x
/// ```
///
/// The coefficients are chosen from the requested curvature floor `sigma` and
/// then validated, not asserted, on a dense grid.
pub fn make_sign_change_data<T: Real>(
    sigma: T,
    a: T,
    n: usize,
) -> Result<(ModelState<T>, ScenarioReport<T>)> {
    if !(a < T::zero()) {
        return Err(ScenarioError::Domain(format!(
            "hypothesis (A1) needs a < 0 strictly (a u0'''(0) > 0 is unsatisfiable otherwise), got a = {a}"
        )));
    }
    if !(sigma > T::zero()) {
        return Err(ScenarioError::Domain(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if n < 32 {
        return Err(ScenarioError::Domain(format!(
            "sign-change data needs N >= 32, got {n}"
        )));
    }
    let c1 = T::of(0.75) + sigma / T::of(0.85);
    let c2 = T::of(5.0);
    let h = SpectralField::from_fn(n, |x: T| {
        let g2 = T::one() - (T::of(2.0) * x).cos();
        c1 * (T::one() - x.cos()) + c2 * g2 * g2
    })
    .map_err(|e| ScenarioError::Domain(e.to_string()))?;
    let u = SpectralField::from_fn(n, |x: T| {
        T::of(2.5) * x.sin() - T::of(0.25) * (T::of(2.0) * x).sin()
    })
    .map_err(|e| ScenarioError::Domain(e.to_string()))?;
    let state = ModelState::new(h, u, T::zero()).map_err(|e| ScenarioError::Domain(e.to_string()))?;
    let jet = PointJet::from_state(&state);

    let mut report = ScenarioReport::new("sign_change_data");
    let tol = T::of(1e-12);

    let a_beta3 = a * jet.beta[3];
    report.check("a1_a_beta3_positive", a_beta3, T::zero(), a_beta3 > T::zero());
    let h_origin = state.h.evaluate_at(T::zero());
    report.check("a2_h_zero_at_origin", h_origin, tol, h_origin.abs() <= tol);

    let hxx = state.h.derivative(2);
    let mut min_pos = T::infinity();
    let mut min_outer = T::infinity();
    let mut min_curv = T::infinity();
    for &x in &dense_points::<T>() {
        let hx = state.h.evaluate_at(x);
        let ax = x.abs();
        if ax > T::of(1e-9) {
            min_pos = min_pos.min(hx);
        }
        if ax > T::of(0.5) {
            min_outer = min_outer.min(hx);
        }
        if ax < T::of(0.5) {
            min_curv = min_curv.min(hxx.evaluate_at(x));
        }
    }
    report.check("a3_h_positive_off_origin", min_pos, T::zero(), min_pos > T::zero());
    report.check("a3_h_above_one_outer", min_outer, T::one(), min_outer > T::one());
    report.check("a4_curvature_above_sigma", min_curv, sigma, min_curv > sigma);
    report.outcome("beta3_0", jet.beta[3]);
    report.outcome("alpha0_rate_forward", acd_alpha0_rate(&jet, a));
    report.outcome("sigma_measured", min_curv);

    if !report.all_checks_passed() {
        return Err(ScenarioError::ConstructionFailed(format!(
            "sign-change hypotheses failed for sigma = {sigma}"
        )));
    }
    Ok((state, report))
}

// ---------------------------------------------------------------------------
// Negative-well data (b = d = 0 functional monitor)
// ---------------------------------------------------------------------------

/// Data with a negative well at the origin for the functional monitor:
/// `h0 = -1 - depth cos x` and `u0 = -vel (sin x - sin 2x / 4)`. The second
/// harmonic makes `u0'' <= 0` near the origin, so hypothesis 5 can hold for
/// `a < 0`; a plain `-sin x` violates it everywhere. `h0` has negative mean
/// by design: the functional hypotheses are incompatible with the zero-mean
/// surface convention.
pub fn make_negative_well_data<T: Real>(
    depth: T,
    vel: T,
    n: usize,
) -> Result<(ModelState<T>, ScenarioReport<T>)> {
    if !(depth > T::zero() && depth < T::one()) || !(vel > T::zero()) {
        return Err(ScenarioError::Domain(format!(
            "negative-well data needs 0 < depth < 1 and vel > 0, got depth = {depth}, vel = {vel}"
        )));
    }
    let h = SpectralField::from_fn(n, |x: T| -T::one() - depth * x.cos())
        .map_err(|e| ScenarioError::Domain(e.to_string()))?;
    let u = SpectralField::from_fn(n, |x: T| {
        -vel * (x.sin() - (T::of(2.0) * x).sin() / T::of(4.0))
    })
    .map_err(|e| ScenarioError::Domain(e.to_string()))?;
    let state = ModelState::new(h, u, T::zero()).map_err(|e| ScenarioError::Domain(e.to_string()))?;

    let mut report = ScenarioReport::new("negative_well_data");
    let max_h = dense_points::<T>()
        .iter()
        .map(|&x| state.h.evaluate_at(x))
        .fold(T::neg_infinity(), T::max);
    report.check("h_negative_everywhere", max_h, T::zero(), max_h < T::zero());
    report.outcome("well_depth_at_origin", state.h.evaluate_at(T::zero()));
    if !report.all_checks_passed() {
        return Err(ScenarioError::ConstructionFailed(
            "negative-well data failed validation".into(),
        ));
    }
    Ok((state, report))
}

// ---------------------------------------------------------------------------
// Backward/forward sign-change construction
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Theorem2Outcome<T: Real> {
    pub report: ScenarioReport<T>,
    /// Forward trajectory from the relabelled data.
    pub trajectory: Trajectory<T>,
    pub diagnostics: DiagnosticsSeries<T>,
    pub delta_used: T,
    pub sign_change_time: Option<T>,
}

/// Integrate backward by `delta` (auto-halving until the proof's margin
/// conditions hold), relabel the backward state as new initial data, then
/// integrate forward `2 delta` and locate the sign change of `h(., 0)`.
pub fn run_theorem2_construction<T: Real>(
    s0: &ModelState<T>,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
    delta: T,
) -> Result<Theorem2Outcome<T>> {
    if p.variant != ModelVariant::Abcd || p.b != T::zero() || p.c != T::zero() || p.d < T::zero() {
        return Err(ScenarioError::Domain(
            "theorem-2 construction needs the abcd variant with b = 0, c = 0, d >= 0".into(),
        ));
    }
    if !(delta > T::zero()) {
        return Err(ScenarioError::Domain(format!(
            "delta must be positive, got {delta}"
        )));
    }

    // The curvature floor the data actually has, used for the sigma/2 margin.
    let hxx0 = s0.h.derivative(2);
    let sigma0 = dense_points::<T>()
        .iter()
        .filter(|x| x.abs() < T::of(0.5))
        .map(|&x| hxx0.evaluate_at(x))
        .fold(T::infinity(), T::min);

    let quiet = DiagnosticsConfig::default();
    let mut delta_cur = delta;
    let mut backward_state = None;
    for _ in 0..40 {
        let mut back_cfg = *cfg;
        back_cfg.t_end = -delta_cur;
        let (traj, _) = integrate(s0, p, &back_cfg, &quiet)?;
        if traj.termination == Termination::Completed {
            let sb = traj.final_state().clone();
            let hxx = sb.h.derivative(2);
            let mut min_outer = T::infinity();
            let mut min_curv = T::infinity();
            for &x in &dense_points::<T>() {
                if x.abs() > T::of(0.5) {
                    min_outer = min_outer.min(sb.h.evaluate_at(x));
                } else {
                    min_curv = min_curv.min(hxx.evaluate_at(x));
                }
            }
            let origin = sb.h.evaluate_at(T::zero());
            if min_outer > T::of(0.5) && min_curv > sigma0 / T::of(2.0) && origin > T::zero() {
                backward_state = Some((sb, min_outer, min_curv, origin));
                break;
            }
        }
        delta_cur = delta_cur / T::of(2.0);
    }
    let (sb, min_outer, min_curv, origin) = backward_state.ok_or(ScenarioError::DeltaTooLarge {
        requested: delta.lossy_f64(),
        final_delta: delta_cur.lossy_f64(),
    })?;

    let mut report = ScenarioReport::new("theorem2_construction");
    report.check("margin_outer_depth_above_half", min_outer, T::of(0.5), true);
    report.check("margin_curvature_above_half_sigma", min_curv, sigma0 / T::of(2.0), true);
    report.check("relabelled_h_positive_at_origin", origin, T::zero(), origin > T::zero());

    // Relabel as new initial data at t = 0.
    let s_bar = ModelState {
        h: sb.h,
        u: sb.u,
        t: T::zero(),
    };
    let jet_bar = PointJet::from_state(&s_bar);
    let rate_analytic = acd_alpha0_rate(&jet_bar, p.a);

    // Measured slope of alpha0 at t = 0 by one central RK4 step each way.
    let dt_fd = T::of(1e-4).min(delta_cur / T::of(16.0));
    let fwd = step_rk4(&s_bar, dt_fd, p)?;
    let bwd = step_rk4(&s_bar, -dt_fd, p)?;
    let rate_measured = (fwd.h.evaluate_at(T::zero()) - bwd.h.evaluate_at(T::zero()))
        / (T::of(2.0) * dt_fd);

    let mut fwd_cfg = *cfg;
    fwd_cfg.t_end = T::of(2.0) * delta_cur;
    fwd_cfg.record_every = 1;
    let diag = DiagnosticsConfig {
        jets: true,
        ..DiagnosticsConfig::default()
    };
    let (traj, series) = integrate(&s_bar, p, &fwd_cfg, &diag)?;
    if traj.termination != Termination::Completed {
        return Err(ScenarioError::Solver(format!(
            "forward run ended early: {:?}",
            traj.termination
        )));
    }

    let mut sign_change = None;
    for w in series.samples.windows(2) {
        let (j0, j1) = match (&w[0].jet, &w[1].jet) {
            (Some(a), Some(b)) => (a, b),
            _ => continue,
        };
        if j0.alpha[0] > T::zero() && j1.alpha[0] <= T::zero() {
            let frac = j0.alpha[0] / (j0.alpha[0] - j1.alpha[0]);
            sign_change = Some(w[0].t + frac * (w[1].t - w[0].t));
            break;
        }
    }

    let h_end_origin = traj.final_state().h.evaluate_at(T::zero());
    report.check(
        "h_negative_at_two_delta",
        h_end_origin,
        T::zero(),
        h_end_origin < T::zero(),
    );
    report.outcome("delta_used", delta_cur);
    report.outcome("h_bar0_at_origin", origin);
    report.outcome("h_at_two_delta_origin", h_end_origin);
    report.outcome("alpha0_rate_analytic", rate_analytic);
    report.outcome("alpha0_rate_measured", rate_measured);
    if rate_analytic < T::zero() {
        report.outcome("sign_change_time_linear_estimate", -origin / rate_analytic);
    }
    if let Some(t_sc) = sign_change {
        report.outcome("sign_change_time", t_sc);
    } else {
        report.notes.push("no sign change bracketed in forward run".into());
    }

    Ok(Theorem2Outcome {
        report,
        trajectory: traj,
        diagnostics: series,
        delta_used: delta_cur,
        sign_change_time: sign_change,
    })
}

// ---------------------------------------------------------------------------
// Functional monitor (b = d = 0)
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Theorem3Outcome<T: Real> {
    pub report: ScenarioReport<T>,
    pub trajectory: Trajectory<T>,
    pub diagnostics: DiagnosticsSeries<T>,
    /// Window `(omega, sigma)` the monitor ran with.
    pub window: Option<(T, T)>,
    pub slices_checked: usize,
    pub first_violation: Option<T>,
}

/// Integrate the `b = d = 0` system while monitoring the five functional
/// hypotheses; on every consecutive pair of recorded slices where all five
/// hold, verify the two differential inequalities discretely. The monitor
/// records outcomes, it never asserts blow-up.
pub fn run_theorem3_monitor<T: Real>(
    s0: &ModelState<T>,
    p: &ModelParams<T>,
    cfg: &IntegratorConfig<T>,
    horizon: T,
    lambda: T,
) -> Result<Theorem3Outcome<T>> {
    if p.variant != ModelVariant::Abcd
        || p.b != T::zero()
        || p.d != T::zero()
        || p.a > T::zero()
        || p.c > T::zero()
    {
        return Err(ScenarioError::Domain(
            "theorem-3 monitor needs the abcd variant with b = d = 0 and a, c <= 0".into(),
        ));
    }
    if !(horizon > T::zero()) {
        return Err(ScenarioError::Domain("horizon must be positive".into()));
    }

    let mut report = ScenarioReport::new("theorem3_monitor");
    let window = suggest_functional_window(s0, p);
    let (omega, sigma) = match window {
        Some(w) => w,
        None => {
            report
                .notes
                .push("no window satisfies the five hypotheses at t = 0; nothing to monitor".into());
            return Ok(Theorem3Outcome {
                report,
                trajectory: Trajectory {
                    samples: vec![s0.clone()],
                    termination: Termination::Completed,
                    steps_accepted: 0,
                    steps_rejected: 0,
                    smallest_dt: cfg.dt,
                },
                diagnostics: DiagnosticsSeries::default(),
                window: None,
                slices_checked: 0,
                first_violation: None,
            });
        }
    };
    report.outcome("omega", omega);
    report.outcome("sigma", sigma);

    let mut run_cfg = *cfg;
    run_cfg.t_end = horizon;
    run_cfg.record_every = 1;
    let diag = DiagnosticsConfig {
        jets: false,
        analyticity: true,
        functionals: Some(FunctionalTracking {
            lambda,
            omega,
            sigma,
        }),
        ..DiagnosticsConfig::default()
    };
    let (traj, series) = integrate(s0, p, &run_cfg, &diag)?;

    let kappa_h = lambda * sigma / omega;
    let kappa_u = lambda / (T::of(2.0) * omega.powf(T::of(2.0) - lambda));

    let mut slices = 0usize;
    let mut min_margin_h = T::infinity();
    let mut min_margin_u = T::infinity();
    let mut first_violation = None;
    for s in &series.samples {
        if let Some(fs) = &s.functionals {
            if !fs.all_hypotheses_hold() && first_violation.is_none() {
                first_violation = Some(s.t);
            }
        }
    }
    for w in series.samples.windows(2) {
        let (f0, f1) = match (&w[0].functionals, &w[1].functionals) {
            (Some(a), Some(b)) => (a, b),
            _ => continue,
        };
        if !(f0.all_hypotheses_hold() && f1.all_hypotheses_hold()) {
            continue;
        }
        let dt = w[1].t - w[0].t;
        if dt <= T::zero() {
            continue;
        }
        let rate_h = (f1.f_h - f0.f_h) / dt;
        let rate_u = (f1.f_u - f0.f_u) / dt;
        min_margin_h = min_margin_h.min(rate_h - kappa_h * f0.f_u);
        min_margin_u = min_margin_u.min(rate_u - kappa_u * f0.f_u * f0.f_u);
        slices += 1;
    }

    if slices > 0 {
        report.outcome("slices_checked", T::from_usize(slices).unwrap());
        report.outcome("min_rate_margin_h", min_margin_h);
        report.outcome("min_rate_margin_u", min_margin_u);
    }
    if let Some(f0) = series.samples.first().and_then(|s| s.functionals.as_ref()) {
        if f0.f_u > T::zero() {
            report.outcome(
                "riccati_lower_blowup_time",
                T::of(2.0) * omega.powf(T::of(2.0) - lambda) / (lambda * f0.f_u),
            );
        }
        report.outcome("f_h_initial", f0.f_h);
        report.outcome("f_u_initial", f0.f_u);
    }
    if let Some(t) = first_violation {
        report.outcome("first_hypothesis_violation_t", t);
    }
    if let Some(last) = series.samples.last() {
        report.outcome("x0_norm_final", last.x0_norm_h + last.x0_norm_u);
    }
    report
        .notes
        .push(format!("termination: {:?}", traj.termination));

    Ok(Theorem3Outcome {
        report,
        trajectory: traj,
        diagnostics: series,
        window: Some((omega, sigma)),
        slices_checked: slices,
        first_violation,
    })
}
