//! Execution of the four run modes on top of the core library, and the file
//! emission for each. Simulation runs are also callable in-memory (no files)
//! so the sweep harness can reuse them.

use std::path::Path;

use crestfall_core::diagnostics::{
    energy_case_for, shrink_rate, suggest_functional_window, DiagnosticsConfig, DiagnosticsSeries,
    EnergyTracking, FunctionalTracking,
};
use crestfall_core::models::ModelState;
use crestfall_core::State64;
use crestfall_core::reduction::{integrate_jet, riccati_upper_time, JetState, JetTrace};
use crestfall_core::scenarios::{
    make_dry_spot_data, make_negative_well_data, make_sign_change_data,
    run_theorem2_construction, run_theorem3_monitor, ScenarioReport,
};
use crestfall_core::spectral::SpectralField;
use crestfall_core::stepping::{integrate, BlowupReason, Termination, Trajectory};

use crate::config::{InitialData, RunConfig};
use crate::output::{fmt, fmt_bool, unix_time_ms, write_file, CsvWriter, EmittedFile, Manifest};

/// Exit-code taxonomy: scripts branch on blow-up without parsing output.
pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 10;
pub const EXIT_SOLVER: i32 = 20;

#[derive(Debug)]
pub struct RunError {
    pub exit_code: i32,
    pub message: String,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for RunError {}

impl RunError {
    pub fn config(msg: impl ToString) -> Self {
        Self {
            exit_code: EXIT_CONFIG,
            message: msg.to_string(),
        }
    }
    pub fn solver(msg: impl ToString) -> Self {
        Self {
            exit_code: EXIT_SOLVER,
            message: msg.to_string(),
        }
    }
}

type Result<T> = std::result::Result<T, RunError>;

pub fn build_initial_state(cfg: &RunConfig) -> Result<State64> {
    let n = cfg.grid_n;
    let state = match &cfg.initial {
        InitialData::Cosine {
            h_amp,
            h_mode,
            u_amp,
            u_mode,
        } => {
            let (ha, hm, ua, um) = (*h_amp, *h_mode as f64, *u_amp, *u_mode as f64);
            let h = SpectralField::from_fn(n, |x: f64| 1.0 + ha * (hm * x).cos())
                .map_err(RunError::config)?;
            let u = SpectralField::from_fn(n, |x: f64| ua * (um * x).sin())
                .map_err(RunError::config)?;
            ModelState::new(h, u, 0.0).map_err(RunError::config)?
        }
        InitialData::DrySpot { steepness } => {
            let (state, _, _) = make_dry_spot_data(*steepness, n).map_err(RunError::config)?;
            state
        }
        InitialData::SignChange { sigma } => {
            let (state, _) = make_sign_change_data(*sigma, cfg.model.a, n)
                .map_err(RunError::config)?;
            state
        }
        InitialData::NegativeWell { depth, vel } => {
            let (state, _) = make_negative_well_data(*depth, *vel, n).map_err(RunError::config)?;
            state
        }
    };
    if cfg.enforce_zero_mean {
        let mean_h = state.h.mean();
        let mean_u = state.u.mean();
        if (mean_h - 1.0).abs() > 1e-10 || mean_u.abs() > 1e-10 {
            return Err(RunError::config(format!(
                "initial data violates the zero-mean convention (mean h = {mean_h}, mean u = {mean_u}); \
                 set validation.enforce_zero_mean = false to run anyway"
            )));
        }
    }
    Ok(state)
}

fn build_diagnostics(cfg: &RunConfig, s0: &State64) -> Result<DiagnosticsConfig<f64>> {
    let mut diag = DiagnosticsConfig {
        jets: cfg.diag.jets,
        analyticity: cfg.diag.analyticity,
        analyticity_floor: cfg.diag.analyticity_floor,
        hamiltonian: cfg.diag.hamiltonian,
        energy: None,
        functionals: None,
    };
    if cfg.diag.energies {
        let case = energy_case_for(&cfg.model).map_err(RunError::config)?;
        // Case-2 rate needs the initial energy on the full strip nu = 0.9.
        let frak_e0 = s0.h.x_tau_norm(0.9).map_err(RunError::config)?
            + s0.u.derivative(2).x_tau_norm(0.9).map_err(RunError::config)?;
        let k_rate = shrink_rate(&cfg.model, frak_e0).map_err(RunError::config)?;
        diag.energy = Some(EnergyTracking { case, k_rate });
    }
    if cfg.diag.functionals {
        let (omega, sigma) = match (cfg.diag.omega, cfg.diag.sigma) {
            (Some(o), Some(s)) => (o, s),
            _ => suggest_functional_window(s0, &cfg.model).ok_or_else(|| {
                RunError::config(
                    "diagnostics.functionals: no admissible window at t = 0 and no omega/sigma given",
                )
            })?,
        };
        diag.functionals = Some(FunctionalTracking {
            lambda: cfg.diag.lambda,
            omega,
            sigma,
        });
    }
    Ok(diag)
}

pub struct SimulationOutcome {
    pub trajectory: Trajectory<f64>,
    pub diagnostics: DiagnosticsSeries<f64>,
    pub warnings: Vec<String>,
}

impl SimulationOutcome {
    pub fn exit_code(&self) -> i32 {
        match self.trajectory.termination {
            Termination::Completed => EXIT_OK,
            Termination::BlowupDetected(_) => EXIT_BLOWUP,
            Termination::SolverError(_) => EXIT_SOLVER,
        }
    }

    /// Time at which each detector fired, if it did.
    pub fn detector_times(&self) -> (Option<f64>, Option<f64>, Option<f64>) {
        match &self.trajectory.termination {
            Termination::BlowupDetected(BlowupReason::NormThreshold { t, .. }) => {
                (Some(*t), None, None)
            }
            Termination::BlowupDetected(BlowupReason::AnalyticityCollapse { t, .. }) => {
                (None, Some(*t), None)
            }
            Termination::BlowupDetected(BlowupReason::DtUnderflow { t, .. }) => {
                (None, None, Some(*t))
            }
            _ => (None, None, None),
        }
    }
}

pub fn execute_simulation(cfg: &RunConfig) -> Result<SimulationOutcome> {
    let s0 = build_initial_state(cfg)?;
    let diag = build_diagnostics(cfg, &s0)?;
    let warnings = cfg.model.warnings();
    let (trajectory, diagnostics) = integrate(&s0, &cfg.model, &cfg.integrator, &diag)
        .map_err(RunError::config)?;
    Ok(SimulationOutcome {
        trajectory,
        diagnostics,
        warnings,
    })
}

/// Wavenumbers whose amplitudes appear in `state_series.csv`: powers of two
/// up to the retained band.
fn tracked_modes(n: usize) -> Vec<i64> {
    let kmax = (n / 2 - 1) as i64;
    let mut ks = Vec::new();
    let mut k = 1i64;
    while k <= kmax {
        ks.push(k);
        k *= 2;
    }
    ks
}

pub fn emit_simulation_files(
    dir: &Path,
    cfg: &RunConfig,
    outcome: &SimulationOutcome,
) -> Result<Vec<EmittedFile>> {
    let mut files = Vec::new();
    let ks = tracked_modes(cfg.grid_n);

    let mut header: Vec<String> = vec!["t", "h_min", "h_max", "u_min", "u_max"]
        .into_iter()
        .map(String::from)
        .collect();
    for k in &ks {
        header.push(format!("h_abs_k{k}"));
    }
    for k in &ks {
        header.push(format!("u_abs_k{k}"));
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut state_csv = CsvWriter::new("state_series.csv", &header_refs);
    for s in &outcome.trajectory.samples {
        let hg = s.h.to_grid().map_err(RunError::solver)?;
        let ug = s.u.to_grid().map_err(RunError::solver)?;
        let mut row = vec![fmt(s.t), fmt(hg.min()), fmt(hg.max()), fmt(ug.min()), fmt(ug.max())];
        for k in &ks {
            row.push(fmt(s.h.coeff(*k).norm()));
        }
        for k in &ks {
            row.push(fmt(s.u.coeff(*k).norm()));
        }
        state_csv.row(&row);
    }
    files.push(write_file(dir, state_csv.name(), state_csv.body()).map_err(RunError::solver)?);

    if cfg.diag.jets {
        let mut csv = CsvWriter::new(
            "jets.csv",
            &["t", "alpha0", "alpha1", "alpha2", "alpha3", "beta0", "beta1", "beta2", "beta3"],
        );
        for d in &outcome.diagnostics.samples {
            if let Some(j) = &d.jet {
                let mut row = vec![fmt(d.t)];
                row.extend(j.alpha.iter().map(|v| fmt(*v)));
                row.extend(j.beta.iter().map(|v| fmt(*v)));
                csv.row(&row);
            }
        }
        files.push(write_file(dir, csv.name(), csv.body()).map_err(RunError::solver)?);
    }

    if cfg.diag.energies || cfg.diag.analyticity || cfg.diag.hamiltonian {
        let mut csv = CsvWriter::new(
            "energies.csv",
            &["t", "nu", "energy", "tau_h", "tau_u", "hamiltonian"],
        );
        for d in &outcome.diagnostics.samples {
            let (nu, energy) = d
                .energy
                .as_ref()
                .map(|e| (e.nu, e.value))
                .unwrap_or((f64::NAN, f64::NAN));
            let tau = |fit: &Option<crestfall_core::diagnostics::AnalyticityFit<f64>>| {
                fit.as_ref()
                    .map(|f| if f.degenerate { f64::NAN } else { f.tau })
                    .unwrap_or(f64::NAN)
            };
            csv.row(&[
                fmt(d.t),
                fmt(nu),
                fmt(energy),
                fmt(tau(&d.fit_h)),
                fmt(tau(&d.fit_u)),
                fmt(d.hamiltonian.unwrap_or(f64::NAN)),
            ]);
        }
        files.push(write_file(dir, csv.name(), csv.body()).map_err(RunError::solver)?);
    }

    if cfg.diag.functionals {
        let mut csv = CsvWriter::new(
            "functionals.csv",
            &[
                "t", "f_h", "f_u", "hyp1", "hyp2", "hyp3", "hyp4", "hyp5", "rate_bound_h",
                "rate_bound_u",
            ],
        );
        for d in &outcome.diagnostics.samples {
            if let Some(fs) = &d.functionals {
                let bounds = crestfall_core::diagnostics::functional_rate_bounds(fs)
                    .map(|(a, b)| (a, b))
                    .unwrap_or((f64::NAN, f64::NAN));
                csv.row(&[
                    fmt(d.t),
                    fmt(fs.f_h),
                    fmt(fs.f_u),
                    fmt_bool(fs.hypotheses_ok[0]).to_string(),
                    fmt_bool(fs.hypotheses_ok[1]).to_string(),
                    fmt_bool(fs.hypotheses_ok[2]).to_string(),
                    fmt_bool(fs.hypotheses_ok[3]).to_string(),
                    fmt_bool(fs.hypotheses_ok[4]).to_string(),
                    fmt(bounds.0),
                    fmt(bounds.1),
                ]);
            }
        }
        files.push(write_file(dir, csv.name(), csv.body()).map_err(RunError::solver)?);
    }

    Ok(files)
}

fn termination_detail(t: &Termination) -> String {
    match t {
        Termination::Completed => "completed".to_string(),
        Termination::BlowupDetected(r) => format!("{r}"),
        Termination::SolverError(e) => e.clone(),
    }
}

pub fn run_simulate(cfg: &RunConfig) -> Result<i32> {
    let started = unix_time_ms();
    let outcome = execute_simulation(cfg)?;
    let dir = Path::new(&cfg.output_dir);
    let files = emit_simulation_files(dir, cfg, &outcome)?;

    let mut manifest = Manifest::new("simulate");
    manifest.push_config(&cfg.to_flat());
    manifest.push("run.started_unix_ms", started);
    manifest.push("run.ended_unix_ms", unix_time_ms());
    manifest.push("run.termination", outcome.trajectory.termination.label());
    manifest.push(
        "run.termination_detail",
        termination_detail(&outcome.trajectory.termination),
    );
    manifest.push("run.steps_accepted", outcome.trajectory.steps_accepted);
    manifest.push("run.steps_rejected", outcome.trajectory.steps_rejected);
    manifest.push("run.smallest_dt", fmt(outcome.trajectory.smallest_dt));
    for (i, w) in outcome.warnings.iter().enumerate() {
        manifest.push(&format!("run.warning.{i}"), w);
    }
    manifest.push("run.exit_code", outcome.exit_code());
    manifest.push_files(&files);
    write_file(dir, "manifest.txt", &manifest.body()).map_err(RunError::solver)?;
    Ok(outcome.exit_code())
}

pub struct ReduceOutcome {
    pub trace: JetTrace<f64>,
    pub riccati_upper: f64,
}

pub fn execute_reduce(cfg: &RunConfig) -> ReduceOutcome {
    let j0 = JetState::new(cfg.jet.variant, cfg.jet.alpha2, cfg.jet.beta1);
    let trace = integrate_jet(&j0, cfg.jet.dt, cfg.jet.t_end);
    ReduceOutcome {
        trace,
        riccati_upper: riccati_upper_time(cfg.jet.beta1),
    }
}

pub fn run_reduce(cfg: &RunConfig) -> Result<i32> {
    let started = unix_time_ms();
    let outcome = execute_reduce(cfg);
    let dir = Path::new(&cfg.output_dir);

    let mut csv = CsvWriter::new("jet_series.csv", &["t", "alpha2", "beta1", "invariant"]);
    for s in &outcome.trace.samples {
        csv.row(&[
            fmt(s.t),
            fmt(s.alpha2),
            fmt(s.beta1),
            fmt(s.alpha2 - 1.5 * s.beta1 * s.beta1),
        ]);
    }
    let files = vec![write_file(dir, csv.name(), csv.body()).map_err(RunError::solver)?];

    let exit = if outcome.trace.blowup.is_some() { EXIT_BLOWUP } else { EXIT_OK };
    let mut manifest = Manifest::new("reduce");
    manifest.push_config(&cfg.to_flat());
    manifest.push("run.started_unix_ms", started);
    manifest.push("run.ended_unix_ms", unix_time_ms());
    manifest.push("outcome.riccati_upper_time", fmt(outcome.riccati_upper));
    if let Some(b) = &outcome.trace.blowup {
        manifest.push("outcome.blowup_detected_t", fmt(b.t_detect));
        manifest.push("outcome.beta1_at_detect", fmt(b.beta1_at_detect));
        if let Some(t) = b.t_star_estimate {
            manifest.push("outcome.t_star_estimate", fmt(t));
        }
    }
    manifest.push("run.termination", if outcome.trace.completed { "completed" } else { "blowup" });
    manifest.push("run.exit_code", exit);
    manifest.push_files(&files);
    write_file(dir, "manifest.txt", &manifest.body()).map_err(RunError::solver)?;
    Ok(exit)
}

fn report_text(report: &ScenarioReport<f64>) -> String {
    let mut out = String::new();
    out.push_str(&format!("scenario = {}\n", report.scenario));
    for c in &report.checks {
        out.push_str(&format!("check.{}.measured = {}\n", c.name, fmt(c.measured)));
        out.push_str(&format!("check.{}.threshold = {}\n", c.name, fmt(c.threshold)));
        out.push_str(&format!("check.{}.passed = {}\n", c.name, c.passed));
    }
    for (k, v) in &report.outcomes {
        out.push_str(&format!("outcome.{k} = {}\n", fmt(*v)));
    }
    for (i, n) in report.notes.iter().enumerate() {
        out.push_str(&format!("note.{i} = {n}\n"));
    }
    out
}

pub fn run_scenario(cfg: &RunConfig, name: &str) -> Result<i32> {
    let started = unix_time_ms();
    let dir = Path::new(&cfg.output_dir);
    let mut files = Vec::new();
    let mut manifest = Manifest::new(&format!("scenario {name}"));
    manifest.push_config(&cfg.to_flat());
    manifest.push("run.started_unix_ms", started);
    // Hypothesis data deliberately violates the zero-mean surface
    // convention; record that the validation did not apply.
    manifest.push("run.zero_mean_validation", "not_applied_hypothesis_data");

    let exit = match name {
        "dryspot" => {
            let steepness = match cfg.initial {
                InitialData::DrySpot { steepness } => steepness,
                _ => 1.0,
            };
            let (_state, jet, report) =
                make_dry_spot_data(steepness, cfg.grid_n).map_err(RunError::config)?;
            // The dry spot degenerates the dispersive operator, so this data
            // feeds the jet reduction, not the PDE march.
            let j0 = JetState::new(cfg.jet.variant, jet.alpha[2], jet.beta[1]);
            let trace = integrate_jet(&j0, cfg.jet.dt, cfg.jet.t_end);
            let mut csv = CsvWriter::new("jet_series.csv", &["t", "alpha2", "beta1", "invariant"]);
            for s in &trace.samples {
                csv.row(&[
                    fmt(s.t),
                    fmt(s.alpha2),
                    fmt(s.beta1),
                    fmt(s.alpha2 - 1.5 * s.beta1 * s.beta1),
                ]);
            }
            files.push(write_file(dir, csv.name(), csv.body()).map_err(RunError::solver)?);
            files.push(
                write_file(dir, "report.txt", &report_text(&report)).map_err(RunError::solver)?,
            );
            if let Some(b) = &trace.blowup {
                manifest.push("outcome.blowup_detected_t", fmt(b.t_detect));
                if let Some(t) = b.t_star_estimate {
                    manifest.push("outcome.t_star_estimate", fmt(t));
                }
                EXIT_BLOWUP
            } else {
                EXIT_OK
            }
        }
        "theorem2" => {
            let sigma = match cfg.initial {
                InitialData::SignChange { sigma } => sigma,
                _ => 0.1,
            };
            let (s0, data_report) = make_sign_change_data(sigma, cfg.model.a, cfg.grid_n)
                .map_err(RunError::config)?;
            let out = run_theorem2_construction(&s0, &cfg.model, &cfg.integrator, cfg.scenario.delta)
                .map_err(|e| RunError::solver(e.to_string()))?;
            files.push(
                write_file(
                    dir,
                    "report.txt",
                    &format!("{}{}", report_text(&data_report), report_text(&out.report)),
                )
                .map_err(RunError::solver)?,
            );
            let sim = SimulationOutcome {
                trajectory: out.trajectory,
                diagnostics: out.diagnostics,
                warnings: Vec::new(),
            };
            let mut jcfg = cfg.clone();
            jcfg.diag.jets = true;
            files.extend(emit_simulation_files(dir, &jcfg, &sim)?);
            if out.sign_change_time.is_some() { EXIT_OK } else { EXIT_SOLVER }
        }
        "theorem3" => {
            let (depth, vel) = match cfg.initial {
                InitialData::NegativeWell { depth, vel } => (depth, vel),
                _ => (0.3, 0.3),
            };
            let (s0, data_report) =
                make_negative_well_data(depth, vel, cfg.grid_n).map_err(RunError::config)?;
            let out = run_theorem3_monitor(
                &s0,
                &cfg.model,
                &cfg.integrator,
                cfg.scenario.horizon,
                cfg.diag.lambda,
            )
            .map_err(|e| RunError::solver(e.to_string()))?;
            files.push(
                write_file(
                    dir,
                    "report.txt",
                    &format!("{}{}", report_text(&data_report), report_text(&out.report)),
                )
                .map_err(RunError::solver)?,
            );
            let term = out.trajectory.termination.clone();
            let mut fcfg = cfg.clone();
            fcfg.diag.functionals = out.window.is_some();
            if let Some((omega, sigma)) = out.window {
                fcfg.diag.omega = Some(omega);
                fcfg.diag.sigma = Some(sigma);
            }
            let sim = SimulationOutcome {
                trajectory: out.trajectory,
                diagnostics: out.diagnostics,
                warnings: Vec::new(),
            };
            files.extend(emit_simulation_files(dir, &fcfg, &sim)?);
            match term {
                Termination::Completed => EXIT_OK,
                Termination::BlowupDetected(_) => EXIT_BLOWUP,
                Termination::SolverError(_) => EXIT_SOLVER,
            }
        }
        other => {
            return Err(RunError::config(format!(
                "unknown scenario '{other}' (theorem2|theorem3|dryspot)"
            )))
        }
    };

    manifest.push("run.ended_unix_ms", unix_time_ms());
    manifest.push("run.exit_code", exit);
    manifest.push_files(&files);
    write_file(dir, "manifest.txt", &manifest.body()).map_err(RunError::solver)?;
    Ok(exit)
}
