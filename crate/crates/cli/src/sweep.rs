//! Parallel parameter sweeps. The grid is the cartesian product of the
//! `sweep.*` value lists (keys in lexicographic order, values in listed
//! order); rows are emitted in deterministic grid order regardless of worker
//! count or completion order, so the table is byte-identical across reruns.

use std::path::Path;

use rayon::prelude::*;

use crate::config::{FlatConfig, RunConfig};
use crate::output::{fmt, unix_time_ms, write_file, CsvWriter, Manifest};
use crate::runner::{execute_reduce, execute_simulation, RunError, EXIT_OK};

struct SweepRow {
    values: Vec<String>,
    status: String,
    t_final: Option<f64>,
    steps: Option<usize>,
    norm_threshold_t: Option<f64>,
    tau_collapse_t: Option<f64>,
    dt_underflow_t: Option<f64>,
    riccati_upper: Option<f64>,
    t_star_estimate: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_default()
}

fn run_one(base: &FlatConfig, overrides: &[(String, String)], target: &str) -> SweepRow {
    let mut flat = base.clone();
    for (k, v) in overrides {
        flat.map.insert(k.clone(), v.clone());
    }
    // The per-run config must not recurse into sweep mode.
    flat.map.retain(|k, _| !k.starts_with("sweep."));
    let values: Vec<String> = overrides.iter().map(|(_, v)| v.clone()).collect();

    let cfg = match RunConfig::from_flat(&flat) {
        Ok(c) => c,
        Err(e) => {
            return SweepRow {
                values,
                status: format!("config_error({})", e.0.replace(',', ";")),
                t_final: None,
                steps: None,
                norm_threshold_t: None,
                tau_collapse_t: None,
                dt_underflow_t: None,
                riccati_upper: None,
                t_star_estimate: None,
            }
        }
    };

    if target == "reduce" {
        let out = execute_reduce(&cfg);
        let last_t = out.trace.samples.last().map(|s| s.t);
        SweepRow {
            values,
            status: if out.trace.completed { "completed".into() } else { "blowup".into() },
            t_final: last_t,
            steps: Some(out.trace.samples.len().saturating_sub(1)),
            norm_threshold_t: out.trace.blowup.as_ref().map(|b| b.t_detect),
            tau_collapse_t: None,
            dt_underflow_t: None,
            riccati_upper: if out.riccati_upper.is_finite() {
                Some(out.riccati_upper)
            } else {
                None
            },
            t_star_estimate: out.trace.blowup.as_ref().and_then(|b| b.t_star_estimate),
        }
    } else {
        match execute_simulation(&cfg) {
            Ok(out) => {
                let (norm_t, tau_t, dt_t) = out.detector_times();
                SweepRow {
                    values,
                    status: out.trajectory.termination.label().to_string(),
                    t_final: out.trajectory.samples.last().map(|s| s.t),
                    steps: Some(out.trajectory.steps_accepted),
                    norm_threshold_t: norm_t,
                    tau_collapse_t: tau_t,
                    dt_underflow_t: dt_t,
                    riccati_upper: None,
                    t_star_estimate: None,
                }
            }
            Err(e) => SweepRow {
                values,
                status: format!("error({})", e.message.replace(',', ";")),
                t_final: None,
                steps: None,
                norm_threshold_t: None,
                tau_collapse_t: None,
                dt_underflow_t: None,
                riccati_upper: None,
                t_star_estimate: None,
            },
        }
    }
}

pub fn run_sweep(
    base: &FlatConfig,
    cfg: &RunConfig,
    workers_flag: Option<usize>,
) -> Result<i32, RunError> {
    if cfg.sweep.entries.is_empty() {
        return Err(RunError::config(
            "sweep mode needs at least one sweep.<key> = v1,v2,... entry",
        ));
    }
    let started = unix_time_ms();

    // Deterministic grid order: row-major over keys in lexicographic order.
    let mut grid: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in &cfg.sweep.entries {
        let mut next = Vec::with_capacity(grid.len() * values.len());
        for partial in &grid {
            for v in values {
                let mut row = partial.clone();
                row.push((key.clone(), v.clone()));
                next.push(row);
            }
        }
        grid = next;
    }

    let workers = workers_flag.or(if cfg.sweep.workers > 0 {
        Some(cfg.sweep.workers)
    } else {
        None
    });
    let target = cfg.sweep.target.as_str();
    let rows: Vec<SweepRow> = match workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| RunError::solver(format!("thread pool: {e}")))?;
            pool.install(|| grid.par_iter().map(|o| run_one(base, o, target)).collect())
        }
        None => grid.par_iter().map(|o| run_one(base, o, target)).collect(),
    };

    let mut header: Vec<String> = vec!["index".to_string()];
    header.extend(cfg.sweep.entries.iter().map(|(k, _)| k.clone()));
    header.extend(
        [
            "status",
            "t_final",
            "steps",
            "blowup_time_norm",
            "blowup_time_tau",
            "blowup_time_dt",
            "riccati_upper_time",
            "t_star_estimate",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let mut csv = CsvWriter::new("sweep_table.csv", &header_refs);
    for (i, row) in rows.iter().enumerate() {
        let mut cells = vec![i.to_string()];
        cells.extend(row.values.iter().cloned());
        cells.push(row.status.clone());
        cells.push(opt(row.t_final));
        cells.push(row.steps.map(|s| s.to_string()).unwrap_or_default());
        cells.push(opt(row.norm_threshold_t));
        cells.push(opt(row.tau_collapse_t));
        cells.push(opt(row.dt_underflow_t));
        cells.push(opt(row.riccati_upper));
        cells.push(opt(row.t_star_estimate));
        csv.row(&cells);
    }

    let dir = Path::new(&cfg.output_dir);
    let files = vec![write_file(dir, csv.name(), csv.body()).map_err(RunError::solver)?];
    let mut manifest = Manifest::new("sweep");
    manifest.push_config(&cfg.to_flat());
    manifest.push("run.started_unix_ms", started);
    manifest.push("run.ended_unix_ms", unix_time_ms());
    manifest.push("run.rows", rows.len());
    manifest.push("run.exit_code", EXIT_OK);
    manifest.push_files(&files);
    write_file(dir, "manifest.txt", &manifest.body()).map_err(RunError::solver)?;
    Ok(EXIT_OK)
}
