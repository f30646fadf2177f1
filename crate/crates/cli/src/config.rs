//! Flat key-value run configuration: `section.key = value` lines, `#`
//! comments, one level of sectioning. Every key can be overridden through the
//! environment with the `CRESTFALL_` prefix, `__` standing for the dot
//! (`CRESTFALL_INTEGRATOR__DT=1e-4`). A parsed [`RunConfig`] serializes back
//! to the same format losslessly.

use std::collections::BTreeMap;

use crestfall_core::models::{ModelParams, ModelVariant};
use crestfall_core::reduction::JetVariant;
use crestfall_core::stepping::IntegratorConfig;

pub const ENV_PREFIX: &str = "CRESTFALL_";

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

/// Raw parsed key-value map.
#[derive(Debug, Clone, Default)]
pub struct FlatConfig {
    pub map: BTreeMap<String, String>,
}

impl FlatConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("line {}: expected 'key = value', got '{raw}'", lineno + 1))
            })?;
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { map })
    }

    /// Apply `CRESTFALL_*` environment overrides on top of the file values.
    pub fn apply_env(&mut self, vars: impl Iterator<Item = (String, String)>) {
        for (name, value) in vars {
            if let Some(rest) = name.strip_prefix(ENV_PREFIX) {
                let key = rest.to_ascii_lowercase().replace("__", ".");
                self.map.insert(key, value);
            }
        }
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError(format!("{key}: expected a number, got '{v}'"))),
        }
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError(format!("{key}: expected an integer, got '{v}'"))),
        }
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| ConfigError(format!("{key}: expected an integer, got '{v}'"))),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some("true") | Some("1") => Ok(true),
            Some("false") | Some("0") => Ok(false),
            Some(v) => Err(ConfigError(format!("{key}: expected true/false, got '{v}'"))),
        }
    }

    fn string_or(&self, key: &str, default: &str) -> String {
        self.get(key).unwrap_or(default).to_string()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialData {
    Cosine {
        h_amp: f64,
        h_mode: i64,
        u_amp: f64,
        u_mode: i64,
    },
    DrySpot {
        steepness: f64,
    },
    SignChange {
        sigma: f64,
    },
    NegativeWell {
        depth: f64,
        vel: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagToggles {
    pub jets: bool,
    pub analyticity: bool,
    pub analyticity_floor: f64,
    pub hamiltonian: bool,
    pub energies: bool,
    pub functionals: bool,
    pub lambda: f64,
    /// `None` means: derive the window from the state's geometry.
    pub omega: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JetRunConfig {
    pub variant: JetVariant,
    pub alpha2: f64,
    pub beta1: f64,
    pub dt: f64,
    pub t_end: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub delta: f64,
    pub horizon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    /// `(target key, values)` in lexicographic key order.
    pub entries: Vec<(String, Vec<String>)>,
    pub workers: usize,
    pub target: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelParams<f64>,
    pub grid_n: usize,
    pub initial: InitialData,
    pub integrator: IntegratorConfig<f64>,
    pub diag: DiagToggles,
    pub enforce_zero_mean: bool,
    pub jet: JetRunConfig,
    pub scenario: ScenarioConfig,
    pub output_dir: String,
    pub seed: u64,
    pub sweep: SweepConfig,
}

const KNOWN_KEYS: &[&str] = &[
    "model.variant",
    "model.a",
    "model.b",
    "model.c",
    "model.d",
    "model.epsilon",
    "model.mu",
    "model.h_min",
    "grid.n",
    "initial.kind",
    "initial.h_amp",
    "initial.h_mode",
    "initial.u_amp",
    "initial.u_mode",
    "initial.steepness",
    "initial.sigma",
    "initial.depth",
    "initial.vel",
    "integrator.dt",
    "integrator.t_end",
    "integrator.record_every",
    "integrator.blowup_norm_threshold",
    "integrator.dt_min",
    "integrator.symmetry_projection",
    "integrator.step_rel_tol",
    "diagnostics.jets",
    "diagnostics.analyticity",
    "diagnostics.analyticity_floor",
    "diagnostics.hamiltonian",
    "diagnostics.energies",
    "diagnostics.functionals",
    "diagnostics.lambda",
    "diagnostics.omega",
    "diagnostics.sigma",
    "validation.enforce_zero_mean",
    "jet.variant",
    "jet.alpha2",
    "jet.beta1",
    "jet.dt",
    "jet.t_end",
    "scenario.delta",
    "scenario.horizon",
    "output.dir",
    "seed",
    "sweep.workers",
    "sweep.target",
];

impl RunConfig {
    pub fn from_flat(cfg: &FlatConfig) -> Result<Self> {
        // Reject typos early: every key must be known or a sweep override of
        // a known key.
        for key in cfg.map.keys() {
            let known = KNOWN_KEYS.contains(&key.as_str())
                || key
                    .strip_prefix("sweep.")
                    .map(|rest| KNOWN_KEYS.contains(&rest))
                    .unwrap_or(false);
            if !known {
                return Err(ConfigError(format!("unknown config key '{key}'")));
            }
        }

        let variant: ModelVariant = cfg
            .string_or("model.variant", "nsw")
            .parse()
            .map_err(|e: String| ConfigError(format!("model.variant: {e}")))?;
        let mut model = ModelParams::new(variant);
        model.a = cfg.f64_or("model.a", 0.0)?;
        model.b = cfg.f64_or("model.b", 0.0)?;
        model.c = cfg.f64_or("model.c", 0.0)?;
        model.d = cfg.f64_or("model.d", 0.0)?;
        model.epsilon = cfg.f64_or("model.epsilon", 1.0)?;
        model.mu = cfg.f64_or("model.mu", 1.0)?;
        model.h_min = cfg.f64_or("model.h_min", 1e-6)?;
        model
            .validate()
            .map_err(|e| ConfigError(format!("model parameters: {e}")))?;

        let grid_n = cfg.usize_or("grid.n", 128)?;

        let initial = match cfg.string_or("initial.kind", "cosine").as_str() {
            "cosine" => InitialData::Cosine {
                h_amp: cfg.f64_or("initial.h_amp", 0.1)?,
                h_mode: cfg.usize_or("initial.h_mode", 1)? as i64,
                u_amp: cfg.f64_or("initial.u_amp", -0.1)?,
                u_mode: cfg.usize_or("initial.u_mode", 1)? as i64,
            },
            "dry_spot" => InitialData::DrySpot {
                steepness: cfg.f64_or("initial.steepness", 1.0)?,
            },
            "sign_change" => InitialData::SignChange {
                sigma: cfg.f64_or("initial.sigma", 0.1)?,
            },
            "negative_well" => InitialData::NegativeWell {
                depth: cfg.f64_or("initial.depth", 0.3)?,
                vel: cfg.f64_or("initial.vel", 0.3)?,
            },
            other => {
                return Err(ConfigError(format!(
                    "initial.kind: unknown kind '{other}' (cosine|dry_spot|sign_change|negative_well)"
                )))
            }
        };

        let mut integrator = IntegratorConfig::new(
            cfg.f64_or("integrator.dt", 1e-3)?,
            cfg.f64_or("integrator.t_end", 1.0)?,
        );
        integrator.record_every = cfg.usize_or("integrator.record_every", 10)?;
        integrator.blowup_norm_threshold = cfg.f64_or("integrator.blowup_norm_threshold", 1e6)?;
        integrator.dt_min = cfg.f64_or("integrator.dt_min", 1e-10)?;
        integrator.symmetry_projection = cfg.bool_or("integrator.symmetry_projection", false)?;
        integrator.step_rel_tol = cfg.f64_or("integrator.step_rel_tol", 1e-8)?;
        integrator
            .validate()
            .map_err(|e| ConfigError(format!("integrator: {e}")))?;

        let diag = DiagToggles {
            jets: cfg.bool_or("diagnostics.jets", false)?,
            analyticity: cfg.bool_or("diagnostics.analyticity", false)?,
            analyticity_floor: cfg.f64_or("diagnostics.analyticity_floor", 1e-13)?,
            hamiltonian: cfg.bool_or("diagnostics.hamiltonian", false)?,
            energies: cfg.bool_or("diagnostics.energies", false)?,
            functionals: cfg.bool_or("diagnostics.functionals", false)?,
            lambda: cfg.f64_or("diagnostics.lambda", 0.25)?,
            omega: cfg
                .get("diagnostics.omega")
                .map(|v| {
                    v.parse()
                        .map_err(|_| ConfigError(format!("diagnostics.omega: bad number '{v}'")))
                })
                .transpose()?,
            sigma: cfg
                .get("diagnostics.sigma")
                .map(|v| {
                    v.parse()
                        .map_err(|_| ConfigError(format!("diagnostics.sigma: bad number '{v}'")))
                })
                .transpose()?,
        };

        let jet = JetRunConfig {
            variant: cfg
                .string_or("jet.variant", "full")
                .parse()
                .map_err(|e: String| ConfigError(format!("jet.variant: {e}")))?,
            alpha2: cfg.f64_or("jet.alpha2", 0.0)?,
            beta1: cfg.f64_or("jet.beta1", -1.0)?,
            dt: cfg.f64_or("jet.dt", 1e-3)?,
            t_end: cfg.f64_or("jet.t_end", 2.0)?,
        };
        if jet.dt <= 0.0 {
            return Err(ConfigError("jet.dt: must be positive".into()));
        }

        let scenario = ScenarioConfig {
            delta: cfg.f64_or("scenario.delta", 0.02)?,
            horizon: cfg.f64_or("scenario.horizon", 0.05)?,
        };

        let mut entries: Vec<(String, Vec<String>)> = Vec::new();
        for (key, value) in &cfg.map {
            if let Some(target) = key.strip_prefix("sweep.") {
                if target == "workers" || target == "target" {
                    continue;
                }
                let values: Vec<String> = value
                    .split(',')
                    .map(|v| v.trim().to_string())
                    .filter(|v| !v.is_empty())
                    .collect();
                if values.is_empty() {
                    return Err(ConfigError(format!("{key}: empty sweep value list")));
                }
                entries.push((target.to_string(), values));
            }
        }
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        let sweep = SweepConfig {
            entries,
            workers: cfg.usize_or("sweep.workers", 0)?,
            target: cfg.string_or("sweep.target", "simulate"),
        };
        if sweep.target != "simulate" && sweep.target != "reduce" {
            return Err(ConfigError(format!(
                "sweep.target: expected simulate|reduce, got '{}'",
                sweep.target
            )));
        }

        Ok(RunConfig {
            model,
            grid_n,
            initial,
            integrator,
            diag,
            enforce_zero_mean: cfg.bool_or("validation.enforce_zero_mean", true)?,
            jet,
            scenario,
            output_dir: cfg.string_or("output.dir", "out"),
            seed: cfg.u64_or("seed", 0)?,
            sweep,
        })
    }

    /// Full echo of the effective configuration, parseable by
    /// [`FlatConfig::parse`]; `from_flat(to_flat(c)) == c`.
    pub fn to_flat(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let f = |x: f64| format!("{x:e}");
        m.insert("model.variant".into(), self.model.variant.name().into());
        m.insert("model.a".into(), f(self.model.a));
        m.insert("model.b".into(), f(self.model.b));
        m.insert("model.c".into(), f(self.model.c));
        m.insert("model.d".into(), f(self.model.d));
        m.insert("model.epsilon".into(), f(self.model.epsilon));
        m.insert("model.mu".into(), f(self.model.mu));
        m.insert("model.h_min".into(), f(self.model.h_min));
        m.insert("grid.n".into(), self.grid_n.to_string());
        match &self.initial {
            InitialData::Cosine {
                h_amp,
                h_mode,
                u_amp,
                u_mode,
            } => {
                m.insert("initial.kind".into(), "cosine".into());
                m.insert("initial.h_amp".into(), f(*h_amp));
                m.insert("initial.h_mode".into(), h_mode.to_string());
                m.insert("initial.u_amp".into(), f(*u_amp));
                m.insert("initial.u_mode".into(), u_mode.to_string());
            }
            InitialData::DrySpot { steepness } => {
                m.insert("initial.kind".into(), "dry_spot".into());
                m.insert("initial.steepness".into(), f(*steepness));
            }
            InitialData::SignChange { sigma } => {
                m.insert("initial.kind".into(), "sign_change".into());
                m.insert("initial.sigma".into(), f(*sigma));
            }
            InitialData::NegativeWell { depth, vel } => {
                m.insert("initial.kind".into(), "negative_well".into());
                m.insert("initial.depth".into(), f(*depth));
                m.insert("initial.vel".into(), f(*vel));
            }
        }
        m.insert("integrator.dt".into(), f(self.integrator.dt));
        m.insert("integrator.t_end".into(), f(self.integrator.t_end));
        m.insert(
            "integrator.record_every".into(),
            self.integrator.record_every.to_string(),
        );
        m.insert(
            "integrator.blowup_norm_threshold".into(),
            f(self.integrator.blowup_norm_threshold),
        );
        m.insert("integrator.dt_min".into(), f(self.integrator.dt_min));
        m.insert(
            "integrator.symmetry_projection".into(),
            self.integrator.symmetry_projection.to_string(),
        );
        m.insert("integrator.step_rel_tol".into(), f(self.integrator.step_rel_tol));
        m.insert("diagnostics.jets".into(), self.diag.jets.to_string());
        m.insert(
            "diagnostics.analyticity".into(),
            self.diag.analyticity.to_string(),
        );
        m.insert(
            "diagnostics.analyticity_floor".into(),
            f(self.diag.analyticity_floor),
        );
        m.insert(
            "diagnostics.hamiltonian".into(),
            self.diag.hamiltonian.to_string(),
        );
        m.insert("diagnostics.energies".into(), self.diag.energies.to_string());
        m.insert(
            "diagnostics.functionals".into(),
            self.diag.functionals.to_string(),
        );
        m.insert("diagnostics.lambda".into(), f(self.diag.lambda));
        if let Some(o) = self.diag.omega {
            m.insert("diagnostics.omega".into(), f(o));
        }
        if let Some(s) = self.diag.sigma {
            m.insert("diagnostics.sigma".into(), f(s));
        }
        m.insert(
            "validation.enforce_zero_mean".into(),
            self.enforce_zero_mean.to_string(),
        );
        m.insert(
            "jet.variant".into(),
            match self.jet.variant {
                JetVariant::Full => "full".into(),
                JetVariant::Simplified => "simplified".to_string(),
            },
        );
        m.insert("jet.alpha2".into(), f(self.jet.alpha2));
        m.insert("jet.beta1".into(), f(self.jet.beta1));
        m.insert("jet.dt".into(), f(self.jet.dt));
        m.insert("jet.t_end".into(), f(self.jet.t_end));
        m.insert("scenario.delta".into(), f(self.scenario.delta));
        m.insert("scenario.horizon".into(), f(self.scenario.horizon));
        m.insert("output.dir".into(), self.output_dir.clone());
        m.insert("seed".into(), self.seed.to_string());
        for (key, values) in &self.sweep.entries {
            m.insert(format!("sweep.{key}"), values.join(","));
        }
        m.insert("sweep.workers".into(), self.sweep.workers.to_string());
        m.insert("sweep.target".into(), self.sweep.target.clone());
        m
    }

    #[cfg(test)]
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.to_flat() {
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}
