//! Flat key-value experiment configuration.
//!
//! One human-readable file, `key = value` per line, `#` comments. Every key
//! has a schema entry with a default and a one-line description;
//! `print-config` emits the whole schema, so a config file is always
//! diffable against the defaults. `auto` and `none` are explicit sentinels
//! (derive from the problem, and absent, respectively). The seed is part of
//! the schema: nothing in the runner draws entropy from the environment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

pub struct SchemaEntry {
    pub key: &'static str,
    pub default: &'static str,
    pub desc: &'static str,
}

pub const SCHEMA: &[SchemaEntry] = &[
    SchemaEntry { key: "seed", default: "1", desc: "seed of the space-suite sampler; the estimator and target builder carry their own seed keys, and nothing reads entropy" },
    SchemaEntry { key: "problem.id", default: "P2", desc: "catalog problem: P0 identity, P1 quadratic contraction, P2 small-divisor quadratic, P3 sine conjugacy" },
    SchemaEntry { key: "problem.n", default: "128", desc: "truncation order N (frequencies -N..N)" },
    SchemaEntry { key: "problem.epsilon", default: "0.001", desc: "nonlinearity strength" },
    SchemaEntry { key: "problem.alpha", default: "0.6180339887498949", desc: "rotation number for P2/P3 (default: golden mean)" },
    SchemaEntry { key: "schedule.lambda", default: "auto", desc: "loss factor for the schedule; auto = the problem's declared lambda" },
    SchemaEntry { key: "schedule.tau", default: "auto", desc: "cutoff growth exponent, lambda < tau < 2; auto = (lambda + 2)/2" },
    SchemaEntry { key: "solver.residual_tol", default: "1e-10", desc: "stop when the residual at index d falls below this" },
    SchemaEntry { key: "solver.max_iter", default: "30", desc: "iteration cap" },
    SchemaEntry { key: "solver.neumann_tol", default: "1e-12", desc: "relative tail tolerance of the smoothed series" },
    SchemaEntry { key: "solver.neumann_max_terms", default: "200", desc: "hard cap on series terms" },
    SchemaEntry { key: "solver.domain_override", default: "false", desc: "run even when |y|_s0 is not below the domain radius" },
    SchemaEntry { key: "y.seed", default: "7", desc: "seed of the right-hand-side builder" },
    SchemaEntry { key: "y.amplitude", default: "0.05", desc: "target |y|_s0" },
    SchemaEntry { key: "y.decay", default: "auto", desc: "spectral decay of y; auto = s0" },
    SchemaEntry { key: "y.band_limit", default: "none", desc: "zero all modes above this frequency; none = full band" },
    SchemaEntry { key: "diag.n_grid", default: "auto", desc: "indices for growth/increment fits; auto = d, 2d+1, s0" },
    SchemaEntry { key: "diag.a_grid", default: "auto", desc: "decay rates to certify; auto = mu, mu+d+m, mu+2(d+m)" },
    SchemaEntry { key: "diag.b", default: "auto", desc: "increment decay rate to certify; auto = mu-d-m" },
    SchemaEntry { key: "diag.slope_bound", default: "0.05", desc: "log-log slope bound for boundedness checks" },
    SchemaEntry { key: "diag.decay_slack", default: "0.25", desc: "fraction of the predicted decay exponent forgiven" },
    SchemaEntry { key: "diag.trend_band", default: "0.2", desc: "allowed |log-log trend| of the inverse-bound ratio" },
    SchemaEntry { key: "diag.growth_factor", default: "10", desc: "allowed step-to-step growth of partial suprema" },
    SchemaEntry { key: "diag.residual_floor", default: "1e-14", desc: "rows with residual below this are rounding noise" },
    SchemaEntry { key: "estimator.samples", default: "200", desc: "draws per condition" },
    SchemaEntry { key: "estimator.seed", default: "11", desc: "seed of the condition estimator" },
    SchemaEntry { key: "estimator.amplitude", default: "0.5", desc: "target |x|_l of primary draws" },
    SchemaEntry { key: "estimator.decay", default: "3", desc: "spectral decay of estimator draws" },
    SchemaEntry { key: "estimator.index_grid", default: "0,0.5,1,2,4,8", desc: "seminorm indices the ratios are evaluated at" },
    SchemaEntry { key: "estimator.theta_grid", default: "auto", desc: "cutoffs for the series condition; auto = powers of two up to 2N" },
    SchemaEntry { key: "space.samples", default: "1000", desc: "draws per index pair in verify-space" },
    SchemaEntry { key: "space.index_grid", default: "0,0.5,1,2,4,8", desc: "index grid of the space suite" },
    SchemaEntry { key: "space.tolerance", default: "1e-12", desc: "relative tolerance on the constant-one inequalities" },
    SchemaEntry { key: "space.weight_skew", default: "1", desc: "weight exponent skew; values other than 1 deliberately break the grading (negative control)" },
    SchemaEntry { key: "sweep.epsilon_grid", default: "auto", desc: "comma list of nonlinearity strengths; auto = problem.epsilon" },
    SchemaEntry { key: "sweep.amplitude_grid", default: "auto", desc: "comma list of |y|_s0 targets; auto = y.amplitude" },
    SchemaEntry { key: "sweep.tau_grid", default: "auto", desc: "comma list of schedule exponents; auto = the resolved tau" },
    SchemaEntry { key: "sweep.bisect", default: "false", desc: "calibrate the domain radius per grid point instead of solving" },
    SchemaEntry { key: "sweep.workers", default: "4", desc: "bounded worker pool for independent runs" },
    SchemaEntry { key: "sweep.probe_seeds", default: "3", desc: "rays probed per bisection level" },
    SchemaEntry { key: "sweep.bisect_iters", default: "12", desc: "bisection depth of the radius calibration" },
    SchemaEntry { key: "output.dir", default: "out", desc: "artifact directory (trace.csv, summary.json, reports/, sweep.csv)" },
];

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    values: BTreeMap<String, String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let values = SCHEMA
            .iter()
            .map(|e| (e.key.to_string(), e.default.to_string()))
            .collect();
        Self { values }
    }
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected 'key = value'", lineno + 1))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        if !SCHEMA.iter().any(|e| e.key == key) {
            return Err(format!("unknown config key '{key}'"));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), String> {
        for item in overrides {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| format!("override '{item}': expected KEY=VALUE"))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values
            .get(key)
            .unwrap_or_else(|| panic!("key '{key}' missing from schema"))
    }

    pub fn f64(&self, key: &str) -> Result<f64, String> {
        self.raw(key)
            .parse()
            .map_err(|_| format!("{key}: expected a number, got '{}'", self.raw(key)))
    }

    pub fn usize(&self, key: &str) -> Result<usize, String> {
        self.raw(key)
            .parse()
            .map_err(|_| format!("{key}: expected an integer, got '{}'", self.raw(key)))
    }

    pub fn u64(&self, key: &str) -> Result<u64, String> {
        self.raw(key)
            .parse()
            .map_err(|_| format!("{key}: expected an integer, got '{}'", self.raw(key)))
    }

    pub fn u32(&self, key: &str) -> Result<u32, String> {
        self.raw(key)
            .parse()
            .map_err(|_| format!("{key}: expected an integer, got '{}'", self.raw(key)))
    }

    pub fn bool(&self, key: &str) -> Result<bool, String> {
        match self.raw(key) {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(format!("{key}: expected true/false, got '{other}'")),
        }
    }

    /// `auto` resolves to `None`.
    pub fn auto_f64(&self, key: &str) -> Result<Option<f64>, String> {
        match self.raw(key) {
            "auto" => Ok(None),
            _ => self.f64(key).map(Some),
        }
    }

    /// `none` resolves to `None`.
    pub fn opt_usize(&self, key: &str) -> Result<Option<usize>, String> {
        match self.raw(key) {
            "none" => Ok(None),
            _ => self.usize(key).map(Some),
        }
    }

    pub fn list_f64(&self, key: &str) -> Result<Vec<f64>, String> {
        self.raw(key)
            .split(',')
            .map(|part| {
                part.trim()
                    .parse()
                    .map_err(|_| format!("{key}: bad list entry '{part}'"))
            })
            .collect()
    }

    /// `auto` resolves to `None`, otherwise a comma list.
    pub fn auto_list_f64(&self, key: &str) -> Result<Option<Vec<f64>>, String> {
        match self.raw(key) {
            "auto" => Ok(None),
            _ => self.list_f64(key).map(Some),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        for key in [
            "problem.n",
            "solver.max_iter",
            "estimator.samples",
            "space.samples",
            "sweep.workers",
        ] {
            self.usize(key)?;
        }
        for key in ["seed", "y.seed", "estimator.seed"] {
            self.u64(key)?;
        }
        for key in [
            "problem.epsilon",
            "problem.alpha",
            "solver.residual_tol",
            "solver.neumann_tol",
            "y.amplitude",
            "diag.slope_bound",
            "diag.decay_slack",
            "diag.trend_band",
            "diag.growth_factor",
            "diag.residual_floor",
            "estimator.amplitude",
            "estimator.decay",
            "space.tolerance",
            "space.weight_skew",
        ] {
            self.f64(key)?;
        }
        for key in ["estimator.index_grid", "space.index_grid"] {
            if self.list_f64(key)?.iter().any(|v| *v < 0.0) {
                return Err(format!("{key}: seminorm indices must be >= 0"));
            }
        }
        for key in ["diag.n_grid", "diag.a_grid", "estimator.theta_grid"] {
            if let Some(grid) = self.auto_list_f64(key)? {
                if grid.iter().any(|v| *v < 0.0) {
                    return Err(format!("{key}: entries must be >= 0"));
                }
            }
        }
        self.raw("problem.id")
            .parse::<nashmoser_core::ProblemId>()
            .map_err(|e| e.to_string())?;
        Ok(())
    }

    /// Canonical text: every result-determining key in sorted order. The
    /// artifact hash is computed over this; the output directory and worker
    /// count are excluded because they cannot change any result byte.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.values {
            if key == "output.dir" || key == "sweep.workers" {
                continue;
            }
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    pub fn hash(&self) -> String {
        format!("{:016x}", fnv1a64(self.canonical().as_bytes()))
    }

    /// Full schema with descriptions, suitable as a starting config file.
    pub fn annotated(&self) -> String {
        let mut out = String::new();
        for entry in SCHEMA {
            let _ = writeln!(out, "# {}", entry.desc);
            let _ = writeln!(out, "{} = {}", entry.key, self.raw(entry.key));
        }
        out
    }
}

fn fnv1a64(data: &[u8]) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for byte in data {
        hash ^= *byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}
