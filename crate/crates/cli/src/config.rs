//! Scenario files: schema, defaults and cross-field validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sweep_core::geometry::Window;
use sweep_core::{
    AssessOptions, PathSpec, Point, ProxRadius, RngSpec, SdeCoefficients, SetFamily, SetVariant, SolverOptions,
    Statistic, TimeGrid,
};

/// Environment variable overriding the directory that relative output paths
/// are resolved against.
pub const OUTPUT_ROOT_ENV: &str = "SWEEP_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Deterministic,
    Stochastic,
    Check,
    Oracle,
    Stability,
    Refine,
}

/// Declared prox-regularity radius, or a request to estimate it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RhoDecl {
    Probe(ProbeKeyword),
    Value(ProxRadius),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKeyword {
    Probe,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

impl GridSpec {
    pub fn build(&self, horizon: f64) -> Result<TimeGrid, String> {
        let n = match (self.n, self.dt) {
            (Some(n), None) => n,
            (None, Some(dt)) if dt > 0.0 && dt.is_finite() => (horizon / dt).round().max(1.0) as usize,
            (None, Some(_)) => return Err("grid.dt must be positive".into()),
            _ => return Err("grid needs exactly one of n or dt".into()),
        };
        TimeGrid::uniform(horizon, n).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RngConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
}

impl RngConfig {
    pub fn spec(&self) -> RngSpec {
        RngSpec::new(self.seed, self.stream)
    }
}

fn default_rng() -> RngConfig {
    RngConfig { seed: 0, stream: 0 }
}

/// Settings of the projection cross-check run in oracle mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSettings {
    #[serde(default = "default_oracle_points")]
    pub points: usize,
    #[serde(default = "default_oracle_step")]
    pub grid_step: f64,
}

fn default_oracle_points() -> usize {
    20
}

fn default_oracle_step() -> f64 {
    2e-3
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            points: default_oracle_points(),
            grid_step: default_oracle_step(),
        }
    }
}

fn default_n_paths() -> u64 {
    1
}

fn default_levels() -> usize {
    4
}

fn default_min_slope() -> f64 {
    0.4
}

fn default_statistics() -> Vec<Statistic> {
    vec![
        Statistic::MeanTerminal,
        Statistic::VarianceTerminal,
        Statistic::MaxFeasResidual,
        Statistic::MeanCorrectionVariation,
    ]
}

fn default_required() -> Vec<String> {
    ["H1", "H2", "H3", "H4", "H5", "gradient"].iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub dimension: usize,
    pub horizon: f64,
    pub set: SetVariant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
    pub rho: RhoDecl,
    /// Sample count per candidate when `rho` is `"probe"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_budget: Option<usize>,
    pub grid: GridSpec,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<SdeCoefficients>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Point>,
    /// Second initial point for stability runs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y0: Option<Point>,
    /// Perturbation `h` (the `u` of a stability run).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<PathSpec>,
    /// Second perturbation `v` of a stability run; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation_alt: Option<PathSpec>,
    #[serde(default = "default_rng")]
    pub rng: RngConfig,
    #[serde(default = "default_n_paths")]
    pub n_paths: u64,
    #[serde(default = "default_statistics")]
    pub statistics: Vec<Statistic>,
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Smallest accepted log-log slope in refine mode.
    #[serde(default = "default_min_slope")]
    pub min_slope: f64,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub assess: AssessOptions,
    /// Hypotheses whose failure makes `check` exit with status 4.
    #[serde(default = "default_required")]
    pub required: Vec<String>,
    #[serde(default)]
    pub oracle: OracleSettings,
    /// Rayon worker count; the global default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Relative paths resolve against the output root; defaults to `out/<name>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl Diagnostic {
    fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, Diagnostic> {
        serde_json::from_str(text).map_err(|e| Diagnostic::new("<schema>", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, Diagnostic> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Diagnostic::new("<file>", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The set with `rho` taken as declared, or as infinite while a probe is pending.
    pub fn set_family(&self, rho: ProxRadius) -> sweep_core::Result<SetFamily> {
        let set = SetFamily::new(self.dimension, rho, self.horizon, self.set.clone())?;
        Ok(match &self.window {
            Some(w) => set.with_window(w.clone()),
            None => set,
        })
    }

    pub fn declared_rho(&self) -> Option<ProxRadius> {
        match self.rho {
            RhoDecl::Value(r) => Some(r),
            RhoDecl::Probe(_) => None,
        }
    }

    /// Copy with every default made explicit.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        if c.output_dir.is_none() {
            c.output_dir = Some(PathBuf::from("out").join(&c.name));
        }
        c
    }

    /// Final output directory, honouring [`OUTPUT_ROOT_ENV`].
    pub fn output_path(&self) -> PathBuf {
        let rel = self.resolved().output_dir.unwrap_or_default();
        match std::env::var_os(OUTPUT_ROOT_ENV) {
            Some(root) if rel.is_relative() => PathBuf::from(root).join(rel),
            _ => rel,
        }
    }

    /// Schema-level and cross-field checks; no solver is run. The only
    /// numerical work is the distance of `x0` to the initial set.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            out.push(Diagnostic::new("name", "must be a nonempty file-name-safe string"));
        }
        if self.dimension == 0 {
            out.push(Diagnostic::new("dimension", "must be at least 1"));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            out.push(Diagnostic::new("horizon", "must be positive and finite"));
        }
        if let Err(e) = self.grid.build(self.horizon.max(f64::MIN_POSITIVE)) {
            out.push(Diagnostic::new("grid", e));
        }
        if matches!(self.rho, RhoDecl::Probe(_)) && self.probe_budget.map_or(true, |b| b == 0) {
            out.push(Diagnostic::new("probe_budget", "rho = \"probe\" requires a positive probe_budget"));
        }
        let set = match self.set_family(self.declared_rho().unwrap_or(ProxRadius::INFINITE)) {
            Ok(s) => Some(s),
            Err(e) => {
                out.push(Diagnostic::new("set", e.to_string()));
                None
            }
        };
        let needs_x0 = !matches!(self.mode, Mode::Check | Mode::Oracle);
        match (&self.x0, needs_x0) {
            (None, true) => out.push(Diagnostic::new("x0", "x0 required")),
            (Some(x0), _) if x0.len() != self.dimension => {
                out.push(Diagnostic::new("x0", format!("expected {} components", self.dimension)))
            }
            (Some(x0), _) => {
                if let Some(set) = &set {
                    self.check_start("x0", set, x0, self.perturbation.as_ref(), &mut out);
                }
            }
            _ => {}
        }
        if self.mode == Mode::Stability {
            match &self.y0 {
                None => out.push(Diagnostic::new("y0", "y0 required in stability mode")),
                Some(y0) if y0.len() != self.dimension => {
                    out.push(Diagnostic::new("y0", format!("expected {} components", self.dimension)))
                }
                Some(y0) => {
                    if let Some(set) = &set {
                        let alt = if self.coefficients.is_some() {
                            None
                        } else {
                            self.perturbation_alt.as_ref()
                        };
                        self.check_start("y0", set, y0, alt, &mut out);
                    }
                }
            }
        }
        for (field, p) in [("perturbation", &self.perturbation), ("perturbation_alt", &self.perturbation_alt)] {
            if let Some(p) = p {
                if let Err(e) = p.validate(self.dimension) {
                    out.push(Diagnostic::new(field, e.to_string()));
                }
            }
        }
        match (&self.coefficients, self.mode) {
            (None, Mode::Stochastic) => {
                out.push(Diagnostic::new("coefficients", "stochastic mode requires coefficients"))
            }
            (Some(c), _) => {
                if let Err(e) = c.validate(self.dimension) {
                    out.push(Diagnostic::new("coefficients", e.to_string()));
                }
                if self.perturbation.is_some() && matches!(self.mode, Mode::Stochastic | Mode::Refine) {
                    out.push(Diagnostic::new(
                        "perturbation",
                        "stochastic runs take their perturbation from the coefficients",
                    ));
                }
            }
            _ => {}
        }
        if self.n_paths == 0 {
            out.push(Diagnostic::new("n_paths", "must be at least 1"));
        }
        if self.mode == Mode::Refine && self.levels < 2 {
            out.push(Diagnostic::new("levels", "refine mode needs at least 2 levels"));
        }
        if self.workers == Some(0) {
            out.push(Diagnostic::new("workers", "must be at least 1"));
        }
        if !(self.solver.gamma > 0.0 && self.solver.gamma < 1.0) {
            out.push(Diagnostic::new("solver.gamma", "must lie in (0, 1)"));
        }
        if self.mode == Mode::Oracle && self.dimension > 3 {
            out.push(Diagnostic::new("dimension", "oracle mode supports d <= 3"));
        }
        if !(self.oracle.grid_step > 0.0) {
            out.push(Diagnostic::new("oracle.grid_step", "must be positive"));
        }
        out
    }

    fn check_start(&self, field: &str, set: &SetFamily, x: &[f64], h: Option<&PathSpec>, out: &mut Vec<Diagnostic>) {
        let p: Vec<f64> = match h {
            Some(h) => x.iter().zip(h.at(0.0, self.dimension)).map(|(a, b)| a + b).collect(),
            None => x.to_vec(),
        };
        match set.distance(0.0, &p) {
            Ok(d) if d > 1e-9 => out.push(Diagnostic::new(
                field,
                format!("{field} infeasible at t=0: distance {d:.6e}"),
            )),
            Ok(_) => {}
            Err(e) => out.push(Diagnostic::new(field, format!("distance to C(0) failed: {e}"))),
        }
    }
}
