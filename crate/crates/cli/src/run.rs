//! Mode dispatch and artifact writing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sweep_core::geometry::prox_regularity_probe;
use sweep_core::oracles::brute_force_project;
use sweep_core::rng::Stream;
use sweep_core::stochastic::{
    euler_sweeping_solve, monte_carlo, pathwise_refinement_probe, sample_noise, stochastic_stability_probe,
};
use sweep_core::sweeping::{grid_refinement_probe, normal_cone_residual, stability_check};
use sweep_core::{
    assess, catching_up_solve, DiscretePath, ProxRadius, SetFamily, SweepError, TimeGrid,
};

use crate::config::{Diagnostic, Mode, RhoDecl, ScenarioConfig};

/// Exit statuses of the `sweep` binary.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const VALIDATION: i32 = 2;
    pub const SOLVER: i32 = 3;
    pub const CHECK_FAILED: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid scenario: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Diagnostic>),
    #[error("{}: {}", .0.name(), .0)]
    Solver(#[from] SweepError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Validation(_) => exit::VALIDATION,
            // I/O failures share the solver status: the run did not complete.
            RunError::Solver(_) | RunError::Io(_) => exit::SOLVER,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub check_failed: bool,
    pub summary: Vec<String>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.check_failed {
            exit::CHECK_FAILED
        } else {
            exit::SUCCESS
        }
    }
}

/// What a mode produced, before it is written to disk.
struct ModeOutput {
    csv: Vec<(&'static str, String)>,
    result: Value,
    summary: Vec<String>,
    failed: bool,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Validates, resolves, dispatches and writes all artifacts. `mode` and
/// `workers` override the config when given.
pub fn run(config: &ScenarioConfig, mode: Option<Mode>, workers: Option<usize>) -> Result<RunOutcome, RunError> {
    let mut cfg = config.resolved();
    if let Some(m) = mode {
        cfg.mode = m;
    }
    if let Some(w) = workers {
        cfg.workers = Some(w);
    }
    let diags = cfg.validate();
    if !diags.is_empty() {
        return Err(RunError::Validation(diags));
    }
    let dir = cfg.output_path();
    std::fs::create_dir_all(&dir)?;
    write_file(&dir, "resolved-config.json", &pretty(&to_value(&cfg)))?;
    let computed = match cfg.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| SweepError::InvalidInput(format!("cannot build worker pool: {e}")))?;
            pool.install(|| dispatch(&cfg))
        }
        None => dispatch(&cfg),
    };
    let (rho, out) = match computed {
        Ok(v) => v,
        Err(e) => {
            let report = json!({
                "scenario": cfg.name,
                "mode": cfg.mode,
                "status": "error",
                "error": e.name(),
                "message": e.to_string(),
            });
            write_file(&dir, "report.json", &pretty(&report))?;
            write_summary(&dir, &cfg, "error", &[format!("{}: {e}", e.name())])?;
            return Err(RunError::Solver(e));
        }
    };
    for (name, text) in &out.csv {
        write_file(&dir, name, text)?;
    }
    let status = if out.failed { "check_failed" } else { "ok" };
    let report = json!({
        "scenario": cfg.name,
        "mode": cfg.mode,
        "status": status,
        "rho": rho,
        "result": out.result,
    });
    write_file(&dir, "report.json", &pretty(&report))?;
    write_summary(&dir, &cfg, status, &out.summary)?;
    Ok(RunOutcome {
        dir,
        check_failed: out.failed,
        summary: out.summary,
    })
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn write_file(dir: &Path, name: &str, text: &str) -> std::io::Result<()> {
    std::fs::write(dir.join(name), text)
}

fn write_summary(dir: &Path, cfg: &ScenarioConfig, status: &str, lines: &[String]) -> std::io::Result<()> {
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let mut s = String::new();
    writeln!(s, "scenario: {}", cfg.name).unwrap();
    writeln!(s, "mode: {}", to_value(&cfg.mode).as_str().unwrap_or("?")).unwrap();
    writeln!(s, "status: {status}").unwrap();
    for l in lines {
        writeln!(s, "{l}").unwrap();
    }
    writeln!(s, "generated-at-unix: {stamp}").unwrap();
    write_file(dir, "summary.txt", &s)
}

/// Candidate radii tried, largest first, when `rho` is `"probe"`.
const PROBE_LADDER: [f64; 11] = [16.0, 8.0, 4.0, 2.0, 1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625];

fn resolve_rho(cfg: &ScenarioConfig) -> sweep_core::Result<ProxRadius> {
    match cfg.rho {
        RhoDecl::Value(r) => Ok(r),
        RhoDecl::Probe(_) => {
            let set = cfg.set_family(ProxRadius::INFINITE)?;
            let budget = cfg.probe_budget.unwrap_or(0);
            let times = [0.0, 0.5 * cfg.horizon, cfg.horizon];
            for (i, rho) in PROBE_LADDER.iter().enumerate() {
                let ok = times.iter().enumerate().all(|(j, t)| {
                    prox_regularity_probe(&set, *t, *rho, budget, cfg.rng.spec().derive(1000 + (i * 3 + j) as u64))
                        .pass
                });
                if ok {
                    return ProxRadius::finite(*rho);
                }
            }
            Err(SweepError::ProbeFailed)
        }
    }
}

fn dispatch(cfg: &ScenarioConfig) -> sweep_core::Result<(Value, ModeOutput)> {
    let rho = resolve_rho(cfg)?;
    let set = cfg.set_family(rho)?;
    let grid = cfg
        .grid
        .build(cfg.horizon)
        .map_err(SweepError::InvalidInput)?;
    let out = match cfg.mode {
        Mode::Deterministic => deterministic(cfg, &set, &grid)?,
        Mode::Stochastic => stochastic(cfg, &set, &grid)?,
        Mode::Check => check(cfg, &set)?,
        Mode::Oracle => oracle(cfg, &set)?,
        Mode::Stability => stability(cfg, &set, &grid)?,
        Mode::Refine => refine(cfg, &set, &grid)?,
    };
    Ok((to_value(&rho), out))
}

fn x0(cfg: &ScenarioConfig) -> &[f64] {
    cfg.x0.as_deref().expect("validated")
}

fn deterministic(cfg: &ScenarioConfig, set: &SetFamily, grid: &TimeGrid) -> sweep_core::Result<ModeOutput> {
    let h = cfg.perturbation.as_ref().map(|p| DiscretePath::sample(p, grid, cfg.dimension));
    let sol = catching_up_solve(set, h.as_ref(), x0(cfg), grid, &cfg.solver)?;
    let ncr = normal_cone_residual(set, h.as_ref(), &sol.x, 16, cfg.rng.spec().derive(7));
    let result = json!({
        "steps": grid.steps(),
        "terminal": sol.terminal(),
        "total_variation": sol.total_variation(),
        "max_feas_residual": sol.max_feas_residual(),
        "bisections": sol.bisections,
        "normal_cone_residual": ncr,
    });
    let summary = vec![
        format!("terminal: {:?}", sol.terminal()),
        format!("total variation: {:.6e}", sol.total_variation()),
        format!("max feasibility residual: {:.3e}", sol.max_feas_residual()),
    ];
    Ok(ModeOutput {
        csv: vec![("solution.csv", sol.to_csv())],
        result,
        summary,
        failed: false,
    })
}

fn stochastic(cfg: &ScenarioConfig, set: &SetFamily, grid: &TimeGrid) -> sweep_core::Result<ModeOutput> {
    let coeffs = cfg.coefficients.as_ref().expect("validated");
    let rng = cfg.rng.spec();
    let noise = sample_noise(grid, coeffs.noise_dim(cfg.dimension), rng.derive(0))?;
    let sol = euler_sweeping_solve(set, coeffs, x0(cfg), &noise, &cfg.solver)?;
    let mut csv = vec![("path.csv", sol.to_csv())];
    let mut summary = vec![
        format!("path 0 terminal: {:?}", sol.x.values.last().expect("nonempty")),
        format!("path 0 correction variation: {:.6e}", sol.correction_variation()),
    ];
    let mut result = json!({
        "steps": grid.steps(),
        "path0": {
            "terminal": sol.x.values.last(),
            "correction_variation": sol.correction_variation(),
            "max_feas_residual": sol.max_feas_residual(),
            "bisections": sol.bisections,
        },
    });
    if cfg.n_paths > 1 {
        let mc = monte_carlo(set, coeffs, x0(cfg), grid, cfg.n_paths, rng, &cfg.statistics, &cfg.solver)?;
        let mut table = String::from("name,component,value,std_error,n_paths,seed\n");
        for s in &mc.statistics {
            let comp = s.component.map(|c| c.to_string()).unwrap_or_default();
            writeln!(table, "{},{comp},{:.16e},{:.16e},{},{}", s.name, s.value, s.std_error, s.n_paths, s.seed).unwrap();
            summary.push(format!("{}[{comp}] = {:.6} +- {:.2e}", s.name, s.value, s.std_error));
        }
        csv.push(("statistics.csv", table));
        result["monte_carlo"] = to_value(&mc);
    }
    Ok(ModeOutput {
        csv,
        result,
        summary,
        failed: false,
    })
}

fn check(cfg: &ScenarioConfig, set: &SetFamily) -> sweep_core::Result<ModeOutput> {
    let rep = assess(set, &cfg.assess)?;
    let failed = rep.any_failed(&cfg.required);
    let mut table = String::from("hypothesis,verdict,required,note\n");
    let mut summary = Vec::new();
    for v in &rep.verdicts {
        let verdict = to_value(&v.verdict);
        let verdict = verdict.as_str().unwrap_or("?");
        let required = cfg.required.contains(&v.hypothesis);
        writeln!(table, "{},{verdict},{required},\"{}\"", v.hypothesis, v.note.replace('"', "'")).unwrap();
        summary.push(format!("{}: {verdict}{}", v.hypothesis, if required { "" } else { " (not required)" }));
    }
    Ok(ModeOutput {
        csv: vec![("verdicts.csv", table)],
        result: to_value(&rep),
        summary,
        failed,
    })
}

fn oracle(cfg: &ScenarioConfig, set: &SetFamily) -> sweep_core::Result<ModeOutput> {
    let d = cfg.dimension;
    let step = cfg.oracle.grid_step;
    let mut s = Stream::new(cfg.rng.spec().derive(9), 0);
    let mut table = String::from("t");
    for p in ["x", "proj", "oracle"] {
        for i in 1..=d {
            write!(table, ",{p}_{i}").unwrap();
        }
    }
    table.push_str(",distance_gap,bound,point_gap\n");
    let (mut compared, mut skipped, mut mismatches) = (0usize, 0usize, 0usize);
    let (mut worst, mut worst_point): (f64, f64) = (0.0, 0.0);
    for _ in 0..cfg.oracle.points {
        let t = s.uniform() * cfg.horizon;
        let w = set.window_at(t);
        let x: Vec<f64> = (0..d).map(|i| w.lo[i] + s.uniform() * (w.hi[i] - w.lo[i])).collect();
        let p = match set.project(t, &x, cfg.solver.gamma) {
            Ok(p) => p,
            Err(SweepError::OutsideEnlargement { .. }) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let dx = p.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let o = brute_force_project(set, t, &x, step, dx + 3.0 * step * (d as f64).sqrt())?;
        // The grid certifies the distance value; its argmin may drift along
        // flat stretches of the distance function, so points are only reported.
        let point_gap = p.iter().zip(&o.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let d_oracle = o.values.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let gap = (d_oracle - dx).abs();
        let bound = o.error_bound.unwrap_or(f64::INFINITY);
        compared += 1;
        worst = worst.max(gap);
        worst_point = worst_point.max(point_gap);
        if gap > bound + 1e-9 {
            mismatches += 1;
        }
        write!(table, "{t:.16e}").unwrap();
        for v in x.iter().chain(&p).chain(&o.values) {
            write!(table, ",{v:.16e}").unwrap();
        }
        writeln!(table, ",{gap:.16e},{bound:.16e},{point_gap:.16e}").unwrap();
    }
    let summary = vec![
        format!("compared {compared} projections with the grid oracle ({skipped} outside the enlargement)"),
        format!("worst distance gap {worst:.3e} (point gap {worst_point:.3e}), mismatches {mismatches}"),
    ];
    Ok(ModeOutput {
        csv: vec![("oracle.csv", table)],
        result: json!({
            "compared": compared,
            "skipped_outside_enlargement": skipped,
            "mismatches": mismatches,
            "worst_distance_gap": worst,
            "worst_point_gap": worst_point,
            "grid_step": step,
        }),
        summary,
        failed: mismatches > 0,
    })
}

fn stability(cfg: &ScenarioConfig, set: &SetFamily, grid: &TimeGrid) -> sweep_core::Result<ModeOutput> {
    let y0 = cfg.y0.as_deref().expect("validated");
    let (result, pass, lhs, rhs) = match &cfg.coefficients {
        Some(c) => {
            let noise = sample_noise(grid, c.noise_dim(cfg.dimension), cfg.rng.spec().derive(0))?;
            let r = stochastic_stability_probe(set, c, x0(cfg), y0, &noise, &cfg.solver)?;
            (to_value(&r), r.pass, r.lhs, r.rhs)
        }
        None => {
            let path = |p: &Option<sweep_core::PathSpec>| match p {
                Some(p) => DiscretePath::sample(p, grid, cfg.dimension),
                None => DiscretePath::zeros(grid.clone(), cfg.dimension),
            };
            let r = stability_check(set, &path(&cfg.perturbation), &path(&cfg.perturbation_alt), x0(cfg), y0, grid, &cfg.solver)?;
            (to_value(&r), r.pass, r.lhs, r.rhs)
        }
    };
    Ok(ModeOutput {
        csv: vec![("stability.csv", format!("lhs,rhs,pass\n{lhs:.16e},{rhs:.16e},{pass}\n"))],
        result,
        summary: vec![format!("lhs {lhs:.6e} <= rhs {rhs:.6e}: {pass}")],
        failed: !pass,
    })
}

fn refine(cfg: &ScenarioConfig, set: &SetFamily, grid: &TimeGrid) -> sweep_core::Result<ModeOutput> {
    let rep = match &cfg.coefficients {
        Some(c) => pathwise_refinement_probe(set, c, x0(cfg), grid, cfg.levels, cfg.rng.spec().derive(0), &cfg.solver)?,
        None => grid_refinement_probe(set, cfg.perturbation.as_ref(), x0(cfg), grid, cfg.levels, &cfg.solver)?,
    };
    let mut table = String::from("steps,dt,sup_distance_to_next\n");
    for l in &rep.levels {
        let d = l.sup_distance_to_next.map(|v| format!("{v:.16e}")).unwrap_or_default();
        writeln!(table, "{},{:.16e},{d}", l.steps, l.dt).unwrap();
    }
    let pass = rep.strictly_decreasing && rep.slope >= cfg.min_slope;
    Ok(ModeOutput {
        csv: vec![("refinement.csv", table)],
        summary: vec![
            format!("distances: {:?}", rep.distances),
            format!("slope {:.4} (minimum {}), strictly decreasing: {}", rep.slope, cfg.min_slope, rep.strictly_decreasing),
        ],
        result: to_value(&rep),
        failed: !pass,
    })
}
