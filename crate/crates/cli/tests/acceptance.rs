//! Acceptance suite: one line per criterion with its measured numbers,
//! tolerance and runtime budget. Exits non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use sweep_cli::ScenarioConfig;
use sweep_core::geometry::{ball_persistence, modulus_of_continuity, prox_regularity_probe};
use sweep_core::hypotheses::{
    gradient_bound, h4_constants_sublevel, h4_grid_search, h5_grid_search, kappa_estimate, min_norm_in_hull,
    verify_h4_at,
};
use sweep_core::oracles::{reflected_bm_moments, simplex_min_norm_grid, skorokhod_1d};
use sweep_core::rng::Stream;
use sweep_core::stochastic::{euler_sweeping_solve, monte_carlo, pathwise_refinement_probe, sample_noise};
use sweep_core::sweeping::{stability_check, uniform_variation_bound};
use sweep_core::{
    catching_up_solve, DiffusionSpec, DiscretePath, DriftSpec, PathSpec, ProxRadius, RngSpec, SdeCoefficients,
    SetFamily, SolverOptions, Statistic, TimeGrid,
};

type Outcome = Result<(bool, String), String>;

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn scenario(name: &str) -> ScenarioConfig {
    ScenarioConfig::load(&scenarios_dir().join(format!("{name}.json"))).expect("shipped scenario parses")
}

fn scenario_set(name: &str) -> Result<(ScenarioConfig, SetFamily), String> {
    let cfg = scenario(name);
    let rho = cfg.declared_rho().ok_or("scenario must declare rho")?;
    let set = cfg.set_family(rho).map_err(|e| e.to_string())?;
    Ok((cfg, set))
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn half_line() -> SetFamily {
    SetFamily::half_space(vec![-1.0], 0.0, 1.0).expect("valid half-line")
}

fn skorokhod_match() -> Outcome {
    let t_end = std::f64::consts::PI;
    let grid = TimeGrid::uniform(t_end, (t_end / 1e-4).round() as usize).map_err(err)?;
    let spec = PathSpec::Sine {
        amplitude: vec![-1.0],
        frequency: 1.0,
        phase: 0.0,
        offset: None,
    };
    let h = DiscretePath::sample(&spec, &grid, 1);
    let set = SetFamily::half_space(vec![-1.0], 0.0, t_end).map_err(err)?;
    let sol = catching_up_solve(&set, Some(&h), &[0.0], &grid, &SolverOptions::default()).map_err(err)?;
    let exact = skorokhod_1d(&h, 0.0).map_err(err)?;
    // The solver returns x with x + h in C; the reflected path is x + h.
    let sup = (0..grid.nodes().len())
        .map(|k| (sol.x.values[k][0] + h.values[k][0] - exact.values[k][0]).abs())
        .fold(0.0, f64::max);
    let end = exact.values.last().unwrap()[0];
    Ok((sup <= 5e-3, format!("sup error {sup:.3e} <= 5e-3 over {} nodes, X(pi) = {end:.6}", grid.nodes().len())))
}

fn projection_lipschitz() -> Outcome {
    let set = SetFamily::complement_of_ball(2, PathSpec::Zero, 1.0, 1.0).map_err(err)?;
    let gamma = 0.5;
    let mut s = Stream::new(RngSpec::new(2, 0), 0);
    let draw = |s: &mut Stream| loop {
        // Uniform in the box, kept when inside the gamma-enlargement (|u| > 1 - gamma).
        let u = vec![s.uniform_range(-2.0, 2.0), s.uniform_range(-2.0, 2.0)];
        if dist(&u, &[0.0, 0.0]) > 1.0 - gamma {
            return u;
        }
    };
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let (u1, u2) = (draw(&mut s), draw(&mut s));
        let p1 = set.project(0.0, &u1, gamma).map_err(err)?;
        let p2 = set.project(0.0, &u2, gamma).map_err(err)?;
        worst = worst.max(dist(&p1, &p2) / dist(&u1, &u2));
    }
    Ok((worst <= 2.0 + 1e-6, format!("max ratio {worst:.6} <= 2 + 1e-6 over 1e4 pairs")))
}

fn probe_calibration() -> Outcome {
    let set = SetFamily::complement_of_ball(2, PathSpec::Zero, 1.0, 1.0).map_err(err)?;
    let at1 = prox_regularity_probe(&set, 0.0, 1.0, 400, RngSpec::new(3, 0));
    let at2 = prox_regularity_probe(&set, 0.0, 2.0, 400, RngSpec::new(3, 0));
    let ok = at1.pass && !at1.degenerate && !at2.pass && at2.witness.is_some();
    Ok((
        ok,
        format!(
            "rho=1 pass={} (worst margin {:.2e}), rho=2 pass={} witness={}",
            at1.pass,
            at1.worst_margin,
            at2.pass,
            at2.witness.is_some()
        ),
    ))
}

fn min_norm_vs_oracle() -> Outcome {
    let mut s = Stream::new(RngSpec::new(4, 0), 0);
    let mut worst_excess = f64::NEG_INFINITY;
    for _ in 0..100 {
        let d = 1 + (s.uniform() * 3.0) as usize;
        let m = 1 + (s.uniform() * 4.0) as usize;
        let vs: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| s.uniform_range(-1.0, 1.0)).collect()).collect();
        let res = match m {
            1 | 2 => 1e-4,
            3 => 1e-3,
            _ => 1e-2,
        };
        let w = min_norm_in_hull(&vs).map_err(err)?;
        let o = simplex_min_norm_grid(&vs, res).map_err(err)?;
        let bound = o.error_bound.ok_or("oracle returned no bound")?;
        worst_excess = worst_excess.max((w.xi - o.values[0]).abs() - (1e-6 + bound));
    }
    Ok((
        worst_excess <= 0.0,
        format!("max |xi - oracle| - (1e-6 + bound) = {worst_excess:.3e} <= 0 over 100 sets"),
    ))
}

fn quadrant_synthesis() -> Outcome {
    let (_, set) = scenario_set("quadrant-check")?;
    let sub = set.sublevel_set().ok_or("quadrant is a sublevel set")?.clone();
    let rng = RngSpec::new(5, 0);
    let kappa = kappa_estimate(&set, sub.epsilon, 1, 400, rng).map_err(err)?;
    let k = gradient_bound(&set, sub.epsilon, sub.eta, 1, 400, rng.derive(1)).map_err(err)?;
    let l = sub.grad_lipschitz_bound().ok_or("no gradient Lipschitz bound")?;
    let syn = h4_constants_sublevel(kappa.kappa, sub.epsilon, sub.eta, l, k.value).map_err(err)?;
    let constants = syn.constants();
    let boundary = set.sample_boundary(0.0, 1000, rng.derive(2));
    let mut failures = 0;
    let mut worst: f64 = 0.0;
    for (i, b) in boundary.iter().enumerate() {
        let c = verify_h4_at(&set, 0.0, &b.point, &constants, 1000, rng.derive(100 + i as u64)).map_err(err)?;
        worst = worst.max(c.worst_violation);
        if !c.pass {
            failures += 1;
        }
    }
    Ok((
        failures == 0 && boundary.len() == 1000,
        format!(
            "ell={:.4} r={:.4e}: {} boundary points x 1000 samples, {failures} failures, worst violation {worst:.2e}",
            syn.ell,
            syn.r,
            boundary.len()
        ),
    ))
}

fn corner_counterexample() -> Outcome {
    let (_, set) = scenario_set("corner-counterexample")?;
    let x = [-1.0, 0.0];
    let rs: Vec<f64> = (0..10).map(|i| 0.2 * 0.5f64.powi(i)).collect();
    let ls: Vec<f64> = (0..10).map(|i| 2f64.powi(i)).collect();
    let deltas: Vec<f64> = (0..6).map(|i| 0.2 * 0.4f64.powi(i)).collect();
    let rng = RngSpec::new(6, 0);
    let h4 = h4_grid_search(&set, 0.0, &x, &rs, &ls, 32, 300, rng).map_err(err)?;
    let h5 = h5_grid_search(&set, 0.0, &x, &deltas, &ls, 32, 100, rng).map_err(err)?;
    let out = tempfile::tempdir().map_err(err)?;
    let status = Command::new(env!("CARGO_BIN_EXE_sweep"))
        .arg("check")
        .arg(scenarios_dir().join("corner-counterexample.json"))
        .env(sweep_cli::OUTPUT_ROOT_ENV, out.path())
        .output()
        .map_err(err)?
        .status;
    let report: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.path().join("out/corner-counterexample/report.json")).map_err(err)?,
    )
    .map_err(err)?;
    let has_witness = report["result"]["verdicts"]
        .as_array()
        .map(|vs| {
            vs.iter()
                .filter(|v| v["hypothesis"] == "H4" || v["hypothesis"] == "H5")
                .all(|v| v["verdict"] == "fail-with-witness" && !v["witness"].is_null())
        })
        .unwrap_or(false);
    let ok = h4.all_fail() && h5.all_fail() && status.code() == Some(4) && has_witness;
    Ok((
        ok,
        format!(
            "H4 {}/{} and H5 {}/{} candidates pass, exit {:?}, witnesses {has_witness}",
            h4.candidates_passed,
            h4.candidates_tried,
            h5.candidates_passed,
            h5.candidates_tried,
            status.code()
        ),
    ))
}

fn uniform_variation() -> Outcome {
    let (cfg, disk) = scenario_set("moving-disk")?;
    // A convex set is rho-prox-regular for every rho; a finite one makes the bound informative.
    let rho = 1.0;
    let set = SetFamily { prox_radius: ProxRadius::finite(rho).map_err(err)?, ..disk };
    let modulus = modulus_of_continuity(&set, 64, 64).map_err(err)?;
    let bp = ball_persistence(&set, 0.0, &[0.0, 0.0], 0.9, &modulus).map_err(err)?;
    let bound = uniform_variation_bound(rho, bp.delta, set.horizon).map_err(err)?;
    let grid = cfg.grid.build(cfg.horizon)?;
    let mut worst: f64 = 0.0;
    for x0 in set.sample_members(0.0, 10, RngSpec::new(7, 0)) {
        let sol = catching_up_solve(&set, None, &x0, &grid, &SolverOptions::default()).map_err(err)?;
        worst = worst.max(sol.total_variation());
    }
    Ok((
        worst <= bound && bp.spot_check_passed,
        format!("max variation {worst:.4} <= bound {bound:.4} (delta {:.4}) over 10 starts", bp.delta),
    ))
}

fn stability_estimate() -> Outcome {
    let (cfg, set) = scenario_set("moving-interval-stability")?;
    let grid = cfg.grid.build(cfg.horizon)?;
    let mut s = Stream::new(RngSpec::new(8, 0), 0);
    let (mut violations, mut tightest) = (0, f64::INFINITY);
    let (mut min_gap, mut max_gap) = (f64::INFINITY, 0.0f64);
    for _ in 0..100 {
        let u_spec = PathSpec::Sine {
            amplitude: vec![s.uniform_range(-0.5, 0.5)],
            frequency: s.uniform_range(0.5, 6.0),
            phase: 0.0,
            offset: None,
        };
        let size = 10f64.powf(s.uniform_range(-4.0, -1.0));
        // frequency >= pi/2 on [0, 1] makes the sup of the difference exactly `size`.
        let w_spec = PathSpec::Sine {
            amplitude: vec![size],
            frequency: s.uniform_range(std::f64::consts::FRAC_PI_2, 8.0),
            phase: 0.0,
            offset: None,
        };
        let u = DiscretePath::sample(&u_spec, &grid, 1);
        let v = DiscretePath::sample(&PathSpec::Sum { terms: vec![u_spec, w_spec] }, &grid, 1);
        let x0 = s.uniform_range(0.0, 0.5);
        let y0 = x0 + s.uniform_range(0.0, 0.1);
        let r = stability_check(&set, &u, &v, &[x0], &[y0], &grid, &SolverOptions::default()).map_err(err)?;
        min_gap = min_gap.min(r.perturbation_gap);
        max_gap = max_gap.max(r.perturbation_gap);
        if !r.pass {
            violations += 1;
        }
        tightest = tightest.min(r.rhs / r.lhs.max(1e-300));
    }
    let in_range = min_gap >= 1e-4 * (1.0 - 1e-3) && max_gap <= 1e-1 * (1.0 + 1e-12);
    Ok((
        violations == 0 && in_range,
        format!(
            "{violations} violations in 100 pairs, gaps in [{min_gap:.2e}, {max_gap:.2e}], min rhs/lhs {tightest:.3}"
        ),
    ))
}

fn reflected_bm_law() -> Outcome {
    let grid = TimeGrid::uniform(1.0, 1000).map_err(err)?;
    let c = SdeCoefficients::new(DriftSpec::Zero, DiffusionSpec::Scalar { sigma: 1.0 });
    let rep = monte_carlo(
        &half_line(),
        &c,
        &[0.0],
        &grid,
        100_000,
        RngSpec::new(42, 0),
        &[Statistic::MeanTerminal, Statistic::VarianceTerminal],
        &SolverOptions::default(),
    )
    .map_err(err)?;
    let (mean, var) = reflected_bm_moments(1.0).map_err(err)?;
    let m = rep.statistic("mean_terminal", Some(0)).ok_or("missing mean")?;
    let v = rep.statistic("variance_terminal", Some(0)).ok_or("missing variance")?;
    let zm = (m.value - mean) / m.std_error;
    let zv = (v.value - var) / v.std_error;
    Ok((
        zm.abs() <= 3.0 && zv.abs() <= 3.0,
        format!(
            "mean {:.5} vs {mean:.5} ({zm:+.2} SE), variance {:.5} vs {var:.5} ({zv:+.2} SE)",
            m.value, v.value
        ),
    ))
}

fn pathwise_refinement() -> Outcome {
    let (cfg, set) = scenario_set("moving-interval-refine")?;
    let grid = cfg.grid.build(cfg.horizon)?;
    let c = cfg.coefficients.clone().ok_or("scenario has coefficients")?;
    let x0 = cfg.x0.clone().ok_or("scenario has x0")?;
    let rep = pathwise_refinement_probe(&set, &c, &x0, &grid, 4, cfg.rng.spec().derive(0), &cfg.solver).map_err(err)?;
    Ok((
        rep.strictly_decreasing && rep.slope >= 0.4,
        format!(
            "distances [{}], slope {:.3} >= 0.4",
            rep.distances.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>().join(", "),
            rep.slope
        ),
    ))
}

fn degeneration() -> Outcome {
    let opts = SolverOptions::default();
    let (cfg, wall) = scenario_set("moving-interval")?;
    let grid = cfg.grid.build(cfg.horizon)?;
    let noise = sample_noise(&grid, 1, RngSpec::new(11, 0)).map_err(err)?;
    let st = euler_sweeping_solve(&wall, &SdeCoefficients::zero(), &[0.0], &noise, &opts).map_err(err)?;
    let det = catching_up_solve(&wall, None, &[0.0], &grid, &opts).map_err(err)?;
    let same = st.x.values == det.x.values;
    let full = SetFamily::full_space(2, 1.0).map_err(err)?;
    let noise2 = sample_noise(&grid, 2, RngSpec::new(12, 0)).map_err(err)?;
    let c = SdeCoefficients::new(DriftSpec::Tanh { scale: 1.0 }, DiffusionSpec::Scalar { sigma: 1.0 });
    let fs = euler_sweeping_solve(&full, &c, &[0.3, -0.2], &noise2, &opts).map_err(err)?;
    let z_zero = fs.z.values.iter().all(|z| z.iter().all(|v| *v == 0.0));
    let (_, corridor) = scenario_set("quadrant-check")?;
    let still = catching_up_solve(&corridor, None, &[0.5, 0.25], &grid, &opts).map_err(err)?;
    let var_zero = still.total_variation() == 0.0;
    Ok((
        same && z_zero && var_zero,
        format!("stochastic==deterministic {same}, full-space Z==0 {z_zero}, constant-set var==0 {var_zero}"),
    ))
}

fn run_all(root: &Path, workers: usize) -> Result<(), String> {
    for entry in std::fs::read_dir(scenarios_dir()).map_err(err)? {
        let path = entry.map_err(err)?.path();
        let out = Command::new(env!("CARGO_BIN_EXE_sweep"))
            .args(["run", &path.to_string_lossy(), "--workers", &workers.to_string()])
            .env(sweep_cli::OUTPUT_ROOT_ENV, root)
            .output()
            .map_err(err)?;
        if !matches!(out.status.code(), Some(0) | Some(4)) {
            return Err(format!("{} exited with {:?}", path.display(), out.status.code()));
        }
    }
    Ok(())
}

fn csv_files(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let base = root.join("out");
    for dir in std::fs::read_dir(&base).into_iter().flatten().flatten() {
        for f in std::fs::read_dir(dir.path()).into_iter().flatten().flatten() {
            let p = f.path();
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            // resolved-config.json records the worker count, so it is left out.
            if name.ends_with(".csv") || name == "report.json" {
                out.push((p.strip_prefix(&base).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Outcome {
    let roots: Vec<_> = (0..3).map(|_| tempfile::tempdir()).collect::<Result<_, _>>().map_err(err)?;
    run_all(roots[0].path(), 1)?;
    run_all(roots[1].path(), 8)?;
    run_all(roots[2].path(), 8)?;
    let a = csv_files(roots[0].path());
    let b = csv_files(roots[1].path());
    let c = csv_files(roots[2].path());
    let n_csv = a.iter().filter(|(p, _)| p.extension().is_some_and(|e| e == "csv")).count();
    let ok = !a.is_empty() && a == b && b == c;
    Ok((ok, format!("{} artifacts ({n_csv} CSVs) byte-identical across 1, 8, 8 workers: {ok}", a.len())))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "1D Skorokhod oracle match", budget: Duration::from_secs(5), run: skorokhod_match },
        Criterion { id: 2, name: "projection Lipschitz", budget: Duration::from_secs(5), run: projection_lipschitz },
        Criterion { id: 3, name: "prox-regularity probe calibration", budget: Duration::from_secs(5), run: probe_calibration },
        Criterion { id: 4, name: "min-norm vs simplex grid", budget: Duration::from_secs(30), run: min_norm_vs_oracle },
        Criterion { id: 5, name: "H4 constant synthesis", budget: Duration::from_secs(60), run: quadrant_synthesis },
        Criterion { id: 6, name: "corner counterexample", budget: Duration::from_secs(30), run: corner_counterexample },
        Criterion { id: 7, name: "uniform variation bound", budget: Duration::from_secs(30), run: uniform_variation },
        Criterion { id: 8, name: "stability estimate", budget: Duration::from_secs(60), run: stability_estimate },
        Criterion { id: 9, name: "reflected Brownian motion law", budget: Duration::from_secs(120), run: reflected_bm_law },
        Criterion { id: 10, name: "pathwise refinement", budget: Duration::from_secs(60), run: pathwise_refinement },
        Criterion { id: 11, name: "degeneration identities", budget: Duration::from_secs(5), run: degeneration },
        Criterion { id: 12, name: "determinism across workers", budget: Duration::from_secs(60), run: determinism },
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    println!("acceptance criteria");
    for c in criteria.iter().filter(|c| only.is_empty() || only.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= c.budget;
        let (pass, detail) = match outcome {
            Ok((p, d)) => (p && in_budget, d),
            Err(e) => (false, format!("error: {e}")),
        };
        println!(
            "[{}] {:>2}. {}: {detail}; {:.2}s of {}s",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs()
        );
        if !pass {
            failed.push(c.id);
        }
    }
    if failed.is_empty() {
        println!("all criteria passed");
    } else {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
