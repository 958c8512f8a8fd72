//! Catching-up discretization of the sweeping process and its perturbed form.

mod bounds;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use bounds::{
    gronwall_bound, stability_check, stability_constant, uniform_variation_bound, variation_bound_interior_ball,
    StabilityReport, VariationBound,
};

use crate::error::{Result, SweepError};
use crate::geometry::{ProxRadius, SetFamily};
use crate::linalg::{add, dist, dot, norm, norm_sq, scale, sub, Point};
use crate::path::{DiscretePath, PathSpec, TimeGrid};
use crate::stochastic::{refinement_report, RefinementReport};
use crate::rng::RngSpec;

/// Largest admissible distance of the initial point to `C(0) - h(0)`.
pub const START_TOL: f64 = 1e-9;

fn default_gamma() -> f64 {
    0.5
}
fn default_bisections() -> usize {
    20
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    /// Projections are only taken within `gamma * rho` of the set.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Times an interval may be halved after a refused projection.
    #[serde(default = "default_bisections")]
    pub max_bisections: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gamma: default_gamma(),
            max_bisections: default_bisections(),
        }
    }
}

/// One projected step from `x` at `t0` to `t1`, where the free motion adds
/// `dy` over the step and `h` shifts the set.
///
/// A refused projection halves the interval (splitting `dy` linearly) up to
/// `max_bisections` times. Returns the new state and the number of extra
/// sub-steps taken.
pub(crate) fn projected_step<H>(
    set: &SetFamily,
    h: &H,
    t0: f64,
    t1: f64,
    x: &[f64],
    dy: &[f64],
    opts: &SolverOptions,
    step_index: usize,
) -> Result<(Point, usize)>
where
    H: Fn(f64) -> Option<Point>,
{
    let project_at = |t: f64, p: &[f64]| -> Result<Point> {
        match h(t) {
            None => set.project(t, p, opts.gamma),
            Some(ht) => Ok(sub(&set.project(t, &add(p, &ht), opts.gamma)?, &ht)),
        }
    };
    let target: Point = add(x, dy);
    match project_at(t1, &target) {
        Ok(p) => return Ok((p, 0)),
        Err(SweepError::OutsideEnlargement { .. }) if opts.max_bisections > 0 => {}
        Err(SweepError::OutsideEnlargement { .. }) => return Err(SweepError::StepTooLarge { step: step_index }),
        Err(e) => return Err(e),
    }
    // Work through sub-intervals, each remembered with its bisection depth.
    let mut cur_t = t0;
    let mut cur_x = x.to_vec();
    let mut extra = 0;
    let mut pending: Vec<(f64, usize)> = vec![(t1, 0)];
    while let Some(&(target_t, depth)) = pending.last() {
        let frac = (target_t - cur_t) / (t1 - t0);
        let p = add(&cur_x, &scale(dy, frac));
        match project_at(target_t, &p) {
            Ok(nx) => {
                cur_x = nx;
                cur_t = target_t;
                pending.pop();
                if !pending.is_empty() {
                    extra += 1;
                }
            }
            Err(SweepError::OutsideEnlargement { .. }) if depth < opts.max_bisections => {
                pending.push((0.5 * (cur_t + target_t), depth + 1));
            }
            Err(SweepError::OutsideEnlargement { .. }) => return Err(SweepError::StepTooLarge { step: step_index }),
            Err(e) => return Err(e),
        }
    }
    Ok((cur_x, extra))
}

/// Distance of `x` to `C(t) - h`, skipping the solve for exact members.
pub(crate) fn shifted_distance(set: &SetFamily, t: f64, x: &[f64], h: Option<&[f64]>) -> Result<f64> {
    let p = match h {
        None => x.to_vec(),
        Some(h) => add(x, h),
    };
    if set.violation(t, &p) == 0.0 {
        return Ok(0.0);
    }
    set.distance(t, &p)
}

/// Output of [`catching_up_solve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepingSolution {
    pub x: DiscretePath,
    /// Cumulative correction `K(t_k) = x(t_k) - x0`.
    pub k: DiscretePath,
    /// `|x(t_{k+1}) - x(t_k)|`, with a leading zero at `t_0`.
    pub step_var: Vec<f64>,
    pub cum_var: Vec<f64>,
    /// Distance of each node to `C(t_k) - h(t_k)`.
    pub feas_residual: Vec<f64>,
    /// Sub-steps inserted by automatic bisection.
    pub bisections: usize,
}

impl SweepingSolution {
    pub fn grid(&self) -> &TimeGrid {
        &self.x.grid
    }

    pub fn total_variation(&self) -> f64 {
        self.cum_var.last().copied().unwrap_or(0.0)
    }

    pub fn max_feas_residual(&self) -> f64 {
        self.feas_residual.iter().cloned().fold(0.0, f64::max)
    }

    pub fn terminal(&self) -> &Point {
        self.x.values.last().expect("nonempty path")
    }

    /// CSV with columns `t, x_i, K_i, step_var, cum_var, feas_residual`.
    pub fn to_csv(&self) -> String {
        let d = self.x.dim();
        let mut out = String::from("t");
        for i in 1..=d {
            write!(out, ",x_{i}").unwrap();
        }
        for i in 1..=d {
            write!(out, ",K_{i}").unwrap();
        }
        out.push_str(",step_var,cum_var,feas_residual\n");
        for (j, t) in self.x.times().iter().enumerate() {
            write_float(&mut out, *t, true);
            for v in self.x.values[j].iter().chain(&self.k.values[j]) {
                write_float(&mut out, *v, false);
            }
            for v in [self.step_var[j], self.cum_var[j], self.feas_residual[j]] {
                write_float(&mut out, v, false);
            }
            out.push('\n');
        }
        out
    }
}

/// Appends `v` with 17 significant digits.
pub(crate) fn write_float(out: &mut String, v: f64, first: bool) {
    if !first {
        out.push(',');
    }
    write!(out, "{v:.16e}").unwrap();
}

/// Variation bookkeeping shared with the stochastic solver.
pub(crate) fn variation_columns(x: &[Point]) -> (Vec<f64>, Vec<f64>) {
    let mut step = Vec::with_capacity(x.len());
    let mut cum = Vec::with_capacity(x.len());
    let mut acc = 0.0;
    step.push(0.0);
    cum.push(0.0);
    for w in x.windows(2) {
        let s = dist(&w[1], &w[0]);
        acc += s;
        step.push(s);
        cum.push(acc);
    }
    (step, cum)
}

/// Solves `x(t_{k+1}) = proj_{C(t_{k+1}) - h(t_{k+1})}(x(t_k))` on `grid`.
///
/// `h = None` is the unperturbed problem. Values of `h` between its nodes
/// (needed only after bisection) are interpolated linearly.
pub fn catching_up_solve(
    set: &SetFamily,
    h: Option<&DiscretePath>,
    x0: &[f64],
    grid: &TimeGrid,
    opts: &SolverOptions,
) -> Result<SweepingSolution> {
    let d = set.dimension;
    if x0.len() != d {
        return Err(SweepError::InvalidInput(format!("x0 has dimension {}, expected {d}", x0.len())));
    }
    if let Some(h) = h {
        if h.dim() != d {
            return Err(SweepError::InvalidInput("perturbation dimension mismatch".into()));
        }
    }
    let h_at = |t: f64| h.map(|p| p.at(t));
    let d0 = shifted_distance(set, 0.0, x0, h_at(0.0).as_deref())?;
    if d0 > START_TOL {
        return Err(SweepError::InfeasibleStart { distance: d0 });
    }
    let nodes = grid.nodes();
    let zero = vec![0.0; d];
    let mut xs: Vec<Point> = Vec::with_capacity(nodes.len());
    let mut feas = Vec::with_capacity(nodes.len());
    xs.push(x0.to_vec());
    feas.push(d0);
    let mut bisections = 0;
    for k in 0..grid.steps() {
        let (t0, t1) = (nodes[k], nodes[k + 1]);
        let (nx, extra) = projected_step(set, &h_at, t0, t1, &xs[k], &zero, opts, k)?;
        bisections += extra;
        feas.push(shifted_distance(set, t1, &nx, h_at(t1).as_deref())?);
        xs.push(nx);
    }
    let (step_var, cum_var) = variation_columns(&xs);
    let ks: Vec<Point> = xs.iter().map(|x| sub(x, x0)).collect();
    Ok(SweepingSolution {
        x: DiscretePath::new(grid.clone(), xs)?,
        k: DiscretePath::new(grid.clone(), ks)?,
        step_var,
        cum_var,
        feas_residual: feas,
        bisections,
    })
}

/// Solves on `base_grid` and `levels - 1` midpoint refinements of it and
/// compares consecutive levels at the coarse nodes.
pub fn grid_refinement_probe(
    set: &SetFamily,
    h: Option<&PathSpec>,
    x0: &[f64],
    base_grid: &TimeGrid,
    levels: usize,
    opts: &SolverOptions,
) -> Result<RefinementReport> {
    if levels < 2 {
        return Err(SweepError::InvalidInput("refinement needs at least two levels".into()));
    }
    let mut grid = base_grid.clone();
    let mut paths = Vec::with_capacity(levels);
    for j in 0..levels {
        if j > 0 {
            grid = grid.refine_midpoints();
        }
        let hp = h.map(|spec| DiscretePath::sample(spec, &grid, set.dimension));
        paths.push(catching_up_solve(set, hp.as_ref(), x0, &grid, opts)?.x);
    }
    Ok(refinement_report(&paths))
}

/// Largest violation of the proximal-normal inequality
/// `<-D_k, x' - x_{k+1}> <= |D_k|/(2 rho) |x' - x_{k+1}|^2` over `n` sampled
/// members `x'` of `C(t_{k+1}) - h(t_{k+1})`, for every nonzero increment `D_k`.
pub fn normal_cone_residual(
    set: &SetFamily,
    h: Option<&DiscretePath>,
    path: &DiscretePath,
    n: usize,
    rng: RngSpec,
) -> f64 {
    let inv = set.prox_radius.inv();
    let mut worst: f64 = 0.0;
    for k in 0..path.grid.steps() {
        let delta = sub(&path.values[k + 1], &path.values[k]);
        let dn = norm(&delta);
        if dn == 0.0 {
            continue;
        }
        let t = path.times()[k + 1];
        let shift = h.map(|p| p.at(t));
        let xk = &path.values[k + 1];
        for m in set.sample_members(t, n, rng.derive(k as u64)) {
            let xp = match &shift {
                Some(s) => sub(&m, s),
                None => m,
            };
            let v = sub(&xp, xk);
            let viol = -dot(&delta, &v) - 0.5 * dn * inv * norm_sq(&v);
            worst = worst.max(viol);
        }
    }
    worst
}

/// The interval `[t, inf)` moving with unit speed, used in examples and tests.
pub fn moving_wall(horizon: f64) -> Result<SetFamily> {
    use crate::geometry::{ConvexPiece, SetVariant};
    SetFamily::new(
        1,
        ProxRadius::INFINITE,
        horizon,
        SetVariant::TranslatedBase {
            base: Box::new(SetVariant::FixedConvex {
                pieces: vec![ConvexPiece::HalfSpace {
                    normal: vec![-1.0],
                    offset: 0.0,
                }],
            }),
            center: PathSpec::Linear {
                origin: vec![0.0],
                velocity: vec![1.0],
            },
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moving_wall_pushes() {
        let set = moving_wall(1.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 100).unwrap();
        let sol = catching_up_solve(&set, None, &[0.0], &grid, &SolverOptions::default()).unwrap();
        for (t, x) in grid.nodes().iter().zip(&sol.x.values) {
            assert!((x[0] - t).abs() < 1e-14);
        }
        assert!((sol.total_variation() - 1.0).abs() < 1e-12);
        assert!(sol.max_feas_residual() <= 1e-9);
    }

    #[test]
    fn half_line_with_sine_perturbation() {
        let set = SetFamily::half_space(vec![-1.0], 0.0, std::f64::consts::PI).unwrap();
        let grid = TimeGrid::uniform(std::f64::consts::PI, 2000).unwrap();
        let h = DiscretePath::sample(
            &PathSpec::Sine {
                amplitude: vec![-1.0],
                frequency: 1.0,
                phase: 0.0,
                offset: None,
            },
            &grid,
            1,
        );
        let sol = catching_up_solve(&set, Some(&h), &[0.0], &grid, &SolverOptions::default()).unwrap();
        // The reflected path x + h ends at 1.
        let end = sol.terminal()[0] + h.values.last().unwrap()[0];
        assert!((end - 1.0).abs() < 1e-6, "{end}");
    }

    #[test]
    fn interior_start_stays_put() {
        let base = SetFamily::ball(vec![0.0, 0.0], 1.0, 1.0).unwrap();
        let set = SetFamily::translated(
            base,
            PathSpec::Linear {
                origin: vec![0.0, 0.0],
                velocity: vec![0.1, 0.0],
            },
        )
        .unwrap();
        let grid = TimeGrid::uniform(1.0, 50).unwrap();
        let sol = catching_up_solve(&set, None, &[0.0, 0.2], &grid, &SolverOptions::default()).unwrap();
        assert_eq!(sol.total_variation(), 0.0);
        assert!(sol.x.values.iter().all(|x| x == &vec![0.0, 0.2]));
    }

    #[test]
    fn infeasible_start_and_bisection() {
        let set = moving_wall(1.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 4).unwrap();
        assert!(matches!(
            catching_up_solve(&set, None, &[-1.0], &grid, &SolverOptions::default()),
            Err(SweepError::InfeasibleStart { .. })
        ));
        // A nonconvex set with rho = 1: the disk complement moving fast.
        let comp = SetFamily::complement_of_ball(
            2,
            PathSpec::Linear {
                origin: vec![0.0, 0.0],
                velocity: vec![2.0, 0.0],
            },
            1.0,
            1.0,
        )
        .unwrap();
        let coarse = TimeGrid::uniform(1.0, 2).unwrap();
        let sol = catching_up_solve(&comp, None, &[1.0, 0.3], &coarse, &SolverOptions::default()).unwrap();
        assert!(sol.bisections > 0);
        assert!(sol.max_feas_residual() <= 1e-9);
        let strict = SolverOptions {
            max_bisections: 0,
            ..SolverOptions::default()
        };
        assert!(matches!(
            catching_up_solve(&comp, None, &[1.0, 0.3], &coarse, &strict),
            Err(SweepError::StepTooLarge { step: 0 })
        ));
    }

    #[test]
    fn csv_layout() {
        let set = moving_wall(1.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 2).unwrap();
        let sol = catching_up_solve(&set, None, &[0.0], &grid, &SolverOptions::default()).unwrap();
        let csv = sol.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x_1,K_1,step_var,cum_var,feas_residual");
        assert_eq!(lines.next().unwrap().split(',').count(), 6);
        assert!(csv.contains("5.0000000000000000e-1"));
    }
}
