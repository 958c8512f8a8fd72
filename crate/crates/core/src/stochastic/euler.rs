//! The frozen-coefficient Euler scheme with projection, and experiments
//! built on it.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::noise::{refine_noise, sample_noise, NoisePath};
use super::SdeCoefficients;
use crate::error::{Result, SweepError};
use crate::geometry::SetFamily;
use crate::linalg::{add, axpy, dist, norm, sub, Point};
use crate::path::{DiscretePath, TimeGrid};
use crate::rng::{RngSpec, Stream};
use crate::sweeping::{
    projected_step, shifted_distance, stability_constant, variation_columns, write_float, SolverOptions, START_TOL,
};

const ENVELOPE_RTOL: f64 = 1e-12;

fn check_envelope(which: &'static str, t: f64, value: f64, bound: f64) -> Result<()> {
    if value > bound * (1.0 + ENVELOPE_RTOL) + 1e-300 {
        return Err(SweepError::EnvelopeViolated {
            which,
            t,
            norm: value,
            bound,
        });
    }
    Ok(())
}

/// Stepping state shared by the full solver and the streaming Monte Carlo
/// kernel, so both produce identical nodes.
struct Stepper<'a> {
    set: &'a SetFamily,
    coeffs: &'a SdeCoefficients,
    opts: &'a SolverOptions,
    bound_f: f64,
    bound_sigma: f64,
}

impl<'a> Stepper<'a> {
    fn new(set: &'a SetFamily, coeffs: &'a SdeCoefficients, opts: &'a SolverOptions) -> Result<Self> {
        coeffs.validate(set.dimension)?;
        Ok(Self {
            set,
            coeffs,
            opts,
            bound_f: coeffs.drift_envelope(set.dimension).bound,
            bound_sigma: coeffs.diffusion_envelope(set.dimension).bound,
        })
    }

    fn start(&self, x0: &[f64]) -> Result<f64> {
        if x0.len() != self.set.dimension {
            return Err(SweepError::InvalidInput("x0 dimension mismatch".into()));
        }
        let d0 = shifted_distance(self.set, 0.0, x0, None)?;
        if d0 > START_TOL {
            return Err(SweepError::InfeasibleStart { distance: d0 });
        }
        Ok(d0)
    }

    /// Free increment `f(t_k, x_k) h + sigma(t_k, x_k) dB_k` with coefficients
    /// frozen at the left node.
    fn increment(&self, t: f64, h: f64, x: &[f64], db: &[f64]) -> Result<Point> {
        let f = self.coeffs.drift(t, x);
        check_envelope("drift", t, norm(&f), self.bound_f)?;
        let (s, fro) = self.coeffs.diffuse(t, x, db);
        check_envelope("diffusion", t, fro, self.bound_sigma)?;
        Ok(axpy(&s, h, &f))
    }

    /// Returns `(x_{k+1}, extra sub-steps, feasibility residual)`.
    fn project(&self, k: usize, t0: f64, t1: f64, x: &[f64], inc: &[f64]) -> Result<(Point, usize, f64)> {
        let none = |_: f64| None;
        let (nx, extra) = projected_step(self.set, &none, t0, t1, x, inc, self.opts, k)?;
        let r = shifted_distance(self.set, t1, &nx, None)?;
        Ok((nx, extra, r))
    }
}

/// Output of [`euler_sweeping_solve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticSolution {
    pub x: DiscretePath,
    /// Free motion `Y` with `Y(0) = x0`.
    pub y: DiscretePath,
    /// Correction `Z = X - Y`.
    pub z: DiscretePath,
    /// Variation of `Z` per step (leading zero) and cumulated.
    pub step_var: Vec<f64>,
    pub cum_var: Vec<f64>,
    pub feas_residual: Vec<f64>,
    pub bisections: usize,
}

impl StochasticSolution {
    pub fn correction_variation(&self) -> f64 {
        self.cum_var.last().copied().unwrap_or(0.0)
    }

    pub fn max_feas_residual(&self) -> f64 {
        self.feas_residual.iter().cloned().fold(0.0, f64::max)
    }

    /// Columns `t, x_i, K_i, step_var, cum_var, feas_residual, y_i, z_i`, where
    /// `K = Z` and the variation columns refer to `Z`.
    pub fn to_csv(&self) -> String {
        let d = self.x.dim();
        let mut out = String::from("t");
        for name in ["x", "K"] {
            for i in 1..=d {
                write!(out, ",{name}_{i}").unwrap();
            }
        }
        out.push_str(",step_var,cum_var,feas_residual");
        for name in ["y", "z"] {
            for i in 1..=d {
                write!(out, ",{name}_{i}").unwrap();
            }
        }
        out.push('\n');
        for (j, t) in self.x.times().iter().enumerate() {
            write_float(&mut out, *t, true);
            let z = &self.z.values[j];
            for v in self.x.values[j].iter().chain(z) {
                write_float(&mut out, *v, false);
            }
            for v in [self.step_var[j], self.cum_var[j], self.feas_residual[j]] {
                write_float(&mut out, v, false);
            }
            for v in self.y.values[j].iter().chain(z) {
                write_float(&mut out, *v, false);
            }
            out.push('\n');
        }
        out
    }
}

/// `y_{k+1} = y_k + f(t_k, x_k) h_k + sigma(t_k, x_k) dB_k`,
/// `x_{k+1} = proj_{C(t_{k+1})}(x_k + y_{k+1} - y_k)`, `Z = X - Y`.
pub fn euler_sweeping_solve(
    set: &SetFamily,
    coeffs: &SdeCoefficients,
    x0: &[f64],
    noise: &NoisePath,
    opts: &SolverOptions,
) -> Result<StochasticSolution> {
    let st = Stepper::new(set, coeffs, opts)?;
    let d0 = st.start(x0)?;
    if noise.noise_dim() != coeffs.noise_dim(set.dimension) && noise.grid.steps() > 0 {
        return Err(SweepError::InvalidInput("noise dimension does not match the diffusion".into()));
    }
    let grid = &noise.grid;
    let nodes = grid.nodes();
    let mut xs = vec![x0.to_vec()];
    let mut ys = vec![x0.to_vec()];
    let mut feas = vec![d0];
    let mut bisections = 0;
    for k in 0..grid.steps() {
        let (t0, t1) = (nodes[k], nodes[k + 1]);
        let inc = st.increment(t0, t1 - t0, &xs[k], &noise.increments[k])?;
        let (nx, extra, r) = st.project(k, t0, t1, &xs[k], &inc)?;
        bisections += extra;
        ys.push(add(&ys[k], &inc));
        xs.push(nx);
        feas.push(r);
    }
    let zs: Vec<Point> = xs.iter().zip(&ys).map(|(x, y)| sub(x, y)).collect();
    let (step_var, cum_var) = variation_columns(&zs);
    Ok(StochasticSolution {
        x: DiscretePath::new(grid.clone(), xs)?,
        y: DiscretePath::new(grid.clone(), ys)?,
        z: DiscretePath::new(grid.clone(), zs)?,
        step_var,
        cum_var,
        feas_residual: feas,
        bisections,
    })
}

/// Per-path quantities kept by the Monte Carlo kernel.
struct PathSummary {
    terminal: Point,
    max_feas: f64,
    z_variation: f64,
}

/// Streams one path without storing it. Noise draws match [`sample_noise`].
fn simulate_summary(st: &Stepper<'_>, x0: &[f64], grid: &TimeGrid, ell: usize, rng: RngSpec) -> Result<PathSummary> {
    let mut max_feas = st.start(x0)?;
    let noise_template = sample_noise(&TimeGrid::uniform(grid.max_step(), 1)?, 1, rng)?;
    let q = noise_template.quantum;
    let mut s = Stream::new(rng, 0);
    let nodes = grid.nodes();
    let mut x = x0.to_vec();
    let mut z_prev = vec![0.0; x0.len()];
    let mut y = x0.to_vec();
    let mut z_var = 0.0;
    let mut db = vec![0.0; ell];
    for k in 0..grid.steps() {
        let (t0, t1) = (nodes[k], nodes[k + 1]);
        let sd = (t1 - t0).sqrt();
        for b in db.iter_mut() {
            *b = ((sd * s.normal()) / q).round() * q;
        }
        let inc = st.increment(t0, t1 - t0, &x, &db)?;
        let target = add(&x, &inc);
        // Members are returned unchanged by the projection, so skip it.
        let (nx, r) = if st.set.violation(t1, &target) == 0.0 {
            (target, 0.0)
        } else {
            let (nx, _, r) = st.project(k, t0, t1, &x, &inc)?;
            (nx, r)
        };
        y = add(&y, &inc);
        let z = sub(&nx, &y);
        z_var += dist(&z, &z_prev);
        z_prev = z;
        x = nx;
        max_feas = max_feas.max(r);
    }
    Ok(PathSummary {
        terminal: x,
        max_feas,
        z_variation: z_var,
    })
}

/// Statistics a Monte Carlo run can report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    MeanTerminal,
    VarianceTerminal,
    MaxFeasResidual,
    MeanCorrectionVariation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticValue {
    pub name: String,
    /// Coordinate index for per-component statistics.
    pub component: Option<usize>,
    pub value: f64,
    pub std_error: f64,
    pub n_paths: u64,
    pub seed: u64,
}

/// Count, mean and central moment sums `M2, M3, M4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = s + v;
        if s.abs() >= v.abs() {
            c += (s - t) + v;
        } else {
            c += (v - t) + s;
        }
        s = t;
    }
    s + c
}

impl Moments {
    fn from_values(v: &[f64]) -> Self {
        let n = v.len() as u64;
        if n == 0 {
            return Self {
                n,
                mean: 0.0,
                m2: 0.0,
                m3: 0.0,
                m4: 0.0,
            };
        }
        let mean = compensated_sum(v.iter().copied()) / n as f64;
        let m2 = compensated_sum(v.iter().map(|x| (x - mean).powi(2)));
        let m3 = compensated_sum(v.iter().map(|x| (x - mean).powi(3)));
        let m4 = compensated_sum(v.iter().map(|x| (x - mean).powi(4)));
        Self { n, mean, m2, m3, m4 }
    }

    /// Pooled moments; the pooled mean is the count-weighted mean.
    pub fn pool(&self, o: &Moments) -> Moments {
        if self.n == 0 {
            return *o;
        }
        if o.n == 0 {
            return *self;
        }
        let (na, nb) = (self.n as f64, o.n as f64);
        let n = na + nb;
        let delta = o.mean - self.mean;
        let mean = (na * self.mean + nb * o.mean) / n;
        let m2 = self.m2 + o.m2 + delta * delta * na * nb / n;
        let m3 = self.m3 + o.m3 + delta.powi(3) * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * o.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + o.m4
            + delta.powi(4) * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * delta * delta * (na * na * o.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * o.m3 - nb * self.m3) / n;
        Moments {
            n: self.n + o.n,
            mean,
            m2,
            m3,
            m4,
        }
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn mean_std_error(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    /// Large-sample standard error of the sample variance.
    pub fn variance_std_error(&self) -> f64 {
        if self.n < 4 {
            return 0.0;
        }
        let n = self.n as f64;
        let s2 = self.variance();
        ((self.m4 / n - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
    }
}

/// Aggregate of a Monte Carlo run; JSON-serializable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub seed: u64,
    pub stream: u64,
    pub first_path: u64,
    pub n_paths: u64,
    pub terminal: Vec<Moments>,
    pub correction_variation: Moments,
    pub max_feas_residual: f64,
    pub requested: Vec<Statistic>,
    pub statistics: Vec<StatisticValue>,
}

impl MonteCarloReport {
    fn build_statistics(&mut self) {
        let mut out = Vec::new();
        for s in &self.requested {
            let mk = |name: &str, component, value, std_error| StatisticValue {
                name: name.to_string(),
                component,
                value,
                std_error,
                n_paths: self.n_paths,
                seed: self.seed,
            };
            match s {
                Statistic::MeanTerminal => {
                    for (i, m) in self.terminal.iter().enumerate() {
                        out.push(mk("mean_terminal", Some(i), m.mean, m.mean_std_error()));
                    }
                }
                Statistic::VarianceTerminal => {
                    for (i, m) in self.terminal.iter().enumerate() {
                        out.push(mk("variance_terminal", Some(i), m.variance(), m.variance_std_error()));
                    }
                }
                Statistic::MaxFeasResidual => out.push(mk("max_feas_residual", None, self.max_feas_residual, 0.0)),
                Statistic::MeanCorrectionVariation => out.push(mk(
                    "mean_correction_variation",
                    None,
                    self.correction_variation.mean,
                    self.correction_variation.mean_std_error(),
                )),
            }
        }
        self.statistics = out;
    }

    /// Combines two runs over disjoint path ranges of the same stream.
    pub fn pool(&self, other: &MonteCarloReport) -> MonteCarloReport {
        let mut r = MonteCarloReport {
            seed: self.seed,
            stream: self.stream,
            first_path: self.first_path.min(other.first_path),
            n_paths: self.n_paths + other.n_paths,
            terminal: self.terminal.iter().zip(&other.terminal).map(|(a, b)| a.pool(b)).collect(),
            correction_variation: self.correction_variation.pool(&other.correction_variation),
            max_feas_residual: self.max_feas_residual.max(other.max_feas_residual),
            requested: self.requested.clone(),
            statistics: Vec::new(),
        };
        r.build_statistics();
        r
    }

    pub fn statistic(&self, name: &str, component: Option<usize>) -> Option<&StatisticValue> {
        self.statistics.iter().find(|s| s.name == name && s.component == component)
    }
}

/// Monte Carlo over paths `0..n_paths`; path `i` uses noise stream `rng.derive(i)`.
pub fn monte_carlo(
    set: &SetFamily,
    coeffs: &SdeCoefficients,
    x0: &[f64],
    grid: &TimeGrid,
    n_paths: u64,
    rng: RngSpec,
    statistics: &[Statistic],
    opts: &SolverOptions,
) -> Result<MonteCarloReport> {
    monte_carlo_range(set, coeffs, x0, grid, 0, n_paths, rng, statistics, opts)
}

/// Monte Carlo over paths `first..first + n_paths`.
///
/// Paths run in parallel; results are gathered in path order and reduced
/// sequentially, so the report does not depend on the worker count.
pub fn monte_carlo_range(
    set: &SetFamily,
    coeffs: &SdeCoefficients,
    x0: &[f64],
    grid: &TimeGrid,
    first: u64,
    n_paths: u64,
    rng: RngSpec,
    statistics: &[Statistic],
    opts: &SolverOptions,
) -> Result<MonteCarloReport> {
    if n_paths == 0 {
        return Err(SweepError::InvalidInput("n_paths must be at least 1".into()));
    }
    let st = Stepper::new(set, coeffs, opts)?;
    let ell = coeffs.noise_dim(set.dimension);
    let results: Vec<Result<PathSummary>> = (first..first + n_paths)
        .into_par_iter()
        .map(|i| simulate_summary(&st, x0, grid, ell, rng.derive(i)))
        .collect();
    let mut summaries = Vec::with_capacity(results.len());
    for r in results {
        summaries.push(r?);
    }
    let d = set.dimension;
    let terminal = (0..d)
        .map(|i| Moments::from_values(&summaries.iter().map(|s| s.terminal[i]).collect::<Vec<_>>()))
        .collect();
    let zvar = Moments::from_values(&summaries.iter().map(|s| s.z_variation).collect::<Vec<_>>());
    let max_feas = summaries.iter().map(|s| s.max_feas).fold(0.0, f64::max);
    let mut report = MonteCarloReport {
        seed: rng.seed,
        stream: rng.stream,
        first_path: first,
        n_paths,
        terminal,
        correction_variation: zvar,
        max_feas_residual: max_feas,
        requested: statistics.to_vec(),
        statistics: Vec::new(),
    };
    report.build_statistics();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementLevel {
    pub steps: usize,
    pub dt: f64,
    /// Sup over this level's nodes of the distance to the next finer level.
    pub sup_distance_to_next: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub levels: Vec<RefinementLevel>,
    pub distances: Vec<f64>,
    /// Least-squares slope of `log D_j` against `log dt_j`.
    pub slope: f64,
    pub strictly_decreasing: bool,
}

/// Solves on `base_grid` and `levels - 1` successive midpoint refinements
/// sharing one Brownian path, and compares consecutive levels.
pub fn pathwise_refinement_probe(
    set: &SetFamily,
    coeffs: &SdeCoefficients,
    x0: &[f64],
    base_grid: &TimeGrid,
    levels: usize,
    rng: RngSpec,
    opts: &SolverOptions,
) -> Result<RefinementReport> {
    if levels < 2 {
        return Err(SweepError::InvalidInput("refinement needs at least two levels".into()));
    }
    let ell = coeffs.noise_dim(set.dimension);
    let mut noise = sample_noise(base_grid, ell, rng)?;
    let mut sols = Vec::with_capacity(levels);
    for j in 0..levels {
        if j > 0 {
            noise = refine_noise(&noise)?;
        }
        sols.push(euler_sweeping_solve(set, coeffs, x0, &noise, opts)?);
    }
    let paths: Vec<DiscretePath> = sols.into_iter().map(|s| s.x).collect();
    Ok(refinement_report(&paths))
}

/// Compares solutions on successively halved grids: `D_j` is the sup over the
/// coarse nodes of the distance to level `j + 1`.
pub(crate) fn refinement_report(paths: &[DiscretePath]) -> RefinementReport {
    let levels = paths.len();
    let mut out = Vec::with_capacity(levels);
    let mut distances = Vec::new();
    for j in 0..levels {
        let g = &paths[j].grid;
        let next = paths.get(j + 1).map(|fine| {
            paths[j]
                .values
                .iter()
                .enumerate()
                .map(|(k, v)| dist(v, &fine.values[2 * k]))
                .fold(0.0, f64::max)
        });
        if let Some(dj) = next {
            distances.push(dj);
        }
        out.push(RefinementLevel {
            steps: g.steps(),
            dt: g.max_step(),
            sup_distance_to_next: next,
        });
    }
    let pts: Vec<(f64, f64)> = out
        .iter()
        .filter_map(|l| l.sup_distance_to_next.map(|d| (l.dt.ln(), d.max(1e-300).ln())))
        .collect();
    let slope = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    let strictly_decreasing = distances.windows(2).all(|w| w[1] < w[0]);
    RefinementReport {
        levels: out,
        distances,
        slope,
        strictly_decreasing,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticStabilityReport {
    /// `sup_k |X^1(t_k) - X^2(t_k)|`.
    pub sup_distance: f64,
    /// `sup_k |(x0 + Z^1) - (y0 + Z^2)|^2`, the perturbed sweeping states.
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub variation: f64,
    /// `sup_k |(Y^1 - x0) - (Y^2 - y0)|`.
    pub free_motion_gap: f64,
    pub initial_gap: f64,
    pub pass: bool,
}

/// Two solves with the same noise from `x0` and `y0`, compared with the
/// stability estimate where the perturbations are the realized free motions.
pub fn stochastic_stability_probe(
    set: &SetFamily,
    coeffs: &SdeCoefficients,
    x0: &[f64],
    y0: &[f64],
    noise: &NoisePath,
    opts: &SolverOptions,
) -> Result<StochasticStabilityReport> {
    let a = euler_sweeping_solve(set, coeffs, x0, noise, opts)?;
    let b = euler_sweeping_solve(set, coeffs, y0, noise, opts)?;
    let mut lhs: f64 = 0.0;
    let mut gap: f64 = 0.0;
    for k in 0..a.x.values.len() {
        let wa = add(x0, &a.z.values[k]);
        let wb = add(y0, &b.z.values[k]);
        lhs = lhs.max(dist(&wa, &wb).powi(2));
        let ua = sub(&a.y.values[k], x0);
        let ub = sub(&b.y.values[k], y0);
        gap = gap.max(dist(&ua, &ub));
    }
    let init = dist(x0, y0);
    let variation = a.correction_variation().max(b.correction_variation());
    let constant = stability_constant(variation, set.prox_radius);
    let rhs = constant * (init * init + gap + gap * gap);
    Ok(StochasticStabilityReport {
        sup_distance: a.x.sup_distance(&b.x),
        lhs,
        rhs,
        constant,
        variation,
        free_motion_gap: gap,
        initial_gap: init,
        pass: lhs <= rhs + 1e-12 * (1.0 + rhs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{DiffusionSpec, DriftSpec};
    use crate::sweeping::{catching_up_solve, moving_wall};

    fn half_line() -> SetFamily {
        SetFamily::half_space(vec![-1.0], 0.0, 1.0).unwrap()
    }

    fn bm() -> SdeCoefficients {
        SdeCoefficients::new(DriftSpec::Zero, DiffusionSpec::Scalar { sigma: 1.0 })
    }

    #[test]
    fn zero_coefficients_match_deterministic_solver() {
        let set = moving_wall(1.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 200).unwrap();
        let noise = sample_noise(&grid, 1, RngSpec::new(1, 0)).unwrap();
        let opts = SolverOptions::default();
        let s = euler_sweeping_solve(&set, &SdeCoefficients::zero(), &[0.0], &noise, &opts).unwrap();
        let d = catching_up_solve(&set, None, &[0.0], &grid, &opts).unwrap();
        assert_eq!(s.x.values, d.x.values);
        assert_eq!(s.cum_var, d.cum_var);
    }

    #[test]
    fn full_space_has_no_correction() {
        let set = SetFamily::full_space(2, 1.0).unwrap();
        let grid = TimeGrid::uniform(1.0, 100).unwrap();
        let noise = sample_noise(&grid, 2, RngSpec::new(4, 0)).unwrap();
        let c = SdeCoefficients::new(DriftSpec::Tanh { scale: 1.0 }, DiffusionSpec::Scalar { sigma: 0.7 });
        let s = euler_sweeping_solve(&set, &c, &[0.1, 0.2], &noise, &SolverOptions::default()).unwrap();
        assert!(s.z.values.iter().all(|z| z.iter().all(|v| *v == 0.0)));
        assert_eq!(s.x.values, s.y.values);
    }

    #[test]
    fn reflected_path_feasible_and_identity() {
        let grid = TimeGrid::uniform(1.0, 1000).unwrap();
        let noise = sample_noise(&grid, 1, RngSpec::new(5, 0)).unwrap();
        let s = euler_sweeping_solve(&half_line(), &bm(), &[0.0], &noise, &SolverOptions::default()).unwrap();
        assert!(s.x.values.iter().all(|x| x[0] >= 0.0));
        for k in 0..s.x.values.len() {
            assert!((s.y.values[k][0] + s.z.values[k][0] - s.x.values[k][0]).abs() <= 1e-15);
            // Corrections beyond rounding fire only when the free step leaves the set.
            if k > 0 && s.step_var[k] > 1e-12 {
                let free = s.x.values[k - 1][0] + noise.increments[k - 1][0];
                assert!(free < 0.0);
            }
        }
    }

    #[test]
    fn envelope_violation_is_fatal() {
        let grid = TimeGrid::uniform(1.0, 10).unwrap();
        let noise = sample_noise(&grid, 1, RngSpec::new(5, 0)).unwrap();
        let mut c = SdeCoefficients::new(DriftSpec::Constant { value: vec![2.0] }, DiffusionSpec::Zero);
        c.envelope_f = Some(super::super::Envelope {
            bound: 1.0,
            exponent: 2.0,
        });
        assert!(matches!(
            euler_sweeping_solve(&half_line(), &c, &[0.0], &noise, &SolverOptions::default()),
            Err(SweepError::EnvelopeViolated { which: "drift", .. })
        ));
    }

    #[test]
    fn monte_carlo_single_path_and_pooling() {
        let grid = TimeGrid::uniform(1.0, 100).unwrap();
        let rng = RngSpec::new(11, 0);
        let opts = SolverOptions::default();
        let stats = [Statistic::MeanTerminal, Statistic::VarianceTerminal, Statistic::MeanCorrectionVariation];
        let one = monte_carlo(&half_line(), &bm(), &[0.0], &grid, 1, rng, &stats, &opts).unwrap();
        let noise = sample_noise(&grid, 1, rng.derive(0)).unwrap();
        let s = euler_sweeping_solve(&half_line(), &bm(), &[0.0], &noise, &opts).unwrap();
        assert_eq!(one.terminal[0].mean, s.x.values.last().unwrap()[0]);
        assert_eq!(one.correction_variation.mean, s.correction_variation());
        let a = monte_carlo_range(&half_line(), &bm(), &[0.0], &grid, 0, 300, rng, &stats, &opts).unwrap();
        let b = monte_carlo_range(&half_line(), &bm(), &[0.0], &grid, 300, 200, rng, &stats, &opts).unwrap();
        let all = monte_carlo(&half_line(), &bm(), &[0.0], &grid, 500, rng, &stats, &opts).unwrap();
        let p = a.pool(&b);
        assert_eq!(p.terminal[0].mean, (300.0 * a.terminal[0].mean + 200.0 * b.terminal[0].mean) / 500.0);
        assert!((p.terminal[0].mean - all.terminal[0].mean).abs() < 1e-14);
        assert!((p.terminal[0].variance() - all.terminal[0].variance()).abs() < 1e-13);
        assert!((p.terminal[0].m4 - all.terminal[0].m4).abs() < 1e-12);
    }

    #[test]
    fn refinement_probe_shapes_and_seeds() {
        let grid = TimeGrid::uniform(1.0, 16).unwrap();
        let c = SdeCoefficients::new(DriftSpec::Tanh { scale: 1.0 }, DiffusionSpec::Scalar { sigma: 0.5 });
        let opts = SolverOptions::default();
        let a = pathwise_refinement_probe(&half_line(), &c, &[0.2], &grid, 3, RngSpec::new(1, 0), &opts).unwrap();
        let b = pathwise_refinement_probe(&half_line(), &c, &[0.2], &grid, 3, RngSpec::new(2, 0), &opts).unwrap();
        assert_eq!(a.distances.len(), 2);
        assert_ne!(a.distances, b.distances);
    }

    #[test]
    fn stability_probe_identical_starts() {
        let grid = TimeGrid::uniform(1.0, 100).unwrap();
        let noise = sample_noise(&grid, 1, RngSpec::new(5, 0)).unwrap();
        let r = stochastic_stability_probe(&half_line(), &bm(), &[0.3], &[0.3], &noise, &SolverOptions::default())
            .unwrap();
        assert_eq!(r.sup_distance, 0.0);
        assert!(r.pass);
        let r = stochastic_stability_probe(&half_line(), &bm(), &[0.3], &[0.5], &noise, &SolverOptions::default())
            .unwrap();
        assert!(r.pass && r.sup_distance <= 0.2 + 1e-15);
    }
}
