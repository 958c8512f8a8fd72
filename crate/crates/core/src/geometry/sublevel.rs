//! Smooth constraint catalog and the nearest-point solver for sets of the
//! form `{x : g_i(t, x) <= 0 for all i}`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SweepError};
use crate::linalg::{dist, dot, norm, norm_sq, sub, Point};
use crate::path::PathSpec;

/// Catalog of smooth constraint functions `phi(y)`; the set is `phi <= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintFn {
    /// `<a, y> - b`
    Affine { a: Point, b: f64 },
    /// `|y - c|^2 - r^2` (inside of a ball)
    Ball { center: Point, radius: f64 },
    /// `r^2 - |y - c|^2` (outside of an open ball)
    AntiBall { center: Point, radius: f64 },
    /// `1/2 y'Qy + <l, y> + c`, with `q` given as rows of a symmetric matrix.
    Quadratic {
        q: Vec<Point>,
        linear: Point,
        constant: f64,
    },
    /// `sum_i ((2 y_i - lo_i - hi_i) / (hi_i - lo_i))^p - 1` with even `p`.
    SmoothedBox { lo: Point, hi: Point, power: u32 },
}

impl ConstraintFn {
    pub fn dimension(&self) -> usize {
        match self {
            ConstraintFn::Affine { a, .. } => a.len(),
            ConstraintFn::Ball { center, .. } | ConstraintFn::AntiBall { center, .. } => center.len(),
            ConstraintFn::Quadratic { linear, .. } => linear.len(),
            ConstraintFn::SmoothedBox { lo, .. } => lo.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SweepError::InvalidInput(m.to_string()));
        match self {
            ConstraintFn::Affine { a, .. } if norm(a) == 0.0 => bad("affine constraint with zero normal"),
            ConstraintFn::Ball { radius, .. } | ConstraintFn::AntiBall { radius, .. } if !(*radius > 0.0) => {
                bad("ball constraint needs a positive radius")
            }
            ConstraintFn::Quadratic { q, linear, .. }
                if q.len() != linear.len() || q.iter().any(|row| row.len() != linear.len()) =>
            {
                bad("quadratic constraint matrix must be d x d")
            }
            ConstraintFn::SmoothedBox { lo, hi, power } => {
                if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
                    bad("smoothed box needs lo < hi")
                } else if *power < 2 || power % 2 != 0 {
                    bad("smoothed box power must be even and >= 2")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, y: &[f64]) -> f64 {
        match self {
            ConstraintFn::Affine { a, b } => dot(a, y) - b,
            ConstraintFn::Ball { center, radius } => norm_sq(&sub(y, center)) - radius * radius,
            ConstraintFn::AntiBall { center, radius } => radius * radius - norm_sq(&sub(y, center)),
            ConstraintFn::Quadratic { q, linear, constant } => {
                let qy: f64 = q.iter().zip(y).map(|(row, yi)| yi * dot(row, y)).sum();
                0.5 * qy + dot(linear, y) + constant
            }
            ConstraintFn::SmoothedBox { lo, hi, power } => {
                let mut s = -1.0;
                for i in 0..y.len() {
                    let u = (2.0 * y[i] - lo[i] - hi[i]) / (hi[i] - lo[i]);
                    s += u.powi(*power as i32);
                }
                s
            }
        }
    }

    pub fn gradient(&self, y: &[f64]) -> Point {
        match self {
            ConstraintFn::Affine { a, .. } => a.clone(),
            ConstraintFn::Ball { center, .. } => y.iter().zip(center).map(|(a, c)| 2.0 * (a - c)).collect(),
            ConstraintFn::AntiBall { center, .. } => {
                y.iter().zip(center).map(|(a, c)| -2.0 * (a - c)).collect()
            }
            ConstraintFn::Quadratic { q, linear, .. } => {
                q.iter().zip(linear).map(|(row, l)| dot(row, y) + l).collect()
            }
            ConstraintFn::SmoothedBox { lo, hi, power } => (0..y.len())
                .map(|i| {
                    let w = hi[i] - lo[i];
                    let u = (2.0 * y[i] - lo[i] - hi[i]) / w;
                    *power as f64 * u.powi(*power as i32 - 1) * 2.0 / w
                })
                .collect(),
        }
    }

    /// Hessian as a dense row-major `d x d` matrix.
    pub fn hessian(&self, y: &[f64]) -> DMatrix<f64> {
        let d = y.len();
        match self {
            ConstraintFn::Affine { .. } => DMatrix::zeros(d, d),
            ConstraintFn::Ball { .. } => DMatrix::identity(d, d) * 2.0,
            ConstraintFn::AntiBall { .. } => DMatrix::identity(d, d) * -2.0,
            ConstraintFn::Quadratic { q, .. } => DMatrix::from_fn(d, d, |i, j| q[i][j]),
            ConstraintFn::SmoothedBox { lo, hi, power } => {
                let p = *power as f64;
                DMatrix::from_fn(d, d, |i, j| {
                    if i != j {
                        return 0.0;
                    }
                    let w = hi[i] - lo[i];
                    let u = (2.0 * y[i] - lo[i] - hi[i]) / w;
                    p * (p - 1.0) * u.powi(*power as i32 - 2) * 4.0 / (w * w)
                })
            }
        }
    }

    /// Global Lipschitz constant of the gradient when one is known in closed form.
    pub fn gradient_lipschitz(&self) -> Option<f64> {
        match self {
            ConstraintFn::Affine { .. } => Some(0.0),
            ConstraintFn::Ball { .. } | ConstraintFn::AntiBall { .. } => Some(2.0),
            ConstraintFn::Quadratic { q, .. } => {
                // Frobenius norm bounds the spectral norm.
                Some(q.iter().map(|row| norm_sq(row)).sum::<f64>().sqrt())
            }
            ConstraintFn::SmoothedBox { .. } => None,
        }
    }

    /// Global bound on the gradient norm when one is known in closed form.
    pub fn gradient_bound(&self) -> Option<f64> {
        match self {
            ConstraintFn::Affine { a, .. } => Some(norm(a)),
            _ => None,
        }
    }
}

/// A catalog function translated along a path: `g(t, x) = phi(x - shift(t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    pub function: ConstraintFn,
    #[serde(default = "zero_path")]
    pub shift: PathSpec,
}

fn zero_path() -> PathSpec {
    PathSpec::Zero
}

impl Constraint {
    pub fn fixed(function: ConstraintFn) -> Self {
        Self {
            function,
            shift: PathSpec::Zero,
        }
    }

    pub fn moving(function: ConstraintFn, shift: PathSpec) -> Self {
        Self { function, shift }
    }
}

/// Intersection of smooth sublevel sets plus the regularity metadata used by
/// the constant-synthesis routines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SublevelSet {
    pub constraints: Vec<Constraint>,
    /// Activity threshold for `I_eps(t, x)`.
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Neighbourhood radius on which gradient bounds are taken.
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Lipschitz bound of the gradients; analytic from the catalog when omitted.
    #[serde(default)]
    pub grad_lipschitz: Option<f64>,
    /// Bound on the gradient norms; sampled when omitted.
    #[serde(default)]
    pub grad_bound: Option<f64>,
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_eta() -> f64 {
    0.5
}

impl SublevelSet {
    pub fn new(constraints: Vec<Constraint>) -> Self {
        Self {
            constraints,
            epsilon: default_epsilon(),
            eta: default_eta(),
            grad_lipschitz: None,
            grad_bound: None,
        }
    }

    /// Constraints with their shifts evaluated at `t` and an extra translation.
    pub fn at<'a>(&'a self, t: f64, offset: &[f64]) -> Vec<LocalConstraint<'a>> {
        let d = offset.len();
        self.constraints
            .iter()
            .map(|c| {
                let s = c.shift.at(t, d);
                LocalConstraint::new(&c.function, s.iter().zip(offset).map(|(a, b)| a + b).collect())
            })
            .collect()
    }

    /// Analytic gradient-Lipschitz bound: declared value, else the max over the catalog.
    pub fn grad_lipschitz_bound(&self) -> Option<f64> {
        if let Some(l) = self.grad_lipschitz {
            return Some(l);
        }
        self.constraints
            .iter()
            .map(|c| c.function.gradient_lipschitz())
            .try_fold(0.0f64, |acc, l| l.map(|l| acc.max(l)))
    }
}

/// A constraint frozen at one time instant: `sign * phi(x - shift)`.
#[derive(Debug, Clone)]
pub struct LocalConstraint<'a> {
    pub function: &'a ConstraintFn,
    pub shift: Point,
    pub sign: f64,
}

impl<'a> LocalConstraint<'a> {
    pub fn new(function: &'a ConstraintFn, shift: Point) -> Self {
        Self {
            function,
            shift,
            sign: 1.0,
        }
    }

    /// The closure of the complementary region `{phi >= 0}`.
    pub fn negated(&self) -> Self {
        Self {
            function: self.function,
            shift: self.shift.clone(),
            sign: -self.sign,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.sign * self.function.value(&sub(x, &self.shift))
    }

    pub fn gradient(&self, x: &[f64]) -> Point {
        let s = self.sign;
        self.function.gradient(&sub(x, &self.shift)).into_iter().map(|v| s * v).collect()
    }

    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        self.function.hessian(&sub(x, &self.shift)) * self.sign
    }
}

pub const KKT_TOL: f64 = 1e-10;
pub const FEAS_TOL: f64 = 1e-12;
pub const MAX_ITER: usize = 10_000;

/// Result of the nearest-point solve.
#[derive(Debug, Clone)]
pub struct Projection {
    pub point: Point,
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// Nearest point to `x` in `{g_i <= 0}` by sequential quadratic programming.
///
/// Each iteration solves the quadratic model of `1/2 |y - x|^2` (with the
/// Lagrangian curvature when it is positive definite) under linearized
/// constraints, then backtracks on an exact-penalty merit function.
/// Convergence requires a KKT residual `<= 1e-10` and feasibility `<= 1e-12`.
///
/// When the solve started at `x` stalls, it is restarted from the minimizer
/// of a quadratic penalty, which lies near the solution.
pub fn project_onto_constraints(cons: &[LocalConstraint<'_>], x: &[f64]) -> Result<Projection> {
    project_with_seeds(cons, x, Vec::new)
}

/// As [`project_onto_constraints`], with a last resort of restarts from the
/// feasible `seeds` nearest to `x`; the closest converged point wins.
///
/// Restarts matter for concave constraints, whose infeasible stationary
/// points can trap both the restoration phase and the penalty start.
pub fn project_with_seeds<F>(cons: &[LocalConstraint<'_>], x: &[f64], seeds: F) -> Result<Projection>
where
    F: FnOnce() -> Vec<Point>,
{
    match project_plain(cons, x) {
        Ok(p) => Ok(p),
        Err(e) => {
            let mut feasible: Vec<Point> = seeds()
                .into_iter()
                .filter(|s| cons.iter().all(|c| c.value(s) <= 0.0))
                .collect();
            feasible.sort_by(|a, b| dist(a, x).total_cmp(&dist(b, x)));
            feasible
                .into_iter()
                .take(8)
                .filter_map(|s| sqp_from(cons, x, s, 500).ok())
                .min_by(|a, b| dist(&a.point, x).total_cmp(&dist(&b.point, x)))
                .ok_or(e)
        }
    }
}

fn project_plain(cons: &[LocalConstraint<'_>], x: &[f64]) -> Result<Projection> {
    let m = cons.len();
    if cons.iter().all(|c| c.value(x) <= 0.0) {
        return Ok(Projection {
            point: x.to_vec(),
            multipliers: vec![0.0; m],
            iterations: 0,
            kkt_residual: 0.0,
        });
    }
    match sqp_from(cons, x, x.to_vec(), MAX_ITER / 2) {
        Ok(p) => Ok(p),
        Err(first) => {
            let (y0, used) = penalty_start(cons, x);
            match sqp_from(cons, x, y0, MAX_ITER / 2) {
                Ok(mut p) => {
                    p.iterations += used;
                    Ok(p)
                }
                Err(_) => Err(first),
            }
        }
    }
}

/// Approximate minimizer of `1/2 |y - x|^2 + c/2 sum max(g_i, 0)^2` for an
/// increasing penalty `c`, by backtracking gradient descent.
fn penalty_start(cons: &[LocalConstraint<'_>], x: &[f64]) -> (Point, usize) {
    let mut y = x.to_vec();
    let mut iters = 0;
    let mut c = 10.0;
    while c <= 1e6 {
        let phi = |p: &[f64]| {
            0.5 * norm_sq(&sub(p, x)) + 0.5 * c * cons.iter().map(|k| k.value(p).max(0.0).powi(2)).sum::<f64>()
        };
        let mut step = 1.0 / c;
        for _ in 0..200 {
            iters += 1;
            let mut grad = sub(&y, x);
            for k in cons {
                let v = k.value(&y);
                if v > 0.0 {
                    let gk = k.gradient(&y);
                    grad.iter_mut().zip(&gk).for_each(|(a, b)| *a += c * v * b);
                }
            }
            let gn2 = norm_sq(&grad);
            if gn2 < 1e-24 {
                break;
            }
            let f0 = phi(&y);
            step *= 2.0;
            loop {
                let trial: Point = y.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
                if phi(&trial) <= f0 - 0.5 * step * gn2 || step < 1e-16 {
                    y = trial;
                    break;
                }
                step *= 0.5;
            }
        }
        c *= 10.0;
    }
    (y, iters)
}

fn sqp_from(cons: &[LocalConstraint<'_>], x: &[f64], y0: Point, max_iter: usize) -> Result<Projection> {
    let m = cons.len();
    let d = x.len();
    let mut y = y0;
    let mut mu = vec![0.0; m];
    let mut last_residual = f64::INFINITY;
    let mut best_residual = f64::INFINITY;
    let mut best_at = 0;
    let mut stalled = 0;
    for iter in 1..=max_iter {
        let g: Vec<f64> = cons.iter().map(|c| c.value(&y)).collect();
        let a: Vec<Point> = cons.iter().map(|c| c.gradient(&y)).collect();

        let mut h = DMatrix::identity(d, d);
        if mu.iter().any(|&v| v > 0.0) {
            for (c, &mi) in cons.iter().zip(&mu) {
                if mi > 0.0 {
                    h += c.hessian(&y) * mi;
                }
            }
            let min_eig = h.clone().symmetric_eigen().eigenvalues.min();
            if !(min_eig > 0.05) {
                h = DMatrix::identity(d, d);
            }
        }
        let grad_obj = sub(&y, x);
        let (step, mu_new, restoring) = match solve_linearized(&h, &grad_obj, &g, &a) {
            Some((s, m)) => (s, m, false),
            None => {
                let (s, m) = restoration_step(&g, &a);
                (s, m, true)
            }
        };

        // Restoration steps are judged on infeasibility alone: a concave
        // constraint can make the linearization inconsistent far from the set.
        let nu = 2.0 * mu_new.iter().cloned().fold(0.0, f64::max) + 1.0;
        let merit = |p: &[f64]| {
            let viol = cons.iter().map(|c| c.value(p).max(0.0)).sum::<f64>();
            if restoring {
                viol
            } else {
                0.5 * norm_sq(&sub(p, x)) + nu * viol
            }
        };
        let step_norm = norm(&step);
        let mut alpha = 1.0;
        if step_norm > 1e-9 * (1.0 + norm(&y)) {
            let phi0 = merit(&y);
            loop {
                let trial: Point = y.iter().zip(&step).map(|(a, s)| a + alpha * s).collect();
                if merit(&trial) <= phi0 - 1e-6 * alpha * step_norm * step_norm || alpha < 1e-8 {
                    break;
                }
                alpha *= 0.5;
            }
        }
        for (yi, si) in y.iter_mut().zip(&step) {
            *yi += alpha * si;
        }
        mu = mu_new;

        // KKT check at the new iterate.
        let g: Vec<f64> = cons.iter().map(|c| c.value(&y)).collect();
        let mut stat = sub(&y, x);
        for (c, &mi) in cons.iter().zip(&mu) {
            if mi > 0.0 {
                let gi = c.gradient(&y);
                stat.iter_mut().zip(&gi).for_each(|(s, v)| *s += mi * v);
            }
        }
        let compl = g
            .iter()
            .zip(&mu)
            .map(|(gi, mi)| (gi * mi).abs())
            .fold(0.0, f64::max);
        let infeas = g.iter().cloned().fold(0.0, f64::max);
        let residual = norm(&stat).max(compl).max(infeas);
        last_residual = residual;
        if residual < 0.5 * best_residual {
            best_residual = residual;
            best_at = iter;
        } else if iter - best_at > 200 {
            break;
        }
        if norm(&stat).max(compl) <= KKT_TOL && infeas <= FEAS_TOL {
            return Ok(Projection {
                point: y,
                multipliers: mu,
                iterations: iter,
                kkt_residual: residual,
            });
        }
        stalled = if alpha < 1e-8 { stalled + 1 } else { 0 };
        if stalled >= 50 {
            break;
        }
    }
    Err(SweepError::NonconvergedProjection {
        iterations: max_iter,
        residual: last_residual,
    })
}

/// Solves `min 1/2 s'Hs + c's` s.t. `g_i + a_i's <= 0` exactly by active-set
/// enumeration over linearly independent subsets of size `<= d`.
fn solve_linearized(h: &DMatrix<f64>, c: &[f64], g: &[f64], a: &[Point]) -> Option<(Point, Vec<f64>)> {
    let d = c.len();
    let m = g.len();
    let h_chol = h.clone().cholesky()?;
    let hinv_c = h_chol.solve(&DVector::from_column_slice(c));
    let hinv_a: Vec<DVector<f64>> = a
        .iter()
        .map(|ai| h_chol.solve(&DVector::from_column_slice(ai)))
        .collect();
    let scale = 1.0 + c.iter().map(|v| v.abs()).fold(0.0, f64::max);

    let max_size = d.min(m);
    let mut subset = Vec::with_capacity(max_size);
    for size in 0..=max_size {
        if let Some(sol) = enumerate(0, size, &mut subset, m, &|s: &[usize]| {
            try_active_set(s, &hinv_c, &hinv_a, g, a, scale)
        }) {
            return Some(sol);
        }
    }
    None
}

fn enumerate<F>(start: usize, size: usize, subset: &mut Vec<usize>, m: usize, f: &F) -> Option<(Point, Vec<f64>)>
where
    F: Fn(&[usize]) -> Option<(Point, Vec<f64>)>,
{
    if subset.len() == size {
        return f(subset);
    }
    for i in start..m {
        subset.push(i);
        if let Some(sol) = enumerate(i + 1, size, subset, m, f) {
            subset.pop();
            return Some(sol);
        }
        subset.pop();
    }
    None
}

fn try_active_set(
    s: &[usize],
    hinv_c: &DVector<f64>,
    hinv_a: &[DVector<f64>],
    g: &[f64],
    a: &[Point],
    scale: f64,
) -> Option<(Point, Vec<f64>)> {
    let k = s.len();
    let mut mu_s = DVector::zeros(k);
    if k > 0 {
        // (A H^-1 A') mu = g_S - A H^-1 c
        let gram = DMatrix::from_fn(k, k, |i, j| dot(&a[s[i]], hinv_a[s[j]].as_slice()));
        let rhs = DVector::from_fn(k, |i, _| g[s[i]] - dot(&a[s[i]], hinv_c.as_slice()));
        let diag_max = (0..k).map(|i| gram[(i, i)]).fold(0.0, f64::max);
        let chol = gram.clone().cholesky()?;
        // Reject nearly dependent active rows.
        let min_pivot = (0..k).map(|i| chol.l()[(i, i)]).fold(f64::INFINITY, f64::min);
        if min_pivot * min_pivot < 1e-12 * diag_max {
            return None;
        }
        mu_s = chol.solve(&rhs);
        if mu_s.iter().any(|&v| v < -1e-12 * scale.max(1.0)) {
            return None;
        }
    }
    let mut step: Point = hinv_c.iter().map(|v| -v).collect();
    for (i, &idx) in s.iter().enumerate() {
        let mi = mu_s[i].max(0.0);
        step.iter_mut()
            .zip(hinv_a[idx].iter())
            .for_each(|(st, v)| *st -= mi * v);
    }
    let ok = (0..g.len()).all(|j| {
        if s.contains(&j) {
            return true;
        }
        let lin = g[j] + dot(&a[j], &step);
        lin <= 1e-12 * (1.0 + g[j].abs() + norm(&a[j]) * norm(&step))
    });
    if !ok {
        return None;
    }
    let mut mu = vec![0.0; g.len()];
    for (i, &idx) in s.iter().enumerate() {
        mu[idx] = mu_s[i].max(0.0);
    }
    Some((step, mu))
}

/// Gauss-Newton step on the violated constraints when the linearization is
/// inconsistent.
fn restoration_step(g: &[f64], a: &[Point]) -> (Point, Vec<f64>) {
    let d = a.first().map_or(0, Vec::len);
    let viol: Vec<usize> = (0..g.len()).filter(|&i| g[i] > 0.0).collect();
    let k = viol.len();
    if k == 0 {
        return (vec![0.0; d], vec![0.0; g.len()]);
    }
    let jac = DMatrix::from_fn(k, d, |i, j| a[viol[i]][j]);
    let rhs = DVector::from_fn(k, |i, _| -g[viol[i]]);
    let jjt = &jac * jac.transpose() + DMatrix::identity(k, k) * 1e-10;
    let w = jjt.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(k));
    let step = jac.transpose() * w;
    (step.iter().copied().collect(), vec![0.0; g.len()])
}

/// Newton iteration for a point where the listed constraints all vanish,
/// started from `x`. Returns `None` if it does not converge.
pub fn solve_intersection(cons: &[&LocalConstraint<'_>], x: &[f64]) -> Option<Point> {
    let d = x.len();
    let k = cons.len();
    let mut y = x.to_vec();
    for _ in 0..200 {
        let r = DVector::from_fn(k, |i, _| cons[i].value(&y));
        if r.amax() <= 1e-13 {
            return Some(y);
        }
        let jac = DMatrix::from_fn(k, d, |i, j| cons[i].gradient(&y)[j]);
        let jjt = &jac * jac.transpose() + DMatrix::identity(k, k) * 1e-14;
        let w = jjt.lu().solve(&r)?;
        let step = jac.transpose() * w;
        for (yi, si) in y.iter_mut().zip(step.iter()) {
            *yi -= si;
        }
        if !y.iter().all(|v| v.is_finite()) || dist(&y, x) > 1e6 {
            return None;
        }
    }
    let r = cons.iter().map(|c| c.value(&y).abs()).fold(0.0, f64::max);
    (r <= 1e-9).then_some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disk() -> SublevelSet {
        SublevelSet::new(vec![Constraint::fixed(ConstraintFn::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        })])
    }

    #[test]
    fn projects_onto_disk_from_outside() {
        let s = unit_disk();
        let cons = s.at(0.0, &[0.0, 0.0]);
        let p = project_onto_constraints(&cons, &[0.0, 3.0]).unwrap();
        assert!(dist(&p.point, &[0.0, 1.0]) < 1e-12, "{:?}", p.point);
        assert!(p.kkt_residual <= KKT_TOL);
    }

    #[test]
    fn member_is_fixed_point() {
        let s = unit_disk();
        let cons = s.at(0.0, &[0.0, 0.0]);
        let x = [0.3, -0.2];
        let p = project_onto_constraints(&cons, &x).unwrap();
        assert_eq!(p.point, x.to_vec());
        assert_eq!(p.iterations, 0);
    }

    #[test]
    fn projects_into_corner_of_quadrant() {
        let s = SublevelSet::new(vec![
            Constraint::fixed(ConstraintFn::Affine { a: vec![-1.0, 0.0], b: 0.0 }),
            Constraint::fixed(ConstraintFn::Affine { a: vec![0.0, -1.0], b: 0.0 }),
        ]);
        let cons = s.at(0.0, &[0.0, 0.0]);
        let p = project_onto_constraints(&cons, &[-1.0, -2.0]).unwrap();
        assert!(norm(&p.point) < 1e-14);
        let p = project_onto_constraints(&cons, &[-1.0, 2.0]).unwrap();
        assert!(dist(&p.point, &[0.0, 2.0]) < 1e-14);
    }

    #[test]
    fn projects_out_of_antiball() {
        let s = SublevelSet::new(vec![Constraint::fixed(ConstraintFn::AntiBall {
            center: vec![0.0, 0.0],
            radius: 1.0,
        })]);
        let cons = s.at(0.0, &[0.0, 0.0]);
        let p = project_onto_constraints(&cons, &[0.3, 0.4]).unwrap();
        assert!(dist(&p.point, &[0.6, 0.8]) < 1e-12, "{:?}", p.point);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let fns = vec![
            ConstraintFn::Quadratic {
                q: vec![vec![2.0, 0.5], vec![0.5, 1.0]],
                linear: vec![0.1, -0.3],
                constant: -1.0,
            },
            ConstraintFn::SmoothedBox {
                lo: vec![-1.0, 0.0],
                hi: vec![1.0, 2.0],
                power: 4,
            },
            ConstraintFn::AntiBall {
                center: vec![0.2, 0.1],
                radius: 0.7,
            },
        ];
        let y = [0.31, 0.77];
        let h = 1e-6;
        for f in fns {
            let g = f.gradient(&y);
            let hess = f.hessian(&y);
            for i in 0..2 {
                let mut yp = y;
                let mut ym = y;
                yp[i] += h;
                ym[i] -= h;
                let fd = (f.value(&yp) - f.value(&ym)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-6, "{f:?} grad {i}");
                let gp = f.gradient(&yp);
                let gm = f.gradient(&ym);
                for j in 0..2 {
                    let fdh = (gp[j] - gm[j]) / (2.0 * h);
                    assert!((fdh - hess[(j, i)]).abs() < 1e-5, "{f:?} hess {i}{j}");
                }
            }
        }
    }
}
