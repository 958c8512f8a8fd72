//! Brute-force and closed-form reference computations.
//!
//! Nothing here calls the projection, distance or min-norm kernels of the
//! rest of the crate; membership and vector arithmetic are re-derived locally
//! so that a reference value cannot inherit a bug from the code it checks.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SweepError};
use crate::geometry::{ConstraintFn, ConvexPiece, SetFamily, SetVariant};
use crate::linalg::Point;
use crate::path::DiscretePath;

/// Grid oracles refuse problems with more points than this.
pub const MAX_GRID_POINTS: f64 = 5.0e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    ClosedForm,
    Grid,
    SimplexEnumeration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub values: Vec<f64>,
    pub method: OracleMethod,
    /// Grid step or lattice resolution; absent for closed forms.
    pub resolution: Option<f64>,
    /// Certified error bound where one is available.
    pub error_bound: Option<f64>,
}

/// Exact reflected path at the grid nodes for `C = [0, inf)`:
/// `X(t_k) = h(t_k) + x0 + max(0, max_{j <= k} -(h(t_j) + x0))`.
pub fn skorokhod_1d(h: &DiscretePath, x0: f64) -> Result<DiscretePath> {
    if h.dim() != 1 {
        return Err(SweepError::InvalidInput("skorokhod_1d needs a scalar path".into()));
    }
    if !(x0 >= 0.0) {
        return Err(SweepError::InvalidInput("x0 must be nonnegative".into()));
    }
    let mut running = 0.0f64;
    let values = h
        .values
        .iter()
        .map(|v| {
            let free = v[0] + x0;
            running = running.max(-free);
            vec![free + running]
        })
        .collect();
    DiscretePath::new(h.grid.clone(), values)
}

/// Mean and variance of `|B_t|`.
pub fn reflected_bm_moments(t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(SweepError::InvalidInput("t must be positive".into()));
    }
    Ok(((2.0 * t / std::f64::consts::PI).sqrt(), t * (1.0 - 2.0 / std::f64::consts::PI)))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn piece_holds(p: &ConvexPiece, y: &[f64], tol: f64) -> bool {
    match p {
        ConvexPiece::HalfSpace { normal, offset } => {
            normal.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() <= offset + tol * l2(normal)
        }
        ConvexPiece::Ball { center, radius } => gap(y, center) <= radius + tol,
        ConvexPiece::Box { lo, hi } => y.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *v >= a - tol && *v <= b + tol),
    }
}

fn constraint_holds(f: &ConstraintFn, y: &[f64], tol: f64) -> bool {
    match f {
        ConstraintFn::Affine { a, b } => a.iter().zip(y).map(|(u, v)| u * v).sum::<f64>() - b <= tol * l2(a),
        ConstraintFn::Ball { center, radius } => gap(y, center) <= radius + tol,
        ConstraintFn::AntiBall { center, radius } => gap(y, center) >= radius - tol,
        ConstraintFn::Quadratic { q, linear, constant } => {
            let mut v = *constant;
            for i in 0..y.len() {
                v += linear[i] * y[i];
                for j in 0..y.len() {
                    v += 0.5 * y[i] * q[i][j] * y[j];
                }
            }
            v <= tol
        }
        ConstraintFn::SmoothedBox { lo, hi, power } => {
            let mut s = 0.0;
            for i in 0..y.len() {
                let u = (2.0 * y[i] - lo[i] - hi[i]) / (hi[i] - lo[i]);
                s += u.powi(*power as i32);
            }
            s <= 1.0 + tol
        }
    }
}

/// Independent membership test `x in C(t)` with a small tolerance, where
/// `shift` is subtracted from `x` before the leaf is evaluated.
fn member(variant: &SetVariant, t: f64, x: &[f64], shift: &[f64], tol: f64) -> bool {
    let d = x.len();
    let local: Vec<f64> = x.iter().zip(shift).map(|(a, b)| a - b).collect();
    match variant {
        SetVariant::FixedConvex { pieces } => pieces.iter().all(|p| piece_holds(p, &local, tol)),
        SetVariant::TranslatedBase { base, center } => {
            let c = center.at(t, d);
            let s: Vec<f64> = shift.iter().zip(&c).map(|(a, b)| a + b).collect();
            member(base, 0.0, x, &s, tol)
        }
        SetVariant::ComplementOfBall { center, radius } => gap(&local, &center.at(t, d)) >= radius - tol,
        SetVariant::SublevelIntersection(s) => s.constraints.iter().all(|c| {
            let sh = c.shift.at(t, d);
            let y: Vec<f64> = local.iter().zip(&sh).map(|(a, b)| a - b).collect();
            constraint_holds(&c.function, &y, tol)
        }),
        SetVariant::Shifted { inner, offset } => {
            let h = offset.at(t, d);
            let s: Vec<f64> = shift.iter().zip(&h).map(|(a, b)| a - b).collect();
            member(inner, t, x, &s, tol)
        }
    }
}

/// Exhaustive search over the grid `x + grid_step Z^d` inside `B_radius(x)`
/// for the feasible point nearest to `x`.
///
/// The bound `grid_step sqrt(d)` certifies the distance `|x - p|` when the set
/// contains a grid cell next to the true projection, i.e. away from cusps. The
/// point itself is only that accurate where the distance grows quickly along
/// the boundary; near ill-conditioned projections it may drift further.
pub fn brute_force_project(set: &SetFamily, t: f64, x: &[f64], grid_step: f64, radius: f64) -> Result<OracleResult> {
    let d = set.dimension;
    if d == 0 || d > 3 || x.len() != d {
        return Err(SweepError::InvalidInput("brute_force_project needs 1 <= d <= 3".into()));
    }
    if !(grid_step > 0.0) || !(radius >= 0.0) {
        return Err(SweepError::InvalidInput("grid_step must be positive and radius nonnegative".into()));
    }
    let tol = 1e-12;
    let bound = grid_step * (d as f64).sqrt();
    let result = |p: Vec<f64>| OracleResult {
        values: p,
        method: OracleMethod::Grid,
        resolution: Some(grid_step),
        error_bound: Some(bound),
    };
    let zero = vec![0.0; d];
    if member(&set.variant, t, x, &zero, tol) {
        return Ok(result(x.to_vec()));
    }
    let n = (radius / grid_step).floor() as i64;
    if ((2 * n + 1) as f64).powi(d as i32) > MAX_GRID_POINTS {
        return Err(SweepError::InvalidInput("brute_force_project grid too large".into()));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut idx = vec![-n; d];
    let mut p = vec![0.0; d];
    loop {
        let r2: f64 = idx.iter().map(|k| (*k as f64 * grid_step).powi(2)).sum();
        if r2 <= radius * radius && best.as_ref().map_or(true, |b| r2 < b.0) {
            for i in 0..d {
                p[i] = x[i] + idx[i] as f64 * grid_step;
            }
            if member(&set.variant, t, &p, &zero, tol) {
                best = Some((r2, p.clone()));
            }
        }
        // Odometer increment.
        let mut i = 0;
        loop {
            if i == d {
                return best.map(|b| result(b.1)).ok_or(SweepError::NoFeasibleGridPoint);
            }
            idx[i] += 1;
            if idx[i] <= n {
                break;
            }
            idx[i] = -n;
            i += 1;
        }
    }
}

/// `-min { |sum_i lambda_i v_i| : lambda on the lattice (1/N) Z^m of the simplex }`
/// with `N = round(1 / resolution)`.
///
/// Rounding the exact minimizer onto the lattice moves at most
/// `floor(m/2) / N` of weight in each direction, so the reported bound is
/// `floor(m/2) * resolution * max_ij |v_i - v_j|`.
pub fn simplex_min_norm_grid(vectors: &[Point], resolution: f64) -> Result<OracleResult> {
    let m = vectors.len();
    if m == 0 || m > 4 {
        return Err(SweepError::InvalidInput("simplex_min_norm_grid needs 1..=4 vectors".into()));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(SweepError::InvalidInput("resolution must lie in (0, 1]".into()));
    }
    let d = vectors[0].len();
    if vectors.iter().any(|v| v.len() != d) {
        return Err(SweepError::InvalidInput("vectors must share a dimension".into()));
    }
    let nn = (1.0 / resolution).round().max(1.0) as usize;
    let count = (1..m).fold(1.0, |acc, j| acc * (nn + j) as f64 / j as f64);
    if count > MAX_GRID_POINTS {
        return Err(SweepError::InvalidInput("simplex lattice too large".into()));
    }
    let mut spread: f64 = 0.0;
    for a in vectors {
        for b in vectors {
            spread = spread.max(gap(a, b));
        }
    }
    let mut best = f64::INFINITY;
    let mut k = vec![0usize; m];
    let mut comb = vec![0.0; d];
    let nf = nn as f64;
    // Enumerate compositions k_0 + ... + k_{m-1} = N.
    fn rec(
        j: usize,
        left: usize,
        k: &mut Vec<usize>,
        vectors: &[Point],
        nf: f64,
        comb: &mut Vec<f64>,
        best: &mut f64,
    ) {
        let m = k.len();
        if j == m - 1 {
            k[j] = left;
            for c in comb.iter_mut() {
                *c = 0.0;
            }
            for (w, v) in k.iter().zip(vectors) {
                let lam = *w as f64 / nf;
                for (c, vi) in comb.iter_mut().zip(v) {
                    *c += lam * vi;
                }
            }
            *best = best.min(l2(comb));
            return;
        }
        for a in 0..=left {
            k[j] = a;
            rec(j + 1, left - a, k, vectors, nf, comb, best);
        }
    }
    rec(0, nn, &mut k, vectors, nf, &mut comb, &mut best);
    Ok(OracleResult {
        values: vec![-best],
        method: OracleMethod::SimplexEnumeration,
        resolution: Some(1.0 / nf),
        error_bound: Some((m / 2) as f64 * spread / nf),
    })
}

/// Closed-form projection onto the unit-radius ball `B(c, r)` or the closure of
/// its complement, used to cross-check the grid oracle.
pub fn radial_projection(center: &[f64], radius: f64, x: &[f64], complement: bool) -> Result<OracleResult> {
    let r = gap(x, center);
    let inside = r <= radius;
    let values = if inside != complement {
        x.to_vec()
    } else if r == 0.0 {
        return Err(SweepError::InvalidInput("projection from the center is not unique".into()));
    } else {
        center.iter().zip(x).map(|(c, xi)| c + (xi - c) * radius / r).collect()
    };
    Ok(OracleResult {
        values,
        method: OracleMethod::ClosedForm,
        resolution: None,
        error_bound: Some(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{PathSpec, TimeGrid};

    #[test]
    fn skorokhod_examples() {
        let g = TimeGrid::uniform(1.0, 10).unwrap();
        let x = skorokhod_1d(&DiscretePath::zeros(g.clone(), 1), 1.0).unwrap();
        assert!(x.values.iter().all(|v| v[0] == 1.0));
        let h = DiscretePath::new(g.clone(), g.nodes().iter().map(|t| vec![-t]).collect()).unwrap();
        assert!(skorokhod_1d(&h, 0.0).unwrap().values.iter().all(|v| v[0] == 0.0));
        let g = TimeGrid::uniform(std::f64::consts::PI, 1000).unwrap();
        let h = DiscretePath::new(g.clone(), g.nodes().iter().map(|t| vec![-t.sin()]).collect()).unwrap();
        let x = skorokhod_1d(&h, 0.0).unwrap();
        assert!((x.values.last().unwrap()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn moments() {
        let (m, v) = reflected_bm_moments(1.0).unwrap();
        assert!((m - 0.7978845608).abs() < 1e-10);
        assert!((v - 0.3633802276).abs() < 1e-10);
        assert!(reflected_bm_moments(1e-12).unwrap().0 < 1e-5);
    }

    #[test]
    fn brute_force_examples() {
        let ball = SetFamily::ball(vec![0.0, 0.0], 1.0, 1.0).unwrap();
        let r = brute_force_project(&ball, 0.0, &[2.0, 0.0], 1e-3, 1.01).unwrap();
        let exact = radial_projection(&[0.0, 0.0], 1.0, &[2.0, 0.0], false).unwrap();
        assert!(gap(&r.values, &exact.values) <= 2e-3);
        assert_eq!(brute_force_project(&ball, 0.0, &[0.2, 0.1], 1e-3, 1.0).unwrap().values, vec![0.2, 0.1]);
        let comp = SetFamily::complement_of_ball(2, PathSpec::Zero, 1.0, 1.0).unwrap();
        let r = brute_force_project(&comp, 0.0, &[0.5, 0.0], 1e-3, 0.6).unwrap();
        assert!(gap(&r.values, &[1.0, 0.0]) <= 2e-3);
        assert!(matches!(
            brute_force_project(&ball, 0.0, &[5.0, 0.0], 1e-2, 1.0),
            Err(SweepError::NoFeasibleGridPoint)
        ));
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(simplex_min_norm_grid(&[vec![-1.0, 0.0]], 1e-3).unwrap().values, vec![-1.0]);
        let r = simplex_min_norm_grid(&[vec![-1.0, 0.0], vec![0.0, -1.0]], 1e-4).unwrap();
        assert!((r.values[0] + 0.70711).abs() <= 1e-4);
        let r = simplex_min_norm_grid(&[vec![1.0, 0.0], vec![-1.0, 0.0]], 1e-2).unwrap();
        assert_eq!(r.values[0], 0.0);
        assert_eq!(r.method, OracleMethod::SimplexEnumeration);
    }
}
