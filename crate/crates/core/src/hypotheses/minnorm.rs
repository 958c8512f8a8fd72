//! Minimum-norm point of a convex hull (Wolfe's algorithm).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SweepError};
use crate::linalg::{dot, norm, norm_sq, Point};

pub const GAP_TOL: f64 = 1e-9;
pub const MAX_MAJOR_CYCLES: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinNorm {
    /// `-min |sum lambda_i v_i|` over the simplex.
    pub xi: f64,
    pub lambda: Vec<f64>,
    pub point: Point,
    /// Final duality gap `|w|^2 - min_i <w, v_i>`.
    pub gap: f64,
    pub cycles: usize,
}

/// Minimum-norm point of `co(vectors)` and the value `xi = -|w|`.
pub fn min_norm_in_hull(vectors: &[Point]) -> Result<MinNorm> {
    if vectors.is_empty() {
        return Err(SweepError::InvalidInput("min-norm point of an empty hull".into()));
    }
    let m = vectors.len();
    let d = vectors[0].len();
    let scale = vectors.iter().map(|v| norm_sq(v)).fold(0.0, f64::max).max(1e-300);
    let tol = (1e-15 * scale).min(GAP_TOL);

    let start = (0..m)
        .min_by(|&a, &b| norm_sq(&vectors[a]).total_cmp(&norm_sq(&vectors[b])))
        .expect("nonempty");
    let mut support = vec![start];
    let mut lam = vec![1.0];
    let mut w = vectors[start].clone();
    let mut gap = f64::INFINITY;
    let mut cycles = 0;
    while cycles < MAX_MAJOR_CYCLES {
        cycles += 1;
        let (j, best) = (0..m)
            .map(|i| (i, dot(&w, &vectors[i])))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        gap = norm_sq(&w) - best;
        if gap <= tol || support.contains(&j) {
            break;
        }
        support.push(j);
        lam.push(0.0);
        for _ in 0..(2 * m + 2) {
            let mu = affine_min(vectors, &support);
            if mu.iter().all(|&v| v > 1e-15) {
                lam = mu;
                break;
            }
            let mut theta = 1.0f64;
            for (l, u) in lam.iter().zip(&mu) {
                if *u <= 1e-15 && l - u > 0.0 {
                    theta = theta.min(l / (l - u));
                }
            }
            for (l, u) in lam.iter_mut().zip(&mu) {
                *l += theta * (u - *l);
            }
            let mut k = 0;
            while k < support.len() {
                if lam[k] <= 1e-15 {
                    support.remove(k);
                    lam.remove(k);
                } else {
                    k += 1;
                }
            }
            let s: f64 = lam.iter().sum();
            lam.iter_mut().for_each(|l| *l /= s);
        }
        w = combine(vectors, &support, &lam, d);
    }
    let mut lambda = vec![0.0; m];
    for (k, &i) in support.iter().enumerate() {
        lambda[i] = lam[k];
    }
    Ok(MinNorm {
        xi: -norm(&w),
        lambda,
        point: w,
        gap: gap.max(0.0),
        cycles,
    })
}

fn combine(vectors: &[Point], support: &[usize], lam: &[f64], d: usize) -> Point {
    let mut w = vec![0.0; d];
    for (k, &i) in support.iter().enumerate() {
        for (a, b) in w.iter_mut().zip(&vectors[i]) {
            *a += lam[k] * b;
        }
    }
    w
}

/// Weights summing to one that minimize the norm over the affine hull.
fn affine_min(vectors: &[Point], support: &[usize]) -> Vec<f64> {
    let k = support.len();
    let mut a = DMatrix::zeros(k + 1, k + 1);
    for i in 0..k {
        for j in 0..k {
            a[(i, j)] = dot(&vectors[support[i]], &vectors[support[j]]);
        }
        a[(i, k)] = 1.0;
        a[(k, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(k + 1);
    rhs[k] = 1.0;
    let sol = a
        .clone()
        .lu()
        .solve(&rhs)
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .or_else(|| a.svd(true, true).solve(&rhs, 1e-14).ok())
        .unwrap_or_else(|| {
            let mut e = DVector::zeros(k + 1);
            e[0] = 1.0;
            e
        });
    sol.iter().take(k).copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let r = min_norm_in_hull(&[vec![-1.0, 0.0]]).unwrap();
        assert_eq!(r.xi, -1.0);
        assert_eq!(r.lambda, vec![1.0]);
        let r = min_norm_in_hull(&[vec![-1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert!((r.xi + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((r.lambda[0] - 0.5).abs() < 1e-15);
        let r = min_norm_in_hull(&[vec![1.0, 0.0], vec![-1.0, 0.0]]).unwrap();
        assert_eq!(r.xi, 0.0);
    }

    #[test]
    fn interior_vertex_of_triangle() {
        // The nearest point of this triangle to the origin is the vertex (1, 1).
        let r = min_norm_in_hull(&[vec![1.0, 1.0], vec![3.0, 1.0], vec![1.0, 4.0]]).unwrap();
        assert!((r.xi + 2f64.sqrt()).abs() < 1e-14);
    }
}
