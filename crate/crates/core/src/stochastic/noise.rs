//! Brownian increments on a time grid with exact midpoint refinement.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SweepError};
use crate::linalg::Point;
use crate::path::TimeGrid;
use crate::rng::{RngSpec, Stream};

/// Increments `dB_k = B(t_{k+1}) - B(t_k)` in `R^l`.
///
/// Values are rounded to multiples of a power-of-two `quantum` fixed at the
/// coarsest level, so a parent increment is exactly the floating-point sum of
/// its two children at every refinement level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoisePath {
    pub grid: TimeGrid,
    pub increments: Vec<Point>,
    pub rng: RngSpec,
    /// Number of midpoint refinements applied to the sampled path.
    pub level: u32,
    pub quantum: f64,
}

impl NoisePath {
    pub fn noise_dim(&self) -> usize {
        self.increments.first().map_or(0, Vec::len)
    }

    /// Partial sums `B(t_k)` with `B(0) = 0`.
    pub fn cumulative(&self) -> Vec<Point> {
        let l = self.noise_dim();
        let mut acc = vec![0.0; l];
        let mut out = vec![acc.clone()];
        for inc in &self.increments {
            acc.iter_mut().zip(inc).for_each(|(a, b)| *a += b);
            out.push(acc.clone());
        }
        out
    }
}

fn quantize(v: f64, q: f64) -> f64 {
    (v / q).round() * q
}

fn quantum_for(max_step: f64) -> f64 {
    2f64.powi(max_step.sqrt().log2().floor() as i32 - 48)
}

/// Independent `N(0, (t_{k+1} - t_k) I_l)` increments; draw `k l + j` of the
/// stream `rng` gives component `j` of increment `k`.
pub fn sample_noise(grid: &TimeGrid, ell: usize, rng: RngSpec) -> Result<NoisePath> {
    if ell == 0 {
        return Err(SweepError::InvalidInput("noise dimension must be positive".into()));
    }
    let q = quantum_for(grid.max_step());
    let mut s = Stream::new(rng, 0);
    let increments = (0..grid.steps())
        .map(|k| {
            let sd = grid.step(k).sqrt();
            (0..ell).map(|_| quantize(sd * s.normal(), q)).collect()
        })
        .collect();
    Ok(NoisePath {
        grid: grid.clone(),
        increments,
        rng,
        level: 0,
        quantum: q,
    })
}

/// Brownian-bridge fill-in at every midpoint: the first child is
/// `dB/2 + sqrt(h)/2 * xi`, the second is the remainder.
pub fn refine_noise(path: &NoisePath) -> Result<NoisePath> {
    if !path.grid.is_uniform() {
        return Err(SweepError::InvalidInput("noise refinement needs a uniform grid".into()));
    }
    let level = path.level + 1;
    let mut s = Stream::new(path.rng.derive(level as u64), 0);
    let q = path.quantum;
    let mut increments = Vec::with_capacity(2 * path.increments.len());
    for (k, parent) in path.increments.iter().enumerate() {
        let half_sd = 0.5 * path.grid.step(k).sqrt();
        let first: Point = parent.iter().map(|p| quantize(0.5 * p + half_sd * s.normal(), q)).collect();
        let second: Point = parent.iter().zip(&first).map(|(p, a)| p - a).collect();
        increments.push(first);
        increments.push(second);
    }
    Ok(NoisePath {
        grid: path.grid.refine_midpoints(),
        increments,
        rng: path.rng,
        level,
        quantum: q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_refinement_exact() {
        let grid = TimeGrid::uniform(1.0, 64).unwrap();
        let a = sample_noise(&grid, 2, RngSpec::new(9, 1)).unwrap();
        let b = sample_noise(&grid, 2, RngSpec::new(9, 1)).unwrap();
        assert_eq!(a, b);
        let r1 = refine_noise(&a).unwrap();
        let r2 = refine_noise(&r1).unwrap();
        assert_eq!(r2, refine_noise(&refine_noise(&b).unwrap()).unwrap());
        for (k, p) in a.increments.iter().enumerate() {
            let s: Point = r1.increments[2 * k].iter().zip(&r1.increments[2 * k + 1]).map(|(x, y)| x + y).collect();
            assert_eq!(&s, p);
        }
        // Coarse-grid values of B agree exactly after two refinements.
        let (c0, c2) = (a.cumulative(), r2.cumulative());
        for k in 0..=64 {
            assert_eq!(c0[k], c2[4 * k]);
        }
    }

    #[test]
    fn increment_moments() {
        let n = 1_000_000;
        let grid = TimeGrid::uniform(n as f64 * 0.01, n).unwrap();
        let p = sample_noise(&grid, 1, RngSpec::new(1, 0)).unwrap();
        let mean = p.increments.iter().map(|v| v[0]).sum::<f64>() / n as f64;
        let var = p.increments.iter().map(|v| (v[0] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() <= 4e-4, "{mean}");
        assert!((var / 0.01 - 1.0).abs() < 0.01, "{var}");
    }

    #[test]
    fn bridge_midpoint_variance() {
        let n = 200_000;
        let grid = TimeGrid::uniform(n as f64 * 0.04, n).unwrap();
        let p = sample_noise(&grid, 1, RngSpec::new(2, 0)).unwrap();
        let r = refine_noise(&p).unwrap();
        // Conditional on the parent, the first child minus half the parent has variance h/4.
        let dev: Vec<f64> = (0..n).map(|k| r.increments[2 * k][0] - 0.5 * p.increments[k][0]).collect();
        let var = dev.iter().map(|v| v * v).sum::<f64>() / n as f64;
        assert!((var / 0.01 - 1.0).abs() < 0.01, "{var}");
    }
}
