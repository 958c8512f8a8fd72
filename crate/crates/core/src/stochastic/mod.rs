//! Stochastically perturbed sweeping process: coefficients, Brownian paths,
//! the frozen-coefficient Euler scheme, and Monte Carlo experiments.

mod euler;
mod noise;

use serde::{Deserialize, Serialize};

pub use euler::{
    euler_sweeping_solve, monte_carlo, monte_carlo_range, pathwise_refinement_probe, stochastic_stability_probe,
    MonteCarloReport, RefinementLevel, RefinementReport, Statistic, StatisticValue, StochasticSolution,
    StochasticStabilityReport,
};
pub use noise::{refine_noise, sample_noise, NoisePath};
pub(crate) use euler::refinement_report;

use crate::error::{Result, SweepError};
use crate::linalg::{norm, Point};

/// Bounded drifts available to scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriftSpec {
    Zero,
    Constant { value: Point },
    /// `f_i(x) = -scale * tanh(x_i)`.
    Tanh { scale: f64 },
    /// `f(t) = amplitude * sin(frequency * t)`.
    TimeSine { amplitude: Point, frequency: f64 },
    /// `-rate (x - target)`, radially capped at norm `cap`.
    SaturatedRestoring { rate: f64, target: Point, cap: f64 },
}

/// Diffusion matrices `sigma(t, x)` of size `d x l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DiffusionSpec {
    Zero,
    /// `sigma * I_d`.
    Scalar { sigma: f64 },
    /// Constant matrix given by rows.
    Matrix { rows: Vec<Point> },
    /// `sigma * diag(1 + amplitude * sin(x_i))` with `|amplitude| < 1`.
    StateScaled { sigma: f64, amplitude: f64 },
}

/// A constant envelope `beta(t) = bound`, declared with its integrability
/// exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub bound: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeCoefficients {
    pub drift: DriftSpec,
    pub diffusion: DiffusionSpec,
    /// Noise dimension; inferred from the diffusion when absent.
    #[serde(default)]
    pub noise_dim: Option<usize>,
    /// `beta_f` with exponent `p > 1`; the catalog bound when absent.
    #[serde(default)]
    pub envelope_f: Option<Envelope>,
    /// `beta_sigma` with exponent `q > 2`; the catalog bound when absent.
    #[serde(default)]
    pub envelope_sigma: Option<Envelope>,
    /// One-sided Lipschitz modulus of `f`.
    #[serde(default)]
    pub lipschitz_f: Option<f64>,
    /// Lipschitz modulus of `sigma` (Frobenius norm).
    #[serde(default)]
    pub lipschitz_sigma: Option<f64>,
}

impl SdeCoefficients {
    pub fn new(drift: DriftSpec, diffusion: DiffusionSpec) -> Self {
        Self {
            drift,
            diffusion,
            noise_dim: None,
            envelope_f: None,
            envelope_sigma: None,
            lipschitz_f: None,
            lipschitz_sigma: None,
        }
    }

    /// `f = 0`, `sigma = 0`.
    pub fn zero() -> Self {
        Self::new(DriftSpec::Zero, DiffusionSpec::Zero)
    }

    pub fn noise_dim(&self, d: usize) -> usize {
        if let Some(l) = self.noise_dim {
            return l;
        }
        match &self.diffusion {
            DiffusionSpec::Matrix { rows } => rows.first().map_or(d, Vec::len),
            _ => d,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let bad = |m: &str| Err(SweepError::InvalidInput(m.to_string()));
        let finite = |v: f64| v.is_finite();
        match &self.drift {
            DriftSpec::Zero => {}
            DriftSpec::Constant { value } if value.len() != d || !value.iter().all(|v| finite(*v)) => {
                return bad("constant drift has the wrong dimension")
            }
            DriftSpec::Tanh { scale } if !finite(*scale) => return bad("tanh scale must be finite"),
            DriftSpec::TimeSine { amplitude, frequency } if amplitude.len() != d || !finite(*frequency) => {
                return bad("time-sine drift has the wrong dimension")
            }
            DriftSpec::SaturatedRestoring { rate, target, cap } if target.len() != d || !(*rate >= 0.0) || !(*cap >= 0.0) => {
                return bad("saturated drift needs a target of dimension d and nonnegative rate and cap")
            }
            _ => {}
        }
        let l = self.noise_dim(d);
        if l == 0 {
            return bad("noise dimension must be positive");
        }
        match &self.diffusion {
            DiffusionSpec::Zero => {}
            DiffusionSpec::Scalar { sigma } if !finite(*sigma) || l != d => {
                return bad("scalar diffusion needs a finite sigma and noise dimension d")
            }
            DiffusionSpec::Matrix { rows } if rows.len() != d || rows.iter().any(|r| r.len() != l) => {
                return bad("diffusion matrix must be d x l")
            }
            DiffusionSpec::StateScaled { sigma, amplitude } if !finite(*sigma) || !(amplitude.abs() < 1.0) || l != d => {
                return bad("state-scaled diffusion needs |amplitude| < 1 and noise dimension d")
            }
            _ => {}
        }
        if self.envelope_f.is_some_and(|e| !(e.exponent > 1.0) || !(e.bound >= 0.0)) {
            return bad("drift envelope needs exponent p > 1 and a nonnegative bound");
        }
        if self.envelope_sigma.is_some_and(|e| !(e.exponent > 2.0) || !(e.bound >= 0.0)) {
            return bad("diffusion envelope needs exponent q > 2 and a nonnegative bound");
        }
        Ok(())
    }

    pub fn drift(&self, t: f64, x: &[f64]) -> Point {
        match &self.drift {
            DriftSpec::Zero => vec![0.0; x.len()],
            DriftSpec::Constant { value } => value.clone(),
            DriftSpec::Tanh { scale } => x.iter().map(|v| -scale * v.tanh()).collect(),
            DriftSpec::TimeSine { amplitude, frequency } => {
                let s = (frequency * t).sin();
                amplitude.iter().map(|a| a * s).collect()
            }
            DriftSpec::SaturatedRestoring { rate, target, cap } => {
                let v: Point = x.iter().zip(target).map(|(a, b)| -rate * (a - b)).collect();
                let n = norm(&v);
                if n > *cap {
                    v.iter().map(|c| c * cap / n).collect()
                } else {
                    v
                }
            }
        }
    }

    /// `sigma(t, x) db` and the Frobenius norm of `sigma(t, x)`.
    pub fn diffuse(&self, _t: f64, x: &[f64], db: &[f64]) -> (Point, f64) {
        let d = x.len();
        match &self.diffusion {
            DiffusionSpec::Zero => (vec![0.0; d], 0.0),
            DiffusionSpec::Scalar { sigma } => (db.iter().map(|b| sigma * b).collect(), sigma.abs() * (d as f64).sqrt()),
            DiffusionSpec::Matrix { rows } => {
                let out = rows.iter().map(|r| crate::linalg::dot(r, db)).collect();
                let fro = rows.iter().map(|r| crate::linalg::norm_sq(r)).sum::<f64>().sqrt();
                (out, fro)
            }
            DiffusionSpec::StateScaled { sigma, amplitude } => {
                let diag: Point = x.iter().map(|v| sigma * (1.0 + amplitude * v.sin())).collect();
                let fro = norm(&diag);
                (diag.iter().zip(db).map(|(s, b)| s * b).collect(), fro)
            }
        }
    }

    /// Catalog value of `sup_x |f(t, x)|`.
    pub fn drift_bound(&self, d: usize) -> f64 {
        match &self.drift {
            DriftSpec::Zero => 0.0,
            DriftSpec::Constant { value } => norm(value),
            DriftSpec::Tanh { scale } => scale.abs() * (d as f64).sqrt(),
            DriftSpec::TimeSine { amplitude, .. } => norm(amplitude),
            DriftSpec::SaturatedRestoring { cap, .. } => *cap,
        }
    }

    /// Catalog value of `sup_x |sigma(t, x)|` (Frobenius).
    pub fn diffusion_bound(&self, d: usize) -> f64 {
        match &self.diffusion {
            DiffusionSpec::Zero => 0.0,
            DiffusionSpec::Scalar { sigma } => sigma.abs() * (d as f64).sqrt(),
            DiffusionSpec::Matrix { rows } => rows.iter().map(|r| crate::linalg::norm_sq(r)).sum::<f64>().sqrt(),
            DiffusionSpec::StateScaled { sigma, amplitude } => sigma.abs() * (1.0 + amplitude.abs()) * (d as f64).sqrt(),
        }
    }

    pub fn drift_envelope(&self, d: usize) -> Envelope {
        self.envelope_f.unwrap_or(Envelope {
            bound: self.drift_bound(d),
            exponent: 2.0,
        })
    }

    pub fn diffusion_envelope(&self, d: usize) -> Envelope {
        self.envelope_sigma.unwrap_or(Envelope {
            bound: self.diffusion_bound(d),
            exponent: 4.0,
        })
    }

    /// Catalog one-sided Lipschitz modulus of `f`.
    pub fn one_sided_lipschitz_f(&self) -> f64 {
        self.lipschitz_f.unwrap_or(0.0)
    }

    /// Catalog Lipschitz modulus of `sigma`.
    pub fn lipschitz_sigma(&self) -> f64 {
        self.lipschitz_sigma.unwrap_or(match &self.diffusion {
            DiffusionSpec::StateScaled { sigma, amplitude } => (sigma * amplitude).abs(),
            _ => 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngSpec;

    fn samples(n: usize, d: usize) -> Vec<Point> {
        let mut s = RngSpec::new(3, 0).rng();
        (0..n).map(|_| (0..d).map(|_| 4.0 * s.normal()).collect()).collect()
    }

    #[test]
    fn catalog_bounds_and_moduli_hold_on_samples() {
        let cases = [
            SdeCoefficients::new(DriftSpec::Tanh { scale: 1.5 }, DiffusionSpec::Scalar { sigma: 0.5 }),
            SdeCoefficients::new(
                DriftSpec::SaturatedRestoring {
                    rate: 2.0,
                    target: vec![1.0, 0.0],
                    cap: 1.0,
                },
                DiffusionSpec::StateScaled {
                    sigma: 0.3,
                    amplitude: 0.5,
                },
            ),
        ];
        for c in &cases {
            c.validate(2).unwrap();
            let pts = samples(200, 2);
            let ef = c.drift_envelope(2);
            let es = c.diffusion_envelope(2);
            let db = vec![0.0; 2];
            for w in pts.windows(2) {
                let (x, y) = (&w[0], &w[1]);
                let (fx, fy) = (c.drift(0.3, x), c.drift(0.3, y));
                assert!(norm(&fx) <= ef.bound + 1e-12);
                assert!(c.diffuse(0.3, x, &db).1 <= es.bound + 1e-12);
                let diff = crate::linalg::sub(x, y);
                let lhs = crate::linalg::dot(&diff, &crate::linalg::sub(&fx, &fy));
                assert!(lhs <= c.one_sided_lipschitz_f() * crate::linalg::norm_sq(&diff) + 1e-12);
                let sx = c.diffuse(0.0, x, &[1.0, 0.0]).0[0] - c.diffuse(0.0, y, &[1.0, 0.0]).0[0];
                assert!(sx.abs() <= c.lipschitz_sigma() * crate::linalg::norm(&diff) + 1e-12);
            }
        }
    }

    #[test]
    fn validation() {
        let bad = SdeCoefficients::new(
            DriftSpec::Zero,
            DiffusionSpec::StateScaled {
                sigma: 1.0,
                amplitude: 1.5,
            },
        );
        assert!(bad.validate(1).is_err());
        let mut c = SdeCoefficients::zero();
        c.envelope_sigma = Some(Envelope {
            bound: 1.0,
            exponent: 2.0,
        });
        assert!(c.validate(1).is_err());
    }
}
