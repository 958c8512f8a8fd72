//! Checkers and constant synthesis for the geometric hypotheses H1-H5.

mod minnorm;
mod report;
mod verify;

use serde::{Deserialize, Serialize};

pub use minnorm::{min_norm_in_hull, MinNorm, GAP_TOL, MAX_MAJOR_CYCLES};
pub use report::{assess, AssessOptions, HypothesisReport, HypothesisVerdict, Witness};
pub use verify::{
    check_complement_prox_regular, h4_grid_search, h5_grid_search, interior_ball_h4, verify_h4_at, verify_h5_at,
    ComplementCheck, GridSearchReport, H4Check, H4Witness, H5Check, H5Witness,
};

use crate::error::{Result, SweepError};
use crate::geometry::{SetFamily, SublevelSet};
use crate::linalg::{axpy, norm, scale, Point};
use crate::rng::RngSpec;

/// Feasibility tolerance on constraint values for active-set queries.
pub const ACTIVE_FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedByFormula,
    PassBySampling,
    FailWithWitness,
    NotApplicable,
}

impl Verdict {
    pub fn is_fail(self) -> bool {
        self == Verdict::FailWithWitness
    }
}

/// `I_eps(t, x) = {i : -eps <= g_i(t, x) <= 0}` (zero-based indices).
pub fn active_set(set: &SublevelSet, t: f64, x: &[f64], epsilon: f64) -> Result<Vec<usize>> {
    let zero = vec![0.0; x.len()];
    let mut out = Vec::new();
    for (i, c) in set.at(t, &zero).iter().enumerate() {
        let g = c.value(x);
        if g > ACTIVE_FEAS_TOL {
            return Err(SweepError::Infeasible { index: i, value: g });
        }
        if g >= -epsilon {
            out.push(i);
        }
    }
    Ok(out)
}

fn gradients(set: &SublevelSet, t: f64, x: &[f64], idx: &[usize]) -> Vec<Point> {
    let zero = vec![0.0; x.len()];
    let cons = set.at(t, &zero);
    idx.iter().map(|&i| cons[i].gradient(x)).collect()
}

/// `xi(t, x)` and the unit direction `v = -w/|w|` built from the min-norm point.
pub fn hull_direction(set: &SublevelSet, t: f64, x: &[f64], epsilon: f64) -> Result<Option<(f64, Point)>> {
    let idx = active_set(set, t, x, epsilon)?;
    if idx.is_empty() {
        return Ok(None);
    }
    let mn = min_norm_in_hull(&gradients(set, t, x, &idx))?;
    let w = norm(&mn.point);
    if w == 0.0 {
        return Ok(Some((mn.xi, vec![0.0; x.len()])));
    }
    Ok(Some((mn.xi, scale(&mn.point, -1.0 / w))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaWitness {
    pub t: f64,
    pub x: Point,
    pub active: Vec<usize>,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    /// Sampled supremum of `xi(t, x)`.
    pub kappa: f64,
    pub pass: bool,
    pub epsilon: f64,
    pub witness: KappaWitness,
    pub n_active_points: usize,
    pub n_samples: usize,
}

fn require_sublevel(set: &SetFamily) -> Result<&SublevelSet> {
    set.sublevel_set()
        .ok_or_else(|| SweepError::InvalidInput("operation needs a sublevel-intersection set".into()))
}

fn sample_times(horizon: f64, n_time: usize) -> Vec<f64> {
    if n_time <= 1 {
        return vec![0.0];
    }
    (0..n_time).map(|k| horizon * k as f64 / (n_time - 1) as f64).collect()
}

/// Points of `C(t)` concentrated near the boundary: corners, boundary samples
/// and members.
fn near_boundary_points(set: &SetFamily, t: f64, n: usize, rng: RngSpec) -> Vec<Point> {
    let mut pts: Vec<Point> = set.corner_candidates(t, rng.derive(1)).into_iter().map(|b| b.point).collect();
    pts.extend(set.sample_boundary(t, n / 2, rng.derive(2)).into_iter().map(|b| b.point));
    pts.extend(set.sample_members(t, n - n / 2, rng.derive(3)));
    pts
}

/// Sampled `kappa = sup xi(t, x)` over points with a nonempty `I_eps`.
pub fn kappa_estimate(
    set: &SetFamily,
    epsilon: f64,
    n_time: usize,
    n_space: usize,
    rng: RngSpec,
) -> Result<KappaReport> {
    let sub = require_sublevel(set)?;
    let mut best: Option<(f64, KappaWitness)> = None;
    let mut n_active = 0;
    let mut n_samples = 0;
    for (j, &t) in sample_times(set.horizon, n_time).iter().enumerate() {
        for x in near_boundary_points(set, t, n_space, rng.derive(j as u64)) {
            n_samples += 1;
            let Ok(idx) = active_set(sub, t, &x, epsilon) else { continue };
            if idx.is_empty() {
                continue;
            }
            n_active += 1;
            let mn = min_norm_in_hull(&gradients(sub, t, &x, &idx))?;
            if best.as_ref().is_none_or(|b| mn.xi > b.0) {
                best = Some((
                    mn.xi,
                    KappaWitness {
                        t,
                        x,
                        active: idx,
                        lambda: mn.lambda,
                    },
                ));
            }
        }
    }
    let (kappa, witness) = best.ok_or(SweepError::NoActivePoints)?;
    Ok(KappaReport {
        kappa,
        pass: kappa < 0.0,
        epsilon,
        witness,
        n_active_points: n_active,
        n_samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBound {
    pub value: f64,
    pub analytic: bool,
}

/// `K = sup |grad g_i|` over `Q_eps + eta B`: the catalog bound when every
/// constraint has one, else a sample over perturbed near-active points.
pub fn gradient_bound(
    set: &SetFamily,
    epsilon: f64,
    eta: f64,
    n_time: usize,
    n_space: usize,
    rng: RngSpec,
) -> Result<GradientBound> {
    let sub = require_sublevel(set)?;
    if let Some(k) = sub.grad_bound {
        return Ok(GradientBound { value: k, analytic: true });
    }
    let analytic: Option<f64> = sub
        .constraints
        .iter()
        .map(|c| c.function.gradient_bound())
        .try_fold(0.0f64, |acc, b| b.map(|b| acc.max(b)));
    if let Some(k) = analytic {
        return Ok(GradientBound { value: k, analytic: true });
    }
    let d = set.dimension;
    let mut k: f64 = 0.0;
    let mut found = false;
    for (j, &t) in sample_times(set.horizon, n_time).iter().enumerate() {
        let mut s = rng.derive(100 + j as u64).rng();
        let zero = vec![0.0; d];
        let cons = sub.at(t, &zero);
        for x in near_boundary_points(set, t, n_space, rng.derive(j as u64)) {
            match active_set(sub, t, &x, epsilon) {
                Ok(idx) if !idx.is_empty() => {}
                _ => continue,
            }
            found = true;
            for _ in 0..4 {
                let y = s.in_ball(&x, eta);
                for c in &cons {
                    k = k.max(norm(&c.gradient(&y)));
                }
            }
            for c in &cons {
                k = k.max(norm(&c.gradient(&x)));
            }
        }
    }
    if !found {
        return Err(SweepError::NoActivePoints);
    }
    Ok(GradientBound { value: k, analytic: false })
}

/// The constants `(ell, r, M)` synthesized for sublevel intersections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H4Synthesis {
    pub ell: f64,
    pub r: f64,
    pub m: f64,
    pub kappa: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub l_grad: f64,
    pub k_bound: f64,
}

impl H4Synthesis {
    pub fn constants(&self) -> H4Constants {
        H4Constants {
            r: self.r,
            l: self.m,
            direction: DirectionMap::SublevelHull {
                ell: self.ell,
                epsilon: self.epsilon,
            },
        }
    }
}

/// `ell = min{1, eta/4, -kappa/(4L), eps/(2K)}`,
/// `r = min{1, eta/8, -kappa ell/(4(2L+K)), eps/(4K)}`, `M = ell/r`.
pub fn h4_constants_sublevel(kappa: f64, epsilon: f64, eta: f64, l_grad: f64, k_bound: f64) -> Result<H4Synthesis> {
    if kappa >= 0.0 || kappa.is_nan() {
        return Err(SweepError::NonnegativeKappa { kappa });
    }
    if !(epsilon > 0.0 && eta > 0.0 && k_bound > 0.0 && l_grad >= 0.0) {
        return Err(SweepError::InvalidInput(
            "epsilon, eta and K must be positive and L nonnegative".into(),
        ));
    }
    // With L = 0 the third branch is +inf and drops out of the min.
    let ell = 1f64
        .min(eta / 4.0)
        .min(-kappa / (4.0 * l_grad))
        .min(epsilon / (2.0 * k_bound));
    let r = 1f64
        .min(eta / 8.0)
        .min(-kappa * ell / (4.0 * (2.0 * l_grad + k_bound)))
        .min(epsilon / (4.0 * k_bound));
    Ok(H4Synthesis {
        ell,
        r,
        m: ell / r,
        kappa,
        epsilon,
        eta,
        l_grad,
        k_bound,
    })
}

/// How the centre `z(t, x)` of the H4 ball is chosen at a boundary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DirectionMap {
    /// `z = x + ell v_{t,x}` with `v` from the min-norm point of active gradients.
    SublevelHull { ell: f64, epsilon: f64 },
    /// `z = x - distance n(t, x)` with `n` the normalized sum of outward generators.
    InwardNormal { distance: f64 },
    /// `z = x + distance * direction`.
    Direction { direction: Point, distance: f64 },
    /// A fixed centre.
    Fixed { point: Point },
}

impl DirectionMap {
    pub fn witness(&self, set: &SetFamily, t: f64, x: &[f64]) -> Result<Point> {
        match self {
            DirectionMap::SublevelHull { ell, epsilon } => {
                let sub = require_sublevel(set)?;
                Ok(match hull_direction(sub, t, x, *epsilon)? {
                    Some((_, v)) => axpy(x, *ell, &v),
                    None => x.to_vec(),
                })
            }
            DirectionMap::InwardNormal { distance } => {
                let gens = set.normal_generators(t, x);
                let sum = gens.iter().fold(vec![0.0; x.len()], |a, g| crate::linalg::add(&a, g));
                let n = crate::linalg::normalized(&sum).ok_or(SweepError::NormalProbeFailed)?;
                Ok(axpy(x, -distance, &n))
            }
            DirectionMap::Direction { direction, distance } => {
                let u = crate::linalg::normalized(direction)
                    .ok_or_else(|| SweepError::InvalidInput("zero direction".into()))?;
                Ok(axpy(x, *distance, &u))
            }
            DirectionMap::Fixed { point } => Ok(point.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H4Constants {
    pub r: f64,
    pub l: f64,
    pub direction: DirectionMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H5Constants {
    pub delta: f64,
    pub l: f64,
    /// The direction `ell_x(t)`; normalized before use.
    pub direction: Point,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H5ToH4 {
    pub gamma: f64,
    pub r0: f64,
    pub r_tilde: f64,
    pub l_tilde: f64,
}

impl H5ToH4 {
    /// H4 constants with `z = x + r0 ell_x`.
    pub fn constants(&self, direction: Point) -> H4Constants {
        H4Constants {
            r: self.r_tilde,
            l: self.l_tilde,
            direction: DirectionMap::Direction {
                direction,
                distance: self.r0,
            },
        }
    }
}

/// `gamma = min{rho/c, delta/(2c), 3 rho/(8 L c^2)}` with `c = 1 + 1/(4L)`;
/// `r0 = gamma/2`, `r~ = r0/(8L)`, `L~ = 8L`.
pub fn h5_to_h4_constants(rho: f64, delta: f64, l: f64) -> Result<H5ToH4> {
    if !(rho > 0.0 && delta > 0.0 && l > 0.0) {
        return Err(SweepError::InvalidInput("rho, delta and L must be positive".into()));
    }
    let c = 1.0 + 1.0 / (4.0 * l);
    let gamma = (rho / c).min(delta / (2.0 * c)).min(3.0 * rho / (8.0 * l * c * c));
    let r0 = 0.5 * gamma;
    Ok(H5ToH4 {
        gamma,
        r0,
        r_tilde: r0 / (8.0 * l),
        l_tilde: 8.0 * l,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Constraint, ConstraintFn, ProxRadius};

    fn interval() -> SublevelSet {
        SublevelSet::new(vec![
            Constraint::fixed(ConstraintFn::Affine { a: vec![-1.0], b: 0.0 }),
            Constraint::fixed(ConstraintFn::Affine { a: vec![1.0], b: 1.0 }),
        ])
    }

    #[test]
    fn active_set_examples() {
        let s = interval();
        assert!(active_set(&s, 0.0, &[0.5], 0.1).unwrap().is_empty());
        assert_eq!(active_set(&s, 0.0, &[0.05], 0.1).unwrap(), vec![0]);
        assert!(matches!(active_set(&s, 0.0, &[1.5], 0.1), Err(SweepError::Infeasible { index: 1, .. })));
    }

    #[test]
    fn synthesis_arithmetic() {
        let c = h4_constants_sublevel(-1.0, 0.5, 1.0, 2.0, 2.0).unwrap();
        assert_eq!(c.ell, 0.125);
        assert!((c.r - 0.125 / 24.0).abs() < 1e-17);
        assert!((c.m - 24.0).abs() < 1e-12);
        let c = h4_constants_sublevel(-8.0, 4.0, 4.0, 2.0, 2.0).unwrap();
        assert_eq!(c.ell, 1.0);
        assert!(matches!(
            h4_constants_sublevel(0.0, 1.0, 1.0, 1.0, 1.0),
            Err(SweepError::NonnegativeKappa { .. })
        ));
    }

    #[test]
    fn h5_to_h4_arithmetic() {
        let c = h5_to_h4_constants(1.0, 1.0, 1.0).unwrap();
        assert!((c.gamma - 0.24).abs() < 1e-15);
        assert!((c.r0 - 0.12).abs() < 1e-15);
        assert!((c.r_tilde - 0.015).abs() < 1e-15);
        assert_eq!(c.l_tilde, 8.0);
        let inf = h5_to_h4_constants(f64::INFINITY, 0.2, 1.1).unwrap();
        assert!(inf.gamma.is_finite());
    }

    #[test]
    fn kappa_of_unit_disk_and_opposing_halfspaces() {
        let disk = SetFamily::sublevel(
            2,
            ProxRadius::INFINITE,
            1.0,
            SublevelSet::new(vec![Constraint::fixed(ConstraintFn::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            })]),
        )
        .unwrap();
        let k = kappa_estimate(&disk, 1e-3, 1, 400, RngSpec::new(1, 0)).unwrap();
        assert!((k.kappa + 2.0).abs() < 1e-2, "{}", k.kappa);
        let slab = SetFamily::sublevel(
            1,
            ProxRadius::INFINITE,
            1.0,
            SublevelSet::new(vec![
                Constraint::fixed(ConstraintFn::Affine { a: vec![1.0], b: 0.0 }),
                Constraint::fixed(ConstraintFn::Affine { a: vec![-1.0], b: 1.0 }),
            ]),
        )
        .unwrap();
        let k = kappa_estimate(&slab, 2.0, 1, 50, RngSpec::new(1, 0)).unwrap();
        assert_eq!(k.kappa, 0.0);
        assert!(!k.pass);
    }
}
