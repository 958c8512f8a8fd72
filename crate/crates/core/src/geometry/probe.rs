//! Proximal normals and sampled prox-regularity probes.

use serde::{Deserialize, Serialize};

use super::sublevel::{project_onto_constraints, ConstraintFn, LocalConstraint};
use super::{ConvexPiece, Frozen, Leaf, SetFamily, BOUNDARY_TOL};
use crate::error::{Result, SweepError};
use crate::linalg::{add, axpy, dist, dot, norm, norm_sq, normalized, scale, sub, Point};
use crate::rng::{Halton, RngSpec};

/// Probe margins at or below this value count as satisfied.
pub const PROBE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "vector", rename_all = "snake_case")]
pub enum NormalResult {
    Unit(Point),
    Zero,
}

impl NormalResult {
    pub fn unit(&self) -> Option<&Point> {
        match self {
            NormalResult::Unit(v) => Some(v),
            NormalResult::Zero => None,
        }
    }
}

/// A violating triple for the prox-regularity inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeWitness {
    pub x: Point,
    pub normal: Point,
    pub x_prime: Point,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub pass: bool,
    pub rho_candidate: f64,
    /// Largest value of `<z, x'-x> - |x'-x|^2 / (2 rho)` over the sample.
    pub worst_margin: f64,
    pub witness: Option<ProbeWitness>,
    pub n_pairs: usize,
    pub n_points: usize,
    /// Set when no boundary pairs were found; the pass is then vacuous.
    pub degenerate: bool,
}

/// Evaluates the prox-regularity inequality on all (pair, point) combinations.
pub(crate) fn probe_pairs(pairs: &[(Point, Point)], points: &[Point], rho: f64) -> ProbeReport {
    let inv = if rho.is_infinite() { 0.0 } else { 1.0 / rho };
    let mut worst = f64::NEG_INFINITY;
    let mut arg: Option<(usize, usize)> = None;
    for (i, (x, z)) in pairs.iter().enumerate() {
        for (j, xp) in points.iter().enumerate() {
            let v = sub(xp, x);
            let m = dot(z, &v) - 0.5 * inv * norm(z) * norm_sq(&v);
            if m > worst {
                worst = m;
                arg = Some((i, j));
            }
        }
    }
    let degenerate = pairs.is_empty() || points.is_empty();
    if degenerate {
        worst = 0.0;
    }
    let pass = worst <= PROBE_TOL;
    let witness = match (pass, arg) {
        (false, Some((i, j))) => Some(ProbeWitness {
            x: pairs[i].0.clone(),
            normal: pairs[i].1.clone(),
            x_prime: points[j].clone(),
            margin: worst,
        }),
        _ => None,
    };
    ProbeReport {
        pass,
        rho_candidate: rho,
        worst_margin: worst,
        witness,
        n_pairs: pairs.len(),
        n_points: points.len(),
        degenerate,
    }
}

/// Samples boundary points with proximal normals and members of `C(t)` and
/// reports the worst violation of `<z, x'-x> <= |z|/(2 rho) |x'-x|^2`.
pub fn prox_regularity_probe(
    set: &SetFamily,
    t: f64,
    rho_candidate: f64,
    n_samples: usize,
    rng: RngSpec,
) -> ProbeReport {
    let n = n_samples.max(1);
    let boundary = set.sample_boundary(t, n, rng.derive(10));
    let mut points = set.sample_members(t, n, rng.derive(11));
    points.extend(boundary.iter().map(|b| b.point.clone()));
    let pairs: Vec<(Point, Point)> = boundary.into_iter().map(|b| (b.point, b.normal)).collect();
    probe_pairs(&pairs, &points, rho_candidate)
}

/// One unit proximal normal at `x`, or `Zero` at interior points.
///
/// Candidates are the normalized sum of the active unit generators followed
/// by each generator; a candidate is accepted when an outward probe projects
/// back onto `x` and the prox-regularity inequality holds on sampled members.
pub fn proximal_unit_normal(set: &SetFamily, t: f64, x: &[f64]) -> Result<NormalResult> {
    let members = set.sample_members(t, 64, RngSpec::new(0x6e6f726d, 0));
    proximal_normal_with(set, t, x, &members)
}

pub(crate) fn proximal_normal_with(set: &SetFamily, t: f64, x: &[f64], members: &[Point]) -> Result<NormalResult> {
    let f = set.frozen(t);
    if !f.contains(x) {
        return Err(SweepError::ProbeFailed);
    }
    let gens = f.normal_generators(x, BOUNDARY_TOL);
    if gens.is_empty() {
        return Ok(NormalResult::Zero);
    }
    let rho = set.prox_radius.value();
    let inv = set.prox_radius.inv();
    let tau = 1e-4 * rho.min(1.0);
    let mut candidates = Vec::with_capacity(gens.len() + 1);
    let sum = gens.iter().fold(vec![0.0; x.len()], |acc, g| add(&acc, g));
    if let Some(s) = normalized(&sum) {
        candidates.push(s);
    }
    candidates.extend(gens.iter().cloned());
    for c in candidates {
        let y = axpy(x, tau, &c);
        let Ok((p, _)) = f.nearest(&y) else { continue };
        if dist(&p, x) > 1e-3 * tau {
            continue;
        }
        let ok = members.iter().all(|xp| {
            let v = sub(xp, x);
            dot(&c, &v) - 0.5 * inv * norm_sq(&v) <= 1e-9
        });
        if ok {
            return Ok(NormalResult::Unit(c));
        }
    }
    Err(SweepError::ProbeFailed)
}

/// The closure of `R^d \ C(t)` as a finite union of single-constraint sets.
pub(crate) struct Complement {
    parts: Vec<(ConstraintFn, Point, f64)>,
}

impl Complement {
    pub fn of(f: &Frozen<'_>) -> Option<Self> {
        let mut parts = Vec::new();
        match &f.leaf {
            Leaf::Pieces(pieces) => {
                for p in pieces.iter() {
                    let cons = match p {
                        ConvexPiece::Ball { radius, .. } if *radius == 0.0 => return None,
                        _ => p.to_constraints(),
                    };
                    for c in cons {
                        parts.push((c.function, f.offset.clone(), -1.0));
                    }
                }
            }
            Leaf::Complement { center, radius } => parts.push((
                ConstraintFn::Ball {
                    center: center.clone(),
                    radius: *radius,
                },
                f.offset.clone(),
                1.0,
            )),
            Leaf::Sublevel { set, time } => {
                for c in set.at(*time, &f.offset) {
                    parts.push((c.function.clone(), c.shift, -1.0));
                }
            }
        }
        (!parts.is_empty()).then_some(Self { parts })
    }

    fn locals(&self) -> Vec<LocalConstraint<'_>> {
        self.parts
            .iter()
            .map(|(f, s, sign)| LocalConstraint {
                function: f,
                shift: s.clone(),
                sign: *sign,
            })
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.locals().iter().any(|c| c.value(x) <= 1e-12)
    }

    /// Nearest point of the union: the best of the per-part projections.
    pub fn nearest(&self, x: &[f64]) -> Option<(Point, f64)> {
        let mut best: Option<(Point, f64)> = None;
        for c in self.locals() {
            let Ok(p) = project_onto_constraints(std::slice::from_ref(&c), x) else { continue };
            let d = dist(&p.point, x);
            if best.as_ref().is_none_or(|b| d < b.1) {
                best = Some((p.point, d));
            }
        }
        best
    }
}

/// Prox-regularity probe of `cl(R^d \ C(t))` with candidate radius `beta`.
pub(crate) fn complement_probe(
    set: &SetFamily,
    t: f64,
    beta: f64,
    n_samples: usize,
    rng: RngSpec,
) -> Result<ProbeReport> {
    let f = set.frozen(t);
    let comp = Complement::of(&f).ok_or(SweepError::EmptyComplement)?;
    let n = n_samples.max(1);
    let w = set.window_at(t);
    let boundary = set.sample_boundary(t, n, rng.derive(20));
    // Interior points of C(t) project onto the complement along proximal normals.
    let mut sources: Vec<Point> = Vec::new();
    let scale_len = 1e-2 * w.diameter();
    for b in &boundary {
        sources.push(axpy(&b.point, -scale_len, &b.normal));
    }
    let mut h = Halton::new(set.dimension, rng.derive(21));
    let mut inside: Vec<Point> = Vec::new();
    let mut outside: Vec<Point> = Vec::new();
    for _ in 0..(8 * n) {
        let u = w.map_unit(&h.next_point());
        if f.violation(&u) == 0.0 && !comp.contains(&u) {
            if inside.len() < n {
                inside.push(u);
            }
        } else if outside.len() < n {
            outside.push(u);
        }
    }
    sources.extend(inside);
    let mut pairs = Vec::new();
    for y in &sources {
        if comp.contains(y) {
            continue;
        }
        if let Some((q, d)) = comp.nearest(y) {
            if d > 0.0 {
                pairs.push((q.clone(), scale(&sub(y, &q), 1.0 / d)));
            }
        }
    }
    let mut points: Vec<Point> = boundary.into_iter().map(|b| b.point).collect();
    points.extend(outside);
    Ok(probe_pairs(&pairs, &points, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Constraint, ProxRadius, SublevelSet};
    use crate::path::PathSpec;

    #[test]
    fn normal_examples() {
        let h = SetFamily::half_space(vec![1.0, 0.0], 0.0, 1.0).unwrap();
        assert_eq!(
            proximal_unit_normal(&h, 0.0, &[0.0, 0.3]).unwrap(),
            NormalResult::Unit(vec![1.0, 0.0])
        );
        let b = SetFamily::ball(vec![0.0, 0.0], 1.0, 1.0).unwrap();
        assert_eq!(
            proximal_unit_normal(&b, 0.0, &[0.0, 1.0]).unwrap(),
            NormalResult::Unit(vec![0.0, 1.0])
        );
        assert_eq!(proximal_unit_normal(&b, 0.0, &[0.0, 0.2]).unwrap(), NormalResult::Zero);
        let s = SetFamily::sublevel(
            2,
            ProxRadius::INFINITE,
            1.0,
            SublevelSet::new(vec![Constraint::fixed(ConstraintFn::Ball {
                center: vec![0.0, 0.0],
                radius: 1.0,
            })]),
        )
        .unwrap();
        assert_eq!(
            proximal_unit_normal(&s, 0.0, &[1.0, 0.0]).unwrap(),
            NormalResult::Unit(vec![1.0, 0.0])
        );
    }

    #[test]
    fn complement_of_ball_calibration() {
        let c = SetFamily::complement_of_ball(2, PathSpec::Zero, 1.0, 1.0).unwrap();
        let pass = prox_regularity_probe(&c, 0.0, 1.0, 400, RngSpec::new(5, 0));
        assert!(pass.pass, "{pass:?}");
        let fail = prox_regularity_probe(&c, 0.0, 2.0, 400, RngSpec::new(5, 0));
        assert!(!fail.pass);
        assert!(fail.witness.is_some());
    }

    #[test]
    fn box_is_prox_regular_for_any_radius() {
        let b = SetFamily::boxed(vec![0.0, 0.0], vec![1.0, 2.0], 1.0).unwrap();
        for rho in [0.01, 1.0, 1e6] {
            assert!(prox_regularity_probe(&b, 0.0, rho, 200, RngSpec::new(1, 0)).pass);
        }
    }

    #[test]
    fn exterior_of_disk_is_complement_prox_regular() {
        let b = SetFamily::ball(vec![0.0, 0.0], 1.0, 1.0).unwrap();
        let r = complement_probe(&b, 0.0, 1.0, 300, RngSpec::new(2, 0)).unwrap();
        assert!(r.pass, "{r:?}");
        let full = SetFamily::full_space(2, 1.0).unwrap();
        assert!(matches!(
            complement_probe(&full, 0.0, 1.0, 10, RngSpec::new(2, 0)),
            Err(SweepError::EmptyComplement)
        ));
    }
}
