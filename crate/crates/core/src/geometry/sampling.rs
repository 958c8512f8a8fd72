//! Boundary and member sampling.

use serde::{Deserialize, Serialize};

use super::sublevel::{solve_intersection, LocalConstraint};
use super::{ConvexPiece, Frozen, Leaf, SetFamily, Window, BOUNDARY_TOL};
use crate::linalg::{add, axpy, dist, norm, normalized, scale, sub, Point};
use crate::rng::{Halton, RngSpec};

/// A boundary point with one unit outward proximal normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub point: Point,
    pub normal: Point,
}

impl SetFamily {
    /// Quasi-random members of `C(t)` inside the sampling window.
    pub fn sample_members(&self, t: f64, n: usize, rng: RngSpec) -> Vec<Point> {
        let f = self.frozen(t);
        let w = self.window_at(t);
        if let Leaf::Pieces([ConvexPiece::Ball { center, radius }]) = &f.leaf {
            let c = add(center, &f.offset);
            let mut s = rng.rng();
            return (0..n).map(|_| s.in_ball(&c, *radius)).collect();
        }
        let mut h = Halton::new(self.dimension, rng);
        let mut out = Vec::with_capacity(n);
        for _ in 0..64 * n.max(1) {
            if out.len() == n {
                break;
            }
            let x = w.map_unit(&h.next_point());
            if f.contains(&x) {
                out.push(x);
            }
        }
        out
    }

    /// Boundary points of `C(t)` with proximal normals.
    ///
    /// Closed-form parameterizations are used for single balls, boxes,
    /// half-spaces and complements of balls. Other sets are sampled by
    /// projecting exterior points, after seeding corner candidates where two
    /// constraints meet.
    pub fn sample_boundary(&self, t: f64, n: usize, rng: RngSpec) -> Vec<BoundaryPoint> {
        let f = self.frozen(t);
        let d = self.dimension;
        let w = self.window_at(t);
        let mut s = rng.derive(1).rng();
        let shift = |p: Point, nrm: Point| BoundaryPoint {
            point: add(&p, &f.offset),
            normal: nrm,
        };
        match &f.leaf {
            Leaf::Pieces([]) => vec![],
            Leaf::Pieces([ConvexPiece::Ball { center, radius }]) if *radius > 0.0 => (0..n)
                .map(|_| {
                    let u = s.unit_vector(d);
                    shift(axpy(center, *radius, &u), u)
                })
                .collect(),
            Leaf::Pieces([ConvexPiece::HalfSpace { normal, offset }]) => {
                let unit = scale(normal, 1.0 / norm(normal));
                let piece = ConvexPiece::HalfSpace {
                    normal: normal.clone(),
                    offset: *offset,
                };
                let mut h = Halton::new(d, rng);
                (0..n)
                    .map(|_| {
                        let x = sub(&w.map_unit(&h.next_point()), &f.offset);
                        // Orthogonal projection onto the hyperplane itself.
                        let e = crate::linalg::dot(&unit, &x) - offset / norm(normal);
                        let p = if e > 0.0 { piece.project(&x) } else { axpy(&x, -e, &unit) };
                        shift(p, unit.clone())
                    })
                    .collect()
            }
            Leaf::Pieces([ConvexPiece::Box { lo, hi }]) => {
                let mut out = box_vertices(lo, hi);
                while out.len() < n {
                    let i = s.index(d);
                    let upper = s.uniform() < 0.5;
                    let mut p = s.in_box(lo, hi);
                    p[i] = if upper { hi[i] } else { lo[i] };
                    let mut e = vec![0.0; d];
                    e[i] = if upper { 1.0 } else { -1.0 };
                    out.push(BoundaryPoint { point: p, normal: e });
                }
                out.truncate(n.max(out.len().min(1usize << d)));
                out.into_iter().map(|b| shift(b.point, b.normal)).collect()
            }
            Leaf::Complement { center, radius } => (0..n)
                .map(|_| {
                    let u = s.unit_vector(d);
                    shift(axpy(center, *radius, &u), scale(&u, -1.0))
                })
                .collect(),
            _ => self.sample_boundary_by_projection(&f, &w, t, n, rng),
        }
    }

    fn sample_boundary_by_projection(
        &self,
        f: &Frozen<'_>,
        w: &Window,
        t: f64,
        n: usize,
        rng: RngSpec,
    ) -> Vec<BoundaryPoint> {
        let mut out = self.corner_candidates(t, rng);
        out.truncate(n / 4);
        let outer = w.padded(0.25, 0.1);
        // Step used to re-probe from just outside a candidate, so that the
        // reported normal is proximal even when the first solve lands on a
        // non-global stationary point.
        let eta = (1e-3 * w.diameter()).min(0.1 * self.prox_radius.value());
        let mut h = Halton::new(self.dimension, rng.derive(2));
        let mut attempts = 0;
        while out.len() < n && attempts < 64 * n.max(1) {
            attempts += 1;
            let u = outer.map_unit(&h.next_point());
            if f.violation(&u) == 0.0 {
                continue;
            }
            let Ok((p, dd)) = f.nearest(&u) else { continue };
            if dd == 0.0 {
                continue;
            }
            let dir = scale(&sub(&u, &p), 1.0 / dd);
            let u2 = axpy(&p, eta, &dir);
            let Ok((p2, d2)) = f.nearest(&u2) else { continue };
            if d2 <= 0.0 || !f.contains(&p2) {
                continue;
            }
            out.push(BoundaryPoint {
                normal: scale(&sub(&u2, &p2), 1.0 / d2),
                point: p2,
            });
        }
        out
    }

    /// Points where at least two constraints are simultaneously active, with
    /// the normalized sum of the active unit gradients as normal.
    pub fn corner_candidates(&self, t: f64, rng: RngSpec) -> Vec<BoundaryPoint> {
        let f = self.frozen(t);
        let d = self.dimension;
        if d < 2 {
            return vec![];
        }
        let owned;
        let cons: Vec<LocalConstraint<'_>> = match &f.leaf {
            Leaf::Sublevel { set, time } => set.at(*time, &f.offset),
            Leaf::Pieces(pieces) if pieces.len() > 1 || matches!(pieces.first(), Some(ConvexPiece::Box { .. })) => {
                owned = pieces.iter().flat_map(|p| p.to_constraints()).collect::<Vec<_>>();
                owned
                    .iter()
                    .map(|c| LocalConstraint::new(&c.function, f.offset.clone()))
                    .collect()
            }
            _ => return vec![],
        };
        let w = self.window_at(t);
        let mut h = Halton::new(d, rng.derive(3));
        let starts: Vec<Point> = (0..8).map(|_| w.map_unit(&h.next_point())).collect();
        let mut out: Vec<BoundaryPoint> = Vec::new();
        let m = cons.len();
        for i in 0..m {
            for j in (i + 1)..m {
                for x0 in &starts {
                    let Some(p) = solve_intersection(&[&cons[i], &cons[j]], x0) else { continue };
                    if !w.padded(0.1, 0.0).contains(&p) || !f.contains(&p) {
                        continue;
                    }
                    if out.iter().any(|b| dist(&b.point, &p) < 1e-8) {
                        continue;
                    }
                    let gens = f.normal_generators(&p, BOUNDARY_TOL);
                    if gens.is_empty() {
                        continue;
                    }
                    let mut sum = vec![0.0; d];
                    for g in &gens {
                        sum = add(&sum, g);
                    }
                    let normal = normalized(&sum).unwrap_or_else(|| gens[0].clone());
                    out.push(BoundaryPoint { point: p, normal });
                }
            }
        }
        out
    }
}

fn box_vertices(lo: &[f64], hi: &[f64]) -> Vec<BoundaryPoint> {
    let d = lo.len();
    if d > 4 {
        return vec![];
    }
    (0..(1usize << d))
        .map(|mask| {
            let mut p = vec![0.0; d];
            let mut nrm = vec![0.0; d];
            for i in 0..d {
                if mask >> i & 1 == 1 {
                    p[i] = hi[i];
                    nrm[i] = 1.0;
                } else {
                    p[i] = lo[i];
                    nrm[i] = -1.0;
                }
            }
            BoundaryPoint {
                point: p,
                normal: scale(&nrm, 1.0 / (d as f64).sqrt()),
            }
        })
        .collect()
}
