//! Closed-form convex primitives.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SweepError};
use crate::geometry::sublevel::{Constraint, ConstraintFn};
use crate::linalg::{axpy, dist, dot, norm, scale, sub, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConvexPiece {
    /// `{x : <normal, x> <= offset}`
    HalfSpace { normal: Point, offset: f64 },
    Ball { center: Point, radius: f64 },
    Box { lo: Point, hi: Point },
}

impl ConvexPiece {
    pub fn dimension(&self) -> usize {
        match self {
            ConvexPiece::HalfSpace { normal, .. } => normal.len(),
            ConvexPiece::Ball { center, .. } => center.len(),
            ConvexPiece::Box { lo, .. } => lo.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            ConvexPiece::HalfSpace { normal, offset } => norm(normal) > 0.0 && offset.is_finite(),
            ConvexPiece::Ball { radius, .. } => *radius >= 0.0 && radius.is_finite(),
            ConvexPiece::Box { lo, hi } => lo.len() == hi.len() && lo.iter().zip(hi).all(|(a, b)| a <= b),
        };
        if ok {
            Ok(())
        } else {
            Err(SweepError::InvalidInput(format!("degenerate convex piece {self:?}")))
        }
    }

    pub fn project(&self, x: &[f64]) -> Point {
        match self {
            ConvexPiece::HalfSpace { normal, offset } => {
                let excess = dot(normal, x) - offset;
                if excess <= 0.0 {
                    x.to_vec()
                } else {
                    axpy(x, -excess / dot(normal, normal), normal)
                }
            }
            ConvexPiece::Ball { center, radius } => {
                let r = dist(x, center);
                if r <= *radius {
                    x.to_vec()
                } else {
                    axpy(center, radius / r, &sub(x, center))
                }
            }
            ConvexPiece::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (a, b))| v.clamp(*a, *b))
                .collect(),
        }
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            ConvexPiece::HalfSpace { normal, offset } => ((dot(normal, x) - offset) / norm(normal)).max(0.0),
            ConvexPiece::Ball { center, radius } => (dist(x, center) - radius).max(0.0),
            ConvexPiece::Box { .. } => dist(x, &self.project(x)),
        }
    }

    /// Unit outward normals of the faces active at `x` (within `tol`).
    pub fn active_normals(&self, x: &[f64], tol: f64) -> Vec<Point> {
        match self {
            ConvexPiece::HalfSpace { normal, offset } => {
                let n = norm(normal);
                if ((dot(normal, x) - offset) / n).abs() <= tol {
                    vec![scale(normal, 1.0 / n)]
                } else {
                    vec![]
                }
            }
            ConvexPiece::Ball { center, radius } => {
                let r = dist(x, center);
                if (r - radius).abs() <= tol && r > 0.0 {
                    vec![scale(&sub(x, center), 1.0 / r)]
                } else {
                    vec![]
                }
            }
            ConvexPiece::Box { lo, hi } => {
                let d = x.len();
                let mut out = Vec::new();
                for i in 0..d {
                    if (x[i] - hi[i]).abs() <= tol {
                        let mut e = vec![0.0; d];
                        e[i] = 1.0;
                        out.push(e);
                    }
                    if (x[i] - lo[i]).abs() <= tol {
                        let mut e = vec![0.0; d];
                        e[i] = -1.0;
                        out.push(e);
                    }
                }
                out
            }
        }
    }

    /// Smooth-constraint form, used when several pieces are intersected.
    pub fn to_constraints(&self) -> Vec<Constraint> {
        match self {
            ConvexPiece::HalfSpace { normal, offset } => vec![Constraint::fixed(ConstraintFn::Affine {
                a: normal.clone(),
                b: *offset,
            })],
            ConvexPiece::Ball { center, radius } => vec![Constraint::fixed(ConstraintFn::Ball {
                center: center.clone(),
                radius: *radius,
            })],
            ConvexPiece::Box { lo, hi } => {
                let d = lo.len();
                let mut out = Vec::with_capacity(2 * d);
                for i in 0..d {
                    let mut e = vec![0.0; d];
                    e[i] = 1.0;
                    out.push(Constraint::fixed(ConstraintFn::Affine { a: e.clone(), b: hi[i] }));
                    e[i] = -1.0;
                    out.push(Constraint::fixed(ConstraintFn::Affine { a: e, b: -lo[i] }));
                }
                out
            }
        }
    }

    /// Axis-aligned bounding box, if the piece is bounded.
    pub fn bounds(&self) -> Option<(Point, Point)> {
        match self {
            ConvexPiece::HalfSpace { .. } => None,
            ConvexPiece::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            ConvexPiece::Box { lo, hi } => Some((lo.clone(), hi.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let h = ConvexPiece::HalfSpace { normal: vec![0.0, 2.0], offset: 2.0 };
        assert_eq!(h.project(&[3.0, 5.0]), vec![3.0, 1.0]);
        assert_eq!(h.distance(&[3.0, 5.0]), 4.0);
        let b = ConvexPiece::Ball { center: vec![1.0, 1.0], radius: 1.0 };
        assert!(dist(&b.project(&[1.0, 4.0]), &[1.0, 2.0]) < 1e-15);
        let bx = ConvexPiece::Box { lo: vec![0.0, 0.0], hi: vec![1.0, 1.0] };
        assert_eq!(bx.project(&[2.0, -1.0]), vec![1.0, 0.0]);
        assert_eq!(bx.active_normals(&[1.0, 0.0], 1e-12).len(), 2);
    }
}
