//! Moving sets `t -> C(t)` and the projection, distance and normal toolbox.

pub mod convex;
mod hausdorff;
mod probe;
mod sampling;
pub mod sublevel;

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use convex::ConvexPiece;
pub use hausdorff::{
    ball_persistence, excess, hausdorff_distance, modulus_of_continuity, BallPersistence, ContinuityModulus,
    HausdorffEstimate,
};
pub(crate) use probe::complement_probe;
pub use probe::{prox_regularity_probe, proximal_unit_normal, NormalResult, ProbeReport, ProbeWitness};
pub use sampling::BoundaryPoint;
pub use sublevel::{Constraint, ConstraintFn, SublevelSet};

use crate::error::{Result, SweepError};
use crate::linalg::{add, dist, norm, scale, sub, Point};
use crate::path::PathSpec;
use sublevel::{project_with_seeds, LocalConstraint};

/// Membership tolerance on the (estimated) distance to the set.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Points closer than this to the boundary count as boundary points.
pub const BOUNDARY_TOL: f64 = 1e-7;

/// Prox-regularity radius `rho` in `(0, inf]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct ProxRadius(f64);

impl ProxRadius {
    pub const INFINITE: ProxRadius = ProxRadius(f64::INFINITY);

    pub fn finite(rho: f64) -> Result<Self> {
        if rho > 0.0 && rho.is_finite() {
            Ok(Self(rho))
        } else {
            Err(SweepError::InvalidInput(format!("prox radius must be positive, got {rho}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `1/rho`, which is exactly zero in the convex case.
    pub fn inv(self) -> f64 {
        if self.0.is_infinite() {
            0.0
        } else {
            1.0 / self.0
        }
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }
}

impl Serialize for ProxRadius {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ProxRadius {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = ProxRadius;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive number or \"inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ProxRadius, E> {
                ProxRadius::finite(v).map_err(E::custom)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ProxRadius, E> {
                self.visit_f64(v as f64)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ProxRadius, E> {
                self.visit_f64(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ProxRadius, E> {
                match v {
                    "inf" | "infinity" | "Infinity" => Ok(ProxRadius::INFINITE),
                    _ => Err(E::custom(format!("unrecognized prox radius {v:?}"))),
                }
            }
        }
        d.deserialize_any(V)
    }
}

/// Axis-aligned sampling window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub lo: Point,
    pub hi: Point,
}

impl Window {
    pub fn new(lo: Point, hi: Point) -> Self {
        Self { lo, hi }
    }

    pub fn centered(center: &[f64], half: f64) -> Self {
        Self {
            lo: center.iter().map(|c| c - half).collect(),
            hi: center.iter().map(|c| c + half).collect(),
        }
    }

    pub fn padded(&self, frac: f64, min_pad: f64) -> Self {
        let pad: Vec<f64> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| ((b - a) * frac).max(min_pad))
            .collect();
        Self {
            lo: self.lo.iter().zip(&pad).map(|(a, p)| a - p).collect(),
            hi: self.hi.iter().zip(&pad).map(|(b, p)| b + p).collect(),
        }
    }

    pub fn translated(&self, v: &[f64]) -> Self {
        Self {
            lo: add(&self.lo, v),
            hi: add(&self.hi, v),
        }
    }

    pub fn diameter(&self) -> f64 {
        dist(&self.lo, &self.hi)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *a <= *v && *v <= *b)
    }

    /// Maps a point of the unit cube into the window.
    pub fn map_unit(&self, u: &[f64]) -> Point {
        u.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .map(|(s, (a, b))| a + s * (b - a))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetVariant {
    /// Time-independent intersection of convex pieces; no pieces means `R^d`.
    FixedConvex { pieces: Vec<ConvexPiece> },
    /// `base(0) + c(t)`.
    TranslatedBase { base: Box<SetVariant>, center: PathSpec },
    /// Closure of the complement of the open ball `B(c(t), radius)`.
    ComplementOfBall { center: PathSpec, radius: f64 },
    SublevelIntersection(SublevelSet),
    /// `inner(t) - offset(t)`.
    Shifted { inner: Box<SetVariant>, offset: PathSpec },
}

/// A moving set together with its declared prox-regularity radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetFamily {
    pub dimension: usize,
    pub prox_radius: ProxRadius,
    pub horizon: f64,
    pub variant: SetVariant,
    /// Sampling window in world coordinates; a default is derived per variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<Window>,
}

/// The leaf geometry of a set at a fixed time, in its own coordinates.
#[derive(Debug, Clone)]
pub(crate) enum Leaf<'a> {
    Pieces(&'a [ConvexPiece]),
    Complement { center: Point, radius: f64 },
    Sublevel { set: &'a SublevelSet, time: f64 },
}

/// `C(t) = offset + leaf`.
#[derive(Debug, Clone)]
pub(crate) struct Frozen<'a> {
    pub offset: Point,
    pub leaf: Leaf<'a>,
}

fn resolve(variant: &SetVariant, t: f64, offset: Point) -> Frozen<'_> {
    let d = offset.len();
    match variant {
        SetVariant::FixedConvex { pieces } => Frozen {
            offset,
            leaf: Leaf::Pieces(pieces),
        },
        SetVariant::TranslatedBase { base, center } => resolve(base, 0.0, add(&offset, &center.at(t, d))),
        SetVariant::ComplementOfBall { center, radius } => Frozen {
            offset,
            leaf: Leaf::Complement {
                center: center.at(t, d),
                radius: *radius,
            },
        },
        SetVariant::SublevelIntersection(set) => Frozen {
            offset,
            leaf: Leaf::Sublevel { set, time: t },
        },
        SetVariant::Shifted { inner, offset: h } => resolve(inner, t, sub(&offset, &h.at(t, d))),
    }
}

impl Frozen<'_> {
    fn local(&self, x: &[f64]) -> Point {
        sub(x, &self.offset)
    }

    pub fn violation(&self, x: &[f64]) -> f64 {
        let y = self.local(x);
        match &self.leaf {
            Leaf::Pieces(pieces) => pieces.iter().map(|p| p.distance(&y)).fold(0.0, f64::max),
            Leaf::Complement { center, radius } => (radius - dist(&y, center)).max(0.0),
            Leaf::Sublevel { set, time } => {
                let zero = vec![0.0; y.len()];
                set.at(*time, &zero)
                    .iter()
                    .map(|c| {
                        let g = c.value(&y);
                        if g <= 0.0 {
                            0.0
                        } else {
                            g / norm(&c.gradient(&y)).max(1e-300)
                        }
                    })
                    .fold(0.0, f64::max)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.violation(x) <= MEMBERSHIP_TOL
    }

    /// Signed first-order distance estimate: positive outside, negative inside.
    pub fn signed_margin(&self, x: &[f64]) -> f64 {
        let y = self.local(x);
        match &self.leaf {
            Leaf::Pieces(pieces) if pieces.is_empty() => f64::NEG_INFINITY,
            Leaf::Pieces(pieces) => pieces
                .iter()
                .map(|p| match p {
                    ConvexPiece::HalfSpace { normal, offset } => (crate::linalg::dot(normal, &y) - offset) / norm(normal),
                    ConvexPiece::Ball { center, radius } => dist(&y, center) - radius,
                    ConvexPiece::Box { lo, hi } => (0..y.len())
                        .map(|i| (lo[i] - y[i]).max(y[i] - hi[i]))
                        .fold(f64::NEG_INFINITY, f64::max),
                })
                .fold(f64::NEG_INFINITY, f64::max),
            Leaf::Complement { center, radius } => radius - dist(&y, center),
            Leaf::Sublevel { set, time } => {
                let zero = vec![0.0; y.len()];
                set.at(*time, &zero)
                    .iter()
                    .map(|c| c.value(&y) / norm(&c.gradient(&y)).max(1e-300))
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// Nearest point and distance, without the enlargement check.
    pub fn nearest(&self, x: &[f64]) -> Result<(Point, f64)> {
        let y = self.local(x);
        let p = match &self.leaf {
            Leaf::Pieces(pieces) if pieces.is_empty() => y.clone(),
            Leaf::Pieces(pieces) if pieces.len() == 1 => pieces[0].project(&y),
            Leaf::Pieces(pieces) => {
                let owned: Vec<Constraint> = pieces.iter().flat_map(|p| p.to_constraints()).collect();
                let zero = vec![0.0; y.len()];
                let cons: Vec<LocalConstraint<'_>> = owned
                    .iter()
                    .map(|c| LocalConstraint::new(&c.function, zero.clone()))
                    .collect();
                project_with_seeds(&cons, &y, || self.local_seeds())?.point
            }
            Leaf::Complement { center, radius } => {
                let v = sub(&y, center);
                let r = norm(&v);
                if r >= *radius {
                    y.clone()
                } else if r == 0.0 {
                    return Err(SweepError::OutsideEnlargement {
                        distance: *radius,
                        limit: *radius,
                    });
                } else {
                    add(center, &scale(&v, radius / r))
                }
            }
            Leaf::Sublevel { set, time } => {
                let zero = vec![0.0; y.len()];
                project_with_seeds(&set.at(*time, &zero), &y, || self.local_seeds())?.point
            }
        };
        let d = dist(&y, &p);
        Ok((add(&p, &self.offset), d))
    }

    /// Quasi-random points of the default window in local coordinates, used
    /// as restarts by the nearest-point solver.
    fn local_seeds(&self) -> Vec<Point> {
        let d = self.offset.len();
        let w = self.default_window(d).translated(&scale(&self.offset, -1.0));
        let mut h = crate::rng::Halton::new(d, crate::rng::RngSpec::new(0x5eed, 0));
        (0..256).map(|_| w.map_unit(&h.next_point())).collect()
    }

    /// Unit outward generators of the normal cone at a boundary point.
    pub fn normal_generators(&self, x: &[f64], tol: f64) -> Vec<Point> {
        let y = self.local(x);
        match &self.leaf {
            Leaf::Pieces(pieces) => pieces.iter().flat_map(|p| p.active_normals(&y, tol)).collect(),
            Leaf::Complement { center, radius } => {
                let v = sub(center, &y);
                let r = norm(&v);
                if (r - radius).abs() <= tol && r > 0.0 {
                    vec![scale(&v, 1.0 / r)]
                } else {
                    vec![]
                }
            }
            Leaf::Sublevel { set, time } => {
                let zero = vec![0.0; y.len()];
                set.at(*time, &zero)
                    .iter()
                    .filter_map(|c| {
                        let g = c.gradient(&y);
                        let n = norm(&g);
                        (n > 0.0 && c.value(&y).abs() / n <= tol).then(|| scale(&g, 1.0 / n))
                    })
                    .collect()
            }
        }
    }

    /// Default sampling window in world coordinates.
    pub fn default_window(&self, d: usize) -> Window {
        let base = match &self.leaf {
            Leaf::Pieces(pieces) => {
                let mut bounds: Option<(Point, Point)> = None;
                for p in pieces.iter() {
                    if let Some((lo, hi)) = p.bounds() {
                        bounds = Some(match bounds {
                            None => (lo, hi),
                            Some((a, b)) => (
                                a.iter().zip(&lo).map(|(u, v)| u.max(*v)).collect(),
                                b.iter().zip(&hi).map(|(u, v)| u.min(*v)).collect(),
                            ),
                        });
                    }
                }
                match bounds {
                    Some((lo, hi)) => Window::new(lo, hi).padded(0.25, 0.25),
                    None => Window::centered(&vec![0.0; d], 2.0),
                }
            }
            Leaf::Complement { center, radius } => Window::centered(center, 2.0 * radius),
            Leaf::Sublevel { set, time } => {
                let mut bounds: Option<(Point, Point)> = None;
                for c in &set.constraints {
                    let s = c.shift.at(*time, d);
                    let b = match &c.function {
                        ConstraintFn::Ball { center, radius } => Some((
                            center.iter().zip(&s).map(|(a, b)| a + b - radius).collect::<Point>(),
                            center.iter().zip(&s).map(|(a, b)| a + b + radius).collect::<Point>(),
                        )),
                        ConstraintFn::SmoothedBox { lo, hi, .. } => Some((add(lo, &s), add(hi, &s))),
                        _ => None,
                    };
                    if let Some((lo, hi)) = b {
                        bounds = Some(match bounds {
                            None => (lo, hi),
                            Some((a, bb)) => (
                                a.iter().zip(&lo).map(|(u, v)| u.max(*v)).collect(),
                                bb.iter().zip(&hi).map(|(u, v)| u.min(*v)).collect(),
                            ),
                        });
                    }
                }
                match bounds {
                    Some((lo, hi)) => Window::new(lo, hi).padded(0.25, 0.25),
                    None => Window::centered(&vec![0.0; d], 2.0),
                }
            }
        };
        base.translated(&self.offset)
    }

    pub fn is_full_space(&self) -> bool {
        matches!(self.leaf, Leaf::Pieces(p) if p.is_empty())
    }
}

impl SetFamily {
    /// Builds a family and checks dimensions, parameters and nonemptiness at `t = 0`.
    pub fn new(dimension: usize, prox_radius: ProxRadius, horizon: f64, variant: SetVariant) -> Result<Self> {
        let set = Self {
            dimension,
            prox_radius,
            horizon,
            variant,
            window: None,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn with_window(mut self, window: Window) -> Self {
        self.window = Some(window);
        self
    }

    /// Closed convex set with the given pieces (`rho = inf`).
    pub fn convex(dimension: usize, horizon: f64, pieces: Vec<ConvexPiece>) -> Result<Self> {
        Self::new(
            dimension,
            ProxRadius::INFINITE,
            horizon,
            SetVariant::FixedConvex { pieces },
        )
    }

    /// The whole space `R^d`.
    pub fn full_space(dimension: usize, horizon: f64) -> Result<Self> {
        Self::convex(dimension, horizon, vec![])
    }

    pub fn ball(center: Point, radius: f64, horizon: f64) -> Result<Self> {
        let d = center.len();
        Self::convex(d, horizon, vec![ConvexPiece::Ball { center, radius }])
    }

    pub fn half_space(normal: Point, offset: f64, horizon: f64) -> Result<Self> {
        let d = normal.len();
        Self::convex(d, horizon, vec![ConvexPiece::HalfSpace { normal, offset }])
    }

    pub fn boxed(lo: Point, hi: Point, horizon: f64) -> Result<Self> {
        let d = lo.len();
        Self::convex(d, horizon, vec![ConvexPiece::Box { lo, hi }])
    }

    /// `base(0) + c(t)`, inheriting the prox radius of `base`.
    pub fn translated(base: SetFamily, center: PathSpec) -> Result<Self> {
        Self::new(
            base.dimension,
            base.prox_radius,
            base.horizon,
            SetVariant::TranslatedBase {
                base: Box::new(base.variant),
                center,
            },
        )
    }

    /// Closure of the exterior of a moving ball; `rho = radius`.
    pub fn complement_of_ball(dimension: usize, center: PathSpec, radius: f64, horizon: f64) -> Result<Self> {
        Self::new(
            dimension,
            ProxRadius::finite(radius)?,
            horizon,
            SetVariant::ComplementOfBall { center, radius },
        )
    }

    pub fn sublevel(dimension: usize, prox_radius: ProxRadius, horizon: f64, set: SublevelSet) -> Result<Self> {
        Self::new(dimension, prox_radius, horizon, SetVariant::SublevelIntersection(set))
    }

    /// `C(t) - h(t)`; the prox radius is unchanged by translation.
    pub fn shifted(&self, h: PathSpec) -> Result<Self> {
        let mut out = Self::new(
            self.dimension,
            self.prox_radius,
            self.horizon,
            SetVariant::Shifted {
                inner: Box::new(self.variant.clone()),
                offset: h,
            },
        )?;
        out.window = self.window.clone();
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dimension;
        if d == 0 {
            return Err(SweepError::InvalidInput("dimension must be positive".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(SweepError::InvalidInput("horizon must be positive".into()));
        }
        validate_variant(&self.variant, d)?;
        if let Some(w) = &self.window {
            if w.lo.len() != d || w.hi.len() != d || w.lo.iter().zip(&w.hi).any(|(a, b)| !(b > a)) {
                return Err(SweepError::InvalidInput("window must satisfy lo < hi in every coordinate".into()));
            }
        }
        self.check_nonempty(0.0)
    }

    /// Detects an empty set by projecting the window centre.
    pub fn check_nonempty(&self, t: f64) -> Result<()> {
        let f = self.frozen(t);
        if let Leaf::Pieces(pieces) = &f.leaf {
            for p in pieces.iter() {
                if let ConvexPiece::Box { lo, hi } = p {
                    if lo.iter().zip(hi).any(|(a, b)| a > b) {
                        return Err(SweepError::EmptySet { t });
                    }
                }
            }
        }
        let w = self.window_at(t);
        let c: Point = w.lo.iter().zip(&w.hi).map(|(a, b)| 0.5 * (a + b)).collect();
        match f.nearest(&c) {
            Ok((p, _)) if f.contains(&p) => Ok(()),
            Ok(_) => Err(SweepError::EmptySet { t }),
            Err(SweepError::OutsideEnlargement { .. }) => Ok(()),
            Err(SweepError::NonconvergedProjection { .. }) => Err(SweepError::EmptySet { t }),
            Err(e) => Err(e),
        }
    }

    pub(crate) fn frozen(&self, t: f64) -> Frozen<'_> {
        resolve(&self.variant, t, vec![0.0; self.dimension])
    }

    pub fn window_at(&self, t: f64) -> Window {
        match &self.window {
            Some(w) => w.clone(),
            None => self.frozen(t).default_window(self.dimension),
        }
    }

    pub fn contains(&self, t: f64, x: &[f64]) -> bool {
        self.frozen(t).contains(x)
    }

    /// Cheap infeasibility measure; zero exactly on the set, exact distance for
    /// single convex pieces and complements of balls.
    pub fn violation(&self, t: f64, x: &[f64]) -> f64 {
        self.frozen(t).violation(x)
    }

    /// Signed first-order distance estimate (exact for single convex pieces
    /// away from corners); positive outside the set.
    pub fn signed_margin(&self, t: f64, x: &[f64]) -> f64 {
        self.frozen(t).signed_margin(x)
    }

    /// `d(x; C(t))`.
    pub fn distance(&self, t: f64, x: &[f64]) -> Result<f64> {
        let f = self.frozen(t);
        if f.violation(x) == 0.0 {
            return Ok(0.0);
        }
        match f.nearest(x) {
            Ok((_, d)) => Ok(d),
            // The centre of a complement ball is equidistant to the whole sphere.
            Err(SweepError::OutsideEnlargement { distance, .. }) => Ok(distance),
            Err(SweepError::NonconvergedProjection { .. }) if self.check_nonempty(t).is_err() => {
                Err(SweepError::EmptySet { t })
            }
            Err(e) => Err(e),
        }
    }

    /// Nearest point with its distance, without the enlargement check.
    pub fn nearest_point(&self, t: f64, x: &[f64]) -> Result<(Point, f64)> {
        self.frozen(t).nearest(x)
    }

    /// `proj_{C(t)}(x)`, refused when `d(x; C(t)) >= gamma * rho`.
    pub fn project(&self, t: f64, x: &[f64], gamma: f64) -> Result<Point> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(SweepError::InvalidInput(format!("gamma must lie in (0,1), got {gamma}")));
        }
        let limit = gamma * self.prox_radius.value();
        let f = self.frozen(t);
        // Members are returned bit-for-bit, so inactive steps add no rounding.
        if f.violation(x) == 0.0 {
            return Ok(x.to_vec());
        }
        let (p, d) = f.nearest(x).map_err(|e| match e {
            SweepError::OutsideEnlargement { distance, .. } => SweepError::OutsideEnlargement { distance, limit },
            e => e,
        })?;
        if d >= limit {
            return Err(SweepError::OutsideEnlargement { distance: d, limit });
        }
        Ok(p)
    }

    /// Unit outward generators of the (finitely generated) normal cone at `x`.
    pub fn normal_generators(&self, t: f64, x: &[f64]) -> Vec<Point> {
        self.frozen(t).normal_generators(x, BOUNDARY_TOL)
    }

    /// True when `C(t) = R^d` structurally.
    pub fn is_full_space(&self, t: f64) -> bool {
        self.frozen(t).is_full_space()
    }

    /// True when the set does not move in time.
    pub fn is_static(&self) -> bool {
        fn rec(v: &SetVariant) -> bool {
            match v {
                SetVariant::FixedConvex { .. } => true,
                SetVariant::TranslatedBase { center, .. } => center.is_static(),
                SetVariant::ComplementOfBall { center, .. } => center.is_static(),
                SetVariant::SublevelIntersection(s) => s.constraints.iter().all(|c| c.shift.is_static()),
                SetVariant::Shifted { inner, offset } => offset.is_static() && rec(inner),
            }
        }
        rec(&self.variant)
    }

    pub fn sublevel_set(&self) -> Option<&SublevelSet> {
        match &self.variant {
            SetVariant::SublevelIntersection(s) => Some(s),
            _ => None,
        }
    }
}

fn validate_variant(v: &SetVariant, d: usize) -> Result<()> {
    let dim_err = |what: &str| Err(SweepError::InvalidInput(format!("{what} does not match dimension {d}")));
    match v {
        SetVariant::FixedConvex { pieces } => {
            for p in pieces {
                if p.dimension() != d {
                    return dim_err("convex piece");
                }
                p.validate()?;
            }
            Ok(())
        }
        SetVariant::TranslatedBase { base, center } => {
            center.validate(d)?;
            validate_variant(base, d)
        }
        SetVariant::ComplementOfBall { center, radius } => {
            center.validate(d)?;
            if *radius > 0.0 && radius.is_finite() {
                Ok(())
            } else {
                Err(SweepError::InvalidInput("complement radius must be positive".into()))
            }
        }
        SetVariant::SublevelIntersection(s) => {
            if s.constraints.is_empty() {
                return Err(SweepError::InvalidInput("sublevel set needs at least one constraint".into()));
            }
            if s.constraints.len() > 16 {
                return Err(SweepError::InvalidInput("at most 16 constraints are supported".into()));
            }
            for c in &s.constraints {
                if c.function.dimension() != d {
                    return dim_err("constraint");
                }
                c.function.validate()?;
                c.shift.validate(d)?;
            }
            if !(s.epsilon > 0.0 && s.eta > 0.0) {
                return Err(SweepError::InvalidInput("epsilon and eta must be positive".into()));
            }
            Ok(())
        }
        SetVariant::Shifted { inner, offset } => {
            offset.validate(d)?;
            validate_variant(inner, d)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_examples() {
        let b = SetFamily::ball(vec![0.0, 0.0], 1.0, 1.0).unwrap();
        assert_eq!(b.distance(0.0, &[2.0, 0.0]).unwrap(), 1.0);
        assert_eq!(b.distance(0.0, &[0.5, 0.0]).unwrap(), 0.0);
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
        assert!((s.distance(0.0, &[0.0, 3.0]).unwrap() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn project_examples() {
        let b = SetFamily::ball(vec![0.0, 0.0], 1.0, 1.0).unwrap();
        assert_eq!(b.project(0.0, &[2.0, 0.0], 0.99).unwrap(), vec![1.0, 0.0]);
        let c = SetFamily::complement_of_ball(2, PathSpec::Zero, 1.0, 1.0).unwrap();
        assert_eq!(c.project(0.0, &[0.5, 0.0], 0.6).unwrap(), vec![1.0, 0.0]);
        assert!(matches!(
            c.project(0.0, &[0.3, 0.0], 0.6),
            Err(SweepError::OutsideEnlargement { .. })
        ));
        assert_eq!(c.project(0.0, &[3.0, 1.0], 0.5).unwrap(), vec![3.0, 1.0]);
    }

    #[test]
    fn shifted_projection_is_translation() {
        let b = SetFamily::ball(vec![0.0, 0.0], 1.0, 1.0).unwrap();
        let h = PathSpec::Constant { value: vec![0.5, -0.25] };
        let s = b.shifted(h.clone()).unwrap();
        assert_eq!(s.prox_radius, b.prox_radius);
        let x = [3.0, 2.0];
        let p = s.project(0.3, &x, 0.5).unwrap();
        let q = b.project(0.3, &add(&x, &[0.5, -0.25]), 0.5).unwrap();
        assert!(dist(&p, &sub(&q, &[0.5, -0.25])) < 1e-15);
    }

    #[test]
    fn rejects_empty_box_and_bad_dimensions() {
        assert!(SetFamily::boxed(vec![1.0], vec![0.0], 1.0).is_err());
        assert!(SetFamily::new(
            2,
            ProxRadius::INFINITE,
            1.0,
            SetVariant::FixedConvex {
                pieces: vec![ConvexPiece::Ball { center: vec![0.0], radius: 1.0 }]
            }
        )
        .is_err());
        let disjoint = SetFamily::convex(
            1,
            1.0,
            vec![
                ConvexPiece::Box { lo: vec![0.0], hi: vec![1.0] },
                ConvexPiece::Box { lo: vec![2.0], hi: vec![3.0] },
            ],
        );
        assert!(matches!(disjoint, Err(SweepError::EmptySet { .. })));
    }

    #[test]
    fn prox_radius_serde() {
        let r: ProxRadius = serde_json::from_str("\"inf\"").unwrap();
        assert!(r.is_infinite());
        assert_eq!(r.inv(), 0.0);
        let r: ProxRadius = serde_json::from_str("2.5").unwrap();
        assert_eq!(r.value(), 2.5);
        assert!(serde_json::from_str::<ProxRadius>("-1").is_err());
        assert_eq!(serde_json::to_string(&ProxRadius::INFINITE).unwrap(), "\"inf\"");
    }
}
