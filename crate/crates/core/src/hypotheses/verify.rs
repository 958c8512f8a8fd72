//! Sampled checks of H4 and H5 at boundary points, and grid searches over
//! candidate constants.

use serde::{Deserialize, Serialize};

use super::{DirectionMap, H4Constants, H5Constants};
use crate::error::{Result, SweepError};
use crate::geometry::{ConvexPiece, ProbeReport, SetFamily, SetVariant};
use crate::linalg::{add, axpy, dist, dot, lerp, norm, normalized, scale, sub, Point};
use crate::rng::{inverse_normal_cdf, Halton, RngSpec};

/// Violations of set membership up to this size are ignored.
pub const INCLUSION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H4Witness {
    pub point: Point,
    pub lambda: f64,
    pub z_prime: Point,
    pub violation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H4Check {
    pub pass: bool,
    pub z: Point,
    /// `|z - x| <= L r`.
    pub distance_ok: bool,
    pub worst_violation: f64,
    pub witness: Option<H4Witness>,
    pub n_evaluated: usize,
}

struct HullSampler<'a> {
    x: &'a [f64],
    z: &'a [f64],
    radius: f64,
}

impl HullSampler<'_> {
    /// `lambda x + (1 - lambda)(z + radius w)` with `|w| <= 1`.
    fn point(&self, lambda: f64, w: &[f64]) -> (Point, Point) {
        let zp = axpy(self.z, self.radius, w);
        (lerp(&zp, self.x, lambda), zp)
    }
}

fn unit_from_cube(u: &[f64]) -> Point {
    let g: Point = u.iter().map(|&v| inverse_normal_cdf(v.clamp(1e-12, 1.0 - 1e-12))).collect();
    normalized(&g).unwrap_or_else(|| {
        let mut e = vec![0.0; u.len()];
        e[0] = 1.0;
        e
    })
}

/// Samples `co({x} ∪ B_{2r}(z))` and checks membership in `C(t)`.
///
/// Three quarters of the ball points lie on the sphere, where the hull
/// boundary is generated. The worst samples are then refined by a local
/// random search that maximizes the signed margin.
pub fn verify_h4_at(
    set: &SetFamily,
    t: f64,
    x: &[f64],
    constants: &H4Constants,
    n_samples: usize,
    rng: RngSpec,
) -> Result<H4Check> {
    verify_h4_inner(set, t, x, constants, n_samples, rng, false)
}

fn verify_h4_inner(
    set: &SetFamily,
    t: f64,
    x: &[f64],
    constants: &H4Constants,
    n_samples: usize,
    rng: RngSpec,
    stop_early: bool,
) -> Result<H4Check> {
    let d = set.dimension;
    let z = constants.direction.witness(set, t, x)?;
    let distance_ok = dist(&z, x) <= constants.l * constants.r * (1.0 + 1e-12);
    let hull = HullSampler {
        x,
        z: &z,
        radius: 2.0 * constants.r,
    };
    let mut h = Halton::new(d + 2, rng);
    let mut evaluated: Vec<(f64, f64, Point)> = Vec::with_capacity(n_samples);
    let mut worst = (0.0f64, None::<H4Witness>);
    let record = |lambda: f64, w: &[f64], worst: &mut (f64, Option<H4Witness>)| -> f64 {
        let (p, zp) = hull.point(lambda, w);
        let v = set.violation(t, &p);
        if v > worst.0 {
            *worst = (
                v,
                Some(H4Witness {
                    point: p.clone(),
                    lambda,
                    z_prime: zp,
                    violation: v,
                }),
            );
        }
        set.signed_margin(t, &p)
    };
    for k in 0..n_samples {
        let u = h.next_point();
        let lambda = u[0];
        let dir = unit_from_cube(&u[2..]);
        let rad = if k % 4 == 3 { u[1].powf(1.0 / d as f64) } else { 1.0 };
        let w = scale(&dir, rad);
        let m = record(lambda, &w, &mut worst);
        evaluated.push((m, lambda, w));
        if stop_early && worst.0 > INCLUSION_TOL {
            break;
        }
    }
    let mut n_eval = evaluated.len();
    if !(stop_early && worst.0 > INCLUSION_TOL) {
        evaluated.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut s = rng.derive(7).rng();
        for (m0, l0, w0) in evaluated.into_iter().take(8) {
            let (mut best_m, mut lam, mut w) = (m0, l0, w0);
            for step in [0.1, 0.03, 0.01, 0.001] {
                for _ in 0..12 {
                    let nl = (lam + step * (2.0 * s.uniform() - 1.0)).clamp(0.0, 1.0);
                    let mut nw = axpy(&w, step, &s.unit_vector(d));
                    let nn = norm(&nw);
                    if nn > 1.0 {
                        nw = scale(&nw, 1.0 / nn);
                    }
                    let m = record(nl, &nw, &mut worst);
                    n_eval += 1;
                    if m > best_m {
                        best_m = m;
                        lam = nl;
                        w = nw;
                    }
                }
            }
        }
    }
    let pass = distance_ok && worst.0 <= INCLUSION_TOL;
    Ok(H4Check {
        pass,
        z,
        distance_ok,
        worst_violation: worst.0,
        witness: if pass { None } else { worst.1 },
        n_evaluated: n_eval,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H5Witness {
    pub y: Point,
    pub normal: Point,
    pub inner_product: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct H5Check {
    pub pass: bool,
    /// Largest `<n, ell>` over sampled unit normals.
    pub worst_inner_product: f64,
    pub bound: f64,
    pub witness: Option<H5Witness>,
    pub n_normals: usize,
}

/// Unit proximal normals at boundary points of `C(t)` within `delta` of `x`.
///
/// At each point every active unit generator is listed; a unit vector of the
/// finitely generated cone has a support value no larger than the worst
/// generator whenever that value is negative.
pub(crate) fn normals_near(
    set: &SetFamily,
    t: f64,
    x: &[f64],
    delta: f64,
    n_samples: usize,
    rng: RngSpec,
) -> Result<Vec<(Point, Point)>> {
    let d = set.dimension;
    let gens_x = set.normal_generators(t, x);
    if gens_x.is_empty() {
        return Err(SweepError::NormalProbeFailed);
    }
    let mut out: Vec<(Point, Point)> = gens_x.into_iter().map(|g| (x.to_vec(), g)).collect();
    for c in set.corner_candidates(t, rng.derive(1)) {
        if dist(&c.point, x) < delta {
            for g in set.normal_generators(t, &c.point) {
                out.push((c.point.clone(), g));
            }
        }
    }
    let mut h = Halton::new(d + 1, rng.derive(2));
    for _ in 0..n_samples {
        let u = h.next_point();
        let dir = unit_from_cube(&u[1..]);
        let p0 = axpy(x, 1.5 * delta * u[0].powf(1.0 / d as f64), &dir);
        if set.violation(t, &p0) == 0.0 {
            continue;
        }
        let Ok((p, dd)) = set.nearest_point(t, &p0) else { continue };
        if dist(&p, x) >= delta || dd == 0.0 {
            continue;
        }
        out.push((p.clone(), scale(&sub(&p0, &p), 1.0 / dd)));
        for g in set.normal_generators(t, &p) {
            out.push((p.clone(), g));
        }
    }
    Ok(out)
}

/// Checks `<n, ell> <= -1/L` for unit normals at boundary points near `x`.
pub fn verify_h5_at(
    set: &SetFamily,
    t: f64,
    x: &[f64],
    constants: &H5Constants,
    n_samples: usize,
    rng: RngSpec,
) -> Result<H5Check> {
    let ell = normalized(&constants.direction).ok_or_else(|| SweepError::InvalidInput("zero direction".into()))?;
    let normals = normals_near(set, t, x, constants.delta, n_samples, rng)?;
    Ok(h5_from_normals(&normals, &ell, constants.l))
}

fn h5_from_normals(normals: &[(Point, Point)], ell: &[f64], l: f64) -> H5Check {
    let bound = -1.0 / l;
    let (mut worst, mut arg) = (f64::NEG_INFINITY, 0);
    for (i, (_, n)) in normals.iter().enumerate() {
        let ip = dot(n, ell);
        if ip > worst {
            worst = ip;
            arg = i;
        }
    }
    let pass = worst <= bound + INCLUSION_TOL;
    H5Check {
        pass,
        worst_inner_product: worst,
        bound,
        witness: (!pass).then(|| H5Witness {
            y: normals[arg].0.clone(),
            normal: normals[arg].1.clone(),
            inner_product: worst,
        }),
        n_normals: normals.len(),
    }
}

/// Unit directions for grid searches: axes, their negatives, and quasi-random
/// (or, in the plane, equally spaced) directions.
fn search_directions(set: &SetFamily, t: f64, x: &[f64], n_dirs: usize, rng: RngSpec) -> Vec<Point> {
    let d = set.dimension;
    let mut out = Vec::new();
    let sum = set
        .normal_generators(t, x)
        .iter()
        .fold(vec![0.0; d], |a, g| add(&a, g));
    if let Some(n) = normalized(&sum) {
        out.push(scale(&n, -1.0));
    }
    if d == 2 {
        out.extend((0..n_dirs.max(4))
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n_dirs.max(4) as f64;
                vec![a.cos(), a.sin()]
            }));
        return out;
    }
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[i] = s;
            out.push(e);
        }
    }
    let mut h = Halton::new(d, rng);
    while out.len() < n_dirs + 1 {
        out.push(unit_from_cube(&h.next_point()));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchReport {
    pub candidates_tried: usize,
    pub candidates_passed: usize,
    /// The passing candidate `(param, L, direction)`, if any.
    pub first_pass: Option<(f64, f64, Point)>,
    /// A violation witness from the last failing candidate.
    pub sample_witness: Option<Point>,
}

impl GridSearchReport {
    pub fn all_fail(&self) -> bool {
        self.candidates_passed == 0
    }
}

/// Tries H4 at `x` for every `(r, L)` on the grid and every direction of the
/// centre `z = x + s L r u` with `s in {1/2, 1}`, stopping at the first pass.
/// The inward normal at `x` is tried first.
pub fn h4_grid_search(
    set: &SetFamily,
    t: f64,
    x: &[f64],
    rs: &[f64],
    ls: &[f64],
    n_dirs: usize,
    n_samples: usize,
    rng: RngSpec,
) -> Result<GridSearchReport> {
    let dirs = search_directions(set, t, x, n_dirs, rng.derive(9));
    let mut rep = GridSearchReport {
        candidates_tried: 0,
        candidates_passed: 0,
        first_pass: None,
        sample_witness: None,
    };
    for &r in rs {
        for &l in ls {
            for u in &dirs {
                for frac in [0.5, 1.0] {
                    rep.candidates_tried += 1;
                    let c = H4Constants {
                        r,
                        l,
                        direction: DirectionMap::Direction {
                            direction: u.clone(),
                            distance: frac * l * r,
                        },
                    };
                    let chk = verify_h4_inner(set, t, x, &c, n_samples, rng, true)?;
                    if chk.pass {
                        rep.candidates_passed += 1;
                        rep.first_pass = Some((r, l, u.clone()));
                        return Ok(rep);
                    } else if let Some(w) = chk.witness {
                        rep.sample_witness = Some(w.point);
                    }
                }
            }
        }
    }
    Ok(rep)
}

/// Tries H5 at `x` for every `(delta, L, ell)` on the grid, stopping at the
/// first pass.
pub fn h5_grid_search(
    set: &SetFamily,
    t: f64,
    x: &[f64],
    deltas: &[f64],
    ls: &[f64],
    n_dirs: usize,
    n_samples: usize,
    rng: RngSpec,
) -> Result<GridSearchReport> {
    let dirs = search_directions(set, t, x, n_dirs, rng.derive(9));
    let mut rep = GridSearchReport {
        candidates_tried: 0,
        candidates_passed: 0,
        first_pass: None,
        sample_witness: None,
    };
    for &delta in deltas {
        let normals = normals_near(set, t, x, delta, n_samples, rng)?;
        for &l in ls {
            for u in &dirs {
                rep.candidates_tried += 1;
                let chk = h5_from_normals(&normals, u, l);
                if chk.pass {
                    rep.candidates_passed += 1;
                    rep.first_pass = Some((delta, l, u.clone()));
                    return Ok(rep);
                } else if let Some(w) = chk.witness {
                    rep.sample_witness = Some(w.normal);
                }
            }
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplementCheck {
    pub pass: bool,
    pub beta: f64,
    /// Worst probe over the sampled times.
    pub probe: ProbeReport,
    pub worst_time: f64,
    /// `r = beta/8`, `L = 4`, `z = x + (beta/2) v` when the probe passes.
    pub h4: Option<H4Constants>,
}

/// Probes `cl(R^d \ C(t))` for `beta`-prox-regularity at five sampled times.
pub fn check_complement_prox_regular(
    set: &SetFamily,
    beta: f64,
    n_samples: usize,
    rng: RngSpec,
) -> Result<ComplementCheck> {
    let mut worst: Option<(f64, ProbeReport)> = None;
    for k in 0..5 {
        let t = set.horizon * k as f64 / 4.0;
        let rep = crate::geometry::complement_probe(set, t, beta, n_samples, rng.derive(k))?;
        if worst.as_ref().is_none_or(|w| rep.worst_margin > w.1.worst_margin) {
            worst = Some((t, rep));
        }
        if set.is_static() {
            break;
        }
    }
    let (worst_time, probe) = worst.expect("at least one time");
    let pass = probe.pass;
    Ok(ComplementCheck {
        pass,
        beta,
        probe,
        worst_time,
        h4: pass.then_some(H4Constants {
            r: beta / 8.0,
            l: 4.0,
            direction: DirectionMap::InwardNormal { distance: beta / 2.0 },
        }),
    })
}

/// H4 constants for a bounded convex set from an interior ball: the centre
/// `c` of the largest sampled inscribed ball of radius `R`, `r = R/2`, and
/// `L` = bounding-box diameter over `r`.
pub fn interior_ball_h4(set: &SetFamily, t: f64, n: usize, rng: RngSpec) -> Option<H4Constants> {
    let SetVariant::FixedConvex { pieces } = &set.variant else {
        return None;
    };
    let bounded = pieces.iter().filter_map(ConvexPiece::bounds).next()?;
    let mut best: Option<(f64, Point)> = None;
    for p in set.sample_members(t, n, rng) {
        let m = -set.signed_margin(t, &p);
        if best.as_ref().is_none_or(|b| m > b.0) {
            best = Some((m, p));
        }
    }
    let (mut rad, mut c) = best?;
    // Coordinate polishing of the centre.
    let mut step = 0.1 * dist(&bounded.0, &bounded.1);
    while step > 1e-9 {
        let mut improved = false;
        for i in 0..set.dimension {
            for s in [1.0, -1.0] {
                let mut q = c.clone();
                q[i] += s * step;
                let m = -set.signed_margin(t, &q);
                if m > rad {
                    rad = m;
                    c = q;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    if rad <= 0.0 {
        return None;
    }
    let r = 0.5 * rad;
    let diam = dist(&bounded.0, &bounded.1);
    Some(H4Constants {
        r,
        l: diam / r,
        direction: DirectionMap::Fixed { point: c },
    })
}
