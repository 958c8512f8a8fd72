//! Excess, Hausdorff distance, modulus of continuity and ball persistence.

use serde::{Deserialize, Serialize};

use super::{ConvexPiece, Frozen, Leaf, SetFamily, MEMBERSHIP_TOL};
use crate::error::{Result, SweepError};
use crate::linalg::{add, axpy, dist, dot, norm, scale, Point};
use crate::rng::{Halton, RngSpec};

/// `sup_{a in A} d(a; C(t))` over a finite sample, a lower bound of the true excess.
pub fn excess(points: &[Point], set: &SetFamily, t: f64) -> Result<f64> {
    if points.is_empty() {
        return Err(SweepError::EmptySample);
    }
    let mut worst: f64 = 0.0;
    for p in points {
        worst = worst.max(set.distance(t, p)?);
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HausdorffEstimate {
    pub value: f64,
    /// Zero for the closed-form branch; otherwise the largest distance from a
    /// probe point of either set to the nearest sample of that set.
    pub sampling_gap: f64,
    pub exact: bool,
}

/// `d_H(C_a(t), C_b(s))`: closed form for translated copies of the same leaf,
/// pairs of balls and pairs of boxes; sampled otherwise.
pub fn hausdorff_distance(
    a: &SetFamily,
    t: f64,
    b: &SetFamily,
    s: f64,
    n: usize,
    rng: RngSpec,
) -> Result<HausdorffEstimate> {
    a.check_nonempty(t)?;
    b.check_nonempty(s)?;
    let fa = a.frozen(t);
    let fb = b.frozen(s);
    if let Some(v) = closed_form(&fa, &fb) {
        return Ok(HausdorffEstimate {
            value: v,
            sampling_gap: 0.0,
            exact: true,
        });
    }
    let n = n.max(8);
    let sa = sample_set(a, t, n, rng.derive(30));
    let sb = sample_set(b, s, n, rng.derive(31));
    if sa.is_empty() || sb.is_empty() {
        return Err(SweepError::EmptySample);
    }
    let value = excess(&sa, b, s)?.max(excess(&sb, a, t)?);
    let gap = dispersion(a, t, &sa, rng.derive(32)).max(dispersion(b, s, &sb, rng.derive(33)));
    Ok(HausdorffEstimate {
        value,
        sampling_gap: gap,
        exact: false,
    })
}

fn sample_set(set: &SetFamily, t: f64, n: usize, rng: RngSpec) -> Vec<Point> {
    let mut pts: Vec<Point> = set.sample_boundary(t, n / 2, rng.derive(1)).into_iter().map(|b| b.point).collect();
    pts.extend(set.sample_members(t, n - n / 2, rng.derive(2)));
    pts
}

fn dispersion(set: &SetFamily, t: f64, sample: &[Point], rng: RngSpec) -> f64 {
    let probes = set.sample_members(t, 128, rng);
    probes
        .iter()
        .map(|p| sample.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

fn closed_form(a: &Frozen<'_>, b: &Frozen<'_>) -> Option<f64> {
    let shift = crate::linalg::sub(&b.offset, &a.offset);
    match (&a.leaf, &b.leaf) {
        (Leaf::Pieces(pa), Leaf::Pieces(pb)) if pa.is_empty() && pb.is_empty() => Some(0.0),
        (Leaf::Pieces([pa]), Leaf::Pieces([pb])) => match (pa, pb) {
            (ConvexPiece::Ball { center: c1, radius: r1 }, ConvexPiece::Ball { center: c2, radius: r2 }) => {
                Some(dist(&add(c1, &a.offset), &add(c2, &b.offset)) + (r1 - r2).abs())
            }
            (ConvexPiece::Box { lo: l1, hi: h1 }, ConvexPiece::Box { lo: l2, hi: h2 }) => {
                let (l1, h1) = (add(l1, &a.offset), add(h1, &a.offset));
                let (l2, h2) = (add(l2, &b.offset), add(h2, &b.offset));
                Some(box_excess(&l1, &h1, &l2, &h2).max(box_excess(&l2, &h2, &l1, &h1)))
            }
            (
                ConvexPiece::HalfSpace { normal: n1, offset: o1 },
                ConvexPiece::HalfSpace { normal: n2, offset: o2 },
            ) => {
                let (u1, u2) = (scale(n1, 1.0 / norm(n1)), scale(n2, 1.0 / norm(n2)));
                if dist(&u1, &u2) > 1e-14 {
                    return Some(f64::INFINITY);
                }
                let b1 = o1 / norm(n1) + dot(&u1, &a.offset);
                let b2 = o2 / norm(n2) + dot(&u2, &b.offset);
                Some((b1 - b2).abs())
            }
            _ => None,
        },
        (Leaf::Complement { center: c1, radius: r1 }, Leaf::Complement { center: c2, radius: r2 })
            if r1 == r2 =>
        {
            let disp = dist(&add(c1, &a.offset), &add(c2, &b.offset));
            Some(disp.min(*r1))
        }
        (Leaf::Pieces(pa), Leaf::Pieces(pb)) if pa == pb => translation_distance(pa, &shift),
        (Leaf::Sublevel { set: sa, time: ta }, Leaf::Sublevel { set: sb, time: tb })
            if std::ptr::eq(*sa, *sb) && ta == tb && bounded_sublevel(sa) =>
        {
            Some(norm(&shift))
        }
        _ => None,
    }
}

/// `d_H(S, S + v)` for a fixed intersection of pieces.
fn translation_distance(pieces: &[ConvexPiece], v: &[f64]) -> Option<f64> {
    if norm(v) == 0.0 {
        return Some(0.0);
    }
    // Compact convex sets: support functions differ by <u, v>.
    if pieces.iter().any(|p| p.bounds().is_some()) {
        Some(norm(v))
    } else {
        None
    }
}

fn bounded_sublevel(s: &super::SublevelSet) -> bool {
    s.constraints
        .iter()
        .any(|c| matches!(c.function, super::ConstraintFn::Ball { .. } | super::ConstraintFn::SmoothedBox { .. }))
        && s.constraints.iter().all(|c| c.shift.is_static())
}

/// Excess of box `[l1,h1]` over box `[l2,h2]`: the worst vertex distance.
fn box_excess(l1: &[f64], h1: &[f64], l2: &[f64], h2: &[f64]) -> f64 {
    // Per coordinate the worst vertex choice is independent.
    let mut s = 0.0;
    for i in 0..l1.len() {
        let dl = (l2[i] - l1[i]).max(l1[i] - h2[i]).max(0.0);
        let dh = (l2[i] - h1[i]).max(h1[i] - h2[i]).max(0.0);
        let m = dl.max(dh);
        s += m * m;
    }
    s.sqrt()
}

/// Tabulated modulus `r -> P_C(r)` with a nondecreasing envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityModulus {
    /// Increasing lags, starting at 0.
    pub lags: Vec<f64>,
    /// Raw sampled suprema at each lag.
    pub raw: Vec<f64>,
    /// Running maximum of `raw`.
    pub envelope: Vec<f64>,
    pub horizon: f64,
    pub exact_pairs: bool,
    pub sampling_gap: f64,
}

impl ContinuityModulus {
    pub fn from_table(lags: Vec<f64>, raw: Vec<f64>, horizon: f64, exact_pairs: bool, sampling_gap: f64) -> Self {
        let mut envelope = Vec::with_capacity(raw.len());
        let mut m: f64 = 0.0;
        for (i, v) in raw.iter().enumerate() {
            m = if i == 0 { 0.0 } else { m.max(*v) };
            envelope.push(m);
        }
        Self {
            lags,
            raw,
            envelope,
            horizon,
            exact_pairs,
            sampling_gap,
        }
    }

    /// The zero modulus of a constant set.
    pub fn zero(horizon: f64) -> Self {
        Self::from_table(vec![0.0, horizon], vec![0.0, 0.0], horizon, true, 0.0)
    }

    /// Piecewise-linear interpolation of the envelope; constant past the last lag.
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let last = self.lags.len() - 1;
        if r >= self.lags[last] {
            return self.envelope[last];
        }
        let k = self.lags.partition_point(|&l| l <= r) - 1;
        let s = (r - self.lags[k]) / (self.lags[k + 1] - self.lags[k]);
        self.envelope[k] + s * (self.envelope[k + 1] - self.envelope[k])
    }

    /// Generalized inverse `inf{r >= 0 : P(r) >= x}`; `+inf` when never reached.
    pub fn inverse(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        for k in 1..self.lags.len() {
            let (e0, e1) = (self.envelope[k - 1], self.envelope[k]);
            if e1 >= x {
                if e1 == e0 {
                    return self.lags[k - 1];
                }
                let s = (x - e0) / (e1 - e0);
                return self.lags[k - 1] + s * (self.lags[k] - self.lags[k - 1]);
            }
        }
        f64::INFINITY
    }
}

/// Tabulates `P_C(r) = sup{d_H(C(t), C(s)) : |t - s| <= r}` on a uniform time
/// grid with `n_time + 1` nodes. Pairs of translated copies use the exact
/// displacement; other pairs use sampled Hausdorff estimates.
pub fn modulus_of_continuity(set: &SetFamily, n_time: usize, n_space: usize) -> Result<ContinuityModulus> {
    let n = n_time.max(1);
    let big_t = set.horizon;
    let times: Vec<f64> = (0..=n).map(|k| big_t * k as f64 / n as f64).collect();
    let lags = times.clone();
    if set.is_static() {
        return Ok(ContinuityModulus::from_table(lags, vec![0.0; n + 1], big_t, true, 0.0));
    }
    let frozen: Vec<Frozen<'_>> = times.iter().map(|&t| set.frozen(t)).collect();
    let mut raw = vec![0.0; n + 1];
    let mut exact = true;
    let mut gap: f64 = 0.0;
    for lag in 1..=n {
        let mut m: f64 = 0.0;
        for k in 0..=(n - lag) {
            let v = match closed_form(&frozen[k], &frozen[k + lag]) {
                Some(v) => v,
                None => {
                    exact = false;
                    let est = hausdorff_distance(
                        set,
                        times[k],
                        set,
                        times[k + lag],
                        n_space,
                        RngSpec::new(0x6d6f64, (k * (n + 1) + lag) as u64),
                    )?;
                    gap = gap.max(est.sampling_gap);
                    est.value
                }
            };
            m = m.max(v);
        }
        raw[lag] = m;
    }
    Ok(ContinuityModulus::from_table(lags, raw, big_t, exact, gap))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallPersistence {
    /// Time half-width, clamped to the horizon.
    pub delta: f64,
    /// `min{r/2, rho/2}`.
    pub level: f64,
    /// Inclusion of `B_{r/2}(x)` held at every spot-checked time.
    pub spot_check_passed: bool,
    pub spot_checked_times: usize,
}

/// `delta = P^{-1}(min{r/2, rho/2})`, after checking `B_r(x) ⊂ C(t)` by sampling.
pub fn ball_persistence(
    set: &SetFamily,
    t_bar: f64,
    x_bar: &[f64],
    r: f64,
    modulus: &ContinuityModulus,
) -> Result<BallPersistence> {
    let d = set.dimension;
    let rng = RngSpec::new(0x6261_6c6c, 0);
    let ball = ball_sample(x_bar, r, d, 512, rng);
    let mut worst: f64 = 0.0;
    for p in &ball {
        worst = worst.max(set.violation(t_bar, p));
    }
    if worst > MEMBERSHIP_TOL {
        return Err(SweepError::BallNotContained { radius: r, violation: worst });
    }
    let level = (0.5 * r).min(0.5 * set.prox_radius.value());
    let delta = modulus.inverse(level).min(set.horizon);
    let half = ball_sample(x_bar, 0.5 * r, d, 128, rng.derive(1));
    let mut checked = 0;
    let mut ok = true;
    for j in 0..=16 {
        let tj = t_bar - delta + 2.0 * delta * j as f64 / 16.0;
        if tj <= t_bar - delta || tj >= t_bar + delta || tj < 0.0 || tj > set.horizon {
            continue;
        }
        checked += 1;
        ok &= half.iter().all(|p| set.violation(tj, p) <= MEMBERSHIP_TOL);
    }
    Ok(BallPersistence {
        delta,
        level,
        spot_check_passed: ok,
        spot_checked_times: checked,
    })
}

/// Sphere points plus quasi-random interior points of `B_r(x)`.
fn ball_sample(x: &[f64], r: f64, d: usize, n: usize, rng: RngSpec) -> Vec<Point> {
    let mut s = rng.rng();
    let mut out: Vec<Point> = (0..n / 2).map(|_| axpy(x, r, &s.unit_vector(d))).collect();
    let mut h = Halton::new(d, rng.derive(1));
    while out.len() < n {
        let u: Point = h.next_point().iter().map(|v| 2.0 * v - 1.0).collect();
        if norm(&u) <= 1.0 {
            out.push(axpy(x, r, &u));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::PathSpec;

    #[test]
    fn excess_examples() {
        let b = SetFamily::ball(vec![0.0, 0.0], 1.0, 1.0).unwrap();
        assert_eq!(excess(&[vec![0.0, 0.0]], &b, 0.0).unwrap(), 0.0);
        assert_eq!(excess(&[vec![2.0, 0.0]], &b, 0.0).unwrap(), 1.0);
        assert!(matches!(excess(&[], &b, 0.0), Err(SweepError::EmptySample)));
    }

    #[test]
    fn hausdorff_closed_forms() {
        let a = SetFamily::ball(vec![0.0, 0.0], 1.0, 1.0).unwrap();
        let b = SetFamily::ball(vec![0.3, 0.4], 1.0, 1.0).unwrap();
        let h = hausdorff_distance(&a, 0.0, &b, 0.0, 10, RngSpec::new(0, 0)).unwrap();
        assert!(h.exact && (h.value - 0.5).abs() < 1e-15);
        let i = SetFamily::boxed(vec![0.0], vec![1.0], 1.0).unwrap();
        let j = SetFamily::boxed(vec![0.0], vec![2.0], 1.0).unwrap();
        assert_eq!(hausdorff_distance(&i, 0.0, &j, 0.0, 10, RngSpec::new(0, 0)).unwrap().value, 1.0);
    }

    #[test]
    fn modulus_of_translated_ball_is_identity() {
        let base = SetFamily::ball(vec![0.0, 0.0], 1.0, 2.0).unwrap();
        let set = SetFamily::translated(
            base,
            PathSpec::Linear {
                origin: vec![0.0, 0.0],
                velocity: vec![1.0, 0.0],
            },
        )
        .unwrap();
        let m = modulus_of_continuity(&set, 40, 0).unwrap();
        assert!(m.exact_pairs);
        for r in [0.05, 0.3, 1.0, 1.7] {
            assert!((m.eval(r) - r).abs() < 1e-12);
            assert!((m.inverse(r) - r).abs() < 1e-12);
        }
        let bp = ball_persistence(&set, 0.5, &[0.5, 0.0], 0.5, &m).unwrap();
        assert!((bp.delta - 0.25).abs() < 1e-12);
        assert!(bp.spot_check_passed);
    }

    #[test]
    fn constant_set_has_zero_modulus() {
        let set = SetFamily::ball(vec![0.0], 1.0, 3.0).unwrap();
        let m = modulus_of_continuity(&set, 10, 10).unwrap();
        assert_eq!(m.eval(1.0), 0.0);
        assert_eq!(m.inverse(0.1), f64::INFINITY);
        let bp = ball_persistence(&set, 0.0, &[0.0], 0.5, &m).unwrap();
        assert_eq!(bp.delta, 3.0);
        assert!(matches!(
            ball_persistence(&set, 0.0, &[0.8], 0.5, &m),
            Err(SweepError::BallNotContained { .. })
        ));
    }
}
