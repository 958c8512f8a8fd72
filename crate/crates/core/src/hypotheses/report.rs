//! Combined assessment of H1-H5 and the gradient condition for a set family.

use serde::{Deserialize, Serialize};

use super::verify::{h4_grid_search, h5_grid_search, interior_ball_h4, verify_h4_at, check_complement_prox_regular};
use super::{
    gradient_bound, h4_constants_sublevel, kappa_estimate, sample_times, GradientBound, H4Constants, H4Synthesis,
    KappaReport, Verdict,
};
use crate::error::{Result, SweepError};
use crate::geometry::{modulus_of_continuity, prox_regularity_probe, SetFamily, SetVariant};
use crate::linalg::{dist, Point};
use crate::rng::RngSpec;

fn default_n_time() -> usize {
    5
}
fn default_n_space() -> usize {
    200
}
fn default_n_boundary() -> usize {
    24
}
fn default_n_hull() -> usize {
    300
}
fn default_r_grid() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.02, 0.01, 0.005]
}
fn default_l_grid() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0]
}
fn default_delta_grid() -> Vec<f64> {
    vec![0.2, 0.1, 0.05, 0.02, 0.01]
}
fn default_n_dirs() -> usize {
    16
}

/// Sampling budgets and candidate grids for [`assess`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssessOptions {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_n_time")]
    pub n_time: usize,
    #[serde(default = "default_n_space")]
    pub n_space: usize,
    /// Boundary check points per sampled time (corner candidates are added).
    #[serde(default = "default_n_boundary")]
    pub n_boundary: usize,
    /// Hull samples per H4 verification.
    #[serde(default = "default_n_hull")]
    pub n_hull: usize,
    /// Prox-regularity radius of the complement, enabling that H4 route.
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default = "default_r_grid")]
    pub r_grid: Vec<f64>,
    #[serde(default = "default_l_grid")]
    pub l_grid: Vec<f64>,
    #[serde(default = "default_delta_grid")]
    pub delta_grid: Vec<f64>,
    #[serde(default = "default_n_dirs")]
    pub n_dirs: usize,
}

impl Default for AssessOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            n_time: default_n_time(),
            n_space: default_n_space(),
            n_boundary: default_n_boundary(),
            n_hull: default_n_hull(),
            beta: None,
            r_grid: default_r_grid(),
            l_grid: default_l_grid(),
            delta_grid: default_delta_grid(),
            n_dirs: default_n_dirs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t: f64,
    pub point: Point,
    pub detail: String,
    /// Size of the violation in the units of the failed check.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisVerdict {
    /// One of `H1`..`H5` or `gradient`.
    pub hypothesis: String,
    pub verdict: Verdict,
    pub note: String,
    pub witness: Option<Witness>,
}

impl HypothesisVerdict {
    fn new(h: &str, verdict: Verdict, note: impl Into<String>) -> Self {
        Self {
            hypothesis: h.into(),
            verdict,
            note: note.into(),
            witness: None,
        }
    }

    fn fail(h: &str, note: impl Into<String>, witness: Witness) -> Self {
        Self {
            hypothesis: h.into(),
            verdict: Verdict::FailWithWitness,
            note: note.into(),
            witness: Some(witness),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub verdicts: Vec<HypothesisVerdict>,
    pub kappa: Option<KappaReport>,
    pub gradient_bound: Option<GradientBound>,
    pub synthesis: Option<H4Synthesis>,
    pub h4: Option<H4Constants>,
    pub n_check_points: usize,
}

impl HypothesisReport {
    pub fn verdict(&self, hypothesis: &str) -> Option<&HypothesisVerdict> {
        self.verdicts.iter().find(|v| v.hypothesis == hypothesis)
    }

    /// True when any of the listed hypotheses (all when empty) failed.
    pub fn any_failed(&self, required: &[String]) -> bool {
        self.verdicts
            .iter()
            .filter(|v| required.is_empty() || required.contains(&v.hypothesis))
            .any(|v| v.verdict.is_fail())
    }
}

fn check_points(set: &SetFamily, opts: &AssessOptions, rng: RngSpec) -> Vec<(f64, Point)> {
    let times = if set.is_static() {
        vec![0.0]
    } else {
        sample_times(set.horizon, opts.n_time)
    };
    let mut out = Vec::new();
    for (j, &t) in times.iter().enumerate() {
        let mut pts: Vec<Point> = set
            .corner_candidates(t, rng.derive(2 * j as u64))
            .into_iter()
            .map(|b| b.point)
            .collect();
        pts.extend(
            set.sample_boundary(t, opts.n_boundary, rng.derive(2 * j as u64 + 1))
                .into_iter()
                .map(|b| b.point),
        );
        let mut kept: Vec<Point> = Vec::new();
        for p in pts {
            if !kept.iter().any(|q| dist(q, &p) < 1e-9) {
                kept.push(p);
            }
        }
        out.extend(kept.into_iter().map(|p| (t, p)));
    }
    out
}

fn is_convex_variant(v: &SetVariant) -> bool {
    match v {
        SetVariant::FixedConvex { .. } | SetVariant::TranslatedBase { .. } => true,
        SetVariant::Shifted { inner, .. } => is_convex_variant(inner),
        _ => false,
    }
}

fn assess_h1(set: &SetFamily, opts: &AssessOptions, rng: RngSpec) -> HypothesisVerdict {
    let rho = set.prox_radius;
    if rho.is_infinite() && is_convex_variant(&set.variant) {
        return HypothesisVerdict::new("H1", Verdict::CertifiedByFormula, "convex pieces are infinitely prox-regular");
    }
    let times = if set.is_static() { vec![0.0] } else { sample_times(set.horizon, opts.n_time) };
    for (j, &t) in times.iter().enumerate() {
        let rep = prox_regularity_probe(set, t, rho.value(), opts.n_space, rng.derive(j as u64));
        if let Some(w) = rep.witness {
            return HypothesisVerdict::fail(
                "H1",
                format!("prox-regularity inequality violated for rho = {}", rho.value()),
                Witness {
                    t,
                    point: w.x,
                    detail: format!("normal {:?}, member {:?}", w.normal, w.x_prime),
                    margin: w.margin,
                },
            );
        }
    }
    HypothesisVerdict::new(
        "H1",
        Verdict::PassBySampling,
        format!("probe passed at {} times with rho = {}", times.len(), rho.value()),
    )
}

fn assess_h2(set: &SetFamily, opts: &AssessOptions) -> Result<HypothesisVerdict> {
    if set.is_static() {
        return Ok(HypothesisVerdict::new("H2", Verdict::CertifiedByFormula, "static set"));
    }
    let m = modulus_of_continuity(set, opts.n_time.max(9), opts.n_space)?;
    let first = m.raw.first().copied().unwrap_or(0.0);
    let last = m.raw.last().copied().unwrap_or(0.0);
    // A continuous family has a modulus that shrinks with the lag; a jump keeps
    // the smallest-lag value comparable to the largest.
    if last > 0.0 && first > 0.5 * last + m.sampling_gap {
        return Ok(HypothesisVerdict::fail(
            "H2",
            "sampled modulus does not decay at small lags",
            Witness {
                t: 0.0,
                point: Vec::new(),
                detail: format!("P({}) = {first}, P({}) = {last}", m.lags[0], m.lags[m.lags.len() - 1]),
                margin: first,
            },
        ));
    }
    Ok(HypothesisVerdict::new(
        "H2",
        Verdict::PassBySampling,
        format!("sampled modulus P({}) = {first}", m.lags.first().copied().unwrap_or(0.0)),
    ))
}

fn assess_h3(set: &SetFamily, checks: &[(f64, Point)]) -> HypothesisVerdict {
    let bounded = match &set.variant {
        SetVariant::ComplementOfBall { .. } => true,
        SetVariant::FixedConvex { pieces } => pieces.iter().any(|p| p.bounds().is_some()),
        SetVariant::TranslatedBase { .. } => true,
        _ => false,
    };
    if bounded {
        return HypothesisVerdict::new("H3", Verdict::CertifiedByFormula, "boundary contained in a bounded piece");
    }
    // Otherwise look for boundary points touching the analysis window.
    for (t, p) in checks {
        let w = set.window_at(*t);
        let pad = 1e-3 * w.diameter();
        let touches = p
            .iter()
            .zip(w.lo.iter().zip(&w.hi))
            .any(|(x, (lo, hi))| x - lo < pad || hi - x < pad);
        if touches {
            return HypothesisVerdict::fail(
                "H3",
                "boundary reaches the edge of the analysis window",
                Witness {
                    t: *t,
                    point: p.clone(),
                    detail: "boundary point on the window edge".into(),
                    margin: 0.0,
                },
            );
        }
    }
    HypothesisVerdict::new("H3", Verdict::PassBySampling, "boundary samples stay inside the window")
}

fn gradient_condition(
    set: &SetFamily,
    opts: &AssessOptions,
    rng: RngSpec,
    report: &mut HypothesisReport,
) -> Result<HypothesisVerdict> {
    let Some(sub) = set.sublevel_set() else {
        return Ok(HypothesisVerdict::new("gradient", Verdict::NotApplicable, "not a sublevel intersection"));
    };
    let times = if set.is_static() { 1 } else { opts.n_time };
    let k = match kappa_estimate(set, sub.epsilon, times, opts.n_space, rng.derive(1)) {
        Ok(k) => k,
        Err(SweepError::NoActivePoints) => {
            return Ok(HypothesisVerdict::new("gradient", Verdict::NotApplicable, "no points with active constraints"))
        }
        Err(e) => return Err(e),
    };
    report.kappa = Some(k.clone());
    if !k.pass {
        return Ok(HypothesisVerdict::fail(
            "gradient",
            "active gradients are positively linearly dependent",
            Witness {
                t: k.witness.t,
                point: k.witness.x.clone(),
                detail: format!("active {:?}, lambda {:?}", k.witness.active, k.witness.lambda),
                margin: k.kappa,
            },
        ));
    }
    let gb = gradient_bound(set, sub.epsilon, sub.eta, times, opts.n_space, rng.derive(2))?;
    report.gradient_bound = Some(gb.clone());
    let note = match sub.grad_lipschitz.or_else(|| sub.grad_lipschitz_bound()) {
        Some(l) => {
            let s = h4_constants_sublevel(k.kappa, sub.epsilon, sub.eta, l, gb.value)?;
            report.h4 = Some(s.constants());
            report.synthesis = Some(s);
            "kappa < 0; H4 constants synthesized"
        }
        None => "kappa < 0; no gradient Lipschitz bound, synthesis skipped",
    };
    Ok(HypothesisVerdict::new("gradient", Verdict::PassBySampling, note))
}

fn h4_route(set: &SetFamily, opts: &AssessOptions, rng: RngSpec, report: &HypothesisReport) -> Result<Option<(H4Constants, &'static str)>> {
    if let Some(c) = &report.h4 {
        return Ok(Some((c.clone(), "synthesized from kappa")));
    }
    if let Some(c) = interior_ball_h4(set, 0.0, opts.n_space, rng.derive(3)) {
        if set.is_static() {
            return Ok(Some((c, "interior ball of a bounded convex set")));
        }
    }
    let beta = match (&set.variant, opts.beta) {
        (_, Some(b)) => Some(b),
        (SetVariant::ComplementOfBall { radius, .. }, None) => Some(*radius),
        _ => None,
    };
    if let Some(beta) = beta {
        let chk = check_complement_prox_regular(set, beta, opts.n_space, rng.derive(4))?;
        if let Some(c) = chk.h4 {
            return Ok(Some((c, "complement is prox-regular")));
        }
    }
    Ok(None)
}

fn assess_h4(
    set: &SetFamily,
    opts: &AssessOptions,
    rng: RngSpec,
    checks: &[(f64, Point)],
    report: &mut HypothesisReport,
) -> Result<HypothesisVerdict> {
    if let Some((c, why)) = h4_route(set, opts, rng, report)? {
        for (i, (t, x)) in checks.iter().enumerate() {
            let chk = verify_h4_at(set, *t, x, &c, opts.n_hull, rng.derive(1000 + i as u64))?;
            if !chk.pass {
                let (point, margin) = match chk.witness {
                    Some(w) => (w.point, w.violation),
                    None => (x.clone(), 0.0),
                };
                return Ok(HypothesisVerdict::fail(
                    "H4",
                    format!("constants ({why}) r = {}, L = {} violated", c.r, c.l),
                    Witness {
                        t: *t,
                        point,
                        detail: format!("boundary point {x:?}, distance check {}", chk.distance_ok),
                        margin,
                    },
                ));
            }
        }
        report.h4 = Some(c.clone());
        return Ok(HypothesisVerdict::new(
            "H4",
            Verdict::PassBySampling,
            format!("{why}: r = {}, L = {}, {} check points", c.r, c.l, checks.len()),
        ));
    }
    for (i, (t, x)) in checks.iter().enumerate() {
        let g = h4_grid_search(
            set,
            *t,
            x,
            &opts.r_grid,
            &opts.l_grid,
            opts.n_dirs,
            opts.n_hull,
            rng.derive(2000 + i as u64),
        )?;
        if g.all_fail() {
            return Ok(HypothesisVerdict::fail(
                "H4",
                format!("no candidate of {} satisfies the inclusion", g.candidates_tried),
                Witness {
                    t: *t,
                    point: x.clone(),
                    detail: format!("sample violating point {:?}", g.sample_witness),
                    margin: 0.0,
                },
            ));
        }
    }
    Ok(HypothesisVerdict::new(
        "H4",
        Verdict::PassBySampling,
        "grid search found candidates at every check point (per point, not uniform)",
    ))
}

fn assess_h5(
    set: &SetFamily,
    opts: &AssessOptions,
    rng: RngSpec,
    checks: &[(f64, Point)],
) -> Result<HypothesisVerdict> {
    for (i, (t, x)) in checks.iter().enumerate() {
        let g = match h5_grid_search(
            set,
            *t,
            x,
            &opts.delta_grid,
            &opts.l_grid,
            opts.n_dirs,
            opts.n_space / 4,
            rng.derive(3000 + i as u64),
        ) {
            Ok(g) => g,
            Err(SweepError::NormalProbeFailed) => continue,
            Err(e) => return Err(e),
        };
        if g.all_fail() {
            return Ok(HypothesisVerdict::fail(
                "H5",
                format!("no candidate of {} bounds the support function", g.candidates_tried),
                Witness {
                    t: *t,
                    point: x.clone(),
                    detail: format!("offending normal {:?}", g.sample_witness),
                    margin: 0.0,
                },
            ));
        }
    }
    Ok(HypothesisVerdict::new(
        "H5",
        Verdict::PassBySampling,
        "grid search found (delta, L, ell) at every check point",
    ))
}

/// Runs every checker and collects verdicts.
pub fn assess(set: &SetFamily, opts: &AssessOptions) -> Result<HypothesisReport> {
    let rng = RngSpec::new(opts.seed, 0);
    let checks = check_points(set, opts, rng.derive(1));
    let mut report = HypothesisReport {
        verdicts: Vec::new(),
        kappa: None,
        gradient_bound: None,
        synthesis: None,
        h4: None,
        n_check_points: checks.len(),
    };
    let full = set.is_full_space(0.0);
    report.verdicts.push(assess_h1(set, opts, rng.derive(2)));
    report.verdicts.push(assess_h2(set, opts)?);
    if full {
        report.verdicts.push(HypothesisVerdict::new("H3", Verdict::NotApplicable, "empty boundary"));
    } else {
        report.verdicts.push(assess_h3(set, &checks));
    }
    let grad = gradient_condition(set, opts, rng.derive(3), &mut report)?;
    if full {
        report.verdicts.push(HypothesisVerdict::new("H4", Verdict::NotApplicable, "empty boundary"));
        report.verdicts.push(HypothesisVerdict::new("H5", Verdict::NotApplicable, "empty boundary"));
    } else {
        let h4 = assess_h4(set, opts, rng.derive(4), &checks, &mut report)?;
        report.verdicts.push(h4);
        report.verdicts.push(assess_h5(set, opts, rng.derive(5), &checks)?);
    }
    report.verdicts.push(grad);
    Ok(report)
}
