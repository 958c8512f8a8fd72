//! Property tests for the structural invariants of each module.

use proptest::prelude::*;
use sweep_core::geometry::{ConstraintFn, SetFamily, SublevelSet, Constraint};
use sweep_core::hypotheses::{h4_constants_sublevel, min_norm_in_hull};
use sweep_core::oracles::{simplex_min_norm_grid, skorokhod_1d};
use sweep_core::stochastic::{euler_sweeping_solve, sample_noise};
use sweep_core::sweeping::moving_wall;
use sweep_core::{
    catching_up_solve, DiffusionSpec, DiscretePath, DriftSpec, PathSpec, ProxRadius, RngSpec, SdeCoefficients,
    SolverOptions, TimeGrid,
};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn polar(r: f64, th: f64) -> Vec<f64> {
    vec![r * th.cos(), r * th.sin()]
}

fn complement() -> SetFamily {
    SetFamily::complement_of_ball(2, PathSpec::Zero, 1.0, 1.0).unwrap()
}

fn disk_on_sine() -> SetFamily {
    SetFamily::translated(
        SetFamily::ball(vec![0.0, 0.0], 1.0, 2.0).unwrap(),
        PathSpec::Sine {
            amplitude: vec![1.0, 0.0],
            frequency: 1.0,
            phase: 0.0,
            offset: None,
        },
    )
    .unwrap()
}

fn corridor() -> SetFamily {
    let set = SublevelSet::new(vec![
        Constraint::fixed(ConstraintFn::Ball {
            center: vec![0.0, 0.0],
            radius: 2.0,
        }),
        Constraint::fixed(ConstraintFn::Affine { a: vec![0.0, 1.0], b: 0.5 }),
        Constraint::fixed(ConstraintFn::Affine { a: vec![0.0, -1.0], b: 0.5 }),
    ]);
    SetFamily::sublevel(2, ProxRadius::INFINITE, 1.0, set).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_lipschitz_in_enlargement(r1 in 0.5f64..1.5, a1 in 0.0f64..6.28, r2 in 0.5f64..1.5, a2 in 0.0f64..6.28) {
        let set = complement();
        let (u1, u2) = (polar(r1, a1), polar(r2, a2));
        let p1 = set.project(0.0, &u1, 0.5).unwrap();
        let p2 = set.project(0.0, &u2, 0.5).unwrap();
        let du = dist(&u1, &u2);
        prop_assert!(dist(&p1, &p2) <= 2.0 * du + 1e-12);
    }

    #[test]
    fn projection_idempotent_and_distance_consistent(x in -2.5f64..2.5, y in -2.5f64..2.5, t in 0.0f64..2.0) {
        for set in [disk_on_sine(), corridor()] {
            let p = match set.project(t, &[x, y], 0.5) {
                Ok(p) => p,
                Err(_) => continue,
            };
            let q = set.project(t, &p, 0.5).unwrap();
            prop_assert!(dist(&p, &q) <= 1e-9);
            let d = set.distance(t, &[x, y]).unwrap();
            prop_assert!((d - dist(&p, &[x, y])).abs() <= 1e-9);
        }
    }

    #[test]
    fn shifted_projection_is_equivariant(x in -3.0f64..3.0, y in -3.0f64..3.0, t in 0.0f64..2.0, ax in -1.0f64..1.0) {
        let h = PathSpec::Sine { amplitude: vec![ax, 0.3], frequency: 2.0, phase: 0.1, offset: None };
        let base = disk_on_sine();
        let sh = base.shifted(h.clone()).unwrap();
        let ht = h.at(t, 2);
        let a = sh.project(t, &[x, y], 0.5).unwrap();
        let b = base.project(t, &[x + ht[0], y + ht[1]], 0.5).unwrap();
        prop_assert!(dist(&a, &[b[0] - ht[0], b[1] - ht[1]]) <= 1e-12);
    }

    #[test]
    fn min_norm_permutation_rotation_and_oracle(v in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 2), 1..4), th in 0.0f64..6.28) {
        let m = min_norm_in_hull(&v).unwrap();
        let mut rev = v.clone();
        rev.reverse();
        prop_assert!((min_norm_in_hull(&rev).unwrap().xi - m.xi).abs() <= 1e-9);
        let rot: Vec<Vec<f64>> = v.iter().map(|p| vec![th.cos() * p[0] - th.sin() * p[1], th.sin() * p[0] + th.cos() * p[1]]).collect();
        prop_assert!((min_norm_in_hull(&rot).unwrap().xi - m.xi).abs() <= 1e-9);
        let o = simplex_min_norm_grid(&v, 1e-3).unwrap();
        prop_assert!((o.values[0] - m.xi).abs() <= 1e-6 + o.error_bound.unwrap());
    }

    #[test]
    fn synthesized_constants_chain(kappa in -1.0f64..-1e-3, eps in 0.01f64..1.0, eta in 0.01f64..2.0, l in 0.0f64..10.0, k in 0.1f64..10.0) {
        let s = h4_constants_sublevel(kappa, eps, eta, l, k).unwrap();
        prop_assert!(s.ell <= 1.0 && s.r <= s.ell);
        prop_assert!(s.r <= -kappa * s.ell / (4.0 * (2.0 * l + k)) * (1.0 + 1e-15));
        prop_assert!((s.m * s.r - s.ell).abs() <= 1e-15 * s.ell);
    }

    #[test]
    fn catching_up_feasible_and_matches_skorokhod(amp in 0.1f64..2.0, freq in 0.5f64..4.0, x0 in 0.0f64..1.0) {
        let grid = TimeGrid::uniform(1.0, 200).unwrap();
        let hs = PathSpec::Sine { amplitude: vec![amp], frequency: freq, phase: 0.0, offset: None };
        let h = DiscretePath::sample(&hs, &grid, 1);
        let half_line = SetFamily::half_space(vec![-1.0], 0.0, 1.0).unwrap();
        let s = catching_up_solve(&half_line, Some(&h), &[x0], &grid, &SolverOptions::default()).unwrap();
        prop_assert!(s.max_feas_residual() <= 1e-9);
        // In the shifted frame the solution plus h is the reflected path.
        let refl = skorokhod_1d(&h, x0).unwrap();
        for k in 0..s.x.values.len() {
            prop_assert!((s.x.values[k][0] + h.values[k][0] - refl.values[k][0]).abs() <= 1e-12);
        }
        // Translation covariance: (C, h) equals (C - h, 0).
        let moved = half_line.shifted(hs).unwrap();
        let s2 = catching_up_solve(&moved, None, &[x0], &grid, &SolverOptions::default()).unwrap();
        prop_assert!(s.x.sup_distance(&s2.x) <= 1e-12);
    }

    #[test]
    fn constant_set_keeps_members_still(x in -0.9f64..0.9, y in -0.4f64..0.4) {
        let grid = TimeGrid::uniform(1.0, 50).unwrap();
        let s = catching_up_solve(&corridor(), None, &[x, y], &grid, &SolverOptions::default()).unwrap();
        prop_assert!(s.x.values.iter().all(|v| v == &vec![x, y]));
        prop_assert_eq!(s.total_variation(), 0.0);
    }

    #[test]
    fn stochastic_identity_and_feasibility(seed in 0u64..1000, sigma in 0.1f64..2.0) {
        let grid = TimeGrid::uniform(1.0, 200).unwrap();
        let set = moving_wall(1.0).unwrap();
        let c = SdeCoefficients::new(DriftSpec::Tanh { scale: 0.5 }, DiffusionSpec::Scalar { sigma });
        let noise = sample_noise(&grid, 1, RngSpec::new(seed, 3)).unwrap();
        let s = euler_sweeping_solve(&set, &c, &[0.2], &noise, &SolverOptions::default()).unwrap();
        prop_assert!(s.max_feas_residual() <= 1e-9);
        for k in 0..s.x.values.len() {
            prop_assert!((s.y.values[k][0] + s.z.values[k][0] - s.x.values[k][0]).abs() <= 1e-14);
            prop_assert!(s.x.values[k][0] >= s.x.times()[k] - 1e-12);
        }
        let again = euler_sweeping_solve(&set, &c, &[0.2], &noise, &SolverOptions::default()).unwrap();
        prop_assert_eq!(s.to_csv(), again.to_csv());
    }
}
