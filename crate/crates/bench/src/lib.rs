//! Fixtures shared by the criterion benchmarks.

use sweep_core::{PathSpec, SetFamily};

/// Unit disk translated along `(sin t, 0)`.
pub fn moving_disk(horizon: f64) -> SetFamily {
    let base = SetFamily::ball(vec![0.0, 0.0], 1.0, horizon).expect("valid disk");
    SetFamily::translated(
        base,
        PathSpec::Sine {
            amplitude: vec![1.0, 0.0],
            frequency: 1.0,
            phase: 0.0,
            offset: None,
        },
    )
    .expect("valid translation")
}

/// Horizontal corridor `|y| <= 0.5` with a disk obstacle of radius 0.3.
pub fn corridor() -> SetFamily {
    use sweep_core::geometry::{Constraint, ConstraintFn, SublevelSet};
    let aff = |a: Vec<f64>, b: f64| Constraint::fixed(ConstraintFn::Affine { a, b });
    SetFamily::sublevel(
        2,
        sweep_core::ProxRadius::finite(0.3).expect("positive radius"),
        1.0,
        SublevelSet::new(vec![
            aff(vec![0.0, 1.0], 0.5),
            aff(vec![0.0, -1.0], 0.5),
            Constraint::fixed(ConstraintFn::AntiBall {
                center: vec![0.0, 0.0],
                radius: 0.3,
            }),
        ]),
    )
    .expect("valid corridor")
}

/// The half-line `[0, inf)`.
pub fn half_line() -> SetFamily {
    SetFamily::half_space(vec![-1.0], 0.0, 1.0).expect("valid half-line")
}
