//! `sweep oracle <name> [params]`: direct access to the reference oracles.

use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use sweep_core::oracles::{brute_force_project, reflected_bm_moments, simplex_min_norm_grid, skorokhod_1d};
use sweep_core::{DiscretePath, PathSpec, Point, SetFamily, TimeGrid};

use crate::run::RunError;
use crate::config::Diagnostic;

pub const ORACLE_NAMES: [&str; 4] = [
    "skorokhod-1d",
    "brute-force-project",
    "reflected-bm-moments",
    "simplex-min-norm-grid",
];

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SkorokhodParams {
    h: PathSpec,
    #[serde(default)]
    x0: f64,
    horizon: f64,
    n: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectParams {
    set: SetFamily,
    #[serde(default)]
    t: f64,
    x: Point,
    grid_step: f64,
    radius: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentParams {
    t: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SimplexParams {
    vectors: Vec<Point>,
    resolution: f64,
}

fn parse<T: DeserializeOwned>(params: &str) -> Result<T, RunError> {
    serde_json::from_str(params).map_err(|e| {
        RunError::Validation(vec![Diagnostic {
            field: "params".into(),
            message: e.to_string(),
        }])
    })
}

/// Evaluates the named oracle on JSON parameters and returns its JSON result.
pub fn run_oracle(name: &str, params: &str) -> Result<Value, RunError> {
    let params = if params.trim().is_empty() { "{}" } else { params };
    Ok(match name {
        "skorokhod-1d" => {
            let p: SkorokhodParams = parse(params)?;
            let grid = TimeGrid::uniform(p.horizon, p.n)?;
            let x = skorokhod_1d(&DiscretePath::sample(&p.h, &grid, 1), p.x0)?;
            json!({
                "method": "closed-form",
                "times": grid.nodes(),
                "values": x.values.iter().map(|v| v[0]).collect::<Vec<_>>(),
            })
        }
        "brute-force-project" => {
            let p: ProjectParams = parse(params)?;
            serde_json::to_value(brute_force_project(&p.set, p.t, &p.x, p.grid_step, p.radius)?)
                .expect("oracle results serialize")
        }
        "reflected-bm-moments" => {
            let p: MomentParams = parse(params)?;
            let (mean, variance) = reflected_bm_moments(p.t)?;
            json!({ "method": "closed-form", "mean": mean, "variance": variance })
        }
        "simplex-min-norm-grid" => {
            let p: SimplexParams = parse(params)?;
            serde_json::to_value(simplex_min_norm_grid(&p.vectors, p.resolution)?).expect("oracle results serialize")
        }
        other => {
            return Err(RunError::Validation(vec![Diagnostic {
                field: "name".into(),
                message: format!("unknown oracle {other:?}; expected one of {}", ORACLE_NAMES.join(", ")),
            }]))
        }
    })
}
