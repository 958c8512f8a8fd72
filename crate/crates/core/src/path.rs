//! Time grids, sampled paths, and the catalog of continuous paths used for
//! set centers and perturbations.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SweepError};
use crate::linalg::{dist, lerp, norm, Point};

/// Strictly increasing partition `0 = t_0 < t_1 < ... < t_n = T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    /// `n` equal steps on `[0, horizon]`.
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(SweepError::InvalidInput(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if n == 0 {
            return Err(SweepError::InvalidInput("grid needs at least one step".into()));
        }
        let mut nodes: Vec<f64> = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
        nodes[n] = horizon;
        Ok(Self { nodes })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(SweepError::InvalidInput("grid needs at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(SweepError::InvalidInput("grid must start at 0".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || !nodes.iter().all(|t| t.is_finite()) {
            return Err(SweepError::InvalidInput("grid must be strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Number of steps (nodes minus one).
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn step(&self, k: usize) -> f64 {
        self.nodes[k + 1] - self.nodes[k]
    }

    pub fn max_step(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn is_uniform(&self) -> bool {
        let h = self.horizon() / self.steps() as f64;
        self.nodes
            .iter()
            .enumerate()
            .all(|(i, t)| (t - h * i as f64).abs() <= 1e-12 * self.horizon().max(1.0))
    }

    /// Grid with every step split at its midpoint.
    pub fn refine_midpoints(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(0.5 * (w[0] + w[1]));
        }
        nodes.push(self.horizon());
        Self { nodes }
    }

    /// Index of the node equal to `t` (within `1e-12` relative), if any.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * self.horizon().max(1.0);
        self.nodes.iter().position(|s| (s - t).abs() <= tol)
    }
}

/// Values of an `R^d`-valued path at the nodes of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePath {
    pub grid: TimeGrid,
    pub values: Vec<Point>,
}

impl DiscretePath {
    pub fn new(grid: TimeGrid, values: Vec<Point>) -> Result<Self> {
        if values.len() != grid.nodes().len() {
            return Err(SweepError::InvalidInput(format!(
                "path has {} values for {} nodes",
                values.len(),
                grid.nodes().len()
            )));
        }
        if let Some(first) = values.first() {
            let d = first.len();
            if values.iter().any(|v| v.len() != d) {
                return Err(SweepError::InvalidInput("path values differ in dimension".into()));
            }
        }
        Ok(Self { grid, values })
    }

    /// The zero path of dimension `dim` on `grid`.
    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        let values = vec![vec![0.0; dim]; grid.nodes().len()];
        Self { grid, values }
    }

    /// Samples a continuous path at the grid nodes.
    pub fn sample(spec: &PathSpec, grid: &TimeGrid, dim: usize) -> Self {
        let values = grid.nodes().iter().map(|&t| spec.at(t, dim)).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn times(&self) -> &[f64] {
        self.grid.nodes()
    }

    /// Piecewise-linear interpolation; constant extrapolation outside the grid.
    pub fn at(&self, t: f64) -> Point {
        let nodes = self.grid.nodes();
        if t <= nodes[0] {
            return self.values[0].clone();
        }
        if t >= self.grid.horizon() {
            return self.values[nodes.len() - 1].clone();
        }
        let k = nodes.partition_point(|&s| s <= t) - 1;
        let s = (t - nodes[k]) / (nodes[k + 1] - nodes[k]);
        lerp(&self.values[k], &self.values[k + 1], s)
    }

    /// Norm of each increment `x(t_{k+1}) - x(t_k)`.
    pub fn increment_norms(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| dist(&w[1], &w[0])).collect()
    }

    /// `sup_k |x(t_k)|`.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| norm(v)).fold(0.0, f64::max)
    }

    /// `sup_k |x(t_k) - y(t_k)|` for paths on the same grid.
    pub fn sup_distance(&self, other: &DiscretePath) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| dist(a, b))
            .fold(0.0, f64::max)
    }

    /// Path restricted to every `stride`-th node.
    pub fn subsample(&self, stride: usize) -> Result<Self> {
        if stride == 0 || self.grid.steps() % stride != 0 {
            return Err(SweepError::InvalidInput(format!(
                "stride {stride} does not divide {} steps",
                self.grid.steps()
            )));
        }
        let nodes = self.grid.nodes().iter().step_by(stride).copied().collect();
        let values = self.values.iter().step_by(stride).cloned().collect();
        Ok(Self {
            grid: TimeGrid::from_nodes(nodes)?,
            values,
        })
    }
}

/// Total variation of the piecewise-linear interpolant of `path` on `[a, b]`.
///
/// Both endpoints must be grid nodes.
pub fn total_variation(path: &DiscretePath, a: f64, b: f64) -> Result<f64> {
    if a > b {
        return Err(SweepError::InvalidInput(format!("empty interval [{a}, {b}]")));
    }
    let i = path
        .grid
        .index_of(a)
        .ok_or_else(|| SweepError::InvalidInput(format!("{a} is not a grid node")))?;
    let j = path
        .grid
        .index_of(b)
        .ok_or_else(|| SweepError::InvalidInput(format!("{b} is not a grid node")))?;
    Ok(path.values[i..=j]
        .windows(2)
        .map(|w| dist(&w[1], &w[0]))
        .sum())
}

/// Continuous `[0, T] -> R^d` paths available to scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PathSpec {
    Zero,
    Constant {
        value: Point,
    },
    /// `origin + velocity * t`
    Linear {
        origin: Point,
        velocity: Point,
    },
    /// `offset + amplitude * sin(frequency * t + phase)`, componentwise amplitude.
    Sine {
        amplitude: Point,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: Option<Point>,
    },
    /// Planar circular motion `center + radius (cos(w t + phase), sin(w t + phase))`.
    Circle {
        center: Point,
        radius: f64,
        angular_speed: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Sum of the listed paths.
    Sum {
        terms: Vec<PathSpec>,
    },
    /// Piecewise-linear interpolation of samples.
    Sampled {
        times: Vec<f64>,
        values: Vec<Point>,
    },
}

fn one() -> f64 {
    1.0
}

impl PathSpec {
    pub fn at(&self, t: f64, dim: usize) -> Point {
        match self {
            PathSpec::Zero => vec![0.0; dim],
            PathSpec::Constant { value } => value.clone(),
            PathSpec::Linear { origin, velocity } => origin
                .iter()
                .zip(velocity)
                .map(|(o, v)| o + v * t)
                .collect(),
            PathSpec::Sine {
                amplitude,
                frequency,
                phase,
                offset,
            } => {
                let s = (frequency * t + phase).sin();
                let mut out: Point = amplitude.iter().map(|a| a * s).collect();
                if let Some(off) = offset {
                    out.iter_mut().zip(off).for_each(|(o, c)| *o += c);
                }
                out
            }
            PathSpec::Circle {
                center,
                radius,
                angular_speed,
                phase,
            } => {
                let a = angular_speed * t + phase;
                let mut out = center.clone();
                out[0] += radius * a.cos();
                out[1] += radius * a.sin();
                out
            }
            PathSpec::Sum { terms } => {
                let mut out = vec![0.0; dim];
                for term in terms {
                    out.iter_mut()
                        .zip(term.at(t, dim))
                        .for_each(|(o, v)| *o += v);
                }
                out
            }
            PathSpec::Sampled { times, values } => {
                if t <= times[0] {
                    return values[0].clone();
                }
                let last = times.len() - 1;
                if t >= times[last] {
                    return values[last].clone();
                }
                let k = times.partition_point(|&s| s <= t) - 1;
                let s = (t - times[k]) / (times[k + 1] - times[k]);
                lerp(&values[k], &values[k + 1], s)
            }
        }
    }

    /// True when the path is identically constant (no time dependence).
    pub fn is_static(&self) -> bool {
        match self {
            PathSpec::Zero | PathSpec::Constant { .. } => true,
            PathSpec::Linear { velocity, .. } => velocity.iter().all(|v| *v == 0.0),
            PathSpec::Sine { amplitude, .. } => amplitude.iter().all(|a| *a == 0.0),
            PathSpec::Circle { radius, angular_speed, .. } => *radius == 0.0 || *angular_speed == 0.0,
            PathSpec::Sum { terms } => terms.iter().all(PathSpec::is_static),
            PathSpec::Sampled { values, .. } => values.windows(2).all(|w| w[0] == w[1]),
        }
    }

    /// Checks that every vector parameter has dimension `dim`.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let check = |v: &Point, what: &str| {
            if v.len() == dim {
                Ok(())
            } else {
                Err(SweepError::InvalidInput(format!(
                    "path {what} has dimension {}, expected {dim}",
                    v.len()
                )))
            }
        };
        match self {
            PathSpec::Zero => Ok(()),
            PathSpec::Constant { value } => check(value, "value"),
            PathSpec::Linear { origin, velocity } => {
                check(origin, "origin")?;
                check(velocity, "velocity")
            }
            PathSpec::Sine { amplitude, offset, .. } => {
                check(amplitude, "amplitude")?;
                offset.as_ref().map_or(Ok(()), |o| check(o, "offset"))
            }
            PathSpec::Circle { center, .. } => {
                if dim < 2 {
                    return Err(SweepError::InvalidInput("circle path needs d >= 2".into()));
                }
                check(center, "center")
            }
            PathSpec::Sum { terms } => terms.iter().try_for_each(|t| t.validate(dim)),
            PathSpec::Sampled { times, values } => {
                if times.is_empty() || times.len() != values.len() {
                    return Err(SweepError::InvalidInput("sampled path needs matching times/values".into()));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(SweepError::InvalidInput("sampled path times must increase".into()));
                }
                values.iter().try_for_each(|v| check(v, "sample"))
            }
        }
    }
}
