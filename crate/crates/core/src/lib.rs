//! Numerical toolkit for sweeping processes driven by prox-regular moving
//! sets, and for their stochastically perturbed (reflected SDE) variants.

pub mod error;
pub mod geometry;
pub mod hypotheses;
pub mod linalg;
pub mod oracles;
pub mod path;
pub mod rng;
pub mod stochastic;
pub mod sweeping;

pub use error::{Result, SweepError};
pub use geometry::{ProxRadius, SetFamily, SetVariant};
pub use linalg::Point;
pub use path::{total_variation, DiscretePath, PathSpec, TimeGrid};
pub use rng::RngSpec;
pub use hypotheses::{assess, AssessOptions, HypothesisReport, Verdict};
pub use oracles::{OracleMethod, OracleResult};
pub use stochastic::{DiffusionSpec, DriftSpec, MonteCarloReport, NoisePath, SdeCoefficients, Statistic};
pub use sweeping::{catching_up_solve, SolverOptions, SweepingSolution};
