//! Crate-wide error type.

use thiserror::Error;

use crate::model::Diagnostics;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid problem: {0:?}")]
    Invalid(Diagnostics),

    #[error("row window width {width} exceeds the cap {cap}; runaway support (malformed spec?)")]
    WindowOverflow { width: usize, cap: usize },

    #[error("no weight assignment solves the triangular chain and Newton is exhausted")]
    NoWeightSolution,

    #[error("pencil has no finite eigenvalues")]
    NoPencilSolution,

    #[error("evaluation point x = {x} is singular for this ansatz")]
    PointSingular { x: f64 },

    #[error("all grid points are singular; grid unusable")]
    GridUnusable,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("bad parameter: {0}")]
    BadParam(String),

    #[error("linear algebra failure: {0}")]
    LinAlg(String),
}

pub type Result<T> = std::result::Result<T, Error>;
