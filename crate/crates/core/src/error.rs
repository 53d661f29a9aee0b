use thiserror::Error;

use crate::symexpr::ParseError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("pole: a denominator vanishes at the evaluation point")]
    Pole,
    #[error("denominator is the zero expression")]
    ZeroDenominator,
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("search exhausted: {0}")]
    SearchExhausted(String),
    #[error("empty stratum: {0}")]
    EmptyStratum(String),
    #[error(
        "non-divisorial or degenerate input: facet {facet} has gradient norm {norm:e} at {point:?}"
    )]
    Degenerate {
        facet: usize,
        point: Vec<f64>,
        norm: f64,
    },
    #[error("projection did not converge: {0}")]
    NonConvergent(String),
    #[error("certificate failed: {0}")]
    Certificate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
