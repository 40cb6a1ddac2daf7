use thiserror::Error;

use crate::expr::{DiffError, EvalError, ParseError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("evaluation failed at r = {r}: {source}")]
    Eval { r: f64, source: EvalError },
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("{what} is not positive at r = {at}")]
    NotPositive { what: &'static str, at: f64 },
    #[error("r = {r} lies outside the validity interval [{lo}, {hi}]")]
    OutOfInterval { r: f64, lo: f64, hi: f64 },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("quadrature on [{a}, {b}] did not converge with {panels} panels")]
    QuadratureNonConvergence { a: f64, b: f64, panels: usize },
    #[error("epsilon {eps} exceeds the cap {cap} (0.1 * r)")]
    EpsilonTooLarge { eps: f64, cap: f64 },
    #[error("tangent basis is degenerate at u1 = {u1}")]
    DegenerateTangents { u1: f64 },
    #[error("negative radicand {value} in the radial-graph support function at u1 = {u1}")]
    NegativeRadicand { u1: f64, value: f64 },
    #[error("surface is not star-shaped: polar angle is not increasing on u1 in [{from}, {to}]")]
    NotStarShaped { from: f64, to: f64 },
    #[error("order fit needs at least {needed} points above the noise floor, found {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("no counterexample predicted at r = {r}: Phi(r) = {phi} is not strictly negative")]
    Refused { r: f64, phi: f64 },
}
