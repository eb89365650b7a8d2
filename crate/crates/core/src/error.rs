use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate volatility: the return series has zero variance")]
    DegenerateVolatility,

    #[error("singular denominator D1 = {value:e} in the risk-neutral probabilities")]
    SingularDenominator { value: f64 },

    #[error(
        "invalid risk-neutral measure{}: q = ({q_up}, {q_mid}, {q_down})",
        step.map(|s| format!(" at step {s}")).unwrap_or_default()
    )]
    InvalidRiskNeutralMeasure {
        step: Option<usize>,
        q_up: f64,
        q_mid: f64,
        q_down: f64,
    },

    #[error("replication system is singular (determinant {determinant:e})")]
    SingularReplication { determinant: f64 },

    #[error("lattice is not recombining: step {step} changes the up/down factors")]
    NonRecombining { step: usize },

    #[error("invalid {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate branch: p_up = {p_up}, p_down = {p_down} (both must be positive)")]
    DegenerateBranch { p_up: f64, p_down: f64 },

    #[error("moments infeasible for the given probabilities: radicand {radicand:e} < 0")]
    MomentInfeasible { radicand: f64 },

    #[error("no-arbitrage bounds violated ({violated}): D = {down_return}, r_f*dt = {rate_step}, U = {up_return}")]
    ArbitrageBounds {
        down_return: f64,
        rate_step: f64,
        up_return: f64,
        violated: &'static str,
    },

    #[error("empty tail: beta * L = {beta_len} < 1")]
    InsufficientTail { beta_len: f64 },

    #[error("no feasible point: every candidate parameter value was infeasible")]
    NoFeasiblePoint,

    #[error("I/O error on {path}: {message}")]
    Io { path: PathBuf, message: String },

    #[error("{path}, row {row}: {message}")]
    Schema {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("{path}, row {row}: dates are not strictly increasing")]
    UnsortedDates { path: PathBuf, row: usize },

    #[error("{path}, row {row}: duplicate quote for T = {steps}, K = {strike}")]
    DuplicateQuote {
        path: PathBuf,
        row: usize,
        steps: usize,
        strike: f64,
    },

    #[error("{path}: option chain contains no quotes")]
    EmptyChain { path: PathBuf },
}
