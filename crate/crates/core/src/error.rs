use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A function was evaluated outside the set where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// Parameters of a coefficient, delay or kernel break one of its invariants.
    #[error("invalid expression: {0}")]
    InvalidExpr(String),

    #[error("coefficient takes negative values (infimum {inf}) where a non-negative one is required")]
    NegativeCoefficient { inf: f64 },

    #[error("ratio is unbounded: denominator has infimum 0 on [t0, inf)")]
    UnboundedRatio,

    /// Sum of neutral coefficient norms reached 1; the equation is not well posed.
    #[error("ill-posed equation: sum of sup |a_k| = {0} >= 1")]
    IllPosed(f64),

    #[error("fixed point for xdot did not converge at t = {t} (residual {residual:e})")]
    FixedPoint { t: f64, residual: f64 },

    #[error("invalid integration setup: {0}")]
    Setup(String),

    #[error("range does not bracket a transition: f({lo}) = {lo_outcome}, f({hi}) = {hi_outcome}")]
    NoBracket {
        lo: f64,
        hi: f64,
        lo_outcome: bool,
        hi_outcome: bool,
    },

    #[error("spec error: {0}")]
    Spec(String),

    #[error("unknown criterion id `{0}`")]
    UnknownCriterion(String),
}
