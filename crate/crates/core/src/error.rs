use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid grid map: {0}")]
    InvalidMap(String),

    #[error("map leaves its homotopy class: {0}")]
    ClassViolation(String),

    #[error("non-positive Jacobian {jac:e} at node (i={i}, j={j}), t={t}, theta={theta}")]
    NonPositiveJacobian {
        i: usize,
        j: usize,
        t: f64,
        theta: f64,
        jac: f64,
    },

    #[error("t={t} lies outside the profile domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },

    #[error("infeasible instance: {value} is below the Nitsche threshold {threshold}")]
    BelowNitsche { value: f64, threshold: f64 },

    #[error("pointwise elasticity check contradicts mu={mu}: {detail}")]
    InconsistentCertificate { mu: f64, detail: String },

    #[error("adaptive step control failed at t={t} (step {step:e})")]
    StepFailure { t: f64, step: f64 },

    #[error("slope became non-positive ({slope:e}) at t={t}")]
    NegativeSlope { t: f64, slope: f64 },

    #[error("the reduced equation is singular at q=1")]
    SingularStart,

    #[error(
        "shooting bracket not found after {expansions} expansions (last bracket [{lo:e}, {hi:e}])"
    )]
    BracketFailure { expansions: u32, lo: f64, hi: f64 },

    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),

    #[error("degenerate Jacobian: H*Hdot <= 0 at t={t}")]
    DegenerateJacobian { t: f64 },

    #[error("profile inversion failed: {0}")]
    InversionFailure(String),

    #[error("regime mismatch: requested {requested}, minimizer has mu={mu}")]
    RegimeMismatch { requested: String, mu: f64 },

    #[error("no lower-bound certificate available: {0}")]
    CertificateUnavailable(String),

    #[error("Jacobian still non-positive after {halvings} amplitude halvings")]
    CannotSatisfyJacobian { halvings: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
