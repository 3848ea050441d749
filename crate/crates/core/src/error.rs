use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("beta is undefined for the free Laplacian (alpha = free)")]
    BetaUndefinedForFree,

    #[error("p = {p} is outside the admissible range for d = {d}")]
    OutOfRange { d: u8, p: f64 },

    #[error("G_lambda is not in L^{exponent} for d = {d} (requires d=2, e < inf or d=3, e < 3)")]
    NotIntegrable { d: u8, exponent: f64 },

    #[error("q = 0: the solution is regular and alpha = free")]
    RegularSolution,

    #[error("lambda = {lambda} <= lambda_alpha = {lambda_alpha}: no positive solution in this range")]
    LambdaBelowThreshold { lambda: f64, lambda_alpha: f64 },

    #[error("integration failed at r = {r}: {reason}")]
    IntegrationFailure { r: f64, reason: String },

    #[error("zero at r = {r} has numerically vanishing derivative (|u'| = {du})")]
    DegenerateZero { r: f64, du: f64 },

    #[error("branch k = {k} not found; scanned a in [{a_lo}, {a_hi}], q in [{q_lo}, {q_hi}]")]
    BranchNotFound {
        k: usize,
        a_lo: f64,
        a_hi: f64,
        q_lo: f64,
        q_hi: f64,
    },

    #[error("variational path requires the strong regime (G^{{p+1}} not integrable for d=3, p >= 2)")]
    WeakRegimeRejected,

    #[error("minimization did not converge within {iters} iterations (|grad| = {gnorm})")]
    NoConvergence { iters: usize, gnorm: f64 },

    #[error("ill-conditioned fit window [{r_lo}, {r_hi}]")]
    IllConditionedFit { r_lo: f64, r_hi: f64 },

    #[error("flux extrapolation did not converge: {0}")]
    FluxNotConverged(String),

    #[error("zero state has no Nehari projection")]
    ZeroState,

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
