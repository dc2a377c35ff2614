use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A scalar primitive was evaluated outside its domain during jet
    /// propagation (log of a nonpositive value, division by zero, ...).
    #[error("domain violation in `{primitive}` during jet evaluation")]
    JetDomain { primitive: &'static str },

    #[error("degenerate direction y = 0 passed to a metric operation")]
    DegenerateDirection,

    /// The fundamental tensor failed its positive definiteness check.
    #[error("strong convexity violated at x = {x:?}, y = {y:?}")]
    ConvexityViolation { x: Vec<f64>, y: Vec<f64> },

    #[error("Legendre inversion did not converge: residual {residual:.3e} after {iters} iterations")]
    InversionFailure { residual: f64, iters: usize },

    #[error("point {x:?} lies outside the chart")]
    ChartBoundary { x: Vec<f64> },

    #[error("quadrature did not stabilize: order doubling moved the result by {delta:.3e}")]
    QuadraturePrecision { delta: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid configuration: {0}")]
    Configuration(String),

    /// A verifier was invoked without the curvature certificate its
    /// hypotheses require.
    #[error("hypothesis not certified: {0}")]
    Uncertified(String),

    #[error("argument outside the positivity domain: {0}")]
    Domain(String),

    #[error("evaluation point past the estimated cut value t = {cut:.6}")]
    PastCut { cut: f64 },

    /// Conjugate point earlier than the first usable output sample.
    #[error("resolution too coarse: conjugate point at t = {t:.3e} precedes the first output time")]
    Resolution { t: f64 },

    #[error("time horizon insufficient: {0}")]
    Horizon(String),

    #[error("step size unstable: {0}")]
    StepSize(String),
}

pub type Result<T> = std::result::Result<T, Error>;
