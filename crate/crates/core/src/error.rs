use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("slope {0} outside [sqrt(2), 2]")]
    SlopeOutOfRange(f64),
    #[error("slope sqrt(2) is excluded here; pass the endpoint override to allow it")]
    EndpointSlope,
    #[error("point {0} outside [0, 1]")]
    Domain(f64),
    #[error("degenerate or invalid interval [{lo}, {hi}]")]
    BadInterval { lo: f64, hi: f64 },
    #[error("{0} is not in the preimage of the interval")]
    NotInPreimage(f64),
    #[error("left branch unavailable at {0}: below 2 - s")]
    BranchUnavailable(f64),
    #[error("thread inconsistent at level {level}: |f(x_{{i+1}}) - x_i| = {defect:e}")]
    InconsistentThread { level: usize, defect: f64 },
    #[error("depth mismatch: {0} vs {1}")]
    DepthMismatch(usize, usize),
    #[error("interval thread is not {m}-flat: c is interior at level {level}")]
    NotFlat { m: usize, level: usize },
    #[error("point {0} lies on the critical orbit prefix")]
    OnCriticalOrbit(f64),
    #[error("point {0} lies on a density breakpoint")]
    AtBreakpoint(f64),
    #[error("power iteration did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("density solve failed: {0}")]
    SingularSystem(String),
    #[error("covering-time bound is vacuous at s = sqrt(2)")]
    VacuousBound,
    #[error("box construction exceeded its budget of {0} components")]
    BudgetExceeded(usize),
    #[error("flat prefix violated: c-containing pullback at depth {depth} <= {prefix}")]
    FlatPrefixViolated { depth: usize, prefix: usize },
    #[error("membership of the thread is unknown at the requested depth")]
    MembershipUnknown,
    #[error("inconclusive: unknown fraction {fraction} exceeds {threshold}")]
    Inconclusive { fraction: f64, threshold: f64 },
    #[error("branch word {0:?} is not realizable")]
    NotRealizable(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
