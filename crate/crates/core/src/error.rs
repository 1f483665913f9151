use thiserror::Error;

/// Errors shared by all geometry and certificate modules.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("fields live on different charts")]
    ChartMismatch,

    #[error("spacing must be positive, got {0}")]
    BadSpacing(f64),

    #[error("field has {got} values but chart has {want} points")]
    ShapeMismatch { got: usize, want: usize },

    #[error("metric is not positive definite at grid point {point:?}")]
    DegenerateMetric { point: [usize; 3] },

    #[error("time stencil must be strictly increasing")]
    NonIncreasingStencil,

    #[error("time stencil is not uniform: steps {first} and {second}")]
    NonUniformStencil { first: f64, second: f64 },

    #[error("grid too coarse for {op}: need at least {need} points per axis, got {got}")]
    TooCoarse {
        op: &'static str,
        need: usize,
        got: usize,
    },

    #[error("{context} must be positive: {value} at grid point {point:?}")]
    NonPositiveField {
        context: &'static str,
        value: f64,
        point: [usize; 3],
    },

    #[error("point {0:?} lies outside the chart")]
    OutsideChart([f64; 3]),

    #[error("degenerate curve: polyline has zero length")]
    DegenerateCurve,

    #[error("analytic geometry tag disagrees with sampled metric at {point:?} (|delta| = {delta:.3e})")]
    AnalyticTagMismatch { point: [usize; 3], delta: f64 },

    #[error("diameter oracle requires an analytic tag or a fully periodic chart")]
    UnsupportedTopology,

    #[error("deceleration parameter undefined: the second fundamental form vanishes identically")]
    UndefinedDeceleration,

    #[error("q-formula undefined: the Hubble rate vanishes at t0")]
    UndefinedQ,

    #[error("stress-energy recovery system is singular (determinant {0:.3e})")]
    DegenerateRecovery(f64),

    #[error("k = {k} is outside the admissible interval: {reason}")]
    KOutsideFeasible { k: f64, reason: &'static str },

    #[error("hypothesis checks failed: {0}")]
    InvalidHypothesis(String),

    #[error("not a perfect fluid: deviation {deviation:.3e} exceeds tolerance {tol:.3e}")]
    NotPerfectFluid { deviation: f64, tol: f64 },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
