use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("divergence: non-finite state at t = {time:e}")]
    Divergence { time: f64 },

    #[error("not-oscillating: {0}")]
    NotOscillating(String),

    #[error("non-convergence: amplitude still drifting after {periods} periods (last relative change {change:e})")]
    NonConvergence { periods: usize, change: f64 },

    #[error("period-unstable: crossing-interval spread {spread:e} exceeds tolerance {tol:e}")]
    PeriodUnstable { spread: f64, tol: f64 },

    #[error("not re-stabilized: crossing-interval drift {drift:e} exceeds {tol:e}; use a longer run (more discard periods)")]
    NotRestabilized { drift: f64, tol: f64 },

    #[error("insufficient crossings: needed {needed}, found {found}; lengthen the run")]
    InsufficientCrossings { needed: usize, found: usize },

    #[error("too-strong-impulse: measured phase shift {shift:.6} rad exceeds the weak-injection bound pi/2")]
    TooStrongImpulse { shift: f64 },

    #[error("prc point at t1 = {t1:e} s failed: {source}")]
    PrcPoint {
        t1: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("fourier fit error: rms residual {rms:e} exceeds {limit:e}")]
    FitError { rms: f64, limit: f64 },

    #[error("orbit-accuracy: adjoint normalization varies by {variation:e} (limit {tol:e}); use a smaller step")]
    OrbitAccuracy { variation: f64, tol: f64 },

    #[error("non-hyperbolic: adjoint solution not periodic after {periods} periods (last change {change:e})")]
    NonHyperbolic { periods: usize, change: f64 },

    #[error("incompatible-curves: periods {a:e} s and {b:e} s differ")]
    IncompatibleCurves { a: f64, b: f64 },

    #[error("non-finite injection current at t = {time:e}{}", edge.map(|(f, t)| format!(" on coupling {f} -> {t}")).unwrap_or_default())]
    NonFiniteInjection {
        time: f64,
        edge: Option<(usize, usize)>,
    },

    #[error("parameter file: {0}")]
    ParamFile(String),
}

impl Error {
    pub(crate) fn arg(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
