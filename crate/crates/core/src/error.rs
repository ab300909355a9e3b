use thiserror::Error;

/// Errors raised across the lab. Every variant carries the offending values.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter `{name}` = {value} outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("singular point: {0}")]
    Singular(String),

    #[error("plaquette log branch cut: rotation angle {angle} too close to pi (face {face})")]
    Branch { face: usize, angle: f64 },

    #[error("path is not contiguous at step {step}")]
    NonContiguousPath { step: usize },

    #[error("representation inconsistent: residual {residual:.3e} > {tol:.1e} ({context})")]
    InconsistentRep {
        residual: f64,
        tol: f64,
        context: String,
    },

    #[error("missing loop `{0}` in representation")]
    MissingLoop(String),

    #[error("field not in standard form near puncture: off-diagonal {offdiag:.3e} > {tol:.1e}")]
    StandardForm { offdiag: f64, tol: f64 },

    #[error("surface construction failed: {0}")]
    Surface(String),

    #[error("flow did not reach tolerance: sup|F| = {sup_f:.3e} > {tol:.1e} at t = {t:.4}")]
    FlowTimeout { sup_f: f64, tol: f64, t: f64 },

    #[error("did not converge: {0}")]
    NoConvergence(String),

    #[error("accidentally reducible with respect to the pinching system")]
    AccidentallyReducible,

    #[error("twisted component not stable: lambda_1 = {lambda1:.3e} <= {threshold:.1e}")]
    Unstable { lambda1: f64, threshold: f64 },

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("result has no `{0}` series")]
    MissingSeries(String),

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    range: &'static str,
) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::OutOfRange { name, value, range })
    }
}
