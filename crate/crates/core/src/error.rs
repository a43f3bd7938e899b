use thiserror::Error;

/// Errors produced by the toolkit.
///
/// Variants split into two families that the command-line front end maps to
/// distinct exit codes: input problems (`Config`, `Parse`, `Io`, `Infeasible`)
/// and numerical failures (everything else).
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("validation error at `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("infeasible dispatch: {0}")]
    Infeasible(String),

    #[error("singular circuit: total series impedance is zero")]
    SingularCircuit,

    #[error("degenerate sharing: {0}")]
    DegenerateSharing(String),

    #[error(
        "algebraic loop did not converge after {iterations} iterations \
         (last current {last_current} A, residual {residual:e} A)"
    )]
    AlgebraicLoop {
        iterations: usize,
        last_current: f64,
        residual: f64,
    },

    #[error("simulation failed at t = {time} s: {source}")]
    Simulation {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("inconsistent operating point: residual {residual:e} exceeds {limit:e}")]
    InconsistentOperatingPoint { residual: f64, limit: f64 },

    #[error(
        "eigenvalue iteration did not converge after {iterations} sweeps \
         (matrix norm {norm:e})"
    )]
    EigenConvergence { iterations: usize, norm: f64 },

    #[error("comparison error: {0}")]
    Comparison(String),
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input rather than by a numerical failure.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Config(_)
            | Error::Validation { .. }
            | Error::Parse(_)
            | Error::Io { .. }
            | Error::Infeasible(_)
            | Error::Comparison(_) => true,
            Error::Simulation { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
