use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("state corruption: {what} (value {value:e})")]
    StateCorruption { what: String, value: f64 },

    #[error("forbidden outcome {outcome} at site {site}: probability {probability:e}")]
    ForbiddenOutcome {
        site: usize,
        outcome: u8,
        probability: f64,
    },

    #[error("imaginary residue {0:e} in a quantity that must be real")]
    ImaginaryResidue(f64),

    #[error("eigenvalue {0} outside [0, 1]")]
    EigenvalueOutOfRange(f64),

    #[error("cumulant order {0} not supported (even orders up to 12)")]
    CumulantOrder(usize),

    #[error("quadrature did not converge for {what}: estimate {estimate:e}, error {error:e}")]
    Quadrature {
        what: String,
        estimate: f64,
        error: f64,
    },

    #[error("Wiener-Hopf solution not converged at u = {u}: relative change {change:e}")]
    WienerHopfConvergence { u: f64, change: f64 },

    #[error("trajectory {index} failed at event {event}: {source}")]
    Trajectory {
        index: u64,
        event: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("fit rejected: {0}")]
    FitRejected(String),

    #[error("Fock-space dimension {0} exceeds the oracle limit")]
    DimensionTooLarge(usize),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
