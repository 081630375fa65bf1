use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside the domain of the operation (R ≤ 0, T ≤ 0, I < 0, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Mismatched or empty grids, vectors of unequal length.
    #[error("shape error: {0}")]
    Shape(String),

    /// The frequency grid is too coarse for the requested quadrature.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    /// The capacitance modulation is too large for the linearised source model.
    #[error("small-signal violation: |c_tilde| = {c_tilde:e} F exceeds 1% of C_m = {c_m:e} F")]
    SmallSignal { c_tilde: f64, c_m: f64 },

    /// A requested frequency or band lies outside the available data.
    #[error("range error: {0}")]
    Range(String),

    /// Compensator synthesis cannot meet the requested targets.
    #[error("design error: {0}")]
    Design(String),

    /// The circuit matrix is singular (floating node or degenerate topology).
    #[error("topology error: {0}")]
    Topology(String),

    #[error("{file}:{line}:{column}: {message}")]
    Parse { file: String, line: usize, column: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
