use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension for {what}: expected {expected}, got {got}")]
    InvalidDimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid index set: {0}")]
    InvalidIndex(String),

    #[error("matrix is singular or near-singular (reciprocal condition estimate {rcond:.3e})")]
    SingularMatrix { rcond: f64 },

    #[error("frame size error: {0}")]
    FrameSize(String),

    #[error("incomplete channel state: {0}")]
    IncompleteCsi(String),

    #[error("enumeration refused: {0} codewords exceed the brute-force budget")]
    EnumerationRefused(u128),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("LMS diverged at frame {frame} (MSE grew past 1e6 x initial); try a smaller step size than {mu:.3e}")]
    LmsDiverged { mu: f64, frame: usize },

    #[error("invalid trellis definition: {0}")]
    InvalidTrellis(String),
}

pub type Result<T> = std::result::Result<T, Error>;
