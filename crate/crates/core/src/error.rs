use thiserror::Error;

/// Errors produced by the coding library and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Two operands that must agree in length (or dimension) do not.
    #[error("length mismatch in {op}: expected {expected}, got {actual}")]
    LengthMismatch {
        op: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A numeric parameter lies outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The exhaustive decoder refuses message lengths above its cap.
    #[error("message length {k} exceeds the exhaustive decoding cap of {cap} bits")]
    Capability { k: usize, cap: usize },

    /// Two codes that were expected to share a generator matrix do not.
    #[error("codes do not share a generator matrix")]
    GeneratorMismatch,

    #[error("malformed hex string: {0}")]
    Hex(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(op: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            op,
            expected,
            actual,
        })
    }
}

pub(crate) fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} = {p} is not in [0, 1]")))
    }
}
