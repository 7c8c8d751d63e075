use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed caller input: shape mismatches, out-of-range values, bad masks.
    #[error("invalid input: {0}")]
    Input(String),

    /// The run configuration cannot produce a meaningful explanation,
    /// e.g. the baseline classifies the same as the image.
    #[error("configuration error: {0}")]
    Config(String),

    /// The classifier backend could not be reached or crashed.
    #[error("backend error: {0}")]
    Backend(String),

    /// The backend answered, but with something that violates the wire contract.
    #[error("protocol error: {0}")]
    Protocol(String),

    /// The insertion/deletion scan ran off the end of the ranking without all three
    /// conditions holding at once.
    #[error("no sufficient-contrastive explanation along the ranking (best k = {}, {} of 3 conditions)", .0.k, .0.satisfied)]
    NoExplanation(Box<crate::explain::PartialWitness>),

    #[error("not found: {0}")]
    NotFound(String),

    /// Exhaustive computation refused because the instance exceeds the enumeration bound.
    #[error("refused: {0}")]
    Refused(String),

    #[error("taxonomy error: {0}")]
    Taxonomy(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
