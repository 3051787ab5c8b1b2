use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("singular point: areal radius {r} is not positive")]
    SingularPoint { r: f64 },

    #[error("U·V = {uv} lies outside the black-hole interior")]
    OutsideInterior { uv: f64 },

    #[error("U·V = {uv} lies on or beyond the singularity")]
    PastSingularity { uv: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical blow-up at grid point ({i}, {j}): {what}")]
    NumericalBlowup { i: usize, j: usize, what: String },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("malformed checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
