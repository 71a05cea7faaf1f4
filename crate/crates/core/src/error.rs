use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// Riemann data outside case (b), i.e. `0 <= f'(u-) < f'(u+)` violated.
    #[error("invalid state ordering: {0}")]
    InvalidStates(String),

    #[error("{quantity} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        quantity: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported derivative order (k = {k}, l = {l}); need k + l <= {max}")]
    UnsupportedOrder { k: usize, l: usize, max: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("step refused: dt = {dt} exceeds the CFL limit {max_dt}")]
    Cfl { dt: f64, max_dt: f64 },

    #[error("non-finite value produced at t = {t} (step {step})")]
    NonFinite { t: f64, step: usize },

    #[error("fit refused: {0}")]
    Fit(String),

    #[error("scenario invalid:\n  {}", .0.join("\n  "))]
    Scenario(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
