use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Domain { name: &'static str, reason: String },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("degenerate excursion: start {x0} lies inside the absorption band of half-width {h}")]
    DegenerateExcursion { x0: f64, h: f64 },

    #[error("golden value `{key}` drifted: stored {stored}, regenerated {fresh} ({sigma:.1} sigma)")]
    Drift {
        key: String,
        stored: f64,
        fresh: f64,
        sigma: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Domain {
        name,
        reason: reason.into(),
    }
}
