use crate::features::WindowKind;
use crate::scda::PointCluster;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("malformed image data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("feature localization failed: {reason} ({} clusters considered)", clusters.len())]
    Localization {
        reason: String,
        clusters: Vec<PointCluster>,
    },

    #[error("landmark extraction failed in {window:?} window: {reason}")]
    Extraction { window: WindowKind, reason: String },

    #[error("degenerate hull: all points lie on the segment {0:?} - {1:?}")]
    DegenerateHull([f64; 2], [f64; 2]),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("ill-conditioned problem: {0}")]
    IllConditioned(String),

    #[error("no depth match for visible landmark ids {0:?}")]
    MissingDepth(Vec<usize>),

    #[error("configuration error: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
