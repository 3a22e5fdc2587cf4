use thiserror::Error;

pub type Result<T, E = AnalyticsError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    /// Zero variance where a correlation or ratio is requested.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("infeasible band: radius {band} is smaller than the length difference {diff}")]
    InfeasibleBand { band: usize, diff: usize },

    #[error("invalid distance matrix: {0}")]
    InvalidDistanceMatrix(String),

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A pairwise computation failed; carries the offending pair of stream ids.
    #[error("pair ({a}, {b}): {source}")]
    Pair {
        a: String,
        b: String,
        #[source]
        source: Box<AnalyticsError>,
    },
}

impl AnalyticsError {
    pub(crate) fn for_pair(self, a: &str, b: &str) -> Self {
        AnalyticsError::Pair {
            a: a.to_string(),
            b: b.to_string(),
            source: Box::new(self),
        }
    }
}
