//! Analytical toolbox for comparing collections of time series.
//!
//! Everything here is a pure function of its inputs: smoothing windows, the
//! pair metric library, dynamic time warping, lag registration, pairwise
//! similarity matrices and 2-D projections (PCA and classical MDS).
//!
//! Pairwise products evaluate their cells through [`Execution`], which uses
//! rayon when the `parallel` feature (on by default) is enabled.

pub mod dtw;
pub mod eigen;
pub mod error;
pub mod exec;
pub mod lag;
pub mod matrix;
pub mod metrics;
pub mod projection;
pub mod series;
pub mod window;

pub use dtw::{dtw, dtw_distance, DtwCost, DtwResult};
pub use error::{AnalyticsError, Result};
pub use exec::Execution;
pub use lag::{lag_register, LagResult};
pub use matrix::{
    lag_table, lag_table_with, pairwise_matrix, pairwise_matrix_with, LagPair, LagTable, Measure,
    SimilarityMatrix,
};
pub use metrics::{pair_metric, FTestResult, MetricId, MetricValue};
pub use projection::{classical_mds, classical_mds_matrix, pca, pca_points, FeatureProjection, ProjectionMethod};
pub use series::{align_all, align_pair, TimeSeries};
pub use window::{smooth, smooth_values, WindowKind, WindowSpec};
