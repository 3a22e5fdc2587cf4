//! Two-dimensional feature projections: PCA over aligned series and classical
//! MDS over distance matrices.

use serde::{Deserialize, Serialize};

use crate::eigen::{orient, symmetric_eigen};
use crate::error::{AnalyticsError, Result};
use crate::matrix::SimilarityMatrix;
use crate::series::{align_all, TimeSeries};

const ORIENT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProjectionMethod {
    Pca,
    Mds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FeatureProjection {
    pub method: ProjectionMethod,
    pub stream_ids: Vec<String>,
    pub coords: Vec<[f64; 2]>,
    /// Fraction of total variance on each axis; only reported for PCA.
    pub explained_variance: Option<[f64; 2]>,
}

/// Full PCA of a point set, computed through the `N x N` Gram matrix of the
/// standardized data.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaDecomposition {
    /// Standardized points, restricted to the dimensions with non-zero variance.
    pub standardized: Vec<Vec<f64>>,
    /// Indices of the retained input dimensions.
    pub kept_dims: Vec<usize>,
    /// Unit principal axes in the retained-dimension space, by decreasing variance.
    pub components: Vec<Vec<f64>>,
    /// Covariance eigenvalues matching `components`.
    pub eigenvalues: Vec<f64>,
    /// Per-point coordinates on each component (`scores[i][k]`).
    pub scores: Vec<Vec<f64>>,
    /// Trace of the covariance matrix.
    pub total_variance: f64,
}

/// Standardizes every dimension (population moments), drops constant ones and
/// decomposes the covariance `Z^T Z / N` through the Gram matrix `Z Z^T / N`.
/// Sign convention: the first non-zero loading of each component is positive.
pub fn pca_decompose(points: &[Vec<f64>]) -> Result<PcaDecomposition> {
    let n = points.len();
    if n < 3 {
        return Err(AnalyticsError::InsufficientData(format!(
            "pca needs at least 3 series, got {n}"
        )));
    }
    let dims = points[0].len();
    if points.iter().any(|p| p.len() != dims) {
        return Err(AnalyticsError::InvalidArgument(
            "points differ in dimension".into(),
        ));
    }

    let mut kept_dims = Vec::new();
    let mut columns = Vec::new();
    for d in 0..dims {
        let mean = points.iter().map(|p| p[d]).sum::<f64>() / n as f64;
        let var = points.iter().map(|p| (p[d] - mean).powi(2)).sum::<f64>() / n as f64;
        if var > 0.0 {
            let sd = var.sqrt();
            kept_dims.push(d);
            columns.push(points.iter().map(|p| (p[d] - mean) / sd).collect::<Vec<_>>());
        }
    }
    if kept_dims.is_empty() {
        return Err(AnalyticsError::InsufficientData(
            "every dimension has zero variance".into(),
        ));
    }
    let standardized: Vec<Vec<f64>> = (0..n)
        .map(|i| columns.iter().map(|c| c[i]).collect())
        .collect();

    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| dot(&standardized[i], &standardized[j]) / n as f64)
                .collect()
        })
        .collect();
    let total_variance: f64 = (0..n).map(|i| gram[i][i]).sum();
    let eig = symmetric_eigen(&gram);

    let mut components = Vec::new();
    let mut eigenvalues = Vec::new();
    let mut scores = vec![Vec::new(); n];
    for (lambda, u) in eig.values.iter().zip(&eig.vectors) {
        if *lambda <= 1e-12 * total_variance {
            break;
        }
        // axis v = Z^T u / sqrt(N lambda); scores Z v = sqrt(N lambda) u
        let scale = (n as f64 * lambda).sqrt();
        let mut axis: Vec<f64> = (0..kept_dims.len())
            .map(|d| (0..n).map(|i| standardized[i][d] * u[i]).sum::<f64>() / scale)
            .collect();
        let flip = if orient(&mut axis, ORIENT_EPS) { -1.0 } else { 1.0 };
        for (i, row) in scores.iter_mut().enumerate() {
            row.push(flip * scale * u[i]);
        }
        components.push(axis);
        eigenvalues.push(*lambda);
    }

    Ok(PcaDecomposition {
        standardized,
        kept_dims,
        components,
        eigenvalues,
        scores,
        total_variance,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projects labelled points onto their top two principal axes.
pub fn pca_points(stream_ids: Vec<String>, points: &[Vec<f64>]) -> Result<FeatureProjection> {
    let dec = pca_decompose(points)?;
    let coords = dec
        .scores
        .iter()
        .map(|s| [s.first().copied().unwrap_or(0.0), s.get(1).copied().unwrap_or(0.0)])
        .collect();
    let ratio = |k: usize| dec.eigenvalues.get(k).map_or(0.0, |l| (l / dec.total_variance).clamp(0.0, 1.0));
    Ok(FeatureProjection {
        method: ProjectionMethod::Pca,
        stream_ids,
        coords,
        explained_variance: Some([ratio(0), ratio(1)]),
    })
}

/// PCA over series: each series becomes a point whose coordinates are its
/// values at the timestamps shared by all series.
pub fn pca(set: &[TimeSeries]) -> Result<FeatureProjection> {
    if set.len() < 3 {
        return Err(AnalyticsError::InsufficientData(format!(
            "pca needs at least 3 series, got {}",
            set.len()
        )));
    }
    let (common, rows) = align_all(set);
    if common.len() < 2 {
        return Err(AnalyticsError::InsufficientData(format!(
            "series share {} timestamps, need at least 2",
            common.len()
        )));
    }
    let ids = set.iter().map(|s| s.stream_id.clone()).collect();
    pca_points(ids, &rows)
}

fn validate_distances(d: &[Vec<f64>]) -> Result<()> {
    let n = d.len();
    if n < 2 {
        return Err(AnalyticsError::InvalidDistanceMatrix(format!(
            "need at least 2 points, got {n}"
        )));
    }
    let scale = d
        .iter()
        .flatten()
        .copied()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some((i, row)) = d.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(AnalyticsError::InvalidDistanceMatrix(format!(
            "row {i} has {} entries, expected {n}",
            row.len()
        )));
    }
    for (i, row) in d.iter().enumerate() {
        if row[i] != 0.0 {
            return Err(AnalyticsError::InvalidDistanceMatrix(format!(
                "non-zero diagonal at {i}"
            )));
        }
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(AnalyticsError::InvalidDistanceMatrix(format!(
                    "entry ({i}, {j}) = {v} is not a finite non-negative distance"
                )));
            }
            if (v - d[j][i]).abs() > 1e-9 * scale {
                return Err(AnalyticsError::InvalidDistanceMatrix(format!(
                    "asymmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Classical (Torgerson) MDS into two dimensions.
pub fn classical_mds(stream_ids: Vec<String>, distances: &[Vec<f64>]) -> Result<FeatureProjection> {
    validate_distances(distances)?;
    let n = distances.len();
    if stream_ids.len() != n {
        return Err(AnalyticsError::InvalidArgument(format!(
            "{} ids for a {n}x{n} matrix",
            stream_ids.len()
        )));
    }
    // B = -1/2 J D^2 J, via row, column and grand means of D^2
    let sq: Vec<Vec<f64>> = distances
        .iter()
        .map(|r| r.iter().map(|v| v * v).collect())
        .collect();
    let row_mean: Vec<f64> = sq.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let col_mean: Vec<f64> = (0..n)
        .map(|j| sq.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let grand = row_mean.iter().sum::<f64>() / n as f64;
    let b: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| -0.5 * (sq[i][j] - row_mean[i] - col_mean[j] + grand))
                .collect()
        })
        .collect();

    let eig = symmetric_eigen(&b);
    let mut coords = vec![[0.0; 2]; n];
    for k in 0..2.min(n) {
        let lambda = eig.values[k].max(0.0);
        let mut u = eig.vectors[k].clone();
        orient(&mut u, ORIENT_EPS);
        let scale = lambda.sqrt();
        for (i, c) in coords.iter_mut().enumerate() {
            c[k] = u[i] * scale;
        }
    }
    Ok(FeatureProjection {
        method: ProjectionMethod::Mds,
        stream_ids,
        coords,
        explained_variance: None,
    })
}

/// MDS over a served matrix whose values are distances (e.g. DTW).
pub fn classical_mds_matrix(matrix: &SimilarityMatrix) -> Result<FeatureProjection> {
    classical_mds(matrix.stream_ids.clone(), &matrix.values)
}

/// Euclidean distance matrix of 2-D coordinates.
pub fn pairwise_distances(coords: &[[f64; 2]]) -> Vec<Vec<f64>> {
    coords
        .iter()
        .map(|a| {
            coords
                .iter()
                .map(|b| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
                .collect()
        })
        .collect()
}
