//! Ordinary least squares with leverage-based studentized residuals.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegressionError {
    #[error("need at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("design matrix is rank deficient (rank {rank} < {columns})")]
    RankDeficient { rank: usize, columns: usize },
    #[error("non-finite value in regression input")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    StrengthDegreePowerlaw,
    BetweennessDegreeQuadratic,
    KnnDegreeLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Coefficient {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outlier {
    pub label: String,
    /// Signed internally studentized residual.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub kind: FitKind,
    pub coefficients: Vec<Coefficient>,
    /// Mean edge weight `w̄` of the uncorrelated line `s = w̄ k`, when relevant.
    pub baseline: Option<f64>,
    pub residual_sd: f64,
    pub n_points: usize,
    pub outlier_threshold: f64,
    pub outliers: Vec<Outlier>,
}

impl RegressionFit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coefficients
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.value)
    }
}

/// Result of a least-squares solve.
#[derive(Debug, Clone)]
pub(crate) struct LeastSquares {
    pub coefficients: Vec<f64>,
    pub residual_sd: f64,
    pub studentized: Vec<f64>,
}

/// Solves `min ||X b - y||` for the given design rows. Columns are scaled to
/// unit norm before the SVD so the rank test is scale-free.
pub(crate) fn least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LeastSquares, RegressionError> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if n < p || n == 0 {
        return Err(RegressionError::TooFewPoints { needed: p.max(1), got: n });
    }
    if rows.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(RegressionError::NonFinite);
    }
    let mut x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let mut scale = vec![1.0; p];
    for (j, s) in scale.iter_mut().enumerate() {
        let norm = x.column(j).norm();
        if norm > 0.0 {
            *s = norm;
            x.column_mut(j).unscale_mut(norm);
        }
    }
    let yv = DVector::from_column_slice(y);
    let svd = x.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    let tol = max_sv * 1e-10 * n.max(p) as f64;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < p {
        return Err(RegressionError::RankDeficient { rank, columns: p });
    }
    let beta = svd
        .solve(&yv, tol)
        .map_err(|_| RegressionError::RankDeficient { rank, columns: p })?;
    let fitted = &x * &beta;
    let residuals: Vec<f64> = (0..n).map(|i| y[i] - fitted[i]).collect();
    let rss: f64 = residuals.iter().map(|r| r * r).sum();
    let dof = n - p;
    let residual_sd = if dof > 0 { (rss / dof as f64).sqrt() } else { 0.0 };

    let u = svd.u.as_ref().expect("u requested");
    let studentized = (0..n)
        .map(|i| {
            let leverage: f64 = (0..p).map(|j| u[(i, j)] * u[(i, j)]).sum();
            let denom = residual_sd * (1.0 - leverage).max(0.0).sqrt();
            // exact fits and fully leveraged points carry no residual signal
            if denom > 1e-12 * (1.0 + y[i].abs()) {
                residuals[i] / denom
            } else {
                0.0
            }
        })
        .collect();

    let coefficients = beta.iter().zip(&scale).map(|(b, s)| b / s).collect();
    Ok(LeastSquares {
        coefficients,
        residual_sd,
        studentized,
    })
}

/// Simple linear regression `y = slope x + intercept`.
pub(crate) fn fit_line(x: &[f64], y: &[f64]) -> Result<LeastSquares, RegressionError> {
    let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v, 1.0]).collect();
    least_squares(&rows, y)
}

pub(crate) fn outliers(
    labels: &[String],
    studentized: &[f64],
    threshold: f64,
) -> Vec<Outlier> {
    labels
        .iter()
        .zip(studentized)
        .filter(|(_, r)| r.abs() > threshold)
        .map(|(l, &r)| Outlier {
            label: l.clone(),
            residual: r,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 2.0).collect();
        let fit = fit_line(&x, &y).unwrap();
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-12);
        assert!((fit.coefficients[1] + 2.0).abs() < 1e-12);
        assert!(fit.residual_sd < 1e-12);
        assert!(fit.studentized.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn constant_regressor_is_rank_deficient() {
        let err = fit_line(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, RegressionError::RankDeficient { rank: 1, columns: 2 }));
    }

    #[test]
    fn studentized_matches_textbook_formula() {
        // y = x + noise; compare against explicit hat-matrix computation
        let x = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let y = [1.1, 1.9, 3.2, 3.8, 5.3, 5.7];
        let fit = fit_line(&x, &y).unwrap();
        let n = x.len() as f64;
        let mx = x.iter().sum::<f64>() / n;
        let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
        for i in 0..x.len() {
            let h = 1.0 / n + (x[i] - mx).powi(2) / sxx;
            let residual = y[i] - (fit.coefficients[0] * x[i] + fit.coefficients[1]);
            let expected = residual / (fit.residual_sd * (1.0 - h).sqrt());
            assert!((fit.studentized[i] - expected).abs() < 1e-10);
        }
    }
}
