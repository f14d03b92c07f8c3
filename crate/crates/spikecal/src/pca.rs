//! Principal component analysis of raw spectra, and projection of
//! synthetic/validation data into the fitted score space.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: DVector<f64>,
    /// m x c, orthonormal columns.
    pub loadings: DMatrix<f64>,
    /// sigma_i^2 / sum(sigma^2), nonincreasing, sums to <= 1.
    pub explained_variance_ratio: Vec<f64>,
}

/// Mean-centered SVD with `c` retained components.
pub fn fit_pca(x: &DMatrix<f64>, c: usize) -> Result<PcaModel> {
    let n = x.nrows();
    let m = x.ncols();
    if n < 2 {
        return Err(Error::Data(format!("PCA needs n >= 2 samples, got {n}")));
    }
    let max_c = (n - 1).min(m);
    if c < 1 || c > max_c {
        return Err(Error::Usage(format!(
            "PCA component count {c} out of range [1, {max_c}]"
        )));
    }
    let mean = x.row_mean().transpose();
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        row -= mean.transpose();
    }
    if xc.norm() == 0.0 {
        return Err(Error::Numeric("PCA input has zero variance".into()));
    }
    let mut svd = xc.svd(true, true);
    svd.sort_by_singular_values();
    let v_t = svd.v_t.expect("svd with v_t");
    let total: f64 = svd.singular_values.iter().map(|s| s * s).sum();
    let loadings = DMatrix::from_fn(m, c, |i, j| v_t[(j, i)]);
    let explained_variance_ratio = svd
        .singular_values
        .iter()
        .take(c)
        .map(|s| s * s / total)
        .collect();
    Ok(PcaModel {
        mean,
        loadings,
        explained_variance_ratio,
    })
}

/// Scores = (X - mean) . loadings.
pub fn project(model: &PcaModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = model.mean.len();
    if x.ncols() != m {
        return Err(Error::Data(format!(
            "PCA model expects {m} features, got {}",
            x.ncols()
        )));
    }
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        row -= model.mean.transpose();
    }
    Ok(xc * &model.loadings)
}
