//! Single-response partial least squares regression (NIPALS PLS1) with
//! mean-centering only, plus flat-file model persistence.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Fitted PLS1 model.
#[derive(Debug, Clone, PartialEq)]
pub struct PlsModel {
    pub x_mean: DVector<f64>,
    pub y_mean: f64,
    /// n_features x p
    pub weights: DMatrix<f64>,
    /// n_features x p
    pub x_loadings: DMatrix<f64>,
    /// length p
    pub y_loadings: DVector<f64>,
    /// The latent-variable predictor collapsed to a single linear map.
    pub regression_coefficients: DVector<f64>,
    pub n_components: usize,
}

/// Internals shared by `fit` and the LOOCV sweep: coefficient vectors for
/// every component-count prefix 1..=achieved.
pub(crate) struct PlsSweep {
    pub x_mean: DVector<f64>,
    pub y_mean: f64,
    pub weights: Vec<DVector<f64>>,
    pub x_loadings: Vec<DVector<f64>>,
    pub y_loadings: Vec<f64>,
    /// coefficients_by_p[h] predicts with h+1 components
    pub coefficients_by_p: Vec<DVector<f64>>,
}

impl PlsSweep {
    pub fn achieved(&self) -> usize {
        self.coefficients_by_p.len()
    }

    pub fn predict_row(&self, row: &DVector<f64>, p: usize) -> f64 {
        let centered = row - &self.x_mean;
        self.y_mean + centered.dot(&self.coefficients_by_p[p - 1])
    }
}

/// NIPALS PLS1 on mean-centered data, up to `p_max` components or the
/// achievable rank, whichever comes first.
pub(crate) fn fit_sweep(x: &DMatrix<f64>, y: &DVector<f64>, p_max: usize) -> Result<PlsSweep> {
    let n = x.nrows();
    let m = x.ncols();
    if n < 2 {
        return Err(Error::Data(format!("PLS needs n >= 2 samples, got {n}")));
    }
    if y.len() != n {
        return Err(Error::Data(format!(
            "X has {n} rows but y has {} entries",
            y.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("PLS input contains non-finite values".into()));
    }

    let x_mean = x.row_mean().transpose();
    let y_mean = y.mean();
    let mut e = x.clone();
    for mut row in e.row_iter_mut() {
        row -= x_mean.transpose();
    }
    let mut f = y.map(|v| v - y_mean);

    let y_ss = f.norm_squared();
    if y_ss <= f64::EPSILON * (n as f64) * y_mean.abs().max(1.0).powi(2) {
        return Err(Error::Numeric("zero-variance response".into()));
    }

    let x_scale = e.norm(); // centered Frobenius norm
    let tol = 1e-12 * x_scale.max(f64::MIN_POSITIVE);

    let mut weights = Vec::new();
    let mut x_loadings = Vec::new();
    let mut y_loadings = Vec::new();
    let mut r_basis: Vec<DVector<f64>> = Vec::new(); // W (P^T W)^-1, built incrementally
    let mut coef = DVector::zeros(m);
    let mut coefficients_by_p = Vec::new();

    for _ in 0..p_max {
        let mut w = e.transpose() * &f;
        let w_norm = w.norm();
        if w_norm <= tol * f.norm().max(1.0) || w_norm == 0.0 {
            break; // residual X (or y) carries no covariance: rank exhausted
        }
        w /= w_norm;
        let t = &e * &w;
        let tt = t.norm_squared();
        if tt <= tol * tol {
            break;
        }
        let p_load = e.transpose() * &t / tt;
        let q = f.dot(&t) / tt;
        e -= &t * p_load.transpose();
        f -= q * &t;

        // r_h = w_h - sum_j (p_j . w_h) r_j   gives coefficients incrementally
        let mut r = w.clone();
        for (pj, rj) in x_loadings.iter().zip(&r_basis) {
            let proj: f64 = DVector::dot(pj, &w);
            r -= proj * rj;
        }
        coef += q * &r;

        weights.push(w);
        x_loadings.push(p_load);
        y_loadings.push(q);
        r_basis.push(r);
        coefficients_by_p.push(coef.clone());
    }

    if coefficients_by_p.is_empty() {
        return Err(Error::Numeric(
            "degenerate X: no PLS component could be extracted (achievable rank 0)".into(),
        ));
    }

    Ok(PlsSweep {
        x_mean,
        y_mean,
        weights,
        x_loadings,
        y_loadings,
        coefficients_by_p,
    })
}

/// Fit a PLS1 model with exactly `p` components; errors (naming the
/// achievable rank) if the data cannot support them.
pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>, p: usize) -> Result<PlsModel> {
    let n = x.nrows();
    let m = x.ncols();
    if p < 1 || p > (n.saturating_sub(1)).min(m) {
        return Err(Error::Usage(format!(
            "p = {p} out of range [1, {}] for {n} samples x {m} features",
            (n.saturating_sub(1)).min(m)
        )));
    }
    let sweep = fit_sweep(x, y, p)?;
    let achieved = sweep.achieved();
    if achieved < p {
        return Err(Error::Numeric(format!(
            "requested {p} components but the achievable rank is {achieved}"
        )));
    }
    let weights = DMatrix::from_columns(&sweep.weights);
    let x_loadings = DMatrix::from_columns(&sweep.x_loadings);
    let y_loadings = DVector::from_vec(sweep.y_loadings.clone());
    Ok(PlsModel {
        x_mean: sweep.x_mean.clone(),
        y_mean: sweep.y_mean,
        weights,
        x_loadings,
        y_loadings,
        regression_coefficients: sweep.coefficients_by_p[p - 1].clone(),
        n_components: p,
    })
}

/// Predict: y_mean + (X - x_mean) . coefficients, row by row.
pub fn predict(model: &PlsModel, x: &DMatrix<f64>) -> Result<DVector<f64>> {
    let m = model.x_mean.len();
    if x.ncols() != m {
        return Err(Error::Data(format!(
            "model expects {m} features, got {}",
            x.ncols()
        )));
    }
    let q = x.nrows();
    let mut out = DVector::zeros(q);
    for i in 0..q {
        let centered = x.row(i).transpose() - &model.x_mean;
        out[i] = model.y_mean + centered.dot(&model.regression_coefficients);
    }
    Ok(out)
}

/// Persist a model to a flat CSV with named sections, loadable by any
/// implementation: `section,row,col,value`.
pub fn write_model_csv(model: &PlsModel, path: &Path) -> Result<()> {
    let mut out = String::from("section,row,col,value\n");
    out.push_str(&format!("n_components,0,0,{}\n", model.n_components));
    out.push_str(&format!("y_mean,0,0,{}\n", model.y_mean));
    for (i, v) in model.x_mean.iter().enumerate() {
        out.push_str(&format!("x_mean,{i},0,{v}\n"));
    }
    for j in 0..model.weights.ncols() {
        for i in 0..model.weights.nrows() {
            out.push_str(&format!("weights,{i},{j},{}\n", model.weights[(i, j)]));
        }
    }
    for j in 0..model.x_loadings.ncols() {
        for i in 0..model.x_loadings.nrows() {
            out.push_str(&format!("x_loadings,{i},{j},{}\n", model.x_loadings[(i, j)]));
        }
    }
    for (j, v) in model.y_loadings.iter().enumerate() {
        out.push_str(&format!("y_loadings,{j},0,{v}\n"));
    }
    for (i, v) in model.regression_coefficients.iter().enumerate() {
        out.push_str(&format!("coefficients,{i},0,{v}\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Load a model written by `write_model_csv`.
pub fn read_model_csv(path: &Path) -> Result<PlsModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut n_components = None;
    let mut y_mean = None;
    let mut x_mean: Vec<(usize, f64)> = Vec::new();
    let mut weights: Vec<(usize, usize, f64)> = Vec::new();
    let mut x_loadings: Vec<(usize, usize, f64)> = Vec::new();
    let mut y_loadings: Vec<(usize, f64)> = Vec::new();
    let mut coefficients: Vec<(usize, f64)> = Vec::new();

    for (idx, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 4 {
            return Err(Error::csv(path, lineno, "expected 4 cells"));
        }
        let row: usize = cells[1]
            .parse()
            .map_err(|_| Error::csv(path, lineno, "bad row index"))?;
        let col: usize = cells[2]
            .parse()
            .map_err(|_| Error::csv(path, lineno, "bad col index"))?;
        let value: f64 = cells[3]
            .parse()
            .map_err(|_| Error::csv(path, lineno, "bad value"))?;
        match cells[0] {
            "n_components" => n_components = Some(value as usize),
            "y_mean" => y_mean = Some(value),
            "x_mean" => x_mean.push((row, value)),
            "weights" => weights.push((row, col, value)),
            "x_loadings" => x_loadings.push((row, col, value)),
            "y_loadings" => y_loadings.push((row, value)),
            "coefficients" => coefficients.push((row, value)),
            other => {
                return Err(Error::csv(path, lineno, format!("unknown section '{other}'")))
            }
        }
    }

    let p = n_components.ok_or_else(|| Error::csv(path, 0, "missing n_components"))?;
    let y_mean = y_mean.ok_or_else(|| Error::csv(path, 0, "missing y_mean"))?;
    let m = x_mean.len();
    if m == 0 || coefficients.len() != m || y_loadings.len() != p {
        return Err(Error::csv(path, 0, "inconsistent model sections"));
    }
    let vec_from = |items: Vec<(usize, f64)>| {
        let mut v = vec![0.0; items.len()];
        for (i, val) in items {
            v[i] = val;
        }
        DVector::from_vec(v)
    };
    let mat_from = |items: Vec<(usize, usize, f64)>, rows: usize, cols: usize| {
        let mut mat = DMatrix::zeros(rows, cols);
        for (i, j, val) in items {
            mat[(i, j)] = val;
        }
        mat
    };
    Ok(PlsModel {
        x_mean: vec_from(x_mean),
        y_mean,
        weights: mat_from(weights, m, p),
        x_loadings: mat_from(x_loadings, m, p),
        y_loadings: vec_from(y_loadings),
        regression_coefficients: vec_from(coefficients),
        n_components: p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, m, |_, _| rng.gen::<f64>() * 2.0 - 1.0)
    }

    /// Least-squares oracle on centered data via SVD.
    pub fn ols_fitted(x: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let n = x.nrows();
        let x_mean = x.row_mean().transpose();
        let y_mean = y.mean();
        let mut xc = x.clone();
        for mut row in xc.row_iter_mut() {
            row -= x_mean.transpose();
        }
        let yc = y.map(|v| v - y_mean);
        let svd = xc.clone().svd(true, true);
        let beta = svd.solve(&yc, 1e-12).unwrap();
        let mut fitted = DVector::zeros(n);
        let pred = &xc * &beta;
        for i in 0..n {
            fitted[i] = y_mean + pred[i];
        }
        (beta, fitted)
    }

    #[test]
    fn one_component_exact_on_orthogonal_column() {
        // first column orthogonal to the rest; y = 2 * first column
        let mut x = DMatrix::zeros(6, 3);
        let c0 = [1.0, -1.0, 2.0, -2.0, 0.5, -0.5];
        for (i, v) in c0.iter().enumerate() {
            x[(i, 0)] = *v;
        }
        // other columns orthogonal to c0 (and mean-free)
        x[(0, 1)] = 1.0;
        x[(1, 1)] = 1.0;
        x[(2, 1)] = -1.0;
        x[(3, 1)] = -1.0;
        x[(0, 2)] = 1.0;
        x[(1, 2)] = 1.0;
        x[(4, 2)] = -1.0;
        x[(5, 2)] = -1.0;
        let y = DVector::from_iterator(6, c0.iter().map(|v| 2.0 * v));
        let model = fit(&x, &y, 1).unwrap();
        let pred = predict(&model, &x).unwrap();
        for i in 0..6 {
            assert!((pred[i] - y[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn full_rank_matches_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let x = random_matrix(&mut rng, 8, 5);
        let y = DVector::from_fn(8, |_, _| rng.gen::<f64>() * 10.0);
        let model = fit(&x, &y, 5).unwrap();
        let (beta, fitted) = ols_fitted(&x, &y);
        for j in 0..5 {
            assert!((model.regression_coefficients[j] - beta[j]).abs() < 1e-8);
        }
        let pred = predict(&model, &x).unwrap();
        for i in 0..8 {
            assert!((pred[i] - fitted[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_y_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let x = random_matrix(&mut rng, 5, 3);
        let y = DVector::from_element(5, 4.2);
        let err = fit(&x, &y, 2).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
    }

    #[test]
    fn rank_deficient_names_achievable_rank() {
        // rank-1 X cannot support 3 components
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let u = DVector::from_fn(6, |_, _| rng.gen::<f64>());
        let v = DVector::from_fn(4, |_, _| rng.gen::<f64>());
        let x = &u * v.transpose();
        let y = DVector::from_fn(6, |i, _| u[i] + 0.0);
        let err = fit(&x, &y, 3).unwrap_err().to_string();
        assert!(err.contains("achievable rank"), "{err}");
    }

    #[test]
    fn predict_mean_row_gives_y_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let x = random_matrix(&mut rng, 7, 4);
        let y = DVector::from_fn(7, |_, _| rng.gen::<f64>());
        let model = fit(&x, &y, 2).unwrap();
        let mean_row = DMatrix::from_fn(1, 4, |_, j| model.x_mean[j]);
        let pred = predict(&model, &mean_row).unwrap();
        assert!((pred[0] - model.y_mean).abs() < 1e-12);
    }

    #[test]
    fn predict_empty_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let x = random_matrix(&mut rng, 5, 3);
        let y = DVector::from_fn(5, |_, _| rng.gen::<f64>());
        let model = fit(&x, &y, 2).unwrap();
        let empty = DMatrix::<f64>::zeros(0, 3);
        assert_eq!(predict(&model, &empty).unwrap().len(), 0);
    }

    #[test]
    fn prediction_is_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let x = random_matrix(&mut rng, 9, 6);
        let y = DVector::from_fn(9, |_, _| rng.gen::<f64>() * 3.0);
        let model = fit(&x, &y, 3).unwrap();
        let x1 = DVector::from_fn(6, |_, _| rng.gen::<f64>());
        let x2 = DVector::from_fn(6, |_, _| rng.gen::<f64>());
        let alpha = 0.37;
        let mix = &x1 * alpha + &x2 * (1.0 - alpha);
        let rows = DMatrix::from_rows(&[
            x1.transpose(),
            x2.transpose(),
            mix.transpose(),
        ]);
        let pred = predict(&model, &rows).unwrap();
        assert!((pred[2] - (alpha * pred[0] + (1.0 - alpha) * pred[1])).abs() < 1e-10);
    }

    #[test]
    fn training_rmse_monotone_in_p() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let x = random_matrix(&mut rng, 10, 6);
        let y = DVector::from_fn(10, |_, _| rng.gen::<f64>() * 5.0);
        let mut prev = f64::INFINITY;
        for p in 1..=6 {
            let model = fit(&x, &y, p).unwrap();
            let pred = predict(&model, &x).unwrap();
            let rmse = ((&pred - &y).norm_squared() / 10.0).sqrt();
            assert!(rmse <= prev + 1e-10, "p={p}: {rmse} > {prev}");
            prev = rmse;
        }
    }

    #[test]
    fn scores_are_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let x = random_matrix(&mut rng, 12, 7);
        let y = DVector::from_fn(12, |_, _| rng.gen::<f64>());
        let sweep = fit_sweep(&x, &y, 5).unwrap();
        // recompute scores by replaying deflation
        let mut e = x.clone();
        let x_mean = x.row_mean().transpose();
        for mut row in e.row_iter_mut() {
            row -= x_mean.transpose();
        }
        let mut scores = Vec::new();
        for h in 0..sweep.achieved() {
            let t = &e * &sweep.weights[h];
            e -= &t * sweep.x_loadings[h].transpose();
            scores.push(t);
        }
        for i in 0..scores.len() {
            for j in 0..i {
                let dot = scores[i].dot(&scores[j]);
                let scale = scores[i].norm() * scores[j].norm();
                assert!(dot.abs() < 1e-8 * scale);
            }
        }
    }

    #[test]
    fn model_csv_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let x = random_matrix(&mut rng, 8, 4);
        let y = DVector::from_fn(8, |_, _| rng.gen::<f64>() * 2.0);
        let model = fit(&x, &y, 3).unwrap();
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.csv");
        write_model_csv(&model, &path).unwrap();
        let loaded = read_model_csv(&path).unwrap();
        assert_eq!(loaded, model);
    }
}
