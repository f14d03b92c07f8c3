//! Singular Spectrum Analysis: embed a series into a Hankel trajectory
//! matrix, decompose by SVD, and reconstruct selected components by
//! diagonal averaging. Used as the smoothing stage of the pretreatment
//! pipeline.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// SSA smoothing configuration.
///
/// `energy_threshold`, when set, overrides `rank`: the smallest r whose
/// cumulative squared singular values reach the threshold is kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsaConfig {
    pub window_len: usize,
    pub rank: usize,
    pub energy_threshold: Option<f64>,
}

impl Default for SsaConfig {
    fn default() -> Self {
        Self {
            window_len: 50,
            rank: 10,
            energy_threshold: None,
        }
    }
}

impl SsaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len < 2 {
            return Err(Error::Usage("ssa.window_len must be >= 2".into()));
        }
        if self.rank < 1 {
            return Err(Error::Usage("ssa.rank must be >= 1".into()));
        }
        if let Some(th) = self.energy_threshold {
            if !(th > 0.0 && th <= 1.0) {
                return Err(Error::Usage(
                    "ssa.energy_threshold must lie in (0, 1]".into(),
                ));
            }
        }
        Ok(())
    }
}

/// SVD of the trajectory matrix of a series.
#[derive(Debug, Clone)]
pub struct SsaDecomposition {
    /// Nonincreasing, all >= 0; length d = min(L, K).
    pub singular_values: DVector<f64>,
    /// L x d, orthonormal columns.
    pub left_vectors: DMatrix<f64>,
    /// K x d, orthonormal columns.
    pub right_vectors: DMatrix<f64>,
    pub series_length: usize,
    pub window_len: usize,
}

impl SsaDecomposition {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }
}

/// SVD of the L x (n-L+1) trajectory matrix whose column j is
/// series[j .. j+L-1].
pub fn decompose(series: &[f64], window_len: usize) -> Result<SsaDecomposition> {
    let n = series.len();
    if n < 4 {
        return Err(Error::Data(format!(
            "SSA needs a series of length >= 4, got {n}"
        )));
    }
    if window_len < 2 || window_len > n / 2 {
        return Err(Error::Usage(format!(
            "SSA window {window_len} out of range [2, {}] for series length {n}",
            n / 2
        )));
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("SSA input contains non-finite values".into()));
    }
    let l = window_len;
    let k = n - l + 1;
    let traj = DMatrix::from_fn(l, k, |a, j| series[j + a]);
    let mut svd = traj.svd(true, true);
    svd.sort_by_singular_values();
    let u = svd.u.expect("svd with u");
    let v_t = svd.v_t.expect("svd with v_t");
    let d = svd.singular_values.len();
    Ok(SsaDecomposition {
        singular_values: DVector::from_iterator(d, svd.singular_values.iter().copied()),
        left_vectors: u,
        right_vectors: v_t.transpose(),
        series_length: n,
        window_len: l,
    })
}

/// Reconstruct the series contribution of the selected components
/// (0-based indices) by diagonal averaging of the elementary matrices.
pub fn reconstruct(dec: &SsaDecomposition, components: &[usize]) -> Result<Vec<f64>> {
    if components.is_empty() {
        return Err(Error::Usage("empty component index set".into()));
    }
    let d = dec.rank();
    if let Some(bad) = components.iter().find(|&&i| i >= d) {
        return Err(Error::Usage(format!(
            "component index {bad} out of range (decomposition has {d})"
        )));
    }
    let n = dec.series_length;
    let l = dec.window_len;
    let k = n - l + 1;
    let mut out = vec![0.0; n];
    for &c in components {
        let sigma = dec.singular_values[c];
        for a in 0..l {
            let ua = sigma * dec.left_vectors[(a, c)];
            for b in 0..k {
                out[a + b] += ua * dec.right_vectors[(b, c)];
            }
        }
    }
    for (t, v) in out.iter_mut().enumerate() {
        // antidiagonal a+b = t has min(t+1, L, K, n-t) cells
        let count = (t + 1).min(l).min(k).min(n - t);
        *v /= count as f64;
    }
    Ok(out)
}

/// Smooth a series: decompose its mean-centered form, keep the leading
/// components per the config, reconstruct, and restore the mean. Centering
/// makes smoothing exactly translation-equivariant.
pub fn smooth(series: &[f64], cfg: &SsaConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
    let dec = decompose(&centered, cfg.window_len)?;

    let d = dec.rank();
    let total: f64 = dec.singular_values.iter().map(|s| s * s).sum();
    if total == 0.0 {
        // constant series: nothing to smooth
        return Ok(series.to_vec());
    }
    let r = match cfg.energy_threshold {
        Some(th) => {
            let mut acc = 0.0;
            let mut r = d;
            for (i, s) in dec.singular_values.iter().enumerate() {
                acc += s * s;
                if acc >= th * total {
                    r = i + 1;
                    break;
                }
            }
            r
        }
        None => cfg.rank.min(d),
    };
    let components: Vec<usize> = (0..r).collect();
    let rec = reconstruct(&dec, &components)?;
    Ok(rec.into_iter().map(|v| v + mean).collect())
}
