//! Model quality metrics (RMSE, ME, R2), the corrected Akaike information
//! criterion, leave-one-out cross-validation and component-count selection.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::pls;
use crate::{Error, Result};

/// RMSE (1/n convention), mean signed error and coefficient of
/// determination for one prediction/measurement pairing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub rmse: f64,
    pub me: f64,
    pub r2: f64,
    pub n: usize,
}

/// rmse = sqrt(mean((pred-actual)^2)), me = mean(pred-actual),
/// r2 = 1 - SS_res/SS_tot. Errors if actual has zero variance.
pub fn evaluate(predicted: &[f64], actual: &[f64]) -> Result<MetricsReport> {
    let n = predicted.len();
    if n != actual.len() {
        return Err(Error::Data(format!(
            "length mismatch: {n} predictions vs {} measurements",
            actual.len()
        )));
    }
    if n < 2 {
        return Err(Error::Data("need at least 2 samples for metrics".into()));
    }
    let mean_actual = actual.iter().sum::<f64>() / n as f64;
    let ss_tot: f64 = actual.iter().map(|y| (y - mean_actual).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Numeric(
            "R2 undefined: zero variance in measured values".into(),
        ));
    }
    let mut ss_res = 0.0;
    let mut sum_err = 0.0;
    for (p, y) in predicted.iter().zip(actual) {
        let e = p - y;
        ss_res += e * e;
        sum_err += e;
    }
    Ok(MetricsReport {
        rmse: (ss_res / n as f64).sqrt(),
        me: sum_err / n as f64,
        r2: 1.0 - ss_res / ss_tot,
        n,
    })
}

/// AICc = n ln(RMSE^2) + 2p + 2p(p+1)/(n-p-1).
pub fn aicc(n: usize, p: usize, rmse: f64) -> Result<f64> {
    if n <= p + 1 {
        return Err(Error::Numeric(format!(
            "AICc undefined for n = {n}, p = {p} (n must exceed p + 1)"
        )));
    }
    if rmse <= 0.0 {
        return Err(Error::Numeric(format!("AICc needs rmse > 0, got {rmse}")));
    }
    let nf = n as f64;
    let pf = p as f64;
    Ok(nf * (rmse * rmse).ln() + 2.0 * pf + 2.0 * pf * (pf + 1.0) / (nf - pf - 1.0))
}

/// Result of the shared LOOCV sweep: `preds[(i, h)]` is the prediction of
/// held-out sample i by a model with h+1 components fit on the others;
/// `achieved[i]` is how many components that subset supported.
struct LoocvSweep {
    preds: DMatrix<f64>,
    achieved: Vec<usize>,
}

fn loocv_sweep(x: &DMatrix<f64>, y: &DVector<f64>, p_max: usize) -> Result<LoocvSweep> {
    let n = x.nrows();
    if n < 3 {
        return Err(Error::Data(format!("LOOCV needs n >= 3, got {n}")));
    }
    let results: Vec<Result<(Vec<f64>, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x_sub = x.clone().remove_row(i);
            let y_sub = y.clone().remove_row(i);
            let sweep = pls::fit_sweep(&x_sub, &y_sub, p_max).map_err(|e| {
                Error::Numeric(format!("LOOCV fit holding out sample {i} failed: {e}"))
            })?;
            let row = x.row(i).transpose();
            let achieved = sweep.achieved();
            let mut preds = vec![f64::NAN; p_max];
            for (h, item) in preds.iter_mut().enumerate().take(achieved.min(p_max)) {
                *item = sweep.predict_row(&row, h + 1);
            }
            Ok((preds, achieved))
        })
        .collect();

    let mut preds = DMatrix::from_element(n, p_max, f64::NAN);
    let mut achieved = vec![0usize; n];
    for (i, r) in results.into_iter().enumerate() {
        let (row, a) = r?;
        for (h, v) in row.into_iter().enumerate() {
            preds[(i, h)] = v;
        }
        achieved[i] = a;
    }
    Ok(LoocvSweep { preds, achieved })
}

/// Leave-one-out predictions at a fixed component count. Prediction i comes
/// from a model fit on all samples except i; order preserved.
pub fn loocv_predictions(x: &DMatrix<f64>, y: &DVector<f64>, p: usize) -> Result<Vec<f64>> {
    let sweep = loocv_sweep(x, y, p)?;
    for (i, &a) in sweep.achieved.iter().enumerate() {
        if a < p {
            return Err(Error::Numeric(format!(
                "holding out sample {i}: achievable rank {a} < requested p = {p}"
            )));
        }
    }
    Ok((0..x.nrows()).map(|i| sweep.preds[(i, p - 1)]).collect())
}

/// Outcome of AICc-driven component selection.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub best_p: usize,
    pub aicc_by_p: BTreeMap<usize, f64>,
    pub rmse_by_p: BTreeMap<usize, f64>,
    pub loocv_predictions_best: Vec<f64>,
    /// Component counts in the requested range that were skipped, with the
    /// reason.
    pub skipped: Vec<(usize, String)>,
}

/// For each feasible p in the range: LOOCV predictions -> RMSE -> AICc with
/// n = number of calibration samples. Returns the argmin, ties resolved to
/// the smallest p. Infeasible p values are skipped, not fatal.
pub fn select_components(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    p_range: RangeInclusive<usize>,
) -> Result<SelectionResult> {
    let (lo, hi) = (*p_range.start(), *p_range.end());
    if lo < 1 || lo > hi {
        return Err(Error::Usage(format!("empty component range {lo}..={hi}")));
    }
    let n = x.nrows();
    let m = x.ncols();
    // the largest p any (n-1)-subset could support
    let p_cap = hi.min(n.saturating_sub(2)).min(m);
    if p_cap < lo {
        return Err(Error::Numeric(format!(
            "no feasible component count in {lo}..={hi} for {n} samples x {m} features"
        )));
    }
    let sweep = loocv_sweep(x, y, p_cap)?;
    let min_achieved = sweep.achieved.iter().copied().min().unwrap_or(0);

    let actual: Vec<f64> = y.iter().copied().collect();
    let mut aicc_by_p = BTreeMap::new();
    let mut rmse_by_p = BTreeMap::new();
    let mut skipped = Vec::new();
    for p in lo..=hi {
        if p > p_cap || p > min_achieved {
            skipped.push((
                p,
                format!("p = {p} exceeds the achievable rank of a leave-one-out subset"),
            ));
            continue;
        }
        if n <= p + 1 {
            skipped.push((p, format!("p = {p} leaves no AICc denominator at n = {n}")));
            continue;
        }
        let preds: Vec<f64> = (0..n).map(|i| sweep.preds[(i, p - 1)]).collect();
        let rmse = {
            let ss: f64 = preds
                .iter()
                .zip(&actual)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (ss / n as f64).sqrt()
        };
        match aicc(n, p, rmse) {
            Ok(v) => {
                rmse_by_p.insert(p, rmse);
                aicc_by_p.insert(p, v);
            }
            Err(e) => skipped.push((p, e.to_string())),
        }
    }

    let best_p = aicc_by_p
        .iter()
        .fold(None::<(usize, f64)>, |best, (&p, &v)| match best {
            Some((_, bv)) if v >= bv => best,
            _ => Some((p, v)),
        })
        .map(|(p, _)| p)
        .ok_or_else(|| {
            Error::Numeric(format!(
                "no feasible component count in {lo}..={hi}: {}",
                skipped
                    .iter()
                    .map(|(p, r)| format!("p={p}: {r}"))
                    .collect::<Vec<_>>()
                    .join("; ")
            ))
        })?;

    let loocv_predictions_best = (0..n).map(|i| sweep.preds[(i, best_p - 1)]).collect();
    Ok(SelectionResult {
        best_p,
        aicc_by_p,
        rmse_by_p,
        loocv_predictions_best,
        skipped,
    })
}
