//! Monte Carlo replication of the SMOTE -> spike -> select -> validate
//! pipeline, with median / quartile aggregation and a representative-
//! replicate rule for reporting.

use rayon::prelude::*;

use crate::preprocess::{self, PreprocessConfig};
use crate::selection::{self, MetricsReport};
use crate::smoter::{self, SmoteParams, SyntheticSample};
use crate::spectra::{assert_same_grid, DatasetTag, LabeledSet};
use crate::{pls, Error, Result};

/// Batch configuration. The SMOTE seed is ignored: each replicate derives
/// its own seed from `master_seed`.
#[derive(Debug, Clone)]
pub struct McConfig {
    pub smote: SmoteParams,
    pub preprocess: PreprocessConfig,
    pub p_min: usize,
    pub p_max: usize,
    pub reps: usize,
    pub master_seed: u64,
}

/// One successful replicate: the selected component count, the LOOCV
/// metrics on the spiked calibration set and the validation metrics on F.
#[derive(Debug, Clone)]
pub struct ReplicateRecord {
    pub replicate_index: usize,
    pub seed: u64,
    pub smote_params: SmoteParams,
    pub best_p: usize,
    pub calibration: MetricsReport,
    pub validation: MetricsReport,
}

/// A replicate that failed; the batch carries on.
#[derive(Debug, Clone)]
pub struct ReplicateFailure {
    pub replicate_index: usize,
    pub seed: u64,
    pub message: String,
}

pub type ReplicateOutcome = std::result::Result<ReplicateRecord, ReplicateFailure>;

/// Everything needed to report one replicate in full: per-sample LOOCV and
/// validation predictions plus the synthetic set it used.
#[derive(Debug, Clone)]
pub struct ReplicateDetail {
    pub record: ReplicateRecord,
    pub synthetic_raw: LabeledSet,
    pub synthetic_samples: Vec<SyntheticSample>,
    pub calibration_ids: Vec<String>,
    pub calibration_targets: Vec<f64>,
    pub loocv_predictions: Vec<f64>,
    pub validation_ids: Vec<String>,
    pub validation_targets: Vec<f64>,
    pub validation_predictions: Vec<f64>,
}

/// Seed for replicate `index`: one splitmix64 output at the index-th
/// golden-gamma increment past the master seed. Any replicate can be
/// re-run in isolation from (master_seed, index).
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = master_seed.wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn run_replicate(
    lab: &LabeledSet,
    field: &LabeledSet,
    cfg: &McConfig,
    index: usize,
) -> Result<ReplicateDetail> {
    let seed = derive_seed(cfg.master_seed, index as u64);
    run_replicate_seeded(lab, field, cfg, index, seed)
}

fn run_replicate_seeded(
    lab: &LabeledSet,
    field: &LabeledSet,
    cfg: &McConfig,
    index: usize,
    seed: u64,
) -> Result<ReplicateDetail> {
    let params = SmoteParams { seed, ..cfg.smote };

    let synthetic_samples = smoter::generate_samples(field, &params)?;
    let spectra = synthetic_samples.iter().map(|s| s.spectrum.clone()).collect();
    let targets = synthetic_samples.iter().map(|s| s.target).collect();
    let synthetic_raw = LabeledSet::new(spectra, targets, DatasetTag::Synthetic)?;

    let calibration_raw = LabeledSet::concat(lab, &synthetic_raw, DatasetTag::Lab)?;
    let calibration = preprocess::run_pipeline(&calibration_raw, &cfg.preprocess)?;
    let validation = preprocess::run_pipeline(field, &cfg.preprocess)?;

    let x_cal = calibration.to_matrix();
    let y_cal = calibration.target_vector();
    let sel = selection::select_components(&x_cal, &y_cal, cfg.p_min..=cfg.p_max)?;
    let cal_metrics = selection::evaluate(&sel.loocv_predictions_best, &calibration.targets)?;

    let model = pls::fit(&x_cal, &y_cal, sel.best_p)?;
    let x_val = validation.to_matrix();
    let val_pred = pls::predict(&model, &x_val)?;
    let val_pred: Vec<f64> = val_pred.iter().copied().collect();
    let val_metrics = selection::evaluate(&val_pred, &validation.targets)?;

    Ok(ReplicateDetail {
        record: ReplicateRecord {
            replicate_index: index,
            seed,
            smote_params: params,
            best_p: sel.best_p,
            calibration: cal_metrics,
            validation: val_metrics,
        },
        synthetic_raw,
        synthetic_samples,
        calibration_ids: calibration.spectra.iter().map(|s| s.id.clone()).collect(),
        calibration_targets: calibration.targets.clone(),
        loocv_predictions: sel.loocv_predictions_best,
        validation_ids: validation.spectra.iter().map(|s| s.id.clone()).collect(),
        validation_targets: validation.targets.clone(),
        validation_predictions: val_pred,
    })
}

/// Re-run a single replicate with full per-sample output.
pub fn run_replicate_detail(
    lab: &LabeledSet,
    field: &LabeledSet,
    cfg: &McConfig,
    index: usize,
) -> Result<ReplicateDetail> {
    assert_same_grid(lab, field)?;
    run_replicate(lab, field, cfg, index)
}

/// Re-run a replicate from an explicitly stored seed (as recorded in
/// `replicates.csv`), bypassing the derivation from the master seed.
pub fn run_replicate_with_seed(
    lab: &LabeledSet,
    field: &LabeledSet,
    cfg: &McConfig,
    index: usize,
    seed: u64,
) -> Result<ReplicateDetail> {
    assert_same_grid(lab, field)?;
    run_replicate_seeded(lab, field, cfg, index, seed)
}

/// Run all replicates (in parallel; output ordered by index). Individual
/// failures become `ReplicateFailure` entries; the batch errors only if
/// every replicate failed.
pub fn run_replicates(
    lab: &LabeledSet,
    field: &LabeledSet,
    cfg: &McConfig,
) -> Result<Vec<ReplicateOutcome>> {
    if cfg.reps < 1 {
        return Err(Error::Usage("mc.reps must be >= 1".into()));
    }
    assert_same_grid(lab, field)?;
    let outcomes: Vec<ReplicateOutcome> = (0..cfg.reps)
        .into_par_iter()
        .map(|i| {
            run_replicate(lab, field, cfg, i)
                .map(|d| d.record)
                .map_err(|e| ReplicateFailure {
                    replicate_index: i,
                    seed: derive_seed(cfg.master_seed, i as u64),
                    message: e.to_string(),
                })
        })
        .collect();
    if outcomes.iter().all(|o| o.is_err()) {
        let first = outcomes[0].as_ref().err().unwrap();
        return Err(Error::Numeric(format!(
            "all {} replicates failed; first failure: {}",
            cfg.reps, first.message
        )));
    }
    Ok(outcomes)
}

/// Median and 25%/75% quantiles of one metric across replicates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileSummary {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

/// Type-7 quantile (linear interpolation between order statistics) of an
/// unsorted sample.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n == 1 {
        return v[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn summarize(values: &[f64]) -> QuantileSummary {
    QuantileSummary {
        q25: quantile(values, 0.25),
        median: quantile(values, 0.5),
        q75: quantile(values, 0.75),
    }
}

/// Quantile summaries over the successful replicates of a batch.
#[derive(Debug, Clone)]
pub struct AggregateReport {
    pub best_p: QuantileSummary,
    pub cal_rmse: QuantileSummary,
    pub cal_r2: QuantileSummary,
    pub cal_me: QuantileSummary,
    pub val_rmse: QuantileSummary,
    pub val_r2: QuantileSummary,
    pub val_me: QuantileSummary,
    pub n_success: usize,
    pub n_failed: usize,
}

pub fn aggregate(outcomes: &[ReplicateOutcome]) -> Result<AggregateReport> {
    let records: Vec<&ReplicateRecord> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    if records.is_empty() {
        return Err(Error::Numeric("no successful replicates to aggregate".into()));
    }
    let col = |f: &dyn Fn(&ReplicateRecord) -> f64| -> Vec<f64> {
        records.iter().map(|r| f(r)).collect()
    };
    Ok(AggregateReport {
        best_p: summarize(&col(&|r| r.best_p as f64)),
        cal_rmse: summarize(&col(&|r| r.calibration.rmse)),
        cal_r2: summarize(&col(&|r| r.calibration.r2)),
        cal_me: summarize(&col(&|r| r.calibration.me)),
        val_rmse: summarize(&col(&|r| r.validation.rmse)),
        val_r2: summarize(&col(&|r| r.validation.r2)),
        val_me: summarize(&col(&|r| r.validation.me)),
        n_success: records.len(),
        n_failed: outcomes.len() - records.len(),
    })
}

/// The representative replicate: among those whose best_p equals the
/// median component count (snapped to the nearest attained value, downward
/// on half), the one with the largest validation R2; ties go to the
/// smallest replicate index.
pub fn pick_representative(outcomes: &[ReplicateOutcome]) -> Result<&ReplicateRecord> {
    let records: Vec<&ReplicateRecord> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    if records.is_empty() {
        return Err(Error::Numeric("no successful replicates".into()));
    }
    let ps: Vec<f64> = records.iter().map(|r| r.best_p as f64).collect();
    let med = quantile(&ps, 0.5);
    // snap to the nearest attained value, preferring the smaller on ties
    let mut attained: Vec<usize> = records.iter().map(|r| r.best_p).collect();
    attained.sort_unstable();
    attained.dedup();
    let snapped = attained
        .iter()
        .copied()
        .min_by(|&a, &b| {
            let da = (a as f64 - med).abs();
            let db = (b as f64 - med).abs();
            da.partial_cmp(&db).unwrap().then(a.cmp(&b))
        })
        .unwrap();
    let best = records
        .iter()
        .filter(|r| r.best_p == snapped)
        .max_by(|a, b| {
            a.validation
                .r2
                .partial_cmp(&b.validation.r2)
                .unwrap()
                .then(b.replicate_index.cmp(&a.replicate_index))
        })
        .unwrap();
    Ok(best)
}
