//! Plot-ready CSV report emission for the Monte Carlo batch: per-replicate
//! rows, the aggregated quantile table, per-sample predictions of the
//! representative replicate, and PCA scores.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::montecarlo::{AggregateReport, ReplicateDetail, ReplicateOutcome};
use crate::pca::PcaModel;
use crate::spectra::LabeledSet;
use crate::{pca, Error, Result};

pub const REPLICATES_HEADER: &str =
    "replicate,seed,n_percent,k,best_p,cal_rmse,cal_r2,cal_me,val_rmse,val_r2,val_me,error";

pub const AGGREGATE_HEADER: &str = "model,n_percent,k,reps_ok,reps_failed,\
p_median,p_q25,p_q75,\
cal_rmse_median,cal_rmse_q25,cal_rmse_q75,\
cal_r2_median,cal_r2_q25,cal_r2_q75,\
cal_me_median,cal_me_q25,cal_me_q75,\
val_rmse_median,val_rmse_q25,val_rmse_q75,\
val_r2_median,val_r2_q25,val_r2_q75,\
val_me_median,val_me_q25,val_me_q75";

pub const PREDICTIONS_HEADER: &str = "id,measured,predicted,split";

/// One row per replicate, ordered by index; failures carry the error
/// message (commas replaced) and blank metric cells.
pub fn write_replicates_csv(outcomes: &[ReplicateOutcome], path: &Path) -> Result<()> {
    let mut out = String::from(REPLICATES_HEADER);
    out.push('\n');
    for o in outcomes {
        match o {
            Ok(r) => out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},\n",
                r.replicate_index,
                r.seed,
                r.smote_params.n_percent,
                r.smote_params.k,
                r.best_p,
                r.calibration.rmse,
                r.calibration.r2,
                r.calibration.me,
                r.validation.rmse,
                r.validation.r2,
                r.validation.me,
            )),
            Err(f) => out.push_str(&format!(
                "{},{},,,,,,,,,,{}\n",
                f.replicate_index,
                f.seed,
                f.message.replace(',', ";"),
            )),
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// One aggregate row in the shape of the published summary tables.
pub fn write_aggregate_csv(
    model_label: &str,
    n_percent: u32,
    k: usize,
    agg: &AggregateReport,
    path: &Path,
) -> Result<()> {
    let q = |s: &crate::montecarlo::QuantileSummary| format!("{},{},{}", s.median, s.q25, s.q75);
    let row = format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        model_label,
        n_percent,
        k,
        agg.n_success,
        agg.n_failed,
        q(&agg.best_p),
        q(&agg.cal_rmse),
        q(&agg.cal_r2),
        q(&agg.cal_me),
        q(&agg.val_rmse),
        q(&agg.val_r2),
        q(&agg.val_me),
    );
    let out = format!("{AGGREGATE_HEADER}\n{row}\n");
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// LOOCV rows for the spiked calibration set followed by validation rows
/// for F: the data behind a measured-vs-predicted plot.
pub fn write_predictions_csv(detail: &ReplicateDetail, path: &Path) -> Result<()> {
    let mut out = String::from(PREDICTIONS_HEADER);
    out.push('\n');
    for ((id, measured), predicted) in detail
        .calibration_ids
        .iter()
        .zip(&detail.calibration_targets)
        .zip(&detail.loocv_predictions)
    {
        out.push_str(&format!("{id},{measured},{predicted},calibration\n"));
    }
    for ((id, measured), predicted) in detail
        .validation_ids
        .iter()
        .zip(&detail.validation_targets)
        .zip(&detail.validation_predictions)
    {
        out.push_str(&format!("{id},{measured},{predicted},validation\n"));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// PCA scores of the given labeled sets under one fitted model, with the
/// dataset tag and target carried along for plotting.
pub fn write_scores_csv(model: &PcaModel, sets: &[&LabeledSet], path: &Path) -> Result<()> {
    let c = model.loadings.ncols();
    let mut out = String::from("id,dataset_tag,target");
    for j in 0..c {
        out.push_str(&format!(",pc{}", j + 1));
    }
    out.push('\n');
    for set in sets {
        let scores: DMatrix<f64> = pca::project(model, &set.to_matrix())?;
        for (i, (s, t)) in set.spectra.iter().zip(&set.targets).enumerate() {
            out.push_str(&format!("{},{},{}", s.id, set.tag.as_str(), t));
            for j in 0..c {
                out.push_str(&format!(",{}", scores[(i, j)]));
            }
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read back a `replicates.csv` written by `write_replicates_csv`.
pub fn read_replicates_csv(path: &Path) -> Result<Vec<ReplicateOutcome>> {
    use crate::montecarlo::{ReplicateFailure, ReplicateRecord};
    use crate::selection::MetricsReport;
    use crate::smoter::SmoteParams;

    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == REPLICATES_HEADER => {}
        _ => return Err(Error::csv(path, 1, "unexpected replicates.csv header")),
    }
    let mut out = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 12 {
            return Err(Error::csv(path, lineno, "expected 12 cells"));
        }
        let parse_u64 = |c: &str, what: &str| -> Result<u64> {
            c.parse()
                .map_err(|_| Error::csv(path, lineno, format!("bad {what} '{c}'")))
        };
        let parse_f64 = |c: &str, what: &str| -> Result<f64> {
            c.parse()
                .map_err(|_| Error::csv(path, lineno, format!("bad {what} '{c}'")))
        };
        let replicate_index = parse_u64(cells[0], "replicate index")? as usize;
        let seed = parse_u64(cells[1], "seed")?;
        if !cells[11].is_empty() {
            out.push(Err(ReplicateFailure {
                replicate_index,
                seed,
                message: cells[11].to_string(),
            }));
            continue;
        }
        let metrics = |rmse: &str, r2: &str, me: &str| -> Result<MetricsReport> {
            Ok(MetricsReport {
                rmse: parse_f64(rmse, "rmse")?,
                r2: parse_f64(r2, "r2")?,
                me: parse_f64(me, "me")?,
                n: 0, // sample counts are not stored per row
            })
        };
        out.push(Ok(ReplicateRecord {
            replicate_index,
            seed,
            smote_params: SmoteParams {
                n_percent: parse_u64(cells[2], "n_percent")? as u32,
                k: parse_u64(cells[3], "k")? as usize,
                seed,
            },
            best_p: parse_u64(cells[4], "best_p")? as usize,
            calibration: metrics(cells[5], cells[6], cells[7])?,
            validation: metrics(cells[8], cells[9], cells[10])?,
        }));
    }
    Ok(out)
}
