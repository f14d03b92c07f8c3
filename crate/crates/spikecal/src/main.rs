use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spikecal::benchmark::{self, BenchmarkConfig};
use spikecal::config::{PcaFitOn, RunConfig};
use spikecal::error::Error;
use spikecal::montecarlo::{self, McConfig};
use spikecal::spectra::{self, DatasetTag, LabeledSet};
use spikecal::{pca, pls, preprocess, report, selection, smoter, Result};

/// Calibration toolkit: SMOTE spiking, spectral pretreatment, PLS/AICc
/// model selection and Monte Carlo variability analysis, all over CSV
/// files.
#[derive(Parser)]
#[command(name = "spikecal", version, about)]
struct Cli {
    /// Flat `key = value` configuration file; CLI flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct StageFlags {
    /// Skip detector offset correction.
    #[arg(long)]
    no_offset: bool,
    /// Skip trimming to the high-SNR range.
    #[arg(long)]
    no_trim: bool,
    /// Skip the absorbance transform.
    #[arg(long)]
    no_absorbance: bool,
    /// Skip SSA smoothing.
    #[arg(long)]
    no_ssa: bool,
    /// Skip max-normalization.
    #[arg(long)]
    no_normalize: bool,
    /// Skip the first derivative.
    #[arg(long)]
    no_derivative: bool,
}

impl StageFlags {
    fn apply(&self, cfg: &mut RunConfig) {
        let p = &mut cfg.preprocess;
        p.offset_enabled &= !self.no_offset;
        p.trim_enabled &= !self.no_trim;
        p.absorbance_enabled &= !self.no_absorbance;
        p.ssa_enabled &= !self.no_ssa;
        p.normalize_enabled &= !self.no_normalize;
        p.derivative_enabled &= !self.no_derivative;
    }
}

#[derive(Subcommand)]
enum Command {
    /// Pretreat one or more labeled CSVs (concatenated on a shared grid).
    Preprocess {
        /// Labeled input CSV; repeat to concatenate several files.
        #[arg(long, required = true)]
        input: Vec<PathBuf>,
        /// Dataset tag for the output (L, F or S).
        #[arg(long, default_value = "L")]
        tag: String,
        /// Output file name (under the output directory).
        #[arg(long, default_value = "preprocessed.csv")]
        output: String,
        /// Input reflectance is in percent, not fraction.
        #[arg(long)]
        reflectance_percent: bool,
        #[command(flatten)]
        stages: StageFlags,
    },
    /// Generate synthetic samples from a labeled (field) CSV.
    Smote {
        #[arg(long)]
        input: PathBuf,
        /// Amount of SMOTE in percent of the source set.
        #[arg(long)]
        n: Option<u32>,
        /// Neighbour count.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value = "synthetic.csv")]
        output: String,
    },
    /// PCA of raw spectra; project field/synthetic data into score space.
    Pca {
        #[arg(long)]
        lab: PathBuf,
        #[arg(long)]
        field: PathBuf,
        /// Optional synthetic set to project.
        #[arg(long)]
        synthetic: Option<PathBuf>,
        /// Fit on L or on L and F jointly.
        #[arg(long)]
        fit_on: Option<String>,
        #[arg(long)]
        components: Option<usize>,
    },
    /// Fit a PLS model on a preprocessed calibration CSV; pick the
    /// component count by AICc over LOOCV unless one is given.
    Train {
        #[arg(long)]
        input: PathBuf,
        /// `auto` or an explicit component count.
        #[arg(long, default_value = "auto")]
        components: String,
    },
    /// Predict a preprocessed labeled CSV with a stored model and report
    /// RMSE / R2 / ME.
    Validate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "predictions.csv")]
        output: String,
    },
    /// Monte Carlo batch: replicate SMOTE -> spike -> select -> validate
    /// and aggregate medians and quartiles.
    Mc {
        /// Raw lab calibration CSV.
        #[arg(long)]
        lab: PathBuf,
        /// Raw field validation CSV.
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Recompute the aggregate and representative outputs from a stored
    /// replicates.csv.
    Report {
        #[arg(long)]
        replicates: PathBuf,
        #[arg(long)]
        lab: PathBuf,
        #[arg(long)]
        field: PathBuf,
    },
    /// Emit a synthetic lab/field benchmark dataset pair for trying the
    /// pipeline end to end.
    Benchmark {
        #[arg(long, default_value_t = 10)]
        step: u32,
    },
}

fn load_run_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.load_file(path)?;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.smote.seed = seed;
    }
    Ok(cfg)
}

fn ensure_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn mc_config(cfg: &RunConfig) -> McConfig {
    McConfig {
        smote: cfg.smote,
        preprocess: cfg.preprocess.clone(),
        p_min: cfg.p_min,
        p_max: cfg.p_max,
        reps: cfg.reps,
        master_seed: cfg.smote.seed,
    }
}

fn pca_scores_path(
    cfg: &RunConfig,
    lab: &LabeledSet,
    field: &LabeledSet,
    synthetic: Option<&LabeledSet>,
) -> Result<()> {
    let fit_matrix = match cfg.pca_fit_on {
        PcaFitOn::LabOnly => lab.to_matrix(),
        PcaFitOn::LabAndField => {
            LabeledSet::concat(lab, field, DatasetTag::Lab)?.to_matrix()
        }
    };
    let max_c = (fit_matrix.nrows() - 1).min(fit_matrix.ncols());
    let c = cfg.pca_components.min(max_c).max(1);
    let model = pca::fit_pca(&fit_matrix, c)?;
    let mut sets: Vec<&LabeledSet> = vec![lab, field];
    if let Some(s) = synthetic {
        sets.push(s);
    }
    report::write_scores_csv(&model, &sets, &cfg.out_dir.join("scores.csv"))?;
    let pct: Vec<String> = model
        .explained_variance_ratio
        .iter()
        .map(|r| format!("{:.1}%", 100.0 * r))
        .collect();
    println!("pca: explained variance {}", pct.join(", "));
    Ok(())
}

fn emit_mc_outputs(
    cfg: &RunConfig,
    lab: &LabeledSet,
    field: &LabeledSet,
    outcomes: &[montecarlo::ReplicateOutcome],
) -> Result<()> {
    let agg = montecarlo::aggregate(outcomes)?;
    let rep = montecarlo::pick_representative(outcomes)?.clone();
    report::write_replicates_csv(outcomes, &cfg.out_dir.join("replicates.csv"))?;
    let label = format!("N{}k{}", cfg.smote.n_percent, cfg.smote.k);
    report::write_aggregate_csv(
        &label,
        cfg.smote.n_percent,
        cfg.smote.k,
        &agg,
        &cfg.out_dir.join("aggregate.csv"),
    )?;

    let detail = montecarlo::run_replicate_with_seed(
        lab,
        field,
        &mc_config(cfg),
        rep.replicate_index,
        rep.seed,
    )?;
    report::write_predictions_csv(&detail, &cfg.out_dir.join("predictions_representative.csv"))?;
    pca_scores_path(cfg, lab, field, Some(&detail.synthetic_raw))?;

    println!(
        "mc: {} ok / {} failed; median best_p {}, median validation rmse {:.4}, r2 {:.4}",
        agg.n_success, agg.n_failed, agg.best_p.median, agg.val_rmse.median, agg.val_r2.median
    );
    println!(
        "representative: replicate {} (seed {}), p = {}, validation rmse {:.4}, r2 {:.4}",
        rep.replicate_index, rep.seed, rep.best_p, rep.validation.rmse, rep.validation.r2
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_run_config(&cli)?;

    match cli.command {
        Command::Preprocess {
            input,
            tag,
            output,
            reflectance_percent,
            stages,
        } => {
            stages.apply(&mut cfg);
            if reflectance_percent {
                cfg.reflectance_percent = true;
            }
            let tag = DatasetTag::parse(&tag)?;
            let mut set: Option<LabeledSet> = None;
            for path in &input {
                let loaded = spectra::load_labeled_csv(path, tag, cfg.reflectance_percent)?;
                set = Some(match set {
                    None => loaded,
                    Some(acc) => LabeledSet::concat(&acc, &loaded, tag)?,
                });
            }
            let set = set.unwrap();
            let processed = preprocess::run_pipeline(&set, &cfg.preprocess)?;
            ensure_out(&cfg.out_dir)?;
            let out_path = cfg.out_dir.join(output);
            spectra::write_labeled_csv(&processed, &out_path)?;
            cfg.write_effective()?;
            println!(
                "preprocess: {} spectra -> {} ({} points on {})",
                processed.len(),
                out_path.display(),
                processed.grid().len(),
                processed.grid()
            );
        }

        Command::Smote { input, n, k, output } => {
            if let Some(n) = n {
                cfg.smote.n_percent = n;
            }
            if let Some(k) = k {
                cfg.smote.k = k;
            }
            cfg.validate()?;
            let source = spectra::load_labeled_csv(&input, DatasetTag::Field, cfg.reflectance_percent)?;
            let synthetic = smoter::generate_set(&source, &cfg.smote)?;
            ensure_out(&cfg.out_dir)?;
            let out_path = cfg.out_dir.join(output);
            spectra::write_labeled_csv(&synthetic, &out_path)?;
            cfg.write_effective()?;
            println!(
                "smote: {} synthetic samples (N = {}%, k = {}, seed = {}) -> {}",
                synthetic.len(),
                cfg.smote.n_percent,
                cfg.smote.k,
                cfg.smote.seed,
                out_path.display()
            );
        }

        Command::Pca {
            lab,
            field,
            synthetic,
            fit_on,
            components,
        } => {
            if let Some(f) = fit_on {
                cfg.pca_fit_on = PcaFitOn::parse(&f)?;
            }
            if let Some(c) = components {
                cfg.pca_components = c;
            }
            let lab = spectra::load_labeled_csv(&lab, DatasetTag::Lab, cfg.reflectance_percent)?;
            let field =
                spectra::load_labeled_csv(&field, DatasetTag::Field, cfg.reflectance_percent)?;
            spectra::assert_same_grid(&lab, &field)?;
            let synthetic = synthetic
                .map(|p| spectra::load_labeled_csv(&p, DatasetTag::Synthetic, cfg.reflectance_percent))
                .transpose()?;
            ensure_out(&cfg.out_dir)?;
            pca_scores_path(&cfg, &lab, &field, synthetic.as_ref())?;
            cfg.write_effective()?;
            println!("pca: scores -> {}", cfg.out_dir.join("scores.csv").display());
        }

        Command::Train { input, components } => {
            let set = spectra::load_labeled_csv(&input, DatasetTag::Lab, false)?;
            let x = set.to_matrix();
            let y = set.target_vector();
            ensure_out(&cfg.out_dir)?;

            let (best_p, loocv) = if components == "auto" {
                let sel = selection::select_components(&x, &y, cfg.p_min..=cfg.p_max)?;
                for (p, reason) in &sel.skipped {
                    eprintln!("warning: skipped p = {p}: {reason}");
                }
                let mut table = String::from("p,rmse_cv,aicc\n");
                for (p, aicc) in &sel.aicc_by_p {
                    table.push_str(&format!("{},{},{}\n", p, sel.rmse_by_p[p], aicc));
                }
                let aicc_path = cfg.out_dir.join("aicc_by_p.csv");
                std::fs::write(&aicc_path, table).map_err(|e| Error::io(&aicc_path, e))?;
                (sel.best_p, sel.loocv_predictions_best)
            } else {
                let p: usize = components
                    .parse()
                    .map_err(|_| Error::Usage(format!("--components must be 'auto' or an integer, got '{components}'")))?;
                (p, selection::loocv_predictions(&x, &y, p)?)
            };

            let model = pls::fit(&x, &y, best_p)?;
            pls::write_model_csv(&model, &cfg.out_dir.join("model.csv"))?;

            let mut preds = String::from("id,measured,predicted\n");
            for ((s, t), p) in set.spectra.iter().zip(&set.targets).zip(&loocv) {
                preds.push_str(&format!("{},{},{}\n", s.id, t, p));
            }
            let loocv_path = cfg.out_dir.join("loocv_predictions.csv");
            std::fs::write(&loocv_path, preds).map_err(|e| Error::io(&loocv_path, e))?;

            let metrics = selection::evaluate(&loocv, &set.targets)?;
            cfg.write_effective()?;
            println!(
                "train: n = {}, p = {}, LOOCV rmse {:.4}, r2 {:.4}, me {:.4}",
                set.len(),
                best_p,
                metrics.rmse,
                metrics.r2,
                metrics.me
            );
        }

        Command::Validate { model, input, output } => {
            let model = pls::read_model_csv(&model)?;
            let set = spectra::load_labeled_csv(&input, DatasetTag::Field, false)?;
            let predicted = pls::predict(&model, &set.to_matrix())?;
            let predicted: Vec<f64> = predicted.iter().copied().collect();
            ensure_out(&cfg.out_dir)?;
            let mut preds = String::from("id,measured,predicted\n");
            for ((s, t), p) in set.spectra.iter().zip(&set.targets).zip(&predicted) {
                preds.push_str(&format!("{},{},{}\n", s.id, t, p));
            }
            let out_path = cfg.out_dir.join(output);
            std::fs::write(&out_path, preds).map_err(|e| Error::io(&out_path, e))?;
            let metrics = selection::evaluate(&predicted, &set.targets)?;
            println!(
                "validate: n = {}, rmse {:.4}, r2 {:.4}, me {:.4}",
                set.len(),
                metrics.rmse,
                metrics.r2,
                metrics.me
            );
        }

        Command::Mc { lab, field, reps, n, k } => {
            if let Some(r) = reps {
                cfg.reps = r;
            }
            if let Some(n) = n {
                cfg.smote.n_percent = n;
            }
            if let Some(k) = k {
                cfg.smote.k = k;
            }
            cfg.lab_csv = Some(lab.clone());
            cfg.field_csv = Some(field.clone());
            cfg.validate()?;
            let lab = spectra::load_labeled_csv(&lab, DatasetTag::Lab, cfg.reflectance_percent)?;
            let field =
                spectra::load_labeled_csv(&field, DatasetTag::Field, cfg.reflectance_percent)?;
            ensure_out(&cfg.out_dir)?;
            let outcomes = montecarlo::run_replicates(&lab, &field, &mc_config(&cfg))?;
            emit_mc_outputs(&cfg, &lab, &field, &outcomes)?;
            cfg.write_effective()?;
        }

        Command::Report { replicates, lab, field } => {
            let outcomes = report::read_replicates_csv(&replicates)?;
            if outcomes.is_empty() {
                return Err(Error::Data("replicates file has no rows".into()));
            }
            // batch parameters come from the stored rows
            if let Some(r) = outcomes.iter().find_map(|o| o.as_ref().ok()) {
                cfg.smote.n_percent = r.smote_params.n_percent;
                cfg.smote.k = r.smote_params.k;
            }
            let lab = spectra::load_labeled_csv(&lab, DatasetTag::Lab, cfg.reflectance_percent)?;
            let field =
                spectra::load_labeled_csv(&field, DatasetTag::Field, cfg.reflectance_percent)?;
            ensure_out(&cfg.out_dir)?;
            emit_mc_outputs(&cfg, &lab, &field, &outcomes)?;
            cfg.write_effective()?;
        }

        Command::Benchmark { step } => {
            let bench = BenchmarkConfig {
                step_nm: step,
                seed: cfg.smote.seed,
                ..BenchmarkConfig::default()
            };
            let (lab, field) = benchmark::generate(&bench)?;
            ensure_out(&cfg.out_dir)?;
            let lab_path = cfg.out_dir.join("benchmark_lab.csv");
            let field_path = cfg.out_dir.join("benchmark_field.csv");
            spectra::write_labeled_csv(&lab, &lab_path)?;
            spectra::write_labeled_csv(&field, &field_path)?;
            println!(
                "benchmark: {} lab + {} field spectra -> {}, {}",
                lab.len(),
                field.len(),
                lab_path.display(),
                field_path.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
