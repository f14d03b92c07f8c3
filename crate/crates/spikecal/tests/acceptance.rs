//! Acceptance suite: one test per criterion, each printing a PASS line on
//! success (run with `--nocapture` to see them all).

use std::collections::HashMap;
use std::process::Command;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spikecal::benchmark::{self, BenchmarkConfig};
use spikecal::montecarlo::{self, McConfig};
use spikecal::preprocess::{self, PreprocessConfig};
use spikecal::smoter::{self, SmoteParams};
use spikecal::spectra::{DatasetTag, LabeledSet, Spectrum, WavelengthGrid};
use spikecal::{pca, pls, selection, ssa};

fn pass(criterion: usize, what: &str) {
    println!("acceptance criterion {criterion}: PASS — {what}");
}

fn random_field_set(rng: &mut ChaCha8Rng, t: usize, m: usize) -> LabeledSet {
    let grid = WavelengthGrid::new(400, 400 + (m as u32 - 1) * 2, 2).unwrap();
    let spectra = (0..t)
        .map(|i| {
            let v: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
            Spectrum::new(format!("f{i}"), v, grid).unwrap()
        })
        .collect();
    let targets = (0..t).map(|_| rng.gen::<f64>() * 50.0).collect();
    LabeledSet::new(spectra, targets, DatasetTag::Field).unwrap()
}

#[test]
fn criterion_01_smote_geometry_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    for gen in 0..1000 {
        let t = rng.gen_range(5..=50usize);
        let m = rng.gen_range(3..=2151usize);
        let n_percent = [100u32, 200, 300][rng.gen_range(0..3)];
        let k = [3usize, 5][rng.gen_range(0..2)];
        let k = k.min(t - 1);
        let set = random_field_set(&mut rng, t, m);
        let params = SmoteParams {
            n_percent,
            k,
            seed: gen,
        };
        let samples = smoter::generate_samples(&set, &params).unwrap();

        // count law, exact
        assert_eq!(samples.len(), (n_percent as usize / 100) * t);

        let by_id: HashMap<&str, usize> = set
            .spectra
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.as_str(), i))
            .collect();
        for s in &samples {
            let p = &set.spectra[by_id[s.parent_id.as_str()]];
            let n = &set.spectra[by_id[s.neighbor_id.as_str()]];
            let pt = set.targets[by_id[s.parent_id.as_str()]];
            let nt = set.targets[by_id[s.neighbor_id.as_str()]];

            // componentwise convexity
            for ((&sv, &pv), &nv) in s.spectrum.values.iter().zip(&p.values).zip(&n.values) {
                let (lo, hi) = if pv <= nv { (pv, nv) } else { (nv, pv) };
                assert!(sv >= lo - 1e-12 && sv <= hi + 1e-12);
            }

            // collinearity: d1 + d2 equals the parent-neighbor distance
            let dist: f64 = p
                .values
                .iter()
                .zip(&n.values)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!((s.d1 + s.d2 - dist).abs() <= 1e-9 * dist.max(1.0));

            // target interpolation identity
            let denom = s.d1 + s.d2;
            let expect = if denom == 0.0 {
                pt
            } else {
                (s.d2 * pt + s.d1 * nt) / denom
            };
            assert!((s.target - expect).abs() < 1e-10);
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 30, "took {elapsed:?}");
    pass(1, "SMOTE geometry over 1000 randomized generations");
}

#[test]
fn criterion_02_smote_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let set = random_field_set(&mut rng, 12, 20);
    let samples = smoter::generate_samples(
        &set,
        &SmoteParams {
            n_percent: 200,
            k: 5,
            seed: 0,
        },
    )
    .unwrap();
    assert_eq!(samples.len(), 24);
    pass(2, "T=12, N=200 yields exactly 24 synthetic samples");
}

/// Least-squares oracle on centered data via SVD.
fn ols_fitted(x: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let x_mean = x.row_mean().transpose();
    let y_mean = y.mean();
    let mut xc = x.clone();
    for mut row in xc.row_iter_mut() {
        row -= x_mean.transpose();
    }
    let yc = y.map(|v| v - y_mean);
    let beta = xc.clone().svd(true, true).solve(&yc, 1e-12).unwrap();
    let fitted = (&xc * &beta).map(|v| v + y_mean);
    (beta, fitted)
}

#[test]
fn criterion_03_pls_matches_ols_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let m = rng.gen_range(1..=8usize);
        let n = rng.gen_range(m + 2..=12usize);
        let x = DMatrix::from_fn(n, m, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        let y = DVector::from_fn(n, |_, _| rng.gen::<f64>() * 10.0);
        let p = m.min(n - 1);
        let model = pls::fit(&x, &y, p).unwrap();
        let (beta, fitted) = ols_fitted(&x, &y);
        for j in 0..m {
            assert!((model.regression_coefficients[j] - beta[j]).abs() < 1e-8);
        }
        let pred = pls::predict(&model, &x).unwrap();
        for i in 0..n {
            assert!((pred[i] - fitted[i]).abs() < 1e-8);
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 10, "took {elapsed:?}");
    pass(3, "full-rank PLS equals the least-squares oracle on 100 instances");
}

#[test]
fn criterion_04_aicc_formula() {
    let got = selection::aicc(31, 2, 6.25).unwrap();
    let expect = 31.0 * (39.0625f64).ln() + 4.0 + 12.0 / 28.0;
    assert!((got - expect).abs() < 1e-9);

    // strictly increasing in rmse
    let mut prev = f64::NEG_INFINITY;
    for i in 1..50 {
        let v = selection::aicc(31, 2, 0.2 * i as f64).unwrap();
        assert!(v > prev);
        prev = v;
    }
    pass(4, "AICc value and monotonicity in RMSE");
}

#[test]
fn criterion_05_metrics_suite() {
    let perfect = selection::evaluate(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
    assert!(perfect.rmse.abs() < 1e-12 && perfect.me.abs() < 1e-12);
    assert!((perfect.r2 - 1.0).abs() < 1e-12);

    let actual = [1.0, 2.0, 3.0, 6.0];
    let mean = actual.iter().sum::<f64>() / 4.0;
    let mean_pred = selection::evaluate(&[mean; 4], &actual).unwrap();
    assert!(mean_pred.r2.abs() < 1e-12);

    let pair = selection::evaluate(&[2.0, 4.0], &[1.0, 5.0]).unwrap();
    assert!((pair.rmse - 1.0).abs() < 1e-12);
    assert!(pair.me.abs() < 1e-12);
    assert!((pair.r2 - 0.75).abs() < 1e-12);

    // a predictor worse than the mean has negative r2
    let bad = selection::evaluate(&[6.0, 1.0, 6.0, 1.0], &[1.0, 2.0, 3.0, 6.0]).unwrap();
    assert!(bad.r2 < 0.0);
    pass(5, "metric identities and the negative-R2 regime");
}

#[test]
fn criterion_06_ssa_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let n = rng.gen_range(10..=500usize);
        let series: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 4.0 - 2.0).collect();
        let l = rng.gen_range(2..=n / 2);
        let dec = ssa::decompose(&series, l).unwrap();
        let all: Vec<usize> = (0..dec.rank()).collect();
        let back = ssa::reconstruct(&dec, &all).unwrap();
        for (a, b) in back.iter().zip(&series) {
            assert!((a - b).abs() < 1e-9);
        }

        // Frobenius energy identity on the trajectory matrix
        let k = n - l + 1;
        let frob2: f64 = (0..l)
            .flat_map(|a| (0..k).map(move |j| (a, j)))
            .map(|(a, j)| series[j + a] * series[j + a])
            .sum();
        let sv2: f64 = dec.singular_values.iter().map(|s| s * s).sum();
        assert!((frob2 - sv2).abs() <= 1e-10 * frob2.max(1.0));
    }

    // smoothing a noisy sinusoid moves it closer to the clean signal
    let n = 200;
    let clean: Vec<f64> = (0..n)
        .map(|i| (i as f64 * 0.12).sin() + 0.4 * (i as f64 * 0.05).cos())
        .collect();
    let cfg = ssa::SsaConfig {
        window_len: 50,
        rank: 6,
        energy_threshold: None,
    };
    let mut improved = 0;
    for seed in 0..20u64 {
        let mut nrng = ChaCha8Rng::seed_from_u64(seed);
        let noisy: Vec<f64> = clean
            .iter()
            .map(|v| v + 0.2 * (nrng.gen::<f64>() - 0.5))
            .collect();
        let smoothed = ssa::smooth(&noisy, &cfg).unwrap();
        let mse = |v: &[f64]| -> f64 {
            v.iter()
                .zip(&clean)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                / n as f64
        };
        if mse(&smoothed) < mse(&noisy) {
            improved += 1;
        }
    }
    assert!(improved >= 19, "only {improved}/20 seeds improved");
    pass(6, "SSA reconstruction, energy identity and denoising");
}

#[test]
fn criterion_07_end_to_end_trend() {
    let start = Instant::now();
    let (lab, field) = benchmark::generate(&BenchmarkConfig::default()).unwrap();
    let pre = PreprocessConfig::default();

    // unspiked baseline: calibrate on the lab set alone
    let lab_pp = preprocess::run_pipeline(&lab, &pre).unwrap();
    let field_pp = preprocess::run_pipeline(&field, &pre).unwrap();
    let x = lab_pp.to_matrix();
    let y = lab_pp.target_vector();
    let sel = selection::select_components(&x, &y, 1..=15).unwrap();
    let model = pls::fit(&x, &y, sel.best_p).unwrap();
    let pred = pls::predict(&model, &field_pp.to_matrix()).unwrap();
    let pred: Vec<f64> = pred.iter().copied().collect();
    let unspiked = selection::evaluate(&pred, &field_pp.targets).unwrap();
    println!("  unspiked validation rmse {:.4}", unspiked.rmse);

    let mut medians: HashMap<(u32, usize), f64> = HashMap::new();
    for k in [3usize, 5] {
        for n in [100u32, 200, 300] {
            let cfg = McConfig {
                smote: SmoteParams {
                    n_percent: n,
                    k,
                    seed: 7,
                },
                preprocess: pre.clone(),
                p_min: 1,
                p_max: 15,
                reps: 100,
                master_seed: 7,
            };
            let outcomes = montecarlo::run_replicates(&lab, &field, &cfg).unwrap();
            let records: Vec<_> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
            assert_eq!(records.len(), 100, "replicate failures at N={n}, k={k}");
            let agg = montecarlo::aggregate(&outcomes).unwrap();
            println!(
                "  N={n} k={k}: median validation rmse {:.4}",
                agg.val_rmse.median
            );

            // (a) every spiked model beats the unspiked baseline
            assert!(agg.val_rmse.median < unspiked.rmse);

            // (c) spiked beats unspiked per replicate at N=300
            if n == 300 {
                let wins = records
                    .iter()
                    .filter(|r| r.validation.rmse < unspiked.rmse)
                    .count();
                assert!(wins >= 90, "only {wins}/100 wins at N=300, k={k}");
            }
            medians.insert((n, k), agg.val_rmse.median);
        }
        // (b) nonincreasing in N
        assert!(medians[&(200, k)] <= medians[&(100, k)]);
        assert!(medians[&(300, k)] <= medians[&(200, k)]);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 600, "took {elapsed:?}");
    pass(7, "spiking trend reproduced on the synthetic benchmark");
}

#[test]
fn criterion_08_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_spikecal");
    let data = dir.path().join("data");
    let status = Command::new(bin)
        .args(["benchmark", "--out"])
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());

    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(bin)
            .arg("mc")
            .arg("--lab")
            .arg(data.join("benchmark_lab.csv"))
            .arg("--field")
            .arg(data.join("benchmark_field.csv"))
            .args(["--reps", "100", "--seed", "7", "--out"])
            .arg(&out)
            .status()
            .unwrap();
        assert!(status.success());
        outputs.push(std::fs::read(out.join("replicates.csv")).unwrap());
    }
    assert!(!outputs[0].is_empty());
    assert_eq!(outputs[0], outputs[1]);
    pass(8, "mc --reps 100 --seed 7 is byte-identical across runs");
}

#[test]
fn criterion_09_loocv_collinear_identity() {
    // three collinear points: each held-out pair still determines the line
    let x = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 2.0]);
    let y = DVector::from_column_slice(&[1.0, 3.0, 5.0]);
    let pred = selection::loocv_predictions(&x, &y, 1).unwrap();
    for (p, t) in pred.iter().zip([1.0, 3.0, 5.0]) {
        assert!((p - t).abs() < 1e-10);
    }
    pass(9, "3-point collinear LOOCV is exact");
}

#[test]
fn criterion_10_pca_hull_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let field = random_field_set(&mut rng, 12, 40);
    let params = SmoteParams {
        n_percent: 300,
        k: 5,
        seed: 99,
    };
    let samples = smoter::generate_samples(&field, &params).unwrap();

    let model = pca::fit_pca(&field.to_matrix(), 3).unwrap();
    let src_scores = pca::project(&model, &field.to_matrix()).unwrap();
    let by_id: HashMap<&str, usize> = field
        .spectra
        .iter()
        .enumerate()
        .map(|(i, s)| (s.id.as_str(), i))
        .collect();

    for s in &samples {
        let x = DMatrix::from_row_slice(1, s.spectrum.values.len(), &s.spectrum.values);
        let score = pca::project(&model, &x).unwrap();
        let p = by_id[s.parent_id.as_str()];
        let n = by_id[s.neighbor_id.as_str()];
        // projection is affine, so the synthetic score sits on the segment
        // between its parent's and neighbor's scores — inside the hull
        for j in 0..3 {
            let expect = (1.0 - s.weight) * src_scores[(p, j)] + s.weight * src_scores[(n, j)];
            assert!((score[(0, j)] - expect).abs() < 1e-9);
        }
        assert!((0.0..1.0).contains(&s.weight));
    }
    pass(10, "synthetic PCA scores lie in the source-score hull");
}
