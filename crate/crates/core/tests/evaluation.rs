mod common;

use dperc::baselines::{knn_impute, mean_impute, read_imputed_csv, sample_cov, ImputeMethod, ImputedMatrix};
use dperc::metrics::{cov_to_corr, error_e, error_r};
use dperc::missingness::observed_rate;
use dperc::report::{local_mse_matrix, read_matrix_csv, render_heatmap, sidecar_path, signed_diff_matrix, HeatmapSpec};
use dperc::{apply_mcar, MaskPlan, MaskedMatrix, MixedDataset};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

fn complete(n: usize, p: usize, seed: u64) -> MixedDataset {
    let mut rng = common::rng(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-5.0..5.0));
    MixedDataset::from_continuous(MaskedMatrix::complete(&x).unwrap()).unwrap()
}

fn square(p: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-10.0f64..10.0, p * p).prop_map(move |v| DMatrix::from_vec(p, p, v))
}

#[test]
fn masking_frequency_is_uniform() {
    let ds = complete(100, 5, 1);
    let mut hits = vec![0u32; 500];
    for seed in 0..1000u64 {
        let out = apply_mcar(&ds, &MaskPlan::new(0.2, seed)).unwrap();
        for (k, &o) in out.continuous().mask().iter().enumerate() {
            if !o {
                hits[k] += 1;
            }
        }
    }
    for h in hits {
        let f = h as f64 / 1000.0;
        assert!((0.15..=0.25).contains(&f), "cell frequency {f}");
    }
}

#[test]
fn realized_rate_after_masking() {
    let ds = complete(37, 3, 2);
    let out = apply_mcar(&ds, &MaskPlan::new(0.35, 5)).unwrap();
    assert!((observed_rate(&out) - 0.35).abs() <= 1.0 / (37.0 * 3.0));
}

#[test]
fn categorical_and_label_columns_untouched() {
    let mut rng = common::rng(3);
    let x = DMatrix::from_fn(20, 2, |_, _| rng.random_range(0.0..1.0));
    let cat = common::random_codes(20, 3, &mut rng);
    let lab = common::random_codes(20, 2, &mut rng);
    let ds = MixedDataset::from_parts(MaskedMatrix::complete(&x).unwrap(), vec![cat.clone()], Some(lab.clone())).unwrap();
    let out = apply_mcar(&ds, &MaskPlan::new(0.5, 9)).unwrap();
    assert_eq!(out.categorical()[0], cat);
    assert_eq!(out.labels().unwrap(), &lab);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mean_imputation_preserves_observed_means(n in 2usize..40, p in 1usize..5, seed in any::<u64>()) {
        let ds = apply_mcar(&complete(n, p, seed), &MaskPlan::new(0.3, seed)).unwrap();
        let cont = ds.continuous();
        let imp = mean_impute(cont).unwrap();
        for c in 0..p {
            let col = cont.column(c);
            let obs: Vec<f64> = col.observed_values().collect();
            let mu = obs.iter().sum::<f64>() / obs.len() as f64;
            let out_mu = imp.values.column(c).sum() / n as f64;
            prop_assert!((out_mu - mu).abs() <= 1e-12 * mu.abs().max(1.0));
            // imputed cells sit exactly at the mean
            for r in 0..n {
                if !cont.is_observed(r, c) {
                    prop_assert_eq!(imp.values[(r, c)], mu);
                }
            }
        }
    }

    #[test]
    fn sample_cov_matches_two_pass(n in 1usize..40, p in 1usize..5, seed in any::<u64>()) {
        let x = complete(n, p, seed).continuous().to_dmatrix();
        let got = sample_cov(&ImputedMatrix::new(x.clone(), ImputeMethod::Mean).unwrap()).unwrap().sigma;
        let want = common::sample_cov_oracle(&x);
        prop_assert!((got - want).abs().max() <= 1e-12 * 25.0);
    }

    #[test]
    fn knn_with_all_candidates_is_candidate_mean(n in 3usize..25, p in 2usize..5, seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-3.0..3.0));
        let hole = rng.random_range(0..p);
        let rows: Vec<Vec<Option<f64>>> = (0..n)
            .map(|r| (0..p).map(|c| (r != 0 || c != hole).then(|| x[(r, c)])).collect())
            .collect();
        let m = MaskedMatrix::from_rows(&rows).unwrap();
        let got = knn_impute(&m, n - 1).unwrap().values[(0, hole)];
        let want = (1..n).map(|r| x[(r, hole)]).sum::<f64>() / (n - 1) as f64;
        prop_assert!((got - want).abs() <= 1e-12);
    }

    #[test]
    fn errors_are_symmetric_and_subadditive(a in square(3), b in square(3), c in square(3)) {
        for f in [error_e, error_r] {
            let ab = f(&a, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - f(&b, &a).unwrap()).abs() <= 1e-12 * ab.max(1.0));
            prop_assert!(ab <= f(&a, &c).unwrap() + f(&c, &b).unwrap() + 1e-12);
        }
    }

    #[test]
    fn error_e_matches_direct_sum(a in square(4), b in square(4)) {
        let mut s = 0.0;
        let mut off = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let d = a[(i, j)] - b[(i, j)];
                s += d * d;
                if i != j {
                    off += d * d;
                }
            }
        }
        prop_assert!((error_e(&a, &b).unwrap() - s.sqrt() / 16.0).abs() <= 1e-12);
        prop_assert!((error_r(&a, &b).unwrap() - off.sqrt()).abs() <= 1e-12 * off.sqrt().max(1.0));
    }

    #[test]
    fn correlation_scale_invariant(seed in any::<u64>(), d in prop::collection::vec(0.1f64..10.0, 4)) {
        let mut rng = common::rng(seed);
        let s = common::random_spd(4, &mut rng);
        let dm = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d));
        let r1 = cov_to_corr(&s).unwrap();
        let r2 = cov_to_corr(&(&dm * &s * &dm)).unwrap();
        prop_assert!((r1.clone() - r2).abs().max() <= 1e-12);
        prop_assert!(r1.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn local_and_signed_match_elementwise(a in square(3), b in square(3)) {
        let m = local_mse_matrix(&a, &b).unwrap();
        let s = signed_diff_matrix(&a, &b).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let d = a[(i, j)] - b[(i, j)];
                prop_assert!((m[(i, j)] - d * d).abs() <= 1e-14 * (d * d).max(1.0));
                prop_assert_eq!(s[(i, j)], d);
            }
        }
    }

    #[test]
    fn sidecar_round_trips_exactly(a in square(4)) {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("m.svg");
        let labels: Vec<String> = (0..4).map(|i| format!("v{i}")).collect();
        let spec = HeatmapSpec::signed_diff(&a, labels.clone(), "x");
        render_heatmap(&a, &spec, &out).unwrap();
        let (l, back) = read_matrix_csv(&sidecar_path(&out)).unwrap();
        prop_assert_eq!(l, labels);
        prop_assert!(back.iter().zip(a.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let again = std::fs::read(&out).unwrap();
        render_heatmap(&a, &spec, &out).unwrap();
        prop_assert_eq!(again, std::fs::read(&out).unwrap());
    }
}

#[test]
fn external_imputation_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("imp.csv");
    std::fs::write(&p, "a,b\n0,0\n2,2\n").unwrap();
    let imp = read_imputed_csv(&p).unwrap();
    assert_eq!(sample_cov(&imp).unwrap().sigma, DMatrix::from_element(2, 2, 1.0));
    std::fs::write(&p, "a,b\n0,\n2,2\n").unwrap();
    assert!(read_imputed_csv(&p).is_err());
}
