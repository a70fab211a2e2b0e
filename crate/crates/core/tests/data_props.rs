mod common;

use dperc::data::{read_csv, write_csv, ColumnSummary};
use dperc::{CategoricalColumn, CsvOptions, MaskedMatrix, MixedDataset};
use proptest::prelude::*;

fn dataset_strategy() -> impl Strategy<Value = MixedDataset> {
    (1usize..25, 1usize..5, 0usize..3, any::<bool>(), any::<u64>()).prop_map(|(n, p, q, labeled, seed)| {
        use rand::Rng;
        let mut rng = common::rng(seed);
        let rows: Vec<Vec<Option<f64>>> = (0..n)
            .map(|r| {
                (0..p)
                    .map(|_| {
                        // keep row 0 observed so no column is empty
                        if r > 0 && rng.random_bool(0.3) {
                            None
                        } else {
                            Some(rng.random_range(-1e6..1e6) * rng.random::<f64>())
                        }
                    })
                    .collect()
            })
            .collect();
        let cats = (0..q).map(|_| common::random_codes(n, rng.random_range(1..4).min(n as u32), &mut rng)).collect();
        let labels = labeled.then(|| common::random_codes(n, rng.random_range(1..3).min(n as u32), &mut rng));
        MixedDataset::from_parts(MaskedMatrix::from_rows(&rows).unwrap(), cats, labels).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_exact(ds in dataset_strategy()) {
        let mut buf = Vec::new();
        write_csv(&ds, &mut buf, "").unwrap();
        let back = read_csv(buf.as_slice(), ds.schema(), &CsvOptions::default()).unwrap();
        prop_assert_eq!(back.continuous().mask(), ds.continuous().mask());
        for (a, b) in back.continuous().raw_values().iter().zip(ds.continuous().raw_values()) {
            prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
        for (a, b) in back.categorical().iter().zip(ds.categorical()) {
            prop_assert_eq!(a.codes(), b.codes());
        }
        prop_assert_eq!(back.labels().map(|l| l.codes().to_vec()), ds.labels().map(|l| l.codes().to_vec()));
    }

    #[test]
    fn split_is_a_row_permutation(ds in dataset_strategy()) {
        prop_assume!(ds.labels().is_some());
        let parts = ds.split_by_class().unwrap();
        let total: usize = parts.iter().map(|(_, p)| p.nrows()).sum();
        prop_assert_eq!(total, ds.nrows());
        let mut original: Vec<Vec<u64>> = (0..ds.nrows())
            .map(|r| (0..ds.continuous().ncols()).map(|c| ds.continuous().get(r, c).map_or(u64::MAX, f64::to_bits)).collect())
            .collect();
        let mut joined: Vec<Vec<u64>> = parts
            .iter()
            .flat_map(|(_, p)| {
                (0..p.nrows())
                    .map(|r| (0..p.continuous().ncols()).map(|c| p.continuous().get(r, c).map_or(u64::MAX, f64::to_bits)).collect::<Vec<_>>())
                    .collect::<Vec<_>>()
            })
            .collect();
        original.sort();
        joined.sort();
        prop_assert_eq!(original, joined);
        for (_, part) in &parts {
            prop_assert!(part.labels().is_none());
        }
    }

    #[test]
    fn summary_matches_two_pass(values in prop::collection::vec(-1e3f64..1e3, 1..60), holes in prop::collection::vec(any::<bool>(), 60)) {
        let observed: Vec<bool> = values.iter().enumerate().map(|(i, _)| i == 0 || !holes[i]).collect();
        let stored: Vec<f64> = values.iter().zip(&observed).map(|(&v, &o)| if o { v } else { f64::NAN }).collect();
        let col = dperc::MaskedColumn::new(&stored, &observed).unwrap();
        let s = ColumnSummary::of(col).unwrap();
        let obs: Vec<f64> = values.iter().zip(&observed).filter(|(_, &o)| o).map(|(&v, _)| v).collect();
        let n = obs.len() as f64;
        let mean = obs.iter().sum::<f64>() / n;
        let var = obs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        prop_assert_eq!(s.observed_count, obs.len());
        prop_assert!((s.mean - mean).abs() <= 1e-12 * mean.abs().max(1.0));
        prop_assert!((s.uncorrected_variance - var).abs() <= 1e-12 * var.max(1.0));
        prop_assert!(s.uncorrected_variance >= 0.0);
    }

    #[test]
    fn mask_matches_finiteness(ds in dataset_strategy()) {
        let m = ds.continuous();
        for (v, &o) in m.raw_values().iter().zip(m.mask()) {
            prop_assert_eq!(o, v.is_finite());
        }
    }
}

#[test]
fn string_levels_follow_first_appearance() {
    let c = CategoricalColumn::from_strings(["b", "a", "b", "c"]);
    assert_eq!(c.codes(), &[0, 1, 0, 2]);
    assert_eq!(c.levels(), &["b", "a", "c"]);
}
