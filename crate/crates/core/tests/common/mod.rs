//! Synthetic data shared by the integration tests.
#![allow(dead_code)]

use dperc::{CategoricalColumn, MaskedMatrix, MixedDataset};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random SPD matrix with unit-order diagonal and moderate correlations.
pub fn random_spd(p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    let mut s = &a * a.transpose() / p as f64;
    for i in 0..p {
        s[(i, i)] += 0.2;
    }
    s
}

/// `n` rows drawn from `N(mean, sigma)`.
pub fn mvn(n: usize, mean: &DVector<f64>, sigma: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let l = sigma.clone().cholesky().expect("SPD covariance").l();
    let p = mean.len();
    let mut out = DMatrix::zeros(n, p);
    for r in 0..n {
        let z = DVector::from_fn(p, |_, _| StandardNormal.sample(rng));
        let x = mean + &l * z;
        out.row_mut(r).copy_from(&x.transpose());
    }
    out
}

/// Uncorrected sample covariance by explicit double loop.
pub fn sample_cov_oracle(x: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let means: Vec<f64> = (0..p).map(|c| (0..n).map(|r| x[(r, c)]).sum::<f64>() / n as f64).collect();
    DMatrix::from_fn(p, p, |a, b| {
        let mut s = 0.0;
        for r in 0..n {
            s += (x[(r, a)] - means[a]) * (x[(r, b)] - means[b]);
        }
        s / n as f64
    })
}

pub fn random_codes(n: usize, levels: u32, rng: &mut ChaCha8Rng) -> CategoricalColumn {
    // first `levels` rows fix every level so codes stay contiguous
    let codes = (0..n)
        .map(|r| if (r as u32) < levels { r as u32 } else { rng.random_range(0..levels) })
        .collect();
    CategoricalColumn::from_codes(codes).unwrap()
}

pub struct Mixture {
    pub data: MixedDataset,
    /// Shared within-group covariance.
    pub within: DMatrix<f64>,
    /// Population covariance of the mixture.
    pub total: DMatrix<f64>,
    pub informative: usize,
}

pub const MIXTURE_P: usize = 6;
pub const MIXTURE_Q: usize = 4;
pub const MIXTURE_INFORMATIVE: usize = 1;
const MIXTURE_GROUPS: usize = 3;

/// Equal-covariance Gaussian mixture whose component is one of `q = 4`
/// categorical columns; the other three are independent noise.
pub fn mixture(n: usize, seed: u64) -> Mixture {
    let mut rng = rng(seed);
    let p = MIXTURE_P;
    let within = random_spd(p, &mut rng);
    let centres: Vec<DVector<f64>> = (0..MIXTURE_GROUPS)
        .map(|_| DVector::from_fn(p, |_, _| 1.5 * rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let key = random_codes(n, MIXTURE_GROUPS as u32, &mut rng);
    let l = within.clone().cholesky().unwrap().l();
    let mut x = DMatrix::zeros(n, p);
    for r in 0..n {
        let z = DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng));
        let row = &centres[key.codes()[r] as usize] + &l * z;
        x.row_mut(r).copy_from(&row.transpose());
    }
    let mut cats = Vec::new();
    for k in 0..MIXTURE_Q {
        if k == MIXTURE_INFORMATIVE {
            cats.push(key.clone());
        } else {
            let levels = 2 + (k as u32 % 3);
            cats.push(random_codes(n, levels, &mut rng));
        }
    }
    let grand = centres.iter().fold(DVector::zeros(p), |a, c| a + c) / MIXTURE_GROUPS as f64;
    let between = centres
        .iter()
        .fold(DMatrix::zeros(p, p), |a, c| a + (c - &grand) * (c - &grand).transpose())
        / MIXTURE_GROUPS as f64;
    let data = MixedDataset::from_parts(MaskedMatrix::complete(&x).unwrap(), cats, None).unwrap();
    Mixture {
        data,
        total: &within + between,
        within,
        informative: MIXTURE_INFORMATIVE,
    }
}
