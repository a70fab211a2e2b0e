//! Covariance estimation for mixed data: for every continuous pair, pick the
//! categorical column whose groups are least dispersed around the overall
//! mean (measured in the metric of a first-stage DPER estimate), then
//! re-estimate the pair with that column as an artificial class sharing one
//! covariance.

use nalgebra::{DMatrix, Matrix2, Vector2};
use serde::Serialize;

use crate::data::MixedDataset;
use crate::dper::{self, ClassMeans, CovarianceEstimate};
use crate::error::{Error, Result};
use crate::pairwise::{Groups, SelectionRule};

/// Relative ridge added to an ill-conditioned first-stage estimate before
/// inversion, scaled by the mean of its diagonal.
pub const RIDGE_EPS: f64 = 1e-8;
/// Condition number above which the ridge is applied.
pub const MAX_CONDITION: f64 = 1e12;

/// Terms of the decomposition `delta = pairwise + n * between` for one group
/// of 2-d points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecompositionTerms {
    /// Sum of quadratic forms of each point about the global mean.
    pub delta: f64,
    /// Weighted average pairwise distance: `(1/n) sum_{i<j} q(u_i - u_j)`.
    pub pairwise: f64,
    /// Quadratic form of the group mean about the global mean.
    pub between: f64,
    pub n: usize,
}

fn quad(inv: &Matrix2<f64>, v: &Vector2<f64>) -> f64 {
    v.dot(&(inv * v))
}

/// Computes each term directly from its definition. The pairwise term is an
/// explicit sum over unordered point pairs.
pub fn decomposition_terms(
    points: &[[f64; 2]],
    global_mean: [f64; 2],
    inv: &Matrix2<f64>,
) -> DecompositionTerms {
    let n = points.len();
    let mu = Vector2::from(global_mean);
    let u: Vec<Vector2<f64>> = points.iter().map(|&p| Vector2::from(p)).collect();
    let delta = u.iter().map(|p| quad(inv, &(p - mu))).sum();
    let mut pairwise = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            pairwise += quad(inv, &(u[i] - u[j]));
        }
    }
    if n > 0 {
        pairwise /= n as f64;
    }
    let between = if n > 0 {
        let centroid = u.iter().fold(Vector2::zeros(), |acc, p| acc + p) / n as f64;
        quad(inv, &(centroid - mu))
    } else {
        0.0
    };
    DecompositionTerms {
        delta,
        pairwise,
        between,
        n,
    }
}

/// What to do with a group mean component that has no observed value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingMeanPolicy {
    /// Use the global mean component, so that component contributes no deviation.
    #[default]
    GlobalMean,
    /// Write a literal zero into the group mean.
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DispersionScore {
    pub categorical_index: usize,
    pub value: f64,
    pub group_sizes: Vec<usize>,
}

/// Weighted between-group dispersion `sum_g n_g (m_g - m)' L (m_g - m)` for
/// one categorical column and one continuous pair. Groups with `n_g = 0`
/// are skipped.
pub fn dispersion_score(
    categorical_index: usize,
    global_mean: [f64; 2],
    class_means: &[[Option<f64>; 2]],
    group_sizes: &[usize],
    inv_block: &Matrix2<f64>,
    policy: MissingMeanPolicy,
) -> DispersionScore {
    let mut value = 0.0;
    for (means, &n) in class_means.iter().zip(group_sizes) {
        if n == 0 {
            continue;
        }
        let fill = |k: usize| match (means[k], policy) {
            (Some(v), _) => v,
            (None, MissingMeanPolicy::GlobalMean) => global_mean[k],
            (None, MissingMeanPolicy::Zero) => 0.0,
        };
        let dev = Vector2::new(fill(0) - global_mean[0], fill(1) - global_mean[1]);
        value += n as f64 * quad(inv_block, &dev);
    }
    DispersionScore {
        categorical_index,
        value,
        group_sizes: group_sizes.to_vec(),
    }
}

/// Categorical index with the smallest score; ties go to the smallest index.
pub fn argmin_score(scores: &[DispersionScore]) -> Option<usize> {
    scores
        .iter()
        .min_by(|a, b| {
            a.value
                .total_cmp(&b.value)
                .then(a.categorical_index.cmp(&b.categorical_index))
        })
        .map(|s| s.categorical_index)
}

/// Treatment of a first-stage estimate with a non-positive eigenvalue.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndefinitePolicy {
    /// Clip eigenvalues at `RIDGE_EPS * mean(diag)` before inverting, so every
    /// inverse block is positive definite and every score is non-negative.
    #[default]
    ClipEigenvalues,
    /// Invert as is; scores can then be negative.
    Literal,
}

/// `sigma` unchanged when it is positive definite, otherwise its symmetric
/// part with eigenvalues raised to `RIDGE_EPS * mean(diag)`.
pub fn repair_indefinite(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let p = sigma.nrows();
    if p == 0 {
        return sigma.clone();
    }
    let sym = (sigma + sigma.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen();
    if eig.eigenvalues.min() > 0.0 {
        return sigma.clone();
    }
    let scale = (sigma.diagonal().sum() / p as f64).abs();
    let floor = RIDGE_EPS * if scale > 0.0 { scale } else { 1.0 };
    log::debug!("first-stage estimate is not positive definite; clipping eigenvalues at {floor}");
    let clipped = eig.eigenvalues.map(|v| v.max(floor));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    (&out + out.transpose()) * 0.5
}

/// Inverse of `sigma`, with a ridge `RIDGE_EPS * mean(diag) * I` added first
/// when `sigma` is singular or its condition number exceeds `MAX_CONDITION`.
pub fn regularized_inverse(sigma: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = sigma.nrows();
    if p != sigma.ncols() {
        return Err(Error::ShapeMismatch {
            expected: (p, p),
            found: sigma.shape(),
        });
    }
    let sv = sigma.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    let well_conditioned = min > 0.0 && max / min <= MAX_CONDITION;
    if well_conditioned {
        if let Some(inv) = sigma.clone().try_inverse() {
            return Ok(inv);
        }
    }
    let scale = (sigma.diagonal().sum() / p as f64).abs();
    let mut ridge = RIDGE_EPS * if scale > 0.0 { scale } else { 1.0 };
    for _ in 0..12 {
        let m = sigma + DMatrix::identity(p, p) * ridge;
        if let Some(inv) = m.try_inverse() {
            if inv.iter().all(|v| v.is_finite()) {
                return Ok(inv);
            }
        }
        ridge *= 10.0;
    }
    Err(Error::Singular)
}

/// Precomputed state for scoring every categorical column against every
/// continuous pair of one dataset.
pub struct CategoricalSelector<'a> {
    ds: &'a MixedDataset,
    global_means: Vec<f64>,
    inverse: DMatrix<f64>,
    // [k][g][j]
    class_means: Vec<Vec<Vec<Option<f64>>>>,
    // [k][g]
    group_sizes: Vec<Vec<usize>>,
    policy: MissingMeanPolicy,
}

impl<'a> CategoricalSelector<'a> {
    /// `global_means` are the per-column observed means; `sigma_d` is the
    /// first-stage covariance estimate, inverted once here.
    pub fn new(
        ds: &'a MixedDataset,
        global_means: Vec<f64>,
        sigma_d: &DMatrix<f64>,
        opts: &DpercOptions,
    ) -> Result<Self> {
        if ds.categorical().is_empty() {
            return Err(Error::NoCategorical);
        }
        let inverse = match opts.indefinite {
            IndefinitePolicy::ClipEigenvalues => regularized_inverse(&repair_indefinite(sigma_d))?,
            IndefinitePolicy::Literal => regularized_inverse(sigma_d)?,
        };
        let cont = ds.continuous();
        let mut class_means = Vec::new();
        let mut group_sizes = Vec::new();
        for col in ds.categorical() {
            let groups = Groups::Coded {
                codes: col.codes(),
                count: col.group_count(),
            };
            class_means.push(dper::class_means(cont, groups));
            let mut sizes = vec![0usize; col.group_count()];
            for &c in col.codes() {
                sizes[c as usize] += 1;
            }
            group_sizes.push(sizes);
        }
        Ok(Self {
            ds,
            global_means,
            inverse,
            class_means,
            group_sizes,
            policy: opts.missing_mean,
        })
    }

    /// Elements `(i,i), (i,j), (j,j)` of the full inverse.
    pub fn inverse_block(&self, i: usize, j: usize) -> Matrix2<f64> {
        let inv = &self.inverse;
        Matrix2::new(inv[(i, i)], inv[(i, j)], inv[(j, i)], inv[(j, j)])
    }

    pub fn scores(&self, i: usize, j: usize) -> Vec<DispersionScore> {
        let block = self.inverse_block(i, j);
        let global = [self.global_means[i], self.global_means[j]];
        (0..self.ds.categorical().len())
            .map(|k| {
                let means: Vec<[Option<f64>; 2]> = self.class_means[k]
                    .iter()
                    .map(|m| [m[i], m[j]])
                    .collect();
                dispersion_score(k, global, &means, &self.group_sizes[k], &block, self.policy)
            })
            .collect()
    }

    pub fn select(&self, i: usize, j: usize) -> usize {
        argmin_score(&self.scores(i, j)).expect("at least one categorical column")
    }
}

/// Index of the categorical column used for pair `(i, j)`, given a
/// first-stage estimate of the dataset.
pub fn select_categorical(
    i: usize,
    j: usize,
    ds: &MixedDataset,
    sigma_d: &CovarianceEstimate,
) -> Result<usize> {
    let means = dper::observed_means(ds.continuous())?
        .iter()
        .map(|s| s.mean)
        .collect();
    let sel = CategoricalSelector::new(ds, means, &sigma_d.sigma, &DpercOptions::default())?;
    Ok(sel.select(i, j))
}

#[derive(Clone, Copy, Debug, Default)]
pub struct DpercOptions {
    pub missing_mean: MissingMeanPolicy,
    pub indefinite: IndefinitePolicy,
    pub rule: SelectionRule,
}

/// DPERC for single-class mixed data. Any class label column is ignored.
pub fn dperc_single(ds: &MixedDataset) -> Result<CovarianceEstimate> {
    dperc_single_with(ds, &DpercOptions::default())
}

pub fn dperc_single_with(ds: &MixedDataset, opts: &DpercOptions) -> Result<CovarianceEstimate> {
    if ds.categorical().is_empty() {
        return Err(Error::NoCategorical);
    }
    let cont = ds.continuous();
    let summaries = dper::observed_means(cont)?;
    let means: Vec<f64> = summaries.iter().map(|s| s.mean).collect();
    let first_stage = dper::dper_single_with(cont, opts.rule)?;
    let selector = CategoricalSelector::new(ds, means.clone(), &first_stage.sigma, opts)?;

    let p = cont.ncols();
    let mut sigma = DMatrix::zeros(p, p);
    for (j, s) in summaries.iter().enumerate() {
        sigma[(j, j)] = s.uncorrected_variance;
    }
    let categorical = ds.categorical();
    let provenance = dper::fill_off_diagonal(cont, &mut sigma, opts.rule, |i, j| {
        let k = selector.select(i, j);
        let col = &categorical[k];
        (
            Groups::Coded {
                codes: col.codes(),
                count: col.group_count(),
            },
            Some(k),
        )
    })?;
    Ok(CovarianceEstimate {
        sigma,
        means: vec![ClassMeans {
            class: None,
            means: means.into_iter().map(Some).collect(),
        }],
        provenance,
    })
}

/// DPERC for labeled data: one independent single-class estimate per class,
/// in ascending class code order. No covariance is shared across classes.
pub fn dperc_multi(ds: &MixedDataset) -> Result<Vec<(u32, CovarianceEstimate)>> {
    dperc_multi_with(ds, &DpercOptions::default())
}

pub fn dperc_multi_with(ds: &MixedDataset, opts: &DpercOptions) -> Result<Vec<(u32, CovarianceEstimate)>> {
    ds.split_by_class()?
        .into_iter()
        .map(|(class, part)| {
            let mut est = dperc_single_with(&part, opts)?;
            for m in &mut est.means {
                m.class = Some(class);
            }
            Ok((class, est))
        })
        .collect()
}
