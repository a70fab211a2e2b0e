//! Full covariance assembly from independent pairwise estimates, for
//! single-class data and for multi-class data sharing one covariance.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{ColumnSummary, MaskedMatrix};
use crate::error::{Error, Result};
use crate::pairwise::{self, Groups, SelectionRule, Sigma12Source};

/// Mean vector for one class. `None` marks a component with no observed
/// value in that class.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassMeans {
    pub class: Option<u32>,
    pub means: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairProvenance {
    pub i: usize,
    pub j: usize,
    /// The chosen root, when the entry came from the polynomial.
    pub selected_root: Option<f64>,
    pub source: Sigma12Source,
    /// True when the entry is the clamped case-deletion fallback.
    pub case_deletion_used: bool,
    /// Categorical column used as the artificial class, if any.
    pub categorical_used: Option<usize>,
}

/// Symmetric covariance estimate with the means that produced it.
///
/// Every 2x2 principal minor is positive semi-definite by construction; the
/// full matrix is not guaranteed to be.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceEstimate {
    pub sigma: DMatrix<f64>,
    pub means: Vec<ClassMeans>,
    pub provenance: Vec<PairProvenance>,
}

#[derive(Serialize)]
struct EstimateRecord<'a> {
    sigma: Vec<Vec<f64>>,
    means: &'a [ClassMeans],
    provenance: &'a [PairProvenance],
}

impl CovarianceEstimate {
    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn to_json(&self) -> Result<String> {
        let rec = EstimateRecord {
            sigma: matrix_rows(&self.sigma),
            means: &self.means,
            provenance: &self.provenance,
        };
        Ok(serde_json::to_string_pretty(&rec)?)
    }
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| m.row(r).iter().copied().collect())
        .collect()
}

pub(crate) fn observed_means(cont: &MaskedMatrix) -> Result<Vec<ColumnSummary>> {
    cont.columns()
        .enumerate()
        .map(|(j, c)| {
            ColumnSummary::of(c).map_err(|_| Error::EmptyColumn {
                column: format!("x{j}"),
            })
        })
        .collect()
}

fn pairs(p: usize) -> Vec<(usize, usize)> {
    (0..p).flat_map(|i| (i + 1..p).map(move |j| (i, j))).collect()
}

/// Runs the pairwise estimator for every `i < j` in parallel and writes the
/// results into `sigma`. `pick` supplies the grouping for each pair.
pub(crate) fn fill_off_diagonal<'a, F>(
    cont: &MaskedMatrix,
    sigma: &mut DMatrix<f64>,
    rule: SelectionRule,
    pick: F,
) -> Result<Vec<PairProvenance>>
where
    F: Fn(usize, usize) -> (Groups<'a>, Option<usize>) + Sync,
{
    let results: Vec<Result<(f64, PairProvenance)>> = pairs(cont.ncols())
        .into_par_iter()
        .map(|(i, j)| {
            let (groups, categorical_used) = pick(i, j);
            let est = pairwise::estimate_pair(cont.column(i), cont.column(j), groups, rule)?;
            Ok((
                est.sigma12,
                PairProvenance {
                    i,
                    j,
                    selected_root: est.selection.as_ref().map(|s| s.chosen),
                    source: est.source,
                    case_deletion_used: est.source == Sigma12Source::CaseDeletionFallback,
                    categorical_used,
                },
            ))
        })
        .collect();
    let mut provenance = Vec::with_capacity(results.len());
    for r in results {
        let (value, prov) = r?;
        sigma[(prov.i, prov.j)] = value;
        sigma[(prov.j, prov.i)] = value;
        provenance.push(prov);
    }
    Ok(provenance)
}

/// DPER for single-class data: observed means, uncorrected variances on the
/// diagonal, and one pairwise MLE per off-diagonal entry.
pub fn dper_single(cont: &MaskedMatrix) -> Result<CovarianceEstimate> {
    dper_single_with(cont, SelectionRule::default())
}

pub fn dper_single_with(cont: &MaskedMatrix, rule: SelectionRule) -> Result<CovarianceEstimate> {
    let summaries = observed_means(cont)?;
    let p = cont.ncols();
    let mut sigma = DMatrix::zeros(p, p);
    for (j, s) in summaries.iter().enumerate() {
        sigma[(j, j)] = s.uncorrected_variance;
    }
    let provenance = fill_off_diagonal(cont, &mut sigma, rule, |_, _| (Groups::Single, None))?;
    Ok(CovarianceEstimate {
        sigma,
        means: vec![ClassMeans {
            class: None,
            means: summaries.iter().map(|s| Some(s.mean)).collect(),
        }],
        provenance,
    })
}

/// Per-class observed means of every column. Row `g` of the result holds
/// class `g`.
pub(crate) fn class_means(cont: &MaskedMatrix, groups: Groups<'_>) -> Vec<Vec<Option<f64>>> {
    let g = groups.count();
    let p = cont.ncols();
    let mut sum = vec![vec![0.0; p]; g];
    let mut count = vec![vec![0usize; p]; g];
    for (j, col) in cont.columns().enumerate() {
        for r in 0..col.len() {
            if let Some(x) = col.get(r) {
                let k = groups.of(r);
                sum[k][j] += x;
                count[k][j] += 1;
            }
        }
    }
    sum.iter()
        .zip(&count)
        .map(|(s, c)| {
            s.iter()
                .zip(c)
                .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
                .collect()
        })
        .collect()
}

/// DPER for multi-class data under a common covariance: per-class means,
/// pooled within-class variances on the diagonal, and pairwise MLEs with the
/// classes as groups.
pub fn dper_multi(cont: &MaskedMatrix, labels: &[u32]) -> Result<CovarianceEstimate> {
    if labels.len() != cont.nrows() {
        return Err(Error::ShapeMismatch {
            expected: (cont.nrows(), 1),
            found: (labels.len(), 1),
        });
    }
    observed_means(cont)?;
    let groups = Groups::coded(labels);
    let p = cont.ncols();
    let mut sigma = DMatrix::zeros(p, p);
    for j in 0..p {
        sigma[(j, j)] = pairwise::pooled_variance(cont.column(j), groups)?;
    }
    let provenance = fill_off_diagonal(cont, &mut sigma, SelectionRule::default(), |_, _| {
        (groups, None)
    })?;
    let means = class_means(cont, groups)
        .into_iter()
        .enumerate()
        .map(|(g, means)| ClassMeans {
            class: Some(g as u32),
            means,
        })
        .collect();
    Ok(CovarianceEstimate {
        sigma,
        means,
        provenance,
    })
}

/// Nearest positive semi-definite matrix in Frobenius norm (eigenvalues
/// clipped at zero). Not part of the estimator; offered for consumers that
/// need a valid full covariance.
pub fn project_psd(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (sigma + sigma.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let clipped = eig.eigenvalues.map(|v| v.max(0.0));
    let v = &eig.eigenvectors;
    let out = v * DMatrix::from_diagonal(&clipped) * v.transpose();
    (&out + out.transpose()) * 0.5
}
