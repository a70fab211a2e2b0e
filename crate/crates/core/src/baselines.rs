//! Imputation baselines: fill the missing cells, then take the ordinary
//! uncorrected covariance of the completed matrix.

use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::MaskedMatrix;
use crate::dper::{observed_means, ClassMeans, CovarianceEstimate};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ImputeMethod {
    Mean,
    Knn { k: usize },
    /// Produced outside this crate and loaded from CSV.
    External,
}

/// Distance used by [`knn_impute`], recorded in reports.
pub const KNN_DISTANCE: &str = "euclidean over co-observed coordinates, scaled by sqrt(p / co-observed)";

#[derive(Clone, Debug, PartialEq)]
pub struct ImputedMatrix {
    pub values: DMatrix<f64>,
    pub method: ImputeMethod,
}

impl ImputedMatrix {
    pub fn new(values: DMatrix<f64>, method: ImputeMethod) -> Result<Self> {
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            let n = values.nrows().max(1);
            return Err(Error::NonNumeric {
                row: idx % n,
                column: format!("x{}", idx / n),
                value: values[idx].to_string(),
            });
        }
        Ok(Self { values, method })
    }
}

fn column_means(cont: &MaskedMatrix) -> Result<Vec<f64>> {
    Ok(observed_means(cont)?.iter().map(|s| s.mean).collect())
}

pub fn mean_impute(cont: &MaskedMatrix) -> Result<ImputedMatrix> {
    let means = column_means(cont)?;
    let values = DMatrix::from_fn(cont.nrows(), cont.ncols(), |r, c| cont.get(r, c).unwrap_or(means[c]));
    Ok(ImputedMatrix {
        values,
        method: ImputeMethod::Mean,
    })
}

/// Scaled distance between two rows over co-observed coordinates, or `None`
/// when they share no observed coordinate.
fn row_distance(cont: &MaskedMatrix, a: usize, b: usize) -> Option<f64> {
    let p = cont.ncols();
    let mut sum = 0.0;
    let mut shared = 0usize;
    for c in 0..p {
        if let (Some(x), Some(y)) = (cont.get(a, c), cont.get(b, c)) {
            sum += (x - y) * (x - y);
            shared += 1;
        }
    }
    (shared > 0).then(|| (sum * p as f64 / shared as f64).sqrt())
}

/// Each missing cell becomes the mean of that coordinate over the `k`
/// nearest rows observing it (all of them if fewer than `k`, the column mean
/// if none). Distance ties resolve to the lower row index.
pub fn knn_impute(cont: &MaskedMatrix, k: usize) -> Result<ImputedMatrix> {
    if k == 0 {
        return Err(Error::Invalid("k must be at least 1".into()));
    }
    let means = column_means(cont)?;
    let (n, p) = (cont.nrows(), cont.ncols());
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|r| {
            let mut out: Vec<f64> = (0..p).map(|c| cont.get(r, c).unwrap_or(f64::NAN)).collect();
            if (0..p).all(|c| cont.is_observed(r, c)) {
                return out;
            }
            let mut neighbours: Vec<(f64, usize)> = (0..n)
                .filter(|&o| o != r)
                .filter_map(|o| row_distance(cont, r, o).map(|d| (d, o)))
                .collect();
            neighbours.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            for c in (0..p).filter(|&c| !cont.is_observed(r, c)) {
                let vals: Vec<f64> = neighbours
                    .iter()
                    .filter_map(|&(_, o)| cont.get(o, c))
                    .take(k)
                    .collect();
                out[c] = if vals.is_empty() {
                    means[c]
                } else {
                    vals.iter().sum::<f64>() / vals.len() as f64
                };
            }
            out
        })
        .collect();
    let values = DMatrix::from_fn(n, p, |r, c| rows[r][c]);
    Ok(ImputedMatrix {
        values,
        method: ImputeMethod::Knn { k },
    })
}

/// Uncorrected (divide-by-N) covariance of the completed matrix, two-pass.
pub fn sample_cov(imp: &ImputedMatrix) -> Result<CovarianceEstimate> {
    let m = &imp.values;
    let (n, p) = m.shape();
    if n == 0 {
        return Err(Error::Invalid("sample covariance of an empty matrix".into()));
    }
    let means: Vec<f64> = (0..p).map(|c| m.column(c).sum() / n as f64).collect();
    let centred = DMatrix::from_fn(n, p, |r, c| m[(r, c)] - means[c]);
    let mut sigma = centred.transpose() * &centred / n as f64;
    for i in 0..p {
        for j in 0..i {
            sigma[(i, j)] = sigma[(j, i)];
        }
    }
    Ok(CovarianceEstimate {
        sigma,
        means: vec![ClassMeans {
            class: None,
            means: means.into_iter().map(Some).collect(),
        }],
        provenance: Vec::new(),
    })
}

/// Reads a fully observed numeric CSV with a header row.
pub fn read_imputed_csv(path: impl AsRef<Path>) -> Result<ImputedMatrix> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let p = header.len();
    let mut data = Vec::new();
    let mut n = 0;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != p {
            return Err(Error::ShapeMismatch {
                expected: (row, p),
                found: (row, rec.len()),
            });
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::NonNumeric {
                row,
                column: header[c].clone(),
                value: field.to_owned(),
            })?;
            data.push(v);
        }
        n += 1;
    }
    ImputedMatrix::new(DMatrix::from_row_slice(n, p, &data), ImputeMethod::External)
}
