//! Masking benchmark: for every (rate, repeat), draw a fresh MCAR mask, run
//! each method, and score it against a reference covariance.

use std::path::PathBuf;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{self, ImputedMatrix, ImputeMethod, KNN_DISTANCE};
use crate::data::{MaskedMatrix, MixedDataset};
use crate::error::{Error, Result};
use crate::metrics::{self, MetricRecord};
use crate::missingness::{self, MaskPlan, RNG_ID};
use crate::report::{self, HeatmapSpec};
use crate::{dper, dperc};

pub const DEFAULT_RATES: [f64; 5] = [0.2, 0.35, 0.5, 0.65, 0.8];
pub const DEFAULT_REPEATS: usize = 10;
pub const DEFAULT_K: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Method {
    Dper,
    Dperc,
    Mean,
    Knn { k: usize },
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Dper => "dper",
            Self::Dperc => "dperc",
            Self::Mean => "mean",
            Self::Knn { .. } => "knn",
        }
    }

    /// Parses `dper`, `dperc`, `mean`, or `knn`; `k` applies to `knn`.
    pub fn parse(s: &str, k: usize) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dper" => Ok(Self::Dper),
            "dperc" => Ok(Self::Dperc),
            "mean" => Ok(Self::Mean),
            "knn" => Ok(Self::Knn { k }),
            other => Err(Error::Invalid(format!("unknown method '{other}'"))),
        }
    }

    /// Covariance of one single-class block.
    pub fn estimate(&self, ds: &MixedDataset) -> Result<DMatrix<f64>> {
        let cont = ds.continuous();
        Ok(match self {
            Self::Dper => dper::dper_single(cont)?.sigma,
            Self::Dperc => dperc::dperc_single(ds)?.sigma,
            Self::Mean => baselines::sample_cov(&baselines::mean_impute(cont)?)?.sigma,
            Self::Knn { k } => baselines::sample_cov(&baselines::knn_impute(cont, *k)?)?.sigma,
        })
    }
}

/// Labeled data is split by class and every block is handled on its own.
fn blocks(ds: &MixedDataset) -> Result<Vec<(Option<u32>, MixedDataset)>> {
    if ds.labels().is_some() {
        Ok(ds
            .split_by_class()?
            .into_iter()
            .map(|(c, part)| (Some(c), part))
            .collect())
    } else {
        Ok(vec![(None, ds.clone())])
    }
}

fn complete_covariance(cont: &MaskedMatrix) -> Result<DMatrix<f64>> {
    let imp = ImputedMatrix::new(cont.to_dmatrix(), ImputeMethod::External)?;
    Ok(baselines::sample_cov(&imp)?.sigma)
}

/// Reference covariance per block: the uncorrected sample covariance of the
/// unmasked data. Fails when any continuous entry is missing.
pub fn ground_truth(ds: &MixedDataset) -> Result<Vec<DMatrix<f64>>> {
    if !ds.continuous().is_complete() {
        return Err(Error::Invalid(
            "input has missing entries; supply a reference covariance".into(),
        ));
    }
    blocks(ds)?
        .iter()
        .map(|(_, part)| complete_covariance(part.continuous()))
        .collect()
}

#[derive(Clone, Debug)]
pub struct BenchmarkConfig {
    pub dataset: String,
    pub methods: Vec<Method>,
    pub rates: Vec<f64>,
    pub repeats: usize,
    pub seed: u64,
    /// Shared reference for every block; computed from the data when absent.
    pub truth: Option<DMatrix<f64>>,
    /// Heatmaps for repeat 0 of every rate are written here when set.
    pub heatmap_dir: Option<PathBuf>,
    pub timestamp: Option<String>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            dataset: "dataset".into(),
            methods: vec![Method::Dper, Method::Dperc, Method::Mean, Method::Knn { k: DEFAULT_K }],
            rates: DEFAULT_RATES.to_vec(),
            repeats: DEFAULT_REPEATS,
            seed: 0,
            truth: None,
            heatmap_dir: None,
            timestamp: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: String,
    pub rate: f64,
    pub runs: usize,
    pub e: f64,
    pub r: f64,
    /// Improvement computed from the mean `r` values; DPERC rows only.
    pub p: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Environment {
    pub rng: String,
    pub version: String,
    pub timestamp: Option<String>,
    pub knn_distance: String,
    pub truth: String,
    pub scoring: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub dataset: String,
    pub rows: Vec<MetricRecord>,
    pub summary: Vec<SummaryRow>,
    pub environment: Environment,
    /// File names relative to the heatmap directory.
    pub artifacts: Vec<String>,
}

impl BenchmarkReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// One CSV row per run: dataset, method, rate, repeat, seed, e, r, p.
    pub fn write_rows_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["dataset", "method", "rate", "repeat", "seed", "e", "r", "p"])?;
        for row in &self.rows {
            w.write_record([
                row.dataset.clone(),
                row.method.clone(),
                row.rate.to_string(),
                row.repeat.to_string(),
                row.seed.to_string(),
                row.e.to_string(),
                row.r.to_string(),
                row.p.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

struct RunOutput {
    rows: Vec<MetricRecord>,
    // per method, per block
    estimates: Vec<Vec<DMatrix<f64>>>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn run_once(
    ds: &MixedDataset,
    cfg: &BenchmarkConfig,
    truths: &[DMatrix<f64>],
    rate: f64,
    repeat: usize,
) -> Result<RunOutput> {
    let seed = missingness::derive_seed(cfg.seed, rate, repeat as u64);
    let masked = missingness::apply_mcar(ds, &MaskPlan::new(rate, seed))?;
    let parts = blocks(&masked)?;
    let mut rows = Vec::with_capacity(cfg.methods.len());
    let mut estimates = Vec::with_capacity(cfg.methods.len());
    for method in &cfg.methods {
        let ests: Vec<DMatrix<f64>> = parts
            .iter()
            .map(|(_, part)| method.estimate(part))
            .collect::<Result<_>>()?;
        let e = mean(
            ests.iter()
                .zip(truths)
                .map(|(est, t)| metrics::error_e(est, t))
                .collect::<Result<Vec<_>>>()?
                .into_iter(),
        );
        let r = mean(
            ests.iter()
                .zip(truths)
                .map(|(est, t)| metrics::error_r(est, t))
                .collect::<Result<Vec<_>>>()?
                .into_iter(),
        );
        rows.push(MetricRecord {
            dataset: cfg.dataset.clone(),
            method: method.name().to_string(),
            rate,
            repeat,
            seed,
            e,
            r,
            p: None,
        });
        estimates.push(ests);
    }
    let dper_r = rows.iter().find(|row| row.method == "dper").map(|row| row.r);
    if let Some(base) = dper_r {
        for row in rows.iter_mut().filter(|row| row.method == "dperc") {
            row.p = metrics::improvement_p(row.r, base).ok();
        }
    }
    Ok(RunOutput { rows, estimates })
}

fn validate(ds: &MixedDataset, cfg: &BenchmarkConfig) -> Result<()> {
    if cfg.repeats == 0 {
        return Err(Error::InvalidPlan("repeats must be at least 1".into()));
    }
    if cfg.methods.is_empty() {
        return Err(Error::InvalidPlan("no methods configured".into()));
    }
    if let Some(r) = cfg.rates.iter().find(|r| !(r.is_finite() && (0.0..1.0).contains(*r))) {
        return Err(Error::InvalidPlan(format!("rate {r} outside [0, 1)")));
    }
    if cfg.methods.contains(&Method::Dperc) && ds.categorical().is_empty() {
        return Err(Error::NoCategorical);
    }
    Ok(())
}

/// Runs every `(rate, repeat)` combination. Each run derives its own seed
/// from `(seed, rate, repeat)`, so results do not depend on scheduling.
pub fn run_benchmark(ds: &MixedDataset, cfg: &BenchmarkConfig) -> Result<BenchmarkReport> {
    validate(ds, cfg)?;
    let n_blocks = blocks(ds)?.len();
    let (truths, truth_kind) = match &cfg.truth {
        Some(t) => {
            let p = ds.continuous().ncols();
            if t.shape() != (p, p) {
                return Err(Error::ShapeMismatch {
                    expected: (p, p),
                    found: t.shape(),
                });
            }
            (vec![t.clone(); n_blocks], "supplied")
        }
        None => (ground_truth(ds)?, "complete_data_uncorrected_sample_covariance"),
    };

    let jobs: Vec<(f64, usize)> = cfg
        .rates
        .iter()
        .flat_map(|&rate| (0..cfg.repeats).map(move |rep| (rate, rep)))
        .collect();
    let outputs: Vec<RunOutput> = jobs
        .par_iter()
        .map(|&(rate, rep)| run_once(ds, cfg, &truths, rate, rep))
        .collect::<Result<_>>()?;

    let rows: Vec<MetricRecord> = outputs.iter().flat_map(|o| o.rows.iter().cloned()).collect();
    let mut summary = Vec::new();
    for &rate in &cfg.rates {
        let mut mean_r = Vec::new();
        for method in &cfg.methods {
            let sel: Vec<&MetricRecord> = rows
                .iter()
                .filter(|row| row.rate == rate && row.method == method.name())
                .collect();
            let e = mean(sel.iter().map(|row| row.e));
            let r = mean(sel.iter().map(|row| row.r));
            mean_r.push((method.name(), r));
            summary.push(SummaryRow {
                method: method.name().to_string(),
                rate,
                runs: sel.len(),
                e,
                r,
                p: None,
            });
        }
        let base = mean_r.iter().find(|(m, _)| *m == "dper").map(|(_, r)| *r);
        if let Some(base) = base {
            let start = summary.len() - cfg.methods.len();
            for row in summary[start..].iter_mut().filter(|row| row.method == "dperc") {
                row.p = metrics::improvement_p(row.r, base).ok();
            }
        }
    }

    let mut artifacts = Vec::new();
    if let Some(dir) = &cfg.heatmap_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let labels = ds.schema().continuous_names();
        let classes: Vec<Option<u32>> = blocks(ds)?.into_iter().map(|(c, _)| c).collect();
        let suffix = |c: Option<u32>| c.map(|c| format!("_class{c}")).unwrap_or_default();
        let truth_corr: Vec<DMatrix<f64>> = truths
            .iter()
            .map(metrics::cov_to_corr)
            .collect::<Result<_>>()?;
        for (b, corr) in truth_corr.iter().enumerate() {
            let name = format!("truth{}_correlation.svg", suffix(classes[b]));
            let spec = HeatmapSpec::correlation(labels.clone(), "reference correlation");
            report::render_heatmap(corr, &spec, &dir.join(&name))?;
            artifacts.push(name);
        }
        for (job, out) in jobs.iter().zip(&outputs) {
            let (rate, rep) = *job;
            if rep != 0 {
                continue;
            }
            for (method, ests) in cfg.methods.iter().zip(&out.estimates) {
                for (b, est) in ests.iter().enumerate() {
                    let stem = format!("{}_rate{:.2}{}", method.name(), rate, suffix(classes[b]));
                    let title = format!("{} at missing rate {:.2}", method.name(), rate);
                    let corr = metrics::cov_to_corr(est)?;
                    let mse = report::local_mse_matrix(&truth_corr[b], &corr)?;
                    let diff = report::signed_diff_matrix(&truth_corr[b], &corr)?;
                    let specs = [
                        (corr.clone(), HeatmapSpec::correlation(labels.clone(), title.clone())),
                        (mse.clone(), HeatmapSpec::local_mse(&mse, labels.clone(), title.clone())),
                        (diff.clone(), HeatmapSpec::signed_diff(&diff, labels.clone(), title.clone())),
                    ];
                    for (m, spec) in specs {
                        let name = format!("{stem}_{}.svg", spec.kind.slug());
                        report::render_heatmap(&m, &spec, &dir.join(&name))?;
                        artifacts.push(name);
                    }
                }
            }
        }
    }

    let scoring = if n_blocks > 1 { "mean_over_classes" } else { "single_block" };
    Ok(BenchmarkReport {
        dataset: cfg.dataset.clone(),
        rows,
        summary,
        environment: Environment {
            rng: RNG_ID.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: cfg.timestamp.clone(),
            knn_distance: KNN_DISTANCE.to_string(),
            truth: truth_kind.to_string(),
            scoring: scoring.to_string(),
        },
        artifacts,
    })
}
