mod args;
mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use dperc::baselines::{knn_impute, mean_impute, read_imputed_csv, sample_cov};
use dperc::benchmark::{run_benchmark, BenchmarkConfig, Method, DEFAULT_K, DEFAULT_RATES, DEFAULT_REPEATS};
use dperc::data::{ingest_csv, ingest_csv_inferred, write_csv_file};
use dperc::dper::project_psd;
use dperc::metrics::{cov_to_corr, error_e, error_r};
use dperc::missingness::{derive_seed, observed_rate};
use dperc::report::{
    local_mse_matrix, read_matrix_csv, render_heatmap, signed_diff_matrix, write_matrix_csv, HeatmapSpec,
};
use dperc::{apply_mcar, dper_multi, dper_single, dperc_multi, dperc_single, CovarianceEstimate, CsvOptions};
use dperc::{DatasetSchema, MaskPlan, MixedDataset};
use nalgebra::DMatrix;
use serde::Serialize;

use args::{BaselineArg, BenchmarkArgs, Cli, Command, DataArgs, EstimateArgs, HeatmapArgs, MethodArg, SimulateArgs};
use config::FileConfig;

/// Exit code for malformed invocations and unreadable matrix input.
const EXIT_USAGE: u8 = 2;
const EXIT_FAILURE: u8 = 1;

#[derive(Debug)]
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            kind: "usage",
            message: message.into(),
        }
    }
}

impl From<dperc::Error> for Failure {
    fn from(e: dperc::Error) -> Self {
        let code = match e {
            dperc::Error::Parse(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        Self {
            code,
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let body = serde_json::json!({ "error": f.kind, "message": f.message });
            eprintln!("{body}");
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let cfg = match &cli.config {
        Some(p) => FileConfig::load(p).map_err(Failure::usage)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Estimate(a) => estimate(a, &cfg),
        Command::Simulate(a) => simulate(a, &cfg),
        Command::Benchmark(a) => benchmark(a, &cfg),
        Command::Heatmap(a) => heatmap(a, &cfg),
    }
}

fn out_dir(flag: Option<PathBuf>, cfg: &FileConfig) -> CliResult<PathBuf> {
    let dir = flag.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| io_failure(&dir, e))?;
    Ok(dir)
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_FAILURE,
        kind: "io",
        message: format!("{}: {e}", path.display()),
    }
}

fn write_text(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| io_failure(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(dperc::Error::from)? + "\n";
    write_text(path, &text)
}

fn load_dataset(a: &DataArgs, cfg: &FileConfig) -> CliResult<(MixedDataset, String)> {
    let path = a
        .data
        .clone()
        .or_else(|| cfg.data.clone())
        .ok_or_else(|| Failure::usage("--data is required"))?;
    let opts = CsvOptions {
        missing_token: a.missing_token.clone().or_else(|| cfg.missing_token.clone()).unwrap_or_default(),
    };
    let label = a.label.clone().or_else(|| cfg.label.clone());
    // An explicit --infer-schema beats a schema path from the config file.
    let schema = if a.infer_schema {
        None
    } else if a.schema.is_some() {
        a.schema.clone()
    } else if cfg.infer_schema == Some(true) {
        None
    } else {
        cfg.schema.clone()
    };
    let ds = match schema {
        Some(s) => {
            let schema = DatasetSchema::from_sidecar_file(&s)?;
            if let Some(l) = &label {
                if schema.label_name() != Some(l.as_str()) {
                    return Err(Failure::usage(format!(
                        "--label `{l}` disagrees with the schema file; declare the label there"
                    )));
                }
            }
            ingest_csv(&path, &schema, &opts)?
        }
        None => ingest_csv_inferred(&path, label.as_deref(), &opts)?,
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Ok((ds, name))
}

fn resolve_rates(flag: Option<Vec<f64>>, cfg: &FileConfig) -> Vec<f64> {
    flag.or_else(|| cfg.rates.clone()).unwrap_or_else(|| DEFAULT_RATES.to_vec())
}

fn resolve_repeats(flag: Option<usize>, cfg: &FileConfig) -> CliResult<usize> {
    let r = flag.or(cfg.repeats).unwrap_or(DEFAULT_REPEATS);
    if r == 0 {
        return Err(Failure::usage("--repeats must be at least 1"));
    }
    Ok(r)
}

fn check_rates(rates: &[f64]) -> CliResult {
    if rates.is_empty() {
        return Err(Failure::usage("at least one missing rate is required"));
    }
    if let Some(r) = rates.iter().find(|r| !(0.0..1.0).contains(*r)) {
        return Err(Failure::usage(format!("missing rate {r} is outside [0, 1)")));
    }
    Ok(())
}

fn method_of(m: MethodArg, k: usize) -> Method {
    match m {
        MethodArg::Dper => Method::Dper,
        MethodArg::Dperc => Method::Dperc,
        MethodArg::Mean => Method::Mean,
        MethodArg::Knn => Method::Knn { k },
    }
}

fn baseline_of(b: BaselineArg, k: usize) -> Method {
    match b {
        BaselineArg::Mean => Method::Mean,
        BaselineArg::Knn => Method::Knn { k },
    }
}

fn parse_config_methods(names: &[String], k: usize) -> CliResult<Vec<Method>> {
    names
        .iter()
        .map(|n| Method::parse(n, k).map_err(|e| Failure::usage(format!("config: {e}"))))
        .collect()
}

fn matrix_labels(n: usize, names: Vec<String>) -> Vec<String> {
    if names.len() == n {
        names
    } else {
        (0..n).map(|i| format!("x{i}")).collect()
    }
}

#[derive(Serialize)]
struct ScoreEntry {
    class: Option<u32>,
    e: f64,
    r: f64,
}

fn estimate(a: EstimateArgs, cfg: &FileConfig) -> CliResult {
    let out = out_dir(a.out.out.clone(), cfg)?;
    let k = a.k.or(cfg.k).unwrap_or(DEFAULT_K);

    let (labels, results): (Vec<String>, Vec<(Option<u32>, CovarianceEstimate)>) = if let Some(imp_path) = &a.imputed_csv {
        let imp = read_imputed_csv(imp_path)?;
        let n = imp.values.ncols();
        (matrix_labels(n, Vec::new()), vec![(None, sample_cov(&imp)?)])
    } else {
        let (ds, _) = load_dataset(&a.data, cfg)?;
        let names = ds.schema().continuous_names();
        let method = match (a.baseline, a.method) {
            (Some(b), _) => baseline_of(b, k),
            (None, Some(m)) => method_of(m, k),
            (None, None) => match cfg.methods.as_deref() {
                Some([one]) => Method::parse(one, k).map_err(|e| Failure::usage(format!("config: {e}")))?,
                Some(_) => return Err(Failure::usage("config: estimate takes exactly one method")),
                None => Method::Dper,
            },
        };
        let results = match method {
            Method::Dper => match ds.labels() {
                Some(l) => vec![(None, dper_multi(ds.continuous(), l.codes())?)],
                None => vec![(None, dper_single(ds.continuous())?)],
            },
            Method::Dperc if ds.labels().is_some() => {
                dperc_multi(&ds)?.into_iter().map(|(c, e)| (Some(c), e)).collect()
            }
            Method::Dperc => vec![(None, dperc_single(&ds)?)],
            Method::Mean => vec![(None, sample_cov(&mean_impute(ds.continuous())?)?)],
            Method::Knn { k } => vec![(None, sample_cov(&knn_impute(ds.continuous(), k)?)?)],
        };
        (names, results)
    };

    let truth = match a.truth.clone().or_else(|| cfg.truth.clone()) {
        Some(p) => Some(read_matrix_csv(&p)?.1),
        None => None,
    };

    let mut scores = Vec::new();
    for (class, est) in &results {
        let suffix = class.map(|c| format!("_class{c}")).unwrap_or_default();
        write_text(&out.join(format!("estimate{suffix}.json")), &est.to_json()?)?;
        write_matrix_csv(&est.sigma, &labels, &out.join(format!("sigma{suffix}.csv")))?;
        if a.psd {
            write_matrix_csv(&project_psd(&est.sigma), &labels, &out.join(format!("sigma_psd{suffix}.csv")))?;
        }
        if let Some(t) = &truth {
            scores.push(ScoreEntry {
                class: *class,
                e: error_e(&est.sigma, t)?,
                r: error_r(&est.sigma, t)?,
            });
        }
    }
    if truth.is_some() {
        write_json(&out.join("metrics.json"), &scores)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulatedFile {
    file: String,
    rate: f64,
    repeat: usize,
    seed: u64,
    realized_rate: f64,
}

fn simulate(a: SimulateArgs, cfg: &FileConfig) -> CliResult {
    let (ds, _) = load_dataset(&a.data, cfg)?;
    let out = out_dir(a.out.out.clone(), cfg)?;
    let rates = resolve_rates(a.missing_rate.clone(), cfg);
    check_rates(&rates)?;
    let repeats = resolve_repeats(a.repeats, cfg)?;
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let token = a.data.missing_token.clone().or_else(|| cfg.missing_token.clone()).unwrap_or_default();

    let mut manifest = Vec::new();
    for &rate in &rates {
        for repeat in 0..repeats {
            let s = derive_seed(seed, rate, repeat as u64);
            let masked = apply_mcar(&ds, &MaskPlan::new(rate, s))?;
            let file = format!("masked_rate{rate:.2}_rep{repeat}.csv");
            write_csv_file(&masked, out.join(&file), &token)?;
            manifest.push(SimulatedFile {
                file,
                rate,
                repeat,
                seed: s,
                realized_rate: observed_rate(&masked),
            });
        }
    }
    write_json(&out.join("simulate.json"), &manifest)
}

fn benchmark(a: BenchmarkArgs, cfg: &FileConfig) -> CliResult {
    let (ds, name) = load_dataset(&a.data, cfg)?;
    let out = out_dir(a.out.out.clone(), cfg)?;
    let k = a.k.or(cfg.k).unwrap_or(DEFAULT_K);
    let rates = resolve_rates(a.missing_rate.clone(), cfg);
    check_rates(&rates)?;
    let repeats = resolve_repeats(a.repeats, cfg)?;

    let mut methods: Vec<Method> = match (&a.method, &cfg.methods) {
        (Some(m), _) => m.iter().map(|&m| method_of(m, k)).collect(),
        (None, Some(names)) => parse_config_methods(names, k)?,
        (None, None) if a.baseline.is_some() || cfg.baselines.is_some() => vec![Method::Dper, Method::Dperc],
        (None, None) => BenchmarkConfig::default()
            .methods
            .into_iter()
            .map(|m| match m {
                Method::Knn { .. } => Method::Knn { k },
                other => other,
            })
            .collect(),
    };
    let baselines = match (&a.baseline, &cfg.baselines) {
        (Some(b), _) => b.iter().map(|&b| baseline_of(b, k)).collect(),
        (None, Some(names)) => parse_config_methods(names, k)?,
        (None, None) => Vec::new(),
    };
    for b in baselines {
        if !methods.contains(&b) {
            methods.push(b);
        }
    }
    // The default method set drops dperc silently when there is nothing to select.
    if ds.schema().q() == 0 && a.method.is_none() && cfg.methods.is_none() {
        methods.retain(|m| *m != Method::Dperc);
    }

    let truth = match a.truth.clone().or_else(|| cfg.truth.clone()) {
        Some(p) => Some(read_matrix_csv(&p)?.1),
        None => None,
    };
    let heatmap_dir = (!a.no_heatmaps).then(|| out.join("heatmaps"));
    let bc = BenchmarkConfig {
        dataset: name,
        methods,
        rates,
        repeats,
        seed: a.seed.or(cfg.seed).unwrap_or(0),
        truth,
        heatmap_dir,
        timestamp: a.timestamp.clone(),
    };
    let report = run_benchmark(&ds, &bc)?;

    write_text(&out.join("report.json"), &report.to_json()?)?;
    let rows_path = out.join("rows.csv");
    let f = fs::File::create(&rows_path).map_err(|e| io_failure(&rows_path, e))?;
    report.write_rows_csv(std::io::BufWriter::new(f))?;

    let mut summary = String::from("method,rate,runs,e,r,p\n");
    for s in &report.summary {
        let p = s.p.map(|p| p.to_string()).unwrap_or_default();
        let _ = writeln!(summary, "{},{},{},{},{},{}", s.method, s.rate, s.runs, s.e, s.r, p);
    }
    write_text(&out.join("summary.csv"), &summary)
}

fn heatmap(a: HeatmapArgs, cfg: &FileConfig) -> CliResult {
    let out = out_dir(a.out.out.clone(), cfg)?;
    let (labels, truth) = read_matrix_csv(&a.truth)?;
    let r_true = cov_to_corr(&truth)?;

    let mut seen = std::collections::HashSet::new();
    for path in &a.estimates {
        let (_, est) = read_matrix_csv(path)?;
        if est.shape() != truth.shape() {
            return Err(dperc::Error::ShapeMismatch {
                expected: truth.shape(),
                found: est.shape(),
            }
            .into());
        }
        let r_est = cov_to_corr(&est)?;
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "estimate".into());
        if !seen.insert(stem.clone()) {
            return Err(Failure::usage(format!("two estimates share the file stem `{stem}`")));
        }
        render_set(&out, &stem, &labels, &r_true, &r_est)?;
    }
    Ok(())
}

fn render_set(out: &Path, stem: &str, labels: &[String], r_true: &DMatrix<f64>, r_est: &DMatrix<f64>) -> CliResult {
    let corr = HeatmapSpec::correlation(labels.to_vec(), format!("{stem}: correlation"));
    render_heatmap(r_est, &corr, &out.join(format!("{stem}_{}.svg", corr.kind.slug())))?;

    let mse = local_mse_matrix(r_true, r_est)?;
    let spec = HeatmapSpec::local_mse(&mse, labels.to_vec(), format!("{stem}: local MSE"));
    render_heatmap(&mse, &spec, &out.join(format!("{stem}_{}.svg", spec.kind.slug())))?;

    let diff = signed_diff_matrix(r_true, r_est)?;
    let spec = HeatmapSpec::signed_diff(&diff, labels.to_vec(), format!("{stem}: truth minus estimate"));
    render_heatmap(&diff, &spec, &out.join(format!("{stem}_{}.svg", spec.kind.slug())))?;
    Ok(())
}
