use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "dperc", version, about = "Covariance estimation for mixed data with missing continuous entries")]
pub struct Cli {
    /// TOML file with defaults for any flag; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate means and covariance of one dataset.
    Estimate(EstimateArgs),
    /// Write MCAR-masked copies of a dataset.
    Simulate(SimulateArgs),
    /// Mask, estimate, and score across missing rates and repeats.
    Benchmark(BenchmarkArgs),
    /// Render correlation, local MSE, and signed-difference heatmaps.
    Heatmap(HeatmapArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Dper,
    Dperc,
    Mean,
    Knn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Mean,
    Knn,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: Option<PathBuf>,

    /// Schema sidecar with one `name = continuous|categorical|label` line per column.
    #[arg(long, conflicts_with = "infer_schema")]
    pub schema: Option<PathBuf>,

    /// Infer column kinds: numeric columns are continuous, the rest categorical.
    #[arg(long)]
    pub infer_schema: bool,

    /// Class label column (with --infer-schema).
    #[arg(long)]
    pub label: Option<String>,

    /// Cell text that marks a missing continuous value.
    #[arg(long)]
    pub missing_token: Option<String>,
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Output directory.
    #[arg(long, env = "DPERC_OUT_DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,

    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,

    /// Imputation baseline; overrides --method.
    #[arg(long, value_enum, conflicts_with = "imputed_csv")]
    pub baseline: Option<BaselineArg>,

    /// Neighbours for KNN imputation.
    #[arg(long)]
    pub k: Option<usize>,

    /// Score an externally imputed, fully observed CSV instead of estimating.
    #[arg(long)]
    pub imputed_csv: Option<PathBuf>,

    /// Reference covariance CSV; when given, e and r are written too.
    #[arg(long)]
    pub truth: Option<PathBuf>,

    /// Also write the nearest positive semi-definite matrix (eigenvalue clipping).
    #[arg(long)]
    pub psd: bool,

    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Missing rates in [0, 1), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub missing_rate: Option<Vec<f64>>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub repeats: Option<usize>,

    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub data: DataArgs,

    /// Estimators to run, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub method: Option<Vec<MethodArg>>,

    /// Imputation baselines to add, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub baseline: Option<Vec<BaselineArg>>,

    #[arg(long)]
    pub k: Option<usize>,

    /// Missing rates in [0, 1), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub missing_rate: Option<Vec<f64>>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub repeats: Option<usize>,

    /// Reference covariance CSV; required when the input has missing entries.
    #[arg(long)]
    pub truth: Option<PathBuf>,

    /// Skip heatmap artifacts.
    #[arg(long)]
    pub no_heatmaps: bool,

    /// Free-form timestamp recorded in the report (omitted by default so
    /// reruns are byte-identical).
    #[arg(long)]
    pub timestamp: Option<String>,

    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    /// Reference covariance CSV.
    #[arg(long)]
    pub truth: PathBuf,

    /// Estimated covariance CSVs.
    #[arg(long = "estimate", required = true, num_args = 1..)]
    pub estimates: Vec<PathBuf>,

    #[command(flatten)]
    pub out: OutArg,
}
