use std::path::{Path, PathBuf};

use serde::Deserialize;

/// Defaults read from `--config`. Every field is optional; command-line
/// flags win.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub infer_schema: Option<bool>,
    pub label: Option<String>,
    pub missing_token: Option<String>,
    pub methods: Option<Vec<String>>,
    pub baselines: Option<Vec<String>>,
    pub k: Option<usize>,
    pub rates: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub repeats: Option<usize>,
    pub truth: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
