//! Mixed-type datasets: a continuous block with an observed-mask, fully
//! observed categorical columns, and an optional class label.
//!
//! Missing continuous entries are tracked by the mask. The numeric storage
//! holds `NaN` at unobserved cells so that any read which bypasses the mask
//! poisons the result instead of silently using a stale number.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Categorical,
    ClassLabel,
}

impl FeatureKind {
    fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "continuous" | "numeric" => Some(FeatureKind::Continuous),
            "categorical" | "category" => Some(FeatureKind::Categorical),
            "label" | "class" | "class_label" => Some(FeatureKind::ClassLabel),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Continuous => "continuous",
            FeatureKind::Categorical => "categorical",
            FeatureKind::ClassLabel => "label",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: FeatureKind,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: FeatureKind) -> Self {
        Self {
            name: name.into(),
            kind,
        }
    }
}

/// Ordered column declarations for a dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSchema {
    columns: Vec<ColumnSpec>,
}

impl DatasetSchema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name `{}`", c.name)));
            }
        }
        let labels = columns
            .iter()
            .filter(|c| c.kind == FeatureKind::ClassLabel)
            .count();
        if labels > 1 {
            return Err(Error::Schema("at most one class label column is allowed".into()));
        }
        if !columns.iter().any(|c| c.kind == FeatureKind::Continuous) {
            return Err(Error::Schema("at least one continuous column is required".into()));
        }
        Ok(Self { columns })
    }

    /// Schema with `p` continuous columns named `x0..x{p-1}`.
    pub fn continuous(p: usize) -> Result<Self> {
        Self::new(
            (0..p)
                .map(|j| ColumnSpec::new(format!("x{j}"), FeatureKind::Continuous))
                .collect(),
        )
    }

    /// Parses a sidecar schema: one `name = kind` line per column, in column
    /// order. Blank lines and `#` comments are ignored.
    pub fn parse_sidecar(text: &str) -> Result<Self> {
        let mut columns = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, kind) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| {
                    Error::Schema(format!("line {}: expected `name = kind`", lineno + 1))
                })?;
            let name = name.trim().trim_matches('"');
            let kind = FeatureKind::parse(kind.trim().trim_matches('"')).ok_or_else(|| {
                Error::Schema(format!("line {}: unknown kind `{}`", lineno + 1, kind.trim()))
            })?;
            columns.push(ColumnSpec::new(name, kind));
        }
        Self::new(columns)
    }

    pub fn from_sidecar_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_sidecar(&text)
    }

    pub fn to_sidecar(&self) -> String {
        self.columns
            .iter()
            .map(|c| format!("{} = {}\n", c.name, c.kind.as_str()))
            .collect()
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    fn names_of(&self, kind: FeatureKind) -> impl Iterator<Item = &str> {
        self.columns
            .iter()
            .filter(move |c| c.kind == kind)
            .map(|c| c.name.as_str())
    }

    pub fn continuous_names(&self) -> Vec<String> {
        self.names_of(FeatureKind::Continuous).map(String::from).collect()
    }

    pub fn categorical_names(&self) -> Vec<String> {
        self.names_of(FeatureKind::Categorical).map(String::from).collect()
    }

    pub fn label_name(&self) -> Option<&str> {
        self.names_of(FeatureKind::ClassLabel).next()
    }

    /// Number of continuous columns.
    pub fn p(&self) -> usize {
        self.names_of(FeatureKind::Continuous).count()
    }

    /// Number of categorical columns.
    pub fn q(&self) -> usize {
        self.names_of(FeatureKind::Categorical).count()
    }

    fn without_label(&self) -> Self {
        Self {
            columns: self
                .columns
                .iter()
                .filter(|c| c.kind != FeatureKind::ClassLabel)
                .cloned()
                .collect(),
        }
    }
}

/// Borrowed view of one continuous column and its observed-mask.
#[derive(Clone, Copy, Debug)]
pub struct MaskedColumn<'a> {
    values: &'a [f64],
    observed: &'a [bool],
}

impl<'a> MaskedColumn<'a> {
    pub fn new(values: &'a [f64], observed: &'a [bool]) -> Result<Self> {
        if values.len() != observed.len() {
            return Err(Error::ShapeMismatch {
                expected: (values.len(), 1),
                found: (observed.len(), 1),
            });
        }
        Ok(Self { values, observed })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, row: usize) -> Option<f64> {
        self.observed[row].then(|| self.values[row])
    }

    pub fn is_observed(&self, row: usize) -> bool {
        self.observed[row]
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    /// Observed values in row order.
    pub fn observed_values(&self) -> impl Iterator<Item = f64> + 'a {
        let values = self.values;
        self.observed
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(move |(r, _)| values[r])
    }
}

/// Dense `N x p` real matrix with a boolean observed-mask, stored column-major.
#[derive(Clone, Debug)]
pub struct MaskedMatrix {
    nrows: usize,
    ncols: usize,
    values: Vec<f64>,
    observed: Vec<bool>,
}

// Unobserved cells hold NaN; equality compares masks and observed values only.
impl PartialEq for MaskedMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.observed == other.observed
            && self
                .values
                .iter()
                .zip(&other.values)
                .zip(&self.observed)
                .all(|((a, b), &o)| !o || a == b)
    }
}

impl MaskedMatrix {
    /// Builds from column-major values and mask. Unobserved cells are
    /// overwritten with `NaN`; observed cells must be finite.
    pub fn from_column_major(
        nrows: usize,
        ncols: usize,
        mut values: Vec<f64>,
        observed: Vec<bool>,
    ) -> Result<Self> {
        if values.len() != nrows * ncols || observed.len() != nrows * ncols {
            return Err(Error::ShapeMismatch {
                expected: (nrows, ncols),
                found: (values.len(), observed.len()),
            });
        }
        for (idx, (v, &o)) in values.iter_mut().zip(&observed).enumerate() {
            if o {
                if !v.is_finite() {
                    return Err(Error::NonNumeric {
                        row: idx % nrows.max(1),
                        column: format!("x{}", idx / nrows.max(1)),
                        value: v.to_string(),
                    });
                }
            } else {
                *v = f64::NAN;
            }
        }
        Ok(Self {
            nrows,
            ncols,
            values,
            observed,
        })
    }

    /// Builds from row-major cells where `None` marks a missing entry.
    pub fn from_rows(rows: &[Vec<Option<f64>>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        let mut values = vec![0.0; nrows * ncols];
        let mut observed = vec![false; nrows * ncols];
        for (r, row) in rows.iter().enumerate() {
            if row.len() != ncols {
                return Err(Error::ShapeMismatch {
                    expected: (nrows, ncols),
                    found: (r, row.len()),
                });
            }
            for (c, cell) in row.iter().enumerate() {
                if let Some(v) = cell {
                    values[c * nrows + r] = *v;
                    observed[c * nrows + r] = true;
                }
            }
        }
        Self::from_column_major(nrows, ncols, values, observed)
    }

    /// Builds from a dense matrix where non-finite entries are treated as missing.
    pub fn from_nan_matrix(m: &nalgebra::DMatrix<f64>) -> Self {
        let values: Vec<f64> = m.as_slice().to_vec();
        let observed = values.iter().map(|v| v.is_finite()).collect();
        Self::from_column_major(m.nrows(), m.ncols(), values, observed)
            .expect("finite cells are observed by construction")
    }

    /// Fully observed matrix.
    pub fn complete(m: &nalgebra::DMatrix<f64>) -> Result<Self> {
        Self::from_column_major(
            m.nrows(),
            m.ncols(),
            m.as_slice().to_vec(),
            vec![true; m.len()],
        )
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, row: usize, col: usize) -> Option<f64> {
        self.column(col).get(row)
    }

    pub fn is_observed(&self, row: usize, col: usize) -> bool {
        self.observed[col * self.nrows + row]
    }

    pub fn column(&self, col: usize) -> MaskedColumn<'_> {
        let range = col * self.nrows..(col + 1) * self.nrows;
        MaskedColumn {
            values: &self.values[range.clone()],
            observed: &self.observed[range],
        }
    }

    pub fn columns(&self) -> impl Iterator<Item = MaskedColumn<'_>> {
        (0..self.ncols).map(move |c| self.column(c))
    }

    /// Raw value storage; unobserved cells hold `NaN`.
    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.observed
    }

    pub fn missing_count(&self) -> usize {
        self.observed.iter().filter(|&&o| !o).count()
    }

    pub fn is_complete(&self) -> bool {
        self.observed.iter().all(|&o| o)
    }

    /// Dense copy; unobserved cells are `NaN`.
    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_column_slice(self.nrows, self.ncols, &self.values)
    }

    /// Same values with cells marked unobserved where `hide` is true
    /// (column-major, same shape).
    pub(crate) fn hide(&self, hide: &[bool]) -> Self {
        let mut out = self.clone();
        for (idx, &h) in hide.iter().enumerate() {
            if h {
                out.observed[idx] = false;
                out.values[idx] = f64::NAN;
            }
        }
        out
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * self.ncols);
        let mut observed = Vec::with_capacity(n * self.ncols);
        for c in 0..self.ncols {
            let base = c * self.nrows;
            for &r in rows {
                values.push(self.values[base + r]);
                observed.push(self.observed[base + r]);
            }
        }
        Self {
            nrows: n,
            ncols: self.ncols,
            values,
            observed,
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut values = Vec::with_capacity(self.nrows * cols.len());
        let mut observed = Vec::with_capacity(self.nrows * cols.len());
        for &c in cols {
            let range = c * self.nrows..(c + 1) * self.nrows;
            values.extend_from_slice(&self.values[range.clone()]);
            observed.extend_from_slice(&self.observed[range]);
        }
        Self {
            nrows: self.nrows,
            ncols: cols.len(),
            values,
            observed,
        }
    }
}

/// Integer-coded categorical column with the original level strings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoricalColumn {
    codes: Vec<u32>,
    levels: Vec<String>,
}

impl CategoricalColumn {
    /// Codes must cover `0..G` contiguously; levels are named after the codes.
    pub fn from_codes(codes: Vec<u32>) -> Result<Self> {
        let g = codes.iter().max().map_or(0, |&m| m as usize + 1);
        let mut present = vec![false; g];
        for &c in &codes {
            present[c as usize] = true;
        }
        if let Some(gap) = present.iter().position(|&p| !p) {
            return Err(Error::Invalid(format!(
                "categorical codes must be contiguous from 0; code {gap} is unused"
            )));
        }
        let levels = (0..g).map(|c| c.to_string()).collect();
        Ok(Self { codes, levels })
    }

    /// Dictionary-encodes strings in first-appearance order.
    pub fn from_strings<I, S>(values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut index: HashMap<String, u32> = HashMap::new();
        let mut levels = Vec::new();
        let codes = values
            .into_iter()
            .map(|v| {
                let v = v.as_ref();
                *index.entry(v.to_string()).or_insert_with(|| {
                    levels.push(v.to_string());
                    (levels.len() - 1) as u32
                })
            })
            .collect();
        Self { codes, levels }
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    /// Number of categories `G`.
    pub fn group_count(&self) -> usize {
        self.levels.len()
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn level(&self, code: u32) -> &str {
        &self.levels[code as usize]
    }

    /// Subset of rows, re-encoded so the codes stay contiguous.
    fn select_rows(&self, rows: &[usize]) -> Self {
        Self::from_strings(rows.iter().map(|&r| self.level(self.codes[r])))
    }
}

/// Mean and uncorrected variance of the observed entries of one column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub observed_count: usize,
    pub mean: f64,
    /// Sum of squared deviations divided by `observed_count`.
    pub uncorrected_variance: f64,
}

impl ColumnSummary {
    pub fn of(column: MaskedColumn<'_>) -> Result<Self> {
        let n = column.observed_count();
        if n == 0 {
            return Err(Error::EmptyColumn {
                column: String::from("<unnamed>"),
            });
        }
        let mean = column.observed_values().sum::<f64>() / n as f64;
        let ss: f64 = column.observed_values().map(|x| (x - mean) * (x - mean)).sum();
        Ok(Self {
            observed_count: n,
            mean,
            uncorrected_variance: ss / n as f64,
        })
    }
}

/// Continuous block, categorical block, and optional class labels sharing
/// one row index.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedDataset {
    schema: DatasetSchema,
    continuous: MaskedMatrix,
    categorical: Vec<CategoricalColumn>,
    labels: Option<CategoricalColumn>,
}

impl MixedDataset {
    pub fn new(
        schema: DatasetSchema,
        continuous: MaskedMatrix,
        categorical: Vec<CategoricalColumn>,
        labels: Option<CategoricalColumn>,
    ) -> Result<Self> {
        let n = continuous.nrows();
        if n == 0 {
            return Err(Error::Invalid("dataset must have at least one row".into()));
        }
        if continuous.ncols() != schema.p() || categorical.len() != schema.q() {
            return Err(Error::Schema(format!(
                "schema declares {} continuous and {} categorical columns, data has {} and {}",
                schema.p(),
                schema.q(),
                continuous.ncols(),
                categorical.len()
            )));
        }
        if labels.is_some() != schema.label_name().is_some() {
            return Err(Error::Schema("label column presence differs from schema".into()));
        }
        let lengths_ok = categorical.iter().all(|c| c.len() == n)
            && labels.as_ref().is_none_or(|l| l.len() == n);
        if !lengths_ok {
            return Err(Error::Invalid("all columns must have the same number of rows".into()));
        }
        Ok(Self {
            schema,
            continuous,
            categorical,
            labels,
        })
    }

    /// Dataset with only continuous columns named `x0..`.
    pub fn from_continuous(continuous: MaskedMatrix) -> Result<Self> {
        let schema = DatasetSchema::continuous(continuous.ncols())?;
        Self::new(schema, continuous, Vec::new(), None)
    }

    /// Continuous columns `x0..`, categorical columns `c0..`, optional `label`.
    pub fn from_parts(
        continuous: MaskedMatrix,
        categorical: Vec<CategoricalColumn>,
        labels: Option<CategoricalColumn>,
    ) -> Result<Self> {
        let mut cols: Vec<ColumnSpec> = (0..continuous.ncols())
            .map(|j| ColumnSpec::new(format!("x{j}"), FeatureKind::Continuous))
            .collect();
        cols.extend(
            (0..categorical.len())
                .map(|k| ColumnSpec::new(format!("c{k}"), FeatureKind::Categorical)),
        );
        if labels.is_some() {
            cols.push(ColumnSpec::new("label", FeatureKind::ClassLabel));
        }
        Self::new(DatasetSchema::new(cols)?, continuous, categorical, labels)
    }

    pub fn schema(&self) -> &DatasetSchema {
        &self.schema
    }

    pub fn continuous(&self) -> &MaskedMatrix {
        &self.continuous
    }

    pub fn categorical(&self) -> &[CategoricalColumn] {
        &self.categorical
    }

    pub fn labels(&self) -> Option<&CategoricalColumn> {
        self.labels.as_ref()
    }

    pub fn nrows(&self) -> usize {
        self.continuous.nrows()
    }

    pub fn with_continuous(&self, continuous: MaskedMatrix) -> Result<Self> {
        Self::new(
            self.schema.clone(),
            continuous,
            self.categorical.clone(),
            self.labels.clone(),
        )
    }

    /// Summary of continuous column `j`.
    pub fn column_summary(&self, j: usize) -> Result<ColumnSummary> {
        ColumnSummary::of(self.continuous.column(j)).map_err(|e| match e {
            Error::EmptyColumn { .. } => Error::EmptyColumn {
                column: self.schema.continuous_names()[j].clone(),
            },
            other => other,
        })
    }

    /// Fails if any continuous column has no observed entry.
    pub fn check_columns_observed(&self) -> Result<()> {
        let names = self.schema.continuous_names();
        for (j, col) in self.continuous.columns().enumerate() {
            if col.observed_count() == 0 {
                return Err(Error::EmptyColumn {
                    column: names[j].clone(),
                });
            }
        }
        Ok(())
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            schema: self.schema.clone(),
            continuous: self.continuous.select_rows(rows),
            categorical: self.categorical.iter().map(|c| c.select_rows(rows)).collect(),
            labels: self.labels.as_ref().map(|l| l.select_rows(rows)),
        }
    }

    /// Partitions rows by class label, in ascending code order. Each part
    /// drops the label column and keeps the original row order.
    pub fn split_by_class(&self) -> Result<Vec<(u32, MixedDataset)>> {
        let labels = self.labels.as_ref().ok_or(Error::NoLabels)?;
        let mut rows_by_class = vec![Vec::new(); labels.group_count()];
        for (r, &code) in labels.codes().iter().enumerate() {
            rows_by_class[code as usize].push(r);
        }
        let schema = self.schema.without_label();
        Ok(rows_by_class
            .into_iter()
            .enumerate()
            .filter(|(_, rows)| !rows.is_empty())
            .map(|(code, rows)| {
                let part = MixedDataset {
                    schema: schema.clone(),
                    continuous: self.continuous.select_rows(&rows),
                    categorical: self.categorical.iter().map(|c| c.select_rows(&rows)).collect(),
                    labels: None,
                };
                (code as u32, part)
            })
            .collect())
    }
}

/// CSV reading options.
#[derive(Clone, Debug, Default)]
pub struct CsvOptions {
    /// Cell content (after trimming) that marks a missing continuous entry.
    pub missing_token: String,
}

struct RawTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table<R: Read>(reader: R) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(rec?.iter().map(String::from).collect());
    }
    Ok(RawTable { header, rows })
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| Error::io(path, e))
}

/// Reads a CSV file against `schema`. Header names are matched by name; the
/// resulting dataset follows the header's column order.
pub fn ingest_csv(
    path: impl AsRef<Path>,
    schema: &DatasetSchema,
    opts: &CsvOptions,
) -> Result<MixedDataset> {
    let path = path.as_ref();
    read_csv(open(path)?, schema, opts)
}

pub fn read_csv<R: Read>(reader: R, schema: &DatasetSchema, opts: &CsvOptions) -> Result<MixedDataset> {
    let table = read_table(reader)?;
    build_dataset(table, schema, opts)
}

/// Reads a CSV and infers the schema: columns whose present cells all parse
/// as finite numbers are continuous, the rest categorical; `label` (if given)
/// names the class label column.
pub fn ingest_csv_inferred(
    path: impl AsRef<Path>,
    label: Option<&str>,
    opts: &CsvOptions,
) -> Result<MixedDataset> {
    let path = path.as_ref();
    read_csv_inferred(open(path)?, label, opts)
}

pub fn read_csv_inferred<R: Read>(
    reader: R,
    label: Option<&str>,
    opts: &CsvOptions,
) -> Result<MixedDataset> {
    let table = read_table(reader)?;
    let schema = infer_schema(&table, label, opts)?;
    build_dataset(table, &schema, opts)
}

fn is_missing(cell: &str, opts: &CsvOptions) -> bool {
    cell.trim() == opts.missing_token.trim()
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn infer_schema(table: &RawTable, label: Option<&str>, opts: &CsvOptions) -> Result<DatasetSchema> {
    if let Some(l) = label {
        if !table.header.iter().any(|h| h == l) {
            return Err(Error::Schema(format!("label column `{l}` not in header")));
        }
    }
    let cols = table
        .header
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let kind = if Some(name.as_str()) == label {
                FeatureKind::ClassLabel
            } else {
                let mut present = table
                    .rows
                    .iter()
                    .map(|r| r[c].as_str())
                    .filter(|cell| !is_missing(cell, opts))
                    .peekable();
                let any = present.peek().is_some();
                if any && present.all(|cell| parse_number(cell).is_some()) {
                    FeatureKind::Continuous
                } else {
                    FeatureKind::Categorical
                }
            };
            ColumnSpec::new(name.clone(), kind)
        })
        .collect();
    DatasetSchema::new(cols)
}

fn build_dataset(table: RawTable, schema: &DatasetSchema, opts: &CsvOptions) -> Result<MixedDataset> {
    let by_name: HashMap<&str, FeatureKind> = schema
        .columns()
        .iter()
        .map(|c| (c.name.as_str(), c.kind))
        .collect();
    let header_set: HashSet<&str> = table.header.iter().map(String::as_str).collect();
    if header_set.len() != table.header.len() {
        return Err(Error::Schema("CSV header has duplicate column names".into()));
    }
    for name in by_name.keys() {
        if !header_set.contains(name) {
            return Err(Error::Schema(format!("column `{name}` missing from CSV header")));
        }
    }
    let mut ordered = Vec::with_capacity(table.header.len());
    for name in &table.header {
        let kind = by_name
            .get(name.as_str())
            .ok_or_else(|| Error::Schema(format!("CSV column `{name}` not declared in schema")))?;
        ordered.push(ColumnSpec::new(name.clone(), *kind));
    }
    let schema = DatasetSchema::new(ordered)?;

    let n = table.rows.len();
    let mut cont_values = Vec::new();
    let mut cont_mask = Vec::new();
    let mut categorical = Vec::new();
    let mut labels = None;
    for (c, spec) in schema.columns().iter().enumerate() {
        match spec.kind {
            FeatureKind::Continuous => {
                let mut seen = 0usize;
                for (r, row) in table.rows.iter().enumerate() {
                    let cell = &row[c];
                    if is_missing(cell, opts) {
                        cont_values.push(f64::NAN);
                        cont_mask.push(false);
                    } else {
                        let v = parse_number(cell).ok_or_else(|| Error::NonNumeric {
                            row: r + 1,
                            column: spec.name.clone(),
                            value: cell.clone(),
                        })?;
                        cont_values.push(v);
                        cont_mask.push(true);
                        seen += 1;
                    }
                }
                if seen == 0 {
                    return Err(Error::EmptyColumn {
                        column: spec.name.clone(),
                    });
                }
            }
            FeatureKind::Categorical | FeatureKind::ClassLabel => {
                let mut cells = Vec::with_capacity(n);
                for (r, row) in table.rows.iter().enumerate() {
                    let cell = row[c].trim();
                    if is_missing(cell, opts) || cell.is_empty() {
                        return Err(Error::MissingCategorical {
                            row: r + 1,
                            column: spec.name.clone(),
                        });
                    }
                    cells.push(cell.to_string());
                }
                let col = CategoricalColumn::from_strings(cells);
                if spec.kind == FeatureKind::ClassLabel {
                    labels = Some(col);
                } else {
                    categorical.push(col);
                }
            }
        }
    }
    let continuous = MaskedMatrix::from_column_major(n, schema.p(), cont_values, cont_mask)?;
    MixedDataset::new(schema, continuous, categorical, labels)
}

/// Writes the dataset as CSV in schema column order. Observed values use the
/// shortest representation that parses back to the same `f64`; missing
/// continuous entries are written as `missing_token`.
pub fn write_csv<W: Write>(ds: &MixedDataset, writer: W, missing_token: &str) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(ds.schema.columns().iter().map(|c| c.name.as_str()))?;
    for r in 0..ds.nrows() {
        let (mut ci, mut ki) = (0, 0);
        let mut record = Vec::with_capacity(ds.schema.columns().len());
        for spec in ds.schema.columns() {
            match spec.kind {
                FeatureKind::Continuous => {
                    record.push(match ds.continuous.get(r, ci) {
                        Some(v) => format!("{v}"),
                        None => missing_token.to_string(),
                    });
                    ci += 1;
                }
                FeatureKind::Categorical => {
                    let col = &ds.categorical[ki];
                    record.push(col.level(col.codes()[r]).to_string());
                    ki += 1;
                }
                FeatureKind::ClassLabel => {
                    let l = ds.labels.as_ref().expect("schema has a label column");
                    record.push(l.level(l.codes()[r]).to_string());
                }
            }
        }
        wtr.write_record(&record)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn write_csv_file(ds: &MixedDataset, path: impl AsRef<Path>, missing_token: &str) -> Result<()> {
    let path = path.as_ref();
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ds, std::io::BufWriter::new(f), missing_token)
}
