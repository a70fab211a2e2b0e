//! Heatmap artifacts: SVG images with a numeric CSV sidecar.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Diverging anchors. Negative values are magenta, positive values blue.
pub const NEGATIVE_RGB: [u8; 3] = [197, 27, 125];
pub const MIDPOINT_RGB: [u8; 3] = [255, 255, 255];
pub const POSITIVE_RGB: [u8; 3] = [33, 102, 172];
/// Sequential maximum anchor.
pub const SEQUENTIAL_RGB: [u8; 3] = [178, 24, 43];

const CELL: usize = 28;
const CHAR_W: usize = 7;
const PAD: usize = 10;
const LEGEND_W: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapKind {
    Correlation,
    LocalMse,
    SignedDiff,
}

impl HeatmapKind {
    pub fn slug(self) -> &'static str {
        match self {
            Self::Correlation => "correlation",
            Self::LocalMse => "local_mse",
            Self::SignedDiff => "signed_diff",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ColorScale {
    /// Magenta at `-bound`, white at 0, blue at `+bound`.
    Diverging { bound: f64 },
    /// White at 0, red at `max`.
    Sequential { max: f64 },
}

impl ColorScale {
    fn bounds(self) -> (f64, f64) {
        match self {
            Self::Diverging { bound } => (-bound, bound),
            Self::Sequential { max } => (0.0, max),
        }
    }

    /// Cell color; values outside the bounds take the nearest end color.
    pub fn color(self, v: f64) -> [u8; 3] {
        match self {
            Self::Diverging { bound } => {
                if !(bound > 0.0) {
                    return MIDPOINT_RGB;
                }
                let t = (v / bound).clamp(-1.0, 1.0);
                if t < 0.0 {
                    lerp(MIDPOINT_RGB, NEGATIVE_RGB, -t)
                } else {
                    lerp(MIDPOINT_RGB, POSITIVE_RGB, t)
                }
            }
            Self::Sequential { max } => {
                if !(max > 0.0) {
                    return MIDPOINT_RGB;
                }
                lerp(MIDPOINT_RGB, SEQUENTIAL_RGB, (v / max).clamp(0.0, 1.0))
            }
        }
    }
}

fn lerp(a: [u8; 3], b: [u8; 3], t: f64) -> [u8; 3] {
    let mut out = [0u8; 3];
    for k in 0..3 {
        out[k] = (a[k] as f64 + (b[k] as f64 - a[k] as f64) * t).round() as u8;
    }
    out
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeatmapSpec {
    pub kind: HeatmapKind,
    pub scale: ColorScale,
    pub labels: Vec<String>,
    pub title: String,
}

fn abs_max(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

impl HeatmapSpec {
    pub fn correlation(labels: Vec<String>, title: impl Into<String>) -> Self {
        Self {
            kind: HeatmapKind::Correlation,
            scale: ColorScale::Diverging { bound: 1.0 },
            labels,
            title: title.into(),
        }
    }

    /// Sequential scale from 0 to the matrix maximum.
    pub fn local_mse(m: &DMatrix<f64>, labels: Vec<String>, title: impl Into<String>) -> Self {
        Self {
            kind: HeatmapKind::LocalMse,
            scale: ColorScale::Sequential { max: abs_max(m) },
            labels,
            title: title.into(),
        }
    }

    /// Diverging scale symmetric about 0 at the largest magnitude.
    pub fn signed_diff(m: &DMatrix<f64>, labels: Vec<String>, title: impl Into<String>) -> Self {
        Self {
            kind: HeatmapKind::SignedDiff,
            scale: ColorScale::Diverging { bound: abs_max(m) },
            labels,
            title: title.into(),
        }
    }
}

fn same_shape(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            expected: a.shape(),
            found: b.shape(),
        });
    }
    Ok(())
}

/// Elementwise `(r_true - r_est)^2`.
pub fn local_mse_matrix(r_true: &DMatrix<f64>, r_est: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    same_shape(r_true, r_est)?;
    Ok((r_true - r_est).map(|d| d * d))
}

/// Elementwise `r_true - r_est`; positive where the reference is higher.
pub fn signed_diff_matrix(r_true: &DMatrix<f64>, r_est: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    same_shape(r_true, r_est)?;
    Ok(r_true - r_est)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Renders the SVG document. Output depends only on the arguments.
pub fn render_svg(matrix: &DMatrix<f64>, spec: &HeatmapSpec) -> Result<String> {
    let p = matrix.nrows();
    if p != matrix.ncols() {
        return Err(Error::ShapeMismatch {
            expected: (p, p),
            found: matrix.shape(),
        });
    }
    if spec.labels.len() != p {
        return Err(Error::ShapeMismatch {
            expected: (p, 1),
            found: (spec.labels.len(), 1),
        });
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid("heatmap entries must be finite".into()));
    }
    let label_w = spec.labels.iter().map(|l| l.chars().count()).max().unwrap_or(0) * CHAR_W + PAD;
    let title_h = 2 * PAD + 12;
    let x0 = label_w;
    let y0 = title_h + label_w;
    let grid = p * CELL;
    let legend_x = x0 + grid + 2 * PAD;
    let width = legend_x + LEGEND_W + 12 * CHAR_W + PAD;
    let height = y0 + grid.max(120) + PAD;
    let (lo, hi) = spec.scale.bounds();

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(&spec.title));
    let _ = writeln!(
        s,
        r#"<desc>kind={}; negative={}; midpoint={}; positive={}; sequential={}</desc>"#,
        spec.kind.slug(),
        hex(NEGATIVE_RGB),
        hex(MIDPOINT_RGB),
        hex(POSITIVE_RGB),
        hex(SEQUENTIAL_RGB)
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(
        s,
        r#"<text x="{PAD}" y="{}" font-size="13">{}</text>"#,
        PAD + 12,
        escape(&spec.title)
    );

    // gradient legend, top to bottom = high to low
    let _ = writeln!(s, r#"<defs><linearGradient id="scale" x1="0" y1="0" x2="0" y2="1">"#);
    let stops = 10;
    for k in 0..=stops {
        let t = k as f64 / stops as f64;
        let v = hi - (hi - lo) * t;
        let _ = writeln!(
            s,
            r#"<stop offset="{:.2}" stop-color="{}"/>"#,
            t,
            hex(spec.scale.color(v))
        );
    }
    let _ = writeln!(s, "</linearGradient></defs>");

    let _ = writeln!(s, r#"<g class="grid">"#);
    for i in 0..p {
        for j in 0..p {
            let v = matrix[(i, j)];
            let _ = writeln!(
                s,
                r##"<rect class="cell" x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{}" stroke="#dddddd" stroke-width="0.5"><title>{} / {}: {}</title></rect>"##,
                x0 + j * CELL,
                y0 + i * CELL,
                hex(spec.scale.color(v)),
                escape(&spec.labels[i]),
                escape(&spec.labels[j]),
                v
            );
        }
    }
    let _ = writeln!(s, "</g>");

    let _ = writeln!(s, r#"<g class="labels">"#);
    for (i, label) in spec.labels.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            x0 - 4,
            y0 + i * CELL + CELL / 2 + 4,
            escape(label)
        );
        let cx = x0 + i * CELL + CELL / 2 + 4;
        let _ = writeln!(
            s,
            r#"<text x="{cx}" y="{}" transform="rotate(-90 {cx} {})">{}</text>"#,
            y0 - 4,
            y0 - 4,
            escape(label)
        );
    }
    let _ = writeln!(s, "</g>");

    let legend_h = grid.max(120);
    let _ = writeln!(s, r#"<g class="legend">"#);
    let _ = writeln!(
        s,
        r##"<rect x="{legend_x}" y="{y0}" width="{LEGEND_W}" height="{legend_h}" fill="url(#scale)" stroke="#999999"/>"##
    );
    for (frac, v) in [(0.0, hi), (0.5, (hi + lo) / 2.0), (1.0, lo)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            legend_x + LEGEND_W + 4,
            y0 as f64 + frac * legend_h as f64 + 4.0,
            format_tick(v)
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 0.01 {
        format!("{v:.2}")
    } else {
        format!("{v:.2e}")
    }
}

/// Sidecar path for an artifact: `dir/name.svg` becomes `dir/name.values.csv`.
pub fn sidecar_path(svg: &Path) -> PathBuf {
    svg.with_extension("values.csv")
}

/// Writes the SVG to `out` and the exact values to its sidecar. Returns the
/// SVG path.
pub fn render_heatmap(matrix: &DMatrix<f64>, spec: &HeatmapSpec, out: &Path) -> Result<PathBuf> {
    let svg = render_svg(matrix, spec)?;
    std::fs::write(out, svg).map_err(|e| Error::io(out, e))?;
    write_matrix_csv(matrix, &spec.labels, &sidecar_path(out))?;
    Ok(out.to_path_buf())
}

/// Header of names, then one row per matrix row. Values use shortest
/// round-trip formatting.
pub fn write_matrix_csv(m: &DMatrix<f64>, labels: &[String], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(labels)?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Inverse of [`write_matrix_csv`]; the matrix must be square.
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_csv(file)
}

pub fn parse_matrix_csv<R: std::io::Read>(reader: R) -> Result<(Vec<String>, DMatrix<f64>)> {
    let bad = |e: csv::Error| Error::Parse(e.to_string());
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(reader);
    let labels: Vec<String> = rdr.headers().map_err(bad)?.iter().map(str::to_owned).collect();
    let p = labels.len();
    let mut data = Vec::with_capacity(p * p);
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(bad)?;
        if rec.len() != p {
            return Err(Error::Parse(format!("row {rows} has {} fields, expected {p}", rec.len())));
        }
        for f in rec.iter() {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::Parse(format!("row {rows}: '{f}' is not a number")))?;
            if !v.is_finite() {
                return Err(Error::Parse(format!("row {rows}: non-finite value '{f}'")));
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows != p || p == 0 {
        return Err(Error::Parse(format!("expected a square matrix with {p} rows, found {rows}")));
    }
    Ok((labels, DMatrix::from_row_slice(p, p, &data)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn elementwise_matrices() {
        let a = DMatrix::from_element(3, 3, 0.5);
        assert_eq!(local_mse_matrix(&a, &a).unwrap(), DMatrix::zeros(3, 3));
        let b = a.map(|v| v - 0.2);
        assert!(local_mse_matrix(&a, &b).unwrap().iter().all(|v| (v - 0.04).abs() < 1e-15));
        let r = DMatrix::from_row_slice(2, 2, &[1.0, -0.3, -0.3, 1.0]);
        assert_eq!(signed_diff_matrix(&r, &(-&r)).unwrap(), &r * 2.0);
        assert!(signed_diff_matrix(&r, &a).is_err());
    }

    #[test]
    fn color_anchors() {
        let d = ColorScale::Diverging { bound: 1.0 };
        assert_eq!(d.color(0.0), MIDPOINT_RGB);
        assert_eq!(d.color(1.0), POSITIVE_RGB);
        assert_eq!(d.color(-1.0), NEGATIVE_RGB);
        assert_eq!(d.color(7.0), POSITIVE_RGB);
        let s = ColorScale::Sequential { max: 0.0 };
        assert_eq!(s.color(0.0), MIDPOINT_RGB);
    }

    #[test]
    fn single_white_cell() {
        let svg = render_svg(&DMatrix::zeros(1, 1), &HeatmapSpec::correlation(names(1), "t")).unwrap();
        assert_eq!(svg.matches(r#"class="cell""#).count(), 1);
        let cell = svg.lines().find(|l| l.contains(r#"class="cell""#)).unwrap();
        assert!(cell.contains(r##"fill="#ffffff""##));
        assert!(svg.contains(r#"class="legend""#));
    }

    #[test]
    fn identity_diagonal_is_blue() {
        let svg = render_svg(&DMatrix::identity(3, 3), &HeatmapSpec::correlation(names(3), "id")).unwrap();
        assert_eq!(svg.matches(&format!(r#"fill="{}""#, hex(POSITIVE_RGB))).count(), 3);
    }

    #[test]
    fn labels_are_escaped() {
        let svg = render_svg(&DMatrix::zeros(1, 1), &HeatmapSpec::correlation(vec!["a<b&c".into()], "q\"")).unwrap();
        assert!(svg.contains("a&lt;b&amp;c"));
        assert!(!svg.contains("a<b"));
    }

    #[test]
    fn non_finite_rejected() {
        let m = DMatrix::from_element(1, 1, f64::NAN);
        assert!(render_svg(&m, &HeatmapSpec::correlation(names(1), "")).is_err());
    }

    #[test]
    fn malformed_matrix_csv() {
        assert!(parse_matrix_csv("a,b\n1,2\n".as_bytes()).is_err());
        assert!(parse_matrix_csv("a,b\n1,x\n3,4\n".as_bytes()).is_err());
        let (l, m) = parse_matrix_csv("a,b\n1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(l, vec!["a", "b"]);
        assert_eq!(m[(1, 0)], 3.0);
    }
}
