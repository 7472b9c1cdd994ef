//! Grid file formats.
//!
//! `csv-grid`:
//!
//! ```text
//! # origin x0 y0
//! # spacing dx dy
//! # shape ny nx
//! v00,v01,...,v0(nx-1)
//! ...
//! ```
//!
//! followed by `ny` comma-separated rows of `nx` values; row `i` holds
//! `y = y0 + i dy`. `nan` (any case) marks a masked cell. The three header
//! lines may come in any order but must precede the data.
//!
//! `json-grid`: `{"origin":[x0,y0],"spacing":[dx,dy],"shape":[ny,nx],
//! "values":[[...],...]}` with `null` for masked cells.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{FieldError, GridField};

#[derive(Debug, Error)]
pub enum GridIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("validation failed: {0}")]
    Validation(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridFormat {
    CsvGrid,
    JsonGrid,
}

impl GridFormat {
    pub fn name(self) -> &'static str {
        self.codec().name()
    }

    pub fn codec(self) -> &'static dyn GridCodec {
        match self {
            GridFormat::CsvGrid => &CsvGrid,
            GridFormat::JsonGrid => &JsonGrid,
        }
    }

    /// Guesses the format from a file extension (`.json` or anything else).
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => GridFormat::JsonGrid,
            _ => GridFormat::CsvGrid,
        }
    }
}

impl FromStr for GridFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv-grid" => Ok(GridFormat::CsvGrid),
            "json-grid" => Ok(GridFormat::JsonGrid),
            other => Err(format!(
                "unknown grid format `{other}` (expected csv-grid or json-grid)"
            )),
        }
    }
}

impl std::fmt::Display for GridFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Reads and writes one on-disk grid representation.
pub trait GridCodec: Sync {
    fn name(&self) -> &'static str;
    fn parse(&self, text: &str) -> Result<GridField, GridIoError>;
    fn render(&self, grid: &GridField) -> String;
}

pub fn load_grid(path: impl AsRef<Path>, format: GridFormat) -> Result<GridField, GridIoError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| GridIoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    format.codec().parse(&text)
}

pub fn save_grid(
    grid: &GridField,
    path: impl AsRef<Path>,
    format: GridFormat,
) -> Result<(), GridIoError> {
    let path = path.as_ref();
    std::fs::write(path, format.codec().render(grid)).map_err(|source| GridIoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> GridIoError {
    GridIoError::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v}")
    }
}

pub struct CsvGrid;

impl CsvGrid {
    fn parse_header<const N: usize, T: FromStr>(
        fields: &[&str],
        line: usize,
        key: &str,
    ) -> Result<[T; N], GridIoError> {
        if fields.len() != N {
            return Err(parse_err(
                line,
                1,
                format!("`# {key}` expects {N} values, found {}", fields.len()),
            ));
        }
        let mut parsed = Vec::with_capacity(N);
        for f in fields {
            parsed.push(
                f.parse::<T>()
                    .map_err(|_| parse_err(line, 1, format!("bad `{key}` value `{f}`")))?,
            );
        }
        parsed
            .try_into()
            .map_err(|_| parse_err(line, 1, "header arity"))
    }
}

impl GridCodec for CsvGrid {
    fn name(&self) -> &'static str {
        "csv-grid"
    }

    fn parse(&self, text: &str) -> Result<GridField, GridIoError> {
        let mut origin: Option<[f64; 2]> = None;
        let mut spacing: Option<[f64; 2]> = None;
        let mut shape: Option<[usize; 2]> = None;
        let mut values = Vec::new();
        let mut rows = 0usize;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(header) = trimmed.strip_prefix('#') {
                if rows > 0 {
                    return Err(parse_err(line, 1, "header line after data rows"));
                }
                let mut parts = header.split_whitespace();
                let key = parts.next().unwrap_or("");
                let rest: Vec<&str> = parts.collect();
                match key {
                    "origin" => origin = Some(Self::parse_header::<2, f64>(&rest, line, key)?),
                    "spacing" => spacing = Some(Self::parse_header::<2, f64>(&rest, line, key)?),
                    "shape" => shape = Some(Self::parse_header::<2, usize>(&rest, line, key)?),
                    other => return Err(parse_err(line, 1, format!("unknown header `{other}`"))),
                }
                continue;
            }
            let Some([ny, nx]) = shape else {
                return Err(parse_err(line, 1, "data row before `# shape` header"));
            };
            if rows == ny {
                return Err(parse_err(line, 1, format!("more than {ny} data rows")));
            }
            let mut column = 1;
            let mut count = 0;
            for cell in raw.split(',') {
                let token = cell.trim();
                let v = if token.eq_ignore_ascii_case("nan") {
                    f64::NAN
                } else {
                    token.parse::<f64>().map_err(|_| {
                        parse_err(line, column, format!("cannot parse `{token}` as a number"))
                    })?
                };
                if !v.is_nan() && !v.is_finite() {
                    return Err(parse_err(line, column, "infinite value"));
                }
                values.push(v);
                count += 1;
                column += cell.len() + 1;
            }
            if count != nx {
                return Err(parse_err(
                    line,
                    1,
                    format!("row has {count} values, expected {nx}"),
                ));
            }
            rows += 1;
        }

        let end = text.lines().count().max(1);
        let origin = origin.ok_or_else(|| parse_err(end, 1, "missing `# origin` header"))?;
        let spacing = spacing.ok_or_else(|| parse_err(end, 1, "missing `# spacing` header"))?;
        let [ny, nx] = shape.ok_or_else(|| parse_err(end, 1, "missing `# shape` header"))?;
        if rows != ny {
            return Err(parse_err(
                end,
                1,
                format!("found {rows} data rows, expected {ny}"),
            ));
        }
        Ok(GridField::new(origin, spacing, ny, nx, values)?)
    }

    fn render(&self, grid: &GridField) -> String {
        let (ny, nx) = grid.shape();
        let [x0, y0] = grid.origin();
        let [dx, dy] = grid.spacing();
        let mut out = format!("# origin {x0} {y0}\n# spacing {dx} {dy}\n# shape {ny} {nx}\n");
        for i in 0..ny {
            let row: Vec<String> = (0..nx).map(|j| fmt_value(grid.cell(i, j))).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonGridDoc {
    origin: [f64; 2],
    spacing: [f64; 2],
    shape: [usize; 2],
    values: Vec<Vec<Option<f64>>>,
}

pub struct JsonGrid;

impl GridCodec for JsonGrid {
    fn name(&self) -> &'static str {
        "json-grid"
    }

    fn parse(&self, text: &str) -> Result<GridField, GridIoError> {
        let doc: JsonGridDoc = serde_json::from_str(text)
            .map_err(|e| parse_err(e.line(), e.column(), e.to_string()))?;
        let [ny, nx] = doc.shape;
        if doc.values.len() != ny {
            return Err(GridIoError::Validation(FieldError::Invalid(format!(
                "values has {} rows, shape says {ny}",
                doc.values.len()
            ))));
        }
        let mut values = Vec::with_capacity(nx * ny);
        for (i, row) in doc.values.iter().enumerate() {
            if row.len() != nx {
                return Err(GridIoError::Validation(FieldError::Invalid(format!(
                    "row {i} has {} values, shape says {nx}",
                    row.len()
                ))));
            }
            values.extend(row.iter().map(|v| v.unwrap_or(f64::NAN)));
        }
        Ok(GridField::new(doc.origin, doc.spacing, ny, nx, values)?)
    }

    fn render(&self, grid: &GridField) -> String {
        let (ny, nx) = grid.shape();
        let doc = JsonGridDoc {
            origin: grid.origin(),
            spacing: grid.spacing(),
            shape: [ny, nx],
            values: (0..ny)
                .map(|i| {
                    (0..nx)
                        .map(|j| Some(grid.cell(i, j)).filter(|v| !v.is_nan()))
                        .collect()
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("grid document serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::Vec2;

    const GOLDEN: &str = "# origin 0 0\n# spacing 1 1\n# shape 2 2\n1,2\n3,4\n";

    #[test]
    fn csv_golden_parse_and_render() {
        let g = CsvGrid.parse(GOLDEN).unwrap();
        assert_eq!(g.shape(), (2, 2));
        assert_eq!(g.value_at(Vec2::new(0.5, 0.5)).unwrap(), 2.5);
        assert_eq!(CsvGrid.render(&g), GOLDEN);
    }

    #[test]
    fn csv_nan_masks_cell() {
        let g = CsvGrid
            .parse("# origin 0 0\n# spacing 1 1\n# shape 2 3\n1,NaN,2\n3,4,5\n")
            .unwrap();
        assert!(!g.is_valid(0, 1));
        assert_eq!(g.masked_count(), 1);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let err = CsvGrid
            .parse("# origin 0 0\n# spacing 1 1\n# shape 2 2\n1,2\n3,x\n")
            .unwrap_err();
        match err {
            GridIoError::Parse { line, column, .. } => {
                assert_eq!(line, 5);
                assert_eq!(column, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
        let short = CsvGrid
            .parse("# origin 0 0\n# spacing 1 1\n# shape 2 2\n1,2\n")
            .unwrap_err();
        assert!(matches!(short, GridIoError::Parse { .. }));
    }

    #[test]
    fn csv_zero_spacing_is_validation_error() {
        let err = CsvGrid
            .parse("# origin 0 0\n# spacing 0 1\n# shape 2 2\n1,2\n3,4\n")
            .unwrap_err();
        assert!(matches!(err, GridIoError::Validation(_)), "{err:?}");
    }

    #[test]
    fn json_grid_with_null_mask() {
        let text = r#"{"origin":[0,0],"spacing":[1,1],"shape":[2,2],"values":[[1,null],[3,4]]}"#;
        let g = JsonGrid.parse(text).unwrap();
        assert!(!g.is_valid(0, 1));
        let back = JsonGrid.parse(&JsonGrid.render(&g)).unwrap();
        assert_eq!(back.shape(), g.shape());
        assert!(!back.is_valid(0, 1));
        assert_eq!(back.cell(1, 1), 4.0);
    }

    #[test]
    fn json_syntax_error_reports_position() {
        let err = JsonGrid.parse("{\"origin\": [0,\n 0,]}").unwrap_err();
        assert!(matches!(err, GridIoError::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn format_names() {
        assert_eq!(
            "csv-grid".parse::<GridFormat>().unwrap(),
            GridFormat::CsvGrid
        );
        assert_eq!(GridFormat::JsonGrid.to_string(), "json-grid");
        assert!("netcdf".parse::<GridFormat>().is_err());
    }
}
