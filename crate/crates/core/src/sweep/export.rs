use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CellResult, ReplicateResult, SweepError, SweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => Err(format!("unknown export format `{other}` (csv, json)")),
        }
    }
}

/// One row per (sigma, estimator) cell. `replicates` is the JSON array of
/// per-replicate results; empty numeric cells mean "no successful replicate".
pub const CSV_COLUMNS: [&str; 9] = [
    "sigma",
    "estimator",
    "succeeded",
    "rms_tracking_mean",
    "rms_tracking_std",
    "angle_error_mean",
    "angle_error_std",
    "failure",
    "replicates",
];

#[derive(Serialize, Deserialize)]
struct CsvRow {
    sigma: f64,
    estimator: String,
    succeeded: usize,
    rms_tracking_mean: Option<f64>,
    rms_tracking_std: Option<f64>,
    angle_error_mean: Option<f64>,
    angle_error_std: Option<f64>,
    failure: Option<String>,
    replicates: String,
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> SweepError + '_ {
    move |source| SweepError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, message: impl ToString) -> SweepError {
    SweepError::Parse {
        path: path.display().to_string(),
        message: message.to_string(),
    }
}

pub fn export(result: &SweepResult, path: &Path, format: ExportFormat) -> Result<(), SweepError> {
    let bytes = match format {
        ExportFormat::Json => {
            let mut s = serde_json::to_string_pretty(result).map_err(|e| parse_err(path, e))?;
            s.push('\n');
            s.into_bytes()
        }
        ExportFormat::Csv => {
            let mut w = csv::WriterBuilder::new()
                .has_headers(false)
                .from_writer(Vec::new());
            w.write_record(CSV_COLUMNS)
                .map_err(|e| parse_err(path, e))?;
            for c in &result.cells {
                let row = CsvRow {
                    sigma: c.sigma,
                    estimator: c.estimator.clone(),
                    succeeded: c.succeeded,
                    rms_tracking_mean: c.rms_tracking_mean,
                    rms_tracking_std: c.rms_tracking_std,
                    angle_error_mean: c.angle_error_mean,
                    angle_error_std: c.angle_error_std,
                    failure: c.failure.clone(),
                    replicates: serde_json::to_string(&c.replicates)
                        .map_err(|e| parse_err(path, e))?,
                };
                w.serialize(row).map_err(|e| parse_err(path, e))?;
            }
            w.into_inner().map_err(|e| parse_err(path, e))?
        }
    };
    std::fs::write(path, bytes).map_err(io_err(path))
}

pub fn import(path: &Path, format: ExportFormat) -> Result<SweepResult, SweepError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    match format {
        ExportFormat::Json => serde_json::from_str(&text).map_err(|e| parse_err(path, e)),
        ExportFormat::Csv => {
            let mut rd = csv::Reader::from_reader(text.as_bytes());
            let header: Vec<String> = rd
                .headers()
                .map_err(|e| parse_err(path, e))?
                .iter()
                .map(str::to_string)
                .collect();
            if header != CSV_COLUMNS {
                return Err(parse_err(path, format!("unexpected header {header:?}")));
            }
            let mut cells = Vec::new();
            for row in rd.deserialize::<CsvRow>() {
                let row = row.map_err(|e| parse_err(path, e))?;
                let replicates: Vec<ReplicateResult> =
                    serde_json::from_str(&row.replicates).map_err(|e| parse_err(path, e))?;
                cells.push(CellResult {
                    sigma: row.sigma,
                    estimator: row.estimator,
                    succeeded: row.succeeded,
                    rms_tracking_mean: row.rms_tracking_mean,
                    rms_tracking_std: row.rms_tracking_std,
                    angle_error_mean: row.angle_error_mean,
                    angle_error_std: row.angle_error_std,
                    failure: row.failure,
                    replicates,
                });
            }
            Ok(SweepResult { cells })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::ReplicateOutcome;

    fn sample() -> SweepResult {
        let ok = ReplicateResult {
            replicate: 0,
            sensor_seed: u64::MAX,
            position_seed: 3,
            outcome: ReplicateOutcome::Ok {
                rms_tracking_error: 0.1 + 0.2,
                max_tracking_error: 1.0 / 3.0,
                mean_angle_error: 1e-300,
                tracking_ticks: 10,
                mission: "completed".into(),
                noise_checksum: "ab".into(),
            },
        };
        let failed = ReplicateResult {
            replicate: 1,
            sensor_seed: 4,
            position_seed: 5,
            outcome: ReplicateOutcome::Failed {
                reason: "left, \"quoted\"\nline".into(),
            },
        };
        SweepResult {
            cells: vec![
                CellResult {
                    sigma: 1e-3,
                    estimator: "gp".into(),
                    succeeded: 1,
                    rms_tracking_mean: Some(0.30000000000000004),
                    rms_tracking_std: Some(0.0),
                    angle_error_mean: Some(1e-300),
                    angle_error_std: Some(0.0),
                    failure: None,
                    replicates: vec![ok, failed.clone()],
                },
                CellResult {
                    sigma: 0.017_782_794_100_389_23,
                    estimator: "lsq".into(),
                    succeeded: 0,
                    rms_tracking_mean: None,
                    rms_tracking_std: None,
                    angle_error_mean: None,
                    angle_error_std: None,
                    failure: Some("left, \"quoted\"\nline".into()),
                    replicates: vec![failed],
                },
            ],
        }
    }

    #[test]
    fn round_trips_in_both_formats() {
        let dir = tempfile::tempdir().unwrap();
        let r = sample();
        for (name, fmt) in [("s.csv", ExportFormat::Csv), ("s.json", ExportFormat::Json)] {
            let p = dir.path().join(name);
            export(&r, &p, fmt).unwrap();
            assert_eq!(import(&p, fmt).unwrap(), r, "{name}");
        }
    }

    #[test]
    fn csv_has_one_row_per_cell_plus_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        export(&sample(), &p, ExportFormat::Csv).unwrap();
        let mut rd = csv::Reader::from_path(&p).unwrap();
        assert_eq!(rd.headers().unwrap().len(), CSV_COLUMNS.len());
        assert_eq!(rd.records().count(), 2);
    }

    #[test]
    fn io_errors_name_the_path() {
        let err = import(Path::new("/nonexistent/x.csv"), ExportFormat::Csv).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.csv"));
    }
}
