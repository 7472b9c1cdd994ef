use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use super::MissionError;
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Transit,
    Tracking,
}

/// One tick. Optional columns are empty in CSV and `null` in JSON Lines.
///
/// `status` is `transit`, `ok` (fresh estimate), `hold` (estimator failed,
/// previous filtered gradient reused) or `degenerate` (no usable direction,
/// heading held). `error` carries the estimator message on `hold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub x_reported: f64,
    pub y_reported: f64,
    pub heading: f64,
    pub delta_true: f64,
    pub delta_raw: f64,
    pub delta_filtered: f64,
    pub grad_est_x: Option<f64>,
    pub grad_est_y: Option<f64>,
    pub grad_filtered_x: Option<f64>,
    pub grad_filtered_y: Option<f64>,
    pub grad_true_x: Option<f64>,
    pub grad_true_y: Option<f64>,
    pub u_seek_x: f64,
    pub u_seek_y: f64,
    pub u_follow_x: f64,
    pub u_follow_y: f64,
    pub heading_cmd: f64,
    pub mode: Mode,
    pub status: String,
    pub error: Option<String>,
}

pub const CSV_HEADER: &str = "t,x,y,x_reported,y_reported,heading,delta_true,delta_raw,\
delta_filtered,grad_est_x,grad_est_y,grad_filtered_x,grad_filtered_y,grad_true_x,grad_true_y,\
u_seek_x,u_seek_y,u_follow_x,u_follow_y,heading_cmd,mode,status,error";

fn pair(x: Option<f64>, y: Option<f64>) -> Option<Vec2> {
    Some(Vec2::new(x?, y?))
}

impl MissionRecord {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn reported_position(&self) -> Vec2 {
        Vec2::new(self.x_reported, self.y_reported)
    }

    pub fn grad_estimate(&self) -> Option<Vec2> {
        pair(self.grad_est_x, self.grad_est_y)
    }

    pub fn grad_filtered(&self) -> Option<Vec2> {
        pair(self.grad_filtered_x, self.grad_filtered_y)
    }

    pub fn grad_true(&self) -> Option<Vec2> {
        pair(self.grad_true_x, self.grad_true_y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MissionOutcome {
    Completed,
    /// The vehicle left the field (or entered a masked cell) at `t`.
    ExitedDomain {
        t: f64,
        reason: String,
    },
    Aborted {
        t: f64,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionLog {
    pub records: Vec<MissionRecord>,
    pub outcome: MissionOutcome,
    /// SHA-256 over the sensor and position noise draws, hex encoded.
    pub noise_checksum: String,
}

impl MissionLog {
    pub fn tracking_started_at(&self) -> Option<f64> {
        self.records
            .iter()
            .find(|r| r.mode == Mode::Tracking)
            .map(|r| r.t)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), MissionError> {
        write_records_csv(&self.records, w)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<(), MissionError> {
        for r in &self.records {
            serde_json::to_writer(&mut w, r).map_err(std::io::Error::from)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn write_records_csv<W: Write>(records: &[MissionRecord], w: W) -> Result<(), MissionError> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(CSV_HEADER.split(','))?;
    for r in records {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(r: R) -> Result<Vec<MissionRecord>, MissionError> {
    let mut rd = csv::Reader::from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != CSV_HEADER {
        return Err(MissionError::Config(
            "mission log header does not match the expected columns".into(),
        ));
    }
    rd.deserialize()
        .map(|row| row.map_err(MissionError::from))
        .collect()
}

pub fn read_records_jsonl<R: BufRead>(r: R) -> Result<Vec<MissionRecord>, MissionError> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(std::io::Error::from)?);
    }
    Ok(out)
}
