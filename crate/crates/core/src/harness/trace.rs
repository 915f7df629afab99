//! CSV trace rows.

use std::io::{Read, Write};
use std::path::Path;

use super::HarnessError;
use crate::algorithms::IterationRecord;

pub const CSV_HEADER: [&str; 14] = [
    "run_id",
    "algorithm",
    "stage",
    "iteration",
    "alpha",
    "radius",
    "y_norm_sq",
    "mean_grad_norm_sq",
    "x_consensus_sq",
    "y_consensus_sq",
    "v_over_alpha_sq",
    "potential",
    "boundary_touch_count",
    "wall_clock_us",
];

/// Column holding the wall clock, which is excluded from determinism checks.
pub const WALL_CLOCK_COLUMN: usize = 13;

/// One CSV row. `stage` is `-1` for single-stage algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub run_id: u64,
    pub algorithm: String,
    pub stage: i64,
    pub iteration: u64,
    pub alpha: f64,
    pub radius: Option<f64>,
    pub y_norm_sq: Option<f64>,
    pub mean_grad_norm_sq: f64,
    pub x_consensus_sq: f64,
    pub y_consensus_sq: Option<f64>,
    pub v_over_alpha_sq: Option<f64>,
    pub potential: Option<f64>,
    pub boundary_touch_count: u64,
    pub wall_clock_us: u64,
}

impl TraceRecord {
    pub fn from_iteration(run_id: u64, algorithm: &str, rec: &IterationRecord, wall_clock_us: u64) -> Self {
        Self {
            run_id,
            algorithm: algorithm.to_string(),
            stage: rec.stage.map_or(-1, i64::from),
            iteration: rec.iteration,
            alpha: rec.alpha,
            radius: rec.radius,
            y_norm_sq: rec.gaps.y_norm_sq,
            mean_grad_norm_sq: rec.gaps.mean_grad_norm_sq,
            x_consensus_sq: rec.gaps.x_consensus_sq,
            y_consensus_sq: rec.gaps.y_consensus_sq,
            v_over_alpha_sq: rec.gaps.v_over_alpha_sq,
            potential: rec.potential,
            boundary_touch_count: rec.boundary_touch_count as u64,
            wall_clock_us,
        }
    }

    fn fields(&self) -> [String; 14] {
        [
            self.run_id.to_string(),
            self.algorithm.clone(),
            self.stage.to_string(),
            self.iteration.to_string(),
            fmt_f64(self.alpha),
            fmt_opt(self.radius),
            fmt_opt(self.y_norm_sq),
            fmt_f64(self.mean_grad_norm_sq),
            fmt_f64(self.x_consensus_sq),
            fmt_opt(self.y_consensus_sq),
            fmt_opt(self.v_over_alpha_sq),
            fmt_opt(self.potential),
            self.boundary_touch_count.to_string(),
            self.wall_clock_us.to_string(),
        ]
    }

    fn from_fields(row: &csv::StringRecord, line: u64) -> Result<Self, HarnessError> {
        if row.len() != CSV_HEADER.len() {
            return Err(HarnessError::Parse {
                line,
                msg: format!("expected {} fields, got {}", CSV_HEADER.len(), row.len()),
            });
        }
        let err = |col: usize, msg: String| HarnessError::Parse {
            line,
            msg: format!("column `{}`: {msg}", CSV_HEADER[col]),
        };
        let int = |col: usize| row[col].parse::<u64>().map_err(|e| err(col, e.to_string()));
        let float = |col: usize| row[col].parse::<f64>().map_err(|e| err(col, e.to_string()));
        let opt = |col: usize| {
            if row[col].is_empty() {
                Ok(None)
            } else {
                float(col).map(Some)
            }
        };
        Ok(Self {
            run_id: int(0)?,
            algorithm: row[1].to_string(),
            stage: row[2]
                .parse()
                .map_err(|e: std::num::ParseIntError| err(2, e.to_string()))?,
            iteration: int(3)?,
            alpha: float(4)?,
            radius: opt(5)?,
            y_norm_sq: opt(6)?,
            mean_grad_norm_sq: float(7)?,
            x_consensus_sq: float(8)?,
            y_consensus_sq: opt(9)?,
            v_over_alpha_sq: opt(10)?,
            potential: opt(11)?,
            boundary_touch_count: int(12)?,
            wall_clock_us: int(13)?,
        })
    }
}

/// 17 significant digits, enough to round-trip every finite `f64`.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub struct TraceWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Result<Self, HarnessError> {
        let mut inner = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        inner.write_record(CSV_HEADER)?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, rec: &TraceRecord) -> Result<(), HarnessError> {
        self.inner.write_record(rec.fields())?;
        Ok(())
    }

    pub fn finish(self) -> Result<W, HarnessError> {
        self.inner
            .into_inner()
            .map_err(|e| HarnessError::Csv(e.error().to_string()))
    }
}

/// Header row then one line per record.
pub fn write_csv<W: Write>(records: &[TraceRecord], out: W) -> Result<W, HarnessError> {
    let mut w = TraceWriter::new(out)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

pub fn emit_csv(records: &[TraceRecord], path: &Path) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    let mut out = write_csv(records, std::io::BufWriter::new(file)).map_err(|e| e.with_path(path))?;
    out.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn parse_csv<R: Read>(input: R) -> Result<Vec<TraceRecord>, HarnessError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(input);
    let header = reader.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(HarnessError::Parse {
            line: 1,
            msg: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    reader
        .records()
        .map(|row| {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            TraceRecord::from_fields(&row, line)
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<TraceRecord>, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    parse_csv(std::io::BufReader::new(file)).map_err(|e| e.with_path(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TraceRecord {
        TraceRecord {
            run_id: 3,
            algorithm: "magenta_d1".into(),
            stage: 2,
            iteration: 17,
            alpha: 0.1,
            radius: Some(2.0),
            y_norm_sq: Some(1.0 / 3.0),
            mean_grad_norm_sq: 1e-300,
            x_consensus_sq: 0.0,
            y_consensus_sq: Some(f64::MIN_POSITIVE),
            v_over_alpha_sq: None,
            potential: Some(-12.5),
            boundary_touch_count: 1,
            wall_clock_us: 99,
        }
    }

    #[test]
    fn empty_is_header_only() {
        let out = write_csv(&[], Vec::new()).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{}\n", CSV_HEADER.join(",")));
    }

    #[test]
    fn one_record_two_lines() {
        let out = String::from_utf8(write_csv(&[sample()], Vec::new()).unwrap()).unwrap();
        assert_eq!(out.lines().count(), 2);
        assert!(out.ends_with('\n'));
        assert!(out
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("3,magenta_d1,2,17,1.0000000000000001e-1,"));
    }

    #[test]
    fn round_trip_including_specials() {
        let mut b = sample();
        b.stage = -1;
        b.radius = None;
        b.mean_grad_norm_sq = f64::INFINITY;
        b.x_consensus_sq = f64::NAN;
        let out = write_csv(&[sample(), b.clone()], Vec::new()).unwrap();
        let back = parse_csv(out.as_slice()).unwrap();
        assert_eq!(back[0], sample());
        assert!(back[1].x_consensus_sq.is_nan());
        assert_eq!(back[1].mean_grad_norm_sq, f64::INFINITY);
        assert_eq!(back[1].radius, None);
    }

    #[test]
    fn bad_rows_report_line() {
        let text = format!("{}\n1,a,0\n", CSV_HEADER.join(","));
        match parse_csv(text.as_bytes()) {
            Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
