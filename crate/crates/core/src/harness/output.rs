//! CSV and JSON artifacts.
//!
//! Floats are written in Rust's shortest round-trip form, so a value read
//! back is bit-identical to the one written. Unavailable RAIM values are
//! empty cells.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use thiserror::Error;

use super::run::{EpochFlags, EpochRecord, SvDiagnostic};
use super::summary::RunSummary;
use crate::frames::EnuVector;

pub const EPOCH_COLUMNS: [&str; 17] = [
    "t_s",
    "truth_x_m",
    "truth_y_m",
    "truth_z_m",
    "est_x_m",
    "est_y_m",
    "est_z_m",
    "err_e_m",
    "err_n_m",
    "err_u_m",
    "valid_svs",
    "locked_svs",
    "raim_stat",
    "raim_thresh",
    "raim_detected",
    "excluded_svs",
    "flags",
];

pub const CN0_COLUMNS: [&str; 3] = ["t_s", "sv_id", "cn0_dbhz"];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}, row {row}: {message}")]
    Format { path: String, row: usize, message: String },
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new()
    }
}

fn joined<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

pub fn write_epoch_csv_to<W: Write>(records: &[EpochRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EPOCH_COLUMNS)?;
    for r in records {
        w.write_record([
            num(r.t),
            num(r.truth.x),
            num(r.truth.y),
            num(r.truth.z),
            num(r.estimate.x),
            num(r.estimate.y),
            num(r.estimate.z),
            num(r.error_enu.east),
            num(r.error_enu.north),
            num(r.error_enu.up),
            r.valid_svs.to_string(),
            r.locked_svs.to_string(),
            num(r.raim_statistic),
            num(r.raim_threshold),
            u8::from(r.raim_detected).to_string(),
            joined(&r.excluded),
            r.flags.tokens().join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_epoch_csv(records: &[EpochRecord], path: &Path) -> Result<(), OutputError> {
    let file = create(path)?;
    write_epoch_csv_to(records, BufWriter::new(file)).map_err(|source| OutputError::Csv {
        path: path.display().to_string(),
        source,
    })
}

/// Per-satellite C/N0 companion file, one row per visible satellite per
/// epoch. A zero envelope is written as an empty cell.
pub fn write_cn0_csv(records: &[EpochRecord], path: &Path) -> Result<(), OutputError> {
    let wrap = |source| OutputError::Csv {
        path: path.display().to_string(),
        source,
    };
    let mut w = csv::Writer::from_writer(BufWriter::new(create(path)?));
    w.write_record(CN0_COLUMNS).map_err(wrap)?;
    for r in records {
        for s in &r.svs {
            w.write_record([num(r.t), s.sv_id.to_string(), num(s.cn0_dbhz)])
                .map_err(wrap)?;
        }
    }
    w.flush().map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn summary_json(summary: &RunSummary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

pub fn write_summary_json(summary: &RunSummary, path: &Path) -> Result<(), OutputError> {
    write_text(path, &summary_json(summary))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), OutputError> {
    std::fs::write(path, text).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn create(path: &Path) -> Result<File, OutputError> {
    File::create(path).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_f64(cell: &str) -> Result<f64, String> {
    if cell.is_empty() {
        return Ok(f64::NAN);
    }
    cell.parse().map_err(|_| format!("not a number: '{cell}'"))
}

fn parse_list(cell: &str) -> Result<Vec<u32>, String> {
    if cell.is_empty() {
        return Ok(Vec::new());
    }
    cell.split(';')
        .map(|s| s.parse().map_err(|_| format!("not an sv id: '{s}'")))
        .collect()
}

/// Reads an epochs CSV back into records. Per-satellite diagnostics and NIS
/// are not part of the file and come back empty.
pub fn read_epoch_csv_from<R: Read>(input: R, name: &str) -> Result<Vec<EpochRecord>, OutputError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|source| OutputError::Csv {
        path: name.to_string(),
        source,
    })?;
    if header.iter().ne(EPOCH_COLUMNS.iter().copied()) {
        return Err(OutputError::Format {
            path: name.to_string(),
            row: 0,
            message: "header does not match the epochs column list".into(),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|source| OutputError::Csv {
            path: name.to_string(),
            source,
        })?;
        let fail = |message: String| OutputError::Format {
            path: name.to_string(),
            row: i + 1,
            message,
        };
        let f = |j: usize| parse_f64(&row[j]).map_err(fail);
        let u = |j: usize| {
            row[j]
                .parse::<usize>()
                .map_err(|_| fail(format!("bad count '{}'", &row[j])))
        };
        let flags = if row[16].is_empty() {
            EpochFlags::default()
        } else {
            EpochFlags::from_tokens(row[16].split(';')).map_err(fail)?
        };
        out.push(EpochRecord {
            t: f(0)?,
            truth: Vector3::new(f(1)?, f(2)?, f(3)?),
            estimate: Vector3::new(f(4)?, f(5)?, f(6)?),
            error_enu: EnuVector::new(f(7)?, f(8)?, f(9)?),
            valid_svs: u(10)?,
            locked_svs: u(11)?,
            raim_statistic: f(12)?,
            raim_threshold: f(13)?,
            raim_detected: &row[14] == "1",
            excluded: parse_list(&row[15]).map_err(fail)?,
            flags,
            nis: None,
            nis_dims: 0,
            svs: Vec::new(),
        });
    }
    Ok(out)
}

pub fn read_epoch_csv(path: &Path) -> Result<Vec<EpochRecord>, OutputError> {
    let file = File::open(path).map_err(|source| OutputError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_epoch_csv_from(file, &path.display().to_string())
}

/// Fills each record's per-satellite C/N0 from a companion file written by
/// [`write_cn0_csv`]. Rows are matched on the epoch time.
pub fn attach_cn0_csv(records: &mut [EpochRecord], path: &Path) -> Result<(), OutputError> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|source| OutputError::Io {
        path: name.clone(),
        source,
    })?;
    let mut rdr = csv::Reader::from_reader(file);
    let mut idx = 0;
    for (i, row) in rdr.records().enumerate() {
        let row = row.map_err(|source| OutputError::Csv {
            path: name.clone(),
            source,
        })?;
        let fail = |message: String| OutputError::Format {
            path: name.clone(),
            row: i + 1,
            message,
        };
        let t = parse_f64(&row[0]).map_err(fail)?;
        let sv_id = row[1]
            .parse::<u32>()
            .map_err(|_| fail(format!("bad sv id '{}'", &row[1])))?;
        let cn0 = parse_f64(&row[2]).map_err(fail)?;
        while idx < records.len() && records[idx].t < t {
            idx += 1;
        }
        if idx == records.len() || records[idx].t != t {
            return Err(fail(format!("time {t} not in the epochs file")));
        }
        records[idx].svs.push(SvDiagnostic {
            sv_id,
            valid: false,
            locked: false,
            code_error: f64::NAN,
            residual: 0.0,
            variance: 0.0,
            cn0_dbhz: if cn0.is_nan() { f64::NEG_INFINITY } else { cn0 },
            reacquiring: false,
            outaged: false,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<EpochRecord> {
        (0..5)
            .map(|k| EpochRecord {
                t: k as f64 * 0.1,
                truth: Vector3::new(-3.0e6 + k as f64, 5.0e6, 2.7e6),
                estimate: Vector3::new(-3.0e6 + 1.0 / 3.0, 5.0e6 - 2.0, 2.7e6 + 0.1),
                error_enu: EnuVector::new(1.0 / 3.0, -2.0, 0.1 * k as f64),
                valid_svs: 8,
                locked_svs: 7,
                raim_statistic: if k == 0 { f64::NAN } else { 1.234_567_890_123 },
                raim_threshold: if k == 0 { f64::NAN } else { 13.276_704_135_2 },
                raim_detected: k == 3,
                excluded: if k == 3 { vec![5, 12] } else { vec![] },
                flags: EpochFlags {
                    outage: k == 2,
                    predict_only: k == 2,
                    ..EpochFlags::default()
                },
                nis: None,
                nis_dims: 0,
                svs: vec![],
            })
            .collect()
    }

    #[test]
    fn header_and_row_count() {
        let mut buf = Vec::new();
        write_epoch_csv_to(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t_s,truth_x_m,truth_y_m,truth_z_m,est_x_m,est_y_m,est_z_m,err_e_m,err_n_m,err_u_m,valid_svs,locked_svs,raim_stat,raim_thresh,raim_detected,excluded_svs,flags"
        );
        assert_eq!(text.lines().count(), 6);
        assert!(text.contains(",1,5;12,"));
        assert!(text.contains("predict_only;outage"));
    }

    #[test]
    fn round_trip_is_exact() {
        let recs = sample();
        let mut buf = Vec::new();
        write_epoch_csv_to(&recs, &mut buf).unwrap();
        let back = read_epoch_csv_from(buf.as_slice(), "mem").unwrap();
        assert_eq!(back.len(), recs.len());
        for (a, b) in recs.iter().zip(&back) {
            assert_eq!(a.error_enu, b.error_enu);
            assert_eq!(a.estimate, b.estimate);
            assert_eq!(a.excluded, b.excluded);
            assert_eq!(a.flags, b.flags);
            assert_eq!(a.raim_statistic.is_nan(), b.raim_statistic.is_nan());
        }
    }

    #[test]
    fn bad_header_rejected() {
        let err = read_epoch_csv_from("a,b\n1,2\n".as_bytes(), "x.csv").unwrap_err();
        assert!(err.to_string().contains("x.csv"));
    }
}
