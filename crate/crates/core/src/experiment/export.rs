use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::Snr;
use super::runner::{ResultRow, RowMetrics};
use crate::error::{Error, Result};

pub const RESULTS_HEADER: [&str; 8] = [
    "config",
    "snr_db",
    "fraction",
    "accuracy",
    "precision",
    "recall",
    "f1",
    "seconds",
];

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidArgument(format!("csv: {e}"))
}

/// `results.csv`: one row per cell, fixed six-decimal numbers, empty metric
/// fields for failed cells.
pub fn write_results_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RESULTS_HEADER).map_err(csv_err)?;
    for r in rows {
        let m = r
            .metrics
            .map(|m| [m.accuracy, m.precision, m.recall, m.f1].map(fixed))
            .unwrap_or_default();
        out.write_record([
            r.config.as_str(),
            &r.snr.label(),
            &fixed(r.fraction),
            &m[0],
            &m[1],
            &m[2],
            &m[3],
            &fixed(r.seconds),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

fn parse_field(field: &str, what: &str, line: usize, path: &Path) -> Result<f64> {
    field.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: format!("bad {what} {field:?}"),
    })
}

/// Reads rows back from a `results.csv`. Failed cells come back with
/// `metrics = None` and a placeholder error.
pub fn read_results_csv(path: impl AsRef<Path>) -> Result<Vec<ResultRow>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().ne(RESULTS_HEADER) {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            msg: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = k + 2;
        let snr = match &rec[1] {
            "clean" => Snr::CLEAN,
            s => Snr(parse_field(s, "snr_db", line, path)?),
        };
        let metrics = if rec[3].is_empty() {
            None
        } else {
            let f = |i: usize, name: &str| parse_field(&rec[i], name, line, path);
            Some(RowMetrics {
                accuracy: f(3, "accuracy")?,
                precision: f(4, "precision")?,
                recall: f(5, "recall")?,
                f1: f(6, "f1")?,
            })
        };
        let seconds = parse_field(&rec[7], "seconds", line, path)?;
        rows.push(ResultRow {
            config: rec[0].to_string(),
            snr,
            fraction: parse_field(&rec[2], "fraction", line, path)?,
            error: metrics.is_none().then(|| "failed".to_string()),
            metrics,
            seconds,
            wall_seconds: seconds,
        });
    }
    Ok(rows)
}

fn snr_column(s: Snr) -> String {
    if s.is_clean() {
        "clean".into()
    } else {
        format!("{}dB", s.0)
    }
}

/// Accuracy pivot: one row per (config, fraction), one column per SNR in
/// ascending order with clean last. Missing or failed cells stay empty.
pub fn write_pivot_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut snrs: Vec<Snr> = Vec::new();
    for r in rows {
        if !snrs.contains(&r.snr) {
            snrs.push(r.snr);
        }
    }
    snrs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut keys: Vec<(&str, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|k| k.0 == r.config && k.1 == r.fraction) {
            keys.push((&r.config, r.fraction));
        }
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["config".to_string(), "fraction".to_string()];
    header.extend(snrs.iter().map(|&s| snr_column(s)));
    out.write_record(&header).map_err(csv_err)?;
    for (config, fraction) in keys {
        let mut record = vec![config.to_string(), fixed(fraction)];
        for &s in &snrs {
            let cell = rows
                .iter()
                .rev()
                .find(|r| r.config == config && r.fraction == fraction && r.snr == s)
                .and_then(|r| r.metrics)
                .map(|m| fixed(m.accuracy))
                .unwrap_or_default();
            record.push(cell);
        }
        out.write_record(&record).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Measured wall clock per cell. Kept apart from `results.csv`, whose bytes
/// must not depend on timing.
pub fn write_timings_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["config", "snr_db", "fraction", "wall_seconds"])
        .map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.config.clone(),
            r.snr.label(),
            fixed(r.fraction),
            fixed(r.wall_seconds),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_failures_csv<W: Write>(rows: &[ResultRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["config", "snr_db", "fraction", "error"])
        .map_err(csv_err)?;
    for r in rows.iter().filter(|r| r.failed()) {
        out.write_record([
            r.config.clone(),
            r.snr.label(),
            fixed(r.fraction),
            r.error.clone().unwrap_or_default(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExportedFiles {
    pub results: PathBuf,
    pub pivot: PathBuf,
    pub timings: PathBuf,
    /// Present only when some cell failed.
    pub failures: Option<PathBuf>,
}

/// Writes `results.csv`, `metrics_by_config.csv`, `timings.csv` and, if a
/// cell failed, `failures.csv` into `dir`, overwriting earlier exports.
pub fn export_results(rows: &[ResultRow], dir: impl AsRef<Path>) -> Result<ExportedFiles> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let files = ExportedFiles {
        results: dir.join("results.csv"),
        pivot: dir.join("metrics_by_config.csv"),
        timings: dir.join("timings.csv"),
        failures: rows
            .iter()
            .any(ResultRow::failed)
            .then(|| dir.join("failures.csv")),
    };
    write_results_csv(rows, fs::File::create(&files.results)?)?;
    write_pivot_csv(rows, fs::File::create(&files.pivot)?)?;
    write_timings_csv(rows, fs::File::create(&files.timings)?)?;
    let failures = dir.join("failures.csv");
    match &files.failures {
        Some(p) => write_failures_csv(rows, fs::File::create(p)?)?,
        None if failures.exists() => fs::remove_file(failures)?,
        None => {}
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(snr: Snr, fraction: f64, acc: Option<f64>) -> ResultRow {
        ResultRow {
            config: "baseline".into(),
            snr,
            fraction,
            metrics: acc.map(|a| RowMetrics {
                accuracy: a,
                precision: 0.123456789,
                recall: 1.0 / 3.0,
                f1: 0.5,
            }),
            seconds: 0.0,
            wall_seconds: 1.25,
            error: acc.is_none().then(|| "boom".into()),
        }
    }

    #[test]
    fn zero_rows_give_header_only() {
        let mut buf = Vec::new();
        write_results_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "config,snr_db,fraction,accuracy,precision,recall,f1,seconds\n"
        );
    }

    #[test]
    fn rows_round_trip_at_six_decimals() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![row(Snr(5.0), 0.1, Some(0.7)), row(Snr::CLEAN, 1.0, None)];
        let files = export_results(&rows, dir.path()).unwrap();
        let text = fs::read_to_string(&files.results).unwrap();
        assert!(text
            .contains("baseline,5.000000,0.100000,0.700000,0.123457,0.333333,0.500000,0.000000\n"));
        assert!(text.contains("baseline,clean,1.000000,,,,,0.000000\n"));
        let back = read_results_csv(&files.results).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].snr, Snr(5.0));
        assert_eq!(back[0].metrics.unwrap().precision, 0.123457);
        assert!(back[1].failed());
        let mut again = Vec::new();
        write_results_csv(&back, &mut again).unwrap();
        assert_eq!(String::from_utf8(again).unwrap(), text);
        assert!(files.failures.is_some());
        // a clean re-export drops the stale failure list
        export_results(&rows[..1], dir.path()).unwrap();
        assert!(!dir.path().join("failures.csv").exists());
    }

    #[test]
    fn pivot_has_a_column_per_snr_and_clean_last() {
        let mut rows = Vec::new();
        for s in [Snr::CLEAN, Snr(20.0), Snr(5.0), Snr(15.0), Snr(10.0)] {
            rows.push(row(s, 1.0, Some(s.0.min(25.0) / 25.0)));
        }
        rows.push(row(Snr(5.0), 0.5, Some(0.2)));
        let mut buf = Vec::new();
        write_pivot_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "config,fraction,5dB,10dB,15dB,20dB,clean");
        assert_eq!(
            lines[1],
            "baseline,1.000000,0.200000,0.400000,0.600000,0.800000,1.000000"
        );
        assert_eq!(lines[2], "baseline,0.500000,0.200000,,,,");
    }

    #[test]
    fn unwritable_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("plain");
        fs::write(&file, "x").unwrap();
        assert!(export_results(&[], file.join("sub")).is_err());
    }
}
