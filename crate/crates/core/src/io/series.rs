//! CSV time series of diagnostic records.

use std::path::Path;

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};

/// Fixed leading columns with their units.
pub const BASE_COLUMNS: &[&str] = &[
    "time [1]",
    "modified_energy [L2^2]",
    "kinetic_energy [L2^2]",
    "blowup_indicator [L2^2]",
    "tau_estimate [length]",
    "mhd_energy [L2^2]",
];

fn hm_column(m: f64) -> String {
    format!("hm_norm_{m} [H^{m}]")
}

/// Header for records carrying the given Sobolev orders.
pub fn csv_header(orders: &[f64]) -> Vec<String> {
    BASE_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(orders.iter().map(|&m| hm_column(m)))
        .collect()
}

/// Round-trip exact formatting: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Writes one row per record; the `H^m` columns follow the orders of the first record.
pub fn write_csv(records: &[DiagnosticsRecord], path: &Path) -> Result<()> {
    let orders: Vec<f64> = records
        .first()
        .map(|r| r.hm_norms.iter().map(|&(m, _)| m).collect())
        .unwrap_or_default();
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(csv_header(&orders)).map_err(csv_error)?;
    for r in records {
        let mut row = vec![
            fmt_f64(r.time),
            fmt_f64(r.modified_energy),
            fmt_f64(r.kinetic_energy),
            fmt_f64(r.blowup_indicator),
            opt(r.tau_estimate),
            opt(r.mhd_energy),
        ];
        for &m in &orders {
            row.push(opt(r.hm_norm(m)));
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    let header = r.headers().map_err(csv_error)?.clone();
    if header.len() < BASE_COLUMNS.len() || header.iter().zip(BASE_COLUMNS).any(|(a, b)| a != *b) {
        return Err(Error::Format("unexpected CSV header".into()));
    }
    let mut orders = Vec::new();
    for h in header.iter().skip(BASE_COLUMNS.len()) {
        let m = h
            .strip_prefix("hm_norm_")
            .and_then(|s| s.split(' ').next())
            .and_then(|s| s.parse::<f64>().ok())
            .ok_or_else(|| Error::Format(format!("unexpected column '{h}'")))?;
        orders.push(m);
    }
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::Format(format!("bad number '{s}'"))) };
    let opt = |s: &str| -> Result<Option<f64>> { if s.is_empty() { Ok(None) } else { num(s).map(Some) } };
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(csv_error)?;
        let mut hm_norms = Vec::new();
        for (i, &m) in orders.iter().enumerate() {
            if let Some(v) = opt(&row[BASE_COLUMNS.len() + i])? {
                hm_norms.push((m, v));
            }
        }
        out.push(DiagnosticsRecord {
            time: num(&row[0])?,
            modified_energy: num(&row[1])?,
            kinetic_energy: num(&row[2])?,
            blowup_indicator: num(&row[3])?,
            tau_estimate: opt(&row[4])?,
            mhd_energy: opt(&row[5])?,
            hm_norms,
        });
    }
    Ok(out)
}

/// Writes a generic table with the given header; cells are formatted by the caller.
pub fn write_table(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            time: t,
            modified_energy: 0.1 + t / 3.0,
            kinetic_energy: std::f64::consts::PI * t,
            hm_norms: vec![(1.0, 1.0 / 7.0), (2.5, 1e-300)],
            blowup_indicator: 1.0 / 3.0,
            tau_estimate: if t > 0.0 { Some(0.05) } else { None },
            mhd_energy: None,
        }
    }

    #[test]
    fn empty_series_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        write_csv(&[], &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("time [1],"));
    }

    #[test]
    fn parse_back_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        write_csv(&[rec(0.0)], &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap().lines().count(), 2);
        let recs: Vec<_> = (0..5).map(|i| rec(i as f64 * 0.1)).collect();
        write_csv(&recs, &p).unwrap();
        assert_eq!(read_csv(&p).unwrap(), recs);
    }
}
