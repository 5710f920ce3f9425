//! CSV and JSON files written by the CLI, and their readers.

use std::fs;
use std::path::Path;

use lmar_core::experiments::{Aggregates, AscltRecord, ExperimentConfig, ReplicateRecord, TheoryReport};
use lmar_core::ExperimentResult;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const RECORD_HEADER: [&str; 6] = ["n", "replicate", "seed", "theta_hat", "censored", "normalized_error"];

/// `%.17g`: 17 significant digits, `.` decimal, exponent only outside
/// `1e-5 <= |x| < 1e17`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..17).contains(&exp) {
        let decimals = (16 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Format(format!("{}: {e}", path.display()))
}

/// `t,value` with `t` starting at 1.
pub fn write_path_csv(path: &Path, values: &[f64]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(["t", "value"]).map_err(|e| csv_err(path, e))?;
    for (i, v) in values.iter().enumerate() {
        w.write_record([(i + 1).to_string(), fmt_f64(*v)]).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_path_csv(path: &Path) -> CliResult<Vec<f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?;
    if header != vec!["t", "value"] {
        return Err(CliError::Format(format!("{}: unexpected header {header:?}", path.display())));
    }
    let mut out = Vec::new();
    for (i, row) in r.records().enumerate() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let t: usize = parse_field(path, &row, 0)?;
        if t != i + 1 {
            return Err(CliError::Format(format!("{}: row {} has t = {t}", path.display(), i + 1)));
        }
        out.push(parse_field(path, &row, 1)?);
    }
    Ok(out)
}

fn parse_field<T: std::str::FromStr>(path: &Path, row: &csv::StringRecord, i: usize) -> CliResult<T> {
    let raw = row.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| CliError::Format(format!("{}: cannot parse field {i} `{raw}`", path.display())))
}

fn parse_opt(path: &Path, row: &csv::StringRecord, i: usize) -> CliResult<Option<f64>> {
    if row.get(i).unwrap_or("").is_empty() {
        Ok(None)
    } else {
        parse_field(path, row, i).map(Some)
    }
}

pub fn write_records_csv(path: &Path, records: &[ReplicateRecord]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(RECORD_HEADER).map_err(|e| csv_err(path, e))?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            r.replicate.to_string(),
            r.seed.to_string(),
            opt(r.theta_hat),
            r.censored.to_string(),
            opt(r.normalized_error),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_records_csv(path: &Path) -> CliResult<Vec<ReplicateRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?;
    if header != RECORD_HEADER.as_slice() {
        return Err(CliError::Format(format!("{}: unexpected header {header:?}", path.display())));
    }
    r.records()
        .map(|row| {
            let row = row.map_err(|e| csv_err(path, e))?;
            Ok(ReplicateRecord {
                n: parse_field(path, &row, 0)?,
                replicate: parse_field(path, &row, 1)?,
                seed: parse_field(path, &row, 2)?,
                theta_hat: parse_opt(path, &row, 3)?,
                censored: parse_field(path, &row, 4)?,
                normalized_error: parse_opt(path, &row, 5)?,
            })
        })
        .collect()
}

/// Everything in an [`ExperimentResult`] except the per-replicate rows,
/// which live in the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateFile {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub aggregates: Aggregates,
    pub asclt_records: Vec<AscltRecord>,
    pub theory: TheoryReport,
}

impl AggregateFile {
    pub fn from_result(result: &ExperimentResult) -> Self {
        Self {
            schema: result.schema,
            config: result.config.clone(),
            aggregates: result.aggregates.clone(),
            asclt_records: result.asclt_records.clone(),
            theory: result.theory.clone(),
        }
    }

    pub fn into_result(self, records: Vec<ReplicateRecord>) -> ExperimentResult {
        ExperimentResult {
            schema: self.schema,
            config: self.config,
            records,
            asclt_records: self.asclt_records,
            aggregates: self.aggregates,
            theory: self.theory,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Format(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format(format!("{}: {e}", path.display())))
}

/// Reassembles a result from `records.csv` and `aggregates.json` in `dir`.
pub fn read_experiment_dir(dir: &Path) -> CliResult<ExperimentResult> {
    let records = read_records_csv(&dir.join("records.csv"))?;
    let agg: AggregateFile = read_json(&dir.join("aggregates.json"))?;
    Ok(agg.into_result(records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [
            0.1,
            1.0 / 3.0,
            -2.5e-300,
            6.02214076e23,
            1e-5,
            9.999999999999999e16,
            123456.789,
            f64::MIN_POSITIVE,
            f64::MAX,
            -0.0,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s}");
            assert!(!s.contains(','));
        }
    }

    #[test]
    fn seventeen_digit_layout() {
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(1.0 / 3.0), "0.33333333333333331");
        assert_eq!(fmt_f64(2.0), "2");
        assert_eq!(fmt_f64(1e20), "1e20");
        assert_eq!(fmt_f64(1.5e-7), "1.4999999999999999e-7");
    }

    #[test]
    fn record_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let recs = vec![
            ReplicateRecord {
                n: 10,
                replicate: 0,
                seed: u64::MAX,
                theta_hat: Some(0.123_456_789_012_345_67),
                censored: false,
                normalized_error: Some(-1.0 / 7.0),
            },
            ReplicateRecord {
                n: 10,
                replicate: 1,
                seed: 3,
                theta_hat: None,
                censored: true,
                normalized_error: None,
            },
        ];
        write_records_csv(&path, &recs).unwrap();
        assert_eq!(read_records_csv(&path).unwrap(), recs);
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("n,replicate,seed,theta_hat,censored,normalized_error\n"));
    }

    #[test]
    fn path_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let v = vec![0.1, -2.0, 1e-9, 3.0e5];
        write_path_csv(&path, &v).unwrap();
        assert_eq!(read_path_csv(&path).unwrap(), v);
    }
}
