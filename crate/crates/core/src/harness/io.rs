//! CSV files. Floats are written in their shortest round-trip form, so
//! reading a file back yields bit-identical values.
//!
//! Run log columns: `trial,index,metric,cumulative,bottom_count,policy_value,truncated,wall_ms`.
//! Summary columns: `index,n,mean,std,ci_low,ci_high,smoothed`.
//! Optional values are written as empty fields.

use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::run::{LogRow, RunLog};
use crate::harness::stats::SummaryRow;

pub const LOG_HEADER: [&str; 8] = [
    "trial",
    "index",
    "metric",
    "cumulative",
    "bottom_count",
    "policy_value",
    "truncated",
    "wall_ms",
];

pub const SUMMARY_HEADER: [&str; 7] = ["index", "n", "mean", "std", "ci_low", "ci_high", "smoothed"];

fn write_records<W: Write, T: Serialize>(writer: W, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

fn read_records<R: Read, T: DeserializeOwned>(reader: R, header: &[&str]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(reader);
    let found: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::parse(
            1,
            1,
            format!("expected header `{}`, found `{}`", header.join(","), found.join(",")),
        ));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_log<W: Write>(writer: W, log: &RunLog) -> Result<()> {
    write_records(writer, &LOG_HEADER, &log.rows)
}

pub fn read_log<R: Read>(reader: R) -> Result<RunLog> {
    let rows: Vec<LogRow> = read_records(reader, &LOG_HEADER)?;
    Ok(RunLog { rows })
}

pub fn write_summary<W: Write>(writer: W, summary: &[SummaryRow]) -> Result<()> {
    write_records(writer, &SUMMARY_HEADER, summary)
}

pub fn read_summary<R: Read>(reader: R) -> Result<Vec<SummaryRow>> {
    read_records(reader, &SUMMARY_HEADER)
}

fn create(path: &Path) -> Result<std::fs::File> {
    std::fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

pub fn write_log_csv(path: &Path, log: &RunLog) -> Result<()> {
    write_log(std::io::BufWriter::new(create(path)?), log)
}

pub fn read_log_csv(path: &Path) -> Result<RunLog> {
    read_log(std::io::BufReader::new(open(path)?))
}

pub fn write_summary_csv(path: &Path, summary: &[SummaryRow]) -> Result<()> {
    write_summary(std::io::BufWriter::new(create(path)?), summary)
}

pub fn read_summary_csv(path: &Path) -> Result<Vec<SummaryRow>> {
    read_summary(std::io::BufReader::new(open(path)?))
}
