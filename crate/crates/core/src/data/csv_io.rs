//! CSV reading and writing in the `t,V,I,theta,delta,P,Q[,label]` schema.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::{Channel, MeasurementRecord, MeasurementSeries, Source, CHANNELS};
use crate::error::{Error, Result};

/// Header names for the timestamp and the six channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub t: String,
    pub v: String,
    pub i: String,
    pub theta: String,
    pub delta: String,
    pub p: String,
    pub q: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self {
            t: "t".into(),
            v: "V".into(),
            i: "I".into(),
            theta: "theta".into(),
            delta: "delta".into(),
            p: "P".into(),
            q: "Q".into(),
        }
    }
}

impl ColumnMap {
    fn channel_names(&self) -> [&str; CHANNELS] {
        [&self.v, &self.i, &self.theta, &self.delta, &self.p, &self.q]
    }
}

/// Base quantities used to convert raw units to per-unit on ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerUnitBase {
    pub voltage: f64,
    pub current: f64,
    pub power: f64,
    pub sample_rate: f64,
}

impl Default for PerUnitBase {
    fn default() -> Self {
        Self {
            voltage: 1.0,
            current: 1.0,
            power: 1.0,
            sample_rate: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub series: MeasurementSeries,
    /// Per-row labels when the file carries a `label` column.
    pub labels: Option<Vec<bool>>,
    pub dropped_rows: usize,
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Schema(format!("column '{name}' not found in header")))
}

fn parse_label(raw: &str, row: usize) -> Result<bool> {
    match raw.trim() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(Error::Data(format!("row {row}: invalid label '{other}'"))),
    }
}

/// Reads a measurement CSV. Rows with any empty channel are dropped and
/// counted; non-numeric values and non-increasing timestamps are errors.
pub fn read_csv<R: Read>(reader: R, columns: &ColumnMap, base: &PerUnitBase) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let t_col = column(&headers, &columns.t)?;
    let mut ch_cols = [0usize; CHANNELS];
    for (slot, name) in ch_cols.iter_mut().zip(columns.channel_names()) {
        *slot = column(&headers, name)?;
    }
    let label_col = headers.iter().position(|h| h.trim() == "label");
    let scale = [base.voltage, base.current, 1.0, 1.0, base.power, base.power];

    let mut records = Vec::new();
    let mut labels = label_col.map(|_| Vec::new());
    let mut dropped = 0;
    let mut last_t: Option<i64> = None;
    for (row, result) in rdr.records().enumerate() {
        let rec = result?;
        let t_raw = rec.get(t_col).map(str::trim).unwrap_or("");
        if t_raw.is_empty() {
            dropped += 1;
            continue;
        }
        let t: i64 = t_raw
            .parse()
            .map_err(|_| Error::Data(format!("row {row}: timestamp '{t_raw}' is not an integer")))?;
        if let Some(prev) = last_t {
            if t <= prev {
                return Err(Error::Data(format!(
                    "timestamps out of order at row {row} (t={t} after t={prev})"
                )));
            }
        }
        last_t = Some(t);

        let mut values = [0.0; CHANNELS];
        let mut missing = false;
        for (k, &col) in ch_cols.iter().enumerate() {
            let raw = rec.get(col).map(str::trim).unwrap_or("");
            if raw.is_empty() || raw.eq_ignore_ascii_case("nan") {
                missing = true;
                break;
            }
            let x: f64 = raw.parse().map_err(|_| {
                Error::Data(format!("row {row}: {} value '{raw}' is not numeric", Channel::ALL[k]))
            })?;
            values[k] = x / scale[k];
        }
        if missing {
            dropped += 1;
            continue;
        }
        if let (Some(labels), Some(col)) = (labels.as_mut(), label_col) {
            labels.push(parse_label(rec.get(col).unwrap_or(""), row)?);
        }
        records.push(MeasurementRecord::from_values(t, values));
    }
    let series = MeasurementSeries::new(records, base.sample_rate, Source::Csv)?;
    Ok(Ingested {
        series,
        labels,
        dropped_rows: dropped,
    })
}

pub fn ingest_csv(path: impl AsRef<Path>, columns: &ColumnMap, base: &PerUnitBase) -> Result<Ingested> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(std::io::BufReader::new(file), columns, base)
}

/// Writes the canonical schema, with a trailing `label` column when given.
pub fn write_csv<W: Write>(writer: W, series: &MeasurementSeries, labels: Option<&[bool]>) -> Result<()> {
    if let Some(l) = labels {
        if l.len() != series.len() {
            return Err(Error::Dimension(format!(
                "{} labels for {} records",
                l.len(),
                series.len()
            )));
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["t", "V", "I", "theta", "delta", "P", "Q"];
    if labels.is_some() {
        header.push("label");
    }
    w.write_record(&header)?;
    for (k, r) in series.records.iter().enumerate() {
        let mut row: Vec<String> = Vec::with_capacity(8);
        row.push(r.timestamp.to_string());
        row.extend(r.values().iter().map(|v| v.to_string()));
        if let Some(l) = labels {
            row.push(if l[k] { "1" } else { "0" }.into());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "t,V,I,theta,delta,P,Q\n";

    fn read(text: &str) -> Result<Ingested> {
        read_csv(text.as_bytes(), &ColumnMap::default(), &PerUnitBase::default())
    }

    #[test]
    fn well_formed_file() {
        let mut text = HEADER.to_string();
        for t in 0..5 {
            text.push_str(&format!("{t},1.0,0.5,0.0,-0.3,0.47,0.14\n"));
        }
        let ing = read(&text).unwrap();
        assert_eq!(ing.series.len(), 5);
        assert_eq!(ing.dropped_rows, 0);
        assert!(ing.labels.is_none());
    }

    #[test]
    fn row_missing_q_is_dropped() {
        let text = format!(
            "{HEADER}0,1,0.5,0,-0.3,0.4,0.1\n1,1,0.5,0,-0.3,0.4,\n2,1,0.5,0,-0.3,0.4,0.1\n3,1,0.5,0,-0.3,0.4,0.1\n4,1,0.5,0,-0.3,0.4,0.1\n"
        );
        let ing = read(&text).unwrap();
        assert_eq!(ing.series.len(), 4);
        assert_eq!(ing.dropped_rows, 1);
    }

    #[test]
    fn shuffled_timestamps_name_first_bad_row() {
        let text = format!("{HEADER}0,1,1,0,0,1,0\n2,1,1,0,0,1,0\n1,1,1,0,0,1,0\n3,1,1,0,0,1,0\n");
        match read(&text) {
            Err(Error::Data(msg)) => assert!(msg.contains("row 2"), "{msg}"),
            other => panic!("expected data error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_column_is_schema_error() {
        let cols = ColumnMap {
            q: "Qvar".into(),
            ..ColumnMap::default()
        };
        let err = read_csv(format!("{HEADER}0,1,1,0,0,1,0\n").as_bytes(), &cols, &PerUnitBase::default());
        assert!(matches!(err, Err(Error::Schema(_))));
    }

    #[test]
    fn per_unit_conversion_and_renamed_columns() {
        let text = "time,volts,amps,va,ia,watts,vars\n0,240,10,0,0,2400,0\n";
        let cols = ColumnMap {
            t: "time".into(),
            v: "volts".into(),
            i: "amps".into(),
            theta: "va".into(),
            delta: "ia".into(),
            p: "watts".into(),
            q: "vars".into(),
        };
        let base = PerUnitBase {
            voltage: 240.0,
            current: 10.0,
            power: 2400.0,
            sample_rate: 120.0,
        };
        let ing = read_csv(text.as_bytes(), &cols, &base).unwrap();
        let r = ing.series.records[0];
        assert_eq!((r.v, r.i, r.p), (1.0, 1.0, 1.0));
        assert_eq!(ing.series.sample_rate, 120.0);
    }

    #[test]
    fn write_then_read_is_bit_exact_with_labels() {
        let records = (0..4)
            .map(|t| MeasurementRecord::from_values(t, [1.0 + 1e-17 * t as f64, 0.1 / 3.0, -0.04, -0.4, 0.3, 0.1]))
            .collect();
        let series = MeasurementSeries::new(records, 1.0, Source::Csv).unwrap();
        let labels = [false, true, true, false];
        let mut buf = Vec::new();
        write_csv(&mut buf, &series, Some(&labels)).unwrap();
        let back = read(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back.series.records, series.records);
        assert_eq!(back.labels.as_deref(), Some(&labels[..]));
    }
}
