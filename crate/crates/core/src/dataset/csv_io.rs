//! CSV schema:
//!
//! - labelled: `location,date,<beacon ids...>[,source]`
//! - unlabelled: `date,<beacon ids...>`
//!
//! Beacon columns must match the layout's ids in order. Extra columns are
//! rejected, except the trailing `source` column written by augmentation.

use std::io::{Read, Write};

use super::{
    decode_location_label, BeaconLayout, DatasetError, LabelledSample, RssiVector, SampleSource, UnlabelledSample,
};

pub const SOURCE_COLUMN: &str = "source";

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(input)
}

fn check_beacon_header(found: &[&str], layout: &BeaconLayout) -> Result<(), DatasetError> {
    let expected: Vec<&str> = layout.ids().collect();
    if found != expected.as_slice() {
        return Err(DatasetError::Schema(format!("beacon columns {found:?} do not match layout {expected:?}")));
    }
    Ok(())
}

fn parse_rssi(fields: &csv::StringRecord, offset: usize, count: usize, line: u64) -> Result<RssiVector, DatasetError> {
    let mut values = Vec::with_capacity(count);
    for (i, raw) in fields.iter().skip(offset).take(count).enumerate() {
        let v: f64 = raw.parse().map_err(|_| DatasetError::Row {
            line,
            message: format!("column {}: {raw:?} is not a number", offset + i + 1),
        })?;
        values.push(v);
    }
    RssiVector::new(values).map_err(|e| DatasetError::Row { line, message: e.to_string() })
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Parses a labelled CSV. Rows keep file order.
pub fn parse_labelled<R: Read>(input: R, layout: &BeaconLayout) -> Result<Vec<LabelledSample>, DatasetError> {
    let mut rdr = reader(input);
    let mut records = rdr.records();
    let header = records.next().ok_or_else(|| DatasetError::Schema("empty file".into()))??;
    let cols: Vec<&str> = header.iter().collect();
    let n = layout.len();
    let with_source = cols.len() == n + 3 && cols[n + 2] == SOURCE_COLUMN;
    if cols.len() != n + 2 && !with_source {
        return Err(DatasetError::Schema(format!(
            "labelled header has {} columns, expected {} (location,date,{} beacons)",
            cols.len(),
            n + 2,
            n
        )));
    }
    if cols[0] != "location" || cols[1] != "date" {
        return Err(DatasetError::Schema(format!(
            "labelled header must start with location,date; found {},{}",
            cols[0], cols[1]
        )));
    }
    check_beacon_header(&cols[2..n + 2], layout)?;
    let width = cols.len();

    let mut out = Vec::new();
    for record in records {
        let record = record?;
        let line = line_of(&record);
        if record.len() != width {
            return Err(DatasetError::Schema(format!("line {line}: {} columns, expected {width}", record.len())));
        }
        let label = record[0].to_string();
        let location = decode_location_label(&label).map_err(|e| DatasetError::Row { line, message: e.to_string() })?;
        let rssi = parse_rssi(&record, 2, n, line)?;
        let source = if with_source {
            record[n + 2].parse().map_err(|e: DatasetError| DatasetError::Row { line, message: e.to_string() })?
        } else {
            SampleSource::Original
        };
        out.push(LabelledSample { rssi, location, label, timestamp: record[1].to_string(), source });
    }
    Ok(out)
}

pub fn parse_unlabelled<R: Read>(input: R, layout: &BeaconLayout) -> Result<Vec<UnlabelledSample>, DatasetError> {
    let mut rdr = reader(input);
    let mut records = rdr.records();
    let header = records.next().ok_or_else(|| DatasetError::Schema("empty file".into()))??;
    let cols: Vec<&str> = header.iter().collect();
    let n = layout.len();
    if cols.len() != n + 1 {
        return Err(DatasetError::Schema(format!(
            "unlabelled header has {} columns, expected {} (date,{} beacons)",
            cols.len(),
            n + 1,
            n
        )));
    }
    if cols[0] != "date" {
        return Err(DatasetError::Schema(format!("unlabelled header must start with date; found {}", cols[0])));
    }
    check_beacon_header(&cols[1..], layout)?;

    let mut out = Vec::new();
    for record in records {
        let record = record?;
        let line = line_of(&record);
        if record.len() != n + 1 {
            return Err(DatasetError::Schema(format!("line {line}: {} columns, expected {}", record.len(), n + 1)));
        }
        out.push(UnlabelledSample { rssi: parse_rssi(&record, 1, n, line)?, timestamp: record[0].to_string() });
    }
    Ok(out)
}

pub fn write_labelled<W: Write>(
    output: W,
    samples: &[LabelledSample],
    layout: &BeaconLayout,
    with_source: bool,
) -> Result<(), DatasetError> {
    let mut wtr = csv::Writer::from_writer(output);
    let mut header = vec!["location", "date"];
    header.extend(layout.ids());
    if with_source {
        header.push(SOURCE_COLUMN);
    }
    wtr.write_record(&header)?;
    for s in samples {
        let mut row = vec![s.label.clone(), s.timestamp.clone()];
        row.extend(s.rssi.as_slice().iter().map(|v| v.to_string()));
        if with_source {
            row.push(s.source.to_string());
        }
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_unlabelled<W: Write>(
    output: W,
    samples: &[UnlabelledSample],
    layout: &BeaconLayout,
) -> Result<(), DatasetError> {
    let mut wtr = csv::Writer::from_writer(output);
    let mut header = vec!["date"];
    header.extend(layout.ids());
    wtr.write_record(&header)?;
    for s in samples {
        let mut row = vec![s.timestamp.clone()];
        row.extend(s.rssi.as_slice().iter().map(|v| v.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}
