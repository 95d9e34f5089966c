//! CSV encodings of scan tables, tomography counts and geometry tables.
//!
//! Floats are written with Rust's shortest round-trip formatting, so reading
//! a file back reproduces the in-memory values bit for bit.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::measurement::scan::{PointCounts, ScanPoint, ScanTable, DEFAULT_CHANNEL};
use crate::source::RingGeometry;
use crate::tomography::{SettingCounts, TomographyCounts, TomographySetting};

const SCAN_VAR: &str = "scan_var";
const SINGLES_S: &str = "singles_s";
const SINGLES_I: &str = "singles_i";
const COINCIDENCES: &str = "coincidences";
const EXPECTED: &str = "expected_probability";

fn channel_columns(channels: &[String]) -> Vec<(String, String)> {
    if channels.len() == 1 && channels[0] == DEFAULT_CHANNEL {
        return vec![(COINCIDENCES.into(), EXPECTED.into())];
    }
    channels.iter().map(|ch| (format!("{COINCIDENCES}_{ch}"), format!("{EXPECTED}_{ch}"))).collect()
}

pub fn write_scan_table<W: Write>(table: &ScanTable, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let cols = channel_columns(&table.channels);
    let mut header = vec![SCAN_VAR.to_string(), SINGLES_S.into(), SINGLES_I.into()];
    for (c, e) in &cols {
        header.push(c.clone());
        header.push(e.clone());
    }
    w.write_record(&header)?;
    for p in &table.points {
        let mut row = vec![p.x.to_string()];
        match &p.counts {
            Some(c) => {
                row.push(c.singles_s.to_string());
                row.push(c.singles_i.to_string());
            }
            None => row.extend([String::new(), String::new()]),
        }
        for (k, e) in p.expected.iter().enumerate() {
            row.push(p.counts.as_ref().map(|c| c.coincidences[k].to_string()).unwrap_or_default());
            row.push(e.to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn scan_table_to_string(table: &ScanTable) -> Result<String> {
    let mut buf = Vec::new();
    write_scan_table(table, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Csv(e.to_string()))
}

fn parse<T: std::str::FromStr>(field: &str, column: &str, line: usize) -> Result<T> {
    field
        .parse()
        .map_err(|_| Error::Csv(format!("line {line}: cannot parse `{field}` in column `{column}`")))
}

pub fn read_scan_table<R: Read>(input: R) -> Result<ScanTable> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header.len() < 5 || header.len() % 2 == 0 || header[..3] != [SCAN_VAR, SINGLES_S, SINGLES_I] {
        return Err(Error::Csv(format!("unexpected scan header {header:?}")));
    }
    let channels: Vec<String> = if header[3] == COINCIDENCES && header.len() == 5 {
        vec![DEFAULT_CHANNEL.into()]
    } else {
        header[3..]
            .chunks(2)
            .map(|pair| {
                pair[0]
                    .strip_prefix(&format!("{COINCIDENCES}_"))
                    .filter(|ch| pair[1] == format!("{EXPECTED}_{ch}"))
                    .map(str::to_string)
                    .ok_or_else(|| Error::Csv(format!("unexpected channel columns {pair:?}")))
            })
            .collect::<Result<_>>()?
    };
    let mut points = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let x = parse(&rec[0], SCAN_VAR, line)?;
        let sampled = !rec[1].is_empty();
        let mut expected = Vec::with_capacity(channels.len());
        let mut coincidences = Vec::with_capacity(channels.len());
        for k in 0..channels.len() {
            let c = &rec[3 + 2 * k];
            if sampled {
                coincidences.push(parse(c, &header[3 + 2 * k], line)?);
            } else if !c.is_empty() {
                return Err(Error::Csv(format!("line {line}: counts present without singles")));
            }
            expected.push(parse(&rec[4 + 2 * k], &header[4 + 2 * k], line)?);
        }
        let counts = if sampled {
            Some(PointCounts {
                singles_s: parse(&rec[1], SINGLES_S, line)?,
                singles_i: parse(&rec[2], SINGLES_I, line)?,
                coincidences,
            })
        } else {
            None
        };
        points.push(ScanPoint { x, counts, expected });
    }
    ScanTable::new(channels, points)
}

pub fn write_tomography_counts<W: Write>(counts: &TomographyCounts, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(["setting", SINGLES_S, SINGLES_I, COINCIDENCES])?;
    for r in &counts.records {
        w.write_record([
            r.setting.label(),
            r.singles_s.to_string(),
            r.singles_i.to_string(),
            r.coincidences.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn tomography_counts_to_string(counts: &TomographyCounts) -> Result<String> {
    let mut buf = Vec::new();
    write_tomography_counts(counts, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Csv(e.to_string()))
}

/// Reads the 16-row counts table; `accidentals` is the expected background
/// per setting, which the file does not carry.
pub fn read_tomography_counts<R: Read>(input: R, accidentals: f64) -> Result<TomographyCounts> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != ["setting", SINGLES_S, SINGLES_I, COINCIDENCES] {
        return Err(Error::Csv(format!("unexpected tomography header {header:?}")));
    }
    let mut records = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        records.push(SettingCounts {
            setting: rec[0].parse::<TomographySetting>()?,
            singles_s: parse(&rec[1], SINGLES_S, line)?,
            singles_i: parse(&rec[2], SINGLES_I, line)?,
            coincidences: parse(&rec[3], COINCIDENCES, line)?,
        });
    }
    TomographyCounts::new(records, accidentals)
}

pub fn geometry_to_string(rows: &[RingGeometry]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["displacement_um", "radius_h_mm", "radius_v_mm", "center_shift_um", "overlap_efficiency"])?;
    for g in rows {
        w.write_record([
            g.displacement_um.to_string(),
            g.radius_h_mm.to_string(),
            g.radius_v_mm.to_string(),
            g.center_shift_um.to_string(),
            g.overlap_efficiency.to_string(),
        ])?;
    }
    let buf = w.into_inner().map_err(|e| Error::Csv(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| Error::Csv(e.to_string()))
}
