//! Rendering of results as aligned tables, CSV or JSON.

use std::io::{self, Write};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// Shortest representation that parses back to the same bits.
pub fn num(x: f64) -> String {
    format!("{x}")
}

fn cell(value: &Value) -> String {
    match value {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => num(x),
            _ => n.to_string(),
        },
        other => other.to_string(),
    }
}

/// Flattens a serializable record into `(field, value)` pairs in declaration order.
pub fn fields<T: Serialize>(record: &T) -> anyhow::Result<Vec<(String, String)>> {
    match serde_json::to_value(record)? {
        Value::Object(map) => Ok(map.iter().map(|(k, v)| (k.clone(), cell(v))).collect()),
        other => anyhow::bail!("expected a record, got {other}"),
    }
}

pub fn write_key_values<W: Write>(out: &mut W, pairs: &[(String, String)]) -> io::Result<()> {
    let width = pairs.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    for (k, v) in pairs {
        writeln!(out, "{k:<width$}  {v}")?;
    }
    Ok(())
}

pub fn write_table<W: Write>(out: &mut W, header: &[String], rows: &[Vec<String>]) -> io::Result<()> {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |out: &mut W, cells: &[String]| -> io::Result<()> {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        writeln!(out, "{}", padded.join("  ").trim_end())
    };
    line(out, header)?;
    for row in rows {
        line(out, row)?;
    }
    Ok(())
}

pub fn write_csv<W: Write>(out: &mut W, header: &[String], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut writer = csv::WriterBuilder::new().from_writer(out);
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(out: &mut W, value: &T) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Emits a list of homogeneous records in the requested format.
pub fn emit_records<W: Write, T: Serialize>(out: &mut W, format: Format, records: &[T]) -> anyhow::Result<()> {
    if format == Format::Json {
        return write_json(out, &records);
    }
    let flat: Vec<Vec<(String, String)>> = records.iter().map(fields).collect::<anyhow::Result<_>>()?;
    let header: Vec<String> = match flat.first() {
        Some(first) => first.iter().map(|(k, _)| k.clone()).collect(),
        None => Vec::new(),
    };
    let rows: Vec<Vec<String>> = flat.into_iter().map(|r| r.into_iter().map(|(_, v)| v).collect()).collect();
    match format {
        Format::Csv => write_csv(out, &header, &rows),
        _ => Ok(write_table(out, &header, &rows)?),
    }
}

/// Emits a single record: key/value lines as a table, one header plus one row as CSV.
pub fn emit_record<W: Write, T: Serialize>(out: &mut W, format: Format, record: &T) -> anyhow::Result<()> {
    match format {
        Format::Json => write_json(out, record),
        Format::Csv => emit_records(out, format, std::slice::from_ref(record)),
        Format::Table => Ok(write_key_values(out, &fields(record)?)?),
    }
}
