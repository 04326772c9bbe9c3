//! Deterministic report writers. JSON fields come from ordered structs and
//! CSV floats use a fixed format, so identical runs produce identical bytes.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::LabError;
use crate::io::fmt_f64;

pub fn tool_version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LabError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serialization");
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), LabError> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn csv_f64(x: f64) -> String {
    fmt_f64(x)
}
