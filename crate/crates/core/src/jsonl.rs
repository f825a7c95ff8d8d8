//! Line-delimited JSON helpers shared by every record file format.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::FormatError;

/// Parses one record per non-blank line. Line numbers in errors are 1-based.
pub fn read_records<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| FormatError::Malformed {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_records<T: Serialize, W: Write>(mut writer: W, records: &[T]) -> std::io::Result<()> {
    for r in records {
        write_record(&mut writer, r)?;
    }
    Ok(())
}

pub fn write_record<T: Serialize, W: Write>(mut writer: W, record: &T) -> std::io::Result<()> {
    let line = to_line(record)?;
    writer.write_all(line.as_bytes())
}

/// Serializes `record` as a single newline-terminated line.
pub fn to_line<T: Serialize>(record: &T) -> std::io::Result<String> {
    let mut line = serde_json::to_string(record).map_err(std::io::Error::other)?;
    line.push('\n');
    Ok(line)
}
