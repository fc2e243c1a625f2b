//! JSON-lines reading and writing.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::point::Point;

/// Parses one JSON value per non-blank line. Errors carry the 1-based line
/// number.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| Error::Parse { line: i + 1, source })?;
        out.push(value);
    }
    Ok(out)
}

pub fn read_points<R: BufRead>(reader: R) -> Result<Vec<Point>> {
    read_jsonl(reader)
}

pub fn write_jsonl<'a, T, W, I>(mut writer: W, items: I) -> Result<()>
where
    T: Serialize + 'a,
    W: Write,
    I: IntoIterator<Item = &'a T>,
{
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}
