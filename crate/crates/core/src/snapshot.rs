//! Versioned JSON snapshots of a sketch.
//!
//! A snapshot carries the config, every slot (held point, counters, random
//! stream position) and the stream totals. Floats are written in shortest
//! round-trip form and parsed exactly, so restoring a snapshot and continuing
//! the stream is indistinguishable from never having stopped.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sketch::Sketch;

pub const SNAPSHOT_MAGIC: &str = "hac-sketch-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Serialize)]
struct Envelope<'a> {
    magic: &'a str,
    version: u32,
    sketch: &'a Sketch,
}

#[derive(Deserialize)]
struct Header {
    magic: String,
    version: u32,
}

#[derive(Deserialize)]
struct OwnedEnvelope {
    sketch: Sketch,
}

pub fn write_snapshot<W: Write>(sketch: &Sketch, mut writer: W) -> Result<()> {
    let envelope = Envelope {
        magic: SNAPSHOT_MAGIC,
        version: SNAPSHOT_VERSION,
        sketch,
    };
    serde_json::to_writer(&mut writer, &envelope)?;
    writer.write_all(b"\n")?;
    Ok(())
}

pub fn to_string(sketch: &Sketch) -> Result<String> {
    let mut buf = Vec::new();
    write_snapshot(sketch, &mut buf)?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn from_str(text: &str) -> Result<Sketch> {
    let header: Header = serde_json::from_str(text)
        .map_err(|e| Error::Snapshot(format!("not a sketch snapshot: {e}")))?;
    if header.magic != SNAPSHOT_MAGIC {
        return Err(Error::Snapshot(format!("unexpected magic `{}`", header.magic)));
    }
    if header.version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!(
            "version {} is not supported (expected {SNAPSHOT_VERSION})",
            header.version
        )));
    }
    let envelope: OwnedEnvelope =
        serde_json::from_str(text).map_err(|e| Error::Snapshot(e.to_string()))?;
    let mut sketch = envelope.sketch;
    sketch.restore_derived()?;
    Ok(sketch)
}

pub fn read_snapshot<R: Read>(mut reader: R) -> Result<Sketch> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    from_str(&text)
}
