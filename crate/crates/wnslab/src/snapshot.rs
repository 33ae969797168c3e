//! On-disk snapshot format for vector fields.
//!
//! A snapshot is a short ASCII header followed by raw binary data:
//!
//! ```text
//! wnslab-field v1
//! n 32
//! box 16
//! time 0.125
//! <blank line>
//! <component 0: n^3 little-endian f64, x-fastest>
//! <component 1> <component 2>
//! ```
//!
//! Floats in the header are written in the shortest decimal form that parses
//! back to the identical bits, and the payload is copied bit for bit, so a
//! write/read round trip reproduces the field exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::grid::Grid;

const MAGIC: &str = "wnslab-field v1";

/// A stored field together with the simulation time it was taken at.
#[derive(Clone, Debug)]
pub struct Snapshot {
    pub field: VectorField,
    pub time: f64,
}

/// Writes `field` at time `time` to `path`, replacing any existing file.
pub fn write_snapshot(path: impl AsRef<Path>, field: &VectorField, time: f64) -> Result<()> {
    let path = path.as_ref();
    if !time.is_finite() {
        return Err(Error::InvalidParameter(
            "snapshot time must be finite".into(),
        ));
    }
    let grid = field.grid();
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path.display().to_string(), e);
    writeln!(w, "{MAGIC}").map_err(io_err)?;
    writeln!(w, "n {}", grid.n()).map_err(io_err)?;
    writeln!(w, "box {}", grid.box_length()).map_err(io_err)?;
    writeln!(w, "time {time}").map_err(io_err)?;
    writeln!(w).map_err(io_err)?;
    for axis in 0..3 {
        let mut bytes = Vec::with_capacity(grid.cells() * 8);
        for &v in field.comp(axis) {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&bytes).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Reads a snapshot written by [`write_snapshot`].
pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(shown.clone(), e))?;
    let mut r = BufReader::new(file);

    let bad = |msg: String| Error::Snapshot {
        path: shown.clone(),
        msg,
    };
    let mut line = String::new();
    let read_line = |r: &mut BufReader<File>, line: &mut String| -> Result<()> {
        line.clear();
        let got = r
            .read_line(line)
            .map_err(|e| Error::io(shown.clone(), e))?;
        if got == 0 {
            return Err(Error::Snapshot {
                path: shown.clone(),
                msg: "unexpected end of header".into(),
            });
        }
        while line.ends_with('\n') || line.ends_with('\r') {
            line.pop();
        }
        Ok(())
    };

    read_line(&mut r, &mut line)?;
    if line != MAGIC {
        return Err(bad(format!("bad magic line {line:?}")));
    }

    let mut n: Option<usize> = None;
    let mut box_length: Option<f64> = None;
    let mut time: Option<f64> = None;
    loop {
        read_line(&mut r, &mut line)?;
        if line.is_empty() {
            break;
        }
        let (key, value) = line
            .split_once(' ')
            .ok_or_else(|| bad(format!("malformed header line {line:?}")))?;
        match key {
            "n" => {
                n = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("bad value for n: {value:?}")))?,
                )
            }
            "box" => {
                box_length = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("bad value for box: {value:?}")))?,
                )
            }
            "time" => {
                time = Some(
                    value
                        .parse()
                        .map_err(|_| bad(format!("bad value for time: {value:?}")))?,
                )
            }
            _ => return Err(bad(format!("unknown header key {key:?}"))),
        }
    }
    let n = n.ok_or_else(|| bad("missing header key n".into()))?;
    let box_length = box_length.ok_or_else(|| bad("missing header key box".into()))?;
    let time = time.ok_or_else(|| bad("missing header key time".into()))?;
    let grid = Grid::new(n, box_length)?;

    let cells = grid.cells();
    let mut comps: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let mut bytes = vec![0u8; cells * 8];
    for comp in &mut comps {
        r.read_exact(&mut bytes)
            .map_err(|_| bad("field data ends early".into()))?;
        *comp = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
    }
    let mut tail = [0u8; 1];
    if r.read(&mut tail).map_err(|e| Error::io(shown.clone(), e))? != 0 {
        return Err(bad("trailing bytes after field data".into()));
    }

    Ok(Snapshot {
        field: VectorField::from_components(grid, comps),
        time,
    })
}
