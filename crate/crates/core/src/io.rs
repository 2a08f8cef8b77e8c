//! Field files and CSV export.
//!
//! A field file is one JSON header line followed by the raw samples as
//! little-endian `f64`, component-major then row-major nodes.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::catalog::CatalogId;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

pub const FORMAT_VERSION: u32 = 1;
pub const ENCODING: &str = "f64le";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub version: u32,
    pub n: usize,
    pub dims: Vec<usize>,
    pub h: f64,
    pub origin: Vec<f64>,
    pub m: usize,
    pub encoding: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<CatalogId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_hint: Option<f64>,
}

impl FieldHeader {
    pub fn of(field: &Field) -> Self {
        let g = field.grid();
        Self {
            version: FORMAT_VERSION,
            n: g.n(),
            dims: g.dims().to_vec(),
            h: g.h(),
            origin: g.origin().to_vec(),
            m: field.m(),
            encoding: ENCODING.to_string(),
            provenance: field.provenance,
            support_hint: field.support_hint,
        }
    }
}

pub fn write_field<W: Write>(mut w: W, field: &Field) -> Result<()> {
    let header =
        serde_json::to_string(&FieldHeader::of(field)).map_err(|e| Error::Format(e.to_string()))?;
    w.write_all(header.as_bytes())?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(field.data().len() * 8);
    for v in field.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_field<R: BufRead>(mut r: R) -> Result<Field> {
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    if line.last() != Some(&b'\n') {
        return Err(Error::Format("missing header line".into()));
    }
    let header: FieldHeader =
        serde_json::from_slice(&line).map_err(|e| Error::Format(e.to_string()))?;
    if header.version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported version {}",
            header.version
        )));
    }
    if header.encoding != ENCODING {
        return Err(Error::Format(format!(
            "unsupported encoding {}",
            header.encoding
        )));
    }
    let grid = Grid::new(header.n, &header.dims, header.h)?;
    let centred = header.origin.len() == header.n
        && header
            .origin
            .iter()
            .zip(grid.origin())
            .all(|(a, b)| (a - b).abs() <= 1e-9 * header.h);
    if !centred {
        return Err(Error::Format(
            "origin does not describe a centred box".into(),
        ));
    }
    let count = header.m * grid.len();
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::Format(format!("expected {count} samples")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after samples".into()));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let mut field = Field::from_data(grid, header.m, data)?;
    field.provenance = header.provenance;
    field.support_hint = header.support_hint;
    Ok(field)
}

/// CSV with columns `x1..xn, v1..vm`, one row per node.
pub fn write_field_csv<W: Write>(mut w: W, field: &Field) -> Result<()> {
    let g = field.grid();
    let n = g.n();
    let mut header: Vec<String> = (1..=n).map(|k| format!("x{k}")).collect();
    header.extend((1..=field.m()).map(|c| format!("v{c}")));
    writeln!(w, "{}", header.join(","))?;
    let mut row = String::new();
    for idx in 0..g.len() {
        row.clear();
        let x = g.coords(idx);
        for (k, xk) in x.iter().enumerate().take(n) {
            if k > 0 {
                row.push(',');
            }
            row.push_str(&xk.to_string());
        }
        for c in 0..field.m() {
            row.push(',');
            row.push_str(&field.value(idx, c).to_string());
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}
