//! Binary embedding snapshots.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//!      0     8  magic  b"VLREMB01"
//!      8     1  entity class: 0 user, 1 video, 2 vlogger
//!      9     1  view: 0 video view, 1 vlogger view, 2 concatenated
//!     10     2  layer tag: layer index, or 0xFFFF for the layer average
//!     12     8  row count (u64)
//!     20     8  dimension d (u64)
//!     28  8·n·d  rows, row-major f64
//! ```

use std::path::Path;

use super::Table;
use crate::graph::EntityKind;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"VLREMB01";
pub const HEADER_LEN: usize = 28;
pub const AVERAGED: u16 = 0xFFFF;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotView {
    Video = 0,
    Vlogger = 1,
    Concatenated = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SnapshotHeader {
    pub kind: EntityKind,
    pub view: SnapshotView,
    pub layer: u16,
    pub count: usize,
    pub dim: usize,
}

pub fn encode(header: SnapshotHeader, table: &Table) -> Result<Vec<u8>> {
    if table.dim() != (header.count, header.dim) {
        return Err(Error::Shape(format!(
            "header says {}x{}, table is {:?}",
            header.count,
            header.dim,
            table.dim()
        )));
    }
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * table.len());
    out.extend_from_slice(MAGIC);
    out.push(match header.kind {
        EntityKind::User => 0,
        EntityKind::Video => 1,
        EntityKind::Vlogger => 2,
    });
    out.push(header.view as u8);
    out.extend_from_slice(&header.layer.to_le_bytes());
    out.extend_from_slice(&(header.count as u64).to_le_bytes());
    out.extend_from_slice(&(header.dim as u64).to_le_bytes());
    for v in table.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<(SnapshotHeader, Table)> {
    let bad = |m: &str| Error::Inconsistent(format!("embedding snapshot: {m}"));
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(bad("bad magic or short header"));
    }
    let kind = match bytes[8] {
        0 => EntityKind::User,
        1 => EntityKind::Video,
        2 => EntityKind::Vlogger,
        k => return Err(bad(&format!("unknown entity class {k}"))),
    };
    let view = match bytes[9] {
        0 => SnapshotView::Video,
        1 => SnapshotView::Vlogger,
        2 => SnapshotView::Concatenated,
        v => return Err(bad(&format!("unknown view {v}"))),
    };
    let layer = u16::from_le_bytes([bytes[10], bytes[11]]);
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    let dim = u64::from_le_bytes(bytes[20..28].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != count * dim * 8 {
        return Err(bad("payload length does not match header"));
    }
    let data: Vec<f64> = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let table = Table::from_shape_vec((count, dim), data).expect("length checked");
    Ok((
        SnapshotHeader {
            kind,
            view,
            layer,
            count,
            dim,
        },
        table,
    ))
}

pub fn write(path: &Path, header: SnapshotHeader, table: &Table) -> Result<()> {
    crate::graph::io::write_file(path, &encode(header, table)?)
}

pub fn read(path: &Path) -> Result<(SnapshotHeader, Table)> {
    decode(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}
