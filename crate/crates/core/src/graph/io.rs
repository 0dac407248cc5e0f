//! Tab-separated edge lists and id remap tables.
//!
//! Edge list: one `<raw_src_id>\t<raw_dst_id>` per line. Remap table: one
//! `<raw_id>\t<dense_index>` per line, in index order.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::IdMap;
use crate::{Error, Result};

pub fn read_edge_list(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, &path.display().to_string())
}

pub fn parse_edge_list(text: &str, file: &str) -> Result<Vec<(String, String)>> {
    let mut edges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split('\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), None) if !a.is_empty() && !b.is_empty() => {
                edges.push((a.to_owned(), b.to_owned()))
            }
            _ => {
                return Err(Error::Parse {
                    file: file.to_owned(),
                    line: i + 1,
                    message: "expected two tab-separated ids".into(),
                })
            }
        }
    }
    Ok(edges)
}

pub fn write_edge_list<'a>(
    path: &Path,
    edges: impl IntoIterator<Item = (&'a str, &'a str)>,
) -> Result<()> {
    let mut out = String::new();
    for (a, b) in edges {
        out.push_str(a);
        out.push('\t');
        out.push_str(b);
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

pub fn write_id_map(path: &Path, map: &IdMap) -> Result<()> {
    let mut out = String::new();
    for (i, raw) in map.iter() {
        out.push_str(raw);
        out.push('\t');
        out.push_str(&i.to_string());
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

pub fn read_id_map(path: &Path) -> Result<IdMap> {
    let file = path.display().to_string();
    let mut map = IdMap::new();
    for (line_no, (raw, idx)) in read_edge_list(path)?.into_iter().enumerate() {
        let expected = map.len();
        let parsed: usize = idx.parse().map_err(|_| Error::Parse {
            file: file.clone(),
            line: line_no + 1,
            message: format!("bad index {idx:?}"),
        })?;
        if parsed != expected || map.get(&raw).is_some() {
            return Err(Error::Parse {
                file: file.clone(),
                line: line_no + 1,
                message: format!("expected fresh id with index {expected}"),
            });
        }
        map.intern(&raw);
    }
    Ok(map)
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}
