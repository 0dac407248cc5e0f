//! Raw behavior logs: a header line naming the columns, then one
//! tab-separated record per line. Unknown columns are ignored.

use std::collections::HashMap;
use std::path::Path;

use crate::{Error, Result};

/// Columns every log must carry.
pub const COLUMNS: [&str; 12] = [
    "user_id",
    "video_id",
    "vlogger_id",
    "timestamp",
    "comment",
    "read_comment",
    "like",
    "share",
    "follow",
    "homepage",
    "watch_time",
    "play_progress",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RawBehaviorRecord {
    pub user: String,
    pub video: String,
    pub vlogger: String,
    pub timestamp: i64,
    pub comment: bool,
    pub read_comment: bool,
    pub like: bool,
    pub share: bool,
    pub follow: bool,
    pub homepage: bool,
    /// Seconds watched.
    pub watch_time: f64,
    /// Watch time over duration; above 1 on looped plays.
    pub play_progress: f64,
}

impl RawBehaviorRecord {
    /// Comment, read-comment, like or share: explicit feedback on the video.
    pub fn video_feedback(&self) -> bool {
        self.comment || self.read_comment || self.like || self.share
    }

    /// Follow or homepage visit: explicit interest in the vlogger.
    pub fn vlogger_feedback(&self) -> bool {
        self.follow || self.homepage
    }

    /// Fields in [`COLUMNS`] order.
    pub fn to_fields(&self) -> [String; 12] {
        let b = |x: bool| if x { "1" } else { "0" }.to_string();
        [
            self.user.clone(),
            self.video.clone(),
            self.vlogger.clone(),
            self.timestamp.to_string(),
            b(self.comment),
            b(self.read_comment),
            b(self.like),
            b(self.share),
            b(self.follow),
            b(self.homepage),
            self.watch_time.to_string(),
            self.play_progress.to_string(),
        ]
    }
}

pub fn read_raw_log(path: &Path) -> Result<Vec<RawBehaviorRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_raw_log(&text, &path.display().to_string())
}

/// Parses a whole log. Blank lines are skipped; line numbers in errors are 1-based.
pub fn parse_raw_log(text: &str, file: &str) -> Result<Vec<RawBehaviorRecord>> {
    let err = |line: usize, message: String| Error::Parse {
        file: file.to_string(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let Some((hline, header)) = lines.next() else {
        return Ok(Vec::new());
    };
    let index: HashMap<&str, usize> = header
        .split('\t')
        .map(str::trim)
        .enumerate()
        .map(|(i, c)| (c, i))
        .collect();
    let mut cols = [0usize; 12];
    for (slot, name) in cols.iter_mut().zip(COLUMNS) {
        *slot = *index
            .get(name)
            .ok_or_else(|| err(hline + 1, format!("missing column `{name}` in header")))?;
    }
    let width = index.len();

    let mut out = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != width {
            return Err(err(
                n,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        let get = |c: usize| fields[cols[c]].trim();
        let flag = |c: usize| -> Result<bool> {
            match get(c) {
                "1" | "true" => Ok(true),
                "0" | "false" | "" => Ok(false),
                v => Err(err(n, format!("column `{}`: bad flag `{v}`", COLUMNS[c]))),
            }
        };
        let num = |c: usize| -> Result<f64> {
            let v: f64 = get(c).parse().map_err(|_| {
                err(
                    n,
                    format!("column `{}`: bad number `{}`", COLUMNS[c], get(c)),
                )
            })?;
            if !v.is_finite() || v < 0.0 {
                return Err(err(
                    n,
                    format!("column `{}` must be finite and >= 0", COLUMNS[c]),
                ));
            }
            Ok(v)
        };
        for c in 0..3 {
            if get(c).is_empty() {
                return Err(err(n, format!("empty `{}`", COLUMNS[c])));
            }
        }
        out.push(RawBehaviorRecord {
            user: get(0).to_string(),
            video: get(1).to_string(),
            vlogger: get(2).to_string(),
            timestamp: get(3)
                .parse()
                .map_err(|_| err(n, format!("bad timestamp `{}`", get(3))))?,
            comment: flag(4)?,
            read_comment: flag(5)?,
            like: flag(6)?,
            share: flag(7)?,
            follow: flag(8)?,
            homepage: flag(9)?,
            watch_time: num(10)?,
            play_progress: num(11)?,
        });
    }
    Ok(out)
}

/// Header plus one line per record, in [`COLUMNS`] order.
pub fn format_raw_log(records: &[RawBehaviorRecord]) -> String {
    let mut s = COLUMNS.join("\t");
    s.push('\n');
    for r in records {
        s.push_str(&r.to_fields().join("\t"));
        s.push('\n');
    }
    s
}
