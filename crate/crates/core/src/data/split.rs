use std::collections::HashMap;
use std::hash::Hash;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Users need this many interactions to get validation and test items.
pub const MIN_SPLIT_INTERACTIONS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidConfig(format!("unknown split `{other}`"))),
        }
    }
}

/// Per user, the latest interaction goes to test and the one before it to
/// validation; the rest train. Timestamp ties keep input order. Users with
/// fewer than [`MIN_SPLIT_INTERACTIONS`] keep everything in train.
pub fn leave_one_out_split<K: Hash + Eq>(rows: &[(K, i64)]) -> Vec<Split> {
    let mut by_user: HashMap<&K, Vec<usize>> = HashMap::new();
    for (i, (k, _)) in rows.iter().enumerate() {
        by_user.entry(k).or_default().push(i);
    }
    let mut out = vec![Split::Train; rows.len()];
    for idx in by_user.values_mut() {
        if idx.len() < MIN_SPLIT_INTERACTIONS {
            continue;
        }
        idx.sort_by_key(|&i| rows[i].1);
        let n = idx.len();
        out[idx[n - 1]] = Split::Test;
        out[idx[n - 2]] = Split::Val;
    }
    out
}
