//! Binary checkpoints.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic      8 bytes  b"VLRCKPT\0"
//! version    u32
//! dim        u64
//! users      u64
//! videos     u64
//! vloggers   u64
//! adam step  u64
//! epoch      u64
//! best recall@K on validation   f64 (NaN when never evaluated)
//! epochs since improvement      u64
//! walk round u64      which walk sample the parameters were trained on
//! tensors    f64 rows: params, first moments, second moments;
//!            each as users, videos, vloggers, gate (2d × 2d)
//! ```

use std::path::Path;

use super::{AdamState, ModelParams, TrainState};
use crate::graph::EntityCounts;
use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"VLRCKPT\0";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 9 * 8;

pub fn encode(state: &TrainState) -> Vec<u8> {
    let p = &state.params;
    let c = p.counts();
    let mut out = Vec::with_capacity(HEADER_LEN + 24 * p.n_values());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for x in [p.dim(), c.users, c.videos, c.vloggers] {
        out.extend_from_slice(&(x as u64).to_le_bytes());
    }
    out.extend_from_slice(&state.adam.step.to_le_bytes());
    out.extend_from_slice(&(state.epoch as u64).to_le_bytes());
    out.extend_from_slice(&state.best_recall.unwrap_or(f64::NAN).to_le_bytes());
    out.extend_from_slice(&(state.since_improve as u64).to_le_bytes());
    out.extend_from_slice(&state.walk_round.to_le_bytes());
    for set in [p, &state.adam.m, &state.adam.v] {
        for t in set.tensors() {
            for x in t.iter() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    out
}

/// Decodes a checkpoint; with `expected` set, the stored shapes must match
/// those counts and dimension.
pub fn decode(bytes: &[u8], expected: Option<(EntityCounts, usize)>) -> Result<TrainState> {
    let corrupt = |m: &str| Error::CorruptCheckpoint(m.to_string());
    if bytes.len() < HEADER_LEN {
        return Err(corrupt("truncated header"));
    }
    if &bytes[..8] != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != VERSION {
        return Err(corrupt(&format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let word = |i: usize| {
        let at = 12 + 8 * i;
        u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
    };
    let dim = word(0) as usize;
    let counts = EntityCounts {
        users: word(1) as usize,
        videos: word(2) as usize,
        vloggers: word(3) as usize,
    };
    let step = word(4);
    let epoch = word(5) as usize;
    let best = f64::from_bits(word(6));
    let since_improve = word(7) as usize;
    let walk_round = word(8);

    if let Some((want_counts, want_dim)) = expected {
        if dim != want_dim {
            return Err(Error::CheckpointShape {
                what: "embedding dimension",
                found: dim,
                expected: want_dim,
            });
        }
        for (what, found, want) in [
            ("user count", counts.users, want_counts.users),
            ("video count", counts.videos, want_counts.videos),
            ("vlogger count", counts.vloggers, want_counts.vloggers),
        ] {
            if found != want {
                return Err(Error::CheckpointShape {
                    what,
                    found,
                    expected: want,
                });
            }
        }
    }

    let per_set = (counts.users + counts.videos + counts.vloggers) * dim + 4 * dim * dim;
    let need = per_set
        .checked_mul(24)
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| corrupt("implausible shape"))?;
    if bytes.len() != need {
        return Err(corrupt(&format!(
            "expected {need} bytes, found {}",
            bytes.len()
        )));
    }
    let mut values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut read_set = || {
        let mut p = ModelParams::zeros(counts, dim);
        for t in p.tensors_mut() {
            t.iter_mut()
                .for_each(|x| *x = values.next().expect("length checked"));
        }
        p
    };
    let params = read_set();
    let m = read_set();
    let v = read_set();
    Ok(TrainState {
        params,
        adam: AdamState { step, m, v },
        epoch,
        best_recall: (!best.is_nan()).then_some(best),
        since_improve,
        walk_round,
    })
}

pub fn save_checkpoint(state: &TrainState, path: &Path) -> Result<()> {
    crate::graph::io::write_file(path, &encode(state))
}

pub fn load_checkpoint(path: &Path, expected: Option<(EntityCounts, usize)>) -> Result<TrainState> {
    decode(
        &std::fs::read(path).map_err(|e| Error::io(path, e))?,
        expected,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::init_params;

    fn state() -> TrainState {
        let counts = EntityCounts {
            users: 3,
            videos: 4,
            vloggers: 2,
        };
        let mut s = TrainState::new(init_params(counts, 4, 0.1, 1).unwrap());
        s.adam.m = init_params(counts, 4, 0.2, 2).unwrap();
        s.adam.v = init_params(counts, 4, 0.3, 3).unwrap();
        s.adam.step = 17;
        s.epoch = 3;
        s.best_recall = Some(0.25);
        s.since_improve = 1;
        s.walk_round = 2;
        s
    }

    #[test]
    fn round_trip() {
        let s = state();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.bin");
        save_checkpoint(&s, &path).unwrap();
        let back = load_checkpoint(&path, Some((s.params.counts(), 4))).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn truncated_is_corrupt() {
        let bytes = encode(&state());
        assert!(matches!(
            decode(&bytes[..bytes.len() - 3], None),
            Err(Error::CorruptCheckpoint(_))
        ));
        assert!(matches!(
            decode(&bytes[..10], None),
            Err(Error::CorruptCheckpoint(_))
        ));
    }

    #[test]
    fn version_mismatch() {
        let mut bytes = encode(&state());
        bytes[8] = 9;
        let err = decode(&bytes, None).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");
    }

    #[test]
    fn dimension_mismatch_names_both() {
        let bytes = encode(&state());
        let err = decode(&bytes, Some((state().params.counts(), 32))).unwrap_err();
        assert!(matches!(
            err,
            Error::CheckpointShape {
                found: 4,
                expected: 32,
                ..
            }
        ));
        let msg = err.to_string();
        assert!(msg.contains('4') && msg.contains("32"), "{msg}");
    }
}
