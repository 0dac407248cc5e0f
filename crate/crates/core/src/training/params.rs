use rand_distr::{Distribution, Normal};

use crate::graph::EntityCounts;
use crate::objective::GateMatrix;
use crate::propagation::Table;
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Everything the optimizer updates: three base embedding tables and the
/// `2d × 2d` gate.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub users: Table,
    pub videos: Table,
    pub vloggers: Table,
    pub gate: Table,
}

impl ModelParams {
    pub fn zeros(counts: EntityCounts, dim: usize) -> Self {
        ModelParams {
            users: Table::zeros((counts.users, dim)),
            videos: Table::zeros((counts.videos, dim)),
            vloggers: Table::zeros((counts.vloggers, dim)),
            gate: Table::zeros((2 * dim, 2 * dim)),
        }
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams::zeros(self.counts(), self.dim())
    }

    pub fn dim(&self) -> usize {
        self.users.ncols()
    }

    pub fn counts(&self) -> EntityCounts {
        EntityCounts {
            users: self.users.nrows(),
            videos: self.videos.nrows(),
            vloggers: self.vloggers.nrows(),
        }
    }

    pub fn gate_matrix(&self) -> Result<GateMatrix> {
        GateMatrix::new(self.gate.clone())
    }

    /// Tensors in a fixed order: users, videos, vloggers, gate.
    pub fn tensors(&self) -> [&Table; 4] {
        [&self.users, &self.videos, &self.vloggers, &self.gate]
    }

    pub fn tensors_mut(&mut self) -> [&mut Table; 4] {
        [
            &mut self.users,
            &mut self.videos,
            &mut self.vloggers,
            &mut self.gate,
        ]
    }

    pub fn n_values(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Checks shapes against the graph counts and `dim`, and finiteness.
    pub fn validate(&self, counts: EntityCounts, dim: usize) -> Result<()> {
        let shapes = [
            ("user table", self.users.dim(), (counts.users, dim)),
            ("video table", self.videos.dim(), (counts.videos, dim)),
            ("vlogger table", self.vloggers.dim(), (counts.vloggers, dim)),
            ("gate matrix", self.gate.dim(), (2 * dim, 2 * dim)),
        ];
        for (what, found, want) in shapes {
            if found != want {
                return Err(Error::Shape(format!(
                    "{what}: {found:?}, expected {want:?}"
                )));
            }
        }
        if self
            .tensors()
            .iter()
            .any(|t| t.iter().any(|v| !v.is_finite()))
        {
            return Err(Error::Numeric {
                term: "parameters".into(),
            });
        }
        Ok(())
    }
}

/// Draws every entry i.i.d. from `N(0, init_std²)` on the seed's init stream,
/// filling users, videos, vloggers and the gate in that order.
pub fn init_params(
    counts: EntityCounts,
    dim: usize,
    init_std: f64,
    seed: u64,
) -> Result<ModelParams> {
    if !(init_std >= 0.0) || !init_std.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "init_std {init_std} must be finite and >= 0"
        )));
    }
    let normal = Normal::new(0.0, init_std).expect("std checked");
    let mut rng = rng::stream(seed, Stream::Init);
    let mut params = ModelParams::zeros(counts, dim);
    for t in params.tensors_mut() {
        t.iter_mut().for_each(|x| *x = normal.sample(&mut rng));
    }
    Ok(params)
}
