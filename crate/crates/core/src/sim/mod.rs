//! Exact finite-dimensional sampling of Gaussian processes on grids.

mod factor;
mod grid;
mod model;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use factor::JITTER;
pub use grid::Grid;
pub use model::CorrelationModel;

use crate::error::{ensure, Result};
use crate::rng::{map_chunks, substream};
use factor::Factor;

/// Draws independent centered paths of one model on one grid.
#[derive(Debug, Clone)]
pub struct PathSampler {
    grid: Grid,
    factor: Factor,
}

impl PathSampler {
    pub fn new(model: &CorrelationModel, grid: &Grid) -> Result<Self> {
        let factor = Factor::build(model, grid)?;
        Ok(Self {
            grid: grid.clone(),
            factor,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.factor.dim()
    }

    /// Writes one path into `out`, which must have [`dim`](Self::dim) entries.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        assert_eq!(out.len(), self.dim(), "output buffer length");
        self.factor.fill(rng, out);
    }

    /// Fresh path as a vector.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.factor.fill(rng, &mut out);
        out
    }
}

/// `n` replications of a path on a common grid, stored row by row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathBatch {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub n: usize,
    pub seed: u64,
}

impl PathBatch {
    pub fn row(&self, r: usize) -> &[f64] {
        let m = self.grid.len();
        &self.values[r * m..(r + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.grid.len())
    }
}

/// `n` independent paths; replication `r` draws from `substream(seed, r)`.
pub fn sample_paths(
    model: &CorrelationModel,
    grid: &Grid,
    n: usize,
    seed: u64,
) -> Result<PathBatch> {
    let sampler = PathSampler::new(model, grid)?;
    let m = grid.len();
    let parts = map_chunks(n as u64, |range| {
        let mut block = vec![0.0; (range.end - range.start) as usize * m];
        for (r, out) in range.zip(block.chunks_exact_mut(m)) {
            sampler.fill(&mut substream(seed, r), out);
        }
        block
    });
    Ok(PathBatch {
        grid: grid.clone(),
        values: parts.concat(),
        n,
        seed,
    })
}

/// Per-replication maximum of path plus trend over the grid.
pub fn drifted_sup(batch: &PathBatch, trend: &[f64]) -> Result<Vec<f64>> {
    batch.grid.require_same_len(trend.len(), "trend")?;
    ensure!(
        trend.iter().all(|g| !g.is_nan()),
        "trend values must not be NaN"
    );
    Ok(batch.rows().map(|row| sup_with_trend(row, trend)).collect())
}

pub(crate) fn sup_with_trend(path: &[f64], trend: &[f64]) -> f64 {
    path.iter()
        .zip(trend)
        .map(|(x, g)| x + g)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// `max_k v[k·stride]` for NaN-free `v`, with independent accumulators so
/// the comparisons pipeline.
pub(crate) fn strided_max(v: &[f64], stride: usize) -> f64 {
    let n = v.len().div_ceil(stride);
    let mut acc = [f64::NEG_INFINITY; 4];
    let mut k = 0;
    while k + 4 <= n {
        for (j, a) in acc.iter_mut().enumerate() {
            let x = v[(k + j) * stride];
            if x > *a {
                *a = x;
            }
        }
        k += 4;
    }
    while k < n {
        let x = v[k * stride];
        if x > acc[0] {
            acc[0] = x;
        }
        k += 1;
    }
    acc.into_iter().fold(f64::NEG_INFINITY, f64::max)
}
