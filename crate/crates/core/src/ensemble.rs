//! Time grids and the sharded trajectory runner.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{merge_tree, Mergeable};

/// Trajectories per shard. Fixed so that the merge tree, and with it every
/// output bit, is independent of the number of workers.
pub const CHUNK_SIZE: u64 = 4096;

/// Uniform grid `0, t_max/steps, ..., t_max` (inclusive, `steps + 1` points).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_max: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, steps: usize) -> Result<Self> {
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::InvalidParameter(format!("t_max must be > 0, got {t_max}")));
        }
        if steps < 1 {
            return Err(Error::InvalidParameter("steps must be >= 1".into()));
        }
        Ok(Self { t_max, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.steps)
            .map(|i| if i == self.steps { self.t_max } else { self.t_max * i as f64 / self.steps as f64 })
            .collect()
    }
}

pub(crate) fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("time grid is empty".into()));
    }
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter("grid times must be finite and >= 0".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("grid times must ascend".into()));
    }
    Ok(())
}

/// Runs `body(acc, trajectory_index)` for every trajectory in `0..n_traj`.
///
/// Trajectories are grouped into [`CHUNK_SIZE`] shards, each folded into a
/// fresh accumulator from `init` in index order, and the shards are then
/// combined by [`merge_tree`]. Shards run on the current rayon pool.
pub fn run_sharded<A, I, F>(n_traj: u64, init: I, body: F) -> Result<A>
where
    A: Mergeable + Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, u64) -> Result<()> + Sync,
{
    let n_chunks = n_traj.div_ceil(CHUNK_SIZE);
    let parts = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let start = c * CHUNK_SIZE;
            let end = (start + CHUNK_SIZE).min(n_traj);
            for traj in start..end {
                body(&mut acc, traj)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<A>>>()?;
    Ok(merge_tree(parts).unwrap_or_else(init))
}
