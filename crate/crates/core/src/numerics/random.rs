//! Reproducible random streams and the samplers the jump processes need.
//!
//! A stream is a ChaCha8 keystream: the 256-bit key is expanded from
//! `(seed, lane)` and the 64-bit ChaCha stream id is the trajectory index.
//! Output therefore depends only on `(seed, stream_id, lane)`, never on which
//! worker runs the trajectory.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    lane: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self::with_lane(seed, stream_id, 0)
    }

    fn with_lane(seed: u64, stream_id: u64, lane: u64) -> Self {
        let mut state = seed ^ lane.wrapping_mul(0xd6e8_feb8_6659_fd93);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream_id);
        Self { seed, stream_id, lane, rng }
    }

    /// An independent stream for the same trajectory, e.g. one per `nu`.
    pub fn substream(&self, lane: u64) -> Self {
        Self::with_lane(self.seed, self.stream_id, lane.wrapping_add(1).wrapping_add(self.lane << 8))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Position in the keystream, in 32-bit words.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Exponential waiting time with the given rate; `None` means the event never
/// happens (rate zero).
pub fn sample_exponential(rate: f64, rng: &mut RngStream) -> Result<Option<f64>> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(Error::InvalidParameter(format!("rate must be finite and >= 0, got {rate}")));
    }
    if rate == 0.0 {
        return Ok(None);
    }
    // 1 - U lies in (0, 1], so the log is finite.
    let u = 1.0 - rng.uniform();
    Ok(Some(-u.ln() / rate))
}

fn check_weights(weights: &[f64]) -> Result<f64> {
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidWeights(format!("weight {w} is not a finite nonnegative number")));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidWeights("no strictly positive weight".into()));
    }
    Ok(total)
}

/// Index `i` with probability `weights[i] / sum(weights)`.
pub fn sample_discrete(weights: &[f64], rng: &mut RngStream) -> Result<usize> {
    let total = check_weights(weights)?;
    let target = rng.uniform() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if target < acc {
                return Ok(i);
            }
        }
    }
    // rounding left target >= acc
    Ok(last_positive)
}

/// Cumulative-table sampler for repeated draws from one large distribution.
#[derive(Debug, Clone)]
pub struct DiscreteSampler {
    cumulative: Vec<f64>,
}

impl DiscreteSampler {
    pub fn new(weights: &[f64]) -> Result<Self> {
        let total = check_weights(weights)?;
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Ok(Self { cumulative })
    }

    pub fn sample(&self, rng: &mut RngStream) -> usize {
        let u = rng.uniform() * self.cumulative[self.cumulative.len() - 1];
        let idx = self.cumulative.partition_point(|&c| c <= u);
        idx.min(self.cumulative.len() - 1)
    }
}

/// Direct Poisson draw, kept as an independent check on event-loop counting.
pub fn sample_poisson(mean: f64, rng: &mut RngStream) -> Result<u64> {
    if mean == 0.0 {
        return Ok(0);
    }
    let dist = Poisson::new(mean).map_err(|e| Error::InvalidParameter(format!("poisson mean {mean}: {e}")))?;
    Ok(dist.sample(rng) as u64)
}
