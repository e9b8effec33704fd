//! Streaming ensemble statistics.
//!
//! Accumulators use Welford updates and the Chan et al. pairwise merge.
//! Ensembles are cut into fixed-size chunks that are merged along a fixed
//! binary tree (see [`merge_tree`]), so results are bit-identical for any
//! number of worker threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{CMatrix, Complex};

/// Anything that can absorb another partial result of the same shape.
pub trait Mergeable {
    fn merge(&mut self, other: Self);
}

/// Mean and spread of a fixed-length complex sample vector (a scalar, or the
/// flattened entries of a matrix). Real and imaginary parts are tracked
/// separately.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleAccumulator {
    count: u64,
    mean: Vec<Complex>,
    /// Sum of squared deviations; `.re` for the real parts, `.im` for the imaginary parts.
    m2: Vec<Complex>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub count: u64,
    pub mean: Vec<Complex>,
    pub stderr_re: Vec<f64>,
    pub stderr_im: Vec<f64>,
}

impl Estimate {
    /// Per-entry standard error, the larger of the real and imaginary parts.
    pub fn stderr(&self) -> Vec<f64> {
        self.stderr_re.iter().zip(&self.stderr_im).map(|(a, b)| a.max(*b)).collect()
    }
}

impl EnsembleAccumulator {
    pub fn new(len: usize) -> Self {
        Self { count: 0, mean: vec![Complex::new(0.0, 0.0); len], m2: vec![Complex::new(0.0, 0.0); len] }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn update(&mut self, sample: &[Complex]) {
        assert_eq!(sample.len(), self.mean.len(), "sample length");
        self.count += 1;
        let n = self.count as f64;
        for ((mean, m2), x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(sample) {
            let d1 = x - *mean;
            *mean += d1 / n;
            let d2 = x - *mean;
            m2.re += d1.re * d2.re;
            m2.im += d1.im * d2.im;
        }
    }

    pub fn update_scalar(&mut self, x: Complex) {
        self.update(std::slice::from_ref(&x));
    }

    pub fn update_real(&mut self, x: f64) {
        self.update_scalar(Complex::new(x, 0.0));
    }

    pub fn update_matrix(&mut self, m: &CMatrix) {
        self.update(m.as_slice());
    }

    /// Like [`finalize`](Self::finalize) but accepts a single sample, whose
    /// standard error is reported as infinite.
    pub fn summary(&self) -> Result<Estimate> {
        match self.count {
            0 => Err(Error::TooFewSamples { needed: 1, got: 0 }),
            1 => Ok(Estimate {
                count: 1,
                mean: self.mean.clone(),
                stderr_re: vec![f64::INFINITY; self.len()],
                stderr_im: vec![f64::INFINITY; self.len()],
            }),
            _ => self.finalize(),
        }
    }

    pub fn finalize(&self) -> Result<Estimate> {
        if self.count < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: self.count as usize });
        }
        let n = self.count as f64;
        let denom = n * (n - 1.0);
        Ok(Estimate {
            count: self.count,
            mean: self.mean.clone(),
            stderr_re: self.m2.iter().map(|m| (m.re.max(0.0) / denom).sqrt()).collect(),
            stderr_im: self.m2.iter().map(|m| (m.im.max(0.0) / denom).sqrt()).collect(),
        })
    }
}

impl Mergeable for EnsembleAccumulator {
    fn merge(&mut self, other: Self) {
        assert_eq!(self.len(), other.len(), "merging accumulators of different shape");
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = other;
            return;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        for i in 0..self.mean.len() {
            let delta = other.mean[i] - self.mean[i];
            self.mean[i] += delta * (nb / n);
            self.m2[i].re += other.m2[i].re + delta.re * delta.re * na * nb / n;
            self.m2[i].im += other.m2[i].im + delta.im * delta.im * na * nb / n;
        }
        self.count += other.count;
    }
}

impl<A: Mergeable> Mergeable for Vec<A> {
    fn merge(&mut self, other: Self) {
        assert_eq!(self.len(), other.len());
        for (a, b) in self.iter_mut().zip(other) {
            a.merge(b);
        }
    }
}

/// Merges partial results pairwise, `(0,1), (2,3), ...`, level by level.
/// The tree shape depends only on the number of parts.
pub fn merge_tree<A: Mergeable>(mut parts: Vec<A>) -> Option<A> {
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.merge(b);
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop()
}

/// One observable on a time grid, with optional exact reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlochCurve {
    pub times: Vec<f64>,
    pub estimate: Vec<Complex>,
    pub stderr: Vec<f64>,
    pub exact: Option<Vec<Complex>>,
}

impl BlochCurve {
    pub fn new(times: Vec<f64>, estimate: Vec<Complex>, stderr: Vec<f64>, exact: Option<Vec<Complex>>) -> Result<Self> {
        let n = times.len();
        if estimate.len() != n || stderr.len() != n || exact.as_ref().is_some_and(|e| e.len() != n) {
            return Err(Error::DimensionMismatch("curve columns differ in length".into()));
        }
        if stderr.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidParameter("negative or NaN standard error".into()));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("curve times must ascend".into()));
        }
        Ok(Self { times, estimate, stderr, exact })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The curve of `scale * x + offset`; standard errors scale by `|scale|`.
    pub fn affine(&self, scale: f64, offset: f64) -> Self {
        let map = |v: &Complex| v * scale + offset;
        Self {
            times: self.times.clone(),
            estimate: self.estimate.iter().map(map).collect(),
            stderr: self.stderr.iter().map(|s| s * scale.abs()).collect(),
            exact: self.exact.as_ref().map(|e| e.iter().map(map).collect()),
        }
    }

    /// `|estimate - exact|` per point.
    pub fn abs_errors(&self) -> Option<Vec<f64>> {
        let exact = self.exact.as_ref()?;
        Some(self.estimate.iter().zip(exact).map(|(e, x)| (e - x).norm()).collect())
    }

    /// `|estimate - exact| / stderr` per point. Zero when both the error and
    /// the standard error vanish, infinite when only the standard error does.
    pub fn sigma_distances(&self) -> Option<Vec<f64>> {
        let errs = self.abs_errors()?;
        Some(errs.iter().zip(&self.stderr).map(|(&e, &s)| sigma_distance(e, s)).collect())
    }

    /// Fraction of points within `k` standard errors of the reference.
    pub fn fraction_within(&self, k: f64) -> Option<f64> {
        let d = self.sigma_distances()?;
        if d.is_empty() {
            return None;
        }
        Some(d.iter().filter(|&&x| x <= k).count() as f64 / d.len() as f64)
    }
}

/// Absolute tolerance below which an error counts as exactly zero.
pub const EXACT_ZERO_TOL: f64 = 1e-12;

pub fn sigma_distance(abs_error: f64, stderr: f64) -> f64 {
    if abs_error <= EXACT_ZERO_TOL {
        0.0
    } else if stderr == 0.0 {
        f64::INFINITY
    } else {
        abs_error / stderr
    }
}

/// Hilbert-Schmidt distance `sqrt(tr[(r - rho)^dagger (r - rho)])`.
pub fn hs_distance(r: &CMatrix, rho: &CMatrix) -> Result<f64> {
    Ok(r.sub(rho)?.frobenius_sqr().sqrt())
}

/// Mean squared Hilbert-Schmidt distance between sampled operators and the
/// exact mean, per grid time. `snapshots[trajectory][time]`.
pub fn fluctuation_curve(snapshots: &[Vec<CMatrix>], reference: &[CMatrix]) -> Result<Vec<f64>> {
    if snapshots.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut acc = vec![0.0; reference.len()];
    for traj in snapshots {
        if traj.len() != reference.len() {
            return Err(Error::DimensionMismatch("snapshot count differs from reference grid".into()));
        }
        for ((a, r), rho) in acc.iter_mut().zip(traj).zip(reference) {
            *a += hs_distance(r, rho)?.powi(2);
        }
    }
    let n = snapshots.len() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

/// Least-squares slope of `ln(values)` against `times`.
pub fn log_slope(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::DimensionMismatch("log_slope needs >= 2 matching points".into()));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::InvalidParameter("log_slope needs positive values".into()));
    }
    let n = times.len() as f64;
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let tm = times.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let sxy: f64 = times.iter().zip(&ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    let sxx: f64 = times.iter().map(|t| (t - tm) * (t - tm)).sum();
    Ok(sxy / sxx)
}
