//! Spin star fast path for the product-pair process.
//!
//! With `psi = |+>` and `chi = |j, m>` every jump flips the central spin and
//! moves `m` by one, and the rates stay constant along a trajectory. A
//! trajectory therefore reduces to a sector and two Poisson jump counts; the
//! estimator weight is a closed-form function of those.

use serde::{Deserialize, Serialize};

use crate::analytic::{
    closed_form_coherence, closed_form_population, gamma_raw, sector_distribution, v3_finite, BathSector,
    SpinStarParams,
};
use crate::ensemble::{check_grid, run_sharded};
use crate::error::{Error, Result};
use crate::numerics::{sample_exponential, sample_poisson, scaled_poisson_sum, Complex, DiscreteSampler, RngStream};
use crate::stats::{BlochCurve, EnsembleAccumulator};

/// Truncation of the deterministic Poisson averages.
pub const POISSON_TRUNCATION: u64 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservableKind {
    /// `rho_{++}`, from `chi_1 = chi_2 = |j, m>`.
    Population,
    /// The normalized coherence `v_-(t) / v_-(0)`; `psi_2 = |->`, so the
    /// second member jumps at `Gamma(j, -m)`.
    Coherence,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pdp1Trajectory {
    pub sector: BathSector,
    pub n1: u64,
    pub n2: u64,
}

/// Counts events of a fixed-rate process by drawing exponential waiting
/// times. Queries must come in nondecreasing time order.
#[derive(Debug, Clone)]
pub struct EventClock {
    rate: f64,
    next: f64,
    count: u64,
    last_query: f64,
    rng: RngStream,
}

impl EventClock {
    pub fn new(rate: f64, mut rng: RngStream) -> Result<Self> {
        let next = sample_exponential(rate, &mut rng)?.unwrap_or(f64::INFINITY);
        Ok(Self { rate, next, count: 0, last_query: 0.0, rng })
    }

    /// Number of events in `(0, t]`.
    pub fn count_at(&mut self, t: f64) -> Result<u64> {
        if t < self.last_query {
            return Err(Error::InvalidParameter(format!("clock queried at {t} after {}", self.last_query)));
        }
        self.last_query = t;
        while self.next <= t {
            self.count += 1;
            self.next += sample_exponential(self.rate, &mut self.rng)?.unwrap_or(f64::INFINITY);
        }
        Ok(self.count)
    }
}

/// Jump counts of the two members up to `t`, from explicit event loops on
/// substreams 1 and 2 of `rng`.
pub fn simulate_counts(rate1: f64, rate2: f64, t: f64, rng: &RngStream) -> Result<(u64, u64)> {
    let n1 = EventClock::new(rate1, rng.substream(1))?.count_at(t)?;
    let n2 = EventClock::new(rate2, rng.substream(2))?.count_at(t)?;
    Ok((n1, n2))
}

/// Same law as [`simulate_counts`], drawn directly from the Poisson distribution.
pub fn simulate_counts_direct(rate1: f64, rate2: f64, t: f64, rng: &RngStream) -> Result<(u64, u64)> {
    if !(rate1 >= 0.0) || !(rate2 >= 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidParameter("rates and time must be >= 0".into()));
    }
    let n1 = sample_poisson(rate1 * t, &mut rng.substream(1))?;
    let n2 = sample_poisson(rate2 * t, &mut rng.substream(2))?;
    Ok((n1, n2))
}

/// Draws bath sectors with probability `P(j, m)` and caches their rates.
#[derive(Debug, Clone)]
pub struct SectorSampler {
    sectors: Vec<BathSector>,
    probabilities: Vec<f64>,
    /// `(Gamma(j, m), Gamma(j, -m))`.
    rates: Vec<(f64, f64)>,
    sampler: DiscreteSampler,
}

impl SectorSampler {
    pub fn new(params: &SpinStarParams) -> Result<Self> {
        let dist = sector_distribution(params);
        let mut sectors = Vec::with_capacity(dist.len());
        let mut probabilities = Vec::with_capacity(dist.len());
        let mut rates = Vec::with_capacity(dist.len());
        for (s, p) in dist.entries {
            rates.push((gamma_raw(params, s.j2, s.m2)?, gamma_raw(params, s.j2, -s.m2)?));
            sectors.push(s);
            probabilities.push(p);
        }
        let sampler = DiscreteSampler::new(&probabilities)?;
        Ok(Self { sectors, probabilities, rates, sampler })
    }

    pub fn len(&self) -> usize {
        self.sectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sectors.is_empty()
    }

    pub fn sectors(&self) -> &[BathSector] {
        &self.sectors
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn sample(&self, rng: &mut RngStream) -> usize {
        self.sampler.sample(rng)
    }

    /// Jump rates of the two members in sector `i`.
    pub fn member_rates(&self, i: usize, kind: ObservableKind) -> [f64; 2] {
        let (g, gm) = self.rates[i];
        match kind {
            ObservableKind::Population => [g, g],
            ObservableKind::Coherence => [g, gm],
        }
    }
}

/// `(-1)^(n/2)` for even `n`, 0 for odd `n`: the factor `(-i)^n1 (+i)^n2`
/// together with the overlap of the jumped bath states, per member.
pub fn member_sign(n: u64) -> f64 {
    match n % 4 {
        0 => 1.0,
        2 => -1.0,
        _ => 0.0,
    }
}

fn signed_weight(n1: u64, n2: u64, log_magnitude: f64) -> f64 {
    let sign = member_sign(n1) * member_sign(n2);
    if sign == 0.0 {
        0.0
    } else {
        sign * log_magnitude.exp()
    }
}

/// Contribution of one trajectory to `rho_{++}(t)`:
/// `(-1)^((n1+n2)/2) e^{2 Gamma(j,m) t}` if both counts are even, else 0.
pub fn weight_population(traj: &Pdp1Trajectory, params: &SpinStarParams, t: f64) -> Result<f64> {
    traj.sector.validate(params.n_bath)?;
    let g = gamma_raw(params, traj.sector.j2, traj.sector.m2)?;
    Ok(signed_weight(traj.n1, traj.n2, 2.0 * g * t))
}

/// Contribution of one trajectory to `v_-(t) / v_-(0)`:
/// `(-1)^((n1+n2)/2) e^{(Gamma(j,m) + Gamma(j,-m)) t}` if both counts are even.
pub fn weight_coherence(traj: &Pdp1Trajectory, params: &SpinStarParams, t: f64) -> Result<f64> {
    traj.sector.validate(params.n_bath)?;
    let g = gamma_raw(params, traj.sector.j2, traj.sector.m2)?;
    let gm = gamma_raw(params, traj.sector.j2, -traj.sector.m2)?;
    Ok(signed_weight(traj.n1, traj.n2, (g + gm) * t))
}

pub fn weight(kind: ObservableKind, traj: &Pdp1Trajectory, params: &SpinStarParams, t: f64) -> Result<f64> {
    match kind {
        ObservableKind::Population => weight_population(traj, params, t),
        ObservableKind::Coherence => weight_coherence(traj, params, t),
    }
}

/// One trajectory observed on `times`: a sector drawn from `rng` and
/// cumulative counts from one event clock per member.
pub fn run_trajectory(
    sampler: &SectorSampler,
    kind: ObservableKind,
    times: &[f64],
    rng: &mut RngStream,
) -> Result<Vec<Pdp1Trajectory>> {
    let i = sampler.sample(rng);
    let sector = sampler.sectors[i];
    let [r1, r2] = sampler.member_rates(i, kind);
    let mut c1 = EventClock::new(r1, rng.substream(1))?;
    let mut c2 = EventClock::new(r2, rng.substream(2))?;
    times.iter().map(|&t| Ok(Pdp1Trajectory { sector, n1: c1.count_at(t)?, n2: c2.count_at(t)? })).collect()
}

/// Monte Carlo estimate of `rho_{++}` (population) or `v_-/v_-(0)`
/// (coherence) on `times`, with the closed form attached as reference.
pub fn estimate_curve(
    params: &SpinStarParams,
    kind: ObservableKind,
    n_traj: u64,
    times: &[f64],
    seed: u64,
) -> Result<BlochCurve> {
    if n_traj < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n_traj as usize });
    }
    check_grid(times)?;
    let sampler = SectorSampler::new(params)?;
    let acc = run_sharded(
        n_traj,
        || EnsembleAccumulator::new(times.len()),
        |acc, k| {
            let mut rng = RngStream::new(seed, k);
            let traj = run_trajectory(&sampler, kind, times, &mut rng)?;
            let sample = traj
                .iter()
                .zip(times)
                .map(|(tr, &t)| Ok(Complex::new(weight(kind, tr, params, t)?, 0.0)))
                .collect::<Result<Vec<_>>>()?;
            if sample.iter().any(|w| !w.re.is_finite()) {
                return Err(Error::NonFinite("pdp1 weight"));
            }
            acc.update(&sample);
            Ok(())
        },
    )?;
    let est = acc.finalize()?;
    let exact = times
        .iter()
        .map(|&t| {
            Complex::new(
                match kind {
                    ObservableKind::Population => closed_form_population(params, t),
                    ObservableKind::Coherence => closed_form_coherence(params, t),
                },
                0.0,
            )
        })
        .collect();
    BlochCurve::new(times.to_vec(), est.mean.clone(), est.stderr(), Some(exact))
}

/// `v3 = 2 rho_{++} - 1` for `v3(0) = 1`, against [`v3_finite`].
pub fn estimate_v3_curve(params: &SpinStarParams, n_traj: u64, times: &[f64], seed: u64) -> Result<BlochCurve> {
    let mut curve = estimate_curve(params, ObservableKind::Population, n_traj, times, seed)?.affine(2.0, -1.0);
    curve.exact = Some(times.iter().map(|&t| Complex::new(v3_finite(params, t, 1.0), 0.0)).collect());
    Ok(curve)
}

/// Mean of the weight over the Poisson law of `(n1, n2)` in one sector,
/// truncated at `n <= n_max`. The law factorizes over the members, and so
/// does the weight.
pub fn poisson_average_weight(
    params: &SpinStarParams,
    kind: ObservableKind,
    sector: BathSector,
    t: f64,
    n_max: u64,
) -> Result<f64> {
    sector.validate(params.n_bath)?;
    let g = gamma_raw(params, sector.j2, sector.m2)?;
    let rates = match kind {
        ObservableKind::Population => [g, g],
        ObservableKind::Coherence => [g, gamma_raw(params, sector.j2, -sector.m2)?],
    };
    // E[sign(n) e^{Gamma t}] with n ~ Pois(Gamma t) is sum sign(n) (Gamma t)^n / n!.
    Ok(rates.iter().map(|r| scaled_poisson_sum(r * t, n_max, member_sign)).product())
}

/// `E |R(t) - rho(t)|^2_HS` for the population process, from
/// `|R|^2_HS = |chi_1|^2 |chi_2|^2 = e^{4 Gamma(j,m) t}` and
/// `tr rho(t)^2 = tr rho(0)^2 = 2^-N`.
pub fn fluctuation_curve(params: &SpinStarParams, n_traj: u64, times: &[f64], seed: u64) -> Result<Vec<f64>> {
    if n_traj < 1 {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    check_grid(times)?;
    let sampler = SectorSampler::new(params)?;
    let acc = run_sharded(
        n_traj,
        || EnsembleAccumulator::new(times.len()),
        |acc, k| {
            let mut rng = RngStream::new(seed, k);
            let i = sampler.sample(&mut rng);
            let g = sampler.rates[i].0;
            let sample: Vec<Complex> = times.iter().map(|&t| Complex::new((4.0 * g * t).exp(), 0.0)).collect();
            acc.update(&sample);
            Ok(())
        },
    )?;
    let purity = (-f64::from(params.n_bath) * std::f64::consts::LN_2).exp();
    Ok(acc.summary()?.mean.iter().map(|m| m.re - purity).collect())
}
