//! Closed-form solution of the spin star model.
//!
//! The central spin couples to the collective bath spin through
//! `H = (2A/sqrt(N)) (sigma_+ J_- + sigma_- J_+)` and the bath starts
//! unpolarized, `rho_E(0) = 2^-N I`. The bath then decomposes into sectors
//! `|j, m>` (eigenstates of `J^2` and `J_3`); inside each sector the pair
//! `|+>|j,m>`, `|->|j,m+1>` is an invariant two-level system oscillating at
//! `Gamma(j, m)`.
//!
//! Half-integer quantum numbers are stored doubled (`j2 = 2j`, `m2 = 2m`)
//! so that odd `N` needs no floating-point sector arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{erfi, log_binomial, Complex, ERFI_SUPPORT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinStarParams {
    /// Number of bath spins `N`.
    pub n_bath: u32,
    /// Coupling strength `A` (inverse time).
    pub coupling: f64,
}

impl SpinStarParams {
    pub fn new(n_bath: u32, coupling: f64) -> Result<Self> {
        if n_bath == 0 {
            return Err(Error::InvalidParameter("n_bath must be >= 1".into()));
        }
        if !(coupling > 0.0) || !coupling.is_finite() {
            return Err(Error::InvalidParameter(format!("coupling must be > 0, got {coupling}")));
        }
        Ok(Self { n_bath, coupling })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BathSector {
    /// `2j`
    pub j2: u32,
    /// `2m`
    pub m2: i32,
}

impl BathSector {
    pub fn new(j2: u32, m2: i32) -> Self {
        Self { j2, m2 }
    }

    pub fn j(&self) -> f64 {
        f64::from(self.j2) / 2.0
    }

    pub fn m(&self) -> f64 {
        f64::from(self.m2) / 2.0
    }

    /// The sector with `m -> -m`.
    pub fn mirrored(&self) -> Self {
        Self { j2: self.j2, m2: -self.m2 }
    }

    pub fn is_valid_for(&self, n_bath: u32) -> bool {
        self.j2 <= n_bath
            && self.m2.unsigned_abs() <= self.j2
            && (n_bath - self.j2) % 2 == 0
            && (i64::from(self.j2) - i64::from(self.m2)) % 2 == 0
    }

    pub fn validate(&self, n_bath: u32) -> Result<()> {
        if self.is_valid_for(n_bath) {
            Ok(())
        } else {
            Err(Error::InvalidSector { j2: self.j2.into(), m2: self.m2.into(), n_bath })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorDistribution {
    pub entries: Vec<(BathSector, f64)>,
}

impl SectorDistribution {
    pub fn probabilities(&self) -> Vec<f64> {
        self.entries.iter().map(|(_, p)| *p).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

impl BlochVector {
    /// `v_- = (v1 - i v2)/2`, which equals `rho_{+-}`.
    pub fn v_minus(&self) -> Complex {
        Complex::new(self.v1, -self.v2) * 0.5
    }

    pub fn length_sqr(&self) -> f64 {
        self.v1 * self.v1 + self.v2 * self.v2 + self.v3 * self.v3
    }
}

/// Probability of sector `(j, m)` in the unpolarized bath; independent of `m`.
///
/// `2^-N [C(N, N/2+j) - C(N, N/2+j+1)]`, rewritten as
/// `2^-N C(N, N/2+j) (2j+1)/(N/2+j+1)` so that no difference of large
/// binomials is ever formed.
pub fn prob_jm(params: &SpinStarParams, sector: BathSector) -> Result<f64> {
    sector.validate(params.n_bath)?;
    Ok(prob_j(params.n_bath, sector.j2))
}

fn prob_j(n_bath: u32, j2: u32) -> f64 {
    let n = u64::from(n_bath);
    let upper = (n + u64::from(j2)) / 2; // N/2 + j
    let log_p = log_binomial(n, upper as i64) + f64::from(j2 + 1).ln()
        - ((upper + 1) as f64).ln()
        - n as f64 * std::f64::consts::LN_2;
    log_p.exp()
}

/// All sectors, descending `j` then ascending `m`.
pub fn sector_distribution(params: &SpinStarParams) -> SectorDistribution {
    let n = params.n_bath;
    let mut entries = Vec::new();
    let mut j2 = n as i64;
    while j2 >= 0 {
        let p = prob_j(n, j2 as u32);
        let mut m2 = -j2;
        while m2 <= j2 {
            entries.push((BathSector::new(j2 as u32, m2 as i32), p));
            m2 += 2;
        }
        j2 -= 2;
    }
    SectorDistribution { entries }
}

/// `Gamma(j, m) = 2A sqrt((j(j+1) - m(m+1))/N)`, also valid for the boundary
/// label `m = -j-1` where it vanishes.
pub fn gamma_raw(params: &SpinStarParams, j2: u32, m2: i32) -> Result<f64> {
    let j2i = i64::from(j2);
    let m2i = i64::from(m2);
    let numerator = j2i * (j2i + 2) - m2i * (m2i + 2);
    if numerator < 0 {
        return Err(Error::InvalidSector { j2: j2i, m2: m2i, n_bath: params.n_bath });
    }
    let n = f64::from(params.n_bath);
    Ok(2.0 * params.coupling * (numerator as f64 / (4.0 * n)).sqrt())
}

pub fn gamma_jm(params: &SpinStarParams, sector: BathSector) -> Result<f64> {
    sector.validate(params.n_bath)?;
    gamma_raw(params, sector.j2, sector.m2)
}

/// `sum_{j,m} P(j,m) f(Gamma(j,m), Gamma(j,-m))` without materializing the
/// sector list; sectors of equal `j` share `P`.
fn sector_sum(params: &SpinStarParams, f: impl Fn(f64, f64) -> f64) -> f64 {
    let n = params.n_bath;
    let mut total = 0.0;
    let mut j2 = n as i64;
    while j2 >= 0 {
        let p = prob_j(n, j2 as u32);
        let mut inner = 0.0;
        let mut m2 = -j2;
        while m2 <= j2 {
            let g = gamma_raw(params, j2 as u32, m2 as i32).expect("valid sector");
            let gm = gamma_raw(params, j2 as u32, -m2 as i32).expect("valid sector");
            inner += f(g, gm);
            m2 += 2;
        }
        total += p * inner;
        j2 -= 2;
    }
    total
}

/// `v3(t) = v3(0) sum P(j,m) cos(2 Gamma(j,m) t)`.
pub fn v3_finite(params: &SpinStarParams, t: f64, v3_0: f64) -> f64 {
    v3_0 * sector_sum(params, |g, _| (2.0 * g * t).cos())
}

/// `v_pm(t) = v_pm(0) sum P(j,m) cos(Gamma(j,m) t) cos(Gamma(j,-m) t)`.
pub fn vpm_finite(params: &SpinStarParams, t: f64, vpm_0: Complex) -> Complex {
    vpm_0 * closed_form_coherence(params, t)
}

/// Expected value of the population estimator: `sum P(j,m) cos^2(Gamma(j,m) t)`.
pub fn closed_form_population(params: &SpinStarParams, t: f64) -> f64 {
    sector_sum(params, |g, _| {
        let c = (g * t).cos();
        c * c
    })
}

/// Expected value of the coherence estimator:
/// `sum P(j,m) cos(Gamma(j,m) t) cos(Gamma(j,-m) t)`.
pub fn closed_form_coherence(params: &SpinStarParams, t: f64) -> f64 {
    sector_sum(params, |g, gm| (g * t).cos() * (gm * t).cos())
}

/// `g(x) = -(sqrt(pi)/2) x e^{-x^2} erfi(x)`, the infinite-bath relaxation function.
pub fn g_inf(x: f64) -> Result<f64> {
    let e = erfi(x)?;
    Ok(-0.5 * std::f64::consts::PI.sqrt() * x * (-x * x).exp() * e)
}

/// `g(x)` from its power series `sum_{k>=1} (-1)^k k! (2x)^{2k} / (2 (2k)!)`.
///
/// Alternating with terms peaking near `k ~ 2x^2`; partial sums are
/// compensated (Neumaier) to contain the cancellation.
pub fn g_inf_series(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > ERFI_SUPPORT {
        return Err(Error::OutOfSupport { x, limit: ERFI_SUPPORT });
    }
    let y = 4.0 * x * x; // (2x)^2
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    // term_k = (-1)^k k! y^k / (2 (2k)!); term_1 = -y/4
    let mut term = -y / 4.0;
    let mut peak = term.abs();
    for k in 1..5000u32 {
        let t = sum + term;
        comp += if sum.abs() >= term.abs() { (sum - t) + term } else { (term - t) + sum };
        sum = t;
        peak = peak.max(term.abs());
        let kf = f64::from(k);
        // term_{k+1}/term_k = -(k+1) y / ((2k+1)(2k+2)) = -y / (2(2k+1))
        term *= -y / (2.0 * (2.0 * kf + 1.0));
        if term.abs() < 1e-18 * peak.max(1.0) && kf > y {
            break;
        }
    }
    Ok(sum + comp)
}

fn x_of(coupling: f64, t: f64) -> f64 {
    std::f64::consts::SQRT_2 * coupling * t
}

/// `v3(t) = v3(0) (1 + 2 g(x))`, `x = sqrt(2) A t`, for an infinite bath.
pub fn v3_inf(coupling: f64, t: f64, v3_0: f64) -> Result<f64> {
    Ok(v3_0 * (1.0 + 2.0 * g_inf(x_of(coupling, t))?))
}

/// `v_pm(t) = v_pm(0) (1 + g(x))` for an infinite bath.
pub fn vpm_inf(coupling: f64, t: f64, vpm_0: Complex) -> Result<Complex> {
    Ok(vpm_0 * (1.0 + g_inf(x_of(coupling, t))?))
}
