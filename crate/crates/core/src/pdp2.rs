//! Infinite-bath spin star with the operator process.
//!
//! Both members jump at the constant rate `sqrt(2) A` and always flip the
//! central spin. In the `N -> infinity` limit the bath trace of a balanced
//! product of `k` raising and `k` lowering operators is `k! (N/2)^k`, so a
//! trajectory contributes `(-1)^k k! e^{2 sqrt(2) A t}` when both counts are
//! even (`k = (n1 + n2) / 2`) and nothing otherwise.

use serde::{Deserialize, Serialize};

use crate::analytic::{v3_inf, vpm_inf};
use crate::ensemble::{check_grid, run_sharded};
use crate::error::{Error, Result};
use crate::numerics::{ln_factorial, Complex, RngStream, ERFI_SUPPORT};
use crate::pdp1::EventClock;
use crate::stats::{BlochCurve, EnsembleAccumulator};

/// Truncation of the deterministic double Poisson sum.
pub const POISSON_TRUNCATION: u64 = 40;

/// Signed weight in log form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pdp2Weight {
    pub log_magnitude: f64,
    pub sign: f64,
    /// Set iff a count is odd; the weight is then exactly 0.
    pub zero: bool,
}

impl Pdp2Weight {
    pub fn value(&self) -> f64 {
        if self.zero {
            0.0
        } else {
            self.sign * self.log_magnitude.exp()
        }
    }
}

/// `sqrt(2) A`, the jump rate of each member.
pub fn member_rate(coupling: f64) -> f64 {
    std::f64::consts::SQRT_2 * coupling
}

pub fn weight_infinite(n1: u64, n2: u64, coupling: f64, t: f64) -> Pdp2Weight {
    if n1 % 2 == 1 || n2 % 2 == 1 {
        return Pdp2Weight { log_magnitude: f64::NEG_INFINITY, sign: 1.0, zero: true };
    }
    let k = (n1 + n2) / 2;
    Pdp2Weight {
        log_magnitude: ln_factorial(k) + 2.0 * member_rate(coupling) * t,
        sign: if k % 2 == 0 { 1.0 } else { -1.0 },
        zero: false,
    }
}

fn check_support(coupling: f64, times: &[f64]) -> Result<()> {
    if !(coupling > 0.0) || !coupling.is_finite() {
        return Err(Error::InvalidParameter(format!("coupling must be > 0, got {coupling}")));
    }
    for &t in times {
        let x = member_rate(coupling) * t;
        if x > ERFI_SUPPORT {
            return Err(Error::OutOfSupport { x, limit: ERFI_SUPPORT });
        }
    }
    Ok(())
}

/// `rho_{++}` estimate; equals `v_pm / v_pm(0)` in this limit. Reference `1 + g`.
pub fn estimate_vpm_inf_mc(coupling: f64, n_traj: u64, times: &[f64], seed: u64) -> Result<BlochCurve> {
    if n_traj < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n_traj as usize });
    }
    check_grid(times)?;
    check_support(coupling, times)?;
    let rate = member_rate(coupling);
    let acc = run_sharded(
        n_traj,
        || EnsembleAccumulator::new(times.len()),
        |acc, k| {
            let rng = RngStream::new(seed, k);
            let mut c1 = EventClock::new(rate, rng.substream(1))?;
            let mut c2 = EventClock::new(rate, rng.substream(2))?;
            let mut sample = Vec::with_capacity(times.len());
            for &t in times {
                let w = weight_infinite(c1.count_at(t)?, c2.count_at(t)?, coupling, t).value();
                if !w.is_finite() {
                    return Err(Error::NonFinite("pdp2 weight"));
                }
                sample.push(Complex::new(w, 0.0));
            }
            acc.update(&sample);
            Ok(())
        },
    )?;
    let est = acc.finalize()?;
    let exact = times.iter().map(|&t| vpm_inf(coupling, t, Complex::new(1.0, 0.0))).collect::<Result<Vec<_>>>()?;
    BlochCurve::new(times.to_vec(), est.mean.clone(), est.stderr(), Some(exact))
}

/// `v3 = 2 rho_{++} - 1`, against `1 + 2 g`.
pub fn estimate_v3_inf_mc(coupling: f64, n_traj: u64, times: &[f64], seed: u64) -> Result<BlochCurve> {
    let mut curve = estimate_vpm_inf_mc(coupling, n_traj, times, seed)?.affine(2.0, -1.0);
    curve.exact =
        Some(times.iter().map(|&t| Ok(Complex::new(v3_inf(coupling, t, 1.0)?, 0.0))).collect::<Result<Vec<_>>>()?);
    Ok(curve)
}

/// `sum_{n1, n2 <= n_max} Pois(n1) Pois(n2) w(n1, n2)` with both means `sqrt(2) A t`.
pub fn poisson_average_population(coupling: f64, t: f64, n_max: u64) -> f64 {
    let mean = member_rate(coupling) * t;
    if mean == 0.0 {
        return 1.0;
    }
    let ln_mean = mean.ln();
    let mut sum = 0.0;
    let mut comp = 0.0;
    for n1 in (0..=n_max).step_by(2) {
        for n2 in (0..=n_max).step_by(2) {
            let w = weight_infinite(n1, n2, coupling, t);
            // Poisson masses e^{-mean} cancel against part of the drift factor.
            let log_p = (n1 + n2) as f64 * ln_mean - 2.0 * mean - ln_factorial(n1) - ln_factorial(n2);
            let term = w.sign * (w.log_magnitude + log_p).exp();
            let s = sum + term;
            comp += if f64::abs(sum) >= term.abs() { (sum - s) + term } else { (term - s) + sum };
            sum = s;
        }
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::g_inf;

    #[test]
    fn weight_examples() {
        let t = 0.3;
        assert_eq!(weight_infinite(0, 0, 1.0, t).value(), (2.0 * std::f64::consts::SQRT_2 * t).exp());
        assert_eq!(weight_infinite(2, 0, 1.0, 0.0).value(), -1.0);
        assert!((weight_infinite(2, 2, 1.0, 0.0).value() - 2.0).abs() < 1e-15);
        let odd = weight_infinite(1, 2, 1.0, t);
        assert!(odd.zero);
        assert_eq!(odd.value(), 0.0);
    }

    #[test]
    fn resummation_reproduces_one_plus_g() {
        for i in 0..=12 {
            let t = 0.1 * i as f64;
            let x = std::f64::consts::SQRT_2 * t;
            let exact = 1.0 + g_inf(x).unwrap();
            let got = poisson_average_population(1.0, t, POISSON_TRUNCATION);
            assert!((got - exact).abs() < 1e-8, "t={t}: {got} vs {exact}");
        }
    }

    #[test]
    fn t0_exact_and_shared_estimator() {
        let times = [0.0, 0.4, 0.8];
        let v3 = estimate_v3_inf_mc(1.0, 20_000, &times, 2).unwrap();
        let vpm = estimate_vpm_inf_mc(1.0, 20_000, &times, 2).unwrap();
        assert_eq!(v3.estimate[0], Complex::new(1.0, 0.0));
        assert_eq!(v3.stderr[0], 0.0);
        for (a, b) in v3.estimate.iter().zip(&vpm.estimate) {
            assert_eq!(*a, b * 2.0 - 1.0);
        }
    }

    #[test]
    fn curve_matches_reference() {
        let times: Vec<f64> = (0..=6).map(|i| 0.2 * i as f64).collect();
        let c = estimate_v3_inf_mc(1.0, 100_000, &times, 11).unwrap();
        assert_eq!(c.fraction_within(4.0), Some(1.0));
        assert!(c.stderr.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(estimate_vpm_inf_mc(1.0, 1, &[0.0], 1).is_err());
        assert!(estimate_vpm_inf_mc(1.0, 10, &[20.0], 1).is_err());
        assert!(estimate_vpm_inf_mc(-1.0, 10, &[0.5], 1).is_err());
    }
}
