//! Operator process `R = |psi_1><psi_2| (x) R_E`.
//!
//! Rates are fixed by configuration. A jump `(alpha, nu)` maps
//! `psi_nu -> -i L A_alpha psi_nu` with `L = |psi_nu| / |A_alpha psi_nu|` and
//! multiplies `R_E` by `M B_alpha` from the left (`nu = 1`) or by `M B_alpha^+`
//! from the right (`nu = 2`), `M = 1 / (L Gamma_{alpha nu})`. Between jumps
//! `R_E` grows as `exp(Gamma t)`.
//!
//! A pair with `A_alpha psi_nu = 0` cannot be selected. Its rate still enters
//! the drift, and the excess growth is taken back through a deficit
//! log-weight `-Gamma_unreachable dt` carried by the state.

use serde::{Deserialize, Serialize};

use super::form1::{collect_estimates, REACH_TOL};
use crate::engine::{InitialMixture, InteractionHamiltonian, JumpRecord, MatrixEstimate, Nu, RhoEstimate};
use crate::ensemble::{check_grid, run_sharded};
use crate::error::{Error, Result};
use crate::numerics::{kron, sample_discrete, sample_exponential, CMatrix, CVector, Complex, RngStream};
use crate::stats::EnsembleAccumulator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Form2Config {
    /// `Gamma_{alpha nu}`, indexed `[alpha][nu]`.
    pub const_rates: Vec<[f64; 2]>,
}

impl Form2Config {
    pub fn new(const_rates: Vec<[f64; 2]>) -> Result<Self> {
        if const_rates.is_empty() {
            return Err(Error::InvalidParameter("form-2 rates are empty".into()));
        }
        for (alpha, r) in const_rates.iter().enumerate() {
            for (k, &g) in r.iter().enumerate() {
                if !(g > 0.0) || !g.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "form-2 rate ({alpha}, {}) must be positive and finite, got {g}",
                        k + 1
                    )));
                }
            }
        }
        Ok(Self { const_rates })
    }

    /// Same rate for every pair.
    pub fn uniform(n_terms: usize, rate: f64) -> Result<Self> {
        Self::new(vec![[rate; 2]; n_terms])
    }

    pub fn total(&self) -> f64 {
        self.const_rates.iter().map(|r| r[0] + r[1]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Form2State {
    pub psi: [CVector; 2],
    pub r_env: CMatrix,
    pub jump_counts: [u64; 2],
    /// Accumulated `-Gamma_unreachable dt`; the sampled operator is
    /// `exp(log_deficit) |psi_1><psi_2| (x) R_E`.
    pub log_deficit: f64,
}

impl Form2State {
    pub fn new(psi1: CVector, psi2: CVector, r_env: CMatrix) -> Result<Self> {
        if psi1.dim() != psi2.dim() {
            return Err(Error::DimensionMismatch("psi_1 and psi_2 differ in dimension".into()));
        }
        if !r_env.is_square() {
            return Err(Error::DimensionMismatch("R_E must be square".into()));
        }
        for (v, what) in [(&psi1, "psi_1"), (&psi2, "psi_2")] {
            if v.norm_sqr() == 0.0 {
                return Err(Error::ZeroNorm(what));
            }
        }
        Ok(Self { psi: [psi1, psi2], r_env, jump_counts: [0, 0], log_deficit: 0.0 })
    }

    fn weight(&self) -> Complex {
        Complex::new(self.log_deficit.exp(), 0.0)
    }

    /// `exp(log_deficit) |psi_1><psi_2| (x) R_E`.
    pub fn operator(&self) -> CMatrix {
        kron(&self.psi[0].outer(&self.psi[1]), &self.r_env).scale(self.weight())
    }

    /// `exp(log_deficit) |psi_1><psi_2| tr R_E`.
    pub fn reduced_operator(&self) -> CMatrix {
        self.psi[0].outer(&self.psi[1]).scale(self.r_env.trace() * self.weight())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Form2Rates {
    /// Configured `Gamma_{alpha nu}`.
    pub rates: Vec<[f64; 2]>,
    /// `L_{alpha nu}`, `None` for unreachable pairs.
    pub l: Vec<[Option<f64>; 2]>,
    /// `M_{alpha nu} = 1 / (L Gamma)`.
    pub m: Vec<[Option<f64>; 2]>,
    /// `Gamma = sum of all configured rates`.
    pub total: f64,
    /// Sum of the rates of reachable pairs, per `nu`.
    pub reachable_total: [f64; 2],
}

impl Form2Rates {
    pub fn is_reachable(&self, alpha: usize, nu: Nu) -> bool {
        self.l.get(alpha).is_some_and(|l| l[nu.index()].is_some())
    }

    /// Selection weights for `nu`: the configured rate, or 0 if unreachable.
    pub fn selection_weights(&self, nu: Nu) -> Vec<f64> {
        let k = nu.index();
        self.rates.iter().zip(&self.l).map(|(r, l)| if l[k].is_some() { r[k] } else { 0.0 }).collect()
    }
}

fn check_config(h: &InteractionHamiltonian, cfg: &Form2Config) -> Result<()> {
    if cfg.const_rates.len() != h.terms().len() {
        return Err(Error::DimensionMismatch(format!(
            "{} form-2 rates for {} interaction terms",
            cfg.const_rates.len(),
            h.terms().len()
        )));
    }
    Ok(())
}

/// `L` for one pair, `None` when `A psi = 0`.
fn l_factor(a_op: &CMatrix, psi: &CVector) -> Result<Option<f64>> {
    let n = a_op.mul_vec(psi)?.norm();
    let np = psi.norm();
    if n <= REACH_TOL * a_op.frobenius_sqr().sqrt() * np {
        Ok(None)
    } else {
        Ok(Some(np / n))
    }
}

pub fn rates_form2(h: &InteractionHamiltonian, s: &Form2State, cfg: &Form2Config) -> Result<Form2Rates> {
    check_config(h, cfg)?;
    let n = h.terms().len();
    let mut l = vec![[None; 2]; n];
    let mut m = vec![[None; 2]; n];
    let mut reachable_total = [0.0; 2];
    for (alpha, term) in h.terms().iter().enumerate() {
        for nu in Nu::BOTH {
            let k = nu.index();
            if let Some(lv) = l_factor(&term.a_op, &s.psi[k])? {
                let g = cfg.const_rates[alpha][k];
                l[alpha][k] = Some(lv);
                m[alpha][k] = Some(1.0 / (lv * g));
                reachable_total[k] += g;
            }
        }
    }
    Ok(Form2Rates { rates: cfg.const_rates.clone(), l, m, total: cfg.total(), reachable_total })
}

fn jump_in_place(
    h: &InteractionHamiltonian,
    s: &mut Form2State,
    alpha: usize,
    nu: Nu,
    cfg: &Form2Config,
) -> Result<()> {
    let term = h.terms().get(alpha).ok_or_else(|| Error::InvalidParameter(format!("no interaction term {alpha}")))?;
    let k = nu.index();
    let l = l_factor(&term.a_op, &s.psi[k])?.ok_or(Error::Unreachable { alpha, nu: nu.label() as usize })?;
    let m = 1.0 / (l * cfg.const_rates[alpha][k]);
    s.psi[k] = term.a_op.mul_vec(&s.psi[k])?.scale(Complex::new(0.0, -l));
    s.r_env = match nu {
        Nu::One => term.b_op.matmul(&s.r_env)?,
        Nu::Two => s.r_env.matmul(&term.b_op.adjoint())?,
    };
    s.r_env.scale_mut(Complex::new(m, 0.0));
    s.jump_counts[k] += 1;
    Ok(())
}

pub fn apply_jump_form2(
    h: &InteractionHamiltonian,
    s: &Form2State,
    alpha: usize,
    nu: Nu,
    cfg: &Form2Config,
) -> Result<Form2State> {
    check_config(h, cfg)?;
    let mut out = s.clone();
    jump_in_place(h, &mut out, alpha, nu, cfg)?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Form2Trajectory {
    pub snapshots: Vec<Form2State>,
    pub jumps: Vec<JumpRecord>,
}

fn drift(s: &mut Form2State, dt: f64, total: f64, reachable: [f64; 2]) {
    s.r_env.scale_mut(Complex::new((total * dt).exp(), 0.0));
    s.log_deficit -= (total - reachable[0] - reachable[1]) * dt;
}

/// Simulates from `init` over `times`, starting at `t = 0`.
///
/// Each `nu` keeps its own exponential clock with rate equal to its
/// reachable total, drawn from `rng.substream(nu.label())`; events of the two
/// clocks are applied in time order.
pub fn run_trajectory_form2(
    h: &InteractionHamiltonian,
    init: &Form2State,
    cfg: &Form2Config,
    times: &[f64],
    rng: &RngStream,
) -> Result<Form2Trajectory> {
    check_grid(times)?;
    check_config(h, cfg)?;
    let mut subs = [rng.substream(1), rng.substream(2)];
    let mut s = init.clone();
    let mut rates = rates_form2(h, &s, cfg)?;
    let mut next = [0.0; 2];
    for nu in Nu::BOTH {
        let k = nu.index();
        next[k] = sample_exponential(rates.reachable_total[k], &mut subs[k])?.unwrap_or(f64::INFINITY);
    }
    let mut now = 0.0;
    let mut snapshots = Vec::with_capacity(times.len());
    let mut jumps = Vec::new();
    for &t in times {
        loop {
            let nu = if next[1] < next[0] { Nu::Two } else { Nu::One };
            let k = nu.index();
            let tau = next[k];
            if tau > t {
                break;
            }
            drift(&mut s, tau - now, rates.total, rates.reachable_total);
            now = tau;
            let weights = rates.selection_weights(nu);
            let alpha = sample_discrete(&weights, &mut subs[k])?;
            jumps.push(JumpRecord { time: now, nu, alpha, rate: weights[alpha] });
            jump_in_place(h, &mut s, alpha, nu, cfg)?;
            rates = rates_form2(h, &s, cfg)?;
            next[k] = now + sample_exponential(rates.reachable_total[k], &mut subs[k])?.unwrap_or(f64::INFINITY);
        }
        let mut snap = s.clone();
        drift(&mut snap, t - now, rates.total, rates.reachable_total);
        snapshots.push(snap);
    }
    Ok(Form2Trajectory { snapshots, jumps })
}

/// Ensemble means of `|psi_1><psi_2| (x) R_E` and `|psi_1><psi_2| tr R_E`,
/// including the deficit weight.
pub fn estimate_rho_form2(snapshots: &[Form2State]) -> Result<RhoEstimate> {
    let first = snapshots.first().ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
    let (d_s, d) = (first.psi[0].dim(), first.psi[0].dim() * first.r_env.rows());
    let mut total = EnsembleAccumulator::new(d * d);
    let mut reduced = EnsembleAccumulator::new(d_s * d_s);
    for s in snapshots {
        total.update_matrix(&s.operator());
        reduced.update_matrix(&s.reduced_operator());
    }
    Ok(RhoEstimate {
        total: Some(MatrixEstimate::from_estimate(total.summary()?, d)),
        reduced: MatrixEstimate::from_estimate(reduced.summary()?, d_s),
    })
}

/// Form-2 counterpart of [`super::simulate_form1`].
pub fn simulate_form2(
    h: &InteractionHamiltonian,
    cfg: &Form2Config,
    init: &InitialMixture,
    times: &[f64],
    n_traj: u64,
    seed: u64,
    include_total: bool,
) -> Result<Vec<RhoEstimate>> {
    check_grid(times)?;
    check_config(h, cfg)?;
    if init.system.dim() != h.d_s() || init.environment.dim() != h.d_e() {
        return Err(Error::DimensionMismatch("initial state does not match the Hamiltonian".into()));
    }
    let (d_s, d) = (h.d_s(), h.d_s() * h.d_e());
    let n_t = times.len();
    let new_acc = || {
        let mut v: Vec<EnsembleAccumulator> = (0..n_t).map(|_| EnsembleAccumulator::new(d_s * d_s)).collect();
        if include_total {
            v.extend((0..n_t).map(|_| EnsembleAccumulator::new(d * d)));
        }
        v
    };
    let acc = run_sharded(n_traj, new_acc, |acc, k| {
        let mut rng = RngStream::new(seed, k);
        let start = init.sample_form2(&mut rng);
        let traj = run_trajectory_form2(h, &start, cfg, times, &rng)?;
        for (i, s) in traj.snapshots.iter().enumerate() {
            acc[i].update_matrix(&s.reduced_operator());
            if include_total {
                acc[n_t + i].update_matrix(&s.operator());
            }
        }
        Ok(())
    })?;
    collect_estimates(&acc, n_t, d_s, d, include_total)
}
