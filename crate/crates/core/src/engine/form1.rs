//! Product-pair process `R = |Phi_1><Phi_2|`, `Phi_nu = psi_nu (x) chi_nu`.
//!
//! A jump `(alpha, nu)` replaces `psi_nu` by `A_alpha psi_nu` and `chi_nu` by
//! `B_alpha chi_nu`, both rescaled to keep their norms, with a factor `-i` on
//! `psi_nu`. Between jumps `chi_nu` grows as `exp(Gamma_nu t)`.

use crate::engine::{InitialMixture, InteractionHamiltonian, JumpRecord, MatrixEstimate, Nu, RhoEstimate};
use crate::ensemble::{check_grid, run_sharded};
use crate::error::{Error, Result};
use crate::numerics::{sample_discrete, sample_exponential, CMatrix, CVector, Complex, RngStream};
use crate::stats::EnsembleAccumulator;

/// Relative size below which `|A psi|` or `|B chi|` counts as zero.
pub(crate) const REACH_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct ProductPairState {
    pub psi: [CVector; 2],
    pub chi: [CVector; 2],
    pub jump_counts: [u64; 2],
}

impl ProductPairState {
    pub fn new(psi1: CVector, psi2: CVector, chi1: CVector, chi2: CVector) -> Result<Self> {
        if psi1.dim() != psi2.dim() || chi1.dim() != chi2.dim() {
            return Err(Error::DimensionMismatch("pair members differ in dimension".into()));
        }
        for (v, what) in [(&psi1, "psi_1"), (&psi2, "psi_2"), (&chi1, "chi_1"), (&chi2, "chi_2")] {
            if v.norm_sqr() == 0.0 {
                return Err(Error::ZeroNorm(what));
            }
        }
        Ok(Self { psi: [psi1, psi2], chi: [chi1, chi2], jump_counts: [0, 0] })
    }

    pub fn phi(&self, nu: Nu) -> CVector {
        let k = nu.index();
        self.psi[k].kron(&self.chi[k])
    }

    /// `|Phi_1><Phi_2|`.
    pub fn dyad(&self) -> CMatrix {
        self.phi(Nu::One).outer(&self.phi(Nu::Two))
    }

    /// `|psi_1><psi_2| <chi_2|chi_1>`.
    pub fn reduced_dyad(&self) -> CMatrix {
        self.psi[0].outer(&self.psi[1]).scale(self.chi[1].inner(&self.chi[0]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Form1Rates {
    /// `Gamma_{alpha nu}`, indexed `[alpha][nu]`.
    pub per_term: Vec<[f64; 2]>,
    /// `Gamma_nu`.
    pub total: [f64; 2],
}

fn norm_after(op: &CMatrix, v: &CVector) -> Result<(CVector, f64)> {
    let w = op.mul_vec(v)?;
    let n = w.norm();
    let scale = op.frobenius_sqr().sqrt() * v.norm();
    Ok(if n <= REACH_TOL * scale { (w, 0.0) } else { (w, n) })
}

fn rates_for(h: &InteractionHamiltonian, psi: &CVector, chi: &CVector) -> Result<(Vec<f64>, f64)> {
    let (np, nc) = (psi.norm(), chi.norm());
    if np == 0.0 {
        return Err(Error::ZeroNorm("psi"));
    }
    if nc == 0.0 {
        return Err(Error::ZeroNorm("chi"));
    }
    let mut per = Vec::with_capacity(h.terms().len());
    for t in h.terms() {
        let (_, a) = norm_after(&t.a_op, psi)?;
        let (_, b) = norm_after(&t.b_op, chi)?;
        per.push(a * b / (np * nc));
    }
    let total = per.iter().sum();
    Ok((per, total))
}

pub fn rates_form1(h: &InteractionHamiltonian, s: &ProductPairState) -> Result<Form1Rates> {
    let mut per_term = vec![[0.0; 2]; h.terms().len()];
    let mut total = [0.0; 2];
    for nu in Nu::BOTH {
        let k = nu.index();
        let (per, tot) = rates_for(h, &s.psi[k], &s.chi[k])?;
        for (slot, r) in per_term.iter_mut().zip(per) {
            slot[k] = r;
        }
        total[k] = tot;
    }
    Ok(Form1Rates { per_term, total })
}

fn jump_member(h: &InteractionHamiltonian, psi: &mut CVector, chi: &mut CVector, alpha: usize) -> Result<()> {
    let term = h.terms().get(alpha).ok_or_else(|| Error::InvalidParameter(format!("no interaction term {alpha}")))?;
    let (apsi, na) = norm_after(&term.a_op, psi)?;
    let (bchi, nb) = norm_after(&term.b_op, chi)?;
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm("jump target"));
    }
    let new_psi = apsi.scale(Complex::new(0.0, -psi.norm() / na));
    let new_chi = bchi.scale(Complex::new(chi.norm() / nb, 0.0));
    *psi = new_psi;
    *chi = new_chi;
    Ok(())
}

pub fn apply_jump_form1(
    h: &InteractionHamiltonian,
    s: &ProductPairState,
    alpha: usize,
    nu: Nu,
) -> Result<ProductPairState> {
    let mut out = s.clone();
    let k = nu.index();
    jump_member(h, &mut out.psi[k], &mut out.chi[k], alpha)?;
    out.jump_counts[k] += 1;
    Ok(out)
}

/// `chi_nu <- exp(Gamma_nu dt) chi_nu`.
pub fn drift_form1(s: &ProductPairState, dt: f64, gamma_pair: [f64; 2]) -> ProductPairState {
    let mut out = s.clone();
    for (chi, g) in out.chi.iter_mut().zip(gamma_pair) {
        chi.scale_mut(Complex::new((g * dt).exp(), 0.0));
    }
    out
}

#[derive(Debug, Clone)]
pub struct Form1Trajectory {
    /// One state per grid time.
    pub snapshots: Vec<ProductPairState>,
    /// All jumps of both members, ordered by time.
    pub jumps: Vec<JumpRecord>,
}

struct MemberPath {
    psi: Vec<CVector>,
    chi: Vec<CVector>,
    counts: Vec<u64>,
    jumps: Vec<JumpRecord>,
}

fn run_member(
    h: &InteractionHamiltonian,
    mut psi: CVector,
    mut chi: CVector,
    times: &[f64],
    nu: Nu,
    rng: &mut RngStream,
) -> Result<MemberPath> {
    let mut path = MemberPath {
        psi: Vec::with_capacity(times.len()),
        chi: Vec::with_capacity(times.len()),
        counts: Vec::with_capacity(times.len()),
        jumps: Vec::new(),
    };
    let mut now = 0.0;
    let mut count = 0u64;
    let (mut per, mut gamma) = rates_for(h, &psi, &chi)?;
    let mut next = now + sample_exponential(gamma, rng)?.unwrap_or(f64::INFINITY);
    for &t in times {
        while next <= t {
            chi.scale_mut(Complex::new((gamma * (next - now)).exp(), 0.0));
            now = next;
            let alpha = sample_discrete(&per, rng)?;
            path.jumps.push(JumpRecord { time: now, nu, alpha, rate: per[alpha] });
            jump_member(h, &mut psi, &mut chi, alpha)?;
            count += 1;
            (per, gamma) = rates_for(h, &psi, &chi)?;
            next = now + sample_exponential(gamma, rng)?.unwrap_or(f64::INFINITY);
        }
        path.psi.push(psi.clone());
        path.chi.push(chi.scale(Complex::new((gamma * (t - now)).exp(), 0.0)));
        path.counts.push(count);
    }
    Ok(path)
}

/// Simulates both members from `init` over `times`, starting at `t = 0`.
/// Member `nu` draws from `rng.substream(nu.label())`.
pub fn run_trajectory_form1(
    h: &InteractionHamiltonian,
    init: &ProductPairState,
    times: &[f64],
    rng: &RngStream,
) -> Result<Form1Trajectory> {
    check_grid(times)?;
    let mut paths = Vec::with_capacity(2);
    for nu in Nu::BOTH {
        let k = nu.index();
        let mut sub = rng.substream(nu.label() as u64);
        paths.push(run_member(h, init.psi[k].clone(), init.chi[k].clone(), times, nu, &mut sub)?);
    }
    let (p2, p1) = (paths.pop().expect("two"), paths.pop().expect("two"));
    let snapshots = (0..times.len())
        .map(|i| ProductPairState {
            psi: [p1.psi[i].clone(), p2.psi[i].clone()],
            chi: [p1.chi[i].clone(), p2.chi[i].clone()],
            jump_counts: [init.jump_counts[0] + p1.counts[i], init.jump_counts[1] + p2.counts[i]],
        })
        .collect();
    let mut jumps = p1.jumps;
    jumps.extend(p2.jumps);
    jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(Form1Trajectory { snapshots, jumps })
}

/// Ensemble means of `|Phi_1><Phi_2|` and `|psi_1><psi_2| <chi_2|chi_1>`.
pub fn estimate_rho_form1(snapshots: &[ProductPairState]) -> Result<RhoEstimate> {
    let first = snapshots.first().ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
    let (d_s, d) = (first.psi[0].dim(), first.psi[0].dim() * first.chi[0].dim());
    let mut total = EnsembleAccumulator::new(d * d);
    let mut reduced = EnsembleAccumulator::new(d_s * d_s);
    for s in snapshots {
        total.update_matrix(&s.dyad());
        reduced.update_matrix(&s.reduced_dyad());
    }
    Ok(RhoEstimate {
        total: Some(MatrixEstimate::from_estimate(total.summary()?, d)),
        reduced: MatrixEstimate::from_estimate(reduced.summary()?, d_s),
    })
}

/// Runs `n_traj` form-1 trajectories and returns one estimate per grid time.
///
/// Trajectory `k` samples its initial state from stream `(seed, k)`. The
/// total density matrix is only accumulated when `include_total` is set.
pub fn simulate_form1(
    h: &InteractionHamiltonian,
    init: &InitialMixture,
    times: &[f64],
    n_traj: u64,
    seed: u64,
    include_total: bool,
) -> Result<Vec<RhoEstimate>> {
    check_grid(times)?;
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
        let start = init.sample_form1(&mut rng);
        let traj = run_trajectory_form1(h, &start, times, &rng)?;
        for (i, s) in traj.snapshots.iter().enumerate() {
            acc[i].update_matrix(&s.reduced_dyad());
            if include_total {
                acc[n_t + i].update_matrix(&s.dyad());
            }
        }
        Ok(())
    })?;
    collect_estimates(&acc, n_t, d_s, d, include_total)
}

pub(crate) fn collect_estimates(
    acc: &[EnsembleAccumulator],
    n_t: usize,
    d_s: usize,
    d: usize,
    include_total: bool,
) -> Result<Vec<RhoEstimate>> {
    (0..n_t)
        .map(|i| {
            Ok(RhoEstimate {
                reduced: MatrixEstimate::from_estimate(acc[i].summary()?, d_s),
                total: if include_total {
                    Some(MatrixEstimate::from_estimate(acc[n_t + i].summary()?, d))
                } else {
                    None
                },
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{InteractionTerm, PureMixture};
    use crate::oracle::{collective_lowering, sigma_minus, sigma_plus};
    use crate::stats::EnsembleAccumulator;

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    /// Spin star with `N = 1`, coupling `a`: terms `(sigma_+, 2a J_-)`, `(sigma_-, 2a J_+)`.
    fn star1(a: f64) -> InteractionHamiltonian {
        let jm = collective_lowering(1).scale(c(2.0 * a));
        InteractionHamiltonian::new(vec![
            InteractionTerm { a_op: sigma_plus(), b_op: jm.clone() },
            InteractionTerm { a_op: sigma_minus(), b_op: jm.adjoint() },
        ])
        .unwrap()
    }

    fn plus_down() -> ProductPairState {
        let up = CVector::basis(2, 0);
        let down = CVector::basis(2, 1);
        ProductPairState::new(up.clone(), up, down.clone(), down).unwrap()
    }

    #[test]
    fn zero_operators_give_zero_rates() {
        let z = CMatrix::zeros(2, 2);
        let h = InteractionHamiltonian::new(vec![InteractionTerm { a_op: z.clone(), b_op: z }]).unwrap();
        let r = rates_form1(&h, &plus_down()).unwrap();
        assert_eq!(r.total, [0.0, 0.0]);
    }

    #[test]
    fn spin_star_rate_matches_sector_gamma() {
        let r = rates_form1(&star1(1.0), &plus_down()).unwrap();
        // alpha = 1 is the (sigma_-, J_+) term.
        assert_eq!(r.per_term[0], [0.0, 0.0]);
        assert!((r.per_term[1][0] - 2.0).abs() < 1e-15);
        assert!((r.total[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rates_are_scale_invariant() {
        let h = star1(0.7);
        let s = ProductPairState::new(
            CVector::new(vec![c(0.6), Complex::new(0.0, 0.8)]).unwrap(),
            CVector::new(vec![c(1.0), c(1.0)]).unwrap(),
            CVector::new(vec![c(0.3), Complex::new(0.2, -0.5)]).unwrap(),
            CVector::new(vec![c(-1.0), c(2.0)]).unwrap(),
        )
        .unwrap();
        let r0 = rates_form1(&h, &s).unwrap();
        let mut t = s.clone();
        t.psi[0].scale_mut(Complex::new(-3.0, 1.0));
        t.chi[1].scale_mut(c(0.01));
        let r1 = rates_form1(&h, &t).unwrap();
        for (a, b) in r0.per_term.iter().zip(&r1.per_term) {
            assert!((a[0] - b[0]).abs() < 1e-13 && (a[1] - b[1]).abs() < 1e-13);
        }
        let drifted = drift_form1(&s, 0.4, r0.total);
        let r2 = rates_form1(&h, &drifted).unwrap();
        assert!((r2.total[0] - r0.total[0]).abs() < 1e-13 && (r2.total[1] - r0.total[1]).abs() < 1e-13);
    }

    #[test]
    fn jumps_preserve_norms_and_follow_ladder_algebra() {
        let h = star1(1.0);
        let s = plus_down();
        let j1 = apply_jump_form1(&h, &s, 1, Nu::One).unwrap();
        assert_eq!(j1.jump_counts, [1, 0]);
        assert!(j1.psi[0].max_abs_diff(&CVector::basis(2, 1).scale(Complex::new(0.0, -1.0))) < 1e-15);
        assert_eq!(j1.psi[1], s.psi[1]);
        assert!((j1.chi[0].norm() - 1.0).abs() < 1e-12);
        let j2 = apply_jump_form1(&h, &j1, 0, Nu::One).unwrap();
        assert!(j2.psi[0].max_abs_diff(&CVector::basis(2, 0).scale(c(-1.0))) < 1e-15);
        assert!(matches!(apply_jump_form1(&h, &s, 0, Nu::Two), Err(Error::ZeroNorm(_))));
    }

    #[test]
    fn drift_scales_chi() {
        let s = plus_down();
        assert_eq!(drift_form1(&s, 0.0, [1.0, 3.0]), s);
        let d = drift_form1(&s, std::f64::consts::LN_2, [1.0, 0.0]);
        assert!((d.chi[0].norm() - 2.0).abs() < 1e-15);
        assert_eq!(d.chi[1], s.chi[1]);
    }

    #[test]
    fn zero_hamiltonian_keeps_state() {
        let z = CMatrix::zeros(2, 2);
        let h = InteractionHamiltonian::new(vec![InteractionTerm { a_op: z.clone(), b_op: z }]).unwrap();
        let traj = run_trajectory_form1(&h, &plus_down(), &[0.0, 1.0, 5.0], &RngStream::new(1, 0)).unwrap();
        assert!(traj.jumps.is_empty());
        assert!(traj.snapshots.iter().all(|s| *s == plus_down()));
    }

    #[test]
    fn jump_counts_are_poisson() {
        // For |+> (x) |down> every jump flips both factors and the rate stays 2A.
        let h = star1(1.0);
        let t = 0.75;
        let mut acc = EnsembleAccumulator::new(1);
        for k in 0..100_000 {
            let traj = run_trajectory_form1(&h, &plus_down(), &[t], &RngStream::new(5, k)).unwrap();
            assert!(traj.jumps.iter().all(|j| j.rate > 0.0));
            assert!(traj.jumps.windows(2).all(|w| w[0].time <= w[1].time));
            acc.update_real(traj.snapshots[0].jump_counts[0] as f64);
        }
        let est = acc.finalize().unwrap();
        let mean = 2.0 * t;
        assert!((est.mean[0].re - mean).abs() < 3.0 * est.stderr_re[0], "{} vs {mean}", est.mean[0].re);
    }

    #[test]
    fn single_snapshot_estimate() {
        let s = plus_down();
        let e = estimate_rho_form1(std::slice::from_ref(&s)).unwrap();
        assert_eq!(e.total.unwrap().mean, s.phi(Nu::One).outer(&s.phi(Nu::One)));
        assert!(estimate_rho_form1(&[]).is_err());
    }

    #[test]
    fn spin_star_population_matches_closed_form() {
        let h = star1(1.0);
        let init = InitialMixture::new(
            PureMixture::pure(CVector::basis(2, 0)).unwrap(),
            PureMixture::new(vec![0.5, 0.5], vec![CVector::basis(2, 0), CVector::basis(2, 1)]).unwrap(),
        );
        let times = [0.0, 0.3, 0.8];
        let est = simulate_form1(&h, &init, &times, 200_000, 9, false).unwrap();
        for (e, &t) in est.iter().zip(&times) {
            // Only the |down> bath state couples: rho_++ = 1/2 + 1/2 cos^2(2t).
            let exact = 0.5 + 0.5 * (2.0 * t).cos().powi(2);
            let m = &e.reduced;
            assert!((m.mean[(0, 0)].re - exact).abs() <= 4.0 * m.stderr_re[0] + 1e-12);
            let tr = m.mean.trace().re;
            assert!((tr - 1.0).abs() <= 4.0 * (m.stderr_re[0] + m.stderr_re[3]) + 1e-12);
        }
    }
}
