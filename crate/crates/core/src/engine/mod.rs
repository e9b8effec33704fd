//! Generic event-driven engines for the two tensor-product unravellings of
//! `d rho/dt = -i [H, rho]` with `H = sum_a A_a (x) B_a`.
//!
//! * Form 1 samples `R = |Phi_1><Phi_2|` with product vectors
//!   `Phi_nu = psi_nu (x) chi_nu` ([`form1`]).
//! * Form 2 samples `R = |psi_1><psi_2| (x) R_E` with an environment
//!   operator `R_E` ([`form2`]).
//!
//! Operators are time independent, so between jumps every rate is constant
//! and the drift is a scalar exponential: waiting times are drawn exactly and
//! there is no time step anywhere.

pub mod form1;
pub mod form2;

use serde::{Deserialize, Serialize};

use crate::analytic::SpinStarParams;
use crate::ensemble::{check_grid, run_sharded};
use crate::error::{Error, Result};
use crate::numerics::{kron, CMatrix, CVector, Complex, DiscreteSampler, RngStream, HERMITIAN_TOL};
use crate::oracle::{collective_lowering, sigma_minus, sigma_plus, MAX_ORACLE_BATH};
use crate::stats::{EnsembleAccumulator, Estimate};

pub use form1::{
    apply_jump_form1, drift_form1, estimate_rho_form1, rates_form1, run_trajectory_form1, simulate_form1, Form1Rates,
    Form1Trajectory, ProductPairState,
};
pub use form2::{
    apply_jump_form2, estimate_rho_form2, rates_form2, run_trajectory_form2, simulate_form2, Form2Config, Form2Rates,
    Form2State, Form2Trajectory,
};

/// Tolerance on norms and mixture weights of initial states.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Which member of the pair a jump acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Nu {
    One,
    Two,
}

impl Nu {
    pub const BOTH: [Nu; 2] = [Nu::One, Nu::Two];

    pub fn index(self) -> usize {
        match self {
            Nu::One => 0,
            Nu::Two => 1,
        }
    }

    /// 1 or 2.
    pub fn label(self) -> u8 {
        self.index() as u8 + 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTerm {
    pub a_op: CMatrix,
    pub b_op: CMatrix,
}

#[derive(Debug, Clone)]
pub struct InteractionHamiltonian {
    terms: Vec<InteractionTerm>,
    d_s: usize,
    d_e: usize,
}

impl InteractionHamiltonian {
    /// Validates shapes and that `sum_a A_a (x) B_a` is Hermitian within
    /// [`HERMITIAN_TOL`].
    pub fn new(terms: Vec<InteractionTerm>) -> Result<Self> {
        let first =
            terms.first().ok_or_else(|| Error::InvalidParameter("Hamiltonian needs at least one term".into()))?;
        let (d_s, d_e) = (first.a_op.rows(), first.b_op.rows());
        for (alpha, t) in terms.iter().enumerate() {
            if !t.a_op.is_square() || !t.b_op.is_square() || t.a_op.rows() != d_s || t.b_op.rows() != d_e {
                return Err(Error::DimensionMismatch(format!(
                    "term {alpha}: A is {}x{}, B is {}x{}; expected {d_s}x{d_s} and {d_e}x{d_e}",
                    t.a_op.rows(),
                    t.a_op.cols(),
                    t.b_op.rows(),
                    t.b_op.cols()
                )));
            }
        }
        let h = Self { terms, d_s, d_e };
        h.total().ensure_hermitian(HERMITIAN_TOL)?;
        Ok(h)
    }

    pub fn terms(&self) -> &[InteractionTerm] {
        &self.terms
    }

    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    /// `sum_a A_a (x) B_a` on the composite space.
    pub fn total(&self) -> CMatrix {
        let d = self.d_s * self.d_e;
        let mut h = CMatrix::zeros(d, d);
        for t in &self.terms {
            h.add_scaled_mut(Complex::new(1.0, 0.0), &kron(&t.a_op, &t.b_op))
                .expect("shapes validated at construction");
        }
        h
    }
}

/// Spin star interaction as two terms,
/// `(sigma_+, 2A/sqrt(N) J_-)` and `(sigma_-, 2A/sqrt(N) J_+)`.
pub fn spinstar_interaction(params: &SpinStarParams) -> Result<InteractionHamiltonian> {
    if params.n_bath > MAX_ORACLE_BATH {
        return Err(Error::InvalidParameter(format!(
            "dense spin star supports n_bath <= {MAX_ORACLE_BATH}, got {}",
            params.n_bath
        )));
    }
    let scale = Complex::new(2.0 * params.coupling / f64::from(params.n_bath).sqrt(), 0.0);
    let j_minus = collective_lowering(params.n_bath).scale(scale);
    InteractionHamiltonian::new(vec![
        InteractionTerm { a_op: sigma_plus(), b_op: j_minus.clone() },
        InteractionTerm { a_op: sigma_minus(), b_op: j_minus.adjoint() },
    ])
}

/// One `dN_{alpha nu} = 1` event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    pub time: f64,
    pub nu: Nu,
    pub alpha: usize,
    /// `Gamma_{alpha nu}` at the moment the jump was selected.
    pub rate: f64,
}

/// A finite ensemble `sum_k w_k |phi_k><phi_k|` of normalized pure states.
#[derive(Debug, Clone)]
pub struct PureMixture {
    weights: Vec<f64>,
    states: Vec<CVector>,
    sampler: DiscreteSampler,
}

impl PureMixture {
    pub fn new(weights: Vec<f64>, states: Vec<CVector>) -> Result<Self> {
        if weights.is_empty() || weights.len() != states.len() {
            return Err(Error::InvalidParameter(format!(
                "mixture needs matching nonempty weights and states ({} vs {})",
                weights.len(),
                states.len()
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidWeights(format!("mixture weights sum to {total}, not 1")));
        }
        let dim = states[0].dim();
        for (k, s) in states.iter().enumerate() {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch(format!("mixture state {k} has dim {}", s.dim())));
            }
            if (s.norm() - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::InvalidState(format!("mixture state {k} has norm {}", s.norm())));
            }
        }
        let sampler = DiscreteSampler::new(&weights)?;
        Ok(Self { weights, states, sampler })
    }

    pub fn pure(state: CVector) -> Result<Self> {
        Self::new(vec![1.0], vec![state])
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn states(&self) -> &[CVector] {
        &self.states
    }

    pub fn density(&self) -> CMatrix {
        let d = self.dim();
        let mut rho = CMatrix::zeros(d, d);
        for (w, s) in self.weights.iter().zip(&self.states) {
            rho.add_scaled_mut(Complex::new(*w, 0.0), &s.outer(s)).expect("same dim");
        }
        rho
    }

    pub fn sample(&self, rng: &mut RngStream) -> &CVector {
        &self.states[self.sampler.sample(rng)]
    }

    pub fn sample_index(&self, rng: &mut RngStream) -> usize {
        self.sampler.sample(rng)
    }
}

/// Product initial state `rho(0) = rho_S (x) rho_E` given as two mixtures.
#[derive(Debug, Clone)]
pub struct InitialMixture {
    pub system: PureMixture,
    pub environment: PureMixture,
}

impl InitialMixture {
    pub fn new(system: PureMixture, environment: PureMixture) -> Self {
        Self { system, environment }
    }

    pub fn density(&self) -> CMatrix {
        kron(&self.system.density(), &self.environment.density())
    }

    /// `Phi_1(0) = Phi_2(0) = psi (x) chi` with `psi`, `chi` drawn independently.
    pub fn sample_form1(&self, rng: &mut RngStream) -> ProductPairState {
        let psi = self.system.sample(rng).clone();
        let chi = self.environment.sample(rng).clone();
        ProductPairState::new(psi.clone(), psi, chi.clone(), chi).expect("mixture states are normalized")
    }

    /// `psi_1 = psi_2 = psi` drawn from the system mixture, `R_E = rho_E(0)`.
    pub fn sample_form2(&self, rng: &mut RngStream) -> Form2State {
        let psi = self.system.sample(rng).clone();
        Form2State::new(psi.clone(), psi, self.environment.density()).expect("mixture states are normalized")
    }
}

/// `n` form-1 initial states, trajectory `k` drawing from stream `(seed, k)`.
pub fn initial_ensemble_form1(init: &InitialMixture, n: usize, seed: u64) -> Vec<ProductPairState> {
    (0..n).map(|k| init.sample_form1(&mut RngStream::new(seed, k as u64))).collect()
}

pub fn initial_ensemble_form2(init: &InitialMixture, n: usize, seed: u64) -> Vec<Form2State> {
    (0..n).map(|k| init.sample_form2(&mut RngStream::new(seed, k as u64))).collect()
}

/// Which unravelling to run.
#[derive(Debug, Clone, Copy)]
pub enum EngineChoice<'a> {
    Form1,
    Form2(&'a Form2Config),
}

/// Estimates of `tr(O_k rho_S(t))` for each observable `O_k`. Entry
/// `[i][k]` of the mean belongs to grid time `i`. Sampling is identical to
/// [`simulate_form1`] / [`simulate_form2`] with the same seed.
pub fn simulate_observables(
    engine: EngineChoice<'_>,
    h: &InteractionHamiltonian,
    init: &InitialMixture,
    times: &[f64],
    n_traj: u64,
    seed: u64,
    observables: &[CMatrix],
) -> Result<Vec<Estimate>> {
    check_grid(times)?;
    if init.system.dim() != h.d_s() || init.environment.dim() != h.d_e() {
        return Err(Error::DimensionMismatch("initial state does not match the Hamiltonian".into()));
    }
    if let Some(o) = observables.iter().find(|o| o.rows() != h.d_s() || !o.is_square()) {
        return Err(Error::DimensionMismatch(format!(
            "observable is {}x{}, system dim {}",
            o.rows(),
            o.cols(),
            h.d_s()
        )));
    }
    let (n_t, n_o) = (times.len(), observables.len());
    let acc = run_sharded(
        n_traj,
        || EnsembleAccumulator::new(n_t * n_o),
        |acc, k| {
            let mut rng = RngStream::new(seed, k);
            let reduced: Vec<CMatrix> = match engine {
                EngineChoice::Form1 => {
                    let start = init.sample_form1(&mut rng);
                    let traj = run_trajectory_form1(h, &start, times, &rng)?;
                    traj.snapshots.iter().map(ProductPairState::reduced_dyad).collect()
                }
                EngineChoice::Form2(cfg) => {
                    let start = init.sample_form2(&mut rng);
                    let traj = run_trajectory_form2(h, &start, cfg, times, &rng)?;
                    traj.snapshots.iter().map(Form2State::reduced_operator).collect()
                }
            };
            let mut sample = Vec::with_capacity(n_t * n_o);
            for r in &reduced {
                for o in observables {
                    sample.push(o.matmul(r)?.trace());
                }
            }
            acc.update(&sample);
            Ok(())
        },
    )?;
    let est = acc.summary()?;
    Ok((0..n_t)
        .map(|i| {
            let range = i * n_o..(i + 1) * n_o;
            Estimate {
                count: est.count,
                mean: est.mean[range.clone()].to_vec(),
                stderr_re: est.stderr_re[range.clone()].to_vec(),
                stderr_im: est.stderr_im[range].to_vec(),
            }
        })
        .collect())
}

/// Monte Carlo estimates of the total and reduced density matrices at one time.
#[derive(Debug, Clone)]
pub struct RhoEstimate {
    pub total: Option<MatrixEstimate>,
    pub reduced: MatrixEstimate,
}

/// Entrywise mean and standard errors (row-major) of a sampled matrix.
#[derive(Debug, Clone)]
pub struct MatrixEstimate {
    pub mean: CMatrix,
    pub stderr_re: Vec<f64>,
    pub stderr_im: Vec<f64>,
}

impl MatrixEstimate {
    pub(crate) fn from_estimate(est: Estimate, dim: usize) -> Self {
        Self {
            mean: CMatrix::new(dim, dim, est.mean).expect("estimate length matches dim^2"),
            stderr_re: est.stderr_re,
            stderr_im: est.stderr_im,
        }
    }

    /// Largest of `|Re diff|/se_re` and `|Im diff|/se_im` over all entries,
    /// using [`crate::stats::sigma_distance`] conventions.
    pub fn max_sigma_distance(&self, exact: &CMatrix) -> f64 {
        use crate::stats::sigma_distance;
        let mut worst = 0.0f64;
        for (k, (m, x)) in self.mean.as_slice().iter().zip(exact.as_slice()).enumerate() {
            worst = worst
                .max(sigma_distance((m.re - x.re).abs(), self.stderr_re[k]))
                .max(sigma_distance((m.im - x.im).abs(), self.stderr_im[k]));
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex {
        Complex::new(re, 0.0)
    }

    #[test]
    fn hamiltonian_validation() {
        let ok = InteractionHamiltonian::new(vec![
            InteractionTerm { a_op: sigma_plus(), b_op: sigma_minus() },
            InteractionTerm { a_op: sigma_minus(), b_op: sigma_plus() },
        ]);
        assert!(ok.is_ok());
        let not_hermitian =
            InteractionHamiltonian::new(vec![InteractionTerm { a_op: sigma_plus(), b_op: sigma_minus() }]);
        assert!(matches!(not_hermitian, Err(Error::NotHermitian { .. })));
        let bad_dims = InteractionHamiltonian::new(vec![
            InteractionTerm { a_op: sigma_plus(), b_op: sigma_minus() },
            InteractionTerm { a_op: CMatrix::identity(3), b_op: sigma_plus() },
        ]);
        assert!(matches!(bad_dims, Err(Error::DimensionMismatch(_))));
        assert!(InteractionHamiltonian::new(vec![]).is_err());
    }

    #[test]
    fn mixture_validation() {
        let up = CVector::basis(2, 0);
        let down = CVector::basis(2, 1);
        assert!(PureMixture::new(vec![0.5, 0.4], vec![up.clone(), down.clone()]).is_err());
        assert!(PureMixture::new(vec![1.0], vec![up.scale(c(2.0))]).is_err());
        assert!(PureMixture::new(vec![0.5, 0.5], vec![up.clone()]).is_err());
        let m = PureMixture::new(vec![0.25, 0.75], vec![up, down]).unwrap();
        assert_eq!(m.density(), CMatrix::diagonal(&[c(0.25), c(0.75)]));
    }

    #[test]
    fn pure_inputs_give_identical_trajectories() {
        let init = InitialMixture::new(
            PureMixture::pure(CVector::basis(2, 0)).unwrap(),
            PureMixture::pure(CVector::basis(3, 2)).unwrap(),
        );
        let ens = initial_ensemble_form1(&init, 50, 1);
        assert!(ens.windows(2).all(|w| w[0] == w[1]));
        let ens2 = initial_ensemble_form2(&init, 10, 1);
        assert!(ens2.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn observables_agree_with_matrix_estimate() {
        let params = SpinStarParams::new(1, 1.0).unwrap();
        let h = spinstar_interaction(&params).unwrap();
        let init = InitialMixture::new(
            PureMixture::pure(CVector::new(vec![c(0.6), c(0.8)]).unwrap()).unwrap(),
            PureMixture::new(vec![0.5, 0.5], vec![CVector::basis(2, 0), CVector::basis(2, 1)]).unwrap(),
        );
        let times = [0.0, 0.4];
        let p00 = CMatrix::diagonal(&[c(1.0), c(0.0)]);
        let obs = simulate_observables(EngineChoice::Form1, &h, &init, &times, 5000, 3, &[p00]).unwrap();
        let full = simulate_form1(&h, &init, &times, 5000, 3, false).unwrap();
        for (o, f) in obs.iter().zip(&full) {
            assert!((o.mean[0] - f.reduced.mean[(0, 0)]).norm() < 1e-12);
        }
    }
}
