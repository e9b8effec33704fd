//! Exact propagation of the von Neumann equation on the full composite
//! Hilbert space, by diagonalizing the total Hamiltonian once.
//!
//! The bath is built in the computational product basis; nothing here uses
//! the `(j, m)` sector structure, so this module stays independent of the
//! closed-form solution it is used to check.

use crate::analytic::{BlochVector, SpinStarParams};
use crate::error::{Error, Result};
use crate::numerics::{herm_eig, kron, partial_trace_env, CMatrix, Complex, HermEig, HERMITIAN_TOL};

/// Largest bath the oracle will assemble (total dimension `2^(N+1)`).
pub const MAX_ORACLE_BATH: u32 = 12;

/// Tolerance for validating initial density matrices.
pub const STATE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ComposedModel {
    h_total: CMatrix,
    d_s: usize,
    d_e: usize,
    eig: HermEig,
}

impl ComposedModel {
    pub fn new(h_total: CMatrix, d_s: usize, d_e: usize) -> Result<Self> {
        if h_total.rows() != d_s * d_e || !h_total.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Hamiltonian is {}x{}, expected {0}x{0} for d_s={d_s}, d_e={d_e}",
                h_total.rows(),
                h_total.cols()
            )));
        }
        let eig = herm_eig(&h_total)?;
        Ok(Self { h_total, d_s, d_e, eig })
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.h_total
    }

    pub fn eigen(&self) -> &HermEig {
        &self.eig
    }

    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    pub fn dim(&self) -> usize {
        self.d_s * self.d_e
    }

    /// `rho(t)` for each time in `times`.
    pub fn evolve_grid(&self, rho0: &CMatrix, times: &[f64]) -> Result<Vec<CMatrix>> {
        validate_density_matrix(rho0, self.dim())?;
        let u = &self.eig.vectors;
        let u_dag = u.adjoint();
        // rho0 in the energy eigenbasis
        let rho_e = u_dag.matmul(rho0)?.matmul(u)?;
        let n = self.dim();
        let lambda = &self.eig.eigenvalues;
        times
            .iter()
            .map(|&t| {
                let mut rt = rho_e.clone();
                for a in 0..n {
                    for b in 0..n {
                        let phase = -(lambda[a] - lambda[b]) * t;
                        rt[(a, b)] *= Complex::from_polar(1.0, phase);
                    }
                }
                u.matmul(&rt)?.matmul(&u_dag)
            })
            .collect()
    }

    pub fn evolve_exact(&self, rho0: &CMatrix, t: f64) -> Result<CMatrix> {
        if t == 0.0 {
            validate_density_matrix(rho0, self.dim())?;
            return Ok(rho0.clone());
        }
        Ok(self.evolve_grid(rho0, &[t])?.remove(0))
    }

    /// Reduced system states `tr_E rho(t)` along the grid.
    pub fn reduced_states(&self, rho0: &CMatrix, times: &[f64]) -> Result<Vec<CMatrix>> {
        self.evolve_grid(rho0, times)?.iter().map(|r| partial_trace_env(r, self.d_s, self.d_e)).collect()
    }

    /// Bloch vector of the (two-level) system along the grid.
    pub fn reduced_bloch(&self, rho0: &CMatrix, times: &[f64]) -> Result<Vec<BlochVector>> {
        if self.d_s != 2 {
            return Err(Error::DimensionMismatch(format!("Bloch vectors need a two-level system, d_s = {}", self.d_s)));
        }
        Ok(self.reduced_states(rho0, times)?.iter().map(bloch_from_density).collect())
    }
}

/// `v1 = 2 Re rho_{+-}`, `v2 = -2 Im rho_{+-}`, `v3 = rho_{++} - rho_{--}`.
pub fn bloch_from_density(rho: &CMatrix) -> BlochVector {
    let coh = rho[(0, 1)];
    BlochVector { v1: 2.0 * coh.re, v2: -2.0 * coh.im, v3: (rho[(0, 0)] - rho[(1, 1)]).re }
}

/// `rho_S = (I + v . sigma)/2`.
pub fn density_from_bloch(v: &BlochVector) -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 0)] = Complex::new(0.5 * (1.0 + v.v3), 0.0);
    m[(1, 1)] = Complex::new(0.5 * (1.0 - v.v3), 0.0);
    m[(0, 1)] = Complex::new(0.5 * v.v1, -0.5 * v.v2);
    m[(1, 0)] = Complex::new(0.5 * v.v1, 0.5 * v.v2);
    m
}

/// Hermitian, unit trace, and positive semidefinite, each within [`STATE_TOL`].
pub fn validate_density_matrix(rho: &CMatrix, dim: usize) -> Result<()> {
    if rho.rows() != dim || rho.cols() != dim {
        return Err(Error::DimensionMismatch(format!(
            "density matrix is {}x{}, expected {dim}x{dim}",
            rho.rows(),
            rho.cols()
        )));
    }
    let defect = rho.hermiticity_defect();
    if defect > STATE_TOL {
        return Err(Error::InvalidState(format!("not Hermitian (defect {defect:e})")));
    }
    let tr = rho.trace();
    if (tr - Complex::new(1.0, 0.0)).norm() > STATE_TOL {
        return Err(Error::InvalidState(format!("trace {tr} != 1")));
    }
    let min_eig = herm_eig(rho)?.eigenvalues[0];
    if min_eig < -STATE_TOL {
        return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
    }
    Ok(())
}

/// Pauli ladder operators `sigma_+ = |+><-|` and `sigma_-`, basis `(|+>, |->)`.
pub fn sigma_plus() -> CMatrix {
    CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).expect("2x2")
}

pub fn sigma_minus() -> CMatrix {
    sigma_plus().adjoint()
}

/// Collective bath lowering operator `J_- = sum_i sigma_-^(i)` on `2^N` product
/// states. Bit `i` of the basis index is 0 for spin `i` up, 1 for down.
pub fn collective_lowering(n_bath: u32) -> CMatrix {
    let dim = 1usize << n_bath;
    let mut j_minus = CMatrix::zeros(dim, dim);
    for b in 0..dim {
        for i in 0..n_bath {
            let bit = 1usize << i;
            if b & bit == 0 {
                j_minus[(b | bit, b)] += Complex::new(1.0, 0.0);
            }
        }
    }
    j_minus
}

/// `2 J_3 = sum_i sigma_3^(i)`.
pub fn collective_z2(n_bath: u32) -> CMatrix {
    let dim = 1usize << n_bath;
    let diag: Vec<Complex> =
        (0..dim).map(|b| Complex::new(f64::from(n_bath) - 2.0 * f64::from((b as u32).count_ones()), 0.0)).collect();
    CMatrix::diagonal(&diag)
}

/// `H = (2A/sqrt(N)) (sigma_+ (x) J_- + sigma_- (x) J_+)`, system factor first.
pub fn spinstar_hamiltonian(params: &SpinStarParams) -> Result<CMatrix> {
    if params.n_bath > MAX_ORACLE_BATH {
        return Err(Error::InvalidParameter(format!(
            "oracle supports n_bath <= {MAX_ORACLE_BATH}, got {}",
            params.n_bath
        )));
    }
    let j_minus = collective_lowering(params.n_bath);
    let j_plus = j_minus.adjoint();
    let scale = Complex::new(2.0 * params.coupling / f64::from(params.n_bath).sqrt(), 0.0);
    Ok(kron(&sigma_plus(), &j_minus).add(&kron(&sigma_minus(), &j_plus))?.scale(scale))
}

pub fn build_spinstar(params: &SpinStarParams) -> Result<ComposedModel> {
    let h = spinstar_hamiltonian(params)?;
    h.ensure_hermitian(HERMITIAN_TOL)?;
    ComposedModel::new(h, 2, 1 << params.n_bath)
}

/// `rho_S (x) 2^-N I`.
pub fn spinstar_initial_state(rho_s: &CMatrix, n_bath: u32) -> CMatrix {
    let d_e = 1usize << n_bath;
    kron(rho_s, &CMatrix::identity(d_e).scale(Complex::new(1.0 / d_e as f64, 0.0)))
}
