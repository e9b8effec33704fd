//! Hermitian eigendecomposition, backed by nalgebra's symmetric QR solver.

use nalgebra::DMatrix;

use super::linalg::{CMatrix, Complex};
use crate::error::{Error, Result};

/// Entrywise tolerance on `|m - m^dagger|` accepted as Hermitian input.
pub const HERMITIAN_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct HermEig {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors, ordered like `eigenvalues`.
    pub vectors: CMatrix,
}

impl HermEig {
    /// `U diag(f(lambda)) U^dagger`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> Complex) -> CMatrix {
        let n = self.eigenvalues.len();
        let u = &self.vectors;
        let mut out = CMatrix::zeros(n, n);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = f(lambda);
            for i in 0..n {
                let uik = u[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += uik * u[(j, k)].conj();
                }
            }
        }
        out
    }
}

pub fn herm_eig(m: &CMatrix) -> Result<HermEig> {
    herm_eig_with_tol(m, HERMITIAN_TOL)
}

pub fn herm_eig_with_tol(m: &CMatrix, tol: f64) -> Result<HermEig> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("herm_eig needs a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    m.ensure_hermitian(tol)?;
    let n = m.rows();
    // Symmetrize so the solver (which reads one triangle) sees exact Hermitian data.
    let dm = DMatrix::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()));
    let eig = dm.try_symmetric_eigen(f64::EPSILON, MAX_SWEEPS).ok_or(Error::NonConvergence)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, col)] = eig.eigenvectors[(i, k)];
        }
    }
    Ok(HermEig { eigenvalues, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(rng.random_range(-1.0..1.0), 0.0);
            for j in i + 1..n {
                let z = Complex::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        m
    }

    #[test]
    fn diagonal_input() {
        let e = herm_eig(&CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 2.0]);
        assert!(e.vectors[(0, 0)].norm() > 1.0 - 1e-15);
        assert!(e.vectors[(1, 1)].norm() > 1.0 - 1e-15);
    }

    #[test]
    fn pauli_x() {
        let e = herm_eig(&CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()).unwrap();
        assert!((e.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(herm_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn reconstruction_and_unitarity_64() {
        let m = random_hermitian(64, 11);
        let e = herm_eig(&m).unwrap();
        assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let rec = e.reconstruct_with(|l| Complex::new(l, 0.0));
        assert!(rec.max_abs_diff(&m) <= 1e-9, "residual {}", rec.max_abs_diff(&m));
        let utu = e.vectors.adjoint().matmul(&e.vectors).unwrap();
        assert!(utu.max_abs_diff(&CMatrix::identity(64)) <= 1e-9);
    }
}
