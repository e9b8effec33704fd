//! Small dense complex matrices and vectors.
//!
//! Storage is row-major. Everything here is sized for the handful-of-qubits
//! Hilbert spaces the engines and the exact propagator work on; there is no
//! blocking or SIMD.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex = Complex64;

pub const ZERO: Complex = Complex::new(0.0, 0.0);
pub const ONE: Complex = Complex::new(1.0, 0.0);
/// The imaginary unit.
pub const I: Complex = Complex::new(0.0, 1.0);

fn all_finite(entries: &[Complex]) -> bool {
    entries.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CVector {
    entries: Vec<Complex>,
}

impl CVector {
    pub fn new(entries: Vec<Complex>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::DimensionMismatch("vector must have dim >= 1".into()));
        }
        if !all_finite(&entries) {
            return Err(Error::NonFinite("vector entries"));
        }
        Ok(Self { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "vector dim must be >= 1");
        Self { entries: vec![ZERO; dim] }
    }

    /// Computational basis vector `|index⟩`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.entries[index] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.entries
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, c: Complex) -> Self {
        Self { entries: self.entries.iter().map(|z| z * c).collect() }
    }

    pub fn scale_mut(&mut self, c: Complex) {
        self.entries.iter_mut().for_each(|z| *z *= c);
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &CVector) -> Complex {
        debug_assert_eq!(self.dim(), other.dim());
        self.entries.iter().zip(&other.entries).map(|(a, b)| a.conj() * b).sum()
    }

    /// Dyad `|self⟩⟨other|`.
    pub fn outer(&self, other: &CVector) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), other.dim());
        for (i, a) in self.entries.iter().enumerate() {
            for (j, b) in other.entries.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        m
    }

    pub fn kron(&self, other: &CVector) -> CVector {
        let mut entries = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.entries {
            entries.extend(other.entries.iter().map(|b| a * b));
        }
        CVector { entries }
    }

    pub fn max_abs_diff(&self, other: &CVector) -> f64 {
        self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }
}

impl Index<usize> for CVector {
    type Output = Complex;
    fn index(&self, i: usize) -> &Complex {
        &self.entries[i]
    }
}

impl IndexMut<usize> for CVector {
    fn index_mut(&mut self, i: usize) -> &mut Complex {
        &mut self.entries[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!("matrix must be at least 1x1, got {rows}x{cols}")));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if !all_finite(&entries) {
            return Err(Error::NonFinite("matrix entries"));
        }
        Ok(Self { rows, cols, entries })
    }

    /// Builds a matrix from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<Complex>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!("row {i} has {} entries, expected {cols}", r.len())));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let rows: Vec<Vec<Complex>> = rows.iter().map(|r| r.iter().map(|&x| Complex::new(x, 0.0)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix must be at least 1x1");
        Self { rows, cols, entries: vec![ZERO; rows * cols] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![ONE; dim])
    }

    pub fn diagonal(diag: &[Complex]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex] {
        &self.entries
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex] {
        &mut self.entries
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, c: Complex) -> Self {
        Self { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(|z| z * c).collect() }
    }

    pub fn scale_mut(&mut self, c: Complex) {
        self.entries.iter_mut().for_each(|z| *z *= c);
    }

    fn check_same_shape(&self, other: &CMatrix, what: &str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "{what}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &CMatrix) -> Result<Self> {
        self.check_same_shape(other, "add")?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, entries })
    }

    pub fn sub(&self, other: &CMatrix) -> Result<Self> {
        self.check_same_shape(other, "sub")?;
        let entries = self.entries.iter().zip(&other.entries).map(|(a, b)| a - b).collect();
        Ok(Self { rows: self.rows, cols: self.cols, entries })
    }

    /// `self += c * other`.
    pub fn add_scaled_mut(&mut self, c: Complex, other: &CMatrix) -> Result<()> {
        self.check_same_shape(other, "add_scaled")?;
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn matmul(&self, other: &CMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul: {}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.entries[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.entries[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let b_row = &other.entries[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &CVector) -> Result<CVector> {
        if self.cols != v.dim() {
            return Err(Error::DimensionMismatch(format!("mul_vec: {}x{} * dim {}", self.rows, self.cols, v.dim())));
        }
        let entries = (0..self.rows)
            .map(|i| {
                self.entries[i * self.cols..(i + 1) * self.cols].iter().zip(v.as_slice()).map(|(a, b)| a * b).sum()
            })
            .collect();
        Ok(CVector { entries })
    }

    /// Largest entrywise modulus of `self - self^dagger`.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut defect = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                defect = defect.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        defect
    }

    pub fn ensure_hermitian(&self, tol: f64) -> Result<()> {
        let defect = self.hermiticity_defect();
        if defect > tol {
            return Err(Error::NotHermitian { defect, tol });
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Frobenius (Hilbert-Schmidt) norm squared.
    pub fn frobenius_sqr(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex;
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        debug_assert!(i < self.rows && j < self.cols);
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.entries[i * self.cols + j]
    }
}

/// Kronecker product; entry `(i*b.rows + k, j*b.cols + l)` is `a[i,j] * b[k,l]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = CMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Traces out the environment factor of a `(d_s*d_e)`-square matrix whose
/// basis is ordered system-major.
pub fn partial_trace_env(m: &CMatrix, d_s: usize, d_e: usize) -> Result<CMatrix> {
    if d_s == 0 || d_e == 0 || m.rows != d_s * d_e || m.cols != d_s * d_e {
        return Err(Error::DimensionMismatch(format!(
            "partial trace of {}x{} matrix with d_s={d_s}, d_e={d_e}",
            m.rows, m.cols
        )));
    }
    let mut out = CMatrix::zeros(d_s, d_s);
    for i in 0..d_s {
        for j in 0..d_s {
            out[(i, j)] = (0..d_e).map(|k| m[(i * d_e + k, j * d_e + k)]).sum();
        }
    }
    Ok(out)
}
