//! Inputs shared by the benchmarks in `benches/`.

use pdpstar_core::{CMatrix, Complex, RngStream};

/// Seeded random Hermitian matrix with entries in `[-0.5, 0.5)`.
pub fn random_hermitian(d: usize, seed: u64) -> CMatrix {
    let mut rng = RngStream::new(seed, 0);
    let mut m = CMatrix::zeros(d, d);
    for i in 0..d {
        m[(i, i)] = Complex::new(rng.uniform() - 0.5, 0.0);
        for j in i + 1..d {
            let z = Complex::new(rng.uniform() - 0.5, rng.uniform() - 0.5);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

#[cfg(test)]
mod tests {
    #[test]
    fn hermitian() {
        let m = super::random_hermitian(8, 1);
        assert_eq!(m.hermiticity_defect(), 0.0);
    }
}
