//! Dense complex linear algebra, special functions, and random sampling.

mod eig;
mod linalg;
mod random;
mod special;

pub use eig::{herm_eig, herm_eig_with_tol, HermEig, HERMITIAN_TOL};
pub use linalg::{kron, partial_trace_env, CMatrix, CVector, Complex, I, ONE, ZERO};
pub use random::{sample_discrete, sample_exponential, sample_poisson, DiscreteSampler, RngStream};
pub use special::{erfi, erfi_series, ln_factorial, log_binomial, poisson_pmf, scaled_poisson_sum, ERFI_SUPPORT};
