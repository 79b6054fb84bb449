//! Hecke eigenforms for the modular group and the L² mass of their
//! horocycle restrictions.
//!
//! The crate constructs the holomorphic Hecke eigenforms of even weight
//! k ≤ 300 for SL₂(ℤ) with exact integer linear algebra, normalizes their
//! Fourier coefficients à la Deligne (λ_f(n) = a_f(n)/n^{(k−1)/2}), and
//! evaluates
//!
//! ```text
//!   ∫₀¹ y^k |f(x + iy)|² dx
//! ```
//!
//! through its Parseval expansion with a certified truncation window. On top
//! of that sit the symmetric-square L-value estimators that calibrate the
//! Petersson normalization, short-interval sums of λ(n)², and diagnostic
//! sweeps of the restricted norm over a geometric grid of heights y.
//!
//! Construction is exact end to end: q-expansions are multiplied modulo
//! word-sized primes with number-theoretic transforms and recombined by the
//! Chinese remainder theorem, Hecke matrices and characteristic polynomials
//! live in `BigInt`, eigenvalues are isolated by exact sign evaluation, and
//! only the final eigenvector solve rounds — into a fixed-precision binary
//! float with 128- or 256-bit mantissa whose rounding error is tracked per
//! table entry.
//!
//! # Quick start
//!
//! ```
//! use horocycle::{cusp_dim, eigenforms};
//!
//! assert_eq!(cusp_dim(12), 1);
//! let forms = eigenforms(12, 100).unwrap();
//! let delta = &forms[0];
//! // Ramanujan: λ(2) = τ(2)/2^{11/2} = -24/2^{5.5}
//! assert!((delta.lambda_f64(2) - (-24.0 / 2f64.powf(5.5))).abs() < 1e-12);
//! ```

pub mod arith;
pub mod cache;
pub mod engine;
pub mod modp;
pub mod mpf;
pub mod qexp;
pub mod restriction;
pub mod series;
pub mod short_interval;
pub mod sym2;
pub mod tolerances;

#[cfg(doctest)]
pub mod book;

pub use arith::divisor_count;
pub use engine::{
    cusp_dim, eigenforms, eigenforms_with, hecke_matrix, miller_basis, Eigenform,
    EigenformRequest, VerifyReport,
};
pub use mpf::Mpf;
pub use qexp::{delta_qexp, eisenstein_qexp, QExpansion};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong while constructing or evaluating eigenforms.
///
/// Failures of mathematical invariants (Deligne bound, simultaneity of the
/// Hecke action, eigenvalue separation) are reported as errors rather than
/// silently absorbed: each of them means the requested object was *not*
/// certified and nothing downstream may use it.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("weight {0} carries no cusp forms")]
    ZeroDimension(u32),
    #[error("weight must be an even integer >= 4, got {0}")]
    BadWeight(u32),
    #[error("series length {needed} exceeds the supported cap {cap} at dimension {dim}")]
    SeriesTooLong { needed: u64, cap: u64, dim: u32 },
    #[error("T_2 eigenvalues at weight {weight} could not be separated (gap below {gap:.3e})")]
    EigenvalueCollision { weight: u32, gap: f64 },
    #[error("integer reconstruction at weight {weight} still inconsistent with {primes} primes")]
    ReconstructionFailed { weight: u32, primes: usize },
    #[error("eigenvector at weight {weight} fails the T_3 commutation check (residual {residual:.3e})")]
    NotSimultaneous { weight: u32, residual: f64 },
    #[error("certified tail {tail:.3e} exceeds the requested tolerance {eps:.3e}")]
    TailTooLarge { tail: f64, eps: f64 },
    #[error("divisor-count envelope certified only for n <= {range}, needed {needed}")]
    EnvelopeRange { range: u64, needed: u64 },
    #[error("Deligne bound violated at n = {n} by {excess:.3e}; construction is corrupt")]
    DeligneViolation { n: u64, excess: f64 },
    #[error("table does not cover n = {n} (len {len}, prime cutoff {cutoff})")]
    OutOfTable { n: u64, len: u64, cutoff: u64 },
    #[error("unsupported Eisenstein weight {0}; integral q-expansions exist for 4, 6, 8, 10, 14")]
    EisensteinWeight(u32),
    #[error("cache file rejected: {0}")]
    CacheFormat(String),
    #[error("cache io: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid request: {0}")]
    BadRequest(String),
}
