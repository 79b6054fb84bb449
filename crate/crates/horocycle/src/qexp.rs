//! Exact q-expansions over ℤ.
//!
//! A [`QExpansion`] is a truncated power series Σ aₙ qⁿ with big-integer
//! coefficients and a weight tag that is checked under multiplication. The
//! arithmetic is plain schoolbook convolution: these expansions exist to be
//! *obviously correct* — they serve as oracles for the fast modular
//! pipeline and as the exact reference in tests — not to be fast. Keep the
//! lengths modest (a few thousand terms).

use num_bigint::BigInt;
use num_traits::Zero;

use crate::{Error, Result};

/// Truncated q-expansion of a modular form of the tagged weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QExpansion {
    pub weight: u32,
    pub coeffs: Vec<BigInt>,
}

impl QExpansion {
    pub fn new(weight: u32, coeffs: Vec<BigInt>) -> Self {
        QExpansion { weight, coeffs }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, n: usize) -> &BigInt {
        &self.coeffs[n]
    }

    /// Product, truncated to the shorter operand's length; weights add.
    pub fn mul(&self, rhs: &QExpansion) -> QExpansion {
        let len = self.len().min(rhs.len());
        let mut out = vec![BigInt::zero(); len];
        for (i, a) in self.coeffs.iter().take(len).enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().take(len - i).enumerate() {
                if !b.is_zero() {
                    out[i + j] += a * b;
                }
            }
        }
        QExpansion::new(self.weight + rhs.weight, out)
    }

    pub fn pow(&self, e: u32) -> QExpansion {
        let mut out = QExpansion::new(0, {
            let mut c = vec![BigInt::zero(); self.len()];
            c[0] = BigInt::from(1);
            c
        });
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Difference of two forms of equal weight.
    pub fn sub(&self, rhs: &QExpansion) -> QExpansion {
        assert_eq!(self.weight, rhs.weight, "weights must match");
        let len = self.len().min(rhs.len());
        let coeffs = (0..len).map(|i| &self.coeffs[i] - &rhs.coeffs[i]).collect();
        QExpansion::new(self.weight, coeffs)
    }

    /// Exact division by an integer scalar; panics if any coefficient
    /// fails to divide (used on identities like (E₄³−E₆²)/1728 where exact
    /// divisibility is part of the claim being exercised).
    pub fn div_exact(&self, d: i64) -> QExpansion {
        let d = BigInt::from(d);
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                let (q, r) = num_integer::Integer::div_rem(c, &d);
                assert!(r.is_zero(), "coefficient not divisible");
                q
            })
            .collect();
        QExpansion::new(self.weight, coeffs)
    }
}

/// Eisenstein series E_w = 1 − (2w/B_w) Σ σ_{w−1}(n) qⁿ for the weights
/// w ∈ {4, 6, 8, 10, 14} where the space of modular forms is spanned by it.
pub fn eisenstein_qexp(weight: u32, len: usize) -> Result<QExpansion> {
    let c: i64 = match weight {
        4 => 240,
        6 => -504,
        8 => 480,
        10 => -264,
        14 => -24,
        _ => return Err(Error::EisensteinWeight(weight)),
    };
    let mut coeffs = vec![BigInt::zero(); len.max(1)];
    coeffs[0] = BigInt::from(1);
    for d in 1..len as u64 {
        let pw = BigInt::from(d).pow(weight - 1) * c;
        let mut m = d as usize;
        while m < len {
            coeffs[m] += &pw;
            m += d as usize;
        }
    }
    Ok(QExpansion::new(weight, coeffs))
}

/// Δ = (E₄³ − E₆²)/1728, the normalized weight-12 cusp form, computed from
/// the Eisenstein identity (*not* from its product formula, so it is an
/// independent check against anything η-based).
pub fn delta_qexp(len: usize) -> QExpansion {
    let e4 = eisenstein_qexp(4, len).unwrap();
    let e6 = eisenstein_qexp(6, len).unwrap();
    e4.pow(3).sub(&e6.mul(&e6)).div_exact(1728)
}

/// η-quotient route to Δ: q·∏(1−qⁿ)²⁴ via the pentagonal expansion of φ.
pub fn delta_eta_qexp(len: usize) -> QExpansion {
    let mut phi = QExpansion::new(0, vec![BigInt::zero(); len.max(1)]);
    for (e, s) in crate::series::phi_sparse(len) {
        phi.coeffs[e] = BigInt::from(s);
    }
    let phi24 = phi.pow(24);
    let mut coeffs = vec![BigInt::zero(); len];
    for n in 1..len {
        coeffs[n] = phi24.coeffs[n - 1].clone();
    }
    QExpansion::new(12, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_from_two_routes() {
        let a = delta_qexp(200);
        let b = delta_eta_qexp(200);
        assert_eq!(a.coeffs, b.coeffs);
        assert_eq!(a.weight, 12);
        assert!(a.coeff(0).is_zero());
        assert_eq!(a.coeff(1), &BigInt::from(1));
        assert_eq!(a.coeff(2), &BigInt::from(-24));
        assert_eq!(a.coeff(12), &BigInt::from(-370944));
        // Ramanujan congruence: tau(n) ≡ sigma_11(n) mod 691
        let e12_sum = |n: u64| -> BigInt {
            (1..=n).filter(|d| n % d == 0).map(|d| BigInt::from(d).pow(11)).sum()
        };
        for n in 1..50u64 {
            let diff = a.coeff(n as usize) - e12_sum(n);
            assert!((diff % BigInt::from(691)).is_zero(), "congruence at {n}");
        }
    }

    #[test]
    fn eisenstein_identities_exact() {
        let len = 120;
        let e4 = eisenstein_qexp(4, len).unwrap();
        let e6 = eisenstein_qexp(6, len).unwrap();
        let e8 = eisenstein_qexp(8, len).unwrap();
        let e10 = eisenstein_qexp(10, len).unwrap();
        let e14 = eisenstein_qexp(14, len).unwrap();
        assert_eq!(e4.mul(&e4).coeffs, e8.coeffs);
        assert_eq!(e4.mul(&e6).coeffs, e10.coeffs);
        assert_eq!(e8.mul(&e6).coeffs, e14.coeffs);
        assert_eq!(e4.mul(&e4).weight, 8);
    }

    #[test]
    fn rejected_weights() {
        assert!(matches!(eisenstein_qexp(12, 10), Err(Error::EisensteinWeight(12))));
        assert!(matches!(eisenstein_qexp(5, 10), Err(Error::EisensteinWeight(5))));
    }

    #[test]
    fn arithmetic_bookkeeping() {
        let one = QExpansion::new(0, vec![BigInt::from(1), BigInt::from(2)]);
        let sq = one.mul(&one);
        assert_eq!(sq.coeffs, vec![BigInt::from(1), BigInt::from(4)]);
        assert_eq!(one.pow(3).coeffs, vec![BigInt::from(1), BigInt::from(6)]);
        let z = one.sub(&one);
        assert!(z.coeffs.iter().all(|c| c.is_zero()));
    }
}
