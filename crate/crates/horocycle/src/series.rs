//! Classical q-series reduced modulo NTT primes.
//!
//! The eigenform builder works a prime at a time, so the base series it
//! consumes — Eisenstein series E_w = 1 − (2w/B_w)·Σ σ_{w−1}(n)qⁿ, the Euler
//! product φ = ∏(1−qⁿ) in its sparse pentagonal form, and
//! Δ = q·φ²⁴ — are generated directly in 𝔽_p rather than over ℤ. (Exact
//! integer expansions, used as test oracles and in the public API, live in
//! [`crate::qexp`].)

use crate::modp::{powmod, NttPrime};

/// Nonzero terms of φ = ∏_{n≥1}(1−qⁿ) = Σ_k (−1)^k q^{k(3k−1)/2} with
/// exponents below `len`, as (exponent, ±1) pairs.
pub fn phi_sparse(len: usize) -> Vec<(usize, i8)> {
    let mut terms = vec![(0usize, 1i8)];
    let mut k = 1u64;
    loop {
        let g_plus = (k * (3 * k - 1) / 2) as usize;
        let g_minus = (k * (3 * k + 1) / 2) as usize;
        let sign = if k % 2 == 1 { -1 } else { 1 };
        if g_plus >= len {
            break;
        }
        terms.push((g_plus, sign));
        if g_minus < len {
            terms.push((g_minus, sign));
        }
        k += 1;
    }
    terms.sort_unstable();
    terms
}

/// σ_r(n) mod p for 0 ≤ n < len (index 0 is unused and left zero).
pub fn sigma_modp(r: u32, len: usize, pr: &NttPrime) -> Vec<u64> {
    let p = pr.p;
    let mut out = vec![0u64; len];
    for d in 1..len as u64 {
        let pw = powmod(d, r as u64, p);
        let mut m = d as usize;
        while m < len {
            out[m] += pw;
            if out[m] >= p {
                out[m] -= p;
            }
            m += d as usize;
        }
    }
    out
}

/// E_w mod p to `len` coefficients, for w ∈ {0, 4, 6, 8, 10, 14} (the
/// weights with one-dimensional M_w, plus the empty product E_0 = 1).
pub fn eisenstein_modp(w: u32, len: usize, pr: &NttPrime) -> Vec<u64> {
    assert!(len >= 1);
    let p = pr.p;
    if w == 0 {
        let mut out = vec![0u64; len];
        out[0] = 1;
        return out;
    }
    // -2w/B_w for the one-dimensional weights
    let c: i64 = match w {
        4 => 240,
        6 => -504,
        8 => 480,
        10 => -264,
        14 => -24,
        _ => panic!("no Eisenstein generator of weight {w} here"),
    };
    let c = if c < 0 { p - (-c) as u64 } else { c as u64 };
    let mut out = sigma_modp(w - 1, len, pr);
    for x in out.iter_mut() {
        *x = crate::modp::mulmod(*x, c, p);
    }
    out[0] = 1;
    out
}

/// Dense φ mod p.
pub fn phi_modp(len: usize, pr: &NttPrime) -> Vec<u64> {
    let mut out = vec![0u64; len];
    for (e, s) in phi_sparse(len) {
        out[e] = if s > 0 { 1 } else { pr.p - 1 };
    }
    out
}

/// Δ = q·φ²⁴ mod p to `len` coefficients.
pub fn delta_modp(len: usize, pr: &NttPrime) -> Vec<u64> {
    assert!(len >= 2);
    let phi = phi_modp(len, pr);
    let phi2 = pr.poly_mul(&phi, &phi, len);
    let phi3 = pr.poly_mul(&phi2, &phi, len);
    let phi6 = pr.poly_mul(&phi3, &phi3, len);
    let phi12 = pr.poly_mul(&phi6, &phi6, len);
    let phi24 = pr.poly_mul(&phi12, &phi12, len);
    let mut out = vec![0u64; len];
    out[1..].copy_from_slice(&phi24[..len - 1]);
    out
}
