//! Construction of Hecke eigenforms: exact echelon bases, Hecke matrices,
//! certified eigenvalues, and normalized coefficient tables.
//!
//! For even weight k ≥ 12 the cusp space S_k(SL₂(ℤ)) has dimension
//! d = ⌊k/12⌋ − [k ≡ 2 (mod 12)] and a monomial basis
//! g_j = Δ^j·E₆^{2(d−j)}·E_e, j = 1..d, where e ∈ {0, 4, 6, 8, 10, 14} is
//! picked so the weights match. Since a_{g_j}(j) = 1 and a_{g_j}(i) = 0 for
//! i < j, the block (a_{g_m}(i))_{m,i ≤ d} is unit upper triangular, and the
//! reduced (Victor Miller) basis f_i — characterized by a_{f_i}(j) = δ_ij
//! for j ≤ d — falls out of one back-substitution per coefficient position.
//!
//! All series arithmetic runs modulo 62-bit NTT primes, one residue stream
//! per prime, glued back together by the Chinese remainder theorem and
//! confirmed against a held-out verifier prime. The monomials come from a
//! downward ladder — g_{j−1} = (g_j ⊛ V)/q with V = E₆²·(Δ/q)⁻¹ — so one
//! weight costs d convolutions per prime, and the power Δ^d is kept warm
//! between weights.
//!
//! Eigenvalues of T₂ are the roots of its characteristic polynomial
//! (Faddeev–LeVerrier modulo each prime, then CRT). Roots are isolated by
//! exact sign evaluation on an integer grid inside the Deligne disc
//! |a(2)| ≤ 2·2^{(k−1)/2}, polished by a safeguarded Newton iteration in
//! fixed-precision arithmetic, and certified by exact sign evaluation at
//! dyadic rationals. Eigenvectors come from inverse iteration, and every
//! table is cross-examined — unit block, Deligne bound, coprime
//! multiplicativity, Hecke recursion at prime powers, T₂/T₃ commutation —
//! before it is handed out.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use num_bigint::{BigInt, BigUint, Sign};

use crate::arith::{divisor_count_table, splitmix64, Sieve};
use crate::modp::{
    bigint_mod_u64, is_prime_u64, ntt_prime, powmod, primes_for_bits, CrtBasis, Mont, NttPrime,
    Scale,
};
use crate::mpf::{FloatExp, Mpf};
use crate::series::{eisenstein_modp, phi_modp};
use crate::tolerances::{EIGEN_GAP_MIN, SIMULTANEITY_MAX};
use crate::{Error, Result};

/// dim S_k for level one: ⌊k/12⌋, minus one when k ≡ 2 (mod 12); zero for
/// odd k, k < 12 and k = 14.
pub fn cusp_dim(weight: u32) -> usize {
    if weight % 2 == 1 || weight < 12 {
        return 0;
    }
    let d = (weight / 12) as usize;
    if weight % 12 == 2 {
        d - 1
    } else {
        d
    }
}

/// (dimension, Eisenstein tail weight e) for a weight that carries cusp
/// forms; rejects everything else.
fn weight_shape(weight: u32) -> Result<(usize, u32)> {
    if weight % 2 == 1 || weight < 4 {
        return Err(Error::BadWeight(weight));
    }
    let d = cusp_dim(weight);
    if d == 0 {
        return Err(Error::ZeroDimension(weight));
    }
    let mut e = weight % 12;
    if e == 2 {
        e += 12;
    }
    debug_assert_eq!(12 * d as u32 + e, weight);
    Ok((d, e))
}

// ---------------------------------------------------------------------------
// per-prime series ladder

/// Shared per-(prime, series-length) state: spectra of the fixed series the
/// monomial ladder multiplies by, and a running power of Δ that consecutive
/// weights reuse instead of rebuilding.
struct LadderState {
    bucket: usize,
    log2n: u32, // transform size = 2·bucket
    phi24: Vec<u64>,
    delta_spec: Vec<u64>,
    v_spec: Option<Vec<u64>>, // lazy: one-dimensional spaces never step the ladder
    e_spec: [Option<Vec<u64>>; 8], // indexed by e/2
    delta_pow: Vec<u64>,
    pow_exp: usize,
}

/// Forward transform of `a` zero-padded to `size`.
fn spectrum(pr: &NttPrime, a: &[u64], size: usize) -> Vec<u64> {
    let tw = pr.twiddles(size.trailing_zeros());
    let mut f = vec![0u64; size];
    f[..a.len()].copy_from_slice(a);
    pr.ntt_fwd(&mut f, &tw);
    f
}

/// First `bucket` coefficients of a ⊛ s, where `spec` is the forward
/// transform of s at size 2·bucket. Both inputs have fewer than `bucket`
/// terms of interest, so the cyclic product never wraps.
fn conv_with_spec(pr: &NttPrime, log2n: u32, bucket: usize, a: &[u64], spec: &[u64]) -> Vec<u64> {
    let tw = pr.twiddles(log2n);
    let mut f = vec![0u64; spec.len()];
    f[..a.len()].copy_from_slice(a);
    pr.ntt_fwd(&mut f, &tw);
    pr.pointwise_mont(&mut f, spec);
    pr.ntt_inv(&mut f, &tw, Scale::Conv);
    f.truncate(bucket);
    pr.reduce_slice(&mut f);
    f
}

impl LadderState {
    fn new(pr: &NttPrime, bucket: usize) -> Self {
        let size = 2 * bucket;
        let log2n = size.trailing_zeros();
        // φ²⁴ = Δ/q by three squarings of φ³
        let phi = phi_modp(bucket, pr);
        let phi3 = pr.poly_mul(&pr.poly_mul(&phi, &phi, bucket), &phi, bucket);
        let phi6 = pr.poly_mul(&phi3, &phi3, bucket);
        let phi12 = pr.poly_mul(&phi6, &phi6, bucket);
        let phi24 = pr.poly_mul(&phi12, &phi12, bucket);
        let mut delta = vec![0u64; bucket];
        delta[1..].copy_from_slice(&phi24[..bucket - 1]);
        let delta_spec = spectrum(pr, &delta, size);
        LadderState {
            bucket,
            log2n,
            phi24,
            delta_spec,
            v_spec: None,
            e_spec: Default::default(),
            delta_pow: Vec::new(),
            pow_exp: 0,
        }
    }

    fn delta_series(&self) -> Vec<u64> {
        let mut d = vec![0u64; self.bucket];
        d[1..].copy_from_slice(&self.phi24[..self.bucket - 1]);
        d
    }

    /// V = E₆²·(Δ/q)⁻¹: one ladder step divides out a Δ and restores E₆².
    /// The series inverse is the priciest setup step, so it waits until a
    /// multi-dimensional space actually walks the ladder.
    fn ensure_v(&mut self, pr: &NttPrime) {
        if self.v_spec.is_some() {
            return;
        }
        let inv24 = pr.series_inverse(&self.phi24, self.bucket);
        let e6 = eisenstein_modp(6, self.bucket, pr);
        let e6sq = pr.poly_mul(&e6, &e6, self.bucket);
        let v = pr.poly_mul(&e6sq, &inv24, self.bucket);
        self.v_spec = Some(spectrum(pr, &v, 2 * self.bucket));
    }

    /// Bring Δ^pow_exp to Δ^exp: small increments multiply by Δ, anything
    /// else (including the dips at k ≡ 2 mod 12) rebuilds by binary powering.
    fn set_pow(&mut self, pr: &NttPrime, exp: usize) {
        debug_assert!(exp >= 1);
        if self.pow_exp == exp {
            return;
        }
        if self.pow_exp != 0 && self.pow_exp < exp && exp - self.pow_exp <= 4 {
            while self.pow_exp < exp {
                self.delta_pow =
                    conv_with_spec(pr, self.log2n, self.bucket, &self.delta_pow, &self.delta_spec);
                self.pow_exp += 1;
            }
            return;
        }
        let mut acc: Option<Vec<u64>> = None;
        let mut base = self.delta_series();
        let mut e = exp;
        loop {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => pr.poly_mul(&a, &base, self.bucket),
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = pr.poly_mul(&base, &base, self.bucket);
        }
        self.delta_pow = acc.expect("exp >= 1");
        self.pow_exp = exp;
    }

    fn ensure_e(&mut self, pr: &NttPrime, e: u32) {
        let idx = (e / 2) as usize;
        if self.e_spec[idx].is_none() {
            let series = eisenstein_modp(e, self.bucket, pr);
            self.e_spec[idx] = Some(spectrum(pr, &series, 2 * self.bucket));
        }
    }
}

fn ladder_state(prime_index: usize, bucket: usize) -> Arc<Mutex<LadderState>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Mutex<LadderState>>>>> =
        OnceLock::new();
    let map = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = map.lock().unwrap();
    map.entry((prime_index, bucket))
        .or_insert_with(|| {
            Arc::new(Mutex::new(LadderState::new(&ntt_prime(prime_index), bucket)))
        })
        .clone()
}

fn gather(g: &[u64], positions: &[u64]) -> Vec<u64> {
    positions.iter().map(|&n| g[n as usize]).collect()
}

/// a_{g_m}(n) mod p at the requested positions for every monomial
/// g_m = Δ^m·E₆^{2(d−m)}·E_e, m = 1..=d, walking the ladder downward from
/// g_d = Δ^d·E_e. Canonical residues.
fn monomial_rows(
    pr: &NttPrime,
    state: &mut LadderState,
    d: usize,
    e: u32,
    positions: &[u64],
) -> Vec<Vec<u64>> {
    let bucket = state.bucket;
    let maxpos = *positions.last().unwrap() as usize;
    // each of the d−1 shifts forfeits one valid coefficient at the top
    assert!(maxpos + d + 1 <= bucket, "series bucket too small for positions");
    if d >= 2 {
        state.ensure_v(pr);
    }
    state.set_pow(pr, d);
    let mut g = if e == 0 {
        state.delta_pow.clone()
    } else {
        state.ensure_e(pr, e);
        let spec = state.e_spec[(e / 2) as usize].as_ref().unwrap();
        conv_with_spec(pr, state.log2n, bucket, &state.delta_pow, spec)
    };
    let mut rows = vec![Vec::new(); d];
    rows[d - 1] = gather(&g, positions);
    for j in (1..d).rev() {
        let prod = conv_with_spec(pr, state.log2n, bucket, &g, state.v_spec.as_ref().unwrap());
        // g_j has no constant term, so neither does g_j ⊛ V
        debug_assert_eq!(prod[0], 0);
        g = prod[1..].to_vec();
        rows[j - 1] = gather(&g, positions);
    }
    rows
}

#[inline]
fn norm(x: u64, p: u64) -> u64 {
    if x >= p {
        x - p
    } else {
        x
    }
}

/// Back-substitute the unit-triangular monomial block to get the reduced
/// basis values b_i(n) = a_{f_i}(n) mod p at every position. Returns
/// (canonical residues, Montgomery residues), each d × positions.
fn solve_echelon(
    pr: &NttPrime,
    rows: &[Vec<u64>],
    positions: &[u64],
    d: usize,
) -> (Vec<Vec<u64>>, Vec<Vec<u64>>) {
    let mont = &pr.mont;
    let p = pr.p;
    let npos = positions.len();
    let rows_m: Vec<Vec<u64>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| norm(mont.to_mont(x), p)).collect())
        .collect();
    let idx: Vec<usize> = (1..=d as u64)
        .map(|i| positions.binary_search(&i).expect("positions must contain 1..=d"))
        .collect();
    let mut bm = vec![vec![0u64; npos]; d];
    for c in 0..npos {
        for m in (1..=d).rev() {
            // x_m = g_m(n) − Σ_{i>m} a_{g_m}(i)·x_i
            let mut acc: u128 = 0;
            for i in (m + 1)..=d {
                acc += mont.mul(rows_m[m - 1][idx[i - 1]], bm[i - 1][c]) as u128;
            }
            let s = (acc % p as u128) as u64;
            bm[m - 1][c] = norm(rows_m[m - 1][c] + p - s, p);
        }
    }
    let plain: Vec<Vec<u64>> = bm
        .iter()
        .map(|r| r.iter().map(|&x| mont.from_mont(x)).collect())
        .collect();
    (plain, bm)
}

// ---------------------------------------------------------------------------
// characteristic polynomial mod p

fn mat_mul_mont(mont: &Mont, x: &[Vec<u64>], y: &[Vec<u64>], p: u64) -> Vec<Vec<u64>> {
    let d = x.len();
    let mut out = vec![vec![0u64; d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut acc: u128 = 0;
            for l in 0..d {
                acc += mont.mul(x[i][l], y[l][j]) as u128;
            }
            out[i][j] = (acc % p as u128) as u64;
        }
    }
    out
}

/// Coefficients c_1..c_d of det(xI − T₂) mod p by the Faddeev–LeVerrier
/// recurrence on the Montgomery-form matrix. `bm` holds Montgomery residues
/// of the reduced basis values at `positions` ⊇ {1..2d}.
fn charpoly_modp(
    pr: &NttPrime,
    bm: &[Vec<u64>],
    positions: &[u64],
    d: usize,
    weight: u32,
) -> Vec<u64> {
    let mont = &pr.mont;
    let p = pr.p;
    let idx = |n: u64| positions.binary_search(&n).expect("position missing");
    let pw2 = norm(mont.to_mont(powmod(2 % p, weight as u64 - 1, p)), p);
    // T₂ in the reduced basis: M[i][j] = b_j(2i) + 2^{k−1}·b_j(i/2) for even i
    let mut m = vec![vec![0u64; d]; d];
    for i in 1..=d {
        for j in 1..=d {
            let mut x = bm[j - 1][idx(2 * i as u64)];
            if i % 2 == 0 {
                x = norm(x + norm(mont.mul(pw2, bm[j - 1][idx(i as u64 / 2)]), p), p);
            }
            m[i - 1][j - 1] = norm(x, p);
        }
    }
    let inv_m: Vec<u64> = (0..=d)
        .map(|j| if j == 0 { 0 } else { norm(mont.to_mont(powmod(j as u64, p - 2, p)), p) })
        .collect();
    // A₁ = M, c_j = −tr(A_j)/j, A_{j+1} = M·(A_j + c_j I)
    let mut a = m.clone();
    let mut c_m = vec![0u64; d + 1];
    for j in 1..=d {
        if j > 1 {
            for (i, row) in a.iter_mut().enumerate() {
                row[i] = norm(row[i] + c_m[j - 1], p);
            }
            a = mat_mul_mont(mont, &m, &a, p);
        }
        let mut tr: u128 = 0;
        for (i, row) in a.iter().enumerate() {
            tr += row[i] as u128;
        }
        let tr = (tr % p as u128) as u64;
        let cj = norm(mont.mul(tr, inv_m[j]), p);
        c_m[j] = if cj == 0 { 0 } else { p - cj };
    }
    // Cayley–Hamilton: M·(A_d + c_d I) must vanish identically
    #[cfg(debug_assertions)]
    {
        let mut ad = a.clone();
        for (i, row) in ad.iter_mut().enumerate() {
            row[i] = norm(row[i] + c_m[d], p);
        }
        for row in mat_mul_mont(mont, &m, &ad, p) {
            for x in row {
                debug_assert_eq!(mont.from_mont(x), 0, "Cayley-Hamilton failed mod {p}");
            }
        }
    }
    (1..=d).map(|j| mont.from_mont(c_m[j])).collect()
}

// ---------------------------------------------------------------------------
// CRT with a held-out verifier prime

/// Reconstruct a family of integers from residue streams, checking every
/// value against one extra prime that did not enter the basis; on mismatch
/// the basis grows by 8 primes and the check repeats. Returns
/// (values, basis size, retries, max bits).
fn crt_verified<F>(weight: u32, np0: usize, mut residues: F) -> Result<(Vec<BigInt>, usize, usize, u64)>
where
    F: FnMut(usize) -> Vec<u64>,
{
    let mut cached: Vec<Vec<u64>> = Vec::new();
    let mut np = np0.max(1);
    for attempt in 0..3 {
        while cached.len() <= np {
            cached.push(residues(cached.len()));
        }
        let primes: Vec<u64> = (0..np).map(|i| ntt_prime(i).p).collect();
        let basis = CrtBasis::new(&primes);
        let verifier = ntt_prime(np).p;
        let nvals = cached[0].len();
        let mut out = Vec::with_capacity(nvals);
        let mut max_bits = 0u64;
        let mut ok = true;
        let mut rs = vec![0u64; np];
        for v in 0..nvals {
            for (i, r) in rs.iter_mut().enumerate() {
                *r = cached[i][v];
            }
            let x = basis.reconstruct(&rs);
            if bigint_mod_u64(&x, verifier) != cached[np][v] {
                ok = false;
                break;
            }
            max_bits = max_bits.max(x.bits());
            out.push(x);
        }
        if ok {
            return Ok((out, np, attempt, max_bits));
        }
        np += 8;
    }
    Err(Error::ReconstructionFailed { weight, primes: np })
}

// ---------------------------------------------------------------------------
// extraction positions

/// Everything the table build has to read off the echelon basis: the unit
/// block and Hecke rows (1..=3d), all primes below the table length, prime
/// powers of p ≤ 13 for recursion checks, 64 reproducible composite spot
/// positions, and any sparse primes up to the cutoff.
fn extraction_positions(weight: u32, d: usize, len: usize, cutoff: u64, sieve: &Sieve) -> Vec<u64> {
    let mut set: Vec<u64> = (1..=3 * d as u64).collect();
    for &p in &sieve.primes {
        if (p as usize) < len || p <= cutoff {
            set.push(p);
        } else {
            break;
        }
    }
    for p in [2u64, 3, 5, 7, 11, 13] {
        let mut q = p * p;
        while (q as usize) < len {
            set.push(q);
            q *= p;
        }
    }
    if len > 8 {
        let mut s = weight as u64;
        let mut found = 0;
        let mut attempts = 0;
        while found < 64 && attempts < 10_000 {
            attempts += 1;
            let n = 4 + splitmix64(&mut s) % (len as u64 - 4);
            if !sieve.is_prime(n) {
                set.push(n);
                found += 1;
            }
        }
    }
    set.sort_unstable();
    set.dedup();
    set
}

/// All coprime pairs 2 ≤ m < n with mn ≤ 10⁴, built once.
fn coprime_pairs() -> &'static [(u32, u32)] {
    static PAIRS: OnceLock<Vec<(u32, u32)>> = OnceLock::new();
    PAIRS.get_or_init(|| {
        let mut v = Vec::new();
        for m in 2usize..=5000 {
            for n in m + 1..=10_000 / m {
                if num_integer::gcd(m, n) == 1 {
                    v.push((m as u32, n as u32));
                }
            }
        }
        v
    })
}

// ---------------------------------------------------------------------------
// root isolation and polishing

enum Root {
    Exact(BigInt),
    Bracket { lo: BigInt, hi: BigInt, sign_lo: i32 },
}

fn sign_of(x: &BigInt) -> i32 {
    match x.sign() {
        Sign::Minus => -1,
        Sign::NoSign => 0,
        Sign::Plus => 1,
    }
}

/// Sign of the monic polynomial (descending coefficients) at an integer.
fn horner_sign(coeffs: &[BigInt], x: &BigInt) -> i32 {
    let mut v = coeffs[0].clone();
    for c in &coeffs[1..] {
        v = v * x + c;
    }
    sign_of(&v)
}

/// Exact sign at the dyadic rational num·2^pow2.
fn horner_sign_dyadic(coeffs: &[BigInt], num: &BigInt, pow2: i64) -> i32 {
    if pow2 >= 0 {
        return horner_sign(coeffs, &(num << pow2 as u32));
    }
    // P(num/2^s)·2^{sd} = Σ c_j·num^{d−j}·2^{sj}, evaluated by Horner
    let s = (-pow2) as u32;
    let mut v = coeffs[0].clone();
    for (j, c) in coeffs[1..].iter().enumerate() {
        v = v * num + (c << (s * (j as u32 + 1)));
    }
    sign_of(&v)
}

/// Isolate the d real roots of the characteristic polynomial by exact sign
/// counting on an integer grid over the Deligne disc, refining until the
/// count matches the degree. Success certifies that every returned interval
/// contains exactly one simple root (and that all roots are real).
fn isolate_roots(coeffs: &[BigInt], weight: u32) -> Result<Vec<Root>> {
    let d = coeffs.len() - 1;
    let bound: BigInt =
        BigInt::from(2) * BigInt::from(BigUint::from(2u32).pow(weight - 1).sqrt()) + BigInt::from(2);
    let mut n: u64 = 4096;
    loop {
        let step = (&bound * BigInt::from(2) + BigInt::from(n - 1)) / BigInt::from(n);
        let mut roots: Vec<Root> = Vec::new();
        let mut prev: Option<(BigInt, i32)> = None;
        let mut zeros_since = 0usize;
        let mut t = -bound.clone();
        for _ in 0..=n {
            let s = horner_sign(coeffs, &t);
            if s == 0 {
                roots.push(Root::Exact(t.clone()));
                zeros_since += 1;
            } else {
                if let Some((pt, ps)) = &prev {
                    if *ps != s && zeros_since == 0 {
                        roots.push(Root::Bracket { lo: pt.clone(), hi: t.clone(), sign_lo: *ps });
                    }
                }
                prev = Some((t.clone(), s));
                zeros_since = 0;
            }
            if t >= bound {
                break;
            }
            t += &step;
        }
        if roots.len() == d {
            return Ok(roots);
        }
        assert!(roots.len() < d, "isolated more intervals than the degree admits");
        let gap = 4.0 / n as f64;
        if gap <= EIGEN_GAP_MIN {
            return Err(Error::EigenvalueCollision { weight, gap });
        }
        n *= 4;
    }
}

fn horner_mpf(coeffs: &[Mpf], x: &Mpf) -> Mpf {
    let mut v = coeffs[0];
    for c in &coeffs[1..] {
        v = v.mul(x).add(c);
    }
    v
}

/// Polish one isolated root to full mantissa precision and certify the
/// result: the returned (value, err) pair has exact opposite signs at
/// value ± err, checked in integer arithmetic at dyadic rationals.
fn polish_root(coeffs: &[BigInt], root: &Root, nlimbs: u8, weight: u32) -> (Mpf, Mpf) {
    let d = coeffs.len() - 1;
    let (lo, hi, sign_lo) = match root {
        Root::Exact(t) => {
            let (v, inexact) = Mpf::from_bigint(t, nlimbs);
            let err = if inexact {
                v.abs().mul_pow2(1 - 64 * nlimbs as i64)
            } else {
                Mpf::zero(nlimbs)
            };
            return (v, err);
        }
        Root::Bracket { lo, hi, sign_lo } => (lo, hi, *sign_lo),
    };
    let pc: Vec<Mpf> = coeffs.iter().map(|c| Mpf::from_bigint(c, nlimbs).0).collect();
    let pd: Vec<Mpf> = (0..d)
        .map(|j| Mpf::from_bigint(&(&coeffs[j] * BigInt::from((d - j) as u64)), nlimbs).0)
        .collect();
    let half = Mpf::from_f64(0.5, nlimbs);
    // magnitude floor so the convergence test survives a root near zero
    let scale_floor = Mpf::from_i64(1, nlimbs).mul_pow2((weight as i64 + 3) / 2 - 10);
    let thresh = |x: &Mpf| -> Mpf {
        let ax = x.abs();
        let m = if ax < scale_floor { scale_floor } else { ax };
        m.mul_pow2(6 - 64 * nlimbs as i64)
    };
    let mut flo = Mpf::from_bigint(lo, nlimbs).0;
    let mut fhi = Mpf::from_bigint(hi, nlimbs).0;
    let mut x = flo.add(&fhi).mul(&half);
    let mut last_step = fhi.sub(&flo).abs();
    for _ in 0..400 {
        let fx = horner_mpf(&pc, &x);
        if fx.signum() == 0 {
            last_step = Mpf::zero(nlimbs);
            break;
        }
        if fx.signum() == sign_lo {
            flo = x;
        } else {
            fhi = x;
        }
        let dfx = horner_mpf(&pd, &x);
        let mut xn = if dfx.signum() == 0 {
            flo.add(&fhi).mul(&half)
        } else {
            x.sub(&fx.div(&dfx))
        };
        if !(flo < xn && xn < fhi) {
            xn = flo.add(&fhi).mul(&half);
        }
        last_step = xn.sub(&x).abs();
        x = xn;
        if !(last_step > thresh(&x)) {
            break;
        }
    }
    // certify by exact signs at x ± ε, widening on failure
    let mut eps = last_step.add(&thresh(&x)).mul_pow2(2);
    for _ in 0..6 {
        let (na, pa) = x.sub(&eps).to_dyadic();
        let (nb, pb) = x.add(&eps).to_dyadic();
        let sa = horner_sign_dyadic(coeffs, &na, pa);
        let sb = horner_sign_dyadic(coeffs, &nb, pb);
        if sa == 0 || sb == 0 || sa != sb {
            return (x, eps);
        }
        eps = eps.mul_pow2(4);
    }
    // certification refused to close around the Newton result: fall back to
    // exact dyadic bisection of the original bracket
    let mut an = lo.clone();
    let mut bn = hi.clone();
    let mut s: i64 = 0;
    for _ in 0..(64 * nlimbs as i64 + 96) {
        let mut m = &an + &bn;
        if m.bit(0) {
            an <<= 1u32;
            bn <<= 1u32;
            s += 1;
            m = &an + &bn;
        }
        m >>= 1u32;
        let sm = horner_sign_dyadic(coeffs, &m, -s);
        if sm == 0 {
            an = m.clone();
            bn = m;
            break;
        }
        if sm == sign_lo {
            an = m;
        } else {
            bn = m;
        }
    }
    let value = Mpf::from_bigint(&(&an + &bn), nlimbs).0.mul_pow2(-s - 1);
    let err = Mpf::from_bigint(&(&bn - &an), nlimbs).0.mul_pow2(-s).add(&thresh(&value));
    (value, err)
}

// ---------------------------------------------------------------------------
// eigenvectors and assembly

/// Inverse iteration on M − r·I with LU partial pivoting: two solves from
/// the all-ones vector, normalized to v₁ = 1. Returns (v, per-coordinate
/// difference of the two iterates) — the difference feeds the error budget.
fn inverse_iteration(m: &[Vec<Mpf>], r: &Mpf, nlimbs: u8) -> (Vec<Mpf>, Vec<Mpf>) {
    let d = m.len();
    let one = Mpf::from_i64(1, nlimbs);
    let zero = Mpf::zero(nlimbs);
    if d == 1 {
        return (vec![one], vec![zero]);
    }
    let mut a: Vec<Vec<Mpf>> = (0..d)
        .map(|i| (0..d).map(|j| if i == j { m[i][j].sub(r) } else { m[i][j] }).collect())
        .collect();
    let mut maxab = zero;
    for row in &a {
        for x in row {
            let ax = x.abs();
            if ax > maxab {
                maxab = ax;
            }
        }
    }
    if maxab.is_zero() {
        maxab = one;
    }
    let tiny = maxab.mul_pow2(-(64 * nlimbs as i64 - 8));
    let mut perm: Vec<usize> = (0..d).collect();
    for col in 0..d {
        let mut best = col;
        for row in col + 1..d {
            if a[row][col].abs() > a[best][col].abs() {
                best = row;
            }
        }
        if best != col {
            a.swap(col, best);
            perm.swap(col, best);
        }
        if a[col][col].abs() < tiny {
            // the shifted matrix is singular by construction; a floor pivot
            // is exactly what inverse iteration wants
            a[col][col] = if a[col][col].signum() < 0 { tiny.neg() } else { tiny };
        }
        let piv = a[col][col];
        for row in col + 1..d {
            let l = a[row][col].div(&piv);
            a[row][col] = l;
            for j in col + 1..d {
                let t = l.mul(&a[col][j]);
                a[row][j] = a[row][j].sub(&t);
            }
        }
    }
    fn solve(a: &[Vec<Mpf>], perm: &[usize], b: &[Mpf]) -> Vec<Mpf> {
        let d = perm.len();
        let mut y: Vec<Mpf> = perm.iter().map(|&i| b[i]).collect();
        for i in 1..d {
            for j in 0..i {
                let t = a[i][j].mul(&y[j]);
                y[i] = y[i].sub(&t);
            }
        }
        for i in (0..d).rev() {
            let mut v = y[i];
            for j in i + 1..d {
                v = v.sub(&a[i][j].mul(&y[j]));
            }
            y[i] = v.div(&a[i][i]);
        }
        y
    }
    let normalize = |z: Vec<Mpf>| -> Vec<Mpf> {
        let z0 = if z[0].is_zero() { tiny } else { z[0] };
        z.iter().map(|x| x.div(&z0)).collect()
    };
    let ones = vec![one; d];
    let v1 = normalize(solve(&a, &perm, &ones));
    let v2 = normalize(solve(&a, &perm, &v1));
    let dv = (0..d).map(|i| v2[i].sub(&v1[i]).abs()).collect();
    (v2, dv)
}

/// T_p in the reduced basis, exactly: M[i][j] = b_j(p·i) + p^{k−1}·b_j(i/p).
fn hecke_block(
    bvals: &[Vec<BigInt>],
    positions: &[u64],
    d: usize,
    weight: u32,
    p: u64,
) -> Vec<Vec<BigInt>> {
    let idx = |n: u64| positions.binary_search(&n).expect("position missing");
    let pk = BigInt::from(p).pow(weight - 1);
    (1..=d)
        .map(|i| {
            (1..=d)
                .map(|j| {
                    let mut x = bvals[j - 1][idx(p * i as u64)].clone();
                    if (i as u64) % p == 0 {
                        x += &pk * &bvals[j - 1][idx(i as u64 / p)];
                    }
                    x
                })
                .collect()
        })
        .collect()
}

/// n^{(k−1)/2} with guard bits through an integer square root (the
/// exponent is half-integral for even k).
fn pow_half(n: u64, weight: u32, nlimbs: u8) -> Mpf {
    let g = 64 * nlimbs as i64 + 8;
    let m = BigUint::from(n).pow(weight - 1) << (2 * g as u32);
    Mpf::from_biguint_scaled(&m.sqrt(), -g, nlimbs).0
}

fn recip_pow(n: u64, weight: u32, nlimbs: u8) -> Mpf {
    Mpf::from_i64(1, nlimbs).div(&pow_half(n, weight, nlimbs))
}

fn fe_abs(x: FloatExp) -> FloatExp {
    FloatExp { m: x.m.abs(), e: x.e }
}

/// Worst normalized residual of (M − a·I)v over the rows, where a is the
/// given eigenvalue (or w₁ = (Mv)₁ when none is passed). Row i lives at the
/// scale of a(p·i), so it is normalized by (p·i)^{−(k−1)/2}.
fn commutation_residual(
    mat: &[Vec<BigInt>],
    v: &[Mpf],
    eig: Option<&Mpf>,
    weight: u32,
    p: u64,
    nlimbs: u8,
) -> f64 {
    let d = v.len();
    let w: Vec<Mpf> = (0..d)
        .map(|i| {
            let mut acc = Mpf::zero(nlimbs);
            for j in 0..d {
                let (b, _) = Mpf::from_bigint(&mat[i][j], nlimbs);
                acc = acc.add(&b.mul(&v[j]));
            }
            acc
        })
        .collect();
    let a = *eig.unwrap_or(&w[0]);
    let mut worst = 0f64;
    for i in 0..d {
        let res = w[i].sub(&a.mul(&v[i]));
        let scale = recip_pow(p * (i as u64 + 1), weight, nlimbs);
        let t = FloatExp::from_mpf(&res.mul(&scale)).to_f64().abs();
        if t > worst {
            worst = t;
        }
    }
    worst
}

// ---------------------------------------------------------------------------
// public surface

/// Build parameters for [`eigenforms_with`]. Zero-valued fields pick the
/// defaults: table length max(20001, 100k+1), prime cutoff at the table
/// edge (no sparse section), mantissa width 2 limbs for k ≤ 100 else 4.
#[derive(Clone, Debug)]
pub struct EigenformRequest {
    pub weight: u32,
    pub table_len: usize,
    pub prime_cutoff: u64,
    pub verify: bool,
    pub nlimbs: u8,
}

impl EigenformRequest {
    pub fn new(weight: u32) -> Self {
        EigenformRequest { weight, table_len: 0, prime_cutoff: 0, verify: true, nlimbs: 0 }
    }

    /// The request with defaults filled in: (table length, prime cutoff,
    /// mantissa limbs).
    pub fn resolved(&self) -> Result<(usize, u64, u8)> {
        let (d, _) = weight_shape(self.weight)?;
        let len = if self.table_len == 0 {
            20_001usize.max(100 * self.weight as usize + 1)
        } else {
            self.table_len
        }
        .max(3 * d + 2);
        let cutoff = if self.prime_cutoff == 0 {
            (len - 1) as u64
        } else {
            self.prime_cutoff.max((len - 1) as u64)
        };
        let nlimbs = if self.nlimbs == 0 {
            if self.weight <= 100 {
                2
            } else {
                4
            }
        } else {
            self.nlimbs
        };
        if nlimbs != 2 && nlimbs != 4 {
            return Err(Error::BadRequest(format!(
                "mantissa width must be 2 or 4 limbs, got {nlimbs}"
            )));
        }
        Ok((len, cutoff, nlimbs))
    }
}

/// What the construction measured about itself. Residuals and deviations
/// are in λ-normalized units where genuine rounding sits many orders below
/// every threshold that guards them.
#[derive(Clone, Debug, serde::Serialize)]
pub struct VerifyReport {
    pub weight: u32,
    pub dim: usize,
    pub table_len: usize,
    pub prime_cutoff: u64,
    /// CRT basis size for the echelon values / the characteristic polynomial.
    pub primes_used: usize,
    pub charpoly_primes: usize,
    pub retries: usize,
    pub max_coeff_bits: u64,
    pub charpoly_bits: u64,
    /// Worst certified eigenvalue error, as an absolute error on λ(2).
    pub eigen_err_max: f64,
    /// Worst tracked table error |Δλ(n)| over all forms and entries.
    pub table_err_max: f64,
    /// min over n of d(n) + tolerance − |λ(n)|; nonnegative ⇔ Deligne holds.
    pub deligne_margin: f64,
    pub mult_checks: usize,
    pub mult_max_dev: f64,
    pub recursion_max_dev: f64,
    pub spot_checks: usize,
    pub spot_max_dev: f64,
    pub t2_residual: f64,
    pub t3_residual: f64,
    pub build_seconds: f64,
}

/// One normalized Hecke eigenform: λ(n) = a(n)/n^{(k−1)/2} tabulated densely
/// for 0 < n < table_len, plus an optional sparse section of larger primes,
/// with a tracked absolute error per entry.
#[derive(Clone, Debug)]
pub struct Eigenform {
    pub weight: u32,
    /// Position among the weight's forms, ordered by increasing a(2).
    pub index: usize,
    pub dim: usize,
    pub(crate) nlimbs: u8,
    pub(crate) cutoff: u64,
    pub(crate) table: Vec<Mpf>,
    pub(crate) table_err: Vec<f64>,
    pub(crate) sparse: Vec<(u64, Mpf, f64)>,
    /// Certified eigenvalue error, as an absolute error on λ(2).
    pub eigen_err: f64,
}

impl Eigenform {
    pub fn table_len(&self) -> usize {
        self.table.len()
    }

    /// Largest n guaranteed answerable for prime n.
    pub fn prime_cutoff(&self) -> u64 {
        self.cutoff
    }

    pub fn nlimbs(&self) -> u8 {
        self.nlimbs
    }

    pub fn lambda_mpf(&self, n: u64) -> Result<Mpf> {
        if n >= 1 && (n as usize) < self.table.len() {
            return Ok(self.table[n as usize]);
        }
        if let Ok(i) = self.sparse.binary_search_by_key(&n, |t| t.0) {
            return Ok(self.sparse[i].1);
        }
        Err(Error::OutOfTable { n, len: self.table.len() as u64, cutoff: self.cutoff })
    }

    pub fn try_lambda(&self, n: u64) -> Result<f64> {
        self.lambda_mpf(n).map(|x| x.to_f64())
    }

    /// λ(n) as a double; panics outside the tabulated range.
    pub fn lambda_f64(&self, n: u64) -> f64 {
        self.try_lambda(n).expect("n outside the tabulated range")
    }

    /// Tracked absolute error of λ(n); panics outside the tabulated range.
    pub fn lambda_err(&self, n: u64) -> f64 {
        if n >= 1 && (n as usize) < self.table.len() {
            return self.table_err[n as usize];
        }
        match self.sparse.binary_search_by_key(&n, |t| t.0) {
            Ok(i) => self.sparse[i].2,
            Err(_) => panic!("n outside the tabulated range"),
        }
    }
}

/// The reduced echelon basis of S_k to `len` coefficients, exactly:
/// row i (1-based) holds a_{f_i}(0..len) with a_{f_i}(j) = δ_ij for j ≤ d.
pub fn miller_basis(weight: u32, len: usize) -> Result<Vec<Vec<BigInt>>> {
    let (d, e) = weight_shape(weight)?;
    if len <= d {
        return Err(Error::BadRequest(format!(
            "echelon basis needs at least {} coefficients at weight {weight}",
            d + 1
        )));
    }
    if d * len > 2_000_000 {
        return Err(Error::BadRequest(format!(
            "echelon basis of {d}×{len} coefficients is too large to reconstruct"
        )));
    }
    check_series_cap(len as u64 - 1 + d as u64 + 2, d)?;
    let positions: Vec<u64> = (0..len as u64).collect();
    let bucket = (len + d + 2).next_power_of_two().max(64);
    let provider = |i: usize| -> Vec<u64> {
        let pr = ntt_prime(i);
        let state = ladder_state(i, bucket);
        let mut state = state.lock().unwrap();
        let rows = monomial_rows(&pr, &mut state, d, e, &positions);
        let (plain, _) = solve_echelon(&pr, &rows, &positions, d);
        plain.concat()
    };
    let bits = basis_bits(weight, d, (len - 1).max(2) as u64);
    let (flat, _, _, _) = crt_verified(weight, primes_for_bits(bits), provider)?;
    let rows: Vec<Vec<BigInt>> = flat.chunks(len).map(|c| c.to_vec()).collect();
    for (i, row) in rows.iter().enumerate() {
        for j in 1..=d.min(len - 1) {
            let want = BigInt::from(u32::from(i + 1 == j));
            assert_eq!(row[j], want, "echelon unit block corrupt at weight {weight}");
        }
    }
    Ok(rows)
}

/// The matrix of T_p on the reduced echelon basis, exactly.
pub fn hecke_matrix(weight: u32, p: u64) -> Result<Vec<Vec<BigInt>>> {
    let (d, e) = weight_shape(weight)?;
    if !is_prime_u64(p) {
        return Err(Error::BadRequest(format!("Hecke operator index must be prime, got {p}")));
    }
    let maxpos = p
        .checked_mul(d as u64)
        .ok_or_else(|| Error::BadRequest(format!("T_{p} is out of reach")))?;
    check_series_cap(maxpos + d as u64 + 2, d)?;
    let mut positions: Vec<u64> = (1..=d as u64).collect();
    positions.extend((1..=d as u64).map(|i| p * i));
    positions.sort_unstable();
    positions.dedup();
    let bucket = (maxpos as usize + d + 2).next_power_of_two().max(64);
    let provider = |i: usize| -> Vec<u64> {
        let pr = ntt_prime(i);
        let state = ladder_state(i, bucket);
        let mut state = state.lock().unwrap();
        let rows = monomial_rows(&pr, &mut state, d, e, &positions);
        let (plain, _) = solve_echelon(&pr, &rows, &positions, d);
        plain.concat()
    };
    let bits = basis_bits(weight, d, maxpos);
    let (flat, _, _, _) = crt_verified(weight, primes_for_bits(bits), provider)?;
    let npos = positions.len();
    let bvals: Vec<Vec<BigInt>> = flat.chunks(npos).map(|c| c.to_vec()).collect();
    Ok(hecke_block(&bvals, &positions, d, weight, p))
}

/// All eigenforms of the given weight with default settings; `table_len` = 0
/// picks the default length.
pub fn eigenforms(weight: u32, table_len: usize) -> Result<Vec<Eigenform>> {
    let req = EigenformRequest { table_len, ..EigenformRequest::new(weight) };
    eigenforms_with(&req).map(|(forms, _)| forms)
}

/// Size heuristic for the echelon values: |a_{f_i}(n)| ≲ d(n)·n^{(k−1)/2}
/// inflated by the unit-triangular reduction; the verifier prime catches an
/// undershoot and triggers a wider basis.
fn basis_bits(weight: u32, d: usize, maxpos: u64) -> f64 {
    (weight as f64 - 1.0) / 2.0 * (maxpos.max(2) as f64).log2() + 16.0 * d as f64 + 80.0
}

fn check_series_cap(needed: u64, d: usize) -> Result<()> {
    let cap = if d == 1 { 500_000 } else { 200_000 };
    if needed > cap {
        return Err(Error::SeriesTooLong { needed, cap, dim: d as u32 });
    }
    Ok(())
}

/// Full pipeline: echelon values, T₂ spectrum, eigenvectors, normalized
/// tables, and the verification battery. Forms come out ordered by
/// increasing a(2).
pub fn eigenforms_with(req: &EigenformRequest) -> Result<(Vec<Eigenform>, VerifyReport)> {
    let t0 = Instant::now();
    let weight = req.weight;
    let (d, e) = weight_shape(weight)?;
    let (len, cutoff, nlimbs) = req.resolved()?;
    check_series_cap(cutoff + d as u64 + 2, d)?;

    let sieve = Sieve::new((len - 1).max(cutoff as usize));
    let positions = extraction_positions(weight, d, len, cutoff, &sieve);
    let npos = positions.len();
    let maxpos = *positions.last().unwrap();
    let bucket = (maxpos as usize + d + 2).next_power_of_two().max(64);

    // phase one: echelon values at the extraction positions
    let provider = |i: usize| -> Vec<u64> {
        let pr = ntt_prime(i);
        let state = ladder_state(i, bucket);
        let mut state = state.lock().unwrap();
        let rows = monomial_rows(&pr, &mut state, d, e, &positions);
        let (plain, _) = solve_echelon(&pr, &rows, &positions, d);
        plain.concat()
    };
    let (flat, primes_used, retries_a, max_coeff_bits) =
        crt_verified(weight, primes_for_bits(basis_bits(weight, d, maxpos)), provider)?;
    let bvals: Vec<Vec<BigInt>> = flat.chunks(npos).map(|c| c.to_vec()).collect();
    for i in 1..=d {
        for j in 1..=d {
            let c = positions.binary_search(&(j as u64)).unwrap();
            let want = BigInt::from(u32::from(i == j));
            assert_eq!(bvals[i - 1][c], want, "echelon unit block corrupt at weight {weight}");
        }
    }

    // phase two: characteristic polynomial of T₂ over a small dedicated
    // ladder (its coefficients need more primes than the values do, but only
    // positions up to 2d)
    let mini_positions: Vec<u64> = (1..=2 * d as u64).collect();
    let bucket_mini = (3 * d + 3).next_power_of_two().max(64);
    let char_provider = |i: usize| -> Vec<u64> {
        let pr = ntt_prime(i);
        let state = ladder_state(i, bucket_mini);
        let mut state = state.lock().unwrap();
        let rows = monomial_rows(&pr, &mut state, d, e, &mini_positions);
        let (_, bm) = solve_echelon(&pr, &rows, &mini_positions, d);
        charpoly_modp(&pr, &bm, &mini_positions, d, weight)
    };
    let bits_char = d as f64 * (weight as f64 + 1.0) / 2.0 + 2.0 * d as f64 + 64.0;
    let (cvec, charpoly_primes, retries_b, charpoly_bits) =
        crt_verified(weight, primes_for_bits(bits_char), char_provider)?;
    let mut coeffs = Vec::with_capacity(d + 1);
    coeffs.push(BigInt::from(1));
    coeffs.extend(cvec);

    // eigenvalues: isolate, polish, certify
    let roots = isolate_roots(&coeffs, weight)?;
    let polished: Vec<(Mpf, Mpf)> =
        roots.iter().map(|r| polish_root(&coeffs, r, nlimbs, weight)).collect();
    for w in polished.windows(2) {
        if !(w[0].0 < w[1].0) {
            // two isolated roots polished to the same working-precision value
            return Err(Error::EigenvalueCollision { weight, gap: 0.0 });
        }
    }

    let m2_int = hecke_block(&bvals, &positions, d, weight, 2);
    let m3_int = hecke_block(&bvals, &positions, d, weight, 3);
    // The echelon-basis matrix is badly non-normal: its eigenvector has
    // components a(1)..a(d), spanning d^{(k−1)/2} in scale, and that square
    // enters the eigenvector conditioning. Conjugating by D = diag(i^{(k−1)/2})
    // balances it — the balanced eigenvector holds the O(1) values λ(i).
    let sc: Vec<Mpf> = (1..=d as u64).map(|i| recip_pow(i, weight, nlimbs)).collect();
    let isc: Vec<Mpf> = (1..=d as u64).map(|i| pow_half(i, weight, nlimbs)).collect();
    let m2_bal: Vec<Vec<Mpf>> = m2_int
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, x)| Mpf::from_bigint(x, nlimbs).0.mul(&sc[i]).mul(&isc[j]))
                .collect()
        })
        .collect();

    // shared per-position data
    let b_mpf: Vec<Vec<Mpf>> = bvals
        .iter()
        .map(|row| row.iter().map(|x| Mpf::from_bigint(x, nlimbs).0).collect())
        .collect();
    let b_fe: Vec<Vec<FloatExp>> = bvals
        .iter()
        .map(|row| row.iter().map(|x| fe_abs(FloatExp::from_bigint(x))).collect())
        .collect();
    let recips: Vec<Mpf> = positions.iter().map(|&n| recip_pow(n, weight, nlimbs)).collect();
    let recip2 = recip_pow(2, weight, nlimbs);
    let dtbl = divisor_count_table(len - 1);
    let ulp = Mpf::ulp_rel(nlimbs);

    let mut forms = Vec::with_capacity(d);
    let mut report = VerifyReport {
        weight,
        dim: d,
        table_len: len,
        prime_cutoff: cutoff,
        primes_used,
        charpoly_primes,
        retries: retries_a + retries_b,
        max_coeff_bits,
        charpoly_bits,
        eigen_err_max: 0.0,
        table_err_max: 0.0,
        deligne_margin: f64::INFINITY,
        mult_checks: 0,
        mult_max_dev: 0.0,
        recursion_max_dev: 0.0,
        spot_checks: 0,
        spot_max_dev: 0.0,
        t2_residual: 0.0,
        t3_residual: 0.0,
        build_seconds: 0.0,
    };

    for (index, (root, root_err)) in polished.iter().enumerate() {
        let (w, dw) = inverse_iteration(&m2_bal, root, nlimbs);
        let v: Vec<Mpf> = (0..d).map(|i| w[i].mul(&isc[i])).collect();
        let dv: Vec<Mpf> = (0..d).map(|i| dw[i].mul(&isc[i])).collect();

        // commutation with T₂ (against the certified root) and T₃ (against
        // its own Rayleigh quotient): corruption shows up at O(1)
        let t2 = commutation_residual(&m2_int, &v, Some(root), weight, 2, nlimbs);
        let t3 = commutation_residual(&m3_int, &v, None, weight, 3, nlimbs);
        let residual = t2.max(t3);
        if !(residual <= SIMULTANEITY_MAX) {
            return Err(Error::NotSimultaneous { weight, residual });
        }
        report.t2_residual = report.t2_residual.max(t2);
        report.t3_residual = report.t3_residual.max(t3);

        // λ at the extraction positions, with a FloatExp error budget
        let ulp_fe = FloatExp::new(ulp);
        let wfe: Vec<FloatExp> = (0..d)
            .map(|i| {
                let vm = fe_abs(FloatExp::from_mpf(&v[i]));
                FloatExp::from_mpf(&dv[i]).add(&vm.mul(&ulp_fe).mul(&FloatExp::new(4.0)))
            })
            .collect();
        let mut lam_pos = Vec::with_capacity(npos);
        let mut err_pos = Vec::with_capacity(npos);
        for c in 0..npos {
            let mut acc = Mpf::zero(nlimbs);
            let mut fe = FloatExp::zero();
            for i in 0..d {
                acc = acc.add(&b_mpf[i][c].mul(&v[i]));
                fe = fe.add(&b_fe[i][c].mul(&wfe[i]));
            }
            fe = fe.add(
                &fe_abs(FloatExp::from_mpf(&acc)).mul(&ulp_fe).mul(&FloatExp::new(2.0 * d as f64)),
            );
            let l = acc.mul(&recips[c]);
            let e = fe.mul(&fe_abs(FloatExp::from_mpf(&recips[c]))).to_f64().abs()
                + l.to_f64().abs() * 4.0 * ulp;
            lam_pos.push(l);
            err_pos.push(e);
        }

        // dense table: primes from the extraction, prime powers by the Hecke
        // recursion, composites multiplicatively
        let pos_of = |n: u64| positions.binary_search(&n).ok();
        let mut table = vec![Mpf::zero(nlimbs); len];
        let mut terr = vec![0f64; len];
        table[1] = Mpf::from_i64(1, nlimbs);
        for n in 2..len {
            let p = sieve.min_factor[n] as usize;
            let mut m = n / p;
            while m % p == 0 {
                m /= p;
            }
            let pa = n / m;
            if m == 1 {
                if pa == p {
                    let c = pos_of(p as u64).expect("prime must be an extraction position");
                    table[n] = lam_pos[c];
                    terr[n] = err_pos[c];
                } else {
                    // λ(p)λ(p^{a−1}) = λ(p^a) + λ(p^{a−2})
                    let prev = pa / p;
                    let prev2 = prev / p;
                    table[n] = table[p].mul(&table[prev]).sub(&table[prev2]);
                    let lp = table[p].to_f64().abs();
                    let l1 = table[prev].to_f64().abs();
                    terr[n] = lp * terr[prev]
                        + l1 * terr[p]
                        + terr[p] * terr[prev]
                        + terr[prev2]
                        + (lp * l1 + table[prev2].to_f64().abs()) * 2.0 * ulp;
                }
            } else {
                table[n] = table[pa].mul(&table[m]);
                terr[n] = table[pa].to_f64().abs() * terr[m]
                    + table[m].to_f64().abs() * terr[pa]
                    + terr[pa] * terr[m]
                    + table[n].to_f64().abs() * ulp;
            }
        }

        // sparse section: primes beyond the table edge
        let mut sparse = Vec::new();
        for (c, &n) in positions.iter().enumerate() {
            if n as usize >= len {
                sparse.push((n, lam_pos[c], err_pos[c]));
            }
        }

        // battery: Deligne bound over everything we tabulated
        for n in 1..len {
            let lam = table[n].to_f64().abs();
            let cap = dtbl[n] as f64 + terr[n] + 1e-12;
            if lam > cap {
                return Err(Error::DeligneViolation { n: n as u64, excess: lam - cap });
            }
            report.deligne_margin = report.deligne_margin.min(cap - lam);
            report.table_err_max = report.table_err_max.max(terr[n]);
        }
        for &(n, l, er) in &sparse {
            let lam = l.to_f64().abs();
            let cap = 2.0 + er + 1e-12;
            if lam > cap {
                return Err(Error::DeligneViolation { n, excess: lam - cap });
            }
            report.deligne_margin = report.deligne_margin.min(cap - lam);
            report.table_err_max = report.table_err_max.max(er);
        }

        // battery: assembled values against the recursive/multiplicative fill
        for (c, &n) in positions.iter().enumerate() {
            let nu = n as usize;
            if nu >= len {
                continue;
            }
            let dev = lam_pos[c].sub(&table[nu]).to_f64().abs();
            let tol = 8.0 * (err_pos[c] + terr[nu]) + 1e-25;
            assert!(
                dev <= tol,
                "table self-check failed at weight {weight}, n = {n}: {dev:.3e} > {tol:.3e}"
            );
            report.spot_checks += 1;
            report.spot_max_dev = report.spot_max_dev.max(dev);
            let p = sieve.min_factor[nu] as u64;
            if p != 0 && p != n && n % (p * p) == 0 && {
                let mut q = n;
                while q % p == 0 {
                    q /= p;
                }
                q == 1
            } {
                report.recursion_max_dev = report.recursion_max_dev.max(dev);
            }
        }

        // battery: coprime multiplicativity λ(m)λ(n) = λ(mn)
        if req.verify {
            for &(a, b) in coprime_pairs() {
                let (a, b) = (a as usize, b as usize);
                let ab = a * b;
                if ab >= len {
                    continue;
                }
                let dev = table[a].mul(&table[b]).sub(&table[ab]).to_f64().abs();
                let la = table[a].to_f64().abs();
                let lb = table[b].to_f64().abs();
                let tol = 8.0 * (la * terr[b] + lb * terr[a] + terr[a] * terr[b] + terr[ab])
                    + (la * lb + table[ab].to_f64().abs()) * 4.0 * ulp
                    + 1e-25;
                assert!(
                    dev <= tol,
                    "multiplicativity failed at weight {weight}, {a}·{b}: {dev:.3e} > {tol:.3e}"
                );
                report.mult_checks += 1;
                report.mult_max_dev = report.mult_max_dev.max(dev);
            }
        }

        let eig = FloatExp::from_mpf(root_err).mul(&FloatExp::from_mpf(&recip2)).to_f64().abs();
        let eig = if eig == 0.0 && !root_err.is_zero() { 1e-300 } else { eig };
        report.eigen_err_max = report.eigen_err_max.max(eig);

        forms.push(Eigenform {
            weight,
            index,
            dim: d,
            nlimbs,
            cutoff,
            table,
            table_err: terr,
            sparse,
            eigen_err: eig,
        });
    }

    report.build_seconds = t0.elapsed().as_secs_f64();
    Ok((forms, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qexp::{delta_qexp, eisenstein_qexp, QExpansion};

    #[test]
    fn dimension_formula() {
        let known = [
            (12, 1),
            (14, 0),
            (16, 1),
            (18, 1),
            (20, 1),
            (22, 1),
            (24, 2),
            (26, 1),
            (102, 8),
            (120, 10),
            (122, 9),
            (124, 10),
            (300, 25),
        ];
        for (k, d) in known {
            assert_eq!(cusp_dim(k), d, "weight {k}");
        }
        assert_eq!(cusp_dim(11), 0);
        assert_eq!(cusp_dim(2), 0);
    }

    #[test]
    fn miller_basis_matches_delta_exactly() {
        let rows = miller_basis(12, 200).unwrap();
        let delta = delta_qexp(200);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0], delta.coeffs);
    }

    /// The same echelon basis out of plain BigInt series arithmetic — a
    /// fully independent route (no transforms, no CRT).
    fn echelon_by_qexp(weight: u32, len: usize) -> Vec<Vec<BigInt>> {
        let (d, e) = weight_shape(weight).unwrap();
        let delta = delta_qexp(len);
        let e6 = eisenstein_qexp(6, len).unwrap();
        let tail = if e == 0 {
            QExpansion::new(0, {
                let mut c = vec![BigInt::from(0); len];
                c[0] = BigInt::from(1);
                c
            })
        } else {
            eisenstein_qexp(e, len).unwrap()
        };
        let mut g: Vec<QExpansion> = (1..=d)
            .map(|j| delta.pow(j as u32).mul(&e6.pow(2 * (d - j) as u32)).mul(&tail))
            .collect();
        // clear the triangular tail from the bottom up
        for i in (0..d).rev() {
            for j in i + 1..d {
                let c = g[i].coeff(j + 1).clone();
                if c != BigInt::from(0) {
                    let scaled: Vec<BigInt> = g[j].coeffs.iter().map(|x| x * &c).collect();
                    for (a, b) in g[i].coeffs.iter_mut().zip(scaled.iter()) {
                        *a -= b;
                    }
                }
            }
        }
        g.into_iter().map(|q| q.coeffs).collect()
    }

    #[test]
    fn miller_basis_matches_bigint_echelon() {
        for (k, len) in [(26u32, 60usize), (48, 40)] {
            let got = miller_basis(k, len).unwrap();
            let want = echelon_by_qexp(k, len);
            assert_eq!(got, want, "weight {k}");
        }
    }

    #[test]
    fn miller_basis_rejects_bad_requests() {
        assert!(matches!(miller_basis(13, 10), Err(Error::BadWeight(13))));
        assert!(matches!(miller_basis(14, 10), Err(Error::ZeroDimension(14))));
        assert!(matches!(miller_basis(4, 10), Err(Error::ZeroDimension(4))));
        assert!(matches!(miller_basis(24, 700_000), Err(Error::SeriesTooLong { .. })));
        assert!(matches!(miller_basis(24, 2), Err(Error::BadRequest(_))));
        assert!(matches!(miller_basis(120, 300_000), Err(Error::BadRequest(_))));
    }

    #[test]
    fn hecke_matrix_classics() {
        for (p, tau) in [(2u64, -24i64), (3, 252), (5, 4830), (7, -16744)] {
            let m = hecke_matrix(12, p).unwrap();
            assert_eq!(m, vec![vec![BigInt::from(tau)]], "tau({p})");
        }
        let m24 = hecke_matrix(24, 2).unwrap();
        let tr = &m24[0][0] + &m24[1][1];
        let det = &m24[0][0] * &m24[1][1] - &m24[0][1] * &m24[1][0];
        assert_eq!(tr, BigInt::from(1080));
        assert_eq!(det, BigInt::from(-20468736i64));
        assert!(matches!(hecke_matrix(24, 6), Err(Error::BadRequest(_))));
    }

    #[test]
    fn delta_eigenform_is_ramanujan_tau() {
        let req = EigenformRequest { table_len: 2000, ..EigenformRequest::new(12) };
        let (forms, report) = eigenforms_with(&req).unwrap();
        assert_eq!(forms.len(), 1);
        let f = &forms[0];
        let delta = delta_qexp(600);
        for n in 1..600u64 {
            let tau = FloatExp::from_bigint(delta.coeff(n as usize)).to_f64();
            let scale = (n as f64).powf((12.0 - 1.0) / 2.0);
            let got = f.lambda_f64(n) * scale;
            assert!(
                (got - tau).abs() <= 1e-9 * tau.abs().max(scale),
                "n = {n}: {got} vs {tau}"
            );
        }
        assert!(report.table_err_max < 1e-30);
        assert!(report.t2_residual < 1e-20 && report.t3_residual < 1e-20);
        assert!(f.eigen_err < 1e-30);
        assert!(report.deligne_margin >= 0.0);
    }

    #[test]
    fn one_dimensional_second_coefficients() {
        // Δ·E_{k−12} eigenforms: a(2) = τ(2) + (first Eisenstein coefficient)
        for (k, a2) in [(16u32, 216f64), (18, -528.0), (20, 456.0), (22, -288.0), (26, -48.0)] {
            let forms = eigenforms(k, 50).unwrap();
            assert_eq!(forms.len(), 1, "weight {k}");
            let want = a2 / 2f64.powf((k as f64 - 1.0) / 2.0);
            assert!((forms[0].lambda_f64(2) - want).abs() < 1e-10, "weight {k}");
        }
    }

    #[test]
    fn weight_24_eigenvalue_pair() {
        let forms = eigenforms(24, 400).unwrap();
        assert_eq!(forms.len(), 2);
        let s = 144169f64.sqrt();
        for (f, want) in forms.iter().zip([540.0 - 12.0 * s, 540.0 + 12.0 * s]) {
            let a2 = f.lambda_f64(2) * 2f64.powf(11.5);
            assert!((a2 - want).abs() < 1e-6 * want.abs(), "{a2} vs {want}");
        }
        for f in &forms {
            assert!((f.lambda_f64(6) - f.lambda_f64(2) * f.lambda_f64(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn verify_report_and_determinism() {
        let req = EigenformRequest { table_len: 3000, ..EigenformRequest::new(36) };
        let (f1, r1) = eigenforms_with(&req).unwrap();
        let (f2, r2) = eigenforms_with(&req).unwrap();
        assert_eq!(r1.dim, 3);
        assert!(r1.t2_residual <= SIMULTANEITY_MAX && r1.t3_residual <= SIMULTANEITY_MAX);
        assert!(r1.deligne_margin >= 0.0);
        assert!(r1.table_err_max < 1e-25);
        assert!(r1.mult_checks > 1000);
        assert!(r1.spot_checks > 50);
        assert!(r1.eigen_err_max < 1e-25);
        let l2: Vec<f64> = f1.iter().map(|f| f.lambda_f64(2)).collect();
        assert!(l2[0] < l2[1] && l2[1] < l2[2]);
        for (a, b) in f1.iter().zip(f2.iter()) {
            assert_eq!(a.table_len(), b.table_len());
            for n in 1..a.table_len() {
                assert_eq!(a.table[n].to_raw(), b.table[n].to_raw());
                assert_eq!(a.table_err[n].to_bits(), b.table_err[n].to_bits());
            }
        }
        assert_eq!(
            (r1.primes_used, r1.max_coeff_bits, r1.retries),
            (r2.primes_used, r2.max_coeff_bits, r2.retries)
        );
    }

    #[test]
    fn sparse_prime_section() {
        let req =
            EigenformRequest { table_len: 120, prime_cutoff: 400, ..EigenformRequest::new(12) };
        let (forms, _) = eigenforms_with(&req).unwrap();
        let f = &forms[0];
        assert_eq!(f.prime_cutoff(), 400);
        let full = eigenforms(12, 500).unwrap();
        for p in [127u64, 251, 397] {
            let a = f.try_lambda(p).unwrap();
            let b = full[0].lambda_f64(p);
            assert!((a - b).abs() < 1e-14, "prime {p}");
        }
        assert!(matches!(f.try_lambda(200), Err(Error::OutOfTable { .. })));
        assert!(matches!(f.try_lambda(1000), Err(Error::OutOfTable { .. })));
        assert!(matches!(f.lambda_mpf(0), Err(Error::OutOfTable { .. })));
    }

    #[test]
    fn request_validation() {
        assert!(matches!(eigenforms(13, 100), Err(Error::BadWeight(13))));
        assert!(matches!(eigenforms(2, 100), Err(Error::BadWeight(2))));
        assert!(matches!(eigenforms(14, 100), Err(Error::ZeroDimension(14))));
        assert!(matches!(eigenforms(24, 500_000), Err(Error::SeriesTooLong { .. })));
        let bad = EigenformRequest { nlimbs: 3, ..EigenformRequest::new(12) };
        assert!(matches!(eigenforms_with(&bad), Err(Error::BadRequest(_))));
        // a wider mantissa must agree with the narrow one
        let wide = EigenformRequest { table_len: 100, nlimbs: 4, ..EigenformRequest::new(12) };
        let (fw, _) = eigenforms_with(&wide).unwrap();
        let narrow = eigenforms(12, 100).unwrap();
        assert!((fw[0].lambda_f64(97) - narrow[0].lambda_f64(97)).abs() < 1e-15);
    }

    #[test]
    #[ignore = "calibration run: cargo test -- --ignored heavy_weight"]
    fn heavy_weight_calibration() {
        for k in [120u32, 300] {
            let t = Instant::now();
            let (forms, r) = eigenforms_with(&EigenformRequest::new(k)).unwrap();
            println!(
                "k={k}: dim={} primes={}+{} bits={}/{} retries={} terr={:.2e} eig={:.2e} \
                 t2={:.2e} t3={:.2e} built {:.2}s",
                forms.len(),
                r.primes_used,
                r.charpoly_primes,
                r.max_coeff_bits,
                r.charpoly_bits,
                r.retries,
                r.table_err_max,
                r.eigen_err_max,
                r.t2_residual,
                r.t3_residual,
                t.elapsed().as_secs_f64()
            );
        }
    }
}
