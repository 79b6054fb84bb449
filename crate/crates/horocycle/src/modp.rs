//! Arithmetic modulo word-sized NTT-friendly primes, and exact integer
//! reconstruction.
//!
//! Power series over ℤ are multiplied by reducing them modulo a ladder of
//! 62-bit primes p = a·2²⁴ + 1, convolving in each 𝔽_p with a radix-2
//! number-theoretic transform, and recombining selected coefficients with the
//! Chinese remainder theorem. The transforms use Shoup's precomputed-quotient
//! multiplication for the fixed twiddle factors (forward DIF producing
//! bit-reversed order, inverse DIT consuming it, so no permutation pass) and
//! Montgomery multiplication for the pointwise products.
//!
//! Primes are generated at runtime, descending from 2⁶², with a
//! deterministic Miller–Rabin test, so the ladder is reproducible across
//! runs and machines.

use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::{BigInt, BigUint, Sign};

use crate::arith::Sieve;

/// a·b mod p via 128-bit widening.
#[inline]
pub fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

/// b^e mod p.
pub fn powmod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, b, p);
        }
        b = mulmod(b, b, p);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller–Rabin for u64: the base set {2, 3, 5, 7, 11, 13, 17,
/// 19, 23, 29, 31, 37} is known to be exact below 3.3·10²⁴ > 2⁶⁴.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    'base: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'base;
            }
        }
        return false;
    }
    true
}

/// Montgomery context for one odd modulus p < 2⁶².
///
/// Values are kept "lazily" reduced in [0, 2p); REDC output stays below 2p
/// whenever the input product is of two such values (4p² < 2⁶⁴·p needs only
/// p < 2⁶²).
#[derive(Clone, Copy, Debug)]
pub struct Mont {
    pub p: u64,
    neg_p_inv: u64, // -p^{-1} mod 2^64
    r2: u64,        // 2^128 mod p
}

impl Mont {
    pub fn new(p: u64) -> Self {
        assert!(p & 1 == 1 && p < (1 << 62), "modulus must be odd and < 2^62");
        // Newton iteration for p^{-1} mod 2^64: x ← x(2 − px) doubles the
        // number of correct low bits; x₀ = p is already correct mod 2³.
        let mut x = p;
        for _ in 0..6 {
            x = x.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(x)));
        }
        debug_assert_eq!(p.wrapping_mul(x), 1);
        let r = ((1u128 << 64) % p as u128) as u64;
        let r2 = mulmod(r, r, p);
        Mont { p, neg_p_inv: x.wrapping_neg(), r2 }
    }

    /// REDC(t) = t·2⁻⁶⁴ mod p, result < 2p for t < 2⁶⁴·p.
    #[inline(always)]
    pub fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.neg_p_inv);
        let t2 = (t + m as u128 * self.p as u128) >> 64;
        t2 as u64
    }

    /// Montgomery product of two lazy values (< 2p), result lazy (< 2p).
    #[inline(always)]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.redc(a as u128 * b as u128)
    }

    #[inline(always)]
    pub fn to_mont(&self, a: u64) -> u64 {
        self.mul(a, self.r2)
    }

    /// Leave Montgomery form and reduce fully into [0, p).
    #[inline(always)]
    pub fn from_mont(&self, a: u64) -> u64 {
        let r = self.redc(a as u128);
        if r >= self.p {
            r - self.p
        } else {
            r
        }
    }
}

/// a·w mod p with Shoup's trick for a fixed multiplier w < p whose quotient
/// w_sh = ⌊w·2⁶⁴/p⌋ is precomputed. Valid for any a < 2⁶⁴; result < 2p.
#[inline(always)]
pub fn shoup_mul(a: u64, w: u64, w_sh: u64, p: u64) -> u64 {
    let q = ((w_sh as u128 * a as u128) >> 64) as u64;
    w.wrapping_mul(a).wrapping_sub(q.wrapping_mul(p))
}

fn shoup_precompute(w: u64, p: u64) -> u64 {
    (((w as u128) << 64) / p as u128) as u64
}

/// Twiddle tables for one transform size 2^log2n over one prime.
///
/// `fwd[l]` holds the stage with butterfly half-width n/2^{l+1} of the
/// decimation-in-frequency forward transform (natural input, bit-reversed
/// output); `inv[l]` the matching inverse stage. Scaling constants for the
/// inverse fold in n⁻¹, either plain or together with the Montgomery factor
/// 2⁶⁴ (to undo a Montgomery pointwise product in the same pass).
pub struct Twiddles {
    pub log2n: u32,
    fwd: Vec<Vec<u64>>,
    fwd_sh: Vec<Vec<u64>>,
    inv: Vec<Vec<u64>>,
    inv_sh: Vec<Vec<u64>>,
    inv_n: u64,
    inv_n_sh: u64,
    conv_scale: u64,
    conv_scale_sh: u64,
}

/// One runtime-generated NTT prime with its primitive root, Montgomery
/// context, and lazily built twiddle tables per transform size.
pub struct NttPrime {
    pub p: u64,
    pub root: u64,
    pub mont: Mont,
    tables: [OnceLock<Arc<Twiddles>>; 25],
}

impl NttPrime {
    fn new(p: u64) -> Self {
        let root = primitive_root(p);
        const INIT: OnceLock<Arc<Twiddles>> = OnceLock::new();
        NttPrime { p, root, mont: Mont::new(p), tables: [INIT; 25] }
    }

    /// 2-adic valuation available for transform sizes.
    pub fn max_log2(&self) -> u32 {
        (self.p - 1).trailing_zeros()
    }

    pub fn twiddles(&self, log2n: u32) -> Arc<Twiddles> {
        assert!(log2n <= self.max_log2() && (log2n as usize) < self.tables.len());
        self.tables[log2n as usize]
            .get_or_init(|| Arc::new(self.build_twiddles(log2n)))
            .clone()
    }

    fn build_twiddles(&self, log2n: u32) -> Twiddles {
        let p = self.p;
        let n = 1u64 << log2n;
        let w_n = powmod(self.root, (p - 1) >> log2n, p);
        debug_assert_eq!(powmod(w_n, n, p), 1);
        debug_assert_ne!(powmod(w_n, n / 2, p), 1);
        let w_n_inv = powmod(w_n, p - 2, p);

        let mut fwd = Vec::new();
        let mut fwd_sh = Vec::new();
        let mut inv = Vec::new();
        let mut inv_sh = Vec::new();
        // Stage l has half-width len = n >> (l+1) and uses the 2len-th root,
        // i.e. w_n^{n/(2len)}.
        let mut len = (n / 2) as usize;
        while len >= 1 {
            let step = (n as usize / (2 * len)) as u64;
            let w = powmod(w_n, step, p);
            let wi = powmod(w_n_inv, step, p);
            let mut row = Vec::with_capacity(len);
            let mut rowi = Vec::with_capacity(len);
            let (mut cur, mut curi) = (1u64, 1u64);
            for _ in 0..len {
                row.push(cur);
                rowi.push(curi);
                cur = mulmod(cur, w, p);
                curi = mulmod(curi, wi, p);
            }
            fwd_sh.push(row.iter().map(|&w| shoup_precompute(w, p)).collect());
            inv_sh.push(rowi.iter().map(|&w| shoup_precompute(w, p)).collect());
            fwd.push(row);
            inv.push(rowi);
            len /= 2;
        }

        let inv_n = powmod(n % p, p - 2, p);
        // n^{-1}·2^64 mod p: undoes the 2^{-64} left behind by a Montgomery
        // pointwise pass while applying the inverse-transform scaling.
        let conv_scale = mulmod(inv_n, ((1u128 << 64) % p as u128) as u64, p);
        Twiddles {
            log2n,
            fwd,
            fwd_sh,
            inv,
            inv_sh,
            inv_n,
            inv_n_sh: shoup_precompute(inv_n, p),
            conv_scale,
            conv_scale_sh: shoup_precompute(conv_scale, p),
        }
    }

    /// Forward transform in place. Input in natural order, values < 2p;
    /// output in bit-reversed order, values < 2p.
    pub fn ntt_fwd(&self, a: &mut [u64], tw: &Twiddles) {
        let n = a.len();
        assert_eq!(n, 1usize << tw.log2n);
        let p = self.p;
        let twop = 2 * p;
        let mut len = n / 2;
        let mut stage = 0usize;
        while len >= 1 {
            let w = &tw.fwd[stage];
            let w_sh = &tw.fwd_sh[stage];
            let mut start = 0usize;
            while start < n {
                for t in 0..len {
                    let i = start + t;
                    let j = i + len;
                    let x = a[i];
                    let y = a[j];
                    let mut s = x + y;
                    if s >= twop {
                        s -= twop;
                    }
                    let d = x + twop - y;
                    a[i] = s;
                    a[j] = shoup_mul(d, w[t], w_sh[t], p);
                }
                start += 2 * len;
            }
            len /= 2;
            stage += 1;
        }
    }

    /// Inverse transform in place, consuming bit-reversed order and applying
    /// `scale` (pass `Scale::Conv` after a Montgomery pointwise pass, or
    /// `Scale::Plain` after plain spectral work). Output natural, < 2p.
    pub fn ntt_inv(&self, a: &mut [u64], tw: &Twiddles, scale: Scale) {
        let n = a.len();
        assert_eq!(n, 1usize << tw.log2n);
        let p = self.p;
        let twop = 2 * p;
        let mut len = 1usize;
        let mut stage = tw.inv.len();
        while len <= n / 2 {
            stage -= 1;
            let w = &tw.inv[stage];
            let w_sh = &tw.inv_sh[stage];
            let mut start = 0usize;
            while start < n {
                for t in 0..len {
                    let i = start + t;
                    let j = i + len;
                    let x = a[i];
                    let y = shoup_mul(a[j], w[t], w_sh[t], p);
                    let mut s = x + y;
                    if s >= twop {
                        s -= twop;
                    }
                    let mut d = x + twop - y;
                    if d >= twop {
                        d -= twop;
                    }
                    a[i] = s;
                    a[j] = d;
                }
                start += 2 * len;
            }
            len *= 2;
        }
        let (c, c_sh) = match scale {
            Scale::Plain => (tw.inv_n, tw.inv_n_sh),
            Scale::Conv => (tw.conv_scale, tw.conv_scale_sh),
        };
        for x in a.iter_mut() {
            *x = shoup_mul(*x, c, c_sh, p);
        }
    }

    /// Pointwise Montgomery product a[i] ← a[i]·b[i]·2⁻⁶⁴ (lazy values).
    pub fn pointwise_mont(&self, a: &mut [u64], b: &[u64]) {
        debug_assert_eq!(a.len(), b.len());
        for (x, &y) in a.iter_mut().zip(b.iter()) {
            *x = self.mont.mul(*x, y);
        }
    }

    /// Fully reduce a lazy slice into [0, p).
    pub fn reduce_slice(&self, a: &mut [u64]) {
        let p = self.p;
        for x in a.iter_mut() {
            if *x >= p {
                *x -= p;
            }
        }
    }

    /// Cyclic-free product of two series truncated to `out_len` coefficients:
    /// pads to the next power of two ≥ a.len() + b.len() − 1 so no wraparound
    /// occurs, and returns fully reduced values.
    pub fn poly_mul(&self, a: &[u64], b: &[u64], out_len: usize) -> Vec<u64> {
        if a.is_empty() || b.is_empty() || out_len == 0 {
            return vec![0; out_len];
        }
        let need = a.len() + b.len() - 1;
        let size = need.next_power_of_two().max(2);
        let log2n = size.trailing_zeros();
        let tw = self.twiddles(log2n);
        let mut fa = vec![0u64; size];
        fa[..a.len()].copy_from_slice(a);
        let mut fb = vec![0u64; size];
        fb[..b.len()].copy_from_slice(b);
        self.ntt_fwd(&mut fa, &tw);
        self.ntt_fwd(&mut fb, &tw);
        self.pointwise_mont(&mut fa, &fb);
        self.ntt_inv(&mut fa, &tw, Scale::Conv);
        fa.truncate(out_len);
        if fa.len() < out_len {
            fa.resize(out_len, 0);
        }
        self.reduce_slice(&mut fa);
        fa
    }

    /// Multiplicative inverse of a power series mod x^len (a[0] must be a
    /// unit), by Newton doubling.
    pub fn series_inverse(&self, a: &[u64], len: usize) -> Vec<u64> {
        assert!(!a.is_empty() && a[0] % self.p != 0, "constant term must be invertible");
        let p = self.p;
        let mut v = vec![powmod(a[0], p - 2, p)];
        let mut m = 1usize;
        while m < len {
            m = (2 * m).min(len);
            // v ← v·(2 − a·v) mod x^m
            let av = self.poly_mul(&a[..a.len().min(m)], &v, m);
            let mut two_minus = vec![0u64; m];
            for i in 0..m {
                let val = av[i] % p;
                two_minus[i] = if i == 0 {
                    (2 + p - val) % p
                } else {
                    (p - val) % p
                };
            }
            v = self.poly_mul(&v, &two_minus, m);
        }
        v
    }
}

/// Scaling choice for the inverse transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Plain,
    Conv,
}

fn small_sieve() -> &'static Sieve {
    static SIEVE: OnceLock<Sieve> = OnceLock::new();
    SIEVE.get_or_init(|| Sieve::new(1 << 19))
}

/// Least primitive root of p = a·2²⁴ + 1.
///
/// p − 1 = 2²⁴·a with a < 2³⁸; after trial division by primes ≤ 2¹⁹ any
/// remaining cofactor is prime, because a composite cofactor would be a
/// product of two factors > 2¹⁹ and hence exceed 2³⁸.
fn primitive_root(p: u64) -> u64 {
    let mut rest = (p - 1) >> (p - 1).trailing_zeros();
    let mut factors = vec![2u64];
    for &q in &small_sieve().primes {
        if q * q > rest {
            break;
        }
        if rest % q == 0 {
            factors.push(q);
            while rest % q == 0 {
                rest /= q;
            }
        }
    }
    if rest > 1 {
        debug_assert!(is_prime_u64(rest));
        factors.push(rest);
    }
    'cand: for g in 2u64.. {
        for &q in &factors {
            if powmod(g, (p - 1) / q, p) == 1 {
                continue 'cand;
            }
        }
        return g;
    }
    unreachable!()
}

struct PrimePool {
    primes: Vec<Arc<NttPrime>>,
    next_a: u64,
}

static POOL: OnceLock<Mutex<PrimePool>> = OnceLock::new();

/// The i-th prime (0-based) of the global descending ladder of NTT primes
/// p = a·2²⁴ + 1 ∈ (2⁶¹, 2⁶²). Deterministic across runs.
pub fn ntt_prime(index: usize) -> Arc<NttPrime> {
    let pool = POOL.get_or_init(|| {
        Mutex::new(PrimePool { primes: Vec::new(), next_a: (1 << 38) - 1 })
    });
    let mut pool = pool.lock().unwrap();
    while pool.primes.len() <= index {
        let mut a = pool.next_a;
        loop {
            assert!(a >= 1 << 37, "ran out of 62-bit NTT primes");
            let p = (a << 24) | 1;
            if is_prime_u64(p) {
                pool.next_a = a - 1;
                pool.primes.push(Arc::new(NttPrime::new(p)));
                break;
            }
            a -= 1;
        }
    }
    pool.primes[index].clone()
}

/// Chinese-remainder reconstruction basis over a prefix of the prime ladder.
///
/// Values are lifted symmetrically into (−P/2, P/2]; the caller is expected
/// to confirm the lift against one extra "verifier" prime that did not enter
/// the basis.
pub struct CrtBasis {
    pub primes: Vec<u64>,
    limbs: usize,
    m_i: Vec<Vec<u64>>, // M_i = P/p_i, little-endian u64 limbs padded to `limbs`
    inv_i: Vec<u64>,    // M_i^{-1} mod p_i
    p_limbs: Vec<u64>,
    half_p: Vec<u64>,
}

impl CrtBasis {
    pub fn new(primes: &[u64]) -> Self {
        assert!(!primes.is_empty());
        let mut p_big = BigUint::from(1u32);
        for &p in primes {
            p_big *= p;
        }
        let limbs = p_big.to_u64_digits().len();
        let mut m_i = Vec::with_capacity(primes.len());
        let mut inv_i = Vec::with_capacity(primes.len());
        for &p in primes {
            let m = &p_big / p;
            let m_mod = (&m % p).to_u64_digits().first().copied().unwrap_or(0);
            inv_i.push(powmod(m_mod, p - 2, p));
            let mut digits = m.to_u64_digits();
            digits.resize(limbs, 0);
            m_i.push(digits);
        }
        let mut p_limbs = p_big.to_u64_digits();
        p_limbs.resize(limbs, 0);
        let mut half_p = (&p_big >> 1u32).to_u64_digits();
        half_p.resize(limbs, 0);
        CrtBasis { primes: primes.to_vec(), limbs, m_i, inv_i, p_limbs, half_p }
    }

    /// Reconstruct the symmetric representative from one residue per prime.
    pub fn reconstruct(&self, residues: &[u64]) -> BigInt {
        assert_eq!(residues.len(), self.primes.len());
        let mut acc = vec![0u64; self.limbs + 1];
        for (i, (&r, &p)) in residues.iter().zip(self.primes.iter()).enumerate() {
            let c = mulmod(r % p, self.inv_i[i], p);
            mac_scalar(&mut acc, &self.m_i[i], c);
        }
        // acc < (number of primes)·P; peel off q·P with a float estimate of q
        // and a short correction loop.
        let q = estimate_quotient(&acc, &self.p_limbs);
        if q > 0 {
            sub_scaled(&mut acc, &self.p_limbs, q);
        }
        while cmp_slices(&acc, &self.p_limbs) != std::cmp::Ordering::Less {
            sub_scaled(&mut acc, &self.p_limbs, 1);
        }
        let negative = cmp_slices(&acc[..self.limbs], &self.half_p) == std::cmp::Ordering::Greater;
        if negative {
            // value − P, reported as P − value with a minus sign
            let mut tmp = self.p_limbs.clone();
            tmp.push(0);
            sub_in_place(&mut tmp, &acc);
            BigInt::from_biguint(Sign::Minus, limbs_to_biguint(&tmp))
        } else {
            let mag = limbs_to_biguint(&acc);
            if mag == BigUint::from(0u32) {
                BigInt::from(0)
            } else {
                BigInt::from_biguint(Sign::Plus, mag)
            }
        }
    }
}

fn limbs_to_biguint(limbs: &[u64]) -> BigUint {
    let mut bytes = Vec::with_capacity(limbs.len() * 8);
    for &l in limbs {
        bytes.extend_from_slice(&l.to_le_bytes());
    }
    BigUint::from_bytes_le(&bytes)
}

/// acc += m·c (acc one limb longer than m).
fn mac_scalar(acc: &mut [u64], m: &[u64], c: u64) {
    let mut carry = 0u128;
    for (a, &mi) in acc.iter_mut().zip(m.iter()) {
        let t = *a as u128 + mi as u128 * c as u128 + carry;
        *a = t as u64;
        carry = t >> 64;
    }
    let last = acc.len() - 1;
    let t = acc[last] as u128 + carry;
    acc[last] = t as u64;
    debug_assert_eq!(t >> 64, 0, "CRT accumulator overflow");
}

/// acc −= p·q, assuming the result is nonnegative.
fn sub_scaled(acc: &mut [u64], p: &[u64], q: u64) {
    let mut borrow = 0i128;
    for (a, &pi) in acc.iter_mut().zip(p.iter().chain(std::iter::repeat(&0))) {
        let t = *a as i128 - pi as i128 * q as i128 + borrow;
        *a = t as u64; // wraps mod 2^64
        borrow = (t >> 64) as i128;
    }
    debug_assert!(borrow == 0, "sub_scaled went negative");
}

/// a −= b elementwise with borrow (a.len() ≥ b.len(), result nonnegative).
fn sub_in_place(a: &mut [u64], b: &[u64]) {
    let mut borrow = 0i128;
    for i in 0..a.len() {
        let bi = if i < b.len() { b[i] as i128 } else { 0 };
        let t = a[i] as i128 - bi + borrow;
        a[i] = t as u64;
        borrow = (t >> 64) as i128;
    }
    debug_assert!(borrow == 0);
}

fn cmp_slices(a: &[u64], b: &[u64]) -> std::cmp::Ordering {
    let n = a.len().max(b.len());
    for i in (0..n).rev() {
        let ai = a.get(i).copied().unwrap_or(0);
        let bi = b.get(i).copied().unwrap_or(0);
        match ai.cmp(&bi) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

/// ⌊acc/p⌋ to within ±1, for acc < 2⁶⁴·p (quotient fits easily in u64).
fn estimate_quotient(acc: &[u64], p: &[u64]) -> u64 {
    let (am, ae) = top_f64(acc);
    let (pm, pe) = top_f64(p);
    if am == 0.0 {
        return 0;
    }
    let q = am / pm * 2f64.powi((ae - pe) as i32);
    if q < 1.0 {
        0
    } else {
        (q - 0.5).max(0.0) as u64
    }
}

fn top_f64(limbs: &[u64]) -> (f64, i64) {
    for i in (0..limbs.len()).rev() {
        if limbs[i] != 0 {
            let hi = limbs[i] as f64;
            let lo = if i > 0 { limbs[i - 1] as f64 } else { 0.0 };
            return (hi + lo / 2f64.powi(64), 64 * i as i64);
        }
    }
    (0.0, 0)
}

/// x mod q for a signed big integer, result in [0, q).
pub fn bigint_mod_u64(x: &BigInt, q: u64) -> u64 {
    let (sign, mag) = x.clone().into_parts();
    let mut acc: u64 = 0;
    let mut base: u64 = 1; // 2^{64 i} mod q
    for limb in mag.to_u64_digits() {
        acc = (acc + mulmod(limb % q, base, q)) % q;
        base = mulmod(base, ((1u128 << 64) % q as u128) as u64, q);
    }
    match sign {
        Sign::Minus if acc != 0 => q - acc,
        _ => acc,
    }
}

/// Number of ladder primes needed to reconstruct values of at most `bits`
/// bits (plus sign), with one spare bit per prime of safety margin.
pub fn primes_for_bits(bits: f64) -> usize {
    ((bits / 61.0).ceil() as usize).max(1)
}

/// Reduce a slice of big integers modulo p (plain representatives).
pub fn reduce_bigints(coeffs: &[BigInt], p: u64) -> Vec<u64> {
    coeffs.iter().map(|c| bigint_mod_u64(c, p)).collect()
}

/// Reduce i128 coefficients modulo p.
pub fn reduce_i128(coeffs: &[i128], p: u64) -> Vec<u64> {
    coeffs
        .iter()
        .map(|&c| {
            let r = (c % p as i128) as i64;
            if r < 0 {
                (r + p as i64) as u64
            } else {
                r as u64
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::splitmix64;

    fn naive_poly_mul(a: &[u64], b: &[u64], p: u64, out_len: usize) -> Vec<u64> {
        let mut out = vec![0u64; out_len];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                if i + j < out_len {
                    out[i + j] = (out[i + j] + mulmod(x, y, p)) % p;
                }
            }
        }
        out
    }

    #[test]
    fn miller_rabin_agrees_with_sieve() {
        let s = Sieve::new(100_000);
        for n in 0..=100_000u64 {
            assert_eq!(is_prime_u64(n), s.is_prime(n), "at {n}");
        }
        // strong pseudoprime to bases 2,3,5,7 — must still be rejected
        assert!(!is_prime_u64(3_215_031_751));
        assert!(is_prime_u64((1 << 61) - 1)); // Mersenne prime
    }

    #[test]
    fn prime_ladder_shape() {
        let p0 = ntt_prime(0);
        let p1 = ntt_prime(1);
        assert!(p0.p > p1.p, "ladder must descend");
        for pr in [&p0, &p1] {
            assert!(pr.p > 1 << 61 && pr.p < 1 << 62);
            assert_eq!((pr.p - 1).trailing_zeros() >= 24, true);
            assert!(is_prime_u64(pr.p));
            // root really is primitive: its (p-1)/2 power is -1
            assert_eq!(powmod(pr.root, (pr.p - 1) / 2, pr.p), pr.p - 1);
        }
        // determinism
        assert_eq!(ntt_prime(0).p, p0.p);
    }

    #[test]
    fn montgomery_roundtrip() {
        let pr = ntt_prime(0);
        let m = &pr.mont;
        let mut st = 42u64;
        for _ in 0..1000 {
            let a = splitmix64(&mut st) % pr.p;
            let b = splitmix64(&mut st) % pr.p;
            let am = m.to_mont(a);
            let bm = m.to_mont(b);
            assert_eq!(m.from_mont(m.mul(am, bm)), mulmod(a, b, pr.p));
        }
    }

    #[test]
    fn shoup_multiplication_bound() {
        let pr = ntt_prime(0);
        let p = pr.p;
        let mut st = 7u64;
        for _ in 0..1000 {
            let w = splitmix64(&mut st) % p;
            let w_sh = shoup_precompute(w, p);
            let a = splitmix64(&mut st); // arbitrary u64, including ≥ p
            let r = shoup_mul(a, w, w_sh, p);
            assert!(r < 2 * p);
            assert_eq!(r % p, mulmod(a % p, w, p));
        }
    }

    #[test]
    fn ntt_roundtrip_and_convolution() {
        let pr = ntt_prime(0);
        let tw = pr.twiddles(8);
        let mut st = 99u64;
        let orig: Vec<u64> = (0..256).map(|_| splitmix64(&mut st) % pr.p).collect();
        let mut a = orig.clone();
        pr.ntt_fwd(&mut a, &tw);
        pr.ntt_inv(&mut a, &tw, Scale::Plain);
        pr.reduce_slice(&mut a);
        assert_eq!(a, orig);

        for sizes in [(40usize, 60usize), (1, 1), (100, 3)] {
            let a: Vec<u64> = (0..sizes.0).map(|_| splitmix64(&mut st) % pr.p).collect();
            let b: Vec<u64> = (0..sizes.1).map(|_| splitmix64(&mut st) % pr.p).collect();
            let got = pr.poly_mul(&a, &b, sizes.0 + sizes.1 - 1);
            let want = naive_poly_mul(&a, &b, pr.p, sizes.0 + sizes.1 - 1);
            assert_eq!(got, want);
        }
    }

    #[test]
    fn series_inverse_is_inverse() {
        let pr = ntt_prime(1);
        let mut st = 5u64;
        let mut a: Vec<u64> = (0..200).map(|_| splitmix64(&mut st) % pr.p).collect();
        a[0] = 1 + splitmix64(&mut st) % (pr.p - 1);
        let inv = pr.series_inverse(&a, 200);
        let prod = pr.poly_mul(&a, &inv, 200);
        assert_eq!(prod[0], 1);
        assert!(prod[1..].iter().all(|&x| x == 0));
    }

    #[test]
    fn crt_reconstructs_signed_values() {
        let primes: Vec<u64> = (0..3).map(|i| ntt_prime(i).p).collect();
        let basis = CrtBasis::new(&primes);
        let mut st = 1234u64;
        for _ in 0..200 {
            let hi = splitmix64(&mut st) as i128;
            let lo = splitmix64(&mut st) as i128;
            let v: i128 = (hi >> 1) * (1i128 << 64) / 3 + lo / 5 - (1i128 << 100);
            let residues: Vec<u64> = primes
                .iter()
                .map(|&p| {
                    let r = (v % p as i128) as i64;
                    if r < 0 {
                        (r + p as i64) as u64
                    } else {
                        r as u64
                    }
                })
                .collect();
            let got = basis.reconstruct(&residues);
            assert_eq!(got, BigInt::from(v), "value {v}");
        }
        // zero and small values
        let z = basis.reconstruct(&vec![0; 3]);
        assert_eq!(z, BigInt::from(0));
    }

    #[test]
    fn bigint_mod_matches() {
        let q = ntt_prime(0).p;
        let v = BigInt::parse_bytes(b"-123456789012345678901234567890123456789", 10).unwrap();
        let direct = ((&v % BigInt::from(q)) + BigInt::from(q)) % BigInt::from(q);
        assert_eq!(BigInt::from(bigint_mod_u64(&v, q)), direct);
    }

    // Manual benchmark: cargo test -p horocycle ntt_bench -- --ignored --nocapture
    #[test]
    #[ignore]
    fn ntt_bench() {
        let pr = ntt_prime(0);
        let tw = pr.twiddles(16);
        let mut a: Vec<u64> = (0..65536u64).map(|i| i % pr.p).collect();
        let start = std::time::Instant::now();
        let reps = 200;
        for _ in 0..reps {
            pr.ntt_fwd(&mut a, &tw);
            pr.ntt_inv(&mut a, &tw, Scale::Conv);
        }
        let dt = start.elapsed().as_secs_f64();
        println!(
            "2^16 transform pair: {:.3} ms ({:.1} ns/butterfly)",
            dt / reps as f64 * 1e3,
            dt / reps as f64 / (2.0 * 16.0 * 32768.0) * 1e9
        );
    }
}
