//! Fixed-precision binary floating point with 128- or 256-bit mantissas.
//!
//! Eigenvalue tables need more than the 53 bits a double offers (relative
//! gaps between conjugate eigenvalues shrink like 2⁻ᵏ ᐟ ²ᵉᵃ), but nothing
//! close to arbitrary precision, so values are kept as
//!
//! value = sign · (M / 2⁶⁴ⁿ) · 2ᵉˣᵖ,  M ∈ [2⁶⁴ⁿ⁻¹, 2⁶⁴ⁿ),  n ∈ {2, 4},
//!
//! i.e. a normalized n-limb mantissa with separate binary exponent, so
//! |value| ∈ [2^(exp−1), 2^exp). Every operation rounds half-up and is
//! accurate to 1 ulp (2^(1−64n) relative); error *tracking* is done by the
//! callers in plain f64, which is cheap and entirely sufficient at these
//! tolerances. Transcendental functions are deliberately absent — the few
//! needed (exp, ln, arccos) are taken in f64 after the precision-critical
//! linear algebra is done.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};

/// Floating-point value with an n·64-bit mantissa, n ∈ {2, 4}.
#[derive(Clone, Copy, Debug)]
pub struct Mpf {
    sign: i8,
    exp: i64,
    nlimbs: u8,
    mant: [u64; 4], // little-endian; mant[nlimbs-1] has its top bit set
}

impl Mpf {
    pub fn zero(nlimbs: u8) -> Self {
        assert!(nlimbs == 2 || nlimbs == 4);
        Mpf { sign: 0, exp: 0, nlimbs, mant: [0; 4] }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    pub fn signum(&self) -> i32 {
        self.sign as i32
    }

    /// Binary exponent: |value| ∈ [2^(exp−1), 2^exp). Meaningless for zero.
    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn nlimbs(&self) -> u8 {
        self.nlimbs
    }

    /// Relative weight of one unit in the last mantissa place.
    pub fn ulp_rel(nlimbs: u8) -> f64 {
        2f64.powi(1 - 64 * nlimbs as i32)
    }

    pub fn from_i64(v: i64, nlimbs: u8) -> Self {
        if v == 0 {
            return Mpf::zero(nlimbs);
        }
        let sign = if v < 0 { -1 } else { 1 };
        let (m, _) = from_limbs_rounded(sign, &[v.unsigned_abs()], 0, nlimbs);
        m
    }

    pub fn from_f64(v: f64, nlimbs: u8) -> Self {
        assert!(v.is_finite());
        if v == 0.0 {
            return Mpf::zero(nlimbs);
        }
        let bits = v.to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (int, pow2) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            ((1u64 << 52) | frac, raw_exp - 1075)
        };
        let sign = if v < 0.0 { -1 } else { 1 };
        let (m, inexact) = from_limbs_rounded(sign, &[int], pow2, nlimbs);
        debug_assert!(!inexact);
        m
    }

    /// Round a big integer to working precision; the flag reports whether
    /// any bits were discarded.
    pub fn from_bigint(v: &BigInt, nlimbs: u8) -> (Self, bool) {
        let (sign, mag) = v.clone().into_parts();
        let s = match sign {
            Sign::Minus => -1,
            Sign::NoSign => return (Mpf::zero(nlimbs), false),
            Sign::Plus => 1,
        };
        from_limbs_rounded(s, &mag.to_u64_digits(), 0, nlimbs)
    }

    /// Value q·2^pow2 rounded to working precision.
    pub fn from_biguint_scaled(q: &BigUint, pow2: i64, nlimbs: u8) -> (Self, bool) {
        let digits = q.to_u64_digits();
        if digits.is_empty() {
            return (Mpf::zero(nlimbs), false);
        }
        from_limbs_rounded(1, &digits, pow2, nlimbs)
    }

    /// Nearest double, saturating to ±∞ / 0 outside the double's range.
    pub fn to_f64(&self) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        let n = self.nlimbs as usize;
        let hi = self.mant[n - 1] as f64;
        let lo = self.mant[n - 2] as f64;
        let m = hi + lo * 2f64.powi(-64); // in [2^63, 2^64)
        let s = self.sign as f64;
        let e = self.exp - 64;
        if self.exp > 1030 {
            return s * f64::INFINITY;
        }
        if self.exp < -1080 {
            return 0.0;
        }
        let e1 = (e / 2) as i32;
        let e2 = (e - e as i64 / 2) as i32;
        s * m * 2f64.powi(e1) * 2f64.powi(e2)
    }

    pub fn neg(mut self) -> Self {
        self.sign = -self.sign;
        self
    }

    pub fn abs(mut self) -> Self {
        if self.sign != 0 {
            self.sign = 1;
        }
        self
    }

    /// Exact scaling by 2^e.
    pub fn mul_pow2(mut self, e: i64) -> Self {
        if self.sign != 0 {
            self.exp += e;
        }
        self
    }

    pub fn mul(&self, rhs: &Mpf) -> Mpf {
        assert_eq!(self.nlimbs, rhs.nlimbs);
        let n = self.nlimbs as usize;
        if self.sign == 0 || rhs.sign == 0 {
            return Mpf::zero(self.nlimbs);
        }
        let mut prod = [0u64; 8];
        for i in 0..n {
            let a = self.mant[i] as u128;
            let mut carry = 0u128;
            for j in 0..n {
                let t = prod[i + j] as u128 + a * rhs.mant[j] as u128 + carry;
                prod[i + j] = t as u64;
                carry = t >> 64;
            }
            prod[i + n] = carry as u64;
        }
        let pow2 = self.exp + rhs.exp - 128 * n as i64;
        let (m, _) = from_limbs_rounded(self.sign * rhs.sign, &prod[..2 * n], pow2, self.nlimbs);
        m
    }

    pub fn add(&self, rhs: &Mpf) -> Mpf {
        assert_eq!(self.nlimbs, rhs.nlimbs);
        let n = self.nlimbs as usize;
        if self.sign == 0 {
            return *rhs;
        }
        if rhs.sign == 0 {
            return *self;
        }
        let mag = cmp_magnitude(self, rhs);
        if mag == Ordering::Equal && self.sign != rhs.sign {
            return Mpf::zero(self.nlimbs);
        }
        let (big, small) = if mag == Ordering::Less { (rhs, self) } else { (self, rhs) };
        let s = big.exp - small.exp;
        debug_assert!(s >= 0);

        // Widen to n+2 limbs with a 64-bit guard below the mantissa: the
        // guard absorbs the entire alignment shift whenever s ≤ 64, so deep
        // cancellation (which forces the exponents close) is exact; bits
        // lost below the guard only occur when |small| < 2^-63·|big| and are
        // then negligible against the final rounding.
        let mut wbig = [0u64; 6];
        wbig[1..=n].copy_from_slice(&big.mant[..n]);
        let mut wsmall = [0u64; 6];
        extract(&small.mant[..n], s - 64, &mut wsmall[..n + 2]);

        if self.sign == rhs.sign {
            wide_add(&mut wbig[..n + 2], &wsmall[..n + 2]);
        } else {
            wide_sub(&mut wbig[..n + 2], &wsmall[..n + 2]);
        }
        let pow2 = big.exp - 64 * (n as i64 + 1);
        let (m, _) = from_limbs_rounded(big.sign, &wbig[..n + 2], pow2, self.nlimbs);
        m
    }

    pub fn sub(&self, rhs: &Mpf) -> Mpf {
        self.add(&rhs.neg())
    }

    pub fn div(&self, rhs: &Mpf) -> Mpf {
        assert_eq!(self.nlimbs, rhs.nlimbs);
        assert!(rhs.sign != 0, "division by zero");
        let n = self.nlimbs as usize;
        if self.sign == 0 {
            return Mpf::zero(self.nlimbs);
        }
        let num = limbs_to_biguint(&self.mant[..n]) << (64 * n + 1);
        let den = limbs_to_biguint(&rhs.mant[..n]);
        let q = num / den;
        let pow2 = self.exp - rhs.exp - (64 * n as i64 + 1);
        let (m, _) = from_limbs_rounded(self.sign * rhs.sign, &q.to_u64_digits(), pow2, self.nlimbs);
        m
    }

    /// Numeric comparison (a total order; no NaN exists here).
    pub fn cmp_mpf(&self, rhs: &Mpf) -> Ordering {
        match self.sign.cmp(&rhs.sign) {
            Ordering::Equal => {}
            other => return other,
        }
        if self.sign == 0 {
            return Ordering::Equal;
        }
        let mag = cmp_magnitude(self, rhs);
        if self.sign > 0 {
            mag
        } else {
            mag.reverse()
        }
    }

    /// Exact value as num·2^pow2 with an integer numerator. Every value of
    /// this type is a dyadic rational, so the pair is lossless.
    pub fn to_dyadic(&self) -> (BigInt, i64) {
        if self.sign == 0 {
            return (BigInt::from(0), 0);
        }
        let n = self.nlimbs as usize;
        let mag = limbs_to_biguint(&self.mant[..n]);
        let sign = if self.sign < 0 { Sign::Minus } else { Sign::Plus };
        (BigInt::from_biguint(sign, mag), self.exp - 64 * n as i64)
    }

    /// Raw parts for serialization: (sign, exp, nlimbs, mantissa limbs).
    pub fn to_raw(&self) -> (i8, i64, u8, [u64; 4]) {
        (self.sign, self.exp, self.nlimbs, self.mant)
    }

    /// Rebuild from raw parts, validating the normalization invariants.
    pub fn from_raw(sign: i8, exp: i64, nlimbs: u8, mant: [u64; 4]) -> crate::Result<Self> {
        let bad = |m: &str| crate::Error::CacheFormat(m.to_string());
        if nlimbs != 2 && nlimbs != 4 {
            return Err(bad("mantissa limb count must be 2 or 4"));
        }
        let n = nlimbs as usize;
        match sign {
            0 => {
                if exp != 0 || mant != [0; 4] {
                    return Err(bad("zero must have empty mantissa"));
                }
            }
            1 | -1 => {
                if mant[n - 1] >> 63 != 1 || mant[n..].iter().any(|&l| l != 0) {
                    return Err(bad("mantissa not normalized"));
                }
            }
            _ => return Err(bad("bad sign byte")),
        }
        Ok(Mpf { sign, exp, nlimbs, mant })
    }
}

/// Compare |a| vs |b| for same-precision operands.
fn cmp_magnitude(a: &Mpf, b: &Mpf) -> Ordering {
    debug_assert!(a.sign != 0 && b.sign != 0);
    match a.exp.cmp(&b.exp) {
        Ordering::Equal => {}
        other => return other,
    }
    let n = a.nlimbs as usize;
    for i in (0..n).rev() {
        match a.mant[i].cmp(&b.mant[i]) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

impl PartialEq for Mpf {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_mpf(other) == Ordering::Equal
    }
}
impl Eq for Mpf {}
impl PartialOrd for Mpf {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_mpf(other))
    }
}
impl Ord for Mpf {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_mpf(other)
    }
}

impl std::ops::Add for Mpf {
    type Output = Mpf;
    fn add(self, rhs: Mpf) -> Mpf {
        Mpf::add(&self, &rhs)
    }
}
impl std::ops::Sub for Mpf {
    type Output = Mpf;
    fn sub(self, rhs: Mpf) -> Mpf {
        Mpf::sub(&self, &rhs)
    }
}
impl std::ops::Mul for Mpf {
    type Output = Mpf;
    fn mul(self, rhs: Mpf) -> Mpf {
        Mpf::mul(&self, &rhs)
    }
}
impl std::ops::Div for Mpf {
    type Output = Mpf;
    fn div(self, rhs: Mpf) -> Mpf {
        Mpf::div(&self, &rhs)
    }
}
impl std::ops::Neg for Mpf {
    type Output = Mpf;
    fn neg(self) -> Mpf {
        Mpf::neg(self)
    }
}

/// Normalize the integer X (little-endian limbs) times 2^pow2 into an Mpf,
/// rounding half-up to 64n mantissa bits. Returns the value and whether any
/// nonzero bits were discarded.
fn from_limbs_rounded(sign: i8, x: &[u64], pow2: i64, nlimbs: u8) -> (Mpf, bool) {
    let n = nlimbs as usize;
    let l = bitlen(x);
    if l == 0 {
        return (Mpf::zero(nlimbs), false);
    }
    let lo = l as i64 - 64 * n as i64; // index of the lowest kept bit
    let mut mant = [0u64; 4];
    extract(x, lo, &mut mant[..n]);
    let mut exp = pow2 + l as i64;
    let mut inexact = false;
    if lo >= 1 {
        inexact = any_below(x, lo);
        if bit_at(x, lo - 1) {
            let mut carry = true;
            for limb in mant[..n].iter_mut() {
                if !carry {
                    break;
                }
                let (v, c) = limb.overflowing_add(1);
                *limb = v;
                carry = c;
            }
            if carry {
                mant = [0; 4];
                mant[n - 1] = 1 << 63;
                exp += 1;
            }
        }
    }
    debug_assert_eq!(mant[n - 1] >> 63, 1);
    (Mpf { sign, exp, nlimbs, mant }, inexact)
}

/// Bit length of a little-endian limb slice.
fn bitlen(x: &[u64]) -> u64 {
    for i in (0..x.len()).rev() {
        if x[i] != 0 {
            return 64 * i as u64 + (64 - x[i].leading_zeros() as u64);
        }
    }
    0
}

/// out bit j = x bit (lo + j); bits outside x read as zero. lo may be
/// negative (a left shift).
fn extract(x: &[u64], lo: i64, out: &mut [u64]) {
    let q = lo.div_euclid(64);
    let r = lo.rem_euclid(64) as u32;
    let get = |idx: i64| -> u64 {
        if idx >= 0 && (idx as usize) < x.len() {
            x[idx as usize]
        } else {
            0
        }
    };
    for (i, o) in out.iter_mut().enumerate() {
        let lo_limb = get(q + i as i64);
        *o = if r == 0 {
            lo_limb
        } else {
            (lo_limb >> r) | (get(q + i as i64 + 1) << (64 - r))
        };
    }
}

fn bit_at(x: &[u64], i: i64) -> bool {
    if i < 0 {
        return false;
    }
    let (q, r) = (i as usize / 64, i as usize % 64);
    q < x.len() && (x[q] >> r) & 1 == 1
}

/// Any nonzero bit strictly below position i?
fn any_below(x: &[u64], i: i64) -> bool {
    if i <= 0 {
        return false;
    }
    let q = (i as usize) / 64;
    let r = (i as usize) % 64;
    for (idx, &limb) in x.iter().enumerate() {
        if idx < q {
            if limb != 0 {
                return true;
            }
        } else if idx == q {
            return r > 0 && limb & ((1u64 << r) - 1) != 0;
        } else {
            break;
        }
    }
    false
}

fn wide_add(a: &mut [u64], b: &[u64]) {
    let mut carry = 0u128;
    for (x, &y) in a.iter_mut().zip(b.iter()) {
        let t = *x as u128 + y as u128 + carry;
        *x = t as u64;
        carry = t >> 64;
    }
    debug_assert_eq!(carry, 0, "wide_add overflow");
}

fn wide_sub(a: &mut [u64], b: &[u64]) {
    let mut borrow = 0i128;
    for (x, &y) in a.iter_mut().zip(b.iter()) {
        let t = *x as i128 - y as i128 + borrow;
        *x = t as u64;
        borrow = t >> 64;
    }
    debug_assert_eq!(borrow, 0, "wide_sub went negative");
}

fn limbs_to_biguint(limbs: &[u64]) -> BigUint {
    let mut bytes = Vec::with_capacity(limbs.len() * 8);
    for &l in limbs {
        bytes.extend_from_slice(&l.to_le_bytes());
    }
    BigUint::from_bytes_le(&bytes)
}

/// A double with an out-of-band binary exponent: value = m·2^e with
/// |m| ∈ [1, 2) or m = 0. Used where magnitudes overflow a double (scanning
/// characteristic polynomials whose coefficients run to thousands of digits)
/// but only ~50 bits of the answer matter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FloatExp {
    pub m: f64,
    pub e: i64,
}

impl FloatExp {
    pub fn zero() -> Self {
        FloatExp { m: 0.0, e: 0 }
    }

    pub fn new(v: f64) -> Self {
        assert!(v.is_finite());
        if v == 0.0 {
            return FloatExp::zero();
        }
        let bits = v.abs().to_bits();
        let raw = (bits >> 52) as i64;
        if raw == 0 {
            // subnormal: renormalize through a scale-up
            let fe = FloatExp::new(v * 2f64.powi(80));
            return FloatExp { m: fe.m, e: fe.e - 80 };
        }
        let e = raw - 1023;
        FloatExp { m: v * 2f64.powi(-e as i32), e }
    }

    pub fn from_bigint(v: &BigInt) -> Self {
        let (sign, mag) = v.clone().into_parts();
        let digits = mag.to_u64_digits();
        if digits.is_empty() {
            return FloatExp::zero();
        }
        let top = digits[digits.len() - 1] as f64;
        let next = if digits.len() >= 2 { digits[digits.len() - 2] as f64 } else { 0.0 };
        let m = top + next * 2f64.powi(-64);
        let base = 64 * (digits.len() as i64 - 1);
        let fe = FloatExp::new(if sign == Sign::Minus { -m } else { m });
        FloatExp { m: fe.m, e: fe.e + base }
    }

    /// Top ~106 bits of a fixed-precision float — enough for error bounds,
    /// where only the magnitude matters but the exponent may be huge.
    pub fn from_mpf(x: &Mpf) -> Self {
        if x.is_zero() {
            return FloatExp::zero();
        }
        let n = x.nlimbs as usize;
        let hi = x.mant[n - 1] as f64;
        let lo = if n >= 2 { x.mant[n - 2] as f64 } else { 0.0 };
        let m = hi + lo * 2f64.powi(-64); // in [2^63, 2^64)
        let fe = FloatExp::new(if x.sign < 0 { -m } else { m });
        FloatExp { m: fe.m, e: fe.e + x.exp - 64 }
    }

    pub fn mul(&self, rhs: &FloatExp) -> FloatExp {
        if self.m == 0.0 || rhs.m == 0.0 {
            return FloatExp::zero();
        }
        let fe = FloatExp::new(self.m * rhs.m);
        FloatExp { m: fe.m, e: fe.e + self.e + rhs.e }
    }

    pub fn add(&self, rhs: &FloatExp) -> FloatExp {
        if self.m == 0.0 {
            return *rhs;
        }
        if rhs.m == 0.0 {
            return *self;
        }
        let (big, small) = if self.e >= rhs.e { (self, rhs) } else { (rhs, self) };
        let d = big.e - small.e;
        if d > 200 {
            return *big;
        }
        let m = big.m + small.m * 2f64.powi(-d as i32);
        if m == 0.0 {
            return FloatExp::zero();
        }
        let fe = FloatExp::new(m);
        FloatExp { m: fe.m, e: fe.e + big.e }
    }

    pub fn neg(&self) -> FloatExp {
        FloatExp { m: -self.m, e: self.e }
    }

    pub fn signum(&self) -> i32 {
        if self.m == 0.0 {
            0
        } else if self.m < 0.0 {
            -1
        } else {
            1
        }
    }

    /// Saturating conversion back to a double.
    pub fn to_f64(&self) -> f64 {
        if self.m == 0.0 {
            return 0.0;
        }
        if self.e > 1023 {
            return self.m.signum() * f64::INFINITY;
        }
        if self.e < -1070 {
            return 0.0;
        }
        self.m * 2f64.powi(self.e as i32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::splitmix64;
    use num_bigint::BigInt;

    /// Exact value as (signed mantissa, pow2): value = M·2^pow2.
    fn exact(m: &Mpf) -> (BigInt, i64) {
        let n = m.nlimbs() as usize;
        let (sign, exp, _, mant) = m.to_raw();
        let mag = limbs_to_biguint(&mant[..n]);
        let v = BigInt::from(mag) * sign;
        (v, exp - 64 * n as i64)
    }

    fn random_mpf(st: &mut u64, nlimbs: u8, exp_range: i64) -> Mpf {
        let n = nlimbs as usize;
        let mut mant = [0u64; 4];
        for limb in mant[..n].iter_mut() {
            *limb = splitmix64(st);
        }
        mant[n - 1] |= 1 << 63;
        let sign = if splitmix64(st) & 1 == 0 { 1 } else { -1 };
        let exp = (splitmix64(st) % (2 * exp_range as u64)) as i64 - exp_range;
        Mpf::from_raw(sign, exp, nlimbs, mant).unwrap()
    }

    /// |a−b| ≤ bound where a = Ma·2^pa etc., all exact in BigInt.
    fn assert_close(a: (BigInt, i64), b: (BigInt, i64), bound_pow2: i64) {
        let common = a.1.min(b.1).min(bound_pow2);
        let av = a.0 << (a.1 - common);
        let bv = b.0 << (b.1 - common);
        let diff = if av >= bv { &av - &bv } else { &bv - &av };
        let bound = BigInt::from(1) << (bound_pow2 - common);
        assert!(diff <= bound, "difference {diff} exceeds 2^{bound_pow2}");
    }

    #[test]
    fn f64_roundtrip() {
        let mut st = 3u64;
        for nlimbs in [2u8, 4] {
            for _ in 0..500 {
                let bits = splitmix64(&mut st);
                let v = f64::from_bits(bits);
                if !v.is_finite() {
                    continue;
                }
                let m = Mpf::from_f64(v, nlimbs);
                assert_eq!(m.to_f64(), v, "bits {bits:#x}");
            }
            for v in [0.0, 1.0, -1.0, 0.5, f64::MIN_POSITIVE / 4.0, 2f64.powi(-1074)] {
                assert_eq!(Mpf::from_f64(v, nlimbs).to_f64(), v);
            }
        }
    }

    #[test]
    fn integer_constructors_agree() {
        for v in [1i64, -1, 2, 7, -100, 1 << 52, (1 << 53) - 1, i64::MAX] {
            let a = Mpf::from_i64(v, 2);
            let (b, inexact) = Mpf::from_bigint(&BigInt::from(v), 2);
            assert!(!inexact);
            assert_eq!(a, b);
            if v.abs() < (1 << 53) {
                assert_eq!(a.to_f64(), v as f64);
            }
        }
        assert!(Mpf::from_i64(0, 4).is_zero());
    }

    #[test]
    fn multiplication_within_half_ulp() {
        let mut st = 17u64;
        for nlimbs in [2u8, 4] {
            let n = nlimbs as i64;
            for _ in 0..300 {
                let a = random_mpf(&mut st, nlimbs, 400);
                let b = random_mpf(&mut st, nlimbs, 400);
                let c = a.mul(&b);
                let (ma, pa) = exact(&a);
                let (mb, pb) = exact(&b);
                // half-up keeps the product within half an ulp of c
                assert_close((ma * mb, pa + pb), exact(&c), c.exponent() - 64 * n - 1);
            }
        }
    }

    #[test]
    fn addition_within_one_ulp() {
        let mut st = 23u64;
        for nlimbs in [2u8, 4] {
            let n = nlimbs as i64;
            for _ in 0..600 {
                let a = random_mpf(&mut st, nlimbs, 100);
                let mut b = random_mpf(&mut st, nlimbs, 100);
                if splitmix64(&mut st) % 3 == 0 {
                    // force nearby exponents to exercise cancellation
                    b = Mpf::from_raw(b.to_raw().0, a.exponent() + (splitmix64(&mut st) % 3) as i64 - 1, nlimbs, b.to_raw().3).unwrap();
                }
                let c = a.add(&b);
                let (ma, pa) = exact(&a);
                let (mb, pb) = exact(&b);
                let common = pa.min(pb);
                let sum = (ma << (pa - common), common);
                let sum = (sum.0 + (mb << (pb - common)), common);
                if c.is_zero() {
                    assert_eq!(sum.0, BigInt::from(0));
                    continue;
                }
                assert_close(sum, exact(&c), c.exponent() - 64 * n);
            }
        }
    }

    #[test]
    fn deep_cancellation_is_exact() {
        let mut st = 31u64;
        for _ in 0..100 {
            let a = random_mpf(&mut st, 2, 50).abs();
            let (s, e, n, mut mant) = a.to_raw();
            if mant[0] == u64::MAX {
                mant[0] -= 1;
            } else {
                mant[0] += 1;
            }
            let b = Mpf::from_raw(s, e, n, mant).unwrap();
            let d = b.sub(&a);
            // difference is exactly ±1 unit in the last place of a
            let (md, pd) = exact(&d);
            let want = (BigInt::from(if mant[0] > a.to_raw().3[0] { 1 } else { -1 }), e - 128);
            assert_close((md, pd), want, e - 128 - 60);
        }
    }

    #[test]
    fn division_inverts_multiplication() {
        let mut st = 41u64;
        for nlimbs in [2u8, 4] {
            for _ in 0..200 {
                let a = random_mpf(&mut st, nlimbs, 300);
                let b = random_mpf(&mut st, nlimbs, 300);
                let c = a.div(&b);
                let r = c.mul(&b).sub(&a);
                if !r.is_zero() {
                    assert!(
                        r.exponent() <= a.exponent() - 64 * nlimbs as i64 + 3,
                        "residual too large: {} vs {}",
                        r.exponent(),
                        a.exponent()
                    );
                }
            }
        }
        let one = Mpf::from_i64(1, 2);
        let four = Mpf::from_i64(4, 2);
        assert_eq!(one.div(&four).to_f64(), 0.25);
        let third = one.div(&Mpf::from_i64(3, 2));
        assert_eq!(third.exponent(), -1);
        assert_eq!(third.to_raw().3[1], 0xAAAA_AAAA_AAAA_AAAA);
    }

    #[test]
    fn bigint_rounding_and_flags() {
        let (a, inexact) = Mpf::from_bigint(&BigInt::from(12345), 2);
        assert!(!inexact);
        assert_eq!(a.to_f64(), 12345.0);

        let big = BigInt::from(1) << 200;
        let (b, inexact) = Mpf::from_bigint(&big, 2);
        assert!(!inexact, "a power of two is exact at any precision");
        assert_eq!(b.exponent(), 201);

        let (c, inexact) = Mpf::from_bigint(&(&big + 1), 2);
        assert!(inexact);
        assert_eq!(c.exponent(), 201);

        // value vs f64 for a 40-digit number
        let ten40 = BigInt::parse_bytes(b"1234567890123456789012345678901234567890", 10).unwrap();
        let (d, _) = Mpf::from_bigint(&ten40, 4);
        let rel = (d.to_f64() - 1.23456789012345678901234567890123456789e39).abs() / 1e39;
        assert!(rel < 1e-14);
    }

    #[test]
    fn scaled_biguint() {
        let (v, inexact) = Mpf::from_biguint_scaled(&BigUint::from(3u32), -1, 2);
        assert!(!inexact);
        assert_eq!(v.to_f64(), 1.5);
        let (w, _) = Mpf::from_biguint_scaled(&BigUint::from(1u32), -1074, 2);
        assert_eq!(w.to_f64(), 2f64.powi(-1074));
    }

    #[test]
    fn ordering_matches_f64() {
        let mut st = 93u64;
        for _ in 0..300 {
            let a = random_mpf(&mut st, 2, 60);
            let b = random_mpf(&mut st, 2, 60);
            let got = a.cmp_mpf(&b);
            let want = a.to_f64().partial_cmp(&b.to_f64()).unwrap();
            assert_eq!(got, want);
        }
        let z = Mpf::zero(2);
        assert!(Mpf::from_i64(-3, 2) < z && z < Mpf::from_i64(3, 2));
        assert_eq!(z.cmp_mpf(&Mpf::zero(2)), Ordering::Equal);
    }

    #[test]
    fn pow2_scaling() {
        let x = Mpf::from_f64(1.75, 2);
        assert_eq!(x.mul_pow2(3).to_f64(), 14.0);
        assert_eq!(x.mul_pow2(-2).to_f64(), 0.4375);
        assert!(Mpf::zero(2).mul_pow2(100).is_zero());
    }

    #[test]
    fn saturation() {
        let (huge, _) = Mpf::from_bigint(&(BigInt::from(1) << 5000), 2);
        assert_eq!(huge.to_f64(), f64::INFINITY);
        assert_eq!(huge.neg().to_f64(), f64::NEG_INFINITY);
        let tiny = Mpf::from_i64(1, 2).div(&huge);
        assert_eq!(tiny.to_f64(), 0.0);
        assert!(!tiny.is_zero(), "underflow to f64 must not lose the Mpf value");
        assert_eq!(tiny.mul(&huge).to_f64(), 1.0);
    }

    #[test]
    fn raw_roundtrip_and_validation() {
        let mut st = 7u64;
        let x = random_mpf(&mut st, 4, 1000);
        let (s, e, n, m) = x.to_raw();
        assert_eq!(Mpf::from_raw(s, e, n, m).unwrap(), x);
        assert!(Mpf::from_raw(2, 0, 2, [0; 4]).is_err());
        assert!(Mpf::from_raw(1, 0, 2, [1, 1, 0, 0]).is_err()); // top bit clear
        assert!(Mpf::from_raw(1, 0, 2, [0, 1 << 63, 1, 0]).is_err()); // junk above
        assert!(Mpf::from_raw(0, 1, 2, [0; 4]).is_err()); // nonzero exp on zero
        assert!(Mpf::from_raw(1, 0, 3, [0, 1 << 63, 0, 0]).is_err());
    }

    #[test]
    fn float_exp_arithmetic() {
        let x = FloatExp::from_bigint(&(BigInt::from(3) << 1000));
        assert_eq!(x.e, 1001);
        assert!((x.m - 1.5).abs() < 1e-15);

        let y = FloatExp::new(3.0 * 2f64.powi(500));
        let sq = y.mul(&y);
        assert!((sq.m - 9.0 / 8.0).abs() < 1e-15 && sq.e == 1003);

        let s = FloatExp::new(2f64.powi(300)).add(&FloatExp::new(2f64.powi(300)));
        assert_eq!((s.m, s.e), (1.0, 301));

        let z = y.add(&y.neg());
        assert_eq!(z.signum(), 0);

        let far = FloatExp { m: 1.0, e: 5000 }.add(&FloatExp { m: 1.0, e: 0 });
        assert_eq!((far.m, far.e), (1.0, 5000));

        assert_eq!(FloatExp::new(-0.75).signum(), -1);
        assert_eq!(FloatExp::new(6.0).to_f64(), 6.0);
        assert_eq!(FloatExp { m: 1.5, e: 2000 }.to_f64(), f64::INFINITY);

        let neg = FloatExp::from_bigint(&BigInt::from(-12));
        assert!((neg.to_f64() + 12.0).abs() < 1e-12);
    }

    #[test]
    fn dyadic_view_is_exact() {
        for (v, nl) in [(1.0, 2u8), (-2.75, 2), (1e-30, 4), (123456789.0, 4)] {
            let x = Mpf::from_f64(v, nl);
            let (num, pow2) = x.to_dyadic();
            // the numerator is the full mantissa, so rebuilding from it is exact
            let (back, inexact) = Mpf::from_bigint(&num, nl);
            assert!(!inexact);
            assert_eq!(back.mul_pow2(pow2), x);
        }
        let (z, _) = Mpf::zero(2).to_dyadic();
        assert_eq!(z, BigInt::from(0));
    }

    #[test]
    fn float_exp_from_mpf_tracks_value_and_scale() {
        for v in [1.0, -24.0, 0.3333333333333333, 1e200] {
            for nl in [2u8, 4] {
                let fe = FloatExp::from_mpf(&Mpf::from_f64(v, nl));
                assert!((fe.to_f64() - v).abs() <= v.abs() * 1e-15);
            }
        }
        // beyond f64 range: exponent carried out of band
        let huge = Mpf::from_f64(1.5, 2).mul_pow2(5000);
        let fe = FloatExp::from_mpf(&huge);
        assert!((fe.m - 1.5).abs() < 1e-15 && fe.e == 5000);
        assert_eq!(FloatExp::from_mpf(&Mpf::zero(4)).signum(), 0);
    }
}
