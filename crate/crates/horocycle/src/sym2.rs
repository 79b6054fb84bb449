//! The symmetric-square L-function at the edge of the critical strip, and
//! the prime-sum statistics built from it.
//!
//! For a normalized eigenform f with λ_f(p) = 2cos θ_p, the symmetric
//! square has Dirichlet series L(s, sym²f) = ζ(2s)·Σ_j λ(j²)j^{−s}, Euler
//! factors over {α_p², 1, ᾱ_p²}, and von Mangoldt coefficients
//! (2cos 2jθ_p + 1)·log p at p^j. Its value at s = 1 is computed three
//! ways whose mutual agreement is the correctness signal:
//!
//! * an exponentially smoothed Dirichlet sum Σ c(n)/n·e^{−n/x}, folded so
//!   the square-part index runs to convergence while λ data is only read
//!   at arguments the table covers,
//! * the Euler product over p ≤ P, where the local factor collapses to
//!   (1 − (λ(p)² − 2)/p + 1/p²)(1 − 1/p),
//! * the short exponential proxy exp(Σ_{p≤k} λ(p²)/p), which tracks the
//!   L-value to a bounded multiplicative factor — that factor is exactly
//!   what `proxy_gap` measures.
//!
//! The module also houses the square of the Fourier normalization
//! constant, C² = 2π²/(Γ(k)·L(1, sym²f)), kept in log form since Γ(k)
//! overflows doubles long before k reaches 300.

use std::f64::consts::PI;

use crate::arith::{lgamma_int, NeumaierSum, Sieve};
use crate::engine::Eigenform;
use crate::{Error, Result};

/// Satake angle θ ∈ [0, π] with λ(p) = 2cos θ, clamping the argument so a
/// value grazing the Deligne wall by rounding stays legal.
pub fn satake_angle(lambda_p: f64) -> f64 {
    (lambda_p / 2.0).clamp(-1.0, 1.0).acos()
}

/// Satake angles for every prime p ≤ p_max. Clamping more than the
/// eigenvalue's own error bar can explain is reported as a bound
/// violation rather than silently absorbed.
pub fn satake_angles(f: &Eigenform, p_max: u64) -> Result<Vec<(u64, f64)>> {
    let mut out = Vec::new();
    for p in crate::arith::primes_up_to(p_max) {
        let lam = f.try_lambda(p)?;
        let excess = lam.abs() / 2.0 - 1.0;
        if excess > f.lambda_err(p) / 2.0 + 1e-300 {
            return Err(Error::DeligneViolation { n: p, excess });
        }
        out.push((p, satake_angle(lam)));
    }
    Ok(out)
}

/// λ(p^e) from λ(p) by the Hecke recursion λ(p^m) = λ(p)λ(p^{m−1}) − λ(p^{m−2}).
pub fn lambda_prime_power(lambda_p: f64, e: u32) -> f64 {
    let (mut a, mut b) = (1.0, lambda_p);
    if e == 0 {
        return 1.0;
    }
    for _ in 1..e {
        let c = lambda_p * b - a;
        a = b;
        b = c;
    }
    b
}

/// λ(j²) for 1 ≤ j ≤ limit, assembled multiplicatively from the dense
/// table — j² may lie far beyond the table, but only λ(p) for p ≤ limit is
/// ever read.
pub fn lambda_square_table(f: &Eigenform, limit: usize) -> Result<Vec<f64>> {
    if limit >= f.table_len() {
        return Err(Error::OutOfTable {
            n: limit as u64,
            len: f.table_len() as u64,
            cutoff: f.prime_cutoff(),
        });
    }
    let sieve = Sieve::new(limit);
    let mut out = vec![0.0; limit + 1];
    if limit >= 1 {
        out[1] = 1.0;
    }
    for j in 2..=limit {
        let p = sieve.min_factor[j] as usize;
        let mut m = j;
        let mut a = 0u32;
        while m % p == 0 {
            m /= p;
            a += 1;
        }
        out[j] = lambda_prime_power(f.lambda_f64(p as u64), 2 * a) * out[m];
    }
    Ok(out)
}

/// Σ_{d²|n} λ((n/d²)²): coefficient n of ζ(2s)·Σ_j λ(j²) j^{−s}.
pub fn folded_coefficient(lam_sq: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    let mut d = 1usize;
    while d * d <= n {
        if n % (d * d) == 0 {
            s += lam_sq[n / (d * d)];
        }
        d += 1;
    }
    s
}

/// Local coefficient c(p^a) of the degree-3 Euler factor
/// [(1 − α²t)(1 − t)(1 − ᾱ²t)]^{-1}: summing the geometric middle factor
/// gives c(p^a) = Σ_{s≤a} V_s with V_s = sin(2(s+1)θ)/sin(2θ), generated
/// by the stable recursion V_s = (λ(p)² − 2)V_{s−1} − V_{s−2}.
pub fn sym2_local(lambda_p: f64, a: u32) -> f64 {
    let t = lambda_p * lambda_p - 2.0; // 2cos(2θ)
    let (mut prev, mut cur) = (1.0, t);
    let mut acc = 1.0;
    for _ in 0..a {
        acc += cur;
        let next = t * cur - prev;
        prev = cur;
        cur = next;
    }
    acc
}

/// The multiplicative coefficients c(n) of L(s, sym²f) for n ≤ n_max.
pub fn sym2_coefficients(f: &Eigenform, n_max: usize) -> Result<Vec<f64>> {
    if n_max >= f.table_len() {
        return Err(Error::OutOfTable {
            n: n_max as u64,
            len: f.table_len() as u64,
            cutoff: f.prime_cutoff(),
        });
    }
    let sieve = Sieve::new(n_max);
    let mut out = vec![0.0; n_max + 1];
    if n_max >= 1 {
        out[1] = 1.0;
    }
    for j in 2..=n_max {
        let p = sieve.min_factor[j] as usize;
        let mut m = j;
        let mut a = 0u32;
        while m % p == 0 {
            m /= p;
            a += 1;
        }
        out[j] = sym2_local(f.lambda_f64(p as u64), a) * out[m];
    }
    Ok(out)
}

/// Von Mangoldt coefficient of sym²f: zero off prime powers, and
/// (α^{2j} + 1 + β^{2j})·log p = (2cos 2jθ_p + 1)·log p at n = p^j.
/// The cosine comes from the doubled-angle Chebyshev recursion, so the
/// Satake boundary needs no special casing.
pub fn vonmangoldt_sym2(f: &Eigenform, n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::BadRequest(format!("von Mangoldt coefficient needs n >= 2, got {n}")));
    }
    // factor as p^j by peeling the smallest prime factor
    let mut p = 0u64;
    let mut m = n;
    let mut q = 2u64;
    while q * q <= m {
        if m % q == 0 {
            p = q;
            break;
        }
        q += 1;
    }
    if p == 0 {
        p = m; // n is prime
    }
    let mut j = 0u32;
    while m % p == 0 {
        m /= p;
        j += 1;
    }
    if m != 1 {
        return Ok(0.0); // two distinct prime factors
    }
    let lam = f.try_lambda(p)?;
    let t = lam * lam - 2.0; // 2cos(2θ)
    // w_j = 2cos(2jθ): w_0 = 2, w_1 = t, w_j = t·w_{j−1} − w_{j−2}
    let (mut prev, mut cur) = (2.0, t);
    for _ in 1..j {
        let next = t * cur - prev;
        prev = cur;
        cur = next;
    }
    let w = if j == 0 { 2.0 } else { cur };
    Ok((w + 1.0) * (p as f64).ln())
}

/// The smoothing weight e^{−n/x}(1 + n/x) applied to Dirichlet coefficients.
pub fn smoothing_kernel(n: f64, x: f64) -> f64 {
    (-n / x).exp() * (1.0 + n / x)
}

/// Smoothed von Mangoldt sum Σ_n Λ_{sym²}(n)/n^σ · e^{−n/x}(1 + n/x) over
/// n ≤ n_max, with a certified bound on the dropped tail obtained from
/// |Λ_{sym²}(n)| ≤ 3Λ(n) ≤ 3 log n. Returns (value, tail_bound).
pub fn smoothed_coeff_sum(f: &Eigenform, sigma: f64, x: f64, n_max: u64) -> Result<(f64, f64)> {
    if !(1.0..=1.25).contains(&sigma) || x <= 0.0 || !x.is_finite() {
        return Err(Error::BadRequest(format!(
            "smoothed sum needs 1 <= sigma <= 5/4 and finite x > 0, got sigma={sigma} x={x}"
        )));
    }
    if n_max >= f.table_len() as u64 {
        return Err(Error::OutOfTable {
            n: n_max,
            len: f.table_len() as u64,
            cutoff: f.prime_cutoff(),
        });
    }
    if 40.0 * x > 2e7 {
        return Err(Error::BadRequest(format!("smoothing scale x={x} too large to certify the tail")));
    }
    let mut sum = NeumaierSum::new();
    for p in crate::arith::primes_up_to(n_max) {
        let lam = f.lambda_f64(p);
        let t = lam * lam - 2.0;
        let lp = (p as f64).ln();
        let (mut prev, mut cur) = (2.0, t); // 2cos(2jθ) for j = 0, 1
        let mut pj = p;
        loop {
            let nf = pj as f64;
            sum.add((cur + 1.0) * lp * smoothing_kernel(nf, x) / nf.powf(sigma));
            match pj.checked_mul(p) {
                Some(next) if next <= n_max => pj = next,
                _ => break,
            }
            let w = t * cur - prev;
            prev = cur;
            cur = w;
        }
    }
    // dropped tail: Σ_{n>n_max} 3·log n·kernel/n^σ, finished off with a
    // geometric remainder once the kernel ratio is provably below e^{−1/(2x)}
    let mut tail = 0.0f64;
    let mut n = n_max + 1;
    let floor_n = (40.0 * x) as u64 + 2;
    loop {
        let nf = n as f64;
        let term = 3.0 * nf.ln() * smoothing_kernel(nf, x) / nf.powf(sigma);
        if n > floor_n {
            tail += term * 3.0 * x.max(1.0);
            break;
        }
        tail += term;
        n += 1;
    }
    if tail > 1e-12 {
        return Err(Error::TailTooLarge { tail, eps: 1e-12 });
    }
    Ok((sum.total(), tail))
}

/// Σ_{p ≤ cutoff} λ(p²)/p — the exponent of the short proxy for log L(1, sym²f).
pub fn proxy_exponent(f: &Eigenform, cutoff: u64) -> Result<f64> {
    let mut s = NeumaierSum::new();
    for p in crate::arith::primes_up_to(cutoff) {
        let lam = f.try_lambda(p)?;
        s.add((lam * lam - 1.0) / p as f64);
    }
    Ok(s.total())
}

/// L(1, sym²f) by three routes, with the cross-method spread and the
/// bounded-ratio statistic relating the L-value to its short prime sum.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct LValueReport {
    pub weight: u32,
    /// Smoothed Dirichlet sum Σ c(n)/n·e^{−n/x}.
    pub value_dirichlet: f64,
    /// Euler product over p ≤ prime_cutoff.
    pub value_euler: f64,
    /// exp(Σ_{p≤k} λ(p²)/p).
    pub value_proxy: f64,
    /// Smoothing scale x of the Dirichlet route.
    pub x_smoothing: f64,
    /// Euler-product truncation.
    pub prime_cutoff: u64,
    /// max/min ratio over the three values (≥ 1).
    pub spread: f64,
    /// log(value_dirichlet) − Σ_{p≤k} λ(p²)/p; bounded uniformly in the weight.
    pub proxy_gap: f64,
}

/// Compute [`LValueReport`] from a form's table. The smoothing scale is
/// x = max(10⁴, k³) and the Euler cutoff max(10⁴, 100k), clipped to the
/// table; the default table length accommodates the full cutoffs.
pub fn l_value(f: &Eigenform) -> Result<LValueReport> {
    let len = f.table_len();
    let k = f.weight as f64;
    if (len as u64) <= f.weight as u64 {
        return Err(Error::OutOfTable {
            n: f.weight as u64,
            len: len as u64,
            cutoff: f.prime_cutoff(),
        });
    }
    let x = (k * k * k).max(1e4);

    // Σ_n c(n)/n·e^{−n/x} folded through n = d²m: the d-sum runs to
    // convergence for every m, so only λ(m²) for table-sized m is needed.
    let m_cap = ((37.0 * x) as usize).min(len - 1);
    let lam_sq = lambda_square_table(f, m_cap)?;
    let mut dir = NeumaierSum::new();
    for m in 1..=m_cap {
        let mf = m as f64;
        let mut kernel = 0.0f64;
        let mut d = 1u64;
        loop {
            let e = (d * d) as f64 * mf / x;
            if e > 40.0 {
                break;
            }
            kernel += (-e).exp() / (d * d) as f64;
            d += 1;
        }
        dir.add(lam_sq[m] / mf * kernel);
    }
    let value_dirichlet = dir.total();

    let p_max = ((100 * f.weight as usize).max(10_000)).min(len - 1) as u64;
    let mut log_l = NeumaierSum::new();
    for p in crate::arith::primes_up_to(p_max) {
        let pf = p as f64;
        let lp = f.lambda_f64(p);
        // (1 − α²/p)(1 − 1/p)(1 − ᾱ²/p) with α² + ᾱ² = λ(p)² − 2
        let local = (1.0 - (lp * lp - 2.0) / pf + 1.0 / (pf * pf)) * (1.0 - 1.0 / pf);
        log_l.add(-local.ln());
    }
    let value_euler = log_l.total().exp();

    let proxy_sum = proxy_exponent(f, f.weight as u64)?;
    let value_proxy = proxy_sum.exp();

    if !(value_dirichlet > 0.0) {
        return Err(Error::BadRequest(format!(
            "smoothed Dirichlet value non-positive ({value_dirichlet}) for weight {}",
            f.weight
        )));
    }
    let values = [value_dirichlet, value_euler, value_proxy];
    let hi = values.iter().cloned().fold(f64::MIN, f64::max);
    let lo = values.iter().cloned().fold(f64::MAX, f64::min);
    Ok(LValueReport {
        weight: f.weight,
        value_dirichlet,
        value_euler,
        value_proxy,
        x_smoothing: x,
        prime_cutoff: p_max,
        spread: hi / lo,
        proxy_gap: value_dirichlet.ln() - proxy_sum,
    })
}

/// log C² = log 2π² − log Γ(k) − log L(1, sym²f), the squared Fourier
/// normalization constant in log form (Γ(300) overflows f64; this must not).
pub fn petersson_log_c2(weight: u32, l_sym2: f64) -> f64 {
    (2.0 * PI * PI).ln() - lgamma_int(weight as u64) - l_sym2.ln()
}

/// Normalized prime correlation of two forms,
/// Σ λ_f(p)λ_g(p)/p / √(Σ λ_f(p)²/p · Σ λ_g(p)²/p) over p ≤ p_max.
/// Cauchy–Schwarz puts it in [−1, 1], with equality only for proportional
/// sequences — so distinct eigenforms must land strictly inside.
pub fn cross_correlation(f: &Eigenform, g: &Eigenform, p_max: u64) -> Result<f64> {
    let mut num = NeumaierSum::new();
    let mut df = NeumaierSum::new();
    let mut dg = NeumaierSum::new();
    for p in crate::arith::primes_up_to(p_max) {
        let (a, b) = (f.try_lambda(p)?, g.try_lambda(p)?);
        num.add(a * b / p as f64);
        df.add(a * a / p as f64);
        dg.add(b * b / p as f64);
    }
    let denom = (df.total() * dg.total()).sqrt();
    if denom == 0.0 {
        return Err(Error::BadRequest("degenerate prime sums in correlation".into()));
    }
    Ok(num.total() / denom)
}
