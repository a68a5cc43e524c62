//! Complete exponential sums of `F^t(b) = b_x · b_y - t`, local densities and
//! the singular series.
//!
//! ```text
//! S_q(c) = sum*_{a mod q} sum_{b mod q} e_q(a F^t(b) + c · b)
//!        = q^{d1} sum*_{a mod q} e_q(-a t - ā (c_x · c_y)).
//! ```
//!
//! With `c = 0` this is `q^{d1} c_q(t)`, so the singular-series terms are
//! exact integers and the local factors exact rationals.

use std::f64::consts::TAU;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::arith::{euler_phi, gcd_u64, is_prime, mod_inverse, primes_up_to, ramanujan_i64, SpfSieve};
use crate::error::{arg, QcError, Result};
use crate::forms::QuadraticFormF0;
use crate::summation::NeumaierSum;

/// Largest modulus accepted by [`s_q_naive`].
pub const NAIVE_MAX_Q: u64 = 64;
/// Work cap (number of summands) for [`s_q_literal`].
pub const LITERAL_MAX_TERMS: f64 = 2e8;
/// Work cap for the residue dynamic programme in [`local_density`].
pub const DENSITY_MAX_WORK: f64 = 1e9;

/// A value of `S_q(c)` with the data it was computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSumValue {
    pub q: u64,
    pub c: Vec<i64>,
    pub t: i64,
    pub value_complex: Complex64,
    /// Present when the sum is known to be an integer.
    pub value_exact: Option<BigInt>,
}

/// How a [`SigmaReport`] value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaMethod {
    /// Product of the local series `sum_l p^{-dl} S_{p^l}(0)` over `p <= P`.
    EulerProduct,
    /// Product of the `k = 1` densities `1 + p^{-d1} c_p(t)` over `p <= P`.
    Remark5Product,
    /// `sum_{q <= X} q^{-d} S_q(0)`.
    DirichletSum,
}

impl SigmaMethod {
    pub fn name(&self) -> &'static str {
        match self {
            SigmaMethod::EulerProduct => "euler",
            SigmaMethod::Remark5Product => "remark5",
            SigmaMethod::DirichletSum => "dirichlet",
        }
    }
}

/// One local factor of an Euler product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimeFactor {
    pub p: u64,
    pub sigma_p: f64,
    pub l_max: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaReport {
    pub method: SigmaMethod,
    /// `P` for products over primes, `X` for the Dirichlet sum.
    pub cutoff: u64,
    pub value: f64,
    /// Certified bound for `|value - sigma|`.
    pub tail_bound: f64,
    pub per_prime: Vec<PrimeFactor>,
    /// `|value(X) - value(X/2)| X^{d/2-2}` for the Dirichlet sum.
    pub empirical_constant: Option<f64>,
}

/// A truncated local series `sigma_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFactor {
    pub value: BigRational,
    pub l_max: u32,
    /// Certified bound for the omitted terms.
    pub tail: f64,
}

impl LocalFactor {
    pub fn value_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::NAN)
    }
}

/// Ramanujan sum `c_q(n) = sum*_{a mod q} e_q(a n)`.
pub fn ramanujan(q: u64, n: i64) -> Result<BigInt> {
    if q == 0 {
        return arg("modulus q must be positive");
    }
    Ok(BigInt::from(ramanujan_i64(q, n)))
}

fn check_c(form: &QuadraticFormF0, q: u64, c: &[i64]) -> Result<()> {
    if q == 0 {
        return arg("modulus q must be positive");
    }
    if c.len() != form.dim() {
        return arg(format!("c has length {}, expected {}", c.len(), form.dim()));
    }
    Ok(())
}

fn residue(v: i128, q: u64) -> u64 {
    v.rem_euclid(q as i128) as u64
}

fn e_q(r: u64, q: u64) -> Complex64 {
    let (s, c) = (TAU * r as f64 / q as f64).sin_cos();
    Complex64::new(c, s)
}

/// `sum_r counts[r] e_q(r + shift)` with compensated accumulation.
fn weighted_phase_sum(counts: &[u128], shift: i128, q: u64) -> Complex64 {
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    for (r, &n) in counts.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let z = e_q(residue(r as i128 + shift, q), q) * n as f64;
        re.add(z.re);
        im.add(z.im);
    }
    Complex64::new(re.value(), im.value())
}

/// `q^{d1} c_q(t)` when the phase `ā k` drops out, i.e. when `q | k`.
fn exact_value(form: &QuadraticFormF0, q: u64, k: i128, t: i64) -> Option<BigInt> {
    let qb = BigInt::from(q).pow(form.d1() as u32);
    if k.rem_euclid(q as i128) == 0 {
        return Some(qb * ramanujan_i64(q, t));
    }
    if (t as i128).rem_euclid(q as i128) == 0 {
        // ā runs over all units, so the sum is c_q(k) with k reduced mod q.
        let kr = residue(k, q) as i64;
        return Some(qb * ramanujan_i64(q, kr));
    }
    None
}

fn cross_term(form: &QuadraticFormF0, c: &[i64]) -> i128 {
    let (cx, cy) = c.split_at(form.d1());
    cx.iter().zip(cy).map(|(&a, &b)| a as i128 * b as i128).sum()
}

/// `S_q(c)` by direct summation over `a` and `b`.
///
/// For each unit `a` the `q^d` summands are grouped by their phase: the
/// number of `b` with `a F0(b) + c · b ≡ r (mod q)` is counted exactly by
/// convolving the per-pair residue histograms, and the phases are then
/// summed once per residue.
pub fn s_q_naive(form: &QuadraticFormF0, q: u64, c: &[i64], t: i64) -> Result<ExpSumValue> {
    check_c(form, q, c)?;
    if q > NAIVE_MAX_Q {
        return Err(QcError::Capability(format!(
            "q = {q} exceeds the naive limit {NAIVE_MAX_Q}; use S_q_factored"
        )));
    }
    let d1 = form.d1();
    let qs = q as usize;
    let mut re = NeumaierSum::new();
    let mut im = NeumaierSum::new();
    for a in (0..q).filter(|&a| gcd_u64(a, q) == 1) {
        let mut total = vec![0u128; qs];
        total[0] = 1;
        for i in 0..d1 {
            let (cx, cy) = (c[i], c[d1 + i]);
            let mut pair = vec![0u128; qs];
            for bx in 0..q {
                for by in 0..q {
                    let v = a as i128 * bx as i128 * by as i128 + cx as i128 * bx as i128 + cy as i128 * by as i128;
                    pair[residue(v, q) as usize] += 1;
                }
            }
            total = cyclic_convolve(&total, &pair);
        }
        let z = weighted_phase_sum(&total, -(a as i128) * t as i128, q);
        re.add(z.re);
        im.add(z.im);
    }
    Ok(ExpSumValue {
        q,
        c: c.to_vec(),
        t,
        value_complex: Complex64::new(re.value(), im.value()),
        value_exact: exact_value(form, q, cross_term(form, c), t),
    })
}

/// `S_q(c)` summed term by term over all `(a, b)`; for small moduli only.
pub fn s_q_literal(form: &QuadraticFormF0, q: u64, c: &[i64], t: i64) -> Result<ExpSumValue> {
    check_c(form, q, c)?;
    let d = form.dim();
    let terms = euler_phi(q) as f64 * (q as f64).powi(d as i32);
    if terms > LITERAL_MAX_TERMS {
        return Err(QcError::Capability(format!(
            "literal summation needs {terms:e} terms (cap {LITERAL_MAX_TERMS:e})"
        )));
    }
    let mut counts = vec![0u128; q as usize];
    let mut b = vec![0i64; d];
    for a in (0..q).filter(|&a| gcd_u64(a, q) == 1) {
        loop {
            let f: i128 = form.eval_exact(&b)? - t as i128;
            let lin: i128 = c.iter().zip(&b).map(|(&ci, &bi)| ci as i128 * bi as i128).sum();
            counts[residue(a as i128 * f + lin, q) as usize] += 1;
            // Odometer increment over (Z/q)^d.
            let mut i = 0;
            while i < d {
                b[i] += 1;
                if (b[i] as u64) < q {
                    break;
                }
                b[i] = 0;
                i += 1;
            }
            if i == d {
                break;
            }
        }
    }
    Ok(ExpSumValue {
        q,
        c: c.to_vec(),
        t,
        value_complex: weighted_phase_sum(&counts, 0, q),
        value_exact: exact_value(form, q, cross_term(form, c), t),
    })
}

/// `S_q(c) = q^{d1} sum*_a e_q(-a t - ā (c_x · c_y))` in `O(q)` work.
pub fn s_q_factored(form: &QuadraticFormF0, q: u64, c: &[i64], t: i64) -> Result<ExpSumValue> {
    check_c(form, q, c)?;
    let k = cross_term(form, c);
    let exact = exact_value(form, q, k, t);
    let value_complex = match &exact {
        Some(v) => Complex64::new(v.to_f64().unwrap_or(f64::INFINITY), 0.0),
        None => {
            let kq = residue(k, q) as i128;
            let tq = residue(t as i128, q) as i128;
            let mut re = NeumaierSum::new();
            let mut im = NeumaierSum::new();
            for a in 1..q {
                if let Some(ab) = mod_inverse(a as i64, q) {
                    let z = e_q(residue(-(a as i128) * tq - ab as i128 * kq, q), q);
                    re.add(z.re);
                    im.add(z.im);
                }
            }
            let scale = (q as f64).powi(form.d1() as i32);
            Complex64::new(re.value() * scale, im.value() * scale)
        }
    };
    Ok(ExpSumValue { q, c: c.to_vec(), t, value_complex, value_exact: exact })
}

fn check_prime_dim(p: u64, d: usize) -> Result<()> {
    if !is_prime(p) {
        return arg(format!("{p} is not prime"));
    }
    if d < 6 || d % 2 != 0 {
        return arg(format!("d must be even and at least 6, got {d}"));
    }
    Ok(())
}

/// `sigma_p = sum_{l <= l_max} p^{-dl} S_{p^l}(0)` with exact rational
/// terms `p^{-l d/2} c_{p^l}(t)`.
///
/// `l_max` is the least level whose geometric envelope
/// `sum_{l > l_max} 2 p^{l(1 - d/2)}` is at most `rel_tol · value`. When
/// `t != 0` all terms with `p^{l-1} ∤ t` vanish, and the tail is exactly 0
/// from that level on.
pub fn sigma_p(p: u64, d: usize, t: i64, rel_tol: f64) -> Result<LocalFactor> {
    sigma_p_capped(p, d, t, rel_tol, None)
}

/// [`sigma_p`] stopping at level `max_level` at the latest, with the
/// envelope tail of the omitted levels.
pub fn sigma_p_capped(p: u64, d: usize, t: i64, rel_tol: f64, max_level: Option<u32>) -> Result<LocalFactor> {
    check_prime_dim(p, d)?;
    if !(rel_tol > 0.0) {
        return arg("rel_tol must be positive");
    }
    let half = (d / 2) as u32;
    let r = (p as f64).powf(1.0 - half as f64);
    let pb = BigInt::from(p);
    let mut value = BigRational::one();
    let mut l = 0u32;
    loop {
        // Terms beyond l vanish once p^l does not divide t.
        let p_l = pb.pow(l);
        if t != 0 && !(BigInt::from(t) % &p_l).is_zero() {
            return Ok(LocalFactor { value, l_max: l, tail: 0.0 });
        }
        let tail = 2.0 * r.powi(l as i32 + 1) / (1.0 - r);
        let v = value.to_f64().unwrap_or(f64::NAN);
        if tail <= rel_tol * v.abs() || max_level.is_some_and(|m| l >= m) {
            return Ok(LocalFactor { value, l_max: l, tail });
        }
        l += 1;
        let q = pb.pow(l);
        let q_u64 = q.to_u64().ok_or_else(|| QcError::Capability("p^l overflows 64 bits".into()))?;
        let c = BigInt::from(ramanujan_i64(q_u64, t));
        value += BigRational::new(c, q.pow(half));
    }
}

/// `1 + p^{1-d1} - p^{-d1}`, the local density of `x · y = 0` modulo `p`.
pub fn remark5_sigma_p(p: u64, d1: usize) -> Result<BigRational> {
    if !is_prime(p) {
        return arg(format!("{p} is not prime"));
    }
    if d1 < 1 {
        return arg("d1 must be positive");
    }
    let pd = BigInt::from(p).pow(d1 as u32);
    Ok(BigRational::one() + BigRational::new(BigInt::from(p) - 1, pd))
}

/// `1 + p^{-d1} c_p(t)`: the modulo-`p` density of `x · y = t`; equal to
/// [`remark5_sigma_p`] for `t = 0`.
pub fn mod_p_density(p: u64, d1: usize, t: i64) -> Result<BigRational> {
    if !is_prime(p) {
        return arg(format!("{p} is not prime"));
    }
    let pd = BigInt::from(p).pow(d1 as u32);
    Ok(BigRational::one() + BigRational::new(BigInt::from(ramanujan_i64(p, t)), pd))
}

fn cyclic_convolve(a: &[u128], b: &[u128]) -> Vec<u128> {
    let n = a.len();
    let mut out = vec![0u128; n];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            if y != 0 {
                out[(i + j) % n] += x * y;
            }
        }
    }
    out
}

/// Number of residues `z mod p^k` with `F0(z) ≡ t`, divided by
/// `p^{(2 d1 - 1) k}`.
pub fn local_density(p: u64, k: u32, d1: usize, t: i64) -> Result<BigRational> {
    if !is_prime(p) {
        return arg(format!("{p} is not prime"));
    }
    if k == 0 || d1 == 0 {
        return arg("k and d1 must be positive");
    }
    let q = (p as f64).powi(k as i32);
    let work = q * q * (d1 as f64 + 1.0);
    if work > DENSITY_MAX_WORK || 2.0 * d1 as f64 * q.log2() > 126.0 {
        return Err(QcError::Capability(format!(
            "local density modulo {p}^{k} in dimension {} exceeds the work cap",
            2 * d1
        )));
    }
    let q = p.pow(k);
    let mut pair = vec![0u128; q as usize];
    for x in 0..q {
        for y in 0..q {
            pair[((x as u128 * y as u128) % q as u128) as usize] += 1;
        }
    }
    let mut total = vec![0u128; q as usize];
    total[0] = 1;
    for _ in 0..d1 {
        total = cyclic_convolve(&total, &pair);
    }
    let count = BigInt::from(total[residue(t as i128, q) as usize]);
    let denom = BigInt::from(p).pow((2 * d1 as u32 - 1) * k);
    Ok(BigRational::new(count, denom))
}

/// `sum_{p > P} p^{-k}` bounded with `π(x) < 1.25506 x / ln x` and partial
/// summation: `1.25506 k P^{1-k} / ((k - 1) ln P)`, valid for `k > 1`.
fn prime_tail_power_sum(cutoff: u64, k: f64) -> f64 {
    let p = (cutoff.max(2)) as f64;
    1.25506 * k * p.powf(1.0 - k) / ((k - 1.0) * p.ln())
}

fn euler_combine(
    method: SigmaMethod,
    cutoff: u64,
    factors: Vec<(PrimeFactor, f64, f64)>,
    omitted_sum: f64,
    omitted_max: f64,
) -> SigmaReport {
    // Each entry holds (factor, sigma_p - 1, truncation tail).
    let mut log_sum = NeumaierSum::new();
    let mut rel_tail = NeumaierSum::new();
    for (f, eps, tail) in &factors {
        log_sum.add(eps.ln_1p());
        rel_tail.add((tail / f.sigma_p).ln_1p());
    }
    let value = log_sum.value().exp();
    // |ln(1 + e)| <= |e| / (1 - |e|) for the omitted factors.
    let s = omitted_sum / (1.0 - omitted_max) + rel_tail.value();
    SigmaReport {
        method,
        cutoff,
        value,
        tail_bound: value * s.exp_m1(),
        per_prime: factors.into_iter().map(|(f, _, _)| f).collect(),
        empirical_constant: None,
    }
}

fn rational_minus_one_f64(v: &BigRational) -> f64 {
    (v - BigRational::one()).to_f64().unwrap_or(f64::NAN)
}

/// `prod_{p <= P} sigma_p` with each factor from [`sigma_p`].
///
/// The omitted primes are bounded by the envelope
/// `|sigma_p - 1| <= 2 (1 - 1/p) p^{1-d/2} / (1 - p^{1-d/2})`.
pub fn sigma_euler(cutoff: u64, d: usize, t: i64, rel_tol: f64) -> Result<SigmaReport> {
    sigma_euler_capped(cutoff, d, t, rel_tol, None)
}

/// [`sigma_euler`] with every local factor truncated at level `max_level`
/// at the latest.
pub fn sigma_euler_capped(
    cutoff: u64,
    d: usize,
    t: i64,
    rel_tol: f64,
    max_level: Option<u32>,
) -> Result<SigmaReport> {
    if cutoff < 2 {
        return arg("the prime cutoff P must be at least 2");
    }
    check_prime_dim(2, d)?;
    let primes = primes_up_to(cutoff);
    let factors = primes
        .par_iter()
        .map(|&p| {
            let lf = sigma_p_capped(p, d, t, rel_tol, max_level)?;
            let pf = PrimeFactor { p, sigma_p: lf.value_f64(), l_max: lf.l_max };
            Ok((pf, rational_minus_one_f64(&lf.value), lf.tail))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = d as f64 / 2.0 - 1.0;
    let next = (cutoff + 1) as f64;
    let r_next = next.powf(-k);
    let c = 2.0 / (1.0 - r_next);
    let omitted_max = c * r_next;
    let omitted = c * prime_tail_power_sum(cutoff, k);
    Ok(euler_combine(SigmaMethod::EulerProduct, cutoff, factors, omitted, omitted_max))
}

/// `prod_{p <= P} (1 + p^{-d1} c_p(t))`, the product of modulo-`p` densities.
pub fn sigma_euler_remark5(cutoff: u64, d1: usize, t: i64) -> Result<SigmaReport> {
    if cutoff < 2 {
        return arg("the prime cutoff P must be at least 2");
    }
    if d1 < 3 {
        return arg("the density product converges only for d1 >= 3");
    }
    let factors = primes_up_to(cutoff)
        .par_iter()
        .map(|&p| {
            let v = mod_p_density(p, d1, t)?;
            let pf = PrimeFactor { p, sigma_p: v.to_f64().unwrap_or(f64::NAN), l_max: 1 };
            Ok((pf, rational_minus_one_f64(&v), 0.0))
        })
        .collect::<Result<Vec<_>>>()?;
    // |p^{-d1} c_p(t)| <= p^{1-d1}.
    let k = d1 as f64 - 1.0;
    let omitted_max = ((cutoff + 1) as f64).powf(-k);
    let omitted = prime_tail_power_sum(cutoff, k);
    Ok(euler_combine(SigmaMethod::Remark5Product, cutoff, factors, omitted, omitted_max))
}

fn dirichlet_partial(sieve: &SpfSieve, x: u64, d: usize, t: i64) -> f64 {
    let half = (d / 2) as i32;
    let mut acc = NeumaierSum::new();
    for q in 1..=x {
        let c = sieve.ramanujan(q, t);
        if c != 0 {
            acc.add(c as f64 * (q as f64).powi(-half));
        }
    }
    acc.value()
}

/// `sum_{q <= X} q^{-d} S_q(0) = sum_{q <= X} q^{-d/2} c_q(t)`.
///
/// `|c_q(t)| <= q` gives the certified tail `X^{2-d/2} / (d/2 - 2)`; the
/// report also carries the constant fitted from the cutoffs `X` and `X/2`.
pub fn sigma_dirichlet(cutoff: u64, d: usize, t: i64) -> Result<SigmaReport> {
    if cutoff < 1 {
        return arg("the cutoff X must be at least 1");
    }
    check_prime_dim(2, d)?;
    let sieve = SpfSieve::new(cutoff);
    let value = dirichlet_partial(&sieve, cutoff, d, t);
    let expo = d as f64 / 2.0 - 2.0;
    let x = cutoff as f64;
    let tail_bound = x.powf(-expo) / expo;
    let empirical_constant = (cutoff >= 2).then(|| {
        let half = dirichlet_partial(&sieve, cutoff / 2, d, t);
        (value - half).abs() * x.powf(expo)
    });
    Ok(SigmaReport {
        method: SigmaMethod::DirichletSum,
        cutoff,
        value,
        tail_bound,
        per_prime: Vec::new(),
        empirical_constant,
    })
}

/// `u c`, the twisted frequency vector of the multiplicativity relation
/// `S_{q q'}(c) = S_q(q̄' c) S_{q'}(q̄ c)`.
pub fn twist_vector(c: &[i64], u: u64) -> Vec<i64> {
    c.iter().map(|&v| v * u as i64).collect()
}

/// `prod_p (1 + 1/(p(p+1))) = ζ(2)/ζ(3)`: the `d = 6`, `t = 0` singular series.
pub fn sigma_d6_closed_form() -> f64 {
    const ZETA3: f64 = 1.202_056_903_159_594_3;
    std::f64::consts::PI.powi(2) / 6.0 / ZETA3
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn f0(d1: usize) -> QuadraticFormF0 {
        QuadraticFormF0::new(d1).unwrap()
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn ramanujan_examples() {
        assert_eq!(ramanujan(1, 17).unwrap(), BigInt::from(1));
        assert_eq!(ramanujan(7, 0).unwrap(), BigInt::from(6));
        assert_eq!(ramanujan(6, 1).unwrap(), BigInt::from(1));
        assert_eq!(ramanujan(4, 6).unwrap(), BigInt::from(-2));
        assert!(ramanujan(0, 1).is_err());
    }

    #[test]
    fn ramanujan_matches_direct_sum() {
        for q in 1..=40u64 {
            for n in -12..=12i64 {
                let direct: f64 = (0..q)
                    .filter(|&a| gcd_u64(a, q) == 1)
                    .map(|a| (TAU * (a as i64 * n) as f64 / q as f64).cos())
                    .sum();
                assert!((direct - ramanujan_i64(q, n) as f64).abs() < 1e-9, "q={q} n={n}");
            }
        }
    }

    #[test]
    fn s_q_examples() {
        let f = f0(3);
        let one = s_q_naive(&f, 1, &[5, 1, 2, 3, 4, 5], 7).unwrap();
        assert!((one.value_complex - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        let v = s_q_naive(&f, 2, &[0; 6], 0).unwrap();
        assert!((v.value_complex.re - 8.0).abs() < 1e-9);
        assert_eq!(v.value_exact, Some(BigInt::from(8)));
        let v = s_q_naive(&f, 4, &[1, 0, 0, 1, 0, 0], 0).unwrap();
        assert!(v.value_complex.norm() < 1e-9);
        let v = s_q_factored(&f, 4, &[0; 6], 6).unwrap();
        assert_eq!(v.value_exact, Some(BigInt::from(-128)));
        let lit = s_q_literal(&f, 4, &[0; 6], 6).unwrap();
        assert!((lit.value_complex.re + 128.0).abs() < 1e-9);
        assert!(matches!(s_q_naive(&f, 65, &[0; 6], 0), Err(QcError::Capability(_))));
        assert!(s_q_naive(&f, 3, &[0; 5], 0).is_err());
    }

    #[test]
    fn literal_naive_and_factored_agree_small() {
        let f = f0(2);
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        for q in 1..=9u64 {
            for _ in 0..4 {
                let c: Vec<i64> = (0..4).map(|_| rng.gen_range(-9..10)).collect();
                let t = rng.gen_range(-7..8);
                let a = s_q_literal(&f, q, &c, t).unwrap().value_complex;
                let b = s_q_naive(&f, q, &c, t).unwrap().value_complex;
                let e = s_q_factored(&f, q, &c, t).unwrap().value_complex;
                assert!((a - b).norm() < 1e-8 * (1.0 + a.norm()));
                assert!((a - e).norm() < 1e-8 * (1.0 + a.norm()));
            }
        }
    }

    #[test]
    fn naive_equals_factored_up_to_20() {
        let f = f0(3);
        let mut rng = rand::rngs::StdRng::seed_from_u64(2);
        for q in 1..=20u64 {
            let zero = s_q_factored(&f, q, &[0; 6], 0).unwrap();
            let expect = BigInt::from(q).pow(3) * euler_phi(q);
            assert_eq!(zero.value_exact, Some(expect));
            for _ in 0..10 {
                let c: Vec<i64> = (0..6).map(|_| rng.gen_range(-50..51)).collect();
                for &t in &[0i64, 1, -1, 6, -6] {
                    let a = s_q_naive(&f, q, &c, t).unwrap();
                    let b = s_q_factored(&f, q, &c, t).unwrap();
                    let scale = (q as f64).powi(3) * euler_phi(q) as f64;
                    assert!((a.value_complex - b.value_complex).norm() <= 1e-8 * scale, "q={q} c={c:?} t={t}");
                    assert!(b.value_complex.im.abs() <= 1e-6 * (1.0 + b.value_complex.re.abs()));
                }
            }
        }
    }

    #[test]
    fn bound_by_q_to_d_half_plus_one() {
        let f = f0(3);
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let mut partial = 0.0;
        for q in 1..=200u64 {
            let bound = (q as f64).powf(4.0);
            for j in 0..20 {
                let mut c: Vec<i64> = (0..6).map(|_| rng.gen_range(-1000..1001)).collect();
                if j % 2 == 0 {
                    c[0..3].iter_mut().for_each(|v| *v = 0);
                }
                let v = s_q_factored(&f, q, &c, 0).unwrap();
                let n = v.value_complex.norm();
                assert!(n <= 2.0 * bound);
                if v.value_exact.is_some() {
                    assert!(n <= (1.0 + 1e-9) * bound);
                }
                if j == 0 {
                    partial += n;
                }
            }
            assert!(partial <= 2.0 * (q as f64).powf(5.0));
        }
    }

    fn twist(c: &[i64], by: u64) -> Vec<i64> {
        twist_vector(c, by)
    }

    #[test]
    fn multiplicativity_example_84() {
        let f = f0(3);
        let c = [1, 2, 3, 4, 5, 6];
        let (q, qp) = (12u64, 7u64);
        let qbar = mod_inverse(q as i64, qp).unwrap();
        let qpbar = mod_inverse(qp as i64, q).unwrap();
        for t in [0i64, 1, 5] {
            let lhs = s_q_factored(&f, q * qp, &c, t).unwrap().value_complex;
            let rhs = s_q_factored(&f, q, &twist(&c, qpbar), t).unwrap().value_complex
                * s_q_factored(&f, qp, &twist(&c, qbar), t).unwrap().value_complex;
            assert!((lhs - rhs).norm() < 1e-6 * (1.0 + lhs.norm()), "t={t}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn multiplicativity_random_pairs() {
        let f = f0(3);
        let mut rng = rand::rngs::StdRng::seed_from_u64(4);
        let mut done = 0;
        while done < 50 {
            let q = rng.gen_range(1..=30u64);
            let qp = rng.gen_range(1..=30u64);
            if gcd_u64(q, qp) != 1 {
                continue;
            }
            let qbar = mod_inverse(q as i64, qp).unwrap();
            let qpbar = mod_inverse(qp as i64, q).unwrap();
            let mut c: Vec<i64> = (0..6).map(|_| rng.gen_range(-20..21)).collect();
            let t = rng.gen_range(-10..11);
            // Exact path.
            c[3..].iter_mut().for_each(|v| *v = 0);
            let lhs = s_q_factored(&f, q * qp, &c, t).unwrap().value_exact.unwrap();
            let a = s_q_factored(&f, q, &twist(&c, qpbar), t).unwrap().value_exact.unwrap();
            let b = s_q_factored(&f, qp, &twist(&c, qbar), t).unwrap().value_exact.unwrap();
            assert_eq!(lhs, a * b);
            // Floating path.
            c[3..].iter_mut().for_each(|v| *v = rng.gen_range(-20..21));
            let lhs = s_q_factored(&f, q * qp, &c, t).unwrap().value_complex;
            let rhs = s_q_factored(&f, q, &twist(&c, qpbar), t).unwrap().value_complex
                * s_q_factored(&f, qp, &twist(&c, qbar), t).unwrap().value_complex;
            let scale = ((q * qp) as f64).powi(4);
            assert!((lhs - rhs).norm() < 1e-12 * scale, "q={q} q'={qp}: {lhs} vs {rhs}");
            done += 1;
        }
    }

    #[test]
    fn sigma_p_examples() {
        let s2 = sigma_p(2, 6, 0, 1e-12).unwrap();
        assert!((s2.value_f64() - 7.0 / 6.0).abs() <= s2.tail + 1e-15);
        let s3 = sigma_p(3, 6, 0, 1e-12).unwrap();
        assert!((s3.value_f64() - 13.0 / 12.0).abs() <= s3.tail + 1e-15);
        assert!(s2.tail <= 1e-12 * s2.value_f64());
        assert!(sigma_p(4, 6, 0, 1e-12).is_err());
        assert!(sigma_p(2, 4, 0, 1e-12).is_err());
        // For t = 1 only l = 0, 1 contribute: 1 + 2^{-3} c_2(1) = 7/8.
        let s = sigma_p(2, 6, 1, 1e-12).unwrap();
        assert_eq!(s.value, rat(7, 8));
        assert_eq!(s.tail, 0.0);
    }

    #[test]
    fn sigma_p_closed_form_d6() {
        for p in primes_up_to(50) {
            let lf = sigma_p(p, 6, 0, 1e-14).unwrap();
            let exact = 1.0 + 1.0 / (p as f64 * (p as f64 + 1.0));
            assert!((lf.value_f64() - exact).abs() <= lf.tail + 1e-15, "p={p}");
        }
    }

    #[test]
    fn remark5_examples() {
        assert_eq!(remark5_sigma_p(2, 3).unwrap(), rat(9, 8));
        for p in primes_up_to(200) {
            let v = remark5_sigma_p(p, 3).unwrap() - BigRational::one();
            assert!(v.to_f64().unwrap() <= 2.0 * (p as f64).powi(-2));
            assert_eq!(mod_p_density(p, 3, 0).unwrap() - BigRational::one(), v);
        }
        let r3 = sigma_euler_remark5(10_000, 3, 0).unwrap();
        assert!((r3.value - 1.305).abs() < 1e-3, "{}", r3.value);
        let r4 = sigma_euler_remark5(10_000, 4, 0).unwrap();
        assert!((r4.value - 1.100).abs() < 1e-3, "{}", r4.value);
    }

    #[test]
    fn local_density_examples() {
        assert_eq!(local_density(2, 1, 3, 0).unwrap(), rat(36, 32));
        assert_eq!(local_density(3, 1, 1, 0).unwrap(), rat(5, 3));
        let truncated = (0..=2u32).fold(BigRational::zero(), |acc, l| {
            let q = 2u64.pow(l);
            acc + BigRational::new(BigInt::from(ramanujan_i64(q, 0)), BigInt::from(q).pow(3))
        });
        assert_eq!(local_density(2, 2, 3, 0).unwrap(), truncated);
        assert!(matches!(local_density(101, 5, 3, 0), Err(QcError::Capability(_))));
    }

    #[test]
    fn truncated_series_equals_density() {
        for &(p, kmax) in &[(2u64, 3u32), (3, 3), (5, 2)] {
            for k in 1..=kmax {
                for &t in &[0i64, 1, 6, -4] {
                    let mut series = BigRational::zero();
                    for l in 0..=k {
                        let q = p.pow(l);
                        series += BigRational::new(BigInt::from(ramanujan_i64(q, t)), BigInt::from(q).pow(3));
                    }
                    assert_eq!(local_density(p, k, 3, t).unwrap(), series, "p={p} k={k} t={t}");
                }
            }
        }
    }

    #[test]
    fn euler_and_dirichlet_agree() {
        let e = sigma_euler(10_000, 6, 0, 1e-14).unwrap();
        let x = sigma_dirichlet(100_000, 6, 0).unwrap();
        let closed = sigma_d6_closed_form();
        assert!((e.value - closed).abs() <= e.tail_bound, "{} {} {}", e.value, closed, e.tail_bound);
        assert!((x.value - closed).abs() <= x.tail_bound);
        assert!((e.value - x.value).abs() <= e.tail_bound + x.tail_bound);
        assert!(e.tail_bound < 1e-3 && x.tail_bound <= 1e-5);
        assert_eq!(e.per_prime.len(), 1229);
        assert!(e.per_prime.iter().all(|f| f.sigma_p > 1.0));
    }

    #[test]
    fn dirichlet_examples() {
        let one = sigma_dirichlet(1, 6, 5).unwrap();
        assert_eq!(one.value, 1.0);
        let mut prev_gap = f64::INFINITY;
        let closed = sigma_d6_closed_form();
        for x in [1000u64, 2000, 4000, 8000] {
            let v = sigma_dirichlet(x, 6, 0).unwrap().value;
            let w = sigma_dirichlet(2 * x, 6, 0).unwrap().value;
            let gap = (v - w).abs();
            if prev_gap.is_finite() {
                assert!(prev_gap / gap >= 2f64.powi(1) * 0.8, "{prev_gap} / {gap}");
            }
            prev_gap = gap;
            assert!((w - closed).abs() < (v - closed).abs());
        }
    }

    proptest! {
        #[test]
        fn factored_is_real_and_bounded(q in 1u64..500, c in prop::collection::vec(-100i64..100, 6), t in -50i64..50) {
            let v = s_q_factored(&f0(3), q, &c, t).unwrap();
            prop_assert!(v.value_complex.im.abs() <= 1e-6 * (1.0 + v.value_complex.re.abs()));
            prop_assert!(v.value_complex.norm() <= (q as f64).powi(4) * (1.0 + 1e-9));
        }
    }
}
