//! Elementary integer arithmetic: gcd chains, modular inverses, sieves and
//! the multiplicative functions used by the exponential sums.

/// Greatest common divisor, always non-negative; `gcd(0, 0) = 0`.
pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.unsigned_abs(), b.unsigned_abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a as i64
}

pub fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// Extended Euclid: returns `(g, s, t)` with `a*s + b*t = g = gcd(a, b) >= 0`.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Inverse of `a` modulo `m`, if `gcd(a, m) = 1`.
pub fn mod_inverse(a: i64, m: u64) -> Option<u64> {
    if m == 1 {
        return Some(0);
    }
    let m128 = m as i128;
    let (g, s, _) = ext_gcd((a as i128).rem_euclid(m128), m128);
    (g == 1).then(|| s.rem_euclid(m128) as u64)
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n % 2 == 0 || n % 3 == 0 {
        return false;
    }
    let mut i = 5u64;
    while i * i <= n {
        if n % i == 0 || n % (i + 2) == 0 {
            return false;
        }
        i += 6;
    }
    true
}

/// All primes `<= n`, ascending.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Prime factorisation by trial division as `(p, e)` pairs, ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn mobius(n: u64) -> i64 {
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

/// Ramanujan sum at a prime power: `c_{p^e}(n)`.
pub fn ramanujan_prime_power(p: u64, e: u32, n: i64) -> i64 {
    if e == 0 {
        return 1;
    }
    let pe = p.pow(e) as i128;
    let pe1 = p.pow(e - 1) as i128;
    let n = n as i128;
    if n % pe == 0 {
        (pe - pe1) as i64
    } else if n % pe1 == 0 {
        -(pe1 as i64)
    } else {
        0
    }
}

/// Ramanujan sum `c_q(n) = sum_{d | gcd(q, n)} d mu(q/d)`, with
/// `gcd(q, 0) = q`.
pub fn ramanujan_i64(q: u64, n: i64) -> i64 {
    factorize(q)
        .into_iter()
        .map(|(p, e)| ramanujan_prime_power(p, e, n))
        .product()
}

/// Smallest-prime-factor table for fast repeated factorisation up to a bound.
#[derive(Debug, Clone)]
pub struct SpfSieve {
    spf: Vec<u32>,
}

impl SpfSieve {
    pub fn new(limit: u64) -> Self {
        let n = limit.max(1) as usize;
        let mut spf = vec![0u32; n + 1];
        for i in 2..=n {
            if spf[i] == 0 {
                let mut j = i;
                while j <= n {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
        }
        Self { spf }
    }

    pub fn limit(&self) -> u64 {
        (self.spf.len() - 1) as u64
    }

    pub fn factorize(&self, mut n: u64) -> Vec<(u64, u32)> {
        assert!(n <= self.limit(), "sieve limit exceeded");
        let mut out: Vec<(u64, u32)> = Vec::new();
        while n > 1 {
            let p = self.spf[n as usize] as u64;
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        out
    }

    /// `c_q(n)` from the factorisation of `q` (the Ramanujan sum is
    /// multiplicative in `q`).
    pub fn ramanujan(&self, q: u64, n: i64) -> i64 {
        self.factorize(q)
            .into_iter()
            .map(|(p, e)| ramanujan_prime_power(p, e, n))
            .product()
    }
}
