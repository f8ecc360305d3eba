//! Arithmetic functions and word-count formulas.
//!
//! Integers up to `u64` are handled with native arithmetic (products go
//! through `u128`). Quantities that outgrow 64 bits, such as `3^l - 1` or the
//! primitive word counts, use [`BigUint`].

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

const SMALL_PRIME_LIMIT: u64 = 1000;

/// Deterministic Miller-Rabin witnesses, sufficient for every `n < 3.3 * 10^24`.
const MR_BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

/// Rounds of the probabilistic test used above 64 bits. A composite passes
/// one round with probability at most 1/4, so the error bound is `4^-40`.
pub const BIG_MR_ROUNDS: usize = 40;

/// Pollard-rho iteration cap per attempt on big integers.
const BIG_RHO_ITERATIONS: u64 = 1 << 24;

fn small_primes() -> &'static [u64] {
    use std::sync::OnceLock;
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = SMALL_PRIME_LIMIT as usize;
        let mut sieve = vec![true; n + 1];
        sieve[0] = false;
        sieve[1] = false;
        let mut i = 2;
        while i * i <= n {
            if sieve[i] {
                let mut j = i * i;
                while j <= n {
                    sieve[j] = false;
                    j += i;
                }
            }
            i += 1;
        }
        (0..=n).filter(|&k| sieve[k]).map(|k| k as u64).collect()
    })
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

/// Deterministic primality test for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_BASES {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

// Brent's variant of Pollard rho. `n` must be composite and odd.
fn rho_u64(n: u64) -> u64 {
    let mut c = 1u64;
    loop {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut y, mut r, mut q) = (2u64, 1u64, 1u64);
        let mut g = 1u64;
        let mut x = y;
        let mut ys = y;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..(r - k).min(128) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += 128;
            }
            r <<= 1;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

/// Prime factorization with primes strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Factorization {
    factors: Vec<(u64, u32)>,
}

impl Factorization {
    fn from_primes(mut primes: Vec<u64>) -> Self {
        primes.sort_unstable();
        let mut factors: Vec<(u64, u32)> = Vec::new();
        for p in primes {
            match factors.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => factors.push((p, 1)),
            }
        }
        Factorization { factors }
    }

    pub fn factors(&self) -> &[(u64, u32)] {
        &self.factors
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.iter().map(|&(p, _)| p)
    }

    pub fn value(&self) -> u128 {
        self.factors
            .iter()
            .map(|&(p, e)| (p as u128).pow(e))
            .product()
    }

    pub fn phi(&self) -> u64 {
        self.factors
            .iter()
            .map(|&(p, e)| p.pow(e - 1) * (p - 1))
            .product()
    }

    pub fn mobius(&self) -> i8 {
        if self.factors.iter().any(|&(_, e)| e > 1) {
            0
        } else if self.factors.len().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn tau(&self) -> u64 {
        self.factors.iter().map(|&(_, e)| e as u64 + 1).product()
    }

    /// All divisors in increasing order.
    pub fn divisors(&self) -> Vec<u64> {
        let mut out = vec![1u64];
        for &(p, e) in &self.factors {
            let len = out.len();
            let mut pk = 1u64;
            for _ in 0..e {
                pk *= p;
                for i in 0..len {
                    out.push(out[i] * pk);
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Factor `n >= 1` by trial division over small primes followed by
/// Pollard-Brent rho on the cofactor.
pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(Error::domain("cannot factor 0"));
    }
    let mut primes = Vec::new();
    let mut rest = n;
    for &p in small_primes() {
        if p * p > rest {
            break;
        }
        while rest.is_multiple_of(p) {
            primes.push(p);
            rest /= p;
        }
    }
    let mut stack = Vec::new();
    if rest > 1 {
        stack.push(rest);
    }
    while let Some(m) = stack.pop() {
        if m < SMALL_PRIME_LIMIT * SMALL_PRIME_LIMIT || is_prime(m) {
            // survivors of trial division below 10^6 are prime
            primes.push(m);
        } else {
            let d = rho_u64(m);
            stack.push(d);
            stack.push(m / d);
        }
    }
    Ok(Factorization::from_primes(primes))
}

pub fn euler_phi(n: u64) -> Result<u64> {
    Ok(factorize(n)?.phi())
}

pub fn mobius(n: u64) -> Result<i8> {
    Ok(factorize(n)?.mobius())
}

pub fn tau(n: u64) -> Result<u64> {
    Ok(factorize(n)?.tau())
}

/// Factorization of `phi(n)` assembled from that of `n`.
fn phi_factorization(f: &Factorization) -> Result<Factorization> {
    let mut primes = Vec::new();
    for &(p, e) in f.factors() {
        primes.extend(std::iter::repeat_n(p, (e - 1) as usize));
        for (r, k) in factorize(p - 1)?.factors {
            primes.extend(std::iter::repeat_n(r, k as usize));
        }
    }
    Ok(Factorization::from_primes(primes))
}

/// Order of `a` in `(Z/qZ)^x`, found by stripping prime factors off `phi(q)`.
pub fn mult_order(a: u64, q: u64) -> Result<u64> {
    if q == 0 {
        return Err(Error::domain("modulus must be positive"));
    }
    if gcd(a % q, q) != 1 && q != 1 {
        return Err(Error::domain(format!("gcd({a}, {q}) != 1")));
    }
    if q == 1 {
        return Ok(1);
    }
    let fq = factorize(q)?;
    let group = phi_factorization(&fq)?;
    let mut order = fq.phi();
    for &(r, e) in group.factors() {
        for _ in 0..e {
            if pow_mod(a, order / r, q) == 1 {
                order /= r;
            } else {
                break;
            }
        }
    }
    Ok(order)
}

/// Split `q = 3^t * q'` with `3` not dividing `q'`.
pub fn split_three(mut q: u64) -> (u32, u64) {
    let mut t = 0;
    while q != 0 && q.is_multiple_of(3) {
        q /= 3;
        t += 1;
    }
    (t, q)
}

/// Period length of `p/q` in base 3: the order of 3 modulo the 3-free part of `q`.
pub fn ell(q: u64) -> Result<u64> {
    if q == 0 {
        return Err(Error::domain("ell(0) is undefined"));
    }
    let (_, rest) = split_three(q);
    mult_order(3, rest)
}

fn divisor_sum<F>(len: u64, mut term: F) -> Result<BigUint>
where
    F: FnMut(u64, u64) -> BigInt,
{
    if len == 0 {
        return Err(Error::domain("word length must be positive"));
    }
    let mut total = BigInt::zero();
    for d in factorize(len)?.divisors() {
        let mu = mobius(len / d)?;
        if mu == 0 {
            continue;
        }
        let t = term(d, len / d);
        if mu > 0 {
            total += t;
        } else {
            total -= t;
        }
    }
    total
        .to_biguint()
        .ok_or_else(|| Error::domain("negative word count"))
}

/// `m(len, a)`: the number of primitive words of length `len` over `a` letters.
pub fn primitive_count(len: u64, alphabet: u32) -> Result<BigUint> {
    divisor_sum(len, |d, _| BigInt::from(alphabet).pow(d as u32))
}

/// Number of primitive words of length `len` over `{0, .., a-1}` whose value
/// as a base-`a` integer is even.
pub fn even_primitive_count(len: u64, alphabet: u32) -> Result<BigUint> {
    divisor_sum(len, |d, cofactor| {
        let power = BigInt::from(alphabet).pow(d as u32);
        if cofactor % 2 == 0 {
            power
        } else {
            (power + 1u32) / 2u32
        }
    })
}

/// `round(num / den)` with ties away from zero.
pub fn round_ratio(num: &BigUint, den: &BigUint) -> BigUint {
    let two = BigUint::from(2u32);
    (num * &two + den) / (den * two)
}

/// True iff `q` divides `(3^l - 1) / 2`.
pub fn divides_half_period(q: u64, len: u64) -> bool {
    let modulus = BigUint::from(q) * 2u32;
    BigUint::from(3u32).modpow(&BigUint::from(len), &modulus) == BigUint::one() % &modulus
}

/// Most likely outcome of `N_q` under the coset model:
/// `round(phi(q) * m(l,2) / mbar(l,3))` when `q | (3^l - 1)/2`, else 0.
pub fn mlo(q: u64) -> Result<u64> {
    if q < 2 {
        return Err(Error::domain("mlo requires q >= 2"));
    }
    if q.is_multiple_of(3) {
        return Err(Error::domain(format!("mlo undefined for 3 | q (q = {q})")));
    }
    let len = ell(q)?;
    if !divides_half_period(q, len) {
        return Ok(0);
    }
    let num = BigUint::from(euler_phi(q)?) * primitive_count(len, 2)?;
    let den = even_primitive_count(len, 3)?;
    round_ratio(&num, &den)
        .to_u64()
        .ok_or_else(|| Error::budget("MLO exceeds u64"))
}

/// `(2/3)^len`, correctly rounded to the nearest `f64`.
pub fn two_thirds_pow(len: u32) -> f64 {
    if len == 0 {
        return 1.0;
    }
    let three = BigUint::from(3u32).pow(len);
    // choose a shift so that the quotient has exactly 64 significant bits
    let shift = (three.bits() as i64 + 63 - len as i64).max(0) as u32;
    let num = BigUint::one() << (len + shift);
    let (quot, rem) = num.div_rem(&three);
    let mut mantissa = quot.to_u64().unwrap_or(u64::MAX);
    if !rem.is_zero() {
        mantissa |= 1; // sticky bit keeps the final rounding correct
    }
    let value = mantissa as f64;
    scale_pow2(value, -(shift as i32))
}

fn scale_pow2(x: f64, exp: i32) -> f64 {
    let mut x = x;
    let mut e = exp;
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    x * 2f64.powi(e)
}

/// Exact `round(2 * phi * (2/3)^len)` as used by the `F(T)` series.
pub fn star_rounded_prediction(phi: u64, len: u64) -> u64 {
    let num = BigUint::from(phi) * 2u32 * (BigUint::one() << len as usize);
    let den = BigUint::from(3u32).pow(len as u32);
    round_ratio(&num, &den).to_u64().unwrap_or(u64::MAX)
}

/// Compare `a / b` against `c / d` without rounding.
pub fn cmp_ratio(a: &BigUint, b: &BigUint, c: &BigUint, d: &BigUint) -> Ordering {
    (a * d).cmp(&(c * b))
}

/// `3^len - 1` as a big integer.
pub fn three_pow_minus_one(len: u64) -> BigUint {
    BigUint::from(3u32).pow(len as u32) - 1u32
}

/// Prime factorization of integers beyond 64 bits.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BigFactorization {
    pub factors: Vec<(BigUint, u32)>,
}

impl BigFactorization {
    pub fn tau(&self) -> BigUint {
        self.factors
            .iter()
            .map(|(_, e)| BigUint::from(*e + 1))
            .product()
    }

    pub fn value(&self) -> BigUint {
        self.factors.iter().map(|(p, e)| p.pow(*e)).product()
    }

    fn push_all(&mut self, primes: Vec<BigUint>) {
        let mut all: Vec<BigUint> = self
            .factors
            .drain(..)
            .flat_map(|(p, e)| std::iter::repeat_n(p, e as usize))
            .chain(primes)
            .collect();
        all.sort();
        for p in all {
            match self.factors.last_mut() {
                Some((q, e)) if *q == p => *e += 1,
                _ => self.factors.push((p, 1)),
            }
        }
    }

    /// Multiply two factorizations.
    pub fn merge(mut self, other: BigFactorization) -> Self {
        let extra = other
            .factors
            .into_iter()
            .flat_map(|(p, e)| std::iter::repeat_n(p, e as usize))
            .collect();
        self.push_all(extra);
        self
    }
}

/// Probabilistic primality for big integers; deterministic below 2^64.
pub fn is_probable_prime(n: &BigUint) -> bool {
    if let Some(small) = n.to_u64() {
        return is_prime(small);
    }
    if n.is_even() {
        return false;
    }
    for &p in small_primes() {
        if (n % p).is_zero() {
            return false;
        }
    }
    let one = BigUint::one();
    let n_minus_one = n - &one;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    // witnesses: the fixed deterministic bases, then a fixed pseudo-random sequence
    let mut state = 0x9E37_79B9_7F4A_7C15u64;
    let bases = MR_BASES.iter().copied().chain(std::iter::from_fn(move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        Some(state | 3)
    }));
    'witness: for a in bases.take(BIG_MR_ROUNDS) {
        let a = BigUint::from(a) % n;
        if a < BigUint::from(2u32) {
            continue;
        }
        let mut x = a.modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn rho_big(n: &BigUint) -> Result<BigUint> {
    for c in 1u32..16 {
        let c = BigUint::from(c);
        let f = |x: &BigUint| (x * x + &c) % n;
        let mut x = BigUint::from(2u32);
        let mut y = x.clone();
        let mut q = BigUint::one();
        let mut steps = 0u64;
        let mut r = 1u64;
        loop {
            x = y.clone();
            for _ in 0..r {
                y = f(&y);
            }
            let mut k = 0;
            let mut g = BigUint::one();
            let mut ys = y.clone();
            while k < r && g.is_one() {
                ys = y.clone();
                for _ in 0..(r - k).min(128) {
                    y = f(&y);
                    let diff = if x > y { &x - &y } else { &y - &x };
                    q = (q * diff) % n;
                }
                g = q.gcd(n);
                k += 128;
            }
            steps += r;
            if &g == n {
                loop {
                    ys = f(&ys);
                    let diff = if x > ys { &x - &ys } else { &ys - &x };
                    g = diff.gcd(n);
                    if !g.is_one() {
                        break;
                    }
                }
            }
            if !g.is_one() {
                if &g != n {
                    return Ok(g);
                }
                break;
            }
            if steps > BIG_RHO_ITERATIONS {
                return Err(Error::budget(format!(
                    "pollard rho gave up on a {}-bit cofactor",
                    n.bits()
                )));
            }
            r <<= 1;
        }
    }
    Err(Error::budget(format!(
        "pollard rho found no factor of a {}-bit cofactor",
        n.bits()
    )))
}

/// Factor an arbitrary-precision integer.
///
/// Cofactors below 2^64 use the deterministic path; larger ones are split by
/// Pollard rho with an iteration budget and certified by [`is_probable_prime`].
pub fn factorize_big(n: &BigUint) -> Result<BigFactorization> {
    if n.is_zero() {
        return Err(Error::domain("cannot factor 0"));
    }
    let mut primes = Vec::new();
    let mut stack = vec![n.clone()];
    while let Some(m) = stack.pop() {
        if m.is_one() {
            continue;
        }
        if let Some(small) = m.to_u64() {
            for (p, e) in factorize(small)?.factors {
                primes.extend(std::iter::repeat_n(BigUint::from(p), e as usize));
            }
            continue;
        }
        let mut rest = m;
        for &p in small_primes() {
            while (&rest % p).is_zero() {
                primes.push(BigUint::from(p));
                rest /= p;
            }
        }
        if rest.is_one() {
            continue;
        }
        if rest.to_u64().is_some() {
            stack.push(rest);
        } else if is_probable_prime(&rest) {
            primes.push(rest);
        } else {
            let d = rho_big(&rest)?;
            stack.push(&rest / &d);
            stack.push(d);
        }
    }
    let mut out = BigFactorization::default();
    out.push_all(primes);
    Ok(out)
}
