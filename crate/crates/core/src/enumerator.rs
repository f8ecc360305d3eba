//! Exact enumeration of the Cantor rationals with a given denominator.
//!
//! Two independent routes are provided. [`enumerate_by_algorithm1`] walks the
//! numerators `1..q` with a mask of non-units and a passlist closed under the
//! symmetries `x -> 3x mod 1` and `x -> 1 - x`, testing the preperiod and
//! period digits of each candidate. [`enumerate_by_words`] goes the other way:
//! it builds every admissible digit word of the right shape, evaluates it as
//! `P/Q` and keeps the values whose reduced denominator is exactly `q`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::digitsys::DigitSystem;
use crate::error::{Error, Result};
use crate::numtheory::{self, gcd, split_three};

/// Word-count ceiling for the word oracle unless the caller overrides it.
pub const DEFAULT_WORD_BUDGET: u64 = 1 << 34;
/// Largest denominator Algorithm 1 will scan (its mask holds one flag per numerator).
pub const DEFAULT_ALGORITHM1_LIMIT: u64 = 1 << 31;

/// Which enumeration produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "algorithm1")]
    Algorithm1,
    #[serde(rename = "word_oracle")]
    WordOracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Algorithm1 => "algorithm1",
            Method::WordOracle => "word_oracle",
        })
    }
}

/// Method requested by a caller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MethodChoice {
    #[default]
    Auto,
    Algorithm1,
    Words,
}

impl std::str::FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MethodChoice::Auto),
            "alg1" | "algorithm1" => Ok(MethodChoice::Algorithm1),
            "words" | "word_oracle" => Ok(MethodChoice::Words),
            other => Err(Error::domain(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_words: u64,
    pub max_algorithm1_q: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_words: DEFAULT_WORD_BUDGET,
            max_algorithm1_q: DEFAULT_ALGORITHM1_LIMIT,
        }
    }
}

/// A reduced fraction `p/q` on the set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CantorRational {
    pub p: u64,
    pub q: u64,
    pub i0: u32,
    pub ell: u64,
    /// Smallest numerator in the `x3` orbit (`p` itself when `3 | q`).
    pub orbit_rep: u64,
}

/// Per-denominator summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenominatorRecord {
    pub q: u64,
    pub ell: u64,
    pub phi: u64,
    pub n_q: u64,
    /// Absent when `3 | q`, where the coset model does not apply.
    pub mlo: Option<u64>,
    pub method: Method,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numerators: Option<Vec<u64>>,
}

impl DenominatorRecord {
    fn build(q: u64, numerators: Vec<u64>, method: Method) -> Result<Self> {
        let ell = numtheory::ell(q)?;
        let phi = numtheory::euler_phi(q)?;
        let mlo = if q.is_multiple_of(3) { None } else { Some(numtheory::mlo(q)?) };
        Ok(DenominatorRecord {
            q,
            ell,
            phi,
            n_q: numerators.len() as u64,
            mlo,
            method,
            numerators: Some(numerators),
        })
    }

    /// Check the structural invariants a stored record must satisfy.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if let Some(nums) = &self.numerators {
            if nums.len() as u64 != self.n_q {
                return Err(format!("q={}: n_q={} but {} numerators", self.q, self.n_q, nums.len()));
            }
            if nums.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("q={}: numerators not strictly increasing", self.q));
            }
            if nums.iter().any(|&p| p == 0 || p >= self.q || gcd(p, self.q) != 1) {
                return Err(format!("q={}: numerator out of range or not coprime", self.q));
            }
        }
        if !self.q.is_multiple_of(3) && self.n_q > 0 && !self.n_q.is_multiple_of(self.ell) {
            return Err(format!("q={}: ell={} does not divide n_q={}", self.q, self.ell, self.n_q));
        }
        if self.n_q > self.phi {
            return Err(format!("q={}: n_q exceeds phi(q)", self.q));
        }
        Ok(())
    }

    pub fn rationals(&self) -> Vec<CantorRational> {
        let Some(nums) = &self.numerators else {
            return Vec::new();
        };
        let (t, _) = split_three(self.q);
        nums.iter()
            .map(|&p| CantorRational {
                p,
                q: self.q,
                i0: t,
                ell: self.ell,
                orbit_rep: if self.q.is_multiple_of(3) { p } else { orbit_min(p, self.q) },
            })
            .collect()
    }
}

fn orbit_min(p: u64, q: u64) -> u64 {
    let mut best = p;
    let mut x = numtheory::mul_mod(p, 3, q);
    while x != p {
        best = best.min(x);
        x = numtheory::mul_mod(x, 3, q);
    }
    best
}

#[inline]
fn digits_avoid_one(mut n: u128, len: u32) -> bool {
    for _ in 0..len {
        if n % 3 == 1 {
            return false;
        }
        n /= 3;
    }
    n == 0
}

/// Shape of `q = 3^t q'` with the period length of `q'`.
#[derive(Debug, Clone, Copy)]
struct Shape {
    q: u64,
    t: u32,
    q_free: u64,
    ell: u64,
}

impl Shape {
    fn of(q: u64) -> Result<Self> {
        let (t, q_free) = split_three(q);
        let ell = numtheory::mult_order(3, q_free)?;
        Ok(Shape { q, t, q_free, ell })
    }

    /// Exact test of one numerator, following the digit tests of Algorithm 1.
    ///
    /// With `K = 3^ell - 1` the integer `T = (p/q) K 3^t` splits as
    /// `T = s K + a`: `a` holds the period digits and `s` the preperiod digits.
    /// When `3^(t+ell)` fits in 128 bits `T` is formed literally; otherwise the
    /// period digits of `(p mod q')/q'` are produced by long division, which
    /// yields the same digit string most-significant-first.
    fn is_cantor(&self, p: u64) -> bool {
        if self.t as u64 + self.ell <= 80 {
            self.is_cantor_literal(p)
        } else {
            self.is_cantor_streamed(p)
        }
    }

    fn is_cantor_literal(&self, p: u64) -> bool {
        let cycle = 3u128.pow(self.ell as u32) - 1;
        let big_t = p as u128 * (cycle / self.q_free as u128);
        let a = big_t % cycle;
        if a != 0 {
            digits_avoid_one(a, self.ell as u32)
                && digits_avoid_one((big_t - a) / cycle, self.t)
        } else {
            // period 0 or period (2); the preperiod is T/K or T/K - 1
            let s = big_t / cycle;
            digits_avoid_one(s, self.t) || (s > 0 && digits_avoid_one(s - 1, self.t))
        }
    }

    fn is_cantor_streamed(&self, p: u64) -> bool {
        let s = (p / self.q_free) as u128;
        let r = p % self.q_free;
        if r == 0 {
            return digits_avoid_one(s, self.t) || (s > 0 && digits_avoid_one(s - 1, self.t));
        }
        if !digits_avoid_one(s, self.t) {
            return false;
        }
        let q = self.q_free as u128;
        let mut rem = r as u128;
        for _ in 0..self.ell {
            rem *= 3;
            if rem / q == 1 {
                return false;
            }
            rem %= q;
        }
        true
    }

    /// Orbit of `p` under `x3` (when `3` does not divide `q`) and reflection.
    fn symmetric_images(&self, p: u64, mut visit: impl FnMut(u64)) {
        let q = self.q;
        if q.is_multiple_of(3) {
            visit(p);
            visit(q - p);
            return;
        }
        let mut x = p;
        loop {
            visit(x);
            visit(q - x);
            x = numtheory::mul_mod(x, 3, q);
            if x == p {
                break;
            }
        }
    }
}

/// Algorithm 1 of the reference construction, restricted to base 3 with digits `{0, 2}`.
pub fn enumerate_by_algorithm1(q: u64) -> Result<DenominatorRecord> {
    enumerate_by_algorithm1_with(q, &Budget::default())
}

pub fn enumerate_by_algorithm1_with(q: u64, budget: &Budget) -> Result<DenominatorRecord> {
    if q < 2 {
        return Err(Error::domain(format!("algorithm 1 needs q >= 2, got {q}")));
    }
    if q > budget.max_algorithm1_q {
        return Err(Error::budget(format!(
            "q = {q} exceeds the algorithm-1 limit {}",
            budget.max_algorithm1_q
        )));
    }
    let shape = Shape::of(q)?;
    let n = q as usize;

    // mask: multiples of the primes of q below q
    let mut mask = vec![false; n];
    for prime in numtheory::factorize(q)?.primes() {
        let step = prime as usize;
        let mut m = step;
        while m < n {
            mask[m] = true;
            m += step;
        }
    }
    let mut passlist = vec![false; n];

    for p in 1..q {
        let idx = p as usize;
        if mask[idx] || passlist[idx] {
            continue;
        }
        if shape.is_cantor(p) {
            shape.symmetric_images(p, |x| passlist[x as usize] = true);
        } else {
            shape.symmetric_images(p, |x| mask[x as usize] = true);
        }
    }
    let numerators = (1..q).filter(|&p| passlist[p as usize]).collect();
    DenominatorRecord::build(q, numerators, Method::Algorithm1)
}

/// The mask-free variant: test every `p` coprime to `q` independently.
pub fn enumerate_by_coprime_scan(q: u64) -> Result<Vec<u64>> {
    if q < 2 {
        return Err(Error::domain(format!("q must be >= 2, got {q}")));
    }
    let shape = Shape::of(q)?;
    Ok((1..q)
        .filter(|&p| gcd(p, q) == 1 && shape.is_cantor(p))
        .collect())
}

/// Whether any Cantor rational has denominator exactly `q`, stopping at the first hit.
pub fn has_cantor_rational(q: u64) -> Result<bool> {
    if q == 1 {
        return Ok(true);
    }
    let shape = Shape::of(q)?;
    let words_cost = 1u128 << (shape.t as u64 + shape.ell).min(127);
    if words_cost < q as u128 {
        return Ok(enumerate_by_words(q, &DigitSystem::ternary(), u64::MAX)?.n_q > 0);
    }
    // reflection pairs p and q - p, so half the range suffices
    Ok((1..=q / 2).any(|p| gcd(p, q) == 1 && shape.is_cantor(p)))
}

/// Enumerate every admissible word and keep the values with reduced denominator `q`.
///
/// Works for any [`DigitSystem`]. Word values are `P = s (b^l - 1) + a` over
/// `Q = b^i0 (b^l - 1)`; `P/Q` reduces to denominator `q` exactly when
/// `k = Q/q` divides `P` and `P/k` is coprime to `q`. Words are split into a
/// high part and a low part and matched on residues mod `k`, so the work is
/// proportional to the square root of the word count plus the output size.
/// Terminating values arrive twice (trailing `0`s and trailing `(b-1)`s) and
/// are deduplicated.
pub fn enumerate_by_words(q: u64, system: &DigitSystem, max_words: u64) -> Result<DenominatorRecord> {
    if q < 2 {
        return Err(Error::domain(format!("word oracle needs q >= 2, got {q}")));
    }
    let b = system.base() as u64;
    let mut q_free = q;
    loop {
        let g = gcd(q_free, b);
        if g == 1 {
            break;
        }
        q_free /= g;
    }
    let q_shared = q / q_free;
    let mut i0 = 0u32;
    let mut power = 1 % q_shared;
    while power != 0 {
        power = numtheory::mul_mod(power, b, q_shared);
        i0 += 1;
    }
    let ell = numtheory::mult_order(b % q_free.max(1), q_free)?;
    let alphabet = system.allowed().len() as u64;
    let total_len = i0 as u64 + ell;

    let word_count = (alphabet as u128).checked_pow(total_len as u32);
    match word_count {
        Some(c) if c <= max_words as u128 => {}
        _ => {
            return Err(Error::budget(format!(
                "q = {q} needs {alphabet}^{total_len} words, budget is {max_words}"
            )))
        }
    }
    let b128 = b as u128;
    let too_big = || Error::Unsupported(format!("q = {q}: word values exceed 128 bits"));
    let cycle = b128
        .checked_pow(ell as u32)
        .and_then(|v| v.checked_sub(1))
        .ok_or_else(too_big)?;
    let big_q = b128
        .checked_pow(i0)
        .and_then(|v| v.checked_mul(cycle))
        .ok_or_else(too_big)?;
    if big_q.checked_mul(b128).is_none() {
        return Err(too_big());
    }
    let k = big_q / q as u128;

    // P = s * cycle + a_hi * b^low_len + a_lo
    let low_len = (ell / 2) as u32;
    let high_len = ell as u32 - low_len;
    let low_scale = b128.pow(low_len);

    let low_words = word_values(system, low_len);
    let mut by_residue: HashMap<u128, Vec<u128>> = HashMap::new();
    for &lo in &low_words {
        by_residue.entry(lo % k).or_default().push(lo);
    }

    let mut found = BTreeSet::new();
    for s in word_values(system, i0) {
        let s_part = s * cycle;
        for hi in word_values(system, high_len) {
            let head = s_part + hi * low_scale;
            let target = (k - head % k) % k;
            if let Some(lows) = by_residue.get(&target) {
                for &lo in lows {
                    let numerator = ((head + lo) / k) as u64;
                    if numerator > 0 && numerator < q && gcd(numerator, q) == 1 {
                        found.insert(numerator);
                    }
                }
            }
        }
    }
    let mut record = DenominatorRecord::build(q, found.into_iter().collect(), Method::WordOracle)?;
    if !system.is_ternary_cantor() {
        record.mlo = None;
    }
    Ok(record)
}

/// Integer values of all words of length `len` over the allowed digits.
fn word_values(system: &DigitSystem, len: u32) -> Vec<u128> {
    let b = system.base() as u128;
    let mut values = vec![0u128];
    for _ in 0..len {
        values = values
            .iter()
            .flat_map(|&v| system.allowed().iter().map(move |&d| v * b + d as u128))
            .collect();
    }
    values
}

/// Pick the cheaper route: words when `2^(t+l) (t+l) < q`, Algorithm 1 otherwise.
pub fn preferred_method(q: u64) -> Result<Method> {
    let shape = Shape::of(q)?;
    let len = shape.t as u64 + shape.ell;
    let words_cost = if len >= 100 { u128::MAX } else { (1u128 << len) * len as u128 };
    Ok(if words_cost < q as u128 { Method::WordOracle } else { Method::Algorithm1 })
}

/// Enumerate the ternary Cantor rationals with denominator `q`.
pub fn enumerate(q: u64, choice: MethodChoice, budget: &Budget) -> Result<DenominatorRecord> {
    if q < 2 {
        return Err(Error::domain(format!("enumeration needs q >= 2, got {q}")));
    }
    let method = match choice {
        MethodChoice::Auto => preferred_method(q)?,
        MethodChoice::Algorithm1 => Method::Algorithm1,
        MethodChoice::Words => Method::WordOracle,
    };
    match method {
        Method::Algorithm1 => enumerate_by_algorithm1_with(q, budget),
        Method::WordOracle => enumerate_by_words(q, &DigitSystem::ternary(), budget.max_words),
    }
}

/// Enumerate many denominators in parallel; output is sorted by `q`.
pub fn enumerate_many(qs: &[u64], choice: MethodChoice, budget: &Budget) -> Result<Vec<DenominatorRecord>> {
    let mut out: Vec<DenominatorRecord> = qs
        .par_iter()
        .map(|&q| enumerate(q, choice, budget))
        .collect::<Result<_>>()?;
    out.sort_by_key(|r| r.q);
    Ok(out)
}

/// Split the numerators of a record into `x3` orbits.
pub fn orbit_decomposition(record: &DenominatorRecord) -> Result<Vec<Vec<u64>>> {
    let q = record.q;
    if q.is_multiple_of(3) {
        return Err(Error::domain(format!("orbits under x3 need 3 not dividing q (q = {q})")));
    }
    let nums = record
        .numerators
        .as_ref()
        .ok_or_else(|| Error::domain(format!("record for q = {q} carries no numerators")))?;
    let mut seen = BTreeSet::new();
    let mut orbits = Vec::new();
    for &p in nums {
        if seen.contains(&p) {
            continue;
        }
        let mut orbit = Vec::new();
        let mut x = p;
        loop {
            seen.insert(x);
            orbit.push(x);
            x = numtheory::mul_mod(x, 3, q);
            if x == p {
                break;
            }
        }
        orbits.push(orbit);
    }
    Ok(orbits)
}
