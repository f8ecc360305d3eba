//! Base-`b` digit arithmetic for missing-digit sets.
//!
//! Digit strings are most-significant-first. A rational in `[0, 1]` is held in
//! canonical form as a preperiod followed by a primitive period; the value 1
//! is kept apart as [`Expansion::One`] so that no canonical period is ever the
//! all-`(b-1)` block.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::numtheory::{self, gcd};

const MAX_BASE: u32 = 36;

/// A base together with its allowed digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DigitSystem {
    base: u32,
    allowed: Vec<u8>,
}

impl DigitSystem {
    pub fn new(base: u32, allowed: impl IntoIterator<Item = u8>) -> Result<Self> {
        if !(3..=MAX_BASE).contains(&base) {
            return Err(Error::domain(format!("base {base} outside 3..={MAX_BASE}")));
        }
        let mut allowed: Vec<u8> = allowed.into_iter().collect();
        allowed.sort_unstable();
        allowed.dedup();
        if allowed.is_empty() || allowed.len() >= base as usize {
            return Err(Error::domain("allowed digits must be a proper nonempty subset"));
        }
        if allowed.iter().any(|&d| d as u32 >= base) {
            return Err(Error::domain(format!("digit not below base {base}")));
        }
        Ok(DigitSystem { base, allowed })
    }

    /// The middle-thirds set: base 3, digits {0, 2}.
    pub fn ternary() -> Self {
        DigitSystem { base: 3, allowed: vec![0, 2] }
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn allowed(&self) -> &[u8] {
        &self.allowed
    }

    pub fn allows(&self, digit: u8) -> bool {
        self.allowed.binary_search(&digit).is_ok()
    }

    pub fn is_ternary_cantor(&self) -> bool {
        *self == DigitSystem::ternary()
    }

    /// Hausdorff dimension `log|F| / log b`.
    pub fn dimension(&self) -> f64 {
        (self.allowed.len() as f64).ln() / (self.base as f64).ln()
    }

    /// Filesystem-safe tag, e.g. `b3-F0_2`.
    pub fn tag(&self) -> String {
        let digits: Vec<String> = self.allowed.iter().map(|d| d.to_string()).collect();
        format!("b{}-F{}", self.base, digits.join("_"))
    }
}

impl Default for DigitSystem {
    fn default() -> Self {
        DigitSystem::ternary()
    }
}

impl fmt::Display for DigitSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits: Vec<String> = self.allowed.iter().map(|d| d.to_string()).collect();
        write!(f, "b={},F={}", self.base, digits.join(","))
    }
}

impl FromStr for DigitSystem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::domain(format!("malformed digit system {s:?}, expected b=<int>,F=<list>"));
        let rest = s.trim().strip_prefix("b=").ok_or_else(bad)?;
        let (base, digits) = rest.split_once(",F=").ok_or_else(bad)?;
        let base: u32 = base.parse().map_err(|_| bad())?;
        let allowed = digits
            .split(',')
            .map(|d| d.trim().parse::<u8>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        DigitSystem::new(base, allowed)
    }
}

/// Render digits as ASCII (`0-9` then `a-z`).
pub fn digits_to_string(digits: &[u8]) -> String {
    digits
        .iter()
        .map(|&d| char::from_digit(d as u32, MAX_BASE).expect("digit below 36"))
        .collect()
}

pub fn parse_digits(s: &str, base: u32) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| {
            c.to_digit(base)
                .map(|d| d as u8)
                .ok_or_else(|| Error::domain(format!("{c:?} is not a base-{base} digit")))
        })
        .collect()
}

/// Eventually periodic expansion `0.s a a a ...`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PeriodicExpansion {
    base: u32,
    preperiod: Vec<u8>,
    period: Vec<u8>,
}

impl PeriodicExpansion {
    /// Any word pair `0.s(a)`, canonical or not. Only digit range is checked.
    pub fn from_words(base: u32, preperiod: Vec<u8>, period: Vec<u8>) -> Result<Self> {
        if !(2..=MAX_BASE).contains(&base) {
            return Err(Error::domain(format!("unsupported base {base}")));
        }
        if period.is_empty() {
            return Err(Error::domain("period must be nonempty"));
        }
        if preperiod.iter().chain(&period).any(|&d| d as u32 >= base) {
            return Err(Error::domain(format!("digit not below base {base}")));
        }
        Ok(PeriodicExpansion { base, preperiod, period })
    }

    /// Build a canonical expansion: primitive period, minimal preperiod and
    /// no all-`(b-1)` period.
    pub fn new(base: u32, preperiod: Vec<u8>, period: Vec<u8>) -> Result<Self> {
        let e = PeriodicExpansion::from_words(base, preperiod, period)?;
        e.check_canonical()?;
        Ok(e)
    }

    pub fn is_canonical(&self) -> bool {
        self.check_canonical().is_ok()
    }

    fn check_canonical(&self) -> Result<()> {
        let (base, preperiod, period) = (self.base, &self.preperiod, &self.period);
        if !is_primitive(period) {
            return Err(Error::domain("period is not primitive"));
        }
        if let Some(&last) = preperiod.last() {
            if last == *period.last().unwrap() {
                return Err(Error::domain("preperiod is not minimal"));
            }
        }
        if period.iter().all(|&d| d as u32 == base - 1) {
            return Err(Error::domain("all-(b-1) period is not canonical"));
        }
        Ok(())
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn preperiod(&self) -> &[u8] {
        &self.preperiod
    }

    pub fn period(&self) -> &[u8] {
        &self.period
    }

    pub fn preperiod_len(&self) -> usize {
        self.preperiod.len()
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    pub fn is_purely_periodic(&self) -> bool {
        self.preperiod.is_empty()
    }

    pub fn is_terminating(&self) -> bool {
        self.period == [0]
    }
}

/// Canonical expansion of a rational in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expansion {
    Periodic(PeriodicExpansion),
    /// The value 1, equal to `0.(b-1)(b-1)...`.
    One { base: u32 },
}

impl fmt::Display for Expansion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expansion::Periodic(e) => write!(
                f,
                "0.{}({})",
                digits_to_string(&e.preperiod),
                digits_to_string(&e.period)
            ),
            Expansion::One { .. } => f.write_str("1"),
        }
    }
}

/// Value of an expansion as `P/Q` before and after reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpansionValue {
    pub numerator: BigUint,
    pub denominator: BigUint,
    pub reduced_numerator: BigUint,
    pub reduced_denominator: BigUint,
}

/// Canonical base-`base` expansion of `p/q`.
pub fn expansion_of_rational(p: u64, q: u64, base: u32) -> Result<Expansion> {
    if q == 0 {
        return Err(Error::domain("denominator must be positive"));
    }
    if p > q {
        return Err(Error::domain(format!("{p}/{q} exceeds 1")));
    }
    if gcd(p, q) != 1 {
        return Err(Error::domain(format!("{p}/{q} is not reduced")));
    }
    if !(2..=MAX_BASE).contains(&base) {
        return Err(Error::domain(format!("unsupported base {base}")));
    }
    if p == q {
        return Ok(Expansion::One { base });
    }
    let b = base as u64;
    // q = q_b * q_free, where q_b collects the primes shared with the base
    let mut q_free = q;
    loop {
        let g = gcd(q_free, b);
        if g == 1 {
            break;
        }
        q_free /= g;
    }
    let q_b = q / q_free;
    let mut preperiod_len = 0usize;
    let mut power = 1 % q_b;
    while power != 0 {
        power = numtheory::mul_mod(power, b, q_b);
        preperiod_len += 1;
    }
    let period_len = numtheory::mult_order(b % q_free.max(1), q_free)? as usize;

    let mut digits = Vec::with_capacity(preperiod_len + period_len);
    let mut rem = p as u128;
    let q128 = q as u128;
    for _ in 0..preperiod_len + period_len {
        rem *= b as u128;
        digits.push((rem / q128) as u8);
        rem %= q128;
    }
    let period = digits.split_off(preperiod_len);
    PeriodicExpansion::new(base, digits, period).map(Expansion::Periodic)
}

fn digits_value(digits: &[u8], base: u32) -> BigUint {
    digits
        .iter()
        .fold(BigUint::zero(), |acc, &d| acc * base + d as u32)
}

/// `P = s (b^l - 1) + a`, `Q = b^i0 (b^l - 1)`, plus the reduced pair.
pub fn value_of_expansion(e: &Expansion) -> ExpansionValue {
    match e {
        Expansion::One { .. } => ExpansionValue {
            numerator: BigUint::one(),
            denominator: BigUint::one(),
            reduced_numerator: BigUint::one(),
            reduced_denominator: BigUint::one(),
        },
        Expansion::Periodic(e) => {
            let base = BigUint::from(e.base);
            let cycle = base.pow(e.period.len() as u32) - 1u32;
            let numerator =
                digits_value(&e.preperiod, e.base) * &cycle + digits_value(&e.period, e.base);
            let denominator = base.pow(e.preperiod.len() as u32) * cycle;
            let g = numerator.gcd(&denominator);
            ExpansionValue {
                reduced_numerator: &numerator / &g,
                reduced_denominator: &denominator / &g,
                numerator,
                denominator,
            }
        }
    }
}

/// True iff some base-`b` representation of the value uses only allowed digits.
pub fn is_member(e: &Expansion, system: &DigitSystem) -> bool {
    let top = (system.base - 1) as u8;
    match e {
        Expansion::One { .. } => system.allows(top),
        Expansion::Periodic(e) => {
            if e.preperiod.iter().chain(&e.period).all(|&d| system.allows(d)) {
                return true;
            }
            // a terminating value also equals 0.d1..(dk - 1)(b-1)(b-1)...
            if e.is_terminating() && !e.preperiod.is_empty() {
                let (last, head) = e.preperiod.split_last().unwrap();
                return system.allows(top)
                    && system.allows(last - 1)
                    && head.iter().all(|&d| system.allows(d));
            }
            false
        }
    }
}

/// Membership of the reduced fraction `p/q`.
pub fn rational_is_member(p: u64, q: u64, system: &DigitSystem) -> Result<bool> {
    Ok(is_member(&expansion_of_rational(p, q, system.base)?, system))
}

/// True iff `word` is not a concatenation of two or more copies of a shorter block.
pub fn is_primitive(word: &[u8]) -> bool {
    let n = word.len();
    if n == 0 {
        return false;
    }
    // a repetition has some period n/p with p a prime divisor of n
    let Ok(f) = numtheory::factorize(n as u64) else {
        return false;
    };
    let primitive = f.primes().all(|p| {
        let shift = n / p as usize;
        (0..n - shift).any(|i| word[i] != word[i + shift])
    });
    primitive
}
