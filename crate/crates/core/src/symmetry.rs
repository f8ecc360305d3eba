//! Word families built from a block and its digit swap.
//!
//! For `w` in `{0,2}^r` let `w'` swap `0` and `2`. The period `w w'` has value
//! `(w + 1) / (3^r + 1)`, and the periods `w w' 0^r` and `w w' 2^r` have
//! denominators dividing `q_r = 3^(2r) + 3^r + 1`. Each family is closed under
//! cyclic shifts and deduplicated as a set of strings.

use std::collections::BTreeSet;
use std::io::Write;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use crate::enumerator::{self, Budget, MethodChoice};
use crate::error::{Error, Result};
use crate::numtheory;

/// Largest `r` accepted by [`generate_words`].
pub const MAX_R: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    /// `w w'`, length `2r`, target `3^r + 1`.
    Bar,
    /// `w w' 0^r`.
    Pad0,
    /// `w w' 2^r`.
    Pad2,
    /// Union of [`Kind::Pad0`] and [`Kind::Pad2`].
    Pad,
}

impl std::str::FromStr for Kind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bar" | "omega_bar" => Ok(Kind::Bar),
            "pad0" | "omega_bar_pad0" => Ok(Kind::Pad0),
            "pad2" | "omega_bar_pad2" => Ok(Kind::Pad2),
            "pad" => Ok(Kind::Pad),
            other => Err(Error::domain(format!("unknown symmetry kind {other:?}"))),
        }
    }
}

/// One family: a kind and a block length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SymmetryFamily {
    pub kind: Kind,
    pub r: u32,
}

impl SymmetryFamily {
    pub fn new(kind: Kind, r: u32) -> Result<Self> {
        if r == 0 || r > MAX_R {
            return Err(Error::budget(format!("r = {r} outside 1..={MAX_R}")));
        }
        Ok(SymmetryFamily { kind, r })
    }

    pub fn word_len(&self) -> u32 {
        match self.kind {
            Kind::Bar => 2 * self.r,
            _ => 3 * self.r,
        }
    }

    /// `3^r + 1` for [`Kind::Bar`], `3^(2r) + 3^r + 1` otherwise.
    pub fn target_q(&self) -> u64 {
        let p = 3u64.pow(self.r);
        match self.kind {
            Kind::Bar => p + 1,
            _ => p * p + p + 1,
        }
    }
}

fn swap(word: &[u8]) -> Vec<u8> {
    word.iter().map(|&d| 2 - d).collect()
}

/// All words of the family together with their cyclic shifts.
pub fn generate_words(family: &SymmetryFamily) -> BTreeSet<Vec<u8>> {
    let r = family.r as usize;
    let pads: &[Option<u8>] = match family.kind {
        Kind::Bar => &[None],
        Kind::Pad0 => &[Some(0)],
        Kind::Pad2 => &[Some(2)],
        Kind::Pad => &[Some(0), Some(2)],
    };
    let mut out = BTreeSet::new();
    for bits in 0u64..(1 << r) {
        let w: Vec<u8> = (0..r).rev().map(|i| if bits >> i & 1 == 1 { 2 } else { 0 }).collect();
        for pad in pads {
            let mut word = w.clone();
            word.extend(swap(&w));
            if let Some(d) = pad {
                word.extend(std::iter::repeat_n(*d, r));
            }
            for s in 0..word.len() {
                let mut shifted = word.clone();
                shifted.rotate_left(s);
                out.insert(shifted);
            }
        }
    }
    out
}

/// Reduced denominator of the purely periodic value `0.(word)` in base 3.
pub fn word_denominator(word: &[u8]) -> BigUint {
    let p = word.iter().fold(BigUint::ZERO, |acc, &d| acc * 3u32 + d);
    let q = numtheory::three_pow_minus_one(word.len() as u64);
    if p == BigUint::ZERO {
        return BigUint::one();
    }
    let g = p.gcd(&q);
    q / g
}

/// One row of the census table.
#[derive(Debug, Clone, PartialEq)]
pub struct CensusRow {
    pub r: u32,
    pub q: u64,
    pub n_q: u64,
    pub x: u64,
    /// `floor(X phi(q)/q)`.
    pub y_floor: u64,
    /// `round(X phi(q)/q)`.
    pub y_round: u64,
    pub z: u64,
    /// `MLO(q)`.
    pub mlo: u64,
}

impl CensusRow {
    pub fn y_plus_mlo(&self) -> u64 {
        self.y_round + self.mlo
    }

    /// True where the two rounding conventions disagree.
    pub fn y_conventions_differ(&self) -> bool {
        self.y_floor != self.y_round
    }
}

/// `X`, `Y` and `Z` for a family, given `N_q` for its target.
pub fn census_with(family: &SymmetryFamily, n_q: u64) -> Result<CensusRow> {
    let q = family.target_q();
    let words = generate_words(family);
    let x = words.len() as u64;
    let target = BigUint::from(q);
    let z = words
        .par_iter()
        .filter(|w| word_denominator(w) == target)
        .count() as u64;
    let phi = numtheory::euler_phi(q)?;
    let num = BigUint::from(x) * phi;
    let den = BigUint::from(q);
    let y_floor = (&num / &den).to_u64().unwrap_or(u64::MAX);
    let y_round = numtheory::round_ratio(&num, &den).to_u64().unwrap_or(u64::MAX);
    Ok(CensusRow { r: family.r, q, n_q, x, y_floor, y_round, z, mlo: numtheory::mlo(q)? })
}

/// As [`census_with`], enumerating `N_q` first.
pub fn census(family: &SymmetryFamily, budget: &Budget) -> Result<CensusRow> {
    let record = enumerator::enumerate(family.target_q(), MethodChoice::Auto, budget)?;
    census_with(family, record.n_q)
}

/// Write `r,q_r,N_q,X,Y_floor,Y_round,Z,Y_plus_MLO`.
pub fn write_census_csv<W: Write>(rows: &[CensusRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "q_r", "N_q", "X", "Y_floor", "Y_round", "Z", "Y_plus_MLO"])?;
    for row in rows {
        w.write_record([
            row.r.to_string(),
            row.q.to_string(),
            row.n_q.to_string(),
            row.x.to_string(),
            row.y_floor.to_string(),
            row.y_round.to_string(),
            row.z.to_string(),
            row.y_plus_mlo().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// The `(3/2)^r` revision for `q = 3^r + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Correction {
    pub r: u32,
    pub q: u64,
    pub n_q: u64,
    pub mlo: u64,
    /// `N_q / MLO(q)`; `None` when `MLO(q) = 0`.
    pub ratio: Option<f64>,
    /// `(2/3)^r N_q / MLO(q)`.
    pub corrected_ratio: Option<f64>,
    /// `MLO(q) (3/2)^r`.
    pub corrected_estimate: f64,
}

pub fn corrected_prediction_with(r: u32, n_q: u64) -> Result<Correction> {
    let family = SymmetryFamily::new(Kind::Bar, r)?;
    let q = family.target_q();
    let mlo = numtheory::mlo(q)?;
    let ratio = (mlo > 0).then(|| n_q as f64 / mlo as f64);
    let scale = (2.0f64 / 3.0).powi(r as i32);
    Ok(Correction {
        r,
        q,
        n_q,
        mlo,
        ratio,
        corrected_ratio: ratio.map(|x| x * scale),
        corrected_estimate: mlo as f64 / scale,
    })
}

pub fn corrected_prediction(r: u32, budget: &Budget) -> Result<Correction> {
    let q = SymmetryFamily::new(Kind::Bar, r)?.target_q();
    let record = enumerator::enumerate(q, MethodChoice::Auto, budget)?;
    corrected_prediction_with(r, record.n_q)
}

/// Write `r,q,N_q,MLO,ratio,corrected_ratio,corrected_estimate`.
pub fn write_correction_csv<W: Write>(rows: &[Correction], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["r", "q", "N_q", "MLO", "ratio", "corrected_ratio", "corrected_estimate"])?;
    let fmt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    for c in rows {
        w.write_record([
            c.r.to_string(),
            c.q.to_string(),
            c.n_q.to_string(),
            c.mlo.to_string(),
            fmt(c.ratio),
            fmt(c.corrected_ratio),
            c.corrected_estimate.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digitsys::{digits_to_string, is_member, Expansion, PeriodicExpansion};
    use crate::digitsys::DigitSystem;

    fn strings(words: &BTreeSet<Vec<u8>>) -> Vec<String> {
        words.iter().map(|w| digits_to_string(w)).collect()
    }

    #[test]
    fn smallest_padded_family() {
        let words = generate_words(&SymmetryFamily::new(Kind::Pad, 1).unwrap());
        assert_eq!(strings(&words), ["002", "020", "022", "200", "202", "220"]);
    }

    #[test]
    fn family_sizes() {
        let x = |r| generate_words(&SymmetryFamily::new(Kind::Pad, r).unwrap()).len();
        assert_eq!(x(2), 18);
        assert_eq!(x(3), 54);
        assert_eq!(x(7), 2562);
    }

    #[test]
    fn bar_values() {
        // 0.(02) = 2/8 = 1/4, denominator 3 + 1
        assert_eq!(word_denominator(&[0, 2]), BigUint::from(4u32));
        assert_eq!(word_denominator(&[0, 0]), BigUint::one());
        assert_eq!(SymmetryFamily::new(Kind::Bar, 4).unwrap().target_q(), 82);
        assert_eq!(SymmetryFamily::new(Kind::Pad, 3).unwrap().target_q(), 757);
    }

    #[test]
    fn denominators_divide_target() {
        for kind in [Kind::Bar, Kind::Pad] {
            for r in 1..=6 {
                let family = SymmetryFamily::new(kind, r).unwrap();
                let target = BigUint::from(family.target_q());
                for w in generate_words(&family) {
                    assert!((&target % word_denominator(&w)) == BigUint::ZERO);
                    let e = PeriodicExpansion::from_words(3, vec![], w.clone()).unwrap();
                    assert!(is_member(&Expansion::Periodic(e), &DigitSystem::ternary()));
                }
            }
        }
    }

    #[test]
    fn rounding_conventions() {
        let row = census_with(&SymmetryFamily::new(Kind::Pad, 1).unwrap(), 6).unwrap();
        assert_eq!((row.x, row.y_floor, row.y_round, row.z), (6, 5, 6, 6));
        assert!(row.y_conventions_differ());
    }

    #[test]
    fn first_bar_correction() {
        let c = corrected_prediction_with(4, 16).unwrap();
        assert_eq!(c.mlo, 3);
        assert!((c.corrected_ratio.unwrap() - 1.053).abs() < 1e-3);
    }

    #[test]
    fn census_small_r() {
        let rows: Vec<_> = (1..=3)
            .map(|r| census(&SymmetryFamily::new(Kind::Pad, r).unwrap(), &Budget::default()).unwrap())
            .collect();
        let got: Vec<_> = rows.iter().map(|c| (c.q, c.n_q, c.x, c.y_round, c.z, c.mlo)).collect();
        assert_eq!(got, [(13, 6, 6, 6, 6, 6), (91, 12, 18, 14, 12, 12), (757, 54, 54, 54, 54, 39)]);
        assert_eq!(rows[2].y_plus_mlo(), 93);
    }

    #[test]
    fn refuses_large_r() {
        assert!(matches!(SymmetryFamily::new(Kind::Pad, MAX_R + 1), Err(Error::Budget(_))));
        assert!(SymmetryFamily::new(Kind::Pad, 0).is_err());
    }
}
