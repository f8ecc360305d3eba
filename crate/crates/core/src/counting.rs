//! Window counts of Cantor rationals and the record scan of `l(q)/log3 q`.
//!
//! The window for threshold `T` and parameter `c` is `(1-c)T < q <= T`; for
//! `c = 0` it is the single denominator `T`. The cumulative counts run over
//! `0 < q <= T`. The denominator `q = 1` carries the two rationals `0` and `1`
//! and is counted unless the caller excludes it.

use std::io::Write;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use crate::enumerator::{self, Budget};
use crate::error::{Error, Result};
use crate::numtheory::{self, BigFactorization};
use crate::store::RecordMap;

/// Number of Cantor rationals with denominator 1.
pub const UNIT_COUNT: u64 = 2;

/// The denominator range `(1-c)T < q <= T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub t: u64,
    pub c: f64,
}

impl Window {
    pub fn new(t: u64, c: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&c) {
            return Err(Error::domain(format!("window parameter c = {c} outside [0, 1)")));
        }
        if t == 0 {
            return Err(Error::domain("window threshold must be >= 1"));
        }
        Ok(Window { t, c })
    }

    /// Smallest denominator in the window.
    pub fn q_min(&self) -> u64 {
        let lower = ((1.0 - self.c) * self.t as f64).floor() as u64;
        lower.min(self.t - 1) + 1
    }

    pub fn q_max(&self) -> u64 {
        self.t
    }

    pub fn contains(&self, q: u64) -> bool {
        (self.q_min()..=self.q_max()).contains(&q)
    }
}

/// Summed counts over windows, reading `N_q` from a record map.
#[derive(Debug, Clone, Copy)]
pub struct Counter<'a> {
    records: &'a RecordMap,
    include_unit: bool,
}

impl<'a> Counter<'a> {
    pub fn new(records: &'a RecordMap) -> Self {
        Counter { records, include_unit: true }
    }

    /// Drop `q = 1` from every count.
    pub fn exclude_unit(mut self, exclude: bool) -> Self {
        self.include_unit = !exclude;
        self
    }

    pub fn n_q(&self, q: u64) -> Result<u64> {
        if q == 1 {
            return Ok(if self.include_unit { UNIT_COUNT } else { 0 });
        }
        self.records
            .get(&q)
            .map(|r| r.n_q)
            .ok_or_else(|| self.gap(q, u64::MAX, false))
    }

    /// Coverage error describing the run of missing `q` starting at `from`.
    fn gap(&self, from: u64, limit: u64, skip_threes: bool) -> Error {
        let mut hi = from;
        let mut q = from + 1;
        while q <= limit && q - from <= 1_000_000 {
            if !(skip_threes && q.is_multiple_of(3)) {
                if self.records.contains_key(&q) {
                    break;
                }
                hi = q;
            }
            q += 1;
        }
        Error::Coverage { lo: from, hi }
    }

    fn sum(&self, lo: u64, hi: u64, skip_threes: bool) -> Result<u64> {
        let mut total = 0u64;
        for q in lo..=hi {
            if skip_threes && q % 3 == 0 {
                continue;
            }
            total += match q {
                1 => self.n_q(1)?,
                _ => match self.records.get(&q) {
                    Some(r) => r.n_q,
                    None => return Err(self.gap(q, hi, skip_threes)),
                },
            };
        }
        Ok(total)
    }

    /// Purely periodic count over the window: `3` does not divide `q`.
    pub fn n_tilde(&self, w: &Window) -> Result<u64> {
        self.sum(w.q_min(), w.q_max(), true)
    }

    /// Count over the window including `3 | q`.
    pub fn n(&self, w: &Window) -> Result<u64> {
        self.sum(w.q_min(), w.q_max(), false)
    }

    pub fn n_tilde_star(&self, t: u64) -> Result<u64> {
        self.sum(1, t, true)
    }

    pub fn n_star(&self, t: u64) -> Result<u64> {
        self.sum(1, t, false)
    }

    /// One row of the count table.
    pub fn row(&self, t: u64, c: f64) -> Result<CountRow> {
        let w = Window::new(t, c)?;
        Ok(CountRow {
            t,
            c,
            n_tilde: self.n_tilde(&w)?,
            n: self.n(&w)?,
            n_tilde_star: self.n_tilde_star(t)?,
            n_star: self.n_star(t)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRow {
    pub t: u64,
    pub c: f64,
    pub n_tilde: u64,
    pub n: u64,
    pub n_tilde_star: u64,
    pub n_star: u64,
}

/// Counts along a grid, with cumulative sums built incrementally.
pub fn count_series(counter: &Counter, grid: &[u64], c: f64) -> Result<Vec<CountRow>> {
    grid.iter().map(|&t| counter.row(t, c)).collect()
}

/// Write `T,c,N_tilde,N,N_tilde_star,N_star`.
pub fn write_count_csv<W: Write>(rows: &[CountRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["T", "c", "N_tilde", "N", "N_tilde_star", "N_star"])?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.c.to_string(),
            r.n_tilde.to_string(),
            r.n.to_string(),
            r.n_tilde_star.to_string(),
            r.n_star.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Threshold grid kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GridKind {
    #[default]
    Geometric,
    Linear,
}

impl std::str::FromStr for GridKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(GridKind::Geometric),
            "linear" => Ok(GridKind::Linear),
            other => Err(Error::domain(format!("unknown grid {other:?}"))),
        }
    }
}

/// `T_k = round((1+c)^k)` for `k >= 0`, restricted to `[t_min, t_max]`, deduplicated.
pub fn geometric_grid(c: f64, t_min: u64, t_max: u64) -> Result<Vec<u64>> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::domain(format!("geometric grid needs 0 < c < 1, got {c}")));
    }
    let mut out: Vec<u64> = Vec::new();
    for k in 0.. {
        let t = (1.0 + c).powi(k).round();
        if t > t_max as f64 {
            break;
        }
        let t = t as u64;
        if t >= t_min.max(1) && out.last() != Some(&t) {
            out.push(t);
        }
    }
    Ok(out)
}

/// `t_min, t_min + step, ...` up to `t_max`.
pub fn linear_grid(t_min: u64, t_max: u64, step: u64) -> Result<Vec<u64>> {
    if step == 0 {
        return Err(Error::domain("linear grid step must be positive"));
    }
    Ok((t_min.max(1)..=t_max).step_by(step as usize).collect())
}

pub fn grid(kind: GridKind, c: f64, t_min: u64, t_max: u64, step: u64) -> Result<Vec<u64>> {
    match kind {
        GridKind::Geometric => geometric_grid(c, t_min, t_max),
        GridKind::Linear => linear_grid(t_min, t_max, step),
    }
}

/// `Phi_n(3)`, the cyclotomic part of `3^n - 1`.
pub fn cyclotomic_at_three(n: u64) -> Result<BigUint> {
    let f = numtheory::factorize(n)?;
    let mut num = BigUint::one();
    let mut den = BigUint::one();
    for d in f.divisors() {
        match numtheory::mobius(n / d)? {
            1 => num *= numtheory::three_pow_minus_one(d),
            -1 => den *= numtheory::three_pow_minus_one(d),
            _ => {}
        }
    }
    Ok(num / den)
}

/// Factorization of `3^n - 1` through its cyclotomic factors.
pub fn factor_three_pow_minus_one(n: u64) -> Result<BigFactorization> {
    let mut out = BigFactorization::default();
    for d in numtheory::factorize(n)?.divisors() {
        out = out.merge(numtheory::factorize_big(&cyclotomic_at_three(d)?)?);
    }
    Ok(out)
}

/// The set `L(l, T)`: denominators in the window whose order of 3 is exactly `l`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LSet {
    pub ell: u64,
    pub members: Vec<u64>,
    /// Number of divisors of `3^l - 1`, an upper bound for `members.len()`.
    pub tau: BigUint,
}

pub fn l_set(ell: u64, w: &Window) -> Result<LSet> {
    l_set_in(ell, w.q_min(), w.q_max())
}

/// `L(l, T)` over an explicit range `lo..=hi`.
pub fn l_set_in(ell: u64, lo: u64, hi: u64) -> Result<LSet> {
    if ell == 0 {
        return Err(Error::domain("l must be >= 1"));
    }
    let fac = factor_three_pow_minus_one(ell)?;
    let mut divisors = vec![1u64];
    for (p, e) in &fac.factors {
        let Some(p) = p.to_u64() else { continue };
        let mut next = Vec::new();
        for &d in &divisors {
            let mut v = d;
            next.push(v);
            for _ in 0..*e {
                match v.checked_mul(p) {
                    Some(x) if x <= hi => {
                        v = x;
                        next.push(v);
                    }
                    _ => break,
                }
            }
        }
        divisors = next;
    }
    let ell_primes: Vec<u64> = numtheory::factorize(ell)?.primes().collect();
    let mut members: Vec<u64> = divisors
        .into_iter()
        .filter(|&q| q >= lo)
        .filter(|&q| {
            ell_primes.iter().all(|&r| {
                let sub = ell / r;
                numtheory::pow_mod(3 % q, sub, q) != 1 % q
            })
        })
        .collect();
    members.sort_unstable();
    Ok(LSet { ell, members, tau: fac.tau() })
}

/// One row of the record scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllHatRecord {
    pub q: u64,
    pub ell_hat: u64,
    pub ratio: f64,
}

impl EllHatRecord {
    pub fn new(q: u64, ell_hat: u64) -> Self {
        let ratio = if ell_hat == 0 { 0.0 } else { ell_hat as f64 / log3(q as f64) };
        EllHatRecord { q, ell_hat, ratio }
    }
}

pub fn log3(x: f64) -> f64 {
    x.ln() / 3f64.ln()
}

/// `l(q)` if some Cantor rational has denominator `q`, else 0.
pub fn ell_hat(q: u64) -> Result<u64> {
    if enumerator::has_cantor_rational(q)? {
        numtheory::ell(q)
    } else {
        Ok(0)
    }
}

/// Result of [`ell_hat_scan`].
#[derive(Debug, Clone, PartialEq)]
pub struct EllHatScan {
    /// Denominators whose ratio strictly exceeds every earlier nonzero ratio.
    pub records: Vec<EllHatRecord>,
    /// Largest `q` actually scanned.
    pub scanned_to: u64,
    /// False when the budget stopped the scan before `q_max`.
    pub complete: bool,
}

impl EllHatScan {
    pub fn max_ratio(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.ratio)
    }
}

/// Scan `q = 2..=q_max` for record values of `l_hat(q) / log3 q`.
///
/// `q = 1` is skipped since `log3 1 = 0`. Denominators beyond the algorithm-1
/// limit in `budget` end the scan, which is then reported as incomplete.
pub fn ell_hat_scan(q_max: u64, budget: &Budget) -> Result<EllHatScan> {
    let limit = q_max.min(budget.max_algorithm1_q);
    let values: Vec<EllHatRecord> = (2..=limit.max(1))
        .into_par_iter()
        .map(|q| Ok(EllHatRecord::new(q, ell_hat(q)?)))
        .collect::<Result<_>>()?;
    let mut records: Vec<EllHatRecord> = Vec::new();
    for v in values {
        if v.ell_hat == 0 {
            continue;
        }
        if records.last().is_none_or(|best| v.ratio > best.ratio) {
            records.push(v);
        }
    }
    Ok(EllHatScan {
        records,
        scanned_to: limit.max(1),
        complete: limit == q_max,
    })
}

/// Write `q,ell_hat,ratio`; the ratio uses the shortest round-trip float form.
pub fn write_ell_hat_csv<W: Write>(rows: &[EllHatRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "ell_hat", "ratio"])?;
    for r in rows {
        w.write_record([r.q.to_string(), r.ell_hat.to_string(), format_ratio(r.ratio)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn format_ratio(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.1}")
    } else {
        x.to_string()
    }
}

/// Least `c1` with `N*(T) >= c1 log T T^d` over the given rows.
pub fn fitted_log_constant(rows: &[CountRow], d: f64) -> Option<f64> {
    rows.iter()
        .filter(|r| r.t >= 2)
        .map(|r| r.n_star as f64 / ((r.t as f64).ln() * (r.t as f64).powf(d)))
        .min_by(f64::total_cmp)
}

/// `log N~*(T) / log T` per row, skipping rows where it is undefined.
pub fn growth_exponents(rows: &[CountRow]) -> Vec<(u64, f64)> {
    rows.iter()
        .filter(|r| r.t >= 2 && r.n_tilde_star > 0)
        .map(|r| (r.t, (r.n_tilde_star as f64).ln() / (r.t as f64).ln()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::enumerate_range;
    use crate::enumerator::MethodChoice;

    fn records(hi: u64) -> RecordMap {
        enumerate_range(2, hi, MethodChoice::Algorithm1, &Budget::default()).unwrap()
    }

    #[test]
    fn window_bounds() {
        let w = Window::new(10, 0.5).unwrap();
        assert_eq!((w.q_min(), w.q_max()), (6, 10));
        let w = Window::new(13, 0.0).unwrap();
        assert_eq!((w.q_min(), w.q_max()), (13, 13));
        let w = Window::new(1, 0.5).unwrap();
        assert_eq!((w.q_min(), w.q_max()), (1, 1));
        assert!(Window::new(5, 1.0).is_err());
        assert!(Window::new(0, 0.5).is_err());
    }

    #[test]
    fn unit_window() {
        let recs = RecordMap::new();
        let w = Window::new(1, 0.5).unwrap();
        assert_eq!(Counter::new(&recs).n_tilde(&w).unwrap(), 2);
        assert_eq!(Counter::new(&recs).exclude_unit(true).n_tilde(&w).unwrap(), 0);
        assert_eq!(Counter::new(&recs).exclude_unit(true).n_tilde_star(1).unwrap(), 0);
    }

    #[test]
    fn cumulative_matches_direct_sum() {
        let recs = records(13);
        let direct: u64 = 2 + (2..=13).map(|q| recs[&q].n_q).sum::<u64>();
        let counter = Counter::new(&recs);
        assert_eq!(counter.n_star(13).unwrap(), direct);
        assert!(counter.n_star(13).unwrap() >= 6);
        let w = Window::new(13, 0.99).unwrap();
        assert_eq!(counter.n(&w).unwrap(), counter.n_star(13).unwrap());
    }

    #[test]
    fn coverage_gap_is_named() {
        let mut recs = records(20);
        recs.remove(&14);
        recs.remove(&16);
        recs.remove(&17);
        let err = Counter::new(&recs).n_star(20).unwrap_err();
        assert!(matches!(err, Error::Coverage { lo: 14, hi: 14 }), "{err}");
        let err = Counter::new(&recs).n_tilde(&Window::new(20, 0.5).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Coverage { lo: 14, hi: 17 }), "{err}");
        // tilde counts skip multiples of 3 and need no record there
        let mut recs = records(20);
        recs.remove(&15);
        assert!(Counter::new(&recs).n_tilde_star(20).is_ok());
        assert!(Counter::new(&recs).n_star(20).is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(geometric_grid(0.5, 1, 20).unwrap(), vec![1, 2, 3, 5, 8, 11, 17]);
        assert_eq!(linear_grid(5, 20, 5).unwrap(), vec![5, 10, 15, 20]);
        assert!(geometric_grid(0.0, 1, 20).is_err());
    }

    #[test]
    fn cyclotomic_split() {
        assert_eq!(cyclotomic_at_three(1).unwrap(), BigUint::from(2u32));
        assert_eq!(cyclotomic_at_three(2).unwrap(), BigUint::from(4u32));
        assert_eq!(cyclotomic_at_three(3).unwrap(), BigUint::from(13u32));
        assert_eq!(cyclotomic_at_three(6).unwrap(), BigUint::from(7u32));
        for n in 1..=40 {
            assert_eq!(factor_three_pow_minus_one(n).unwrap().value(), numtheory::three_pow_minus_one(n));
        }
    }

    fn l_set_oracle(ell: u64, w: &Window) -> Vec<u64> {
        (w.q_min()..=w.q_max())
            .filter(|&q| q % 3 != 0 && numtheory::ell(q).unwrap() == ell)
            .collect()
    }

    #[test]
    fn l_sets_match_order_scan() {
        let w = Window::new(13, 0.99).unwrap();
        let l3 = l_set(3, &w).unwrap();
        assert!(l3.members.contains(&13));
        let w26 = Window::new(26, 0.99).unwrap();
        assert!(l_set(3, &w26).unwrap().members.contains(&26));
        assert_eq!(l_set(1, &Window::new(2, 0.0).unwrap()).unwrap().members, vec![2]);
        for t in [50u64, 300, 2000] {
            for c in [0.5, 0.99] {
                let w = Window::new(t, c).unwrap();
                for ell in 1..=30 {
                    let l = l_set(ell, &w).unwrap();
                    assert_eq!(l.members, l_set_oracle(ell, &w), "l = {ell}, T = {t}, c = {c}");
                    assert!(BigUint::from(l.members.len()) <= l.tau);
                }
            }
        }
    }

    #[test]
    fn ell_hat_small_scans() {
        let scan = ell_hat_scan(3, &Budget::default()).unwrap();
        assert_eq!(scan.records, vec![EllHatRecord::new(3, 1)]);
        assert_eq!(scan.records[0].ratio, 1.0);
        assert!(scan.complete);
        let budget = Budget { max_algorithm1_q: 100, ..Budget::default() };
        let partial = ell_hat_scan(200, &budget).unwrap();
        assert!(!partial.complete);
        assert_eq!(partial.scanned_to, 100);
    }

    #[test]
    fn ell_hat_values() {
        assert_eq!(ell_hat(2).unwrap(), 0);
        assert_eq!(ell_hat(13).unwrap(), 3);
        assert_eq!(ell_hat(23).unwrap(), 0);
        assert_eq!(ell_hat(146).unwrap(), 12);
        let r = EllHatRecord::new(146, 12);
        assert!((r.ratio - 2.6453427135663814).abs() < 1e-12);
    }

    #[test]
    fn ratio_formatting() {
        let mut out = Vec::new();
        write_ell_hat_csv(&[EllHatRecord::new(3, 1), EllHatRecord::new(386, 16)], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("q,ell_hat,ratio\n3,1,1.0\n386,16,2.95135604420797"), "{text}");
    }
}
