//! The independence models and the predictors derived from them.
//!
//! Model `*` makes each reduced `p/q` with `3` not dividing `q` an independent
//! event of probability `(2/3)^l(q)`. Model `**` instead makes each coset of
//! `<3>` in `(Z/qZ)^x` an independent event of probability `m(l,2)/mbar(l,3)`,
//! and only when `q | (3^l - 1)/2`. From these come the deterministic series
//! `F(T) = sum round(2 phi(q) (2/3)^l(q))` and `M(T) = sum MLO(q)` over a window,
//! the heuristic expectation of `N~(T)` with its truncated and divisor-bound
//! forms, seeded Monte-Carlo draws, and the Markov tail check along
//! `T_k = (1+c)^k`.
//!
//! The denominator `q = 1` (with `phi = l = 1`) is fed through the same formulas
//! as every other `q` unless the unit is excluded.
//!
//! Random draws use ChaCha20 seeded from a 64-bit seed. Trials are cut into
//! blocks of [`BLOCK_TRIALS`]; block `i` draws from stream `i`, so output does
//! not depend on the number of worker threads.

use std::io::Write;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::counting::{self, Counter, Window};
use crate::error::{Error, Result};
use crate::numtheory;
use crate::store::RecordMap;

/// Dimension of the middle-thirds set, `log 2 / log 3`.
pub fn dimension() -> f64 {
    2f64.ln() / 3f64.ln()
}

/// `(2 - d) / (1 - d)`.
pub fn lambda(d: f64) -> f64 {
    (2.0 - d) / (1.0 - d)
}

/// `log3 (1 - c)`.
pub fn c_prime(c: f64) -> f64 {
    counting::log3(1.0 - c)
}

/// `num / den` as the nearest-ish `f64` without overflowing on huge operands.
pub fn ratio_f64(num: &BigUint, den: &BigUint) -> f64 {
    if num.is_zero() {
        return 0.0;
    }
    let shift = (den.bits() as i64 - num.bits() as i64 + 64).max(0) as u32;
    let quot = (num << shift) / den;
    quot.to_f64().unwrap_or(f64::INFINITY) * 2f64.powi(-(shift as i32))
}

/// `m(l,2) / mbar(l,3)`, the coset probability of model `**`.
pub fn coset_probability(ell: u64) -> Result<f64> {
    Ok(ratio_f64(
        &numtheory::primitive_count(ell, 2)?,
        &numtheory::even_primitive_count(ell, 3)?,
    ))
}

/// `round(2 phi(q) (2/3)^l(q))` for one denominator.
pub fn f_term(phi: u64, ell: u64) -> u64 {
    numtheory::star_rounded_prediction(phi, ell)
}

/// `MLO(1)`, from the same formula as [`numtheory::mlo`] with `phi = l = 1`.
fn unit_mlo() -> u64 {
    let num = numtheory::primitive_count(1, 2).expect("l = 1");
    let den = numtheory::even_primitive_count(1, 3).expect("l = 1");
    numtheory::round_ratio(&num, &den).to_u64().unwrap_or(0)
}

/// One grid point of the predictor table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub t: u64,
    pub n_tilde: u64,
    pub f: u64,
    pub m: u64,
    /// `M / N~`, absent when `N~ = 0`.
    pub ratio_m: Option<f64>,
    pub ratio_f: Option<f64>,
}

/// `N~(T)`, `F(T)` and `M(T)` along a grid of thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct CountSeries {
    pub c: f64,
    pub rows: Vec<SeriesRow>,
}

impl CountSeries {
    pub fn grid(&self) -> Vec<u64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn mean_ratio_m(&self) -> Option<f64> {
        mean(self.rows.iter().filter_map(|r| r.ratio_m))
    }

    pub fn mean_ratio_f(&self) -> Option<f64> {
        mean(self.rows.iter().filter_map(|r| r.ratio_f))
    }

    /// Write `T,N_tilde,F,M,ratio_M,ratio_F`; undefined ratios are empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["T", "N_tilde", "F", "M", "ratio_M", "ratio_F"])?;
        let fmt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            w.write_record([
                r.t.to_string(),
                r.n_tilde.to_string(),
                r.f.to_string(),
                r.m.to_string(),
                fmt(r.ratio_m),
                fmt(r.ratio_f),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Predictor sums over windows, reading `l` and `phi` from stored records.
#[derive(Debug, Clone, Copy)]
pub struct Predictor<'a> {
    records: &'a RecordMap,
    include_unit: bool,
}

impl<'a> Predictor<'a> {
    pub fn new(records: &'a RecordMap) -> Self {
        Predictor { records, include_unit: true }
    }

    pub fn exclude_unit(mut self, exclude: bool) -> Self {
        self.include_unit = !exclude;
        self
    }

    fn terms(&self, w: &Window, term: impl Fn(u64, &crate::DenominatorRecord) -> u64) -> Result<u64> {
        let mut total = 0;
        for q in w.q_min()..=w.q_max() {
            if q % 3 == 0 || (q == 1 && !self.include_unit) {
                continue;
            }
            if q == 1 {
                total += term(1, &unit_record());
                continue;
            }
            let r = self.records.get(&q).ok_or(Error::Coverage { lo: q, hi: q })?;
            total += term(q, r);
        }
        Ok(total)
    }

    /// `F(T)`.
    pub fn f(&self, w: &Window) -> Result<u64> {
        self.terms(w, |_, r| f_term(r.phi, r.ell))
    }

    /// `M(T)`.
    pub fn m(&self, w: &Window) -> Result<u64> {
        self.terms(w, |q, r| if q == 1 { unit_mlo() } else { r.mlo.unwrap_or(0) })
    }

    /// The full predictor table along `grid`.
    pub fn series(&self, grid: &[u64], c: f64) -> Result<CountSeries> {
        let counter = Counter::new(self.records).exclude_unit(!self.include_unit);
        let rows = grid
            .iter()
            .map(|&t| {
                let w = Window::new(t, c)?;
                let n_tilde = counter.n_tilde(&w)?;
                let f = self.f(&w)?;
                let m = self.m(&w)?;
                let ratio = |x: u64| (n_tilde > 0).then(|| x as f64 / n_tilde as f64);
                Ok(SeriesRow { t, n_tilde, f, m, ratio_m: ratio(m), ratio_f: ratio(f) })
            })
            .collect::<Result<_>>()?;
        Ok(CountSeries { c, rows })
    }
}

fn unit_record() -> crate::DenominatorRecord {
    crate::DenominatorRecord {
        q: 1,
        ell: 1,
        phi: 1,
        n_q: counting::UNIT_COUNT,
        mlo: None,
        method: crate::Method::Algorithm1,
        numerators: None,
    }
}

/// `F(T)` column along a grid.
pub fn f_series(records: &RecordMap, grid: &[u64], c: f64) -> Result<Vec<u64>> {
    let p = Predictor::new(records);
    grid.iter().map(|&t| p.f(&Window::new(t, c)?)).collect()
}

/// `M(T)` column along a grid.
pub fn m_series(records: &RecordMap, grid: &[u64], c: f64) -> Result<Vec<u64>> {
    let p = Predictor::new(records);
    grid.iter().map(|&t| p.m(&Window::new(t, c)?)).collect()
}

/// The three forms of the model-`*` expectation of `N~(T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heuristic {
    pub t: u64,
    pub c: f64,
    pub lambda: f64,
    pub c_prime: f64,
    /// Inclusive range of `l` kept in the truncated sum.
    pub ell_range: (u64, u64),
    /// `sum phi(q) (2/3)^l(q)` over the window, `3` not dividing `q`.
    pub exact: f64,
    /// `T sum #L(l,T) (2/3)^l` over `ell_range`.
    pub truncated: f64,
    /// The truncated sum with `#L(l,T)` replaced by `2^(log n / log log n)`, `n = 3^l - 1`.
    pub tau_majorant: f64,
    /// `T^2 (2/3)^(l_max + 1)`, bounding the part of `exact` beyond `ell_range`.
    pub tail_bound: f64,
    /// Values of `l` whose `3^l - 1` could not be factored in budget.
    pub skipped: Vec<u64>,
}

/// `2^(log n / log log n)` for `n = 3^l - 1`.
pub fn tau_bound(ell: u64) -> f64 {
    let log_n = ell as f64 * 3f64.ln();
    if log_n.ln() <= 0.0 {
        return 2.0;
    }
    2f64.powf(log_n / log_n.ln())
}

pub fn heuristic_expectation(t: u64, c: f64) -> Result<Heuristic> {
    let w = Window::new(t, c)?;
    let d = dimension();
    let lam = lambda(d);
    let cp = c_prime(c);
    let log_t = counting::log3(t as f64);
    let lo = (log_t + cp).ceil().max(1.0) as u64;
    let hi = (lam * log_t).floor().max(lo as f64) as u64;

    let exact: f64 = (w.q_min()..=w.q_max())
        .into_par_iter()
        .filter(|q| q % 3 != 0)
        .map(|q| {
            let phi = numtheory::euler_phi(q)?;
            let ell = numtheory::ell(q)?;
            Ok(phi as f64 * numtheory::two_thirds_pow(ell.min(u32::MAX as u64) as u32))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .sum();

    let mut truncated = 0.0;
    let mut tau_majorant = 0.0;
    let mut skipped = Vec::new();
    for ell in lo..=hi {
        let p = numtheory::two_thirds_pow(ell as u32);
        tau_majorant += tau_bound(ell) * p;
        match counting::l_set(ell, &w) {
            Ok(l) => truncated += l.members.len() as f64 * p,
            Err(Error::Budget(_)) => skipped.push(ell),
            Err(e) => return Err(e),
        }
    }
    let tf = t as f64;
    Ok(Heuristic {
        t,
        c,
        lambda: lam,
        c_prime: cp,
        ell_range: (lo, hi),
        exact,
        truncated: tf * truncated,
        tau_majorant: tf * tau_majorant,
        tail_bound: tf * tf * numtheory::two_thirds_pow(hi as u32 + 1),
        skipped,
    })
}

/// Which model to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Star,
    DoubleStar,
}

impl std::str::FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "star" => Ok(Model::Star),
            "dstar" | "double_star" => Ok(Model::DoubleStar),
            other => Err(Error::domain(format!("unknown model {other:?}"))),
        }
    }
}

/// Denominators covered by a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    Single(u64),
    Window(Window),
}

impl Target {
    fn denominators(&self, include_unit: bool) -> Vec<u64> {
        let (lo, hi) = match self {
            Target::Single(q) => (*q, *q),
            Target::Window(w) => (w.q_min(), w.q_max()),
        };
        (lo..=hi)
            .filter(|&q| q % 3 != 0 && (q != 1 || include_unit))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub model: Model,
    pub seed: u64,
    pub trials: u64,
    pub target: Target,
    pub include_unit: bool,
}

/// Trials per RNG stream.
pub const BLOCK_TRIALS: u64 = 256;

/// One binomial term: `multiplier * Binomial(n, p)`.
#[derive(Debug, Clone, Copy)]
struct Term {
    dist: Binomial,
    multiplier: u64,
    mean: f64,
    variance: f64,
}

fn terms_for(model: Model, qs: &[u64]) -> Result<Vec<Term>> {
    qs.par_iter()
        .map(|&q| -> Result<Option<Term>> {
            let phi = numtheory::euler_phi(q)?;
            let ell = numtheory::ell(q)?;
            let (n, p, multiplier) = match model {
                Model::Star => (phi, numtheory::two_thirds_pow(ell as u32), 1),
                Model::DoubleStar => {
                    if !numtheory::divides_half_period(q, ell) {
                        return Ok(None);
                    }
                    (phi / ell, coset_probability(ell)?.min(1.0), ell)
                }
            };
            let dist = Binomial::new(n, p).map_err(|e| Error::domain(format!("q = {q}: {e}")))?;
            let m = multiplier as f64;
            Ok(Some(Term {
                dist,
                multiplier,
                mean: m * n as f64 * p,
                variance: m * m * n as f64 * p * (1.0 - p),
            }))
        })
        .filter_map(|t| t.transpose())
        .collect()
}

/// Simulated values with the model's analytic mean and variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub values: Vec<u64>,
    pub mean: f64,
    pub variance: f64,
}

impl Simulation {
    pub fn sample_mean(&self) -> f64 {
        self.values.iter().map(|&v| v as f64).sum::<f64>() / self.values.len() as f64
    }

    /// Write `trial,value`, trials numbered from 0.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["trial", "value"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([i.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn run_trials(terms: &[Term], seed: u64, trials: u64) -> Vec<u64> {
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    (0..blocks)
        .into_par_iter()
        .flat_map_iter(|block| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(block);
            let n = BLOCK_TRIALS.min(trials - block * BLOCK_TRIALS);
            (0..n)
                .map(|_| terms.iter().map(|t| t.multiplier * t.dist.sample(&mut rng)).sum())
                .collect::<Vec<u64>>()
        })
        .collect()
}

pub fn simulate(config: &SimulationConfig) -> Result<Simulation> {
    if config.trials == 0 {
        return Err(Error::domain("trials must be >= 1"));
    }
    let qs = config.target.denominators(config.include_unit);
    let terms = terms_for(config.model, &qs)?;
    Ok(Simulation {
        values: run_trials(&terms, config.seed, config.trials),
        mean: terms.iter().map(|t| t.mean).sum(),
        variance: terms.iter().map(|t| t.variance).sum(),
    })
}

/// One threshold of the tail check.
#[derive(Debug, Clone, PartialEq)]
pub struct TailRow {
    pub k: u32,
    pub t: u64,
    /// `T^(d + eps)`.
    pub threshold: f64,
    /// Fraction of trials with `X_k >= threshold`.
    pub empirical: f64,
    /// `E[X_k] / threshold`, capped at 1.
    pub markov: f64,
    /// `2 E[X1] / threshold + 2 E[X2] / threshold` with the split at `l0 = lambda log3 T`, capped at 1.
    pub split_bound: f64,
    /// `T^-eps`, the asymptotic majorant.
    pub asymptotic: f64,
    /// `sqrt(b (1 - b) / trials)` for the bound `b = markov`.
    pub sigma: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailCheck {
    pub eps: f64,
    pub c: f64,
    pub trials: u64,
    pub rows: Vec<TailRow>,
    /// Set when the check was not run, with the reason.
    pub skipped: Option<String>,
}

impl TailCheck {
    pub fn passed(&self) -> bool {
        self.skipped.is_none() && self.rows.iter().all(|r| r.passed)
    }

    /// Write `k,T,threshold,empirical,markov,split_bound,asymptotic,sigma,passed`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "k", "T", "threshold", "empirical", "markov", "split_bound", "asymptotic", "sigma", "passed",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.k.to_string(),
                r.t.to_string(),
                r.threshold.to_string(),
                r.empirical.to_string(),
                r.markov.to_string(),
                r.split_bound.to_string(),
                r.asymptotic.to_string(),
                r.sigma.to_string(),
                r.passed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulate `X_k = N~(T_k)` under model `*` for `T_k = round((1+c)^k)`, `k = 1..=k_max`,
/// and compare `P(X_k >= T_k^(d+eps))` with its Markov bounds.
pub fn tail_check(k_max: u32, c: f64, eps: f64, trials: u64, seed: u64) -> Result<TailCheck> {
    if trials == 0 {
        return Err(Error::domain("trials must be >= 1"));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::domain(format!("tail check needs 0 < c < 1, got {c}")));
    }
    if eps <= 0.0 {
        return Ok(TailCheck {
            eps,
            c,
            trials,
            rows: Vec::new(),
            skipped: Some(format!("eps = {eps} <= 0: the bound is at least 1, nothing to check")),
        });
    }
    let d = dimension();
    let lam = lambda(d);
    let mut rows = Vec::new();
    for k in 1..=k_max {
        let t = (1.0 + c).powi(k as i32).round() as u64;
        let w = Window::new(t, c)?;
        let qs = Target::Window(w).denominators(false);
        let terms = terms_for(Model::Star, &qs)?;
        let values = run_trials(&terms, seed ^ k as u64, trials);
        let threshold = (t as f64).powf(d + eps);
        let hits = values.iter().filter(|&&v| v as f64 >= threshold).count();
        let empirical = hits as f64 / trials as f64;
        let mean: f64 = terms.iter().map(|x| x.mean).sum();
        let ell0 = lam * counting::log3(t as f64);
        let (mut e1, mut e2) = (0.0, 0.0);
        for (&q, term) in qs.iter().zip(&terms) {
            if numtheory::ell(q)? as f64 > ell0 {
                e1 += term.mean;
            } else {
                e2 += term.mean;
            }
        }
        let markov = (mean / threshold).min(1.0);
        let split_bound = (2.0 * e1 / threshold).min(1.0) + (2.0 * e2 / threshold).min(1.0);
        let sigma = (markov * (1.0 - markov) / trials as f64).sqrt();
        rows.push(TailRow {
            k,
            t,
            threshold,
            empirical,
            markov,
            split_bound: split_bound.min(1.0),
            asymptotic: (t as f64).powf(-eps),
            sigma,
            passed: empirical <= markov + 3.0 * sigma,
        });
    }
    Ok(TailCheck { eps, c, trials, rows, skipped: None })
}
