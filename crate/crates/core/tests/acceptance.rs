//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `EXPECTED_FAILURES` are reported as FAIL without failing
//! the run; any other FAIL, or an expected failure that starts passing, exits
//! nonzero so the list stays accurate.

use std::process::ExitCode;
use std::time::Instant;

use cantor_core::counting::{self, Counter};
use cantor_core::enumerator::{self, Budget, Method, MethodChoice};
use cantor_core::models::{self, Model, Predictor, SimulationConfig, Target};
use cantor_core::store::{self, RecordMap};
use cantor_core::symmetry::{self, Kind, SymmetryFamily};
use cantor_core::{numtheory, tables, DigitSystem};

const EXPECTED_FAILURES: &[(&str, &str)] = &[
    (
        "table1",
        "30 and 84 are not records (q = 10 already has a larger ratio) and 4, 10, 28, 82 are; 25/2644 lies on the set with l(2644) = 22, ratio 3.067 > 2.951",
    ),
    (
        "figures-envelope",
        "the windows at T = 2, 3, 8, 26 contain no Cantor rationals while F > 0, so no constant factor holds there",
    ),
];

type Check<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn budget() -> Budget {
    Budget::default()
}

fn table1() -> Outcome {
    let printed = [
        (3, 1.0),
        (30, 1.292030029884618),
        (84, 1.4876881693076203),
        (146, 2.6453427135663814),
        (386, 2.951356044207975),
    ];
    let scan = counting::ell_hat_scan(400, &budget()).unwrap();
    let got: Vec<(u64, f64)> = scan.records.iter().map(|r| (r.q, r.ratio)).collect();
    let same = got.len() == printed.len()
        && got.iter().zip(&printed).all(|(a, b)| a.0 == b.0 && (a.1 - b.1).abs() <= 1e-9);
    let wide = counting::ell_hat_scan(3u64.pow(8), &budget()).unwrap();
    let wide_ok = wide.complete && wide.max_ratio() <= 2.951356044207975 + 1e-12;
    let qs: Vec<u64> = got.iter().map(|r| r.0).collect();
    let beyond: Vec<String> = wide
        .records
        .iter()
        .filter(|r| r.ratio > 2.951356044207975 + 1e-12)
        .map(|r| format!("q = {} (l = {}, ratio {})", r.q, r.ell_hat, r.ratio))
        .collect();
    outcome(
        same && wide_ok,
        format!(
            "records to 400: {qs:?}; q = 146, 386 ratios {} and {}; max ratio to 3^8 = {} ({})",
            got.iter().find(|r| r.0 == 146).map_or(f64::NAN, |r| r.1),
            got.iter().find(|r| r.0 == 386).map_or(f64::NAN, |r| r.1),
            wide.max_ratio(),
            if wide_ok { "no ratio above 2.951356".to_string() } else { format!("exceeded by {}", beyond.join(", ")) }
        ),
    )
}

fn table2() -> Outcome {
    let pairs = [
        (82, 16, 3),
        (244, 30, 4),
        (730, 48, 4),
        (2188, 126, 7),
        (6562, 240, 9),
        (19684, 414, 11),
        (59050, 820, 14),
        (177148, 2024, 23),
        (531442, 4008, 31),
        (1594324, 8190, 42),
    ];
    let printed = tables::Table::parse(tables::expected(2).unwrap()).unwrap();
    let mut bad = Vec::new();
    let mut worst = 0.0f64;
    for (i, (r, &(q, n, m))) in (4u32..).zip(&pairs).enumerate() {
        let c = symmetry::corrected_prediction(r, &budget()).unwrap();
        if (c.q, c.n_q, c.mlo) != (q, n, m) {
            bad.push(format!("r = {r}: ({}, {}, {})", c.q, c.n_q, c.mlo));
        }
        let want: f64 = printed.rows[i][5].parse().unwrap();
        let err = (c.corrected_ratio.unwrap_or(f64::NAN) - want).abs();
        worst = worst.max(err);
        if err.is_nan() || err > 1e-3 {
            bad.push(format!("r = {r}: corrected {:?} vs {want}", c.corrected_ratio));
        }
    }
    outcome(bad.is_empty(), format!("10 rows; largest corrected-ratio error {worst:.2e}; {}", diffs(&bad)))
}

fn diffs(bad: &[String]) -> String {
    if bad.is_empty() {
        "no differences".into()
    } else {
        bad.join("; ")
    }
}

fn table4() -> Outcome {
    let rows = [(23, 0, None), (3851, 88, Some(89)), (34511, 68, Some(70)), (363889, 304, Some(328)), (1001523179, 178480, Some(178481))];
    let mut bad = Vec::new();
    let mut big_secs = 0.0;
    for (q, n, m) in rows {
        let start = Instant::now();
        let rec = enumerator::enumerate(q, MethodChoice::Auto, &budget()).unwrap();
        if q > 1_000_000 {
            big_secs = start.elapsed().as_secs_f64();
            if rec.method != Method::WordOracle {
                bad.push(format!("q = {q} used {}", rec.method));
            }
            if big_secs >= 300.0 {
                bad.push(format!("q = {q} took {big_secs:.1}s"));
            }
        }
        if rec.n_q != n {
            bad.push(format!("q = {q}: N_q = {}", rec.n_q));
        }
        if let Some(m) = m {
            if rec.mlo != Some(m) {
                bad.push(format!("q = {q}: MLO = {:?}", rec.mlo));
            }
        }
    }
    let mlo23 = numtheory::mlo(23).unwrap();
    outcome(
        bad.is_empty(),
        format!(
            "N_q exact on 5 rows; q = 1001523179 by word oracle in {big_secs:.2}s; MLO(23) computes to {mlo23} (expected 0, not part of the check); {}",
            diffs(&bad)
        ),
    )
}

fn table3() -> Outcome {
    let rows = [(12962, 72, 1), (531442, 4008, 31), (21257680, 4176, 985)];
    let mut bad = Vec::new();
    for (q, n, m) in rows {
        let rec = tables::enumerate_cheapest(q, &budget()).unwrap();
        if (rec.ell, rec.n_q, rec.mlo) != (24, n, Some(m)) {
            bad.push(format!("q = {q}: l = {}, N = {}, MLO = {:?}", rec.ell, rec.n_q, rec.mlo));
        }
    }
    outcome(bad.is_empty(), format!("3 rows with l = 24; {}", diffs(&bad)))
}

fn table5() -> Outcome {
    let n = [6, 12, 54, 120, 450];
    let x = [6, 18, 54, 156, 420];
    let z = [6, 12, 54, 120, 390];
    let mut bad = Vec::new();
    let mut flagged = Vec::new();
    let mut ys = Vec::new();
    for r in 1..=5u32 {
        let family = SymmetryFamily::new(Kind::Pad, r).unwrap();
        let row = symmetry::census(&family, &budget()).unwrap();
        let i = r as usize - 1;
        if (row.n_q, row.x, row.z) != (n[i], x[i], z[i]) {
            bad.push(format!("r = {r}: N = {}, X = {}, Z = {}", row.n_q, row.x, row.z));
        }
        if row.y_conventions_differ() {
            flagged.push(r);
        }
        ys.push(format!("{}/{}", row.y_floor, row.y_round));
    }
    let flags_ok = flagged.contains(&1) && flagged.contains(&3);
    if !flags_ok {
        bad.push(format!("Y convention flags at r = {flagged:?}"));
    }
    outcome(
        bad.is_empty(),
        format!("N, X, Z exact; Y floor/round = {}; conventions differ at r = {flagged:?}; {}", ys.join(", "), diffs(&bad)),
    )
}

fn oracle_equivalence() -> Outcome {
    let system = DigitSystem::ternary();
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for q in 2..=3000u64 {
        if numtheory::ell(q).unwrap() > 16 {
            continue;
        }
        let a = enumerator::enumerate_by_algorithm1(q).unwrap();
        let b = enumerator::enumerate_by_words(q, &system, u64::MAX).unwrap();
        compared += 1;
        if a.numerators != b.numerators {
            mismatches.push(q);
        }
    }
    outcome(mismatches.is_empty(), format!("{compared} denominators compared; mismatches {mismatches:?}"))
}

fn property_suite(records: &RecordMap) -> Outcome {
    let mut bad = Vec::new();
    let (mut divisible, mut closed, mut vanish) = (0, 0, 0);
    for rec in records.values() {
        let q = rec.q;
        let nums = rec.numerators.as_deref().unwrap();
        let set: std::collections::BTreeSet<u64> = nums.iter().copied().collect();
        if nums.iter().any(|&p| !set.contains(&(q - p))) {
            bad.push(format!("reflection fails at q = {q}"));
        }
        if q % 3 != 0 {
            if nums.iter().any(|&p| !set.contains(&(3 * p % q))) {
                bad.push(format!("x3 closure fails at q = {q}"));
            }
            closed += 1;
            if rec.n_q > 0 {
                divisible += 1;
                if rec.n_q % rec.ell != 0 {
                    bad.push(format!("l does not divide N at q = {q}"));
                }
            }
            if !numtheory::divides_half_period(q, rec.ell) {
                vanish += 1;
                if rec.n_q != 0 {
                    bad.push(format!("parity rule fails at q = {q}"));
                }
            }
        }
    }
    let counter = Counter::new(records);
    let d = models::dimension();
    let mut lower = Vec::new();
    for ell in 5..=9u32 {
        let t = 3u64.pow(ell);
        let got = counter.n_tilde_star(t).unwrap();
        let bound = (t as f64).powf(d) / 2.0;
        lower.push(format!("{got}>={bound:.0}"));
        if (got as f64) < bound {
            bad.push(format!("N~*(3^{ell}) = {got} < {bound}"));
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "q <= {}: l | N on {divisible}, x3 closure on {closed}, parity zero on {vanish}; N~*(3^l) l = 5..9: {}; {}",
            records.keys().next_back().unwrap(),
            lower.join(" "),
            diffs(&bad[..bad.len().min(5)])
        ),
    )
}

fn figures_envelope(records: &RecordMap) -> Outcome {
    let c = 0.5;
    let grid = counting::geometric_grid(c, 1, 3u64.pow(9)).unwrap();
    let series = Predictor::new(records).series(&grid, c).unwrap();
    let mut outside = Vec::new();
    for row in &series.rows {
        let within = |x: u64| {
            let (x, n) = (x as f64, row.n_tilde as f64);
            x <= 3.0 * n && n <= 3.0 * x
        };
        if !(within(row.f) && within(row.m)) {
            outside.push(format!("T = {} (N~ {}, F {}, M {})", row.t, row.n_tilde, row.f, row.m));
        }
    }
    let mf = series.mean_ratio_f().unwrap_or(f64::NAN);
    let mm = series.mean_ratio_m().unwrap_or(f64::NAN);
    let means_ok = (0.6..=1.7).contains(&mf) && (0.6..=1.7).contains(&mm);
    let later: Vec<u64> = series
        .rows
        .iter()
        .filter(|r| r.t >= 11)
        .filter(|r| {
            let n = r.n_tilde as f64;
            [r.f, r.m].iter().any(|&x| (x as f64) > 3.0 * n || n > 3.0 * x as f64)
        })
        .map(|r| r.t)
        .collect();
    outcome(
        outside.is_empty() && means_ok,
        format!(
            "{} grid points; mean F/N~ = {mf:.4}, mean M/N~ = {mm:.4} ({}); outside factor 3: {}; from T = 11 on outside: {later:?}",
            series.rows.len(),
            if means_ok { "in [0.6, 1.7]" } else { "outside [0.6, 1.7]" },
            if outside.is_empty() { "none".into() } else { outside.join(", ") }
        ),
    )
}

fn simulation_calibration() -> Outcome {
    let trials = 100_000;
    let sim = models::simulate(&SimulationConfig {
        model: Model::Star,
        seed: 2024,
        trials,
        target: Target::Single(13),
        include_unit: true,
    })
    .unwrap();
    let mean = sim.sample_mean();
    let se = (sim.variance / trials as f64).sqrt();
    let z = (mean - 32.0 / 9.0) / se;
    let mut multiples = true;
    for target in [Target::Single(13), Target::Single(91), Target::Single(757), Target::Single(82)] {
        let Target::Single(q) = target else { unreachable!() };
        let ell = numtheory::ell(q).unwrap();
        let s = models::simulate(&SimulationConfig { model: Model::DoubleStar, seed: 7, trials: 2000, target, include_unit: true })
            .unwrap();
        multiples &= s.values.iter().all(|v| v % ell == 0);
    }
    let tail = models::tail_check(12, 0.5, 0.3, 20_000, 11).unwrap();
    let worst = tail
        .rows
        .iter()
        .map(|r| r.empirical - (r.markov + 3.0 * r.sigma))
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(
        z.abs() <= 4.0 && multiples && tail.passed(),
        format!(
            "q = 13 mean {mean:.4} vs 32/9 = {:.4} (z = {z:.2}); (**) multiples of l: {multiples}; tail check k <= 12: {} (max excess over bound {worst:.4})",
            32.0 / 9.0,
            if tail.passed() { "pass" } else { "fail" }
        ),
    )
}

fn growth_exponent(records: &RecordMap) -> Outcome {
    let counter = Counter::new(records);
    let d = models::dimension();
    let (lo, hi) = (3u64.pow(5), 3u64.pow(9));
    let mut ts: Vec<u64> = counting::geometric_grid(0.5, lo, hi).unwrap();
    ts.extend((5..=9).map(|k| 3u64.pow(k)));
    ts.sort_unstable();
    ts.dedup();
    let rows = counting::count_series(&counter, &ts, 0.5).unwrap();
    let exps = counting::growth_exponents(&rows);
    let (min, max) = exps.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, e)| (a.min(e), b.max(e)));
    outcome(
        exps.len() == ts.len() && min >= d - 0.1 && max <= d + 0.35,
        format!("{} thresholds in [3^5, 3^9]; log N~*/log T in [{min:.4}, {max:.4}], allowed [{:.4}, {:.4}]", exps.len(), d - 0.1, d + 0.35),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let records = store::enumerate_range(2, 3u64.pow(9), MethodChoice::Auto, &budget()).unwrap();
    let criteria: Vec<Check> = vec![
        ("table1", Box::new(table1)),
        ("table2", Box::new(table2)),
        ("table4", Box::new(table4)),
        ("table3", Box::new(table3)),
        ("table5", Box::new(table5)),
        ("oracle-equivalence", Box::new(oracle_equivalence)),
        ("property-suite", Box::new(|| property_suite(&records))),
        ("figures-envelope", Box::new(|| figures_envelope(&records))),
        ("simulation-calibration", Box::new(simulation_calibration)),
        ("growth-exponent", Box::new(|| growth_exponent(&records))),
    ];
    let mut unexpected = Vec::new();
    for (name, check) in &criteria {
        let t = Instant::now();
        let o = check();
        let expected_failure = EXPECTED_FAILURES.iter().find(|(n, _)| n == name);
        println!(
            "{} {name} [{:.1}s]: {}",
            if o.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            o.detail
        );
        match (o.pass, expected_failure) {
            (false, Some((_, why))) => println!("     expected failure: {why}"),
            (false, None) => unexpected.push(format!("{name} failed")),
            (true, Some(_)) => unexpected.push(format!("{name} passed but is listed as an expected failure")),
            (true, None) => {}
        }
    }
    println!("acceptance: {} criteria in {:.1}s", criteria.len(), start.elapsed().as_secs_f64());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected outcomes: {}", unexpected.join("; "));
        ExitCode::FAILURE
    }
}
