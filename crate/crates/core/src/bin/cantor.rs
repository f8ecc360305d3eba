use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cantor_core::counting::{self, Counter, GridKind, Window};
use cantor_core::enumerator::{self, Budget, DenominatorRecord, MethodChoice};
use cantor_core::manifest::ManifestBuilder;
use cantor_core::models::{self, Model, Predictor, SimulationConfig, Target};
use cantor_core::store::{self, RecordMap, Store};
use cantor_core::symmetry::{self, Kind, SymmetryFamily};
use cantor_core::{tables, DigitSystem, Error, Result};

/// Exit code for a table reproduction with unexplained differences.
const EXIT_TABLE_MISMATCH: u8 = 5;

#[derive(Parser, Debug)]
#[command(name = "cantor", version, about = "Rational points on the middle-thirds Cantor set")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write CSV here (plus `<out>.manifest.json`) instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Record store root; `CANTOR_DATA_DIR` is used when absent.
    #[arg(long, global = true)]
    store: Option<PathBuf>,

    #[command(flatten)]
    budget: BudgetArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct BudgetArgs {
    /// Most words the word oracle may generate per denominator.
    #[arg(long, global = true, default_value_t = enumerator::DEFAULT_WORD_BUDGET)]
    max_words: u64,

    /// Largest denominator Algorithm 1 may scan.
    #[arg(long, global = true, default_value_t = enumerator::DEFAULT_ALGORITHM1_LIMIT)]
    max_alg1_q: u64,
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        Budget { max_words: self.max_words, max_algorithm1_q: self.max_alg1_q }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate Cantor rationals by denominator and persist the records.
    Enumerate {
        #[arg(long, conflicts_with = "q_range", required_unless_present = "q_range")]
        q: Option<u64>,
        /// Inclusive range `a..b`.
        #[arg(long, value_parser = parse_range)]
        q_range: Option<(u64, u64)>,
        #[arg(long, default_value = "auto")]
        method: MethodChoice,
        /// Do not write records to the store.
        #[arg(long)]
        no_store: bool,
        /// Emit `q,p` numerator rows instead of summaries.
        #[arg(long)]
        numerators: bool,
    },
    /// Window and cumulative counts along a threshold grid.
    Count {
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Heuristic predictions F(T), M(T) against the true count.
    Predict {
        #[command(flatten)]
        series: SeriesArgs,
    },
    /// Sample a heuristic model.
    Simulate {
        #[arg(long)]
        model: Model,
        #[arg(long, conflicts_with = "window", required_unless_present = "window")]
        q: Option<u64>,
        /// Threshold `T` of the window `((1-c)T, T]`.
        #[arg(long)]
        window: Option<u64>,
        #[arg(long, default_value_t = 0.5)]
        c: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        exclude_unit: bool,
    },
    /// Compare simulated tail probabilities with their Markov bounds.
    Tailcheck {
        #[arg(long, allow_negative_numbers = true)]
        eps: f64,
        #[arg(long, default_value_t = 0.5)]
        c: f64,
        #[arg(long, default_value_t = 12)]
        k_max: u32,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Records of l_hat(q) / log3 q.
    Bourgain {
        #[arg(long)]
        q_max: u64,
    },
    /// Symmetry families: `pad` gives the census, `bar` the (3/2)^r correction.
    Symmetry {
        #[arg(long)]
        kind: Kind,
        #[arg(long, default_value_t = 1)]
        r_min: u32,
        #[arg(long)]
        r_max: u32,
    },
    /// Recompute a bundled table and diff it against the expected values.
    Tables {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
        which: u8,
    },
}

#[derive(Args, Debug)]
struct SeriesArgs {
    #[arg(long, default_value_t = 0.5)]
    c: f64,
    #[arg(long)]
    t_max: u64,
    #[arg(long, default_value_t = 1)]
    t_min: u64,
    #[arg(long, default_value = "geometric")]
    grid: GridKind,
    /// Step of the linear grid.
    #[arg(long, default_value_t = 1)]
    step: u64,
    #[arg(long)]
    exclude_unit: bool,
    #[arg(long, default_value = "auto")]
    method: MethodChoice,
}

fn parse_range(s: &str) -> std::result::Result<(u64, u64), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected a..b, got {s:?}"))?;
    let a: u64 = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if a > b {
        return Err(format!("empty range {a}..{b}"));
    }
    Ok((a, b))
}

/// Output buffered in memory so nothing is written unless the command succeeds.
struct Output {
    csv: Vec<u8>,
    manifest: ManifestBuilder,
    inputs: Vec<PathBuf>,
    code: u8,
}

impl Output {
    fn new(command: &str) -> Self {
        Output {
            csv: Vec::new(),
            manifest: ManifestBuilder::new(command, std::env::args().skip(1).collect()),
            inputs: Vec::new(),
            code: 0,
        }
    }

    fn seed(mut self, seed: u64) -> Self {
        self.manifest = self.manifest.seed(seed);
        self
    }

    fn emit(mut self, out: Option<&Path>) -> Result<u8> {
        match out {
            None => std::io::stdout().write_all(&self.csv)?,
            Some(path) => {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir)?;
                }
                fs::write(path, &self.csv)?;
                for input in &self.inputs {
                    self.manifest.input(input)?;
                }
                self.manifest.output(path);
                self.manifest.finish().write_for(path)?;
            }
        }
        Ok(self.code)
    }
}

fn store_root(flag: Option<&Path>) -> Option<PathBuf> {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(store::DATA_DIR_ENV).map(PathBuf::from))
}

/// Records for `2..=hi`, from the store when one is configured.
fn records_up_to(hi: u64, root: Option<&Path>, choice: MethodChoice, budget: &Budget, out: &mut Output) -> Result<RecordMap> {
    match root {
        Some(root) => {
            let store = Store::open(root, &DigitSystem::ternary())?;
            let (records, report) = store.ensure(2, hi, choice, budget)?;
            eprintln!("store {}: reused {}, enumerated {}", store.dir().display(), report.reused, report.enumerated);
            out.inputs.extend(store.files()?);
            Ok(records)
        }
        None => store::enumerate_range(2, hi, choice, budget),
    }
}

fn series_grid(s: &SeriesArgs) -> Result<Vec<u64>> {
    counting::grid(s.grid, s.c, s.t_min, s.t_max, s.step)
}

fn run(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Domain(format!("--threads {n}: {e}")))?;
    }
    let budget = cli.budget.budget();
    let root = store_root(cli.store.as_deref());
    let out_path = cli.out.as_deref();

    let out = match cli.command {
        Command::Enumerate { q, q_range, method, no_store, numerators } => {
            let mut out = Output::new("enumerate");
            let (lo, hi) = q_range.unwrap_or_else(|| {
                let q = q.unwrap_or(1);
                (q, q)
            });
            if lo <= 1 {
                eprintln!("q = 1 is not enumerated: its rationals 0/1 and 1/1 give N_1 = {}", counting::UNIT_COUNT);
            }
            let lo = lo.max(2);
            let records: Vec<DenominatorRecord> = if no_store {
                let qs: Vec<u64> = (lo..=hi).collect();
                enumerator::enumerate_many(&qs, method, &budget)?
            } else {
                let root = root.unwrap_or_else(|| Store::default_root("cantor-data"));
                let store = Store::open(&root, &DigitSystem::ternary())?;
                let report = store.scan(lo, hi, method, &budget)?;
                eprintln!("store {}: reused {}, enumerated {}", store.dir().display(), report.reused, report.enumerated);
                let stored = store.load(lo..=hi)?;
                if numerators {
                    // Stored records may be trimmed; recompute the lists.
                    let qs: Vec<u64> = stored.keys().copied().collect();
                    enumerator::enumerate_many(&qs, method, &budget)?
                } else {
                    stored.into_values().collect()
                }
            };
            if numerators {
                let mut w = csv::Writer::from_writer(&mut out.csv);
                w.write_record(["q", "p"])?;
                for r in &records {
                    for x in r.rationals() {
                        w.write_record([x.q.to_string(), x.p.to_string()])?;
                    }
                }
                w.flush()?;
            } else {
                write_records(&records, &mut out.csv)?;
            }
            out
        }
        Command::Count { series } => {
            let mut out = Output::new("count");
            let grid = series_grid(&series)?;
            let records = records_up_to(series.t_max, root.as_deref(), series.method, &budget, &mut out)?;
            let counter = Counter::new(&records).exclude_unit(series.exclude_unit);
            let rows = counting::count_series(&counter, &grid, series.c)?;
            counting::write_count_csv(&rows, &mut out.csv)?;
            out
        }
        Command::Predict { series } => {
            let mut out = Output::new("predict");
            let grid = series_grid(&series)?;
            let records = records_up_to(series.t_max, root.as_deref(), series.method, &budget, &mut out)?;
            let s = Predictor::new(&records).exclude_unit(series.exclude_unit).series(&grid, series.c)?;
            s.write_csv(&mut out.csv)?;
            let fmt = |x: Option<f64>| x.map_or("undefined".to_string(), |v| format!("{v:.4}"));
            eprintln!("mean M/N~ = {}, mean F/N~ = {}", fmt(s.mean_ratio_m()), fmt(s.mean_ratio_f()));
            out
        }
        Command::Simulate { model, q, window, c, trials, seed, exclude_unit } => {
            let mut out = Output::new("simulate").seed(seed);
            let target = match (q, window) {
                (Some(q), _) => Target::Single(q),
                (None, Some(t)) => Target::Window(Window::new(t, c)?),
                (None, None) => unreachable!("clap requires --q or --window"),
            };
            let sim = models::simulate(&SimulationConfig { model, seed, trials, target, include_unit: !exclude_unit })?;
            eprintln!(
                "sample mean {:.6}, model mean {:.6}, model variance {:.6}",
                sim.sample_mean(),
                sim.mean,
                sim.variance
            );
            sim.write_csv(&mut out.csv)?;
            out
        }
        Command::Tailcheck { eps, c, k_max, trials, seed } => {
            let mut out = Output::new("tailcheck").seed(seed);
            let check = models::tail_check(k_max, c, eps, trials, seed)?;
            match &check.skipped {
                Some(reason) => eprintln!("tail check skipped: {reason}"),
                None => eprintln!("tail check {}", if check.passed() { "passed" } else { "FAILED" }),
            }
            check.write_csv(&mut out.csv)?;
            out
        }
        Command::Bourgain { q_max } => {
            let mut out = Output::new("bourgain");
            let scan = counting::ell_hat_scan(q_max, &budget)?;
            if !scan.complete {
                return Err(Error::Budget(format!(
                    "scan stopped at q = {} before --q-max {q_max}; raise --max-alg1-q",
                    scan.scanned_to
                )));
            }
            counting::write_ell_hat_csv(&scan.records, &mut out.csv)?;
            out
        }
        Command::Symmetry { kind, r_min, r_max } => {
            let mut out = Output::new("symmetry");
            if r_min == 0 || r_min > r_max {
                return Err(Error::Domain(format!("need 1 <= r-min <= r-max, got {r_min}..{r_max}")));
            }
            match kind {
                Kind::Bar => {
                    let rows = (r_min..=r_max)
                        .map(|r| symmetry::corrected_prediction(r, &budget))
                        .collect::<Result<Vec<_>>>()?;
                    symmetry::write_correction_csv(&rows, &mut out.csv)?;
                }
                kind => {
                    let rows = (r_min..=r_max)
                        .map(|r| {
                            let family = SymmetryFamily::new(kind, r)?;
                            let n_q = tables::enumerate_cheapest(family.target_q(), &budget)?.n_q;
                            symmetry::census_with(&family, n_q)
                        })
                        .collect::<Result<Vec<_>>>()?;
                    for row in rows.iter().filter(|r| r.y_conventions_differ()) {
                        eprintln!("r = {}: Y differs by convention (floor {}, round {})", row.r, row.y_floor, row.y_round);
                    }
                    symmetry::write_census_csv(&rows, &mut out.csv)?;
                }
            }
            out
        }
        Command::Tables { which } => {
            let mut out = Output::new("tables");
            let report = tables::reproduce(which, &budget)?;
            out.csv = report.computed.to_csv()?.into_bytes();
            for m in &report.mismatches {
                let label = m.known.map_or("UNEXPLAINED".to_string(), |k| format!("known: {k}"));
                eprintln!("row {} column {}: expected {}, got {} ({label})", m.key, m.column, m.expected, m.found);
            }
            let unexplained = report.unexplained().len();
            eprintln!(
                "table {which}: {} mismatches, {unexplained} unexplained",
                report.mismatches.len()
            );
            if unexplained > 0 {
                out.code = EXIT_TABLE_MISMATCH;
            }
            out
        }
    };
    out.emit(out_path)
}

fn write_records(records: &[DenominatorRecord], buf: &mut Vec<u8>) -> Result<()> {
    let mut w = csv::Writer::from_writer(buf);
    w.write_record(["q", "ell", "phi", "n_q", "mlo", "method"])?;
    for r in records {
        w.write_record([
            r.q.to_string(),
            r.ell.to_string(),
            r.phi.to_string(),
            r.n_q.to_string(),
            r.mlo.map(|m| m.to_string()).unwrap_or_default(),
            r.method.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("cantor: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
