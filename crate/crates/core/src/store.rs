//! JSON-lines store of [`DenominatorRecord`]s.
//!
//! A record file starts with a header line naming the schema version and the
//! digit system, followed by one record per line in strictly increasing `q`.
//! Each record is written with a single `write` on a file opened in append
//! mode, so an interrupted writer leaves at most one torn trailing line, which
//! [`RecordFile::load`] discards. Files live under
//! `<root>/<system-tag>/records-<qmin>-<qmax>.jsonl`.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::digitsys::DigitSystem;
use crate::enumerator::{self, Budget, DenominatorRecord, MethodChoice};
use crate::error::{Error, Result};

pub const SCHEMA_NAME: &str = "cantor-records";
pub const SCHEMA_VERSION: u32 = 1;
/// Numerator lists are kept only up to this many entries.
pub const NUMERATOR_LIMIT: u64 = 10_000;
/// Environment variable overriding the store root.
pub const DATA_DIR_ENV: &str = "CANTOR_DATA_DIR";

/// Records keyed by denominator.
pub type RecordMap = BTreeMap<u64, DenominatorRecord>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Header {
    schema: String,
    version: u32,
    system: String,
}

impl Header {
    fn new(system: &DigitSystem) -> Self {
        Header {
            schema: SCHEMA_NAME.to_string(),
            version: SCHEMA_VERSION,
            system: system.to_string(),
        }
    }

    fn check(&self, path: &Path) -> Result<DigitSystem> {
        if self.schema != SCHEMA_NAME || self.version != SCHEMA_VERSION {
            return Err(Error::Schema {
                expected: format!("{SCHEMA_NAME} v{SCHEMA_VERSION}"),
                found: format!("{} v{} in {}", self.schema, self.version, path.display()),
            });
        }
        self.system.parse()
    }
}

/// Drop the numerator list of large records before they are written.
pub fn trim_for_storage(mut record: DenominatorRecord) -> DenominatorRecord {
    if record.n_q > NUMERATOR_LIMIT {
        record.numerators = None;
    }
    record
}

/// One record file on disk.
#[derive(Debug, Clone)]
pub struct RecordFile {
    path: PathBuf,
    system: DigitSystem,
}

impl RecordFile {
    /// Open an existing file, or create it with a header.
    pub fn create(path: impl Into<PathBuf>, system: &DigitSystem) -> Result<Self> {
        let path = path.into();
        if path.exists() {
            let file = RecordFile::open(&path)?;
            if &file.system != system {
                return Err(Error::Schema {
                    expected: system.to_string(),
                    found: format!("{} in {}", file.system, path.display()),
                });
            }
            return Ok(file);
        }
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut line = serde_json::to_string(&Header::new(system))?;
        line.push('\n');
        let mut f = OpenOptions::new().write(true).create_new(true).open(&path)?;
        f.write_all(line.as_bytes())?;
        f.sync_all()?;
        Ok(RecordFile { path, system: system.clone() })
    }

    /// Open an existing file and read its header.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut reader = BufReader::new(File::open(&path)?);
        let mut first = String::new();
        reader.read_line(&mut first)?;
        let header: Header = serde_json::from_str(first.trim_end()).map_err(|e| Error::Integrity {
            path: path.clone(),
            detail: format!("bad header: {e}"),
        })?;
        let system = header.check(&path)?;
        Ok(RecordFile { path, system })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn system(&self) -> &DigitSystem {
        &self.system
    }

    /// Take the writer lock. Fails immediately if another writer holds it.
    pub fn writer(&self) -> Result<RecordWriter> {
        let file = OpenOptions::new().append(true).open(&self.path)?;
        match file.try_lock() {
            Ok(()) => {}
            Err(std::fs::TryLockError::WouldBlock) => {
                return Err(Error::Integrity {
                    path: self.path.clone(),
                    detail: "another writer holds the lock".into(),
                })
            }
            Err(std::fs::TryLockError::Error(e)) => return Err(e.into()),
        }
        let last_q = self.load_all()?.keys().next_back().copied();
        Ok(RecordWriter { file, path: self.path.clone(), last_q })
    }

    /// Append one record, taking and releasing the writer lock.
    pub fn append(&self, record: &DenominatorRecord) -> Result<()> {
        self.writer()?.append(record)
    }

    pub fn load_all(&self) -> Result<RecordMap> {
        self.load(0..=u64::MAX)
    }

    /// Records with `q` in `range`. A torn final line is ignored.
    pub fn load(&self, range: RangeInclusive<u64>) -> Result<RecordMap> {
        let text = fs::read_to_string(&self.path)?;
        let complete = text.ends_with('\n');
        let lines: Vec<&str> = text.lines().collect();
        let integrity = |detail: String| Error::Integrity { path: self.path.clone(), detail };
        let mut out = RecordMap::new();
        let mut last_q = None;
        for (i, line) in lines.iter().enumerate().skip(1) {
            let is_tail = i + 1 == lines.len();
            let record: DenominatorRecord = match serde_json::from_str(line) {
                Ok(r) => r,
                Err(_) if is_tail && !complete => break,
                Err(e) => return Err(integrity(format!("line {}: {e}", i + 1))),
            };
            if is_tail && !complete {
                // a parseable line without its newline is still an unfinished write
                break;
            }
            record
                .validate()
                .map_err(|e| integrity(format!("line {}: {e}", i + 1)))?;
            if last_q.is_some_and(|prev| record.q <= prev) {
                return Err(integrity(format!("line {}: q = {} out of order", i + 1, record.q)));
            }
            last_q = Some(record.q);
            if range.contains(&record.q) {
                out.insert(record.q, record);
            }
        }
        Ok(out)
    }
}

/// Exclusive appender for a [`RecordFile`]; the lock is released on drop.
#[derive(Debug)]
pub struct RecordWriter {
    file: File,
    path: PathBuf,
    last_q: Option<u64>,
}

impl RecordWriter {
    pub fn append(&mut self, record: &DenominatorRecord) -> Result<()> {
        if self.last_q.is_some_and(|prev| record.q <= prev) {
            return Err(Error::Integrity {
                path: self.path.clone(),
                detail: format!("append of q = {} after q = {}", record.q, self.last_q.unwrap_or(0)),
            });
        }
        record.validate().map_err(|detail| Error::Integrity { path: self.path.clone(), detail })?;
        let mut line = serde_json::to_string(&trim_for_storage(record.clone()))?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.last_q = Some(record.q);
        Ok(())
    }

    pub fn sync(&self) -> Result<()> {
        self.file.sync_data()?;
        Ok(())
    }
}

/// Combine two record maps, failing on any `q` whose counts disagree.
fn union_into(target: &mut RecordMap, other: RecordMap, path: &Path) -> Result<()> {
    for (q, record) in other {
        match target.get(&q) {
            Some(existing) if existing.n_q != record.n_q => {
                return Err(Error::Integrity {
                    path: path.to_path_buf(),
                    detail: format!("conflicting records for q = {q}: n_q = {} vs {}", existing.n_q, record.n_q),
                });
            }
            Some(_) => {}
            None => {
                target.insert(q, record);
            }
        }
    }
    Ok(())
}

/// Merge two files into `out`, deduplicating by `q`.
///
/// The output is written to a temporary sibling and renamed into place.
pub fn merge(a: &Path, b: &Path, out: &Path) -> Result<RecordFile> {
    let fa = RecordFile::open(a)?;
    let fb = RecordFile::open(b)?;
    if fa.system != fb.system {
        return Err(Error::Schema {
            expected: fa.system.to_string(),
            found: format!("{} in {}", fb.system, b.display()),
        });
    }
    let mut all = fa.load_all()?;
    union_into(&mut all, fb.load_all()?, b)?;
    write_file(out, &fa.system, all.values())
}

/// Write a complete record file atomically.
pub fn write_file<'a>(
    out: &Path,
    system: &DigitSystem,
    records: impl IntoIterator<Item = &'a DenominatorRecord>,
) -> Result<RecordFile> {
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = out.with_extension("jsonl.tmp");
    {
        let mut f = File::create(&tmp)?;
        let mut buf = serde_json::to_string(&Header::new(system))?;
        buf.push('\n');
        for r in records {
            buf.push_str(&serde_json::to_string(&trim_for_storage(r.clone()))?);
            buf.push('\n');
        }
        f.write_all(buf.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, out)?;
    RecordFile::open(out)
}

/// Write `q,ell,phi,n_q,mlo` rows; `mlo` is empty where undefined.
pub fn export_csv<'a, W: Write>(
    records: impl IntoIterator<Item = &'a DenominatorRecord>,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "ell", "phi", "n_q", "mlo"])?;
    for r in records {
        w.write_record([
            r.q.to_string(),
            r.ell.to_string(),
            r.phi.to_string(),
            r.n_q.to_string(),
            r.mlo.map(|m| m.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Outcome of [`Store::scan`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanReport {
    pub enumerated: u64,
    pub reused: u64,
}

/// A directory of record files for one digit system.
#[derive(Debug, Clone)]
pub struct Store {
    dir: PathBuf,
    system: DigitSystem,
}

impl Store {
    /// Store rooted at `root`, using the subdirectory for `system`.
    pub fn open(root: impl AsRef<Path>, system: &DigitSystem) -> Result<Self> {
        let dir = root.as_ref().join(system.tag());
        fs::create_dir_all(&dir)?;
        Ok(Store { dir, system: system.clone() })
    }

    /// Root from `CANTOR_DATA_DIR`, else `fallback`.
    pub fn default_root(fallback: impl AsRef<Path>) -> PathBuf {
        std::env::var_os(DATA_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| fallback.as_ref().to_path_buf())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn segment_path(&self, qmin: u64, qmax: u64) -> PathBuf {
        self.dir.join(format!("records-{qmin}-{qmax}.jsonl"))
    }

    /// All record files in the store, sorted by name.
    pub fn files(&self) -> Result<Vec<PathBuf>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if name.starts_with("records-") && name.ends_with(".jsonl") {
                out.push(path);
            }
        }
        out.sort();
        Ok(out)
    }

    /// Every stored record with `q` in `range`, across files.
    pub fn load(&self, range: RangeInclusive<u64>) -> Result<RecordMap> {
        let mut all = RecordMap::new();
        for path in self.files()? {
            let file = RecordFile::open(&path)?;
            if file.system != self.system {
                return Err(Error::Schema {
                    expected: self.system.to_string(),
                    found: format!("{} in {}", file.system, path.display()),
                });
            }
            union_into(&mut all, file.load(range.clone())?, &path)?;
        }
        Ok(all)
    }

    /// Make sure every `q` in `lo..=hi` (from 2 up) is stored, enumerating only
    /// the missing ones. New records go to `records-<first missing>-<hi>.jsonl`
    /// in increasing `q`, flushed chunk by chunk so an interrupted scan resumes.
    pub fn scan(&self, lo: u64, hi: u64, choice: MethodChoice, budget: &Budget) -> Result<ScanReport> {
        if !self.system.is_ternary_cantor() {
            return Err(Error::Unsupported(format!(
                "scans run the ternary enumerator, store is {}",
                self.system
            )));
        }
        let lo = lo.max(2);
        if lo > hi {
            return Ok(ScanReport::default());
        }
        let have = self.load(lo..=hi)?;
        let missing: Vec<u64> = (lo..=hi).filter(|q| !have.contains_key(q)).collect();
        let mut report = ScanReport { enumerated: 0, reused: have.len() as u64 };
        let Some(&first) = missing.first() else {
            return Ok(report);
        };
        let file = RecordFile::create(self.segment_path(first, hi), &self.system)?;
        let mut writer = file.writer()?;
        const CHUNK: usize = 4096;
        for chunk in missing.chunks(CHUNK) {
            let records = enumerator::enumerate_many(chunk, choice, budget)?;
            for r in &records {
                writer.append(r)?;
            }
            writer.sync()?;
            report.enumerated += records.len() as u64;
        }
        Ok(report)
    }

    /// Scan then load, the common path for callers that need complete coverage.
    pub fn ensure(&self, lo: u64, hi: u64, choice: MethodChoice, budget: &Budget) -> Result<(RecordMap, ScanReport)> {
        let report = self.scan(lo, hi, choice, budget)?;
        Ok((self.load(lo..=hi)?, report))
    }
}

/// Enumerate `2..=hi` in memory without touching disk.
pub fn enumerate_range(lo: u64, hi: u64, choice: MethodChoice, budget: &Budget) -> Result<RecordMap> {
    let qs: Vec<u64> = (lo.max(2)..=hi).collect();
    Ok(enumerator::enumerate_many(&qs, choice, budget)?
        .into_iter()
        .map(|r| (r.q, r))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerator::enumerate_by_algorithm1;

    fn rec(q: u64) -> DenominatorRecord {
        enumerate_by_algorithm1(q).unwrap()
    }

    #[test]
    fn header_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let f = RecordFile::create(&path, &DigitSystem::ternary()).unwrap();
        let text = fs::read_to_string(f.path()).unwrap();
        assert_eq!(text, "{\"schema\":\"cantor-records\",\"version\":1,\"system\":\"b=3,F=0,2\"}\n");
        assert_eq!(RecordFile::open(&path).unwrap().system(), &DigitSystem::ternary());
    }

    #[test]
    fn large_records_drop_numerators() {
        let mut r = rec(13);
        r.n_q = NUMERATOR_LIMIT + 1;
        assert!(trim_for_storage(r).numerators.is_none());
        assert!(trim_for_storage(rec(13)).numerators.is_some());
    }

    #[test]
    fn second_writer_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let f = RecordFile::create(dir.path().join("r.jsonl"), &DigitSystem::ternary()).unwrap();
        let _w = f.writer().unwrap();
        assert!(matches!(f.writer(), Err(Error::Integrity { .. })));
    }

    #[test]
    fn out_of_order_append_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let f = RecordFile::create(dir.path().join("r.jsonl"), &DigitSystem::ternary()).unwrap();
        f.append(&rec(13)).unwrap();
        assert!(matches!(f.append(&rec(10)), Err(Error::Integrity { .. })));
    }

    #[test]
    fn csv_columns() {
        let mut out = Vec::new();
        export_csv([&rec(13), &rec(9)], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "q,ell,phi,n_q,mlo\n13,3,12,6,6\n9,1,6,4,\n");
    }
}
