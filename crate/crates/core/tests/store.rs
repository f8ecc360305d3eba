use std::fs::{self, OpenOptions};
use std::io::Write;

use cantor_core::enumerator::{self, Budget, MethodChoice};
use cantor_core::store::{self, RecordFile, Store};
use cantor_core::{DigitSystem, Error};

fn budget() -> Budget {
    Budget::default()
}

#[test]
fn interrupted_scan_resumes_without_recomputing() {
    let dir = tempfile::tempdir().unwrap();
    let store = Store::open(dir.path(), &DigitSystem::ternary()).unwrap();
    let first = store.scan(2, 500, MethodChoice::Auto, &budget()).unwrap();
    assert_eq!(first.enumerated, 499);

    // simulate a crash mid-write in a later segment
    let seg = store.segment_path(501, 900);
    let file = RecordFile::create(&seg, &DigitSystem::ternary()).unwrap();
    for q in 501..=510 {
        file.append(&enumerator::enumerate(q, MethodChoice::Auto, &budget()).unwrap()).unwrap();
    }
    let mut f = OpenOptions::new().append(true).open(&seg).unwrap();
    f.write_all(b"{\"q\":511,\"ell\":").unwrap();
    drop(f);

    let (records, report) = store.ensure(2, 900, MethodChoice::Auto, &budget()).unwrap();
    assert_eq!(report.reused, 509);
    assert_eq!(report.enumerated, 390);
    assert_eq!(records.len(), 899);
    let fresh = store::enumerate_range(2, 900, MethodChoice::Auto, &budget()).unwrap();
    for (q, r) in &fresh {
        assert_eq!(records[q].n_q, r.n_q, "q = {q}");
    }
    // second pass does nothing
    assert_eq!(store.scan(2, 900, MethodChoice::Auto, &budget()).unwrap().enumerated, 0);
}

#[test]
fn merge_deduplicates_and_detects_conflicts() {
    let dir = tempfile::tempdir().unwrap();
    let sys = DigitSystem::ternary();
    let all = store::enumerate_range(2, 60, MethodChoice::Auto, &budget()).unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    store::write_file(&a, &sys, all.range(2..=40).map(|(_, r)| r)).unwrap();
    store::write_file(&b, &sys, all.range(30..=60).map(|(_, r)| r)).unwrap();
    let merged = store::merge(&a, &b, &dir.path().join("m.jsonl")).unwrap();
    assert_eq!(merged.load_all().unwrap(), all);

    let mut bad = all[&40].clone();
    bad.n_q += 40;
    bad.numerators = None;
    let text = fs::read_to_string(&b).unwrap();
    let good_line = serde_json::to_string(&all[&40]).unwrap();
    fs::write(&b, text.replace(&good_line, &serde_json::to_string(&bad).unwrap())).unwrap();
    let err = store::merge(&a, &b, &dir.path().join("m2.jsonl")).unwrap_err();
    assert!(matches!(err, Error::Integrity { .. }), "{err}");
    assert_eq!(err.exit_code(), 4);
    assert!(!dir.path().join("m2.jsonl").exists());
}

#[test]
fn corrupt_interior_line_is_an_integrity_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.jsonl");
    let records = store::enumerate_range(2, 5, MethodChoice::Auto, &budget()).unwrap();
    store::write_file(&path, &DigitSystem::ternary(), records.values()).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines[2] = "{garbage";
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let err = RecordFile::open(&path).unwrap().load_all().unwrap_err();
    assert!(matches!(err, Error::Integrity { .. }));
}

#[test]
fn wrong_system_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.jsonl");
    fs::write(&path, "{\"schema\":\"cantor-records\",\"version\":2,\"system\":\"b=3,F=0,2\"}\n").unwrap();
    assert!(matches!(RecordFile::open(&path).unwrap_err(), Error::Schema { .. }));
    let five = DigitSystem::new(5, [0, 2, 4]).unwrap();
    store::write_file(&path, &five, []).unwrap();
    assert!(matches!(RecordFile::create(&path, &DigitSystem::ternary()).unwrap_err(), Error::Schema { .. }));
}
