//! C ABI over `cantor-core`.
//!
//! Every fallible function returns a [`CantorStatus`]; on failure the message
//! is available from [`cantor_last_error`] on the same thread. Objects are
//! opaque handles released with their `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cantor_core::counting::{Counter, Window};
use cantor_core::enumerator::{self, Budget, DenominatorRecord, MethodChoice};
use cantor_core::models::{self, Model, SimulationConfig, Target};
use cantor_core::numtheory;
use cantor_core::store::{RecordMap, Store};
use cantor_core::{DigitSystem, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CantorStatus {
    Ok = 0,
    /// A required pointer argument was null or a string was not UTF-8.
    InvalidArgument = 1,
    Domain = 2,
    Budget = 3,
    Integrity = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CantorMethod {
    Auto = 0,
    Algorithm1 = 1,
    Words = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CantorModel {
    Star = 0,
    DoubleStar = 1,
}

/// Counts for one threshold `T` and window fraction `c`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CantorCounts {
    pub n_tilde: u64,
    pub n: u64,
    pub n_tilde_star: u64,
    pub n_star: u64,
}

/// Enumeration result for one denominator.
pub struct CantorRecord {
    inner: DenominatorRecord,
}

/// Record store opened on a directory.
pub struct CantorStore {
    inner: Store,
    budget: Budget,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> CantorStatus {
    match e {
        Error::Domain(_) | Error::Unsupported(_) | Error::Coverage { .. } => CantorStatus::Domain,
        Error::Budget(_) => CantorStatus::Budget,
        Error::Integrity { .. } | Error::Schema { .. } => CantorStatus::Integrity,
        _ => CantorStatus::Io,
    }
}

/// Run `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), CantorStatusError>) -> CantorStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CantorStatus::Ok,
        Ok(Err(CantorStatusError::Core(e))) => {
            let status = status_of(&e);
            set_error(e.to_string());
            status
        }
        Ok(Err(CantorStatusError::Argument(msg))) => {
            set_error(msg.to_string());
            CantorStatus::InvalidArgument
        }
        Err(_) => {
            set_error("internal panic".into());
            CantorStatus::Panic
        }
    }
}

enum CantorStatusError {
    Core(Error),
    Argument(&'static str),
}

impl From<Error> for CantorStatusError {
    fn from(e: Error) -> Self {
        CantorStatusError::Core(e)
    }
}

fn non_null<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, CantorStatusError> {
    // SAFETY: callers pass either null or a valid, exclusive pointer.
    unsafe { p.as_mut() }.ok_or(CantorStatusError::Argument(what))
}

fn non_null_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, CantorStatusError> {
    // SAFETY: callers pass either null or a valid pointer.
    unsafe { p.as_ref() }.ok_or(CantorStatusError::Argument(what))
}

fn method_choice(m: CantorMethod) -> MethodChoice {
    match m {
        CantorMethod::Auto => MethodChoice::Auto,
        CantorMethod::Algorithm1 => MethodChoice::Algorithm1,
        CantorMethod::Words => MethodChoice::Words,
    }
}

/// Message for the last failed call on this thread. Valid until the next
/// failing call on the same thread; empty if nothing failed yet.
#[no_mangle]
pub extern "C" fn cantor_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cantor_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Period length `l(q)` of base-3 expansions with denominator `q`.
///
/// # Safety
/// `out` must be null or point to writable memory for one `uint64_t`.
#[no_mangle]
pub unsafe extern "C" fn cantor_ell(q: u64, out: *mut u64) -> CantorStatus {
    guard(|| {
        *non_null(out, "out is null")? = numtheory::ell(q)?;
        Ok(())
    })
}

/// Euler's totient.
///
/// # Safety
/// `out` must be null or point to writable memory for one `uint64_t`.
#[no_mangle]
pub unsafe extern "C" fn cantor_phi(q: u64, out: *mut u64) -> CantorStatus {
    guard(|| {
        *non_null(out, "out is null")? = numtheory::euler_phi(q)?;
        Ok(())
    })
}

/// Most likely outcome `MLO(q)`; `q` must not be divisible by 3.
///
/// # Safety
/// `out` must be null or point to writable memory for one `uint64_t`.
#[no_mangle]
pub unsafe extern "C" fn cantor_mlo(q: u64, out: *mut u64) -> CantorStatus {
    guard(|| {
        let slot = non_null(out, "out is null")?;
        if q.is_multiple_of(3) {
            return Err(Error::Domain(format!("MLO undefined for q = {q} divisible by 3")).into());
        }
        *slot = numtheory::mlo(q)?;
        Ok(())
    })
}

/// Enumerate the Cantor rationals with denominator `q >= 2` using the default budget.
///
/// # Safety
/// `out` must be null or point to writable memory for one pointer. On success
/// it receives a handle to release with [`cantor_record_free`].
#[no_mangle]
pub unsafe extern "C" fn cantor_enumerate(q: u64, method: CantorMethod, out: *mut *mut CantorRecord) -> CantorStatus {
    cantor_enumerate_with_budget(q, method, enumerator::DEFAULT_WORD_BUDGET, enumerator::DEFAULT_ALGORITHM1_LIMIT, out)
}

/// [`cantor_enumerate`] with explicit limits.
///
/// # Safety
/// As for [`cantor_enumerate`].
#[no_mangle]
pub unsafe extern "C" fn cantor_enumerate_with_budget(
    q: u64,
    method: CantorMethod,
    max_words: u64,
    max_algorithm1_q: u64,
    out: *mut *mut CantorRecord,
) -> CantorStatus {
    guard(|| {
        let slot = non_null(out, "out is null")?;
        *slot = ptr::null_mut();
        let budget = Budget { max_words, max_algorithm1_q };
        let inner = enumerator::enumerate(q, method_choice(method), &budget)?;
        *slot = Box::into_raw(Box::new(CantorRecord { inner }));
        Ok(())
    })
}

/// # Safety
/// `record` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cantor_record_free(record: *mut CantorRecord) {
    if !record.is_null() {
        drop(Box::from_raw(record));
    }
}

/// # Safety
/// `record` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cantor_record_q(record: *const CantorRecord) -> u64 {
    (*record).inner.q
}

/// # Safety
/// `record` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cantor_record_ell(record: *const CantorRecord) -> u64 {
    (*record).inner.ell
}

/// # Safety
/// `record` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cantor_record_phi(record: *const CantorRecord) -> u64 {
    (*record).inner.phi
}

/// Number of Cantor rationals `N_q`.
///
/// # Safety
/// `record` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cantor_record_n_q(record: *const CantorRecord) -> u64 {
    (*record).inner.n_q
}

/// Writes `MLO(q)` and returns true, or returns false when `3 | q`.
///
/// # Safety
/// `record` must be a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cantor_record_mlo(record: *const CantorRecord, out: *mut u64) -> bool {
    match ((*record).inner.mlo, out.as_mut()) {
        (Some(m), Some(slot)) => {
            *slot = m;
            true
        }
        (Some(_), None) => true,
        (None, _) => false,
    }
}

/// Sorted numerators, borrowed from the record. `*len` receives the count.
/// Returns null if the record carries no numerator list.
///
/// # Safety
/// `record` must be a live handle and `len` writable. The returned pointer is
/// valid until the record is freed.
#[no_mangle]
pub unsafe extern "C" fn cantor_record_numerators(record: *const CantorRecord, len: *mut usize) -> *const u64 {
    let nums = (*record).inner.numerators.as_deref();
    if let Some(slot) = len.as_mut() {
        *slot = nums.map_or(0, <[u64]>::len);
    }
    nums.map_or(ptr::null(), <[u64]>::as_ptr)
}

/// Open (creating if needed) the ternary record store rooted at `root`.
///
/// # Safety
/// `root` must be a NUL-terminated UTF-8 path; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cantor_store_open(root: *const c_char, out: *mut *mut CantorStore) -> CantorStatus {
    guard(|| {
        let slot = non_null(out, "out is null")?;
        *slot = ptr::null_mut();
        let root = non_null_ref(root, "root is null")?;
        let root = CStr::from_ptr(root)
            .to_str()
            .map_err(|_| CantorStatusError::Argument("root is not UTF-8"))?;
        let inner = Store::open(root, &DigitSystem::ternary())?;
        *slot = Box::into_raw(Box::new(CantorStore { inner, budget: Budget::default() }));
        Ok(())
    })
}

/// # Safety
/// `store` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cantor_store_free(store: *mut CantorStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Enumerate and persist every missing `q` in `lo..=hi`.
///
/// # Safety
/// `store` must be a live handle; `enumerated` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn cantor_store_scan(store: *mut CantorStore, lo: u64, hi: u64, enumerated: *mut u64) -> CantorStatus {
    guard(|| {
        let store = non_null(store, "store is null")?;
        let report = store.inner.scan(lo, hi, MethodChoice::Auto, &store.budget)?;
        if let Some(slot) = enumerated.as_mut() {
            *slot = report.enumerated;
        }
        Ok(())
    })
}

/// Counts at threshold `t` with window fraction `c`, from stored records
/// (scanning whatever is missing first).
///
/// # Safety
/// `store` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cantor_store_counts(
    store: *mut CantorStore,
    t: u64,
    c: f64,
    include_unit: bool,
    out: *mut CantorCounts,
) -> CantorStatus {
    guard(|| {
        let store = non_null(store, "store is null")?;
        let slot = non_null(out, "out is null")?;
        let (records, _): (RecordMap, _) = store.inner.ensure(2, t, MethodChoice::Auto, &store.budget)?;
        let counter = Counter::new(&records).exclude_unit(!include_unit);
        let w = Window::new(t, c)?;
        *slot = CantorCounts {
            n_tilde: counter.n_tilde(&w)?,
            n: counter.n(&w)?,
            n_tilde_star: counter.n_tilde_star(t)?,
            n_star: counter.n_star(t)?,
        };
        Ok(())
    })
}

/// Draw `trials` samples of the model count for denominator `q` into `values`.
///
/// # Safety
/// `values` must point to writable memory for `trials` `uint64_t`s.
#[no_mangle]
pub unsafe extern "C" fn cantor_simulate(
    model: CantorModel,
    q: u64,
    trials: u64,
    seed: u64,
    values: *mut u64,
) -> CantorStatus {
    guard(|| {
        if values.is_null() {
            return Err(CantorStatusError::Argument("values is null"));
        }
        let model = match model {
            CantorModel::Star => Model::Star,
            CantorModel::DoubleStar => Model::DoubleStar,
        };
        let sim = models::simulate(&SimulationConfig {
            model,
            seed,
            trials,
            target: Target::Single(q),
            include_unit: true,
        })?;
        ptr::copy_nonoverlapping(sim.values.as_ptr(), values, sim.values.len());
        Ok(())
    })
}
