//! C ABI over `exsuff`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_parse`
//! style functions and released with the matching `*_free`. Every fallible
//! function returns an [`ExsuffStatus`] and writes results through out
//! pointers; on failure a message is kept per thread and can be read with
//! [`exsuff_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use exsuff::dist::{self, FinitePmf};
use exsuff::harness::{self, catalog};
use exsuff::symcore::{self, Point, PointSet};
use exsuff::symmetrize::{self, Estimand};
use exsuff::{oracle, Error};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExsuffStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Parse = 4,
    OutOfRange = 5,
    DimensionMismatch = 6,
    NullEvent = 7,
    Numerical = 8,
    Panic = 9,
}

/// Opaque finite pmf on R^n.
pub struct ExsuffPmf(FinitePmf);

/// Opaque estimand g: R^n -> R.
pub struct ExsuffEstimand {
    g: Estimand,
    dim: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> ExsuffStatus {
    match e {
        Error::Parse { .. } | Error::Normalization { .. } | Error::InvalidProbability(_) => {
            ExsuffStatus::Parse
        }
        Error::Bounds { .. } => ExsuffStatus::OutOfRange,
        Error::DimensionMismatch { .. } => ExsuffStatus::DimensionMismatch,
        Error::NullConditioning(_) => ExsuffStatus::NullEvent,
        Error::Convergence(..) => ExsuffStatus::Numerical,
        _ => ExsuffStatus::InvalidArgument,
    }
}

struct Failure(ExsuffStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(ExsuffStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status and last-error text.
/// Handles are never mutated, so a panic cannot leave one half-updated.
fn guard<F>(f: F) -> ExsuffStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_last_error();
            ExsuffStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            ExsuffStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        Failure(
            ExsuffStatus::InvalidUtf8,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn slice_arg<'a>(data: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if data.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn out_arg<'a, T>(out: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    out.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(h: *const T, what: &str) -> Result<&'a T, Failure> {
    h.as_ref().ok_or_else(|| null(what))
}

// ---------------------------------------------------------------------------
// Library info and errors

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn exsuff_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn exsuff_status_message(status: ExsuffStatus) -> *const c_char {
    let s: &'static str = match status {
        ExsuffStatus::Ok => "ok\0",
        ExsuffStatus::NullPointer => "null pointer argument\0",
        ExsuffStatus::InvalidUtf8 => "string argument is not valid UTF-8\0",
        ExsuffStatus::InvalidArgument => "invalid argument\0",
        ExsuffStatus::Parse => "malformed or unnormalized input\0",
        ExsuffStatus::OutOfRange => "size outside the supported range\0",
        ExsuffStatus::DimensionMismatch => "dimension mismatch\0",
        ExsuffStatus::NullEvent => "conditioning event has probability zero\0",
        ExsuffStatus::Numerical => "numerical routine did not converge\0",
        ExsuffStatus::Panic => "internal panic\0",
    };
    s.as_ptr().cast()
}

/// Message for the most recent failure on this thread, or NULL after a
/// successful call. Valid until the next call into the library on the same
/// thread.
#[no_mangle]
pub extern "C" fn exsuff_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

// ---------------------------------------------------------------------------
// pmf handles

/// Parses a pmf from the `dim n` text format.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn exsuff_pmf_from_text(
    text: *const c_char,
    out: *mut *mut ExsuffPmf,
) -> ExsuffStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let p = FinitePmf::from_text(str_arg(text, "text")?)?;
        *out = Box::into_raw(Box::new(ExsuffPmf(p)));
        Ok(())
    })
}

/// Orbit average of `p`: an exchangeable pmf.
///
/// # Safety
/// `pmf` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn exsuff_pmf_symmetrize(
    pmf: *const ExsuffPmf,
    out: *mut *mut ExsuffPmf,
) -> ExsuffStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let q = dist::symmetrize_pmf(&handle(pmf, "pmf")?.0)?;
        *out = Box::into_raw(Box::new(ExsuffPmf(q)));
        Ok(())
    })
}

/// Releases a pmf handle. NULL is ignored.
///
/// # Safety
/// `pmf` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn exsuff_pmf_free(pmf: *mut ExsuffPmf) {
    if !pmf.is_null() {
        drop(Box::from_raw(pmf));
    }
}

/// Dimension and atom count.
///
/// # Safety
/// `pmf` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn exsuff_pmf_shape(
    pmf: *const ExsuffPmf,
    out_dim: *mut usize,
    out_atoms: *mut usize,
) -> ExsuffStatus {
    guard(|| {
        let p = &handle(pmf, "pmf")?.0;
        *out_arg(out_dim, "out_dim")? = p.dim();
        *out_arg(out_atoms, "out_atoms")? = p.len();
        Ok(())
    })
}

/// Whether the pmf is invariant under coordinate swaps within `tol`.
///
/// # Safety
/// `pmf` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn exsuff_pmf_is_exchangeable(
    pmf: *const ExsuffPmf,
    tol: f64,
    out: *mut bool,
) -> ExsuffStatus {
    guard(|| {
        *out_arg(out, "out")? = dist::is_exchangeable(&handle(pmf, "pmf")?.0, tol);
        Ok(())
    })
}

/// Largest gap between the brute-force conditional law given the order
/// statistics and the uniform-over-rearrangements formula.
///
/// # Safety
/// `pmf` must be a live handle and `out_max` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn exsuff_pmf_compare_conditional(
    pmf: *const ExsuffPmf,
    out_max: *mut f64,
) -> ExsuffStatus {
    guard(|| {
        let r = oracle::compare_conditional(&handle(pmf, "pmf")?.0, harness::EXACT_TOLERANCE);
        *out_arg(out_max, "out_max")? = r.max_abs_discrepancy;
        Ok(())
    })
}

/// `|E[g(X) 1_A] - E[symmetrized g(sort X) 1_A]|` where `A` is the event
/// that the order statistics fall in `b`. `rows` holds `count` points of the
/// pmf's dimension in row-major order.
///
/// # Safety
/// `pmf` and `estimand` must be live handles, `rows` must point to
/// `count * dim` doubles (may be NULL when `count` is 0), `out` valid.
#[no_mangle]
pub unsafe extern "C" fn exsuff_pmf_identity_gap(
    pmf: *const ExsuffPmf,
    estimand: *const ExsuffEstimand,
    rows: *const f64,
    count: usize,
    out: *mut f64,
) -> ExsuffStatus {
    guard(|| {
        let p = &handle(pmf, "pmf")?.0;
        let g = handle(estimand, "estimand")?;
        let n = p.dim();
        let data = if count == 0 {
            &[][..]
        } else {
            slice_arg(rows, count * n, "rows")?
        };
        let points = data
            .chunks(n)
            .map(|r| Point::new(r.to_vec()))
            .collect::<exsuff::Result<Vec<_>>>()?;
        let b = PointSet::from_points(n, points)?;
        *out_arg(out, "out")? = oracle::verify_integrated_identity(p, &g.g, &b)?;
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// estimands

/// Parses an estimand spec (`proj:k`, `wsum:w1,..`, `sum`, `product`, `max`,
/// `threshold:t`, `constant:c`, `indicator:r1;r2`) for dimension `n`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn exsuff_estimand_parse(
    spec: *const c_char,
    n: usize,
    out: *mut *mut ExsuffEstimand,
) -> ExsuffStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let g = catalog::parse_estimand(str_arg(spec, "spec")?, n)?;
        g.check_dimension(n)?;
        *out = Box::into_raw(Box::new(ExsuffEstimand { g, dim: n }));
        Ok(())
    })
}

/// Releases an estimand handle. NULL is ignored.
///
/// # Safety
/// `estimand` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn exsuff_estimand_free(estimand: *mut ExsuffEstimand) {
    if !estimand.is_null() {
        drop(Box::from_raw(estimand));
    }
}

fn point_for(g: &ExsuffEstimand, y: &[f64]) -> Result<Point, Failure> {
    if y.len() != g.dim {
        return Err(Error::DimensionMismatch {
            expected: g.dim,
            found: y.len(),
        }
        .into());
    }
    Ok(Point::new(y.to_vec())?)
}

/// Exact average of g over all rearrangements of `y` (n <= 10).
///
/// # Safety
/// `estimand` must be a live handle, `y` must point to `n` doubles, `out`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn exsuff_symmetrize_exact(
    estimand: *const ExsuffEstimand,
    y: *const f64,
    n: usize,
    out: *mut f64,
) -> ExsuffStatus {
    guard(|| {
        let g = handle(estimand, "estimand")?;
        let y = point_for(g, slice_arg(y, n, "y")?)?;
        *out_arg(out, "out")? = symmetrize::symmetrize_exact(&g.g, &y)?;
        Ok(())
    })
}

/// Monte Carlo average over `draws` uniform permutations seeded by `seed`.
/// `out_std_error` may be NULL.
///
/// # Safety
/// `estimand` must be a live handle, `y` must point to `n` doubles,
/// `out_value` must be valid.
#[no_mangle]
pub unsafe extern "C" fn exsuff_symmetrize_mc(
    estimand: *const ExsuffEstimand,
    y: *const f64,
    n: usize,
    draws: u64,
    seed: u64,
    out_value: *mut f64,
    out_std_error: *mut f64,
) -> ExsuffStatus {
    guard(|| {
        let g = handle(estimand, "estimand")?;
        let y = point_for(g, slice_arg(y, n, "y")?)?;
        let value = out_arg(out_value, "out_value")?;
        let est = symmetrize::symmetrize_mc(&g.g, &y, draws, &mut exsuff::stream(seed, 0))?;
        *value = est.value;
        if let Some(se) = out_std_error.as_mut() {
            *se = est.std_error;
        }
        Ok(())
    })
}

// ---------------------------------------------------------------------------
// utilities

/// Sorts `x` into nondecreasing order. `out_sorted` receives `n` doubles and
/// `out_perm` (may be NULL) the stable sorting permutation, with
/// `out_sorted[i] = x[out_perm[i]]`.
///
/// # Safety
/// `x` and `out_sorted` must point to `n` doubles; `out_perm` must be NULL
/// or point to `n` writable `size_t`.
#[no_mangle]
pub unsafe extern "C" fn exsuff_sort_to_cone(
    x: *const f64,
    n: usize,
    out_sorted: *mut f64,
    out_perm: *mut usize,
) -> ExsuffStatus {
    guard(|| {
        let x = Point::new(slice_arg(x, n, "x")?.to_vec())?;
        if out_sorted.is_null() {
            return Err(null("out_sorted"));
        }
        let (y, p) = symcore::sort_to_cone(&x);
        std::slice::from_raw_parts_mut(out_sorted, n).copy_from_slice(y.coords());
        if !out_perm.is_null() {
            std::slice::from_raw_parts_mut(out_perm, n).copy_from_slice(p.as_slice());
        }
        Ok(())
    })
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn exsuff_chi_square_sf(x: f64, df: u64, out: *mut f64) -> ExsuffStatus {
    guard(|| {
        *out_arg(out, "out")? = harness::chi_square_sf(x, df)?;
        Ok(())
    })
}
