//! C interface to `suborbit`.
//!
//! Every object crosses the boundary as an opaque pointer created by a
//! `*_new` style call and released by the matching `*_free`. Fallible calls
//! return a [`SuborbitStatus`]; on failure the message is available from
//! [`suborbit_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use suborbit::construct::{
    build_phi, evaluate_suborbit, finite_inputs, verify_bounds, ErrorReport, OrbitRepresentation,
};
use suborbit::decomposition::perturbed_bounds;
use suborbit::schedule::{schedule_finite, EpsSchedule, PowerSchedule};
use suborbit::shifts::{shift_norms, ShiftOperators};
use suborbit::spaces::{norm, BasisMode, SeqVector, WeightSequence, WeightedLpSpace};
use suborbit::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuborbitStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Unbounded = 3,
    Precondition = 4,
    Overflow = 5,
    OutOfRange = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuborbitWeightKind {
    /// `w_k = param`
    Constant = 0,
    /// `w_k = param^k`
    Geometric = 1,
    /// `w_k = k^param`
    Power = 2,
}

pub struct SuborbitSpace(WeightedLpSpace);
pub struct SuborbitVector(SeqVector);
pub struct SuborbitSchedule(PowerSchedule);
pub struct SuborbitOrbit(OrbitRepresentation);
pub struct SuborbitReport(ErrorReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn status_of(e: &Error) -> SuborbitStatus {
    match e {
        Error::UnboundedOperator(_) | Error::UnsupportedWeight(_) => SuborbitStatus::Unbounded,
        Error::ContractionViolated { .. }
        | Error::LambdaTooSmall { .. }
        | Error::DecayTooSlow { .. }
        | Error::GrowthCondition { .. }
        | Error::Precondition(_)
        | Error::NoCertificate(_) => SuborbitStatus::Precondition,
        Error::Overflow(_) => SuborbitStatus::Overflow,
        Error::OutOfRange { .. } | Error::InvalidIndex { .. } => SuborbitStatus::OutOfRange,
        _ => SuborbitStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SuborbitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SuborbitStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_last_error(format!("null pointer passed as {what}"));
            SuborbitStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SuborbitStatus::Panic
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn write<T>(out: *mut T, value: T, what: &'static str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::Null(what));
    }
    *out = value;
    Ok(())
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn suborbit_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates the weighted space `l^p_w`; `scaled_basis` selects the basis
/// `w_k^{-1/p} delta_k` instead of `delta_k`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn suborbit_space_new(
    p: f64,
    kind: SuborbitWeightKind,
    param: f64,
    scaled_basis: bool,
    out: *mut *mut SuborbitSpace,
) -> SuborbitStatus {
    guard(|| {
        let weights = match kind {
            SuborbitWeightKind::Constant => WeightSequence::Constant { value: param },
            SuborbitWeightKind::Geometric => WeightSequence::Geometric { ratio: param },
            SuborbitWeightKind::Power => WeightSequence::Power { exponent: param },
        };
        let basis = if scaled_basis {
            BasisMode::Scaled
        } else {
            BasisMode::Canonical
        };
        put(out, SuborbitSpace(WeightedLpSpace::new(p, weights, basis)?))
    })
}

/// # Safety
/// `space` must come from `suborbit_space_new` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn suborbit_space_free(space: *mut SuborbitSpace) {
    free(space)
}

/// Operator norms of the left and right shifts.
///
/// # Safety
/// `space` must be a live handle; `norm_l` and `norm_r` must be writable.
#[no_mangle]
pub unsafe extern "C" fn suborbit_space_shift_norms(
    space: *const SuborbitSpace,
    norm_l: *mut f64,
    norm_r: *mut f64,
) -> SuborbitStatus {
    guard(|| {
        let (l, r) = shift_norms(&get(space, "space")?.0)?;
        write(norm_l, l, "norm_l")?;
        write(norm_r, r, "norm_r")
    })
}

/// Finitely supported vector from `len` (index, value) pairs; indices start
/// at 1 and repeats are summed.
///
/// # Safety
/// `indices` and `values` must point to `len` readable elements.
#[no_mangle]
pub unsafe extern "C" fn suborbit_vector_new(
    indices: *const usize,
    values: *const f64,
    len: usize,
    out: *mut *mut SuborbitVector,
) -> SuborbitStatus {
    guard(|| {
        let idx = slice(indices, len, "indices")?;
        let val = slice(values, len, "values")?;
        let v = SeqVector::from_pairs(idx.iter().copied().zip(val.iter().copied()))?;
        put(out, SuborbitVector(v))
    })
}

/// # Safety
/// `v` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn suborbit_vector_free(v: *mut SuborbitVector) {
    free(v)
}

/// Number of stored nonzero coefficients; 0 for NULL.
///
/// # Safety
/// `v` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn suborbit_vector_nnz(v: *const SuborbitVector) -> usize {
    v.as_ref().map_or(0, |v| v.0.nnz())
}

/// Coefficient at index `j`; 0 for NULL.
///
/// # Safety
/// `v` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn suborbit_vector_get(v: *const SuborbitVector, j: usize) -> f64 {
    v.as_ref().map_or(0.0, |v| v.0.get(j))
}

/// Copies up to `capacity` stored entries in increasing index order and
/// writes how many were copied to `written`.
///
/// # Safety
/// `indices` and `values` must have room for `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn suborbit_vector_entries(
    v: *const SuborbitVector,
    indices: *mut usize,
    values: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> SuborbitStatus {
    guard(|| {
        let v = get(v, "vector")?;
        if capacity > 0 && (indices.is_null() || values.is_null()) {
            return Err(Fail::Null("indices/values"));
        }
        let mut n = 0;
        for (j, c) in v.0.iter().take(capacity) {
            *indices.add(n) = j;
            *values.add(n) = c;
            n += 1;
        }
        write(written, n, "written")
    })
}

/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn suborbit_vector_norm(
    space: *const SuborbitSpace,
    v: *const SuborbitVector,
    out: *mut f64,
) -> SuborbitStatus {
    guard(|| {
        let n = norm(&get(space, "space")?.0, &get(v, "vector")?.0)?;
        write(out, n, "out")
    })
}

unsafe fn family(
    vectors: *const *const SuborbitVector,
    len: usize,
) -> Result<Vec<SeqVector>, Fail> {
    slice(vectors, len, "family")?
        .iter()
        .map(|&p| get(p, "family member").map(|v| v.0.clone()))
        .collect()
}

/// Minimal power schedule for a finitely supported family with tolerances
/// `epsilon 2^{-k}`.
///
/// # Safety
/// `family` must point to `len` live vector handles.
#[no_mangle]
pub unsafe extern "C" fn suborbit_schedule_finite(
    space: *const SuborbitSpace,
    lambda: f64,
    family_ptr: *const *const SuborbitVector,
    len: usize,
    epsilon: f64,
    out: *mut *mut SuborbitSchedule,
) -> SuborbitStatus {
    guard(|| {
        let ops = ShiftOperators::new(get(space, "space")?.0.clone(), lambda)?;
        let fam = family(family_ptr, len)?;
        let (supports, norms) = finite_inputs(&ops, &fam)?;
        let s = schedule_finite(
            &supports,
            &norms,
            ops.norm_s(),
            &EpsSchedule::plain(epsilon)?,
        )?;
        put(out, SuborbitSchedule(s))
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn suborbit_schedule_free(s: *mut SuborbitSchedule) {
    free(s)
}

/// # Safety
/// `s` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn suborbit_schedule_len(s: *const SuborbitSchedule) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// `alpha(k)` for `1 <= k <= len`.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn suborbit_schedule_alpha(
    s: *const SuborbitSchedule,
    k: usize,
    out: *mut u64,
) -> SuborbitStatus {
    guard(|| {
        let s = &get(s, "schedule")?.0;
        if k < 1 || k > s.len() {
            return Err(Error::OutOfRange { k, len: s.len() }.into());
        }
        write(out, s.alpha(k), "out")
    })
}

/// Generating vector built from the first `trunc` members.
///
/// # Safety
/// All handles must be live and `family` must hold `len` of them.
#[no_mangle]
pub unsafe extern "C" fn suborbit_orbit_new(
    space: *const SuborbitSpace,
    lambda: f64,
    schedule: *const SuborbitSchedule,
    family_ptr: *const *const SuborbitVector,
    len: usize,
    trunc: usize,
    out: *mut *mut SuborbitOrbit,
) -> SuborbitStatus {
    guard(|| {
        let ops = ShiftOperators::new(get(space, "space")?.0.clone(), lambda)?;
        let fam = family(family_ptr, len)?;
        let orbit = build_phi(&ops, &get(schedule, "schedule")?.0, &fam, trunc)?;
        put(out, SuborbitOrbit(orbit))
    })
}

/// # Safety
/// `o` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn suborbit_orbit_free(o: *mut SuborbitOrbit) {
    free(o)
}

/// Bound on the part of the generating vector left out by truncation.
///
/// # Safety
/// `o` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn suborbit_orbit_tail_bound(
    o: *const SuborbitOrbit,
    out: *mut f64,
) -> SuborbitStatus {
    guard(|| write(out, get(o, "orbit")?.0.truncation_tail_bound, "out"))
}

/// `T^{alpha(k)} phi` as a new vector handle.
///
/// # Safety
/// `o` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn suborbit_orbit_evaluate(
    o: *const SuborbitOrbit,
    k: usize,
    out: *mut *mut SuborbitVector,
) -> SuborbitStatus {
    guard(|| {
        put(
            out,
            SuborbitVector(evaluate_suborbit(&get(o, "orbit")?.0, k)?),
        )
    })
}

/// Per-k error report; `jobs` threads, 0 for all cores.
///
/// # Safety
/// `o` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn suborbit_orbit_verify(
    o: *const SuborbitOrbit,
    jobs: usize,
    out: *mut *mut SuborbitReport,
) -> SuborbitStatus {
    guard(|| {
        let o = &get(o, "orbit")?.0;
        put(
            out,
            SuborbitReport(verify_bounds(o, &o.schedule.eps, jobs)?),
        )
    })
}

/// # Safety
/// `r` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn suborbit_report_free(r: *mut SuborbitReport) {
    free(r)
}

/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn suborbit_report_len(r: *const SuborbitReport) -> usize {
    r.as_ref().map_or(0, |r| r.0.rows.len())
}

/// Largest `actual / bound` over the report; NaN for NULL.
///
/// # Safety
/// `r` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn suborbit_report_max_ratio(r: *const SuborbitReport) -> f64 {
    r.as_ref().map_or(f64::NAN, |r| r.0.max_ratio)
}

/// Row `k` (1-based) of the report.
///
/// # Safety
/// `r` must be a live handle; the output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn suborbit_report_row(
    r: *const SuborbitReport,
    k: usize,
    actual: *mut f64,
    bound: *mut f64,
    allowance: *mut f64,
    pass: *mut bool,
) -> SuborbitStatus {
    guard(|| {
        let rows = &get(r, "report")?.0.rows;
        let row = k
            .checked_sub(1)
            .and_then(|i| rows.get(i))
            .ok_or(Error::OutOfRange { k, len: rows.len() })?;
        write(actual, row.actual_error, "actual")?;
        write(bound, row.bound, "bound")?;
        write(allowance, row.allowance, "allowance")?;
        write(pass, row.pass, "pass")
    })
}

/// `(A / (1 + eps B), B / (1 - eps B))` for `0 < eps < 1/B`.
///
/// # Safety
/// `a_new` and `b_new` must be writable.
#[no_mangle]
pub unsafe extern "C" fn suborbit_perturbed_bounds(
    a: f64,
    b: f64,
    epsilon: f64,
    a_new: *mut f64,
    b_new: *mut f64,
) -> SuborbitStatus {
    guard(|| {
        let (x, y) = perturbed_bounds(a, b, epsilon)?;
        write(a_new, x, "a_new")?;
        write(b_new, y, "b_new")
    })
}
