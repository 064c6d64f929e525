//! C ABI over the bctk kernel.
//!
//! Tensors cross the boundary as opaque [`BctkTensor`] handles; everything
//! else travels as NUL-terminated JSON strings owned by the library and
//! released with [`bctk_string_free`]. Every entry point returns a
//! [`BctkStatus`]; on failure [`bctk_last_error`] describes the cause.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bctk::bct::tensor::{compose_par, compose_seq, TransformationTensor};
use bctk::lct::{falsify, CandidateModel, LctInstance};
use bctk::verify::{self, RunConfig, Suite};
use serde_json::Value;

/// Status codes returned by every function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BctkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    ShapeMismatch = 4,
    VerificationFailed = 5,
    NoViolation = 6,
    Panic = 7,
}

/// Opaque transformation tensor with exact rational weights.
pub struct BctkTensor(TransformationTensor);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(BctkStatus, String);

impl From<bctk::Error> for Fail {
    fn from(e: bctk::Error) -> Self {
        let status = match e {
            bctk::Error::DimensionMismatch { .. } | bctk::Error::ShapeMismatch { .. } => BctkStatus::ShapeMismatch,
            _ => BctkStatus::InvalidInput,
        };
        Fail(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BctkStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BctkStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            BctkStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(BctkStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(BctkStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn tensor<'a>(p: *const BctkTensor, what: &str) -> Result<&'a TransformationTensor, Fail> {
    p.as_ref().map(|t| &t.0).ok_or_else(|| Fail(BctkStatus::NullPointer, format!("{what} is null")))
}

fn json(s: &str) -> Result<Value, Fail> {
    serde_json::from_str(s).map_err(|e| Fail(BctkStatus::InvalidInput, e.to_string()))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(BctkStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|_| Fail(BctkStatus::InvalidInput, "interior NUL".into()))?;
    if out.is_null() {
        return Err(Fail(BctkStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(c.into_raw());
    Ok(())
}

unsafe fn put_tensor(out: *mut *mut BctkTensor, t: TransformationTensor) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail(BctkStatus::NullPointer, "output pointer is null".into()));
    }
    out.write(Box::into_raw(Box::new(BctkTensor(t))));
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn bctk_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses `{"in":[..],"out":[..],"terms":[{"i0","l","tau","w"}]}`.
///
/// # Safety
/// `json_text` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bctk_tensor_from_json(json_text: *const c_char, out: *mut *mut BctkTensor) -> BctkStatus {
    guard(|| {
        let v = json(text(json_text, "json")?)?;
        put_tensor(out, TransformationTensor::from_json(&v)?)
    })
}

/// # Safety
/// `t` must come from this library and not be freed twice. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn bctk_tensor_free(t: *mut BctkTensor) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// `second` after `first`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bctk_tensor_compose_seq(
    first: *const BctkTensor,
    second: *const BctkTensor,
    out: *mut *mut BctkTensor,
) -> BctkStatus {
    guard(|| put_tensor(out, compose_seq(tensor(first, "first")?, tensor(second, "second")?)?))
}

/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bctk_tensor_compose_par(
    left: *const BctkTensor,
    right: *const BctkTensor,
    out: *mut *mut BctkTensor,
) -> BctkStatus {
    guard(|| put_tensor(out, compose_par(tensor(left, "left")?, tensor(right, "right")?)?))
}

/// # Safety
/// `t` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bctk_tensor_is_channel(t: *const BctkTensor, out: *mut bool) -> BctkStatus {
    guard(|| put(out, tensor(t, "tensor")?.is_channel(0.0)))
}

/// # Safety
/// `t` must be live; `out` must be writable. Free the result with
/// [`bctk_string_free`].
#[no_mangle]
pub unsafe extern "C" fn bctk_tensor_to_json(t: *const BctkTensor, out: *mut *mut c_char) -> BctkStatus {
    guard(|| put_string(out, tensor(t, "tensor")?.to_json().to_string()))
}

/// Ontic image of the tensor as JSON.
///
/// # Safety
/// `t` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bctk_tensor_embed_json(t: *const BctkTensor, out: *mut *mut c_char) -> BctkStatus {
    guard(|| put_string(out, bctk::ontic::xi_transformation(tensor(t, "tensor")?)?.to_json().to_string()))
}

/// Runs a verification suite with the exact backend. The report is written
/// even when checks fail, in which case the status is `VerificationFailed`.
///
/// # Safety
/// `suite` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bctk_verify(
    suite: *const c_char,
    seed: u64,
    trials: u32,
    max_dim: u32,
    out: *mut *mut c_char,
) -> BctkStatus {
    guard(|| {
        let suite: Suite = text(suite, "suite")?.parse().map_err(|e: bctk::Error| Fail(BctkStatus::InvalidInput, e.to_string()))?;
        let cfg = RunConfig { seed, trials: trials as usize, max_dim: max_dim as usize, ..RunConfig::default() };
        let report = verify::run(suite, &cfg);
        put_string(out, report.to_json_string())?;
        if report.passed() {
            Ok(())
        } else {
            Err(Fail(BctkStatus::VerificationFailed, format!("{} checks failed", report.failure_count)))
        }
    })
}

/// Tests a candidate model against the default latent instance. The
/// certificate is always written; `NoViolation` means it is empty.
///
/// # Safety
/// `model_json` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bctk_lct_refute_json(model_json: *const c_char, out: *mut *mut c_char) -> BctkStatus {
    guard(|| {
        let cand = CandidateModel::from_json(&json(text(model_json, "model")?)?)?;
        let cert = falsify(&cand, &LctInstance::default())?;
        put_string(out, cert.to_json().to_string())?;
        if cert.is_empty() {
            Err(Fail(BctkStatus::NoViolation, "candidate violates no axiom".into()))
        } else {
            Ok(())
        }
    })
}

/// Compiles circuit source and evaluates `name` on both backends.
///
/// # Safety
/// `source` and `name` must be valid C strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bctk_eval_source(source: *const c_char, name: *const c_char, out: *mut *mut c_char) -> BctkStatus {
    guard(|| {
        let prog = bctk::dsl::compile(text(source, "source")?).map_err(|d| Fail(BctkStatus::InvalidInput, d.to_string()))?;
        let ev = prog.evaluate(text(name, "name")?)?;
        put_string(out, ev.to_json().to_string())
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn bctk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
