//! C ABI for the block Gram-Schmidt library.
//!
//! All matrices cross the boundary as column-major `double` buffers.  A
//! factorization returns an opaque `BgsResult` handle; callers copy the
//! factors out and free the handle.  Every entry point returns a `BgsStatus`
//! and never unwinds across the boundary.

use blockgs::mat::{BlockLayout, Mat};
use blockgs::matgen::{self, MatrixKind, MatrixSpec};
use blockgs::metrics;
use blockgs::muscles::{MuscleId, RunStatus};
use blockgs::rng::Rng;
use blockgs::skeletons::{self, BlockQRResult, SkeletonId, SkeletonOptions};
use blockgs::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Result codes for every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgsStatus {
    BgsOk = 0,
    /// A pointer argument was null or a name failed to parse.
    BgsErrInvalidArgument = 1,
    BgsErrDimension = 2,
    /// The skeleton rejects the requested muscle or option set.
    BgsErrIncompatible = 3,
    /// A Cholesky factorization met a nonpositive pivot mid-run.
    BgsErrBreakdown = 4,
    BgsErrNan = 5,
    BgsErrInternal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> BgsStatus {
    match err {
        Error::DimensionMismatch(_) => BgsStatus::BgsErrDimension,
        Error::IncompatiblePairing { .. } => BgsStatus::BgsErrIncompatible,
        Error::NotPositiveDefinite { .. } => BgsStatus::BgsErrBreakdown,
        Error::InvalidParameter(_) | Error::UndefinedInput(_) => BgsStatus::BgsErrInvalidArgument,
        _ => BgsStatus::BgsErrInternal,
    }
}

/// Options mirrored from the Rust side; zero-initialize for defaults and set
/// `rpltol` to a positive value to override the replacement tolerance.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BgsOptions {
    pub t_fix: bool,
    pub reorth_first_block: bool,
    pub auto_shift: bool,
    /// Replacement tolerance; values <= 0 select the default of 100.
    pub rpltol: f64,
}

/// Opaque handle holding the factors of one run.
pub struct BgsResult {
    out: BlockQRResult,
    x: Mat,
}

fn parse_name<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().ok()
}

fn copy_mat_out(m: &Mat, dst: *mut f64) {
    let data = m.data();
    unsafe { std::ptr::copy_nonoverlapping(data.as_ptr(), dst, data.len()) };
}

fn guard<F: FnOnce() -> BgsStatus>(f: F) -> BgsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_error("internal panic".into());
            BgsStatus::BgsErrInternal
        }
    }
}

/// Copy the most recent error message for this thread into `buf` (always
/// NUL-terminated, truncated to `len`).  Returns the full message length.
#[no_mangle]
pub extern "C" fn bgs_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Factorize the m x (p*s) column-major matrix `x` with the named skeleton
/// and muscle.  On success `*out` owns the factors and must be released with
/// `bgs_result_free`.  `opts` may be null for defaults.
///
/// # Safety
/// `x` must point to `m * p * s` doubles and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bgs_block_qr(
    x: *const f64,
    m: usize,
    p: usize,
    s: usize,
    skeleton: *const c_char,
    muscle: *const c_char,
    opts: *const BgsOptions,
    seed: u64,
    out: *mut *mut BgsResult,
) -> BgsStatus {
    guard(|| {
        if x.is_null() || out.is_null() {
            set_error("null pointer argument".into());
            return BgsStatus::BgsErrInvalidArgument;
        }
        let (Some(skel_name), Some(musc_name)) = (parse_name(skeleton), parse_name(muscle)) else {
            set_error("skeleton and muscle names must be valid UTF-8".into());
            return BgsStatus::BgsErrInvalidArgument;
        };
        let Some(skel) = SkeletonId::parse(skel_name) else {
            set_error(format!("unknown skeleton {skel_name:?}"));
            return BgsStatus::BgsErrInvalidArgument;
        };
        let Some(musc) = MuscleId::parse(musc_name) else {
            set_error(format!("unknown muscle {musc_name:?}"));
            return BgsStatus::BgsErrInvalidArgument;
        };
        let layout = match BlockLayout::new(m, p, s) {
            Ok(l) => l,
            Err(e) => {
                set_error(e.to_string());
                return status_of(&e);
            }
        };
        let n = layout.n();
        let mut mat = Mat::zeros(m, n);
        unsafe { std::ptr::copy_nonoverlapping(x, mat.data_mut().as_mut_ptr(), m * n) };
        let mut options = SkeletonOptions::default();
        if !opts.is_null() {
            let o = unsafe { &*opts };
            options.t_fix = o.t_fix;
            options.reorth_first_block = o.reorth_first_block;
            options.auto_shift = o.auto_shift;
            if o.rpltol > 0.0 {
                options.rpltol = o.rpltol;
            }
        }
        let mut rng = Rng::new(seed);
        match skeletons::block_orthogonalize(&mat, layout, skel, musc, &options, &mut rng) {
            Ok(result) => {
                let run = result.status;
                let handle = Box::new(BgsResult { out: result, x: mat });
                unsafe { *out = Box::into_raw(handle) };
                match run {
                    RunStatus::Ok => BgsStatus::BgsOk,
                    RunStatus::CholFail => {
                        set_error("factorization broke down; partial factors returned".into());
                        BgsStatus::BgsErrBreakdown
                    }
                    RunStatus::NanEncountered => {
                        set_error("NaN encountered; partial factors returned".into());
                        BgsStatus::BgsErrNan
                    }
                }
            }
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Row count of the stored factor Q.
#[no_mangle]
pub extern "C" fn bgs_result_rows(res: *const BgsResult) -> usize {
    if res.is_null() {
        return 0;
    }
    unsafe { &*res }.out.q.rows()
}

/// Column count of the stored factor Q (equals p*s).
#[no_mangle]
pub extern "C" fn bgs_result_cols(res: *const BgsResult) -> usize {
    if res.is_null() {
        return 0;
    }
    unsafe { &*res }.out.q.cols()
}

/// Copy Q (rows x cols, column-major) into `dst`.
///
/// # Safety
/// `dst` must hold `bgs_result_rows * bgs_result_cols` doubles.
#[no_mangle]
pub unsafe extern "C" fn bgs_result_q(res: *const BgsResult, dst: *mut f64) -> BgsStatus {
    if res.is_null() || dst.is_null() {
        return BgsStatus::BgsErrInvalidArgument;
    }
    copy_mat_out(&unsafe { &*res }.out.q, dst);
    BgsStatus::BgsOk
}

/// Copy R (cols x cols, column-major) into `dst`.
///
/// # Safety
/// `dst` must hold `cols * cols` doubles.
#[no_mangle]
pub unsafe extern "C" fn bgs_result_r(res: *const BgsResult, dst: *mut f64) -> BgsStatus {
    if res.is_null() || dst.is_null() {
        return BgsStatus::BgsErrInvalidArgument;
    }
    copy_mat_out(&unsafe { &*res }.out.r, dst);
    BgsStatus::BgsOk
}

/// Copy the correction factor T (cols x cols, column-major) into `dst`.
///
/// # Safety
/// `dst` must hold `cols * cols` doubles.
#[no_mangle]
pub unsafe extern "C" fn bgs_result_t(res: *const BgsResult, dst: *mut f64) -> BgsStatus {
    if res.is_null() || dst.is_null() {
        return BgsStatus::BgsErrInvalidArgument;
    }
    copy_mat_out(&unsafe { &*res }.out.t, dst);
    BgsStatus::BgsOk
}

/// Global-reduction counts attributed to the skeleton and muscle layers.
///
/// # Safety
/// Non-null output pointers must be valid for a single write.
#[no_mangle]
pub unsafe extern "C" fn bgs_result_sync_counts(
    res: *const BgsResult,
    skeleton: *mut usize,
    muscle: *mut usize,
) -> BgsStatus {
    if res.is_null() {
        return BgsStatus::BgsErrInvalidArgument;
    }
    let ev = &unsafe { &*res }.out.events;
    if !skeleton.is_null() {
        unsafe { *skeleton = ev.count(blockgs::Origin::Skeleton) };
    }
    if !muscle.is_null() {
        unsafe { *muscle = ev.count(blockgs::Origin::Muscle) };
    }
    BgsStatus::BgsOk
}

/// Stability metrics of the stored factors against the original input.
/// Any output pointer may be null to skip that metric.
///
/// # Safety
/// Non-null output pointers must be valid for a single write.
#[no_mangle]
pub unsafe extern "C" fn bgs_result_metrics(
    res: *const BgsResult,
    loss_of_orthogonality: *mut f64,
    relative_residual: *mut f64,
    relative_cholesky_residual: *mut f64,
) -> BgsStatus {
    guard(|| {
        if res.is_null() {
            return BgsStatus::BgsErrInvalidArgument;
        }
        let h = unsafe { &*res };
        let run = |r: Result<f64, Error>, dst: *mut f64| -> Result<(), Error> {
            if !dst.is_null() {
                unsafe { *dst = r? };
            }
            Ok(())
        };
        let all = run(
            metrics::loss_of_orthogonality(&h.out.q),
            loss_of_orthogonality,
        )
        .and_then(|_| {
            run(
                metrics::relative_residual(&h.out.q, &h.out.r, &h.x),
                relative_residual,
            )
        })
        .and_then(|_| {
            run(
                metrics::relative_cholesky_residual(&h.out.r, &h.x),
                relative_cholesky_residual,
            )
        });
        match all {
            Ok(()) => BgsStatus::BgsOk,
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Release a result handle.  Passing null is a no-op.
///
/// # Safety
/// `res` must come from `bgs_block_qr` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn bgs_result_free(res: *mut BgsResult) {
    if !res.is_null() {
        drop(unsafe { Box::from_raw(res) });
    }
}

/// Generate one of the named test-matrix families into `dst`
/// (m x (p*s), column-major).  Names match the command-line tool, e.g.
/// "rand_normal", "laeuchli", "glued".
///
/// # Safety
/// `dst` must hold `m * p * s` doubles.
#[no_mangle]
pub unsafe extern "C" fn bgs_generate_matrix(
    kind: *const c_char,
    m: usize,
    p: usize,
    s: usize,
    seed: u64,
    dst: *mut f64,
) -> BgsStatus {
    guard(|| {
        if dst.is_null() {
            return BgsStatus::BgsErrInvalidArgument;
        }
        let Some(name) = parse_name(kind) else {
            set_error("matrix kind must be a valid UTF-8 string".into());
            return BgsStatus::BgsErrInvalidArgument;
        };
        let Some(kind) = MatrixKind::parse(name) else {
            set_error(format!("unknown matrix kind {name:?}"));
            return BgsStatus::BgsErrInvalidArgument;
        };
        let layout = match BlockLayout::new(m, p, s) {
            Ok(l) => l,
            Err(e) => {
                set_error(e.to_string());
                return status_of(&e);
            }
        };
        match matgen::generate(&MatrixSpec::new(kind, layout, seed)) {
            Ok(mat) => {
                copy_mat_out(&mat, dst);
                BgsStatus::BgsOk
            }
            Err(e) => {
                set_error(e.to_string());
                status_of(&e)
            }
        }
    })
}

/// Validate skeleton, muscle, and matrix-kind names without running anything.
/// Returns BgsOk when the pairing is accepted.
#[no_mangle]
pub extern "C" fn bgs_check_pairing(skeleton: *const c_char, muscle: *const c_char) -> BgsStatus {
    let (Some(skel_name), Some(musc_name)) = (parse_name(skeleton), parse_name(muscle)) else {
        return BgsStatus::BgsErrInvalidArgument;
    };
    let (Some(skel), Some(musc)) = (SkeletonId::parse(skel_name), MuscleId::parse(musc_name))
    else {
        return BgsStatus::BgsErrInvalidArgument;
    };
    if skel.accepts(musc) {
        BgsStatus::BgsOk
    } else {
        BgsStatus::BgsErrIncompatible
    }
}
