//! C interface to the `yoccoz` crate.
//!
//! Every function returns a [`YzStatus`]; results go through out-pointers. Nests and
//! pieces are opaque handles owned by the caller and released with their `_free`
//! function. After a failure, [`yz_last_error`] describes it on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64 as C64;
use yoccoz::conformal::{self, AnnulusSpec, Estimate, Pole};
use yoccoz::parapuzzle::{find_fibonacci_parameter, find_superstable, parameter_green};
use yoccoz::puzzle::{build_principal_nest, PrincipalNest, PuzzlePiece};
use yoccoz::quaddyn::{green_value, Profile, QuadraticMap};
use yoccoz::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YzStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad argument, configuration or precondition.
    InvalidArgument = 2,
    Numerical = 3,
    Combinatorics = 4,
    UnderResolved = 5,
    /// Exact angle arithmetic ran out before the requested depth.
    Truncated = 6,
    /// Malformed JSON or I/O failure.
    Serialization = 7,
    /// The output buffer is too small; the required length was written.
    BufferTooSmall = 8,
    Panic = 9,
}

/// A principal nest.
pub struct YzNest(PrincipalNest);

/// A puzzle or parapuzzle piece.
pub struct YzPiece(PuzzlePiece);

/// A grid estimate at `resolution` and half of it.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct YzEstimate {
    pub resolution: usize,
    pub value: f64,
    pub coarse: f64,
    pub richardson: f64,
    pub residual: f64,
}

impl From<Estimate> for YzEstimate {
    fn from(e: Estimate) -> Self {
        Self {
            resolution: e.resolution,
            value: e.value,
            coarse: e.coarse,
            richardson: e.richardson,
            residual: e.residual,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> YzStatus {
    match e {
        Error::Config(_) | Error::Precondition(_) | Error::Domain(_) => YzStatus::InvalidArgument,
        Error::Combinatorics(_) | Error::NonRenormalizable { .. } | Error::Nesting(_) => YzStatus::Combinatorics,
        Error::UnderResolved(_) => YzStatus::UnderResolved,
        Error::AngleBudget(_) => YzStatus::Truncated,
        Error::Io(_) | Error::Serde(_) => YzStatus::Serialization,
        _ => YzStatus::Numerical,
    }
}

/// Run `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (YzStatus, String)>) -> YzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            YzStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(&msg);
            s
        }
        Err(_) => {
            set_error("panic inside yoccoz");
            YzStatus::Panic
        }
    }
}

fn lib<T>(r: yoccoz::Result<T>) -> Result<T, (YzStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (YzStatus, String) {
    (YzStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` is null or valid for reads of `T`.
unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, (YzStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` is null or valid for writes of `T`.
unsafe fn put<T>(p: *mut T, v: T, what: &str) -> Result<(), (YzStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// Message of the last failure on this thread; empty after a success. Valid until the
/// next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn yz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a status code.
#[no_mangle]
pub extern "C" fn yz_status_name(status: YzStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        YzStatus::Ok => b"ok\0",
        YzStatus::NullPointer => b"null pointer\0",
        YzStatus::InvalidArgument => b"invalid argument\0",
        YzStatus::Numerical => b"numerical failure\0",
        YzStatus::Combinatorics => b"combinatorics\0",
        YzStatus::UnderResolved => b"under-resolved\0",
        YzStatus::Truncated => b"truncated\0",
        YzStatus::Serialization => b"serialization\0",
        YzStatus::BufferTooSmall => b"buffer too small\0",
        YzStatus::Panic => b"panic\0",
    };
    s.as_ptr().cast()
}

/// The real Fibonacci parameter.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn yz_fibonacci_parameter(out: *mut f64) -> YzStatus {
    guard(|| {
        let c = lib(find_fibonacci_parameter(1e-13))?.c;
        put(out, c, "out")
    })
}

/// The superstable center `c_n` (`1 <= n <= 11`) and its residual.
///
/// # Safety
/// `c` and `residual` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn yz_superstable_center(n: usize, c: *mut f64, residual: *mut f64) -> YzStatus {
    guard(|| {
        let s = lib(find_superstable(n))?;
        put(c, s.c, "c")?;
        put(residual, s.residual, "residual")
    })
}

/// Green's function of `z^2 + c` at `z`, default escape-time settings.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn yz_green(c_re: f64, c_im: f64, z_re: f64, z_im: f64, out: *mut f64) -> YzStatus {
    guard(|| {
        let map = lib(QuadraticMap::new(C64::new(c_re, c_im)))?;
        let p = Profile::default();
        let g = lib(green_value(&map, C64::new(z_re, z_im), p.max_iter, p.green_bailout))?;
        put(out, g, "out")
    })
}

/// Green's function of the Mandelbrot set at `c`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn yz_parameter_green(c_re: f64, c_im: f64, out: *mut f64) -> YzStatus {
    guard(|| {
        let p = Profile::default();
        let g = lib(parameter_green(C64::new(c_re, c_im), p.max_iter, p.green_bailout))?;
        put(out, g, "out")
    })
}

/// Build the principal nest of `z^2 + c` to `depth` with the default profile. A nest
/// stopped early still comes back in `out`, with status `Truncated`.
///
/// # Safety
/// `out` must be valid for a write; the handle is freed with [`yz_nest_free`].
#[no_mangle]
pub unsafe extern "C" fn yz_nest_build(
    c_re: f64,
    c_im: f64,
    depth: usize,
    equip_level: f64,
    out: *mut *mut YzNest,
) -> YzStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let map = lib(QuadraticMap::new(C64::new(c_re, c_im)))?;
        let nest = lib(build_principal_nest(&map, depth, equip_level, &Profile::default()))?;
        let truncated = nest.depth() < depth;
        let note = nest.diagnostics.join("; ");
        out.write(Box::into_raw(Box::new(YzNest(nest))));
        if truncated {
            return Err((YzStatus::Truncated, note));
        }
        Ok(())
    })
}

/// # Safety
/// `nest` is null or a handle from [`yz_nest_build`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn yz_nest_free(nest: *mut YzNest) {
    if !nest.is_null() {
        drop(Box::from_raw(nest));
    }
}

/// Depth actually built.
///
/// # Safety
/// `nest` is a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn yz_nest_depth(nest: *const YzNest, out: *mut usize) -> YzStatus {
    guard(|| put(out, get(nest, "nest")?.0.depth(), "out"))
}

/// Copy of the central piece `V(n,0)`.
///
/// # Safety
/// `nest` is a live handle; `out` valid for a write. Free the piece with
/// [`yz_piece_free`].
#[no_mangle]
pub unsafe extern "C" fn yz_nest_central(nest: *const YzNest, n: usize, out: *mut *mut YzPiece) -> YzStatus {
    guard(|| {
        let nest = &get(nest, "nest")?.0;
        let p = nest
            .central(n)
            .ok_or_else(|| (YzStatus::InvalidArgument, format!("nest of depth {} has no level {n}", nest.depth())))?;
        put(out, Box::into_raw(Box::new(YzPiece(p.clone()))), "out")
    })
}

/// Parse a piece from NUL-terminated JSON.
///
/// # Safety
/// `json` is a valid C string; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn yz_piece_from_json(json: *const c_char, out: *mut *mut YzPiece) -> YzStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let s = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (YzStatus::Serialization, e.to_string()))?;
        let p = lib(PuzzlePiece::from_json(s))?;
        put(out, Box::into_raw(Box::new(YzPiece(p))), "out")
    })
}

/// Serialize a piece; free the string with [`yz_string_free`].
///
/// # Safety
/// `piece` is a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn yz_piece_to_json(piece: *const YzPiece, out: *mut *mut c_char) -> YzStatus {
    guard(|| {
        let s = serde_json::to_string(&get(piece, "piece")?.0).map_err(|e| (YzStatus::Serialization, e.to_string()))?;
        let c = CString::new(s).map_err(|e| (YzStatus::Serialization, e.to_string()))?;
        put(out, c.into_raw(), "out")
    })
}

/// # Safety
/// `s` is null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn yz_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `piece` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn yz_piece_free(piece: *mut YzPiece) {
    if !piece.is_null() {
        drop(Box::from_raw(piece));
    }
}

/// Boundary vertices as interleaved `re, im` pairs. `*len` is set to the vertex count;
/// if `capacity` (in vertices) is smaller, nothing is copied and `BufferTooSmall` is
/// returned. `xy` may be null when `capacity` is 0.
///
/// # Safety
/// `piece` is a live handle; `xy` valid for `2 * capacity` doubles; `len` for a write.
#[no_mangle]
pub unsafe extern "C" fn yz_piece_boundary(
    piece: *const YzPiece,
    xy: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> YzStatus {
    guard(|| {
        let b = get(piece, "piece")?.0.boundary();
        put(len, b.len(), "len")?;
        if capacity < b.len() {
            return Err((YzStatus::BufferTooSmall, format!("boundary has {} vertices", b.len())));
        }
        if xy.is_null() {
            return Err(null("xy"));
        }
        let dst = std::slice::from_raw_parts_mut(xy, 2 * b.len());
        for (i, z) in b.iter().enumerate() {
            dst[2 * i] = z.re;
            dst[2 * i + 1] = z.im;
        }
        Ok(())
    })
}

/// Whether `z` lies inside the piece.
///
/// # Safety
/// `piece` is a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn yz_piece_contains(piece: *const YzPiece, re: f64, im: f64, out: *mut bool) -> YzStatus {
    guard(|| {
        let inside = lib(get(piece, "piece")?.0.contains(C64::new(re, im)))?;
        put(out, inside, "out")
    })
}

/// Modulus of the annulus between two nested pieces.
///
/// # Safety
/// Both pieces are live handles; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn yz_modulus(
    outer: *const YzPiece,
    inner: *const YzPiece,
    resolution: usize,
    solver_tol: f64,
    out: *mut YzEstimate,
) -> YzStatus {
    guard(|| {
        let (o, i) = (get(outer, "outer")?, get(inner, "inner")?);
        let a = lib(AnnulusSpec::new(o.0.boundary().to_vec(), i.0.boundary().to_vec()))?;
        let e = lib(conformal::modulus(&a, resolution, solver_tol))?;
        put(out, e.into(), "out")
    })
}

/// Capacity of a piece at infinity or at the interior point `(re, im)`.
///
/// # Safety
/// `piece` is a live handle; `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn yz_capacity(
    piece: *const YzPiece,
    at_infinity: bool,
    re: f64,
    im: f64,
    resolution: usize,
    solver_tol: f64,
    out: *mut YzEstimate,
) -> YzStatus {
    guard(|| {
        let p = get(piece, "piece")?;
        let pole = if at_infinity { Pole::Infinity } else { Pole::Point(C64::new(re, im)) };
        let e = lib(conformal::capacity(p.0.boundary(), pole, resolution, solver_tol))?;
        put(out, e.into(), "out")
    })
}
