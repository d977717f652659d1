//! C ABI for the levex extension library.
//!
//! Grids and boundary conditions are opaque handles created with `*_new`
//! and released with `*_free`. Every fallible call returns a
//! [`LevexStatus`]; on failure the message is available from
//! [`levex_last_error`] on the same thread. Field arrays are flat, in
//! node order with axis 0 fastest.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use levex::extrapolation::{extrapolate_with_normals, ExtrapolationOptions, ExtrapolationOrder};
use levex::levelset::normals;
use levex::{Bc, BcSpec, Error, Grid, LevelSet, Mask, Method, ScalarField, SolveOptions};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevexStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidGrid = 3,
    InvalidBc = 4,
    LengthMismatch = 5,
    NonFinite = 6,
    DegenerateMask = 7,
    Contract = 8,
    Singular = 9,
    Breakdown = 10,
    TooLarge = 11,
    Cfl = 12,
    Parse = 13,
    Io = 14,
    Panic = 15,
}

/// Boundary condition kinds for [`levex_bc_new`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevexBcKind {
    DirichletZero = 0,
    NeumannZero = 1,
    Periodic = 2,
}

/// Linear solver for [`levex_extend`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevexMethod {
    Pcg = 0,
    Dense = 1,
}

/// Extrapolation order for [`levex_extrapolate`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevexOrder {
    Constant = 0,
    Linear = 1,
    Quadratic = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LevexSolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    /// 1 if the tolerance was reached.
    pub converged: i32,
}

/// Opaque grid handle.
pub struct LevexGrid(Grid);

/// Opaque boundary condition handle.
pub struct LevexBc(BcSpec);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LevexStatus {
    match e {
        Error::InvalidGrid(_) => LevexStatus::InvalidGrid,
        Error::InvalidBc(_) => LevexStatus::InvalidBc,
        Error::LengthMismatch { .. } => LevexStatus::LengthMismatch,
        Error::NonFinite { .. } => LevexStatus::NonFinite,
        Error::DegenerateMask(_) => LevexStatus::DegenerateMask,
        Error::Contract(_) => LevexStatus::Contract,
        Error::Singular(_) => LevexStatus::Singular,
        Error::Breakdown(_) => LevexStatus::Breakdown,
        Error::TooLarge { .. } => LevexStatus::TooLarge,
        Error::Cfl { .. } => LevexStatus::Cfl,
        Error::InvalidArgument(_) => LevexStatus::InvalidArgument,
        Error::Parse { .. } => LevexStatus::Parse,
        Error::Io(_) => LevexStatus::Io,
        Error::AtTime { source, .. } => status_of(source),
    }
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

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LevexStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LevexStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            LevexStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            LevexStatus::Panic
        }
    }
}

unsafe fn slice_in<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length, or 0
/// if there is none.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn levex_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn levex_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a node-centred grid with `ndim` (1 to 3) axes.
///
/// # Safety
/// `dims`, `origin` and `spacing` must point to `ndim` values; `out` must
/// be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn levex_grid_new(
    ndim: usize,
    dims: *const usize,
    origin: *const f64,
    spacing: *const f64,
    out: *mut *mut LevexGrid,
) -> LevexStatus {
    guard(|| {
        let dims = slice_in(dims, ndim, "dims")?;
        let origin = slice_in(origin, ndim, "origin")?;
        let spacing = slice_in(spacing, ndim, "spacing")?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let g = Grid::new(dims, origin, spacing)?;
        *out = Box::into_raw(Box::new(LevexGrid(g)));
        Ok(())
    })
}

/// Number of nodes, or 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn levex_grid_len(grid: *const LevexGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.0.len())
}

/// # Safety
/// `grid` must be null or a handle from [`levex_grid_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn levex_grid_free(grid: *mut LevexGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

fn bc_kind(v: LevexBcKind) -> Bc {
    match v {
        LevexBcKind::DirichletZero => Bc::DirichletZero,
        LevexBcKind::NeumannZero => Bc::NeumannZero,
        LevexBcKind::Periodic => Bc::Periodic,
    }
}

/// Boundary conditions per axis: `low[a]` and `high[a]` for each of the
/// `ndim` axes. A periodic axis must be periodic on both faces.
///
/// # Safety
/// `low` and `high` must point to `ndim` values; `out` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn levex_bc_new(
    ndim: usize,
    low: *const LevexBcKind,
    high: *const LevexBcKind,
    out: *mut *mut LevexBc,
) -> LevexStatus {
    guard(|| {
        let low = slice_in(low, ndim, "low")?;
        let high = slice_in(high, ndim, "high")?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        let faces: Vec<(Bc, Bc)> = low.iter().zip(high).map(|(&l, &h)| (bc_kind(l), bc_kind(h))).collect();
        let spec = BcSpec::new(&faces)?;
        *out = Box::into_raw(Box::new(LevexBc(spec)));
        Ok(())
    })
}

/// # Safety
/// `bc` must be null or a handle from [`levex_bc_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn levex_bc_free(bc: *mut LevexBc) {
    if !bc.is_null() {
        drop(Box::from_raw(bc));
    }
}

/// Biharmonic extension. Nodes with `known[k] != 0` keep `values[k]`; the
/// rest of `out` is filled in. `tol <= 0` and `maxit == 0` select the
/// defaults. `stats` may be null.
///
/// # Safety
/// `values`, `known` and `out` must each hold `len` elements, `len` must
/// equal the grid's node count, and the handles must be live.
#[no_mangle]
pub unsafe extern "C" fn levex_extend(
    grid: *const LevexGrid,
    bc: *const LevexBc,
    values: *const f64,
    known: *const u8,
    len: usize,
    method: LevexMethod,
    tol: f64,
    maxit: usize,
    out: *mut f64,
    stats: *mut LevexSolveStats,
) -> LevexStatus {
    guard(|| {
        let g = handle(grid, "grid")?.0;
        let bc = &handle(bc, "bc")?.0;
        let values = slice_in(values, len, "values")?;
        let known = slice_in(known, len, "known")?;
        let out = slice_out(out, len, "out")?;
        if len != g.len() {
            return Err(Error::LengthMismatch {
                expected: g.len(),
                actual: len,
            }
            .into());
        }
        let mask = Mask::from_known(g, known.iter().map(|&k| k != 0).collect())?;
        let field = ScalarField::new(g, values.to_vec())?.masked(&mask);
        let opts = SolveOptions {
            method: match method {
                LevexMethod::Pcg => Method::PcgFastPoisson,
                LevexMethod::Dense => Method::Dense,
            },
            tol: if tol > 0.0 { tol } else { levex::solver::DEFAULT_TOL },
            maxit: (maxit > 0).then_some(maxit),
        };
        let (f, s) = levex::extend(&field, &mask, bc, &opts)?;
        out.copy_from_slice(f.values());
        if let Some(st) = stats.as_mut() {
            *st = LevexSolveStats {
                iterations: s.iterations,
                relative_residual: s.relative_residual,
                converged: s.converged as i32,
            };
        }
        Ok(())
    })
}

/// PDE extrapolation from `phi <= 0` outward along the normals of `phi`,
/// with the default pseudo-time settings.
///
/// # Safety
/// `values`, `phi` and `out` must each hold `len` elements matching the
/// grid's node count; the grid handle must be live.
#[no_mangle]
pub unsafe extern "C" fn levex_extrapolate(
    grid: *const LevexGrid,
    values: *const f64,
    phi: *const f64,
    len: usize,
    order: LevexOrder,
    out: *mut f64,
) -> LevexStatus {
    guard(|| {
        let g = handle(grid, "grid")?.0;
        let values = slice_in(values, len, "values")?;
        let phi = slice_in(phi, len, "phi")?;
        let out = slice_out(out, len, "out")?;
        let f = ScalarField::new(g, values.to_vec())?;
        let ls = LevelSet::new(ScalarField::new(g, phi.to_vec())?);
        let order = match order {
            LevexOrder::Constant => ExtrapolationOrder::Constant,
            LevexOrder::Linear => ExtrapolationOrder::Linear,
            LevexOrder::Quadratic => ExtrapolationOrder::Quadratic,
        };
        let r = extrapolate_with_normals(&f, &ls, order, &normals(&ls), &ExtrapolationOptions::default())?;
        out.copy_from_slice(r.values());
        Ok(())
    })
}
