//! C ABI for the `interlace` library.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/
//! `*_generate` functions and released by the matching `*_free`. Every
//! fallible call returns an [`InterlaceStatus`]; on failure a message is
//! available from [`interlace_last_error`] on the same thread. Panics are
//! caught and reported as [`InterlaceStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use interlace::framework::{dirichlet_spectrum, neumann_spectrum};
use interlace::lab::run_friedlander;
use interlace::mesh::{generate, Domain, Mesh};
use interlace::problems::{assemble, DiscreteProblem, ProblemKind};
use interlace::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterlaceStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMesh = 3,
    Parse = 4,
    Resonance = 5,
    Solver = 6,
    Io = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterlaceDomain {
    Square = 0,
    Lshape = 1,
    DiskPolygon = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterlaceKind {
    Laplacian = 0,
    Stokes = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterlaceBoundary {
    Neumann = 0,
    Dirichlet = 1,
}

/// Opaque triangulation.
pub struct InterlaceMesh(Mesh);

/// Opaque assembled problem.
pub struct InterlaceProblem(DiscreteProblem);

/// Opaque list of eigenvalues with their relative residuals.
pub struct InterlaceSpectrum {
    eigenvalues: Vec<f64>,
    residuals: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> InterlaceStatus {
    match e {
        Error::InvalidMesh(_) => InterlaceStatus::InvalidMesh,
        Error::Parse { .. } => InterlaceStatus::Parse,
        Error::DirichletResonance { .. } => InterlaceStatus::Resonance,
        Error::Io(_) => InterlaceStatus::Io,
        Error::BadParameter(_) | Error::BadAlpha(_) | Error::Dimension(_) | Error::NonOrthogonal { .. } => {
            InterlaceStatus::InvalidArgument
        }
        _ => InterlaceStatus::Solver,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (InterlaceStatus, String)>) -> InterlaceStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            InterlaceStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            InterlaceStatus::Panic
        }
    }
}

fn lib<T>(r: interlace::Result<T>) -> Result<T, (InterlaceStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (InterlaceStatus, String) {
    (InterlaceStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (InterlaceStatus, String) {
    (InterlaceStatus::InvalidArgument, msg.into())
}

/// # Safety
/// `p` must be null or point to a live `T`.
unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (InterlaceStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

fn write_out<T>(out: *mut *mut T, value: T) -> Result<(), (InterlaceStatus, String)> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    // SAFETY: checked non-null; the caller provides writable storage.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

impl From<InterlaceDomain> for Domain {
    fn from(d: InterlaceDomain) -> Self {
        match d {
            InterlaceDomain::Square => Domain::Square,
            InterlaceDomain::Lshape => Domain::Lshape,
            InterlaceDomain::DiskPolygon => Domain::DiskPolygon,
        }
    }
}

impl From<InterlaceKind> for ProblemKind {
    fn from(k: InterlaceKind) -> Self {
        match k {
            InterlaceKind::Laplacian => ProblemKind::Laplacian,
            InterlaceKind::Stokes => ProblemKind::Stokes,
        }
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn interlace_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message of the last failed call on this thread (empty after a success).
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn interlace_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Generates a mesh of `domain` with size `h`. `sides` is the polygon side
/// count for the disk and must be 0 (default) for other domains.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for a handle.
#[no_mangle]
pub unsafe extern "C" fn interlace_mesh_generate(
    domain: InterlaceDomain,
    h: f64,
    sides: u32,
    out: *mut *mut InterlaceMesh,
) -> InterlaceStatus {
    guard(|| {
        let sides = (sides > 0).then_some(sides as usize);
        let mesh = lib(generate(domain.into(), h, sides))?;
        write_out(out, InterlaceMesh(mesh))
    })
}

/// Parses a mesh from its JSON text and validates it.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` as in
/// [`interlace_mesh_generate`].
#[no_mangle]
pub unsafe extern "C" fn interlace_mesh_from_json(json: *const c_char, out: *mut *mut InterlaceMesh) -> InterlaceStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json).to_str().map_err(|_| invalid("json is not UTF-8"))?;
        let mesh = lib(Mesh::from_json_str(text))?;
        let report = mesh.validate();
        if let Some(v) = report.violations.first() {
            return Err((InterlaceStatus::InvalidMesh, v.to_string()));
        }
        write_out(out, InterlaceMesh(mesh))
    })
}

/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn interlace_mesh_num_vertices(mesh: *const InterlaceMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.num_vertices())
}

/// # Safety
/// `mesh` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn interlace_mesh_num_triangles(mesh: *const InterlaceMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.num_triangles())
}

/// # Safety
/// `mesh` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn interlace_mesh_free(mesh: *mut InterlaceMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Assembles a problem on `mesh`. `alpha` is ignored for the Laplacian.
/// The mesh handle may be freed afterwards.
///
/// # Safety
/// `mesh` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn interlace_problem_new(
    mesh: *const InterlaceMesh,
    kind: InterlaceKind,
    alpha: f64,
    out: *mut *mut InterlaceProblem,
) -> InterlaceStatus {
    guard(|| {
        let mesh = deref(mesh, "mesh")?;
        let p = lib(assemble(&mesh.0, kind.into(), alpha))?;
        write_out(out, InterlaceProblem(p))
    })
}

/// Number of finite-element velocity (or scalar) dofs.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn interlace_problem_num_dofs(problem: *const InterlaceProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.0.num_dofs())
}

/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn interlace_problem_free(problem: *mut InterlaceProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Smallest `count` eigenvalues of the Neumann or Dirichlet operator.
///
/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn interlace_spectrum_compute(
    problem: *const InterlaceProblem,
    bc: InterlaceBoundary,
    count: usize,
    out: *mut *mut InterlaceSpectrum,
) -> InterlaceStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        let fs = lib(p.0.form_system())?;
        let spectrum = lib(match bc {
            InterlaceBoundary::Neumann => neumann_spectrum(fs, count),
            InterlaceBoundary::Dirichlet => dirichlet_spectrum(fs, count),
        })?;
        write_out(
            out,
            InterlaceSpectrum {
                eigenvalues: spectrum.eigenvalues,
                residuals: spectrum.residuals,
            },
        )
    })
}

/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn interlace_spectrum_len(spectrum: *const InterlaceSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.eigenvalues.len())
}

/// Copies up to `len` eigenvalues into `values` and, if `residuals` is not
/// null, the matching residuals. Returns the number copied through
/// `written` (which may be null).
///
/// # Safety
/// `spectrum` must be a live handle; `values` (and `residuals` if non-null)
/// must have room for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn interlace_spectrum_copy(
    spectrum: *const InterlaceSpectrum,
    values: *mut f64,
    residuals: *mut f64,
    len: usize,
    written: *mut usize,
) -> InterlaceStatus {
    guard(|| {
        let s = deref(spectrum, "spectrum")?;
        if values.is_null() && len > 0 {
            return Err(null("values"));
        }
        let n = len.min(s.eigenvalues.len());
        if n > 0 {
            ptr::copy_nonoverlapping(s.eigenvalues.as_ptr(), values, n);
            if !residuals.is_null() {
                ptr::copy_nonoverlapping(s.residuals.as_ptr(), residuals, n);
            }
        }
        if !written.is_null() {
            *written = n;
        }
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn interlace_spectrum_free(spectrum: *mut InterlaceSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Interlacing verdict for `λ_{n+1}^N < λ_n^D`, `n ≤ n_max`, at mesh size
/// `h` with the default margin. Writes 1 (pass) or 0 to `pass`.
///
/// # Safety
/// `pass` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn interlace_verify(
    domain: InterlaceDomain,
    kind: InterlaceKind,
    alpha: f64,
    h: f64,
    n_max: usize,
    pass: *mut i32,
) -> InterlaceStatus {
    guard(|| {
        if pass.is_null() {
            return Err(null("pass"));
        }
        let report = lib(run_friedlander(domain.into(), kind.into(), alpha, h, n_max))?;
        *pass = i32::from(report.pass);
        Ok(())
    })
}
