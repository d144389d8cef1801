//! C interface to `mlquad`.
//!
//! Objects are opaque handles created by `*_new`/`*_generate`/`mlq_estimate`
//! and released by the matching `*_free`. Every function returns an
//! [`MlqStatus`]; on failure, `mlq_last_error` gives a message for the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use mlquad::coeff::{Functional, ProblemSpec};
use mlquad::fem::ScalarField;
use mlquad::mesh::{generate_mesh, Domain, Mesh};
use mlquad::mlq::{estimate, measure_error, Hierarchy, MlConfig, NormKind, Representation};
use mlquad::quad::{self, Family, QuadratureRule};
use mlquad::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlqStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    /// Buffer passed by the caller is too small.
    BufferTooSmall = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlqDomain {
    UnitDisk = 0,
    UnitSquare = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlqFamily {
    MonteCarlo = 0,
    QmcHalton = 1,
    CcSparse = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlqRepresentation {
    NestedQ = 0,
    NestedV = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlqProblem {
    AnalyticDisk = 0,
    SinusoidalSquare = 1,
}

/// Triangulation handle.
pub struct MlqMesh(Mesh);

/// Quadrature rule handle (plain or difference rule).
pub struct MlqRule(QuadratureRule);

/// Result of a multilevel estimate.
pub struct MlqReport {
    statistic: ScalarField,
    exact: Option<ScalarField>,
    solves: usize,
    cost_units: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: &str) {
    LAST_ERROR.with(|e| {
        let mut e = e.borrow_mut();
        e.clear();
        e.extend(msg.bytes().filter(|&b| b != 0));
    });
}

fn status_of(err: &Error) -> MlqStatus {
    if err.is_numerical() {
        MlqStatus::Numerical
    } else if matches!(err, Error::Io(_)) {
        MlqStatus::Io
    } else {
        MlqStatus::InvalidArgument
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (MlqStatus, String)>) -> MlqStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MlqStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            MlqStatus::Panic
        }
    }
}

fn lift(err: Error) -> (MlqStatus, String) {
    (status_of(&err), err.to_string())
}

fn null() -> (MlqStatus, String) {
    (MlqStatus::NullPointer, "null pointer argument".into())
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, (MlqStatus, String)> {
    p.as_ref().ok_or_else(null)
}

/// Copies `src` into `(out, len)`, failing if the buffer is too small.
unsafe fn copy_out<T: Copy>(src: &[T], out: *mut T, len: usize) -> Result<(), (MlqStatus, String)> {
    if out.is_null() {
        return Err(null());
    }
    if len < src.len() {
        return Err((
            MlqStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mlq_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            ptr::copy_nonoverlapping(e.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mlq_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Generates a mesh with target size `h`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn mlq_mesh_generate(domain: MlqDomain, h: f64, seed: u64, out: *mut *mut MlqMesh) -> MlqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let domain = match domain {
            MlqDomain::UnitDisk => Domain::UnitDisk,
            MlqDomain::UnitSquare => Domain::UnitSquare,
        };
        let mesh = generate_mesh(domain, h, seed).map_err(lift)?;
        *out = Box::into_raw(Box::new(MlqMesh(mesh)));
        Ok(())
    })
}

/// # Safety
/// `mesh` must be a live handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mlq_mesh_counts(mesh: *const MlqMesh, vertices: *mut usize, triangles: *mut usize) -> MlqStatus {
    guard(|| {
        let m = &deref(mesh)?.0;
        if vertices.is_null() || triangles.is_null() {
            return Err(null());
        }
        *vertices = m.num_vertices();
        *triangles = m.num_triangles();
        Ok(())
    })
}

/// Copies vertex coordinates as `x0, y0, x1, y1, ...` (`2 * vertices` values).
///
/// # Safety
/// `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mlq_mesh_vertices(mesh: *const MlqMesh, out: *mut f64, len: usize) -> MlqStatus {
    guard(|| {
        let m = &deref(mesh)?.0;
        let flat: Vec<f64> = m.vertices().iter().flat_map(|p| [p[0], p[1]]).collect();
        copy_out(&flat, out, len)
    })
}

/// Copies 0-based triangle corner indices (`3 * triangles` values).
///
/// # Safety
/// `out` must be valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn mlq_mesh_triangles(mesh: *const MlqMesh, out: *mut usize, len: usize) -> MlqStatus {
    guard(|| {
        let m = &deref(mesh)?.0;
        let flat: Vec<usize> = m.triangles().iter().flatten().copied().collect();
        copy_out(&flat, out, len)
    })
}

/// # Safety
/// `mesh` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mlq_mesh_free(mesh: *mut MlqMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

fn family_of(f: MlqFamily) -> Family {
    match f {
        MlqFamily::MonteCarlo => Family::MonteCarlo,
        MlqFamily::QmcHalton => Family::QmcHalton,
        MlqFamily::CcSparse => Family::CcSparse,
    }
}

/// Builds the level-`level` rule in `dim` dimensions, or the difference
/// rule `Q_level - Q_{level-1}` when `difference` is true.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn mlq_rule_new(
    family: MlqFamily,
    level: usize,
    dim: usize,
    seed: u64,
    difference: bool,
    out: *mut *mut MlqRule,
) -> MlqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let family = family_of(family);
        let rule = if difference {
            quad::difference_rule(family, level, dim, seed).map(|d| d.as_rule().clone())
        } else {
            quad::rule(family, level, dim, seed)
        }
        .map_err(lift)?;
        *out = Box::into_raw(Box::new(MlqRule(rule)));
        Ok(())
    })
}

/// # Safety
/// `rule` must be a live handle; `len` and `dim` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mlq_rule_size(rule: *const MlqRule, len: *mut usize, dim: *mut usize) -> MlqStatus {
    guard(|| {
        let r = &deref(rule)?.0;
        if len.is_null() || dim.is_null() {
            return Err(null());
        }
        *len = r.len();
        *dim = r.dim();
        Ok(())
    })
}

/// Copies nodes row-major (`len * dim` values).
///
/// # Safety
/// `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mlq_rule_nodes(rule: *const MlqRule, out: *mut f64, len: usize) -> MlqStatus {
    guard(|| {
        let r = &deref(rule)?.0;
        let flat: Vec<f64> = r.nodes().flatten().copied().collect();
        copy_out(&flat, out, len)
    })
}

/// # Safety
/// `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mlq_rule_weights(rule: *const MlqRule, out: *mut f64, len: usize) -> MlqStatus {
    guard(|| copy_out(deref(rule)?.0.weights(), out, len))
}

/// # Safety
/// `rule` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mlq_rule_free(rule: *mut MlqRule) {
    if !rule.is_null() {
        drop(Box::from_raw(rule));
    }
}

/// Runs one multilevel estimate of `E[u^p]` (`p` = 1 or 2) for a built-in
/// problem, with meshes up to level `j` and a reference mesh at `j + 2`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn mlq_estimate(
    problem: MlqProblem,
    j: usize,
    family: MlqFamily,
    representation: MlqRepresentation,
    p: u32,
    seed: u64,
    out: *mut *mut MlqReport,
) -> MlqStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        let spec = match problem {
            MlqProblem::AnalyticDisk => ProblemSpec::analytic_disk(),
            MlqProblem::SinusoidalSquare => ProblemSpec::sinusoidal_square(),
        };
        let functional = Functional::from_power(p).map_err(lift)?;
        let hierarchy = Hierarchy::new(&spec, j, j + 2, seed).map_err(lift)?;
        let representation = match representation {
            MlqRepresentation::NestedQ => Representation::NestedQ,
            MlqRepresentation::NestedV => Representation::NestedV,
        };
        let config = MlConfig {
            seed,
            ..MlConfig::new(j, family_of(family), representation)
        };
        let report = estimate(&hierarchy, &config, &[functional]).map_err(lift)?;
        let exact = spec
            .exact_statistic(functional)
            .map(|g| ScalarField::from_fn(Arc::clone(hierarchy.reference()), g));
        *out = Box::into_raw(Box::new(MlqReport {
            statistic: report.statistics[0].clone(),
            exact,
            solves: report.total_solves(),
            cost_units: report.total_cost_units(),
        }));
        Ok(())
    })
}

/// Solve count, cost units and number of reference vertices.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn mlq_report_summary(
    report: *const MlqReport,
    solves: *mut usize,
    cost_units: *mut usize,
    values: *mut usize,
) -> MlqStatus {
    guard(|| {
        let r = deref(report)?;
        if solves.is_null() || cost_units.is_null() || values.is_null() {
            return Err(null());
        }
        *solves = r.solves;
        *cost_units = r.cost_units;
        *values = r.statistic.values().len();
        Ok(())
    })
}

/// Copies the estimated statistic at the reference vertices.
///
/// # Safety
/// `out` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn mlq_report_values(report: *const MlqReport, out: *mut f64, len: usize) -> MlqStatus {
    guard(|| copy_out(deref(report)?.statistic.values(), out, len))
}

/// H1 error against the closed-form statistic (analytic problem only).
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn mlq_report_error_h1(report: *const MlqReport, out: *mut f64) -> MlqStatus {
    guard(|| {
        let r = deref(report)?;
        if out.is_null() {
            return Err(null());
        }
        let exact = r.exact.as_ref().ok_or_else(|| {
            (
                MlqStatus::InvalidArgument,
                "no closed-form statistic for this problem".to_string(),
            )
        })?;
        *out = measure_error(&r.statistic, exact, NormKind::H1).map_err(lift)?;
        Ok(())
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mlq_report_free(report: *mut MlqReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
