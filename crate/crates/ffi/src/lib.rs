//! C ABI over `zetaflow`.
//!
//! Objects cross the boundary as opaque handles created by `zf_*_new`-style
//! constructors and released by the matching `zf_*_free`. Every fallible call
//! returns a [`ZfStatus`] and writes results through out-pointers; on failure
//! the message is available from [`zf_last_error`] on the same thread.
//! Panics are caught and reported as [`ZfStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use zetaflow::error::Error;
use zetaflow::mesh::{generate_flat_torus, generate_icosphere, load_off, TriMesh};
use zetaflow::metric::{base_metric, ConformalMetric};
use zetaflow::operators::{assemble, OperatorSpec};
use zetaflow::oracle::{verify_classic, FiniteModel, ModelJson};
use zetaflow::spectral::{
    analytic_sphere_spectrum, analytic_torus_spectrum, eigen_spectrum, log_det_zeta, polyakov_rhs, EigenCount,
    Spectrum,
};
use zetaflow::thermo::{entropy_conformal, log_partition_conformal};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Parse = 3,
    Validation = 4,
    Numerical = 5,
    Io = 6,
    Panic = 7,
}

impl From<&Error> for ZfStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse { .. } => ZfStatus::Parse,
            Error::Validation { .. } => ZfStatus::Validation,
            Error::InvalidInput(_) => ZfStatus::InvalidInput,
            Error::Numerical(_) => ZfStatus::Numerical,
            Error::Io(_) => ZfStatus::Io,
        }
    }
}

/// Triangle mesh handle.
pub struct ZfMesh(Arc<TriMesh>);

/// Conformal metric handle.
pub struct ZfMetric(ConformalMetric);

/// Ascending eigenvalue list handle.
pub struct ZfSpectrum(Spectrum);

/// Finite-dimensional Gaussian model handle.
pub struct ZfModel(FiniteModel);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ZfTopology {
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub chi: i64,
    pub genus: i64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ZfZeta {
    pub zeta0: f64,
    pub zeta0_empirical: f64,
    pub zeta_prime0: f64,
    pub log_det: f64,
    pub t0: f64,
    pub tail_bound: f64,
    pub quad_error: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ZfClassic {
    pub lhs: f64,
    pub rhs: f64,
    pub closed_form: f64,
    pub rel_diff: f64,
    pub equal: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into the library on this
/// thread.
#[no_mangle]
pub extern "C" fn zf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn zf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ZfStatus {
    set_error(String::new());
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ZfStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            ZfStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            ZfStatus::from(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            ZfStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: the caller passes a handle from this library or null.
    unsafe { p.as_ref() }.ok_or(Failure::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: the caller passes writable storage for one `T` or null.
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    // SAFETY: the caller guarantees `len` readable doubles at `p`.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        // SAFETY: non-null handles come from `boxed` and are freed once.
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Icosahedron subdivided `subdivisions` times and projected to the unit
/// sphere.
///
/// # Safety
/// `mesh` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zf_mesh_icosphere(subdivisions: u32, mesh: *mut *mut ZfMesh) -> ZfStatus {
    guard(|| {
        let slot = unsafe { out(mesh, "mesh") }?;
        *slot = boxed(ZfMesh(Arc::new(generate_icosphere(subdivisions)?)));
        Ok(())
    })
}

/// Flat torus on an `m × n` grid of unit area.
///
/// # Safety
/// `mesh` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zf_mesh_flat_torus(m: usize, n: usize, aspect: f64, mesh: *mut *mut ZfMesh) -> ZfStatus {
    guard(|| {
        let slot = unsafe { out(mesh, "mesh") }?;
        *slot = boxed(ZfMesh(Arc::new(generate_flat_torus(m, n, aspect)?)));
        Ok(())
    })
}

/// Reads an OFF file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `mesh` writable.
#[no_mangle]
pub unsafe extern "C" fn zf_mesh_load_off(path: *const c_char, mesh: *mut *mut ZfMesh) -> ZfStatus {
    guard(|| {
        if path.is_null() {
            return Err(Failure::Null("path"));
        }
        // SAFETY: checked non-null; the caller guarantees termination.
        let path = unsafe { CStr::from_ptr(path) }
            .to_str()
            .map_err(|_| Error::InvalidInput("path is not UTF-8".into()))?;
        let slot = unsafe { out(mesh, "mesh") }?;
        *slot = boxed(ZfMesh(Arc::new(load_off(path)?)));
        Ok(())
    })
}

/// # Safety
/// `mesh` must be a live handle; `topology` writable.
#[no_mangle]
pub unsafe extern "C" fn zf_mesh_topology(mesh: *const ZfMesh, topology: *mut ZfTopology) -> ZfStatus {
    guard(|| {
        let t = unsafe { deref(mesh, "mesh") }?.0.topology();
        *unsafe { out(topology, "topology") }? = ZfTopology {
            vertices: t.vertices,
            edges: t.edges,
            faces: t.faces,
            chi: t.chi,
            genus: t.genus,
        };
        Ok(())
    })
}

/// # Safety
/// `mesh` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zf_mesh_free(mesh: *mut ZfMesh) {
    unsafe { free(mesh) }
}

/// Base metric of a mesh. The metric keeps its own reference to the mesh.
///
/// # Safety
/// `mesh` must be a live handle; `metric` writable.
#[no_mangle]
pub unsafe extern "C" fn zf_metric_new(mesh: *const ZfMesh, metric: *mut *mut ZfMetric) -> ZfStatus {
    guard(|| {
        let m = unsafe { deref(mesh, "mesh") }?;
        let slot = unsafe { out(metric, "metric") }?;
        *slot = boxed(ZfMetric(base_metric(Arc::clone(&m.0))?));
        Ok(())
    })
}

/// New metric `e^{2u}` times the base metric of `metric`.
///
/// # Safety
/// `metric` must be a live handle, `u` must hold `len` doubles and `result`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn zf_metric_with_u(
    metric: *const ZfMetric,
    u: *const f64,
    len: usize,
    result: *mut *mut ZfMetric,
) -> ZfStatus {
    guard(|| {
        let m = unsafe { deref(metric, "metric") }?;
        let u = unsafe { slice(u, len, "u") }?;
        let slot = unsafe { out(result, "result") }?;
        *slot = boxed(ZfMetric(m.0.with_u(u.to_vec())?));
        Ok(())
    })
}

/// # Safety
/// `metric` must be a live handle; `area` writable.
#[no_mangle]
pub unsafe extern "C" fn zf_metric_area(metric: *const ZfMetric, area: *mut f64) -> ZfStatus {
    guard(|| {
        *unsafe { out(area, "area") }? = unsafe { deref(metric, "metric") }?.0.area();
        Ok(())
    })
}

/// Returns 0 for a null handle.
///
/// # Safety
/// `metric` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zf_metric_num_vertices(metric: *const ZfMetric) -> usize {
    unsafe { metric.as_ref() }.map_or(0, |m| m.0.num_vertices())
}

/// Right side of the conformal anomaly formula for `g = e^ψ h`.
///
/// # Safety
/// `metric` must be a live handle, `psi` must hold `len` doubles and `value`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn zf_polyakov_rhs(
    metric: *const ZfMetric,
    psi: *const f64,
    len: usize,
    value: *mut f64,
) -> ZfStatus {
    guard(|| {
        let m = unsafe { deref(metric, "metric") }?;
        let psi = unsafe { slice(psi, len, "psi") }?;
        *unsafe { out(value, "value") }? = polyakov_rhs(&m.0, psi)?;
        Ok(())
    })
}

/// # Safety
/// `metric` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zf_metric_free(metric: *mut ZfMetric) {
    unsafe { free(metric) }
}

/// Lowest `count` eigenvalues of the Laplacian of `metric`; 0 for all.
///
/// # Safety
/// `metric` must be a live handle; `spectrum` writable.
#[no_mangle]
pub unsafe extern "C" fn zf_spectrum_laplacian(
    metric: *const ZfMetric,
    count: usize,
    spectrum: *mut *mut ZfSpectrum,
) -> ZfStatus {
    guard(|| {
        let m = unsafe { deref(metric, "metric") }?;
        let slot = unsafe { out(spectrum, "spectrum") }?;
        let a = assemble(&m.0, &OperatorSpec::laplacian())?;
        let count = if count == 0 { EigenCount::All } else { EigenCount::Lowest(count) };
        *slot = boxed(ZfSpectrum(eigen_spectrum(&a, count)?));
        Ok(())
    })
}

/// Round sphere spectrum `l(l+1)/r²` up to `l_max`.
///
/// # Safety
/// `spectrum` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zf_spectrum_sphere(l_max: usize, radius: f64, spectrum: *mut *mut ZfSpectrum) -> ZfStatus {
    guard(|| {
        let slot = unsafe { out(spectrum, "spectrum") }?;
        *slot = boxed(ZfSpectrum(analytic_sphere_spectrum(l_max, radius)?));
        Ok(())
    })
}

/// Square flat torus spectrum for `|p|, |q| ≤ k_max`.
///
/// # Safety
/// `spectrum` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zf_spectrum_torus(k_max: usize, area: f64, spectrum: *mut *mut ZfSpectrum) -> ZfStatus {
    guard(|| {
        let slot = unsafe { out(spectrum, "spectrum") }?;
        *slot = boxed(ZfSpectrum(analytic_torus_spectrum(k_max, area)?));
        Ok(())
    })
}

/// Returns 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn zf_spectrum_len(spectrum: *const ZfSpectrum) -> usize {
    unsafe { spectrum.as_ref() }.map_or(0, |s| s.0.len())
}

/// Copies up to `capacity` eigenvalues into `values` and stores the number
/// copied in `written`.
///
/// # Safety
/// `spectrum` must be a live handle, `values` must have room for `capacity`
/// doubles and `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zf_spectrum_copy(
    spectrum: *const ZfSpectrum,
    values: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> ZfStatus {
    guard(|| {
        let s = unsafe { deref(spectrum, "spectrum") }?;
        let n = s.0.len().min(capacity);
        if n > 0 && values.is_null() {
            return Err(Failure::Null("values"));
        }
        if n > 0 {
            // SAFETY: non-null with room for `capacity >= n` doubles.
            unsafe { std::ptr::copy_nonoverlapping(s.0.eigenvalues().as_ptr(), values, n) };
        }
        *unsafe { out(written, "written") }? = n;
        Ok(())
    })
}

/// Spectrum multiplied by `beta`.
///
/// # Safety
/// `spectrum` must be a live handle; `result` writable.
#[no_mangle]
pub unsafe extern "C" fn zf_spectrum_scaled(
    spectrum: *const ZfSpectrum,
    beta: f64,
    result: *mut *mut ZfSpectrum,
) -> ZfStatus {
    guard(|| {
        let s = unsafe { deref(spectrum, "spectrum") }?;
        let slot = unsafe { out(result, "result") }?;
        *slot = boxed(ZfSpectrum(s.0.scaled(beta)?));
        Ok(())
    })
}

/// Zeta-regularized log determinant with split point `t0`.
///
/// # Safety
/// `spectrum` must be a live handle; `zeta` writable.
#[no_mangle]
pub unsafe extern "C" fn zf_log_det_zeta(spectrum: *const ZfSpectrum, t0: f64, zeta: *mut ZfZeta) -> ZfStatus {
    guard(|| {
        let s = unsafe { deref(spectrum, "spectrum") }?;
        let z = log_det_zeta(&s.0, t0)?;
        *unsafe { out(zeta, "zeta") }? = ZfZeta {
            zeta0: z.zeta0,
            zeta0_empirical: z.zeta0_empirical,
            zeta_prime0: z.zeta_prime0,
            log_det: z.log_det,
            t0: z.t0,
            tail_bound: z.tail_bound,
            quad_error: z.quad_error,
        };
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zf_spectrum_free(spectrum: *mut ZfSpectrum) {
    unsafe { free(spectrum) }
}

/// `(1/2 − χ/12) ln β`.
///
/// # Safety
/// `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zf_log_partition_conformal(beta: f64, chi: i64, value: *mut f64) -> ZfStatus {
    guard(|| {
        *unsafe { out(value, "value") }? = log_partition_conformal(beta, chi)?;
        Ok(())
    })
}

/// `(1/2 − χ/12)(ln β − 1)`.
///
/// # Safety
/// `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zf_entropy_conformal(beta: f64, chi: i64, value: *mut f64) -> ZfStatus {
    guard(|| {
        *unsafe { out(value, "value") }? = entropy_conformal(beta, chi)?;
        Ok(())
    })
}

/// Model from row-major `dim × dim` matrices `G` (symmetric positive
/// definite) and `A` (with `GA` symmetric positive definite).
///
/// # Safety
/// `g` and `a` must each hold `dim * dim` doubles; `model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn zf_model_new(dim: usize, g: *const f64, a: *const f64, model: *mut *mut ZfModel) -> ZfStatus {
    guard(|| {
        let len = dim
            .checked_mul(dim)
            .ok_or_else(|| Error::InvalidInput(format!("dimension {dim} is too large")))?;
        let json = ModelJson {
            dim,
            g: unsafe { slice(g, len, "G") }?.to_vec(),
            a: unsafe { slice(a, len, "A") }?.to_vec(),
        };
        let slot = unsafe { out(model, "model") }?;
        *slot = boxed(ZfModel(FiniteModel::from_json(&json)?));
        Ok(())
    })
}

/// Both sides of the temperature-scaling identity of the Gaussian integral.
///
/// # Safety
/// `model` must be a live handle; `result` writable.
#[no_mangle]
pub unsafe extern "C" fn zf_verify_classic(model: *const ZfModel, beta: f64, result: *mut ZfClassic) -> ZfStatus {
    guard(|| {
        let m = unsafe { deref(model, "model") }?;
        let c = verify_classic(&m.0, beta)?;
        *unsafe { out(result, "result") }? = ZfClassic {
            lhs: c.lhs,
            rhs: c.rhs,
            closed_form: c.closed_form,
            rel_diff: c.rel_diff,
            equal: c.equal,
        };
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn zf_model_free(model: *mut ZfModel) {
    unsafe { free(model) }
}
