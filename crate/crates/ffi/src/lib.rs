//! C interface to the sphere-grf sampler.
//!
//! Every fallible function returns an [`SgStatus`]. On failure a message is
//! stored per thread and can be copied out with [`sg_last_error_message`].
//! Handles are opaque, created by `*_new`/`sg_icosphere` and released with
//! the matching `*_free`. Panics never cross the boundary; they are reported
//! as `SG_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use sphere_grf::convergence::monte_carlo_strong_error;
use sphere_grf::fractional::{sinc_nodes, ModelParams, Sampler};
use sphere_grf::mesh::{icosphere, TriangleMesh};
use sphere_grf::noise::NoiseMode;
use sphere_grf::sfem::FemSpace;
use sphere_grf::sparse::SolverConfig;
use sphere_grf::vtk::write_vtk_file;
use sphere_grf::Error;

/// Result codes of all fallible calls.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    NonConvergence = 4,
    Io = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgNoiseMode {
    Interpolate = 0,
    Project = 1,
}

/// Model and solver parameters of a sampler.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgParams {
    /// Smoothness exponent, must exceed 1/2.
    pub beta: f64,
    pub kappa: f64,
    /// Noise truncation degree `L`.
    pub degree: u32,
    /// Sinc quadrature step.
    pub k: f64,
    pub noise_mode: SgNoiseMode,
    /// Lifted quadrature order for noise projection (2 or 5).
    pub quad_order: u32,
    /// Relative residual tolerance of the conjugate gradient solves.
    pub cg_tol: f64,
    /// Iteration cap per solve; 0 selects ten times the system size.
    pub cg_max_iter: u64,
}

/// Opaque mesh handle.
pub struct SgMesh {
    mesh: Arc<TriangleMesh>,
}

/// Opaque sampler handle bound to one mesh and parameter set.
pub struct SgSampler {
    sampler: Sampler,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn fail(status: SgStatus, msg: impl Into<String>) -> SgStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> SgStatus {
    let status = match &e {
        Error::Io { .. } => SgStatus::Io,
        e if e.is_numerical() => SgStatus::NonConvergence,
        _ => SgStatus::InvalidArgument,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> SgStatus) -> SgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == SgStatus::Ok {
                set_error(String::new());
            }
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(SgStatus::Panic, format!("panic: {msg}"))
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(SgStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

fn to_model(p: &SgParams) -> Result<ModelParams, Error> {
    let mut m = ModelParams::new(p.beta, p.kappa, p.degree as usize, p.k)?;
    m.noise = match p.noise_mode {
        SgNoiseMode::Interpolate => NoiseMode::Interpolate,
        SgNoiseMode::Project => NoiseMode::Project(p.quad_order),
    };
    m.solver = SolverConfig {
        tolerance: p.cg_tol,
        max_iterations: (p.cg_max_iter > 0).then_some(p.cg_max_iter as usize),
        ..SolverConfig::default()
    };
    m.validate()?;
    Ok(m)
}

/// Copies the calling thread's last error message, NUL terminated and
/// truncated to `capacity` bytes, into `buffer`. Returns the full message
/// length plus one, so a return value above `capacity` signals truncation.
/// `buffer` may be null when `capacity` is 0.
///
/// # Safety
/// `buffer` must be valid for `capacity` bytes of writes.
#[no_mangle]
pub unsafe extern "C" fn sg_last_error_message(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buffer.is_null() && capacity > 0 {
            let n = bytes.len().min(capacity - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buffer.cast::<u8>(), n);
            *buffer.add(n) = 0;
        }
        bytes.len() + 1
    })
}

/// Library version as a static NUL terminated string.
#[no_mangle]
pub extern "C" fn sg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default parameters: beta 0.75, kappa 1, L 1, k 0.5, projected noise with
/// order 5, tolerance 1e-10 and the default iteration cap.
#[no_mangle]
pub extern "C" fn sg_params_default() -> SgParams {
    SgParams {
        beta: 0.75,
        kappa: 1.0,
        degree: 1,
        k: 0.5,
        noise_mode: SgNoiseMode::Project,
        quad_order: 5,
        cg_tol: 1e-10,
        cg_max_iter: 0,
    }
}

/// Builds the icosphere of the given refinement level.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn sg_icosphere(level: u32, out: *mut *mut SgMesh) -> SgStatus {
    guard(|| {
        non_null!(out);
        match icosphere(level) {
            Ok(mesh) => {
                *out = Box::into_raw(Box::new(SgMesh {
                    mesh: Arc::new(mesh),
                }));
                SgStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `mesh` must be null or a handle from [`sg_icosphere`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sg_mesh_free(mesh: *mut SgMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// # Safety
/// `mesh` must be a live handle; the outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sg_mesh_counts(
    mesh: *const SgMesh,
    n_vertices: *mut usize,
    n_triangles: *mut usize,
) -> SgStatus {
    guard(|| {
        non_null!(mesh, n_vertices, n_triangles);
        let m = &(*mesh).mesh;
        *n_vertices = m.n_vertices();
        *n_triangles = m.n_triangles();
        SgStatus::Ok
    })
}

/// Copies vertex coordinates as `x0 y0 z0 x1 ...`; `len` must be at least
/// three times the vertex count.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sg_mesh_vertices(
    mesh: *const SgMesh,
    out: *mut f64,
    len: usize,
) -> SgStatus {
    guard(|| {
        non_null!(mesh, out);
        let v = (*mesh).mesh.vertices();
        if len < 3 * v.len() {
            return fail(
                SgStatus::BufferTooSmall,
                format!("need {} values, got {len}", 3 * v.len()),
            );
        }
        let dst = std::slice::from_raw_parts_mut(out, 3 * v.len());
        for (chunk, p) in dst.chunks_exact_mut(3).zip(v) {
            chunk.copy_from_slice(p);
        }
        SgStatus::Ok
    })
}

/// Copies zero-based, counter-clockwise triangle vertex indices; `len`
/// must be at least three times the triangle count.
///
/// # Safety
/// `mesh` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sg_mesh_triangles(
    mesh: *const SgMesh,
    out: *mut u32,
    len: usize,
) -> SgStatus {
    guard(|| {
        non_null!(mesh, out);
        let t = (*mesh).mesh.triangles();
        if len < 3 * t.len() {
            return fail(
                SgStatus::BufferTooSmall,
                format!("need {} indices, got {len}", 3 * t.len()),
            );
        }
        let dst = std::slice::from_raw_parts_mut(out, 3 * t.len());
        for (chunk, tri) in dst.chunks_exact_mut(3).zip(t) {
            for (d, &i) in chunk.iter_mut().zip(tri) {
                *d = i as u32;
            }
        }
        SgStatus::Ok
    })
}

/// Largest in-circle radius and largest edge length over all triangles.
///
/// # Safety
/// `mesh` must be a live handle; the outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sg_mesh_size(
    mesh: *const SgMesh,
    h_inball: *mut f64,
    h_diam: *mut f64,
) -> SgStatus {
    guard(|| {
        non_null!(mesh, h_inball, h_diam);
        let h = (*mesh).mesh.mesh_size();
        *h_inball = h.h_inball;
        *h_diam = h.h_diam;
        SgStatus::Ok
    })
}

/// Sinc node counts `K+` and `K-` for fractional part `beta_frac` in (0, 1).
///
/// # Safety
/// The outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sg_sinc_node_counts(
    beta_frac: f64,
    k: f64,
    k_plus: *mut u64,
    k_minus: *mut u64,
) -> SgStatus {
    guard(|| {
        non_null!(k_plus, k_minus);
        match sinc_nodes(beta_frac, k) {
            Ok(q) => {
                *k_plus = q.k_plus;
                *k_minus = q.k_minus;
                SgStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Creates a sampler on `mesh`. The sampler keeps its own reference to the
/// mesh, so the mesh handle may be freed afterwards.
///
/// # Safety
/// `mesh` must be a live handle, `params` readable and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sg_sampler_new(
    mesh: *const SgMesh,
    params: *const SgParams,
    out: *mut *mut SgSampler,
) -> SgStatus {
    guard(|| {
        non_null!(mesh, params, out);
        let model = match to_model(&*params) {
            Ok(m) => m,
            Err(e) => return from_error(e),
        };
        let space = FemSpace::new(Arc::clone(&(*mesh).mesh));
        match Sampler::new(space, model) {
            Ok(sampler) => {
                *out = Box::into_raw(Box::new(SgSampler { sampler }));
                SgStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `sampler` must be null or a handle from [`sg_sampler_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sg_sampler_free(sampler: *mut SgSampler) {
    if !sampler.is_null() {
        drop(Box::from_raw(sampler));
    }
}

/// Draws sample `sample_index` of the stream `seed` and writes the nodal
/// field values to `field`. If `noise` is not null, the discrete noise is
/// written there too. Both buffers need `len` ≥ vertex count.
///
/// # Safety
/// `sampler` must be a live handle; `field` (and `noise` if not null) must
/// be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn sg_sampler_sample(
    sampler: *const SgSampler,
    sample_index: u64,
    seed: u64,
    field: *mut f64,
    noise: *mut f64,
    len: usize,
) -> SgStatus {
    guard(|| {
        non_null!(sampler, field);
        let s = &(*sampler).sampler;
        let n = s.space().dim();
        if len < n {
            return fail(
                SgStatus::BufferTooSmall,
                format!("need {n} values, got {len}"),
            );
        }
        let sample = match s.sample(sample_index, seed) {
            Ok(x) => x,
            Err(e) => return from_error(e),
        };
        std::slice::from_raw_parts_mut(field, n).copy_from_slice(sample.fem.values());
        if !noise.is_null() {
            std::slice::from_raw_parts_mut(noise, n).copy_from_slice(sample.noise_field.values());
        }
        SgStatus::Ok
    })
}

/// Draws a sample and writes it as a legacy VTK file with `field` and
/// `noise` point scalars.
///
/// # Safety
/// `sampler` must be a live handle and `path` a NUL terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn sg_sampler_write_vtk(
    sampler: *const SgSampler,
    sample_index: u64,
    seed: u64,
    path: *const c_char,
) -> SgStatus {
    guard(|| {
        non_null!(sampler, path);
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(SgStatus::InvalidArgument, "path is not valid UTF-8");
        };
        let s = &(*sampler).sampler;
        let result = s.sample(sample_index, seed).and_then(|sample| {
            let p = s.params();
            let title = format!(
                "beta={} kappa={} k={} L={} seed={seed}",
                p.beta, p.kappa, p.k, p.degree
            );
            write_vtk_file(
                Path::new(path),
                s.space().mesh(),
                &title,
                &[
                    ("field", sample.fem.values()),
                    ("noise", sample.noise_field.values()),
                ],
            )
        });
        match result {
            Ok(()) => SgStatus::Ok,
            Err(e) => from_error(e),
        }
    })
}

/// Monte Carlo strong error per level with common noise across levels.
/// `levels` must be strictly ascending; `errors` receives one value per
/// level.
///
/// # Safety
/// `params` must be readable, `levels` valid for `n_levels` reads and
/// `errors` for `n_levels` writes.
#[no_mangle]
pub unsafe extern "C" fn sg_strong_error(
    params: *const SgParams,
    levels: *const u32,
    n_levels: usize,
    n_samples: usize,
    seed: u64,
    errors: *mut f64,
) -> SgStatus {
    guard(|| {
        non_null!(params, levels, errors);
        let model = match to_model(&*params) {
            Ok(m) => m,
            Err(e) => return from_error(e),
        };
        let levels = std::slice::from_raw_parts(levels, n_levels);
        match monte_carlo_strong_error(&model, levels, n_samples, seed) {
            Ok(rows) => {
                let out = std::slice::from_raw_parts_mut(errors, n_levels);
                for (o, r) in out.iter_mut().zip(&rows) {
                    *o = r.strong_error;
                }
                SgStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
