//! C ABI for the gridplace library.
//!
//! A grid description is loaded once into an opaque [`GpGrid`] handle (JSON
//! in, operating point solved, network Laplacian assembled); measures,
//! susceptibilities and placement vectors are then queried through plain C
//! types. Every fallible entry point returns a [`GpStatus`]; on failure the
//! message for the most recent error on the calling thread is kept and can
//! be copied out with [`gp_last_error_message`].
//!
//! The generated header lives at `include/gridplace.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, UnwindSafe};

use nalgebra::DVector;

use gridplace::grid::{build_laplacian, homogenize, solve_power_flow, GridModel};
use gridplace::oracle::{measure_oracle, OracleOptions};
use gridplace::placement::{optimize_combined, optimize_damping, optimize_inertia, WeightKind};
use gridplace::response::{measure_closed_form, FaultSpec};
use gridplace::sensitivity::{
    aggregate_susceptibilities, susceptibility_report, PerturbationParams,
};
use gridplace::spectral::{eigendecompose, weighted_laplacian, Spectrum, Weighting};
use gridplace::{Error, Result};

/// Opaque handle to a validated grid with its operating point solved and its
/// network Laplacian assembled.
pub struct GpGrid {
    grid: GridModel,
    lap: nalgebra::DMatrix<f64>,
}

/// Status of an ABI call. Anything other than `Ok` leaves a thread-local
/// message retrievable with [`gp_last_error_message`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The input was rejected: malformed JSON, inconsistent grid data, an
    /// out-of-range index, or a mismatched buffer length.
    InvalidInput = 3,
    /// The computation failed numerically (no power-flow convergence,
    /// degenerate spectrum, unstable integration step, ...).
    Numerical = 4,
    /// An output buffer was too small for the requested string.
    BufferTooSmall = 5,
    /// An internal invariant was violated; the library aborted the call.
    Panic = 6,
}

/// Which budget a placement call should allocate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpTarget {
    /// ±1 inertia deviations only.
    Inertia = 0,
    /// ±1 damping-ratio deviations only.
    Damping = 1,
    /// Both budgets under the decoupling constraint Σ r·a = 0.
    Combined = 2,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg.into());
}

fn clear_error() {
    LAST_ERROR.with(|slot| slot.borrow_mut().clear());
}

/// User-side rejections map to `InvalidInput`, numerical failures to
/// `Numerical` — the same split the CLI uses for its exit codes.
fn classify(err: &Error) -> GpStatus {
    match err {
        Error::Parse(_)
        | Error::DuplicateBus(_)
        | Error::UnknownBus(_)
        | Error::SelfLoop(_)
        | Error::NonPositiveSusceptance { .. }
        | Error::NonPositiveParameter { .. }
        | Error::Disconnected
        | Error::UnbalancedInjections(_)
        | Error::MissingThreshold
        | Error::InvalidArgument(_)
        | Error::Io(_)
        | Error::Encode(_) => GpStatus::InvalidInput,
        Error::NoConvergence { .. }
        | Error::UnstableBranch { .. }
        | Error::SingularEliminationBlock
        | Error::NotSymmetric(_)
        | Error::MultipleZeroModes
        | Error::NoZeroMode(_)
        | Error::OverdampedMode { .. }
        | Error::DegenerateSpectrum { .. }
        | Error::NoFeasiblePair
        | Error::StepTooLarge { .. }
        | Error::HorizonTooShort { .. } => GpStatus::Numerical,
    }
}

fn fail(err: Error) -> GpStatus {
    let status = classify(&err);
    set_error(err.to_string());
    status
}

/// Runs the call body behind a panic guard so an internal bug surfaces as
/// [`GpStatus::Panic`] instead of unwinding across the C boundary.
fn guarded<F>(body: F) -> GpStatus
where
    F: FnOnce() -> GpStatus + UnwindSafe,
{
    match catch_unwind(body) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic; the call was abandoned");
            GpStatus::Panic
        }
    }
}

macro_rules! require {
    ($ptr:expr, $name:literal) => {
        if $ptr.is_null() {
            set_error(concat!("`", $name, "` must not be null"));
            return GpStatus::NullArgument;
        }
    };
}

/// Library version as a NUL-terminated static string.
#[no_mangle]
pub extern "C" fn gp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the message of the most recent failure on this thread into `buf`
/// and NUL-terminates it, truncating if necessary.
///
/// Returns the size the full message needs, including the terminator; call
/// with a null `buf` (or `cap` 0) to query the size alone. The message is
/// empty after a successful call.
///
/// # Safety
///
/// `buf`, when non-null, must point to at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gp_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        if !buf.is_null() && cap > 0 {
            let n = msg.len().min(cap - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        msg.len() + 1
    })
}

fn load(text: &str) -> Result<GpGrid> {
    let grid = GridModel::from_json_str(text)?;
    let angles = solve_power_flow(&grid, 1e-10, 50)?;
    let lap = build_laplacian(&grid, &angles);
    Ok(GpGrid { grid, lap })
}

/// Parses a JSON grid description, validates it, solves the lossless power
/// flow and assembles the network Laplacian.
///
/// On success writes a handle to `*out`; release it with [`gp_grid_free`].
///
/// # Safety
///
/// `json` must be a NUL-terminated string valid for reads and `out` a valid
/// pointer to a `GpGrid*` slot.
#[no_mangle]
pub unsafe extern "C" fn gp_grid_load_json(json: *const c_char, out: *mut *mut GpGrid) -> GpStatus {
    clear_error();
    guarded(move || {
        require!(json, "json");
        require!(out, "out");
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(text) => text,
            Err(_) => {
                set_error("grid JSON is not valid UTF-8");
                return GpStatus::InvalidUtf8;
            }
        };
        match load(text) {
            Ok(handle) => {
                unsafe { *out = Box::into_raw(Box::new(handle)) };
                GpStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Builds a copy of the grid with inertia, damping and net injections
/// replaced by their bus averages (totals conserved) and its operating point
/// re-solved. The susceptibility and placement calls require such a uniform
/// baseline.
///
/// # Safety
///
/// `grid` must be a live handle from this library and `out` a valid pointer
/// to a `GpGrid*` slot.
#[no_mangle]
pub unsafe extern "C" fn gp_grid_homogenize(
    grid: *const GpGrid,
    out: *mut *mut GpGrid,
) -> GpStatus {
    clear_error();
    guarded(move || {
        require!(grid, "grid");
        require!(out, "out");
        let g = unsafe { &*grid };
        let flat = homogenize(&g.grid);
        let result = solve_power_flow(&flat, 1e-10, 50).map(|angles| {
            let lap = build_laplacian(&flat, &angles);
            GpGrid { grid: flat, lap }
        });
        match result {
            Ok(handle) => {
                unsafe { *out = Box::into_raw(Box::new(handle)) };
                GpStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Releases a handle returned by [`gp_grid_load_json`] or
/// [`gp_grid_homogenize`]. Passing null is a no-op.
///
/// # Safety
///
/// `grid` must be null or a handle from this library that has not already
/// been freed; the handle must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gp_grid_free(grid: *mut GpGrid) {
    if !grid.is_null() {
        drop(unsafe { Box::from_raw(grid) });
    }
}

/// Writes the number of buses to `*out`.
///
/// # Safety
///
/// `grid` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gp_grid_bus_count(grid: *const GpGrid, out: *mut usize) -> GpStatus {
    clear_error();
    guarded(move || {
        require!(grid, "grid");
        require!(out, "out");
        unsafe { *out = (*grid).grid.n() };
        GpStatus::Ok
    })
}

/// Copies the NUL-terminated id of bus `index` into `buf`.
///
/// Bus indices are the grid's declaration order, shared by every array in
/// this ABI. Fails with `BufferTooSmall` (and reports the required size in
/// the error message) if `cap` bytes cannot hold the id plus terminator.
///
/// # Safety
///
/// `grid` must be a live handle and `buf` must point to at least `cap`
/// writable bytes.
#[no_mangle]
pub unsafe extern "C" fn gp_grid_bus_id(
    grid: *const GpGrid,
    index: usize,
    buf: *mut c_char,
    cap: usize,
) -> GpStatus {
    clear_error();
    guarded(move || {
        require!(grid, "grid");
        require!(buf, "buf");
        let g = unsafe { &*grid };
        if index >= g.grid.n() {
            set_error(format!(
                "bus index {index} out of range (N = {})",
                g.grid.n()
            ));
            return GpStatus::InvalidInput;
        }
        let id = &g.grid.buses()[index].id;
        if cap < id.len() + 1 {
            set_error(format!("bus id needs {} bytes, got {cap}", id.len() + 1));
            return GpStatus::BufferTooSmall;
        }
        unsafe {
            std::ptr::copy_nonoverlapping(id.as_ptr(), buf as *mut u8, id.len());
            *buf.add(id.len()) = 0;
        }
        GpStatus::Ok
    })
}

/// The grid's damping ratio when `flag` is not a positive number; the flag
/// itself otherwise.
fn resolve_gamma(grid: &GridModel, flag: f64) -> Result<f64> {
    if flag.is_finite() && flag > 0.0 {
        return Ok(flag);
    }
    grid.homogeneous_gamma(1e-9).ok_or_else(|| {
        Error::InvalidArgument(
            "bus damping ratios are heterogeneous; pass an explicit gamma".into(),
        )
    })
}

/// Uniform inertia value, rejecting grids where it varies.
fn uniform_inertia(grid: &GridModel) -> Result<f64> {
    let m = grid.inertia_vector();
    let mean = m.mean();
    if (m.max() - m.min()).abs() > 1e-9 * mean {
        return Err(Error::InvalidArgument(
            "bus inertias are heterogeneous; homogenize the grid first".into(),
        ));
    }
    Ok(mean)
}

fn weighted_spectrum(g: &GpGrid) -> Result<(Spectrum, DVector<f64>)> {
    let m = g.grid.inertia_vector();
    let lm = weighted_laplacian(&g.lap, &m)?;
    let spec = eigendecompose(&lm, Weighting::Inertia(m.clone()))?;
    Ok((spec, m))
}

/// Closed-form frequency-disturbance measure for an abrupt power loss
/// `delta_p` at bus `bus`, from the spectrum of the inertia-weighted
/// Laplacian.
///
/// A `gamma` that is zero, negative or NaN means "use the grid's own damping
/// ratio", which must then be the same on every bus.
///
/// # Safety
///
/// `grid` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gp_measure_closed_form(
    grid: *const GpGrid,
    bus: usize,
    gamma: f64,
    delta_p: f64,
    out: *mut f64,
) -> GpStatus {
    clear_error();
    guarded(move || {
        require!(grid, "grid");
        require!(out, "out");
        let g = unsafe { &*grid };
        let result = (|| {
            if bus >= g.grid.n() {
                return Err(Error::InvalidArgument(format!(
                    "fault bus index {bus} out of range (N = {})",
                    g.grid.n()
                )));
            }
            let gamma = resolve_gamma(&g.grid, gamma)?;
            let (spec, m) = weighted_spectrum(g)?;
            measure_closed_form(&spec, m[bus], gamma, &FaultSpec { bus, delta_p })
        })();
        match result {
            Ok(value) => {
                unsafe { *out = value };
                GpStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Reference measure from direct integration of the swing dynamics with the
/// grid's own inertia and damping vectors. `dt` ≤ 0 picks a stable default;
/// the horizon grows until the energy tail is negligible.
///
/// # Safety
///
/// `grid` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gp_measure_oracle(
    grid: *const GpGrid,
    bus: usize,
    delta_p: f64,
    dt: f64,
    out: *mut f64,
) -> GpStatus {
    clear_error();
    guarded(move || {
        require!(grid, "grid");
        require!(out, "out");
        let g = unsafe { &*grid };
        let opts = OracleOptions {
            dt: (dt.is_finite() && dt > 0.0).then_some(dt),
            ..OracleOptions::default()
        };
        let m = g.grid.inertia_vector();
        let d = g.grid.damping_vector();
        match measure_oracle(&g.lap, &m, &d, &FaultSpec { bus, delta_p }, &opts) {
            Ok(est) => {
                unsafe { *out = est.value };
                GpStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// First-order susceptibilities of the measure for a fault of `delta_p` at
/// `fault_bus`: `rho[i]` is the sensitivity to a relative inertia deviation
/// of amplitude `mu` at bus `i`, `alpha[i]` to a relative damping-ratio
/// deviation of amplitude `g`. Both arrays receive one entry per bus and
/// `len` must equal the bus count.
///
/// Requires a uniform-inertia baseline (see [`gp_grid_homogenize`]).
///
/// # Safety
///
/// `grid` must be a live handle; `rho` and `alpha` must point to `len`
/// writable doubles each.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn gp_susceptibilities(
    grid: *const GpGrid,
    fault_bus: usize,
    gamma: f64,
    delta_p: f64,
    mu: f64,
    g: f64,
    include_zero_mode: bool,
    rho: *mut f64,
    alpha: *mut f64,
    len: usize,
) -> GpStatus {
    clear_error();
    guarded(move || {
        require!(grid, "grid");
        require!(rho, "rho");
        require!(alpha, "alpha");
        let handle = unsafe { &*grid };
        let n = handle.grid.n();
        if len != n {
            set_error(format!("len is {len}, but the grid has {n} buses"));
            return GpStatus::InvalidInput;
        }
        let result = (|| {
            let gamma = resolve_gamma(&handle.grid, gamma)?;
            let m0 = uniform_inertia(&handle.grid)?;
            let spec = eigendecompose(&handle.lap, Weighting::Unweighted)?;
            let params = PerturbationParams::homogeneous(m0, gamma, mu, g, n);
            let fault = FaultSpec {
                bus: fault_bus,
                delta_p,
            };
            susceptibility_report(&spec, &params, &fault, include_zero_mode)
        })();
        match result {
            Ok(report) => {
                unsafe {
                    std::ptr::copy_nonoverlapping(report.rho.as_slice().as_ptr(), rho, n);
                    std::ptr::copy_nonoverlapping(report.alpha.total.as_slice().as_ptr(), alpha, n);
                }
                GpStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Optimal ±1 placement of the selected budget(s) against vulnerability to
/// faults weighted by `eta` and sized by `delta_p` (per-bus arrays of `len`
/// doubles; either may be null for "1.0 everywhere").
///
/// Writes sign vectors to `r` (inertia) and `a` (damping ratio); the vector
/// of an unselected budget is zeroed. Requires a uniform-inertia baseline.
///
/// # Safety
///
/// `grid` must be a live handle; `eta` and `delta_p`, when non-null, must
/// point to `len` readable doubles; `r` and `a` must point to `len` writable
/// bytes each.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn gp_optimize(
    grid: *const GpGrid,
    target: GpTarget,
    gamma: f64,
    mu: f64,
    g: f64,
    eta: *const f64,
    delta_p: *const f64,
    r: *mut i8,
    a: *mut i8,
    len: usize,
) -> GpStatus {
    clear_error();
    guarded(move || {
        require!(grid, "grid");
        require!(r, "r");
        require!(a, "a");
        let handle = unsafe { &*grid };
        let n = handle.grid.n();
        if len != n {
            set_error(format!("len is {len}, but the grid has {n} buses"));
            return GpStatus::InvalidInput;
        }
        let gather = |ptr: *const f64| {
            if ptr.is_null() {
                DVector::from_element(n, 1.0)
            } else {
                DVector::from_fn(n, |i, _| unsafe { *ptr.add(i) })
            }
        };
        let eta = gather(eta);
        let delta_p = gather(delta_p);
        let result = (|| {
            let gamma = resolve_gamma(&handle.grid, gamma)?;
            let m0 = uniform_inertia(&handle.grid)?;
            let spec = eigendecompose(&handle.lap, Weighting::Unweighted)?;
            let params = PerturbationParams::homogeneous(m0, gamma, mu, g, n);
            let (rho_agg, alpha_agg) =
                aggregate_susceptibilities(&spec, &params, &eta, &delta_p, true)?;
            Ok(match target {
                GpTarget::Inertia => (optimize_inertia(&rho_agg), vec![0; n]),
                GpTarget::Damping => (vec![0; n], optimize_damping(&alpha_agg)),
                GpTarget::Combined => {
                    let placed = optimize_combined(&rho_agg, &alpha_agg, WeightKind::Uniform)?;
                    (placed.r, placed.a)
                }
            })
        })();
        match result {
            Ok((r_signs, a_signs)) => {
                unsafe {
                    std::ptr::copy_nonoverlapping(r_signs.as_ptr(), r, n);
                    std::ptr::copy_nonoverlapping(a_signs.as_ptr(), a, n);
                }
                GpStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}
