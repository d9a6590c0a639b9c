//! C ABI over `topo_superatom`.
//!
//! Parameter records and response systems are opaque heap handles created
//! by `ts_*_new` and released by the matching `ts_*_free`. Every fallible
//! call returns a [`TsStatus`]; on failure the message is kept per thread
//! and read back with [`ts_last_error_message`]. Output arrays are caller
//! owned: pass their length and receive [`TsStatus::BufferTooSmall`] when
//! it is short. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use topo_superatom::edgestates::analytic_edge_states;
use topo_superatom::lattice::{real_space_hamiltonian, spectrum, winding_number};
use topo_superatom::response::{effective_decay, response_at, susceptibility, DetuningConvention, LinearResponseSystem};
use topo_superatom::sweeps::{find_coherence_transition, SweepOptions};
use topo_superatom::{DissipationParams, DriveTarget, Error, LatticeParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParam = 2,
    NotTopological = 3,
    GapClosed = 4,
    SingularSystem = 5,
    NumericalFailure = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsTarget {
    LeftEdge = 0,
    RightEdge = 1,
    /// Eigenstate `bulk_index` in ascending energy order.
    Bulk = 2,
}

/// Opaque lattice parameters.
pub struct TsLattice(LatticeParams);
/// Opaque dissipation parameters.
pub struct TsDissipation(DissipationParams);
/// Opaque assembled response system.
pub struct TsResponse(LinearResponseSystem);

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

fn status_of(e: &Error) -> TsStatus {
    match e {
        Error::InvalidParam { .. } | Error::BadIndex { .. } | Error::DimensionMismatch { .. } | Error::Config(_) => {
            TsStatus::InvalidParam
        }
        Error::NotTopological { .. } => TsStatus::NotTopological,
        Error::GapClosed { .. } => TsStatus::GapClosed,
        Error::SingularSystem { .. } => TsStatus::SingularSystem,
        _ => TsStatus::NumericalFailure,
    }
}

/// Runs `f`, recording the error text on failure and trapping panics.
fn guard(f: impl FnOnce() -> Result<(), TsStatus>) -> TsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            TsStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            TsStatus::Panic
        }
    }
}

fn fail(e: Error) -> TsStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null() -> TsStatus {
    set_error("null pointer argument");
    TsStatus::NullPointer
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, TsStatus> {
    p.as_ref().ok_or_else(null)
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, TsStatus> {
    p.as_mut().ok_or_else(null)
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize) -> Result<&'a mut [f64], TsStatus> {
    if p.is_null() {
        return Err(null());
    }
    if len < need {
        set_error(&format!("buffer holds {len} values, {need} needed"));
        return Err(TsStatus::BufferTooSmall);
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

/// NUL-terminated library version; static storage, never freed.
#[no_mangle]
pub extern "C" fn ts_version() -> *const c_char {
    static V: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string has interior NUL"),
    };
    V.as_ptr()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`) and returns its full length.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ts_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = e.len().min(len - 1);
            std::ptr::copy_nonoverlapping(e.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        e.len()
    })
}

/// # Safety
/// `out_handle` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ts_lattice_new(
    delta: f64,
    t_p: f64,
    t_c: f64,
    n_cells: usize,
    out_handle: *mut *mut TsLattice,
) -> TsStatus {
    guard(|| {
        let slot = out(out_handle)?;
        let p = LatticeParams::new(delta, t_p, t_c, n_cells).map_err(fail)?;
        *slot = Box::into_raw(Box::new(TsLattice(p)));
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from [`ts_lattice_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn ts_lattice_free(handle: *mut TsLattice) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Chain dimension `2 N`; 0 for a null handle.
///
/// # Safety
/// `handle` must be null or a live lattice handle.
#[no_mangle]
pub unsafe extern "C" fn ts_lattice_dim(handle: *const TsLattice) -> usize {
    handle.as_ref().map_or(0, |l| l.0.dim())
}

/// Bulk winding number `|nu|` from `n_k` Brillouin-zone samples.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ts_winding_number(handle: *const TsLattice, n_k: usize, out_winding: *mut i32) -> TsStatus {
    guard(|| {
        let l = deref(handle)?;
        let w = out(out_winding)?;
        *w = winding_number(&l.0, n_k).map_err(fail)?.winding;
        Ok(())
    })
}

/// Open-chain eigenvalues in ascending order into `out_energies[0..2N]`.
///
/// # Safety
/// `out_energies` must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ts_spectrum(handle: *const TsLattice, out_energies: *mut f64, len: usize) -> TsStatus {
    guard(|| {
        let l = deref(handle)?;
        let dst = out_slice(out_energies, len, l.0.dim())?;
        let s = spectrum(&real_space_hamiltonian(&l.0)).map_err(fail)?;
        dst.copy_from_slice(&s.energies);
        Ok(())
    })
}

/// Closed-form left and right edge states, each `2N` long (A/B interleaved).
///
/// # Safety
/// Both output buffers must be valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ts_edge_states(
    handle: *const TsLattice,
    out_left: *mut f64,
    out_right: *mut f64,
    len: usize,
    out_localization_length: *mut f64,
) -> TsStatus {
    guard(|| {
        let l = deref(handle)?;
        let dim = l.0.dim();
        let left = out_slice(out_left, len, dim)?;
        let right = out_slice(out_right, len, dim)?;
        let e = analytic_edge_states(&l.0).map_err(fail)?;
        left.copy_from_slice(&e.psi_left);
        right.copy_from_slice(&e.psi_right);
        if let Some(x) = out_localization_length.as_mut() {
            *x = e.localization_length;
        }
        Ok(())
    })
}

/// # Safety
/// `out_handle` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn ts_dissipation_new(
    gamma_a: f64,
    gamma_b: f64,
    gamma_ab: f64,
    kappa: f64,
    out_handle: *mut *mut TsDissipation,
) -> TsStatus {
    guard(|| {
        let slot = out(out_handle)?;
        let d = DissipationParams::new(gamma_a, gamma_b, gamma_ab, kappa).map_err(fail)?;
        *slot = Box::into_raw(Box::new(TsDissipation(d)));
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from [`ts_dissipation_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn ts_dissipation_free(handle: *mut TsDissipation) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Assembles the driven system for `target`; `bulk_index` is read only for
/// [`TsTarget::Bulk`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ts_response_new(
    lattice: *const TsLattice,
    dissipation: *const TsDissipation,
    target: TsTarget,
    bulk_index: usize,
    xi_scale: f64,
    out_handle: *mut *mut TsResponse,
) -> TsStatus {
    guard(|| {
        let l = deref(lattice)?;
        let d = deref(dissipation)?;
        let slot = out(out_handle)?;
        let t = match target {
            TsTarget::LeftEdge => DriveTarget::LeftEdge,
            TsTarget::RightEdge => DriveTarget::RightEdge,
            TsTarget::Bulk => DriveTarget::BulkIndex(bulk_index),
        };
        let sys = LinearResponseSystem::assemble(&l.0, &d.0, &t, xi_scale).map_err(fail)?;
        *slot = Box::into_raw(Box::new(TsResponse(sys)));
        Ok(())
    })
}

/// # Safety
/// `handle` must be null or come from [`ts_response_new`], freed once.
#[no_mangle]
pub unsafe extern "C" fn ts_response_free(handle: *mut TsResponse) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// `chi(delta_a)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ts_susceptibility(
    handle: *const TsResponse,
    delta_a: f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> TsStatus {
    guard(|| {
        let s = deref(handle)?;
        let (re, im) = (out(out_re)?, out(out_im)?);
        let chi = susceptibility(&s.0, delta_a).map_err(fail)?;
        *re = chi.re;
        *im = chi.im;
        Ok(())
    })
}

/// Transmission at probe detuning `delta_c`; `shifted` selects the
/// convention `delta_a = delta_c` (nonzero) or `delta_a = 0` (zero).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ts_transmission(
    handle: *const TsResponse,
    delta_c: f64,
    shifted: i32,
    out_transmission: *mut f64,
) -> TsStatus {
    guard(|| {
        let s = deref(handle)?;
        let t = out(out_transmission)?;
        let conv = if shifted != 0 { DetuningConvention::Shifted } else { DetuningConvention::Unshifted };
        *t = response_at(&s.0, delta_c, conv).map_err(fail)?.transmission;
        Ok(())
    })
}

/// Effective decay on the target resonance; `out_dark` is set to 1 when
/// the mode is decoupled from loss (`gamma_eff` is then 0).
///
/// # Safety
/// `handle` and `out_gamma_eff` must be valid; `out_dark` may be null.
#[no_mangle]
pub unsafe extern "C" fn ts_effective_decay(
    handle: *const TsResponse,
    out_gamma_eff: *mut f64,
    out_dark: *mut i32,
) -> TsStatus {
    guard(|| {
        let s = deref(handle)?;
        let g = out(out_gamma_eff)?;
        let d = effective_decay(&s.0).map_err(fail)?;
        *g = d.gamma_eff;
        if let Some(flag) = out_dark.as_mut() {
            *flag = d.dark as i32;
        }
        Ok(())
    })
}

/// Coherence-transition point of the right edge mode with default sweep
/// options.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ts_coherence_transition(
    lattice: *const TsLattice,
    dissipation: *const TsDissipation,
    gamma_ab: f64,
    out_delta_m: *mut f64,
) -> TsStatus {
    guard(|| {
        let l = deref(lattice)?;
        let d = deref(dissipation)?;
        let o = out(out_delta_m)?;
        *o = find_coherence_transition(&l.0, &d.0, gamma_ab, &SweepOptions::default()).map_err(fail)?;
        Ok(())
    })
}
