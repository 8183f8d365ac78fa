//! C ABI over `gpm-core`.
//!
//! States and run records are opaque heap handles created by `gpm_*_new` /
//! `gpm_run_*` and released with the matching `*_free`. Every fallible call
//! returns a [`GpmStatus`]; on failure the message is available from
//! [`gpm_last_error_message`] on the same thread until the next failing call.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gpm_core::dicke::{self, DickeEnsemble, XiIndexing};
use gpm_core::dispersive::{build_dispersive_schedule, run_dispersive_protocol};
use gpm_core::fock::{build_fock_schedule, run_ideal_protocol, Rounding};
use gpm_core::hilbert::{coherent_cutoff, coherent_state, PureState, C64};
use gpm_core::open_system::{
    noisy_coherent_state, run_noisy_protocol, NoiseParams, NoisyOptions, NoisySchedule,
};
use gpm_core::{Error, RunRecord};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Truncation = 3,
    ZeroProbability = 4,
    Integrator = 5,
    NotReached = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpmRounding {
    Floor = 0,
    Ceil = 1,
}

impl From<GpmRounding> for Rounding {
    fn from(r: GpmRounding) -> Self {
        match r {
            GpmRounding::Floor => Rounding::Floor,
            GpmRounding::Ceil => Rounding::Ceil,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GpmProtocol {
    Resonant = 0,
    Dispersive = 1,
}

/// Pure state of a bosonic mode or of a spin ensemble.
pub struct GpmState {
    state: PureState,
    /// Set for Dicke ensembles.
    spins: Option<usize>,
}

/// Per-round results of one protocol run.
pub struct GpmRecord {
    fidelity: Vec<f64>,
    success: Vec<f64>,
    cumulative: Vec<f64>,
    duration: Vec<f64>,
    total_time: f64,
    cumulative_success: f64,
    final_state: Option<GpmState>,
    final_populations: Vec<f64>,
}

impl GpmRecord {
    fn from_run<S>(
        record: &RunRecord<S>,
        final_state: Option<GpmState>,
        final_populations: Vec<f64>,
    ) -> Self {
        Self {
            fidelity: record.fidelity_per_round().to_vec(),
            success: record.success_prob_per_round().to_vec(),
            cumulative: record.cumulative_per_round().to_vec(),
            duration: record.duration_per_round().to_vec(),
            total_time: record.total_time(),
            cumulative_success: record.cumulative_success(),
            final_state,
            final_populations,
        }
    }

    fn closed(record: RunRecord, spins: Option<usize>) -> Self {
        let populations = record.final_state().populations();
        let state = record.final_state().clone();
        Self::from_run(&record, Some(GpmState { state, spins }), populations)
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn status_of(error: &Error) -> GpmStatus {
    match error.root() {
        Error::TruncationTooSmall { .. } => GpmStatus::Truncation,
        Error::ZeroProbability { .. } => GpmStatus::ZeroProbability,
        Error::StepUnderflow { .. } | Error::TooManySteps { .. } => GpmStatus::Integrator,
        Error::NotReached { .. } => GpmStatus::NotReached,
        _ => GpmStatus::InvalidArgument,
    }
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), (GpmStatus, String)>) -> GpmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => GpmStatus::Ok,
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".to_string());
            GpmStatus::Panic
        }
    }
}

fn core<T>(r: gpm_core::Result<T>) -> Result<T, (GpmStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (GpmStatus, String) {
    (GpmStatus::NullPointer, format!("{what} is NULL"))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (GpmStatus, String)> {
    // SAFETY: caller guarantees `p` is NULL or a live handle from this library.
    unsafe { p.as_ref() }.ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), (GpmStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    // SAFETY: `out` is non-NULL and the caller guarantees it is writable.
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), (GpmStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    if len < src.len() {
        return Err((
            GpmStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    // SAFETY: `out` is valid for `len >= src.len()` writes per the caller.
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), out, src.len()) };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gpm_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message of the last failing call on this thread, or NULL. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gpm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Coherent state with mean photon number `mean`, truncated at `n_max`
/// (0 picks a cutoff whose discarded tail is below 1e-12).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn gpm_coherent_state_new(
    mean: f64,
    n_max: usize,
    out: *mut *mut GpmState,
) -> GpmStatus {
    guard(|| {
        if !(mean >= 0.0 && mean.is_finite()) {
            return Err((
                GpmStatus::InvalidArgument,
                format!("mean must be >= 0, got {mean}"),
            ));
        }
        let n_max = if n_max == 0 {
            coherent_cutoff(mean)
        } else {
            n_max
        };
        let state = core(coherent_state(C64::new(mean.sqrt(), 0.0), n_max))?;
        unsafe { emit(out, GpmState { state, spins: None }) }
    })
}

/// Coherent state with mean `n_t` at the open-system cutoff (`n_t + 6√n_t`,
/// raised for small `n_t`), as used for noisy runs.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn gpm_noisy_coherent_state_new(
    n_t: usize,
    out: *mut *mut GpmState,
) -> GpmStatus {
    guard(|| {
        let state = core(noisy_coherent_state(n_t))?;
        unsafe { emit(out, GpmState { state, spins: None }) }
    })
}

/// Product state of `spins` spins at polar angle `phi`, in the symmetric
/// subspace (labels `m = -spins/2 ..= spins/2`).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn gpm_dicke_product_state_new(
    spins: usize,
    phi: f64,
    out: *mut *mut GpmState,
) -> GpmStatus {
    guard(|| {
        let ensemble = core(dicke::initial_product_state(spins, phi))?;
        unsafe {
            emit(
                out,
                GpmState {
                    state: ensemble.into_state(),
                    spins: Some(spins),
                },
            )
        }
    })
}

/// # Safety
/// `state` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gpm_state_free(state: *mut GpmState) {
    if !state.is_null() {
        // SAFETY: handle was produced by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(state) });
    }
}

/// Number of basis labels, or 0 for NULL.
///
/// # Safety
/// `state` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gpm_state_dim(state: *const GpmState) -> usize {
    unsafe { state.as_ref() }.map_or(0, |s| s.state.dim())
}

/// Label of the first basis element (0 for a mode, `-J` for spins).
///
/// # Safety
/// `state` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gpm_state_first_label(state: *const GpmState) -> i64 {
    unsafe { state.as_ref() }.map_or(0, |s| s.state.basis_offset())
}

/// Copies `|amplitude|²` for every label into `out[0..len)`.
///
/// # Safety
/// `state` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn gpm_state_populations(
    state: *const GpmState,
    out: *mut f64,
    len: usize,
) -> GpmStatus {
    guard(|| {
        let state = unsafe { borrow(state, "state") }?;
        unsafe { copy_out(&state.state.populations(), out, len) }
    })
}

/// Quantum Fisher information `4 Var(J_x)` of a spin-ensemble state.
///
/// # Safety
/// `state` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn gpm_dicke_qfi(state: *const GpmState, out: *mut f64) -> GpmStatus {
    guard(|| {
        let state = unsafe { borrow(state, "state") }?;
        let spins = state.spins.ok_or((
            GpmStatus::InvalidArgument,
            "state is not a spin ensemble".to_string(),
        ))?;
        let ensemble = core(DickeEnsemble::new(spins, state.state.clone()))?;
        if out.is_null() {
            return Err(null("out"));
        }
        unsafe { *out = dicke::qfi_x(&ensemble) };
        Ok(())
    })
}

/// Closed-system resonant protocol towards `|n_t⟩` over `rounds` rounds.
///
/// # Safety
/// `initial` must be a live mode-state handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gpm_run_fock(
    initial: *const GpmState,
    n_t: usize,
    rounds: usize,
    g: f64,
    rounding: GpmRounding,
    out: *mut *mut GpmRecord,
) -> GpmStatus {
    guard(|| {
        let initial = unsafe { borrow(initial, "initial") }?;
        let schedule = core(build_fock_schedule(n_t, rounds, g, rounding.into()))?;
        let record = core(run_ideal_protocol(&initial.state, &schedule))?;
        unsafe { emit(out, GpmRecord::closed(record, None)) }
    })
}

/// Closed-system dispersive protocol towards `|n_t⟩`.
///
/// # Safety
/// `initial` must be a live mode-state handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gpm_run_dispersive(
    initial: *const GpmState,
    n_t: usize,
    rounds: usize,
    chi: f64,
    out: *mut *mut GpmRecord,
) -> GpmStatus {
    guard(|| {
        let initial = unsafe { borrow(initial, "initial") }?;
        let schedule = core(build_dispersive_schedule(n_t, rounds, chi))?;
        let record = core(run_dispersive_protocol(&initial.state, &schedule))?;
        unsafe { emit(out, GpmRecord::closed(record, None)) }
    })
}

/// Hybrid Dicke protocol towards `|J, 0⟩` (literal ξ indexing).
///
/// # Safety
/// `initial` must be a live spin-state handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gpm_run_dicke(
    initial: *const GpmState,
    rounds: usize,
    g: f64,
    rounding: GpmRounding,
    out: *mut *mut GpmRecord,
) -> GpmStatus {
    guard(|| {
        let initial = unsafe { borrow(initial, "initial") }?;
        let spins = initial.spins.ok_or((
            GpmStatus::InvalidArgument,
            "state is not a spin ensemble".to_string(),
        ))?;
        let ensemble = core(DickeEnsemble::new(spins, initial.state.clone()))?;
        let schedule = core(dicke::build_dicke_schedule(
            spins,
            rounds,
            g,
            rounding.into(),
            XiIndexing::Literal,
        ))?;
        let record = core(dicke::run_dicke_protocol(&ensemble, &schedule))?;
        unsafe { emit(out, GpmRecord::closed(record, Some(spins))) }
    })
}

/// Lindblad simulation of either protocol. `g` is used by the resonant
/// protocol and `chi` by the dispersive one; rates are in s⁻¹ and
/// `tolerance` is the integrator's relative tolerance. The record carries
/// final mode populations but no final pure state.
///
/// # Safety
/// `initial` must be a live mode-state handle and `out` writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn gpm_run_noisy(
    initial: *const GpmState,
    protocol: GpmProtocol,
    n_t: usize,
    rounds: usize,
    g: f64,
    chi: f64,
    kappa: f64,
    gamma: f64,
    gamma_phi: f64,
    tolerance: f64,
    out: *mut *mut GpmRecord,
) -> GpmStatus {
    guard(|| {
        let initial = unsafe { borrow(initial, "initial") }?;
        let schedule = match protocol {
            GpmProtocol::Resonant => {
                NoisySchedule::Resonant(core(build_fock_schedule(n_t, rounds, g, Rounding::Floor))?)
            }
            GpmProtocol::Dispersive => {
                NoisySchedule::Dispersive(core(build_dispersive_schedule(n_t, rounds, chi))?)
            }
        };
        let noise = core(NoiseParams::new(kappa, gamma, gamma_phi))?;
        let options = NoisyOptions {
            tolerance,
            ..NoisyOptions::default()
        };
        let record = core(run_noisy_protocol(
            &initial.state,
            &schedule,
            &noise,
            &options,
        ))?;
        let populations = record.final_state().clone();
        unsafe { emit(out, GpmRecord::from_run(&record, None, populations)) }
    })
}

/// # Safety
/// `record` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gpm_record_free(record: *mut GpmRecord) {
    if !record.is_null() {
        // SAFETY: handle was produced by Box::into_raw in this library.
        drop(unsafe { Box::from_raw(record) });
    }
}

/// Number of rounds, or 0 for NULL.
///
/// # Safety
/// `record` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gpm_record_rounds(record: *const GpmRecord) -> usize {
    unsafe { record.as_ref() }.map_or(0, |r| r.fidelity.len())
}

/// Total protocol time in seconds (NaN for NULL).
///
/// # Safety
/// `record` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gpm_record_total_time(record: *const GpmRecord) -> f64 {
    unsafe { record.as_ref() }.map_or(f64::NAN, |r| r.total_time)
}

/// Product of all per-round success probabilities (NaN for NULL).
///
/// # Safety
/// `record` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gpm_record_cumulative_success(record: *const GpmRecord) -> f64 {
    unsafe { record.as_ref() }.map_or(f64::NAN, |r| r.cumulative_success)
}

unsafe fn copy_series(
    record: *const GpmRecord,
    field: impl FnOnce(&GpmRecord) -> &[f64],
    out: *mut f64,
    len: usize,
) -> GpmStatus {
    guard(|| {
        let record = unsafe { borrow(record, "record") }?;
        unsafe { copy_out(field(record), out, len) }
    })
}

/// Target-state fidelity after each round. Copies into `out[0..len)`.
///
/// # Safety
/// `record` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn gpm_record_fidelities(
    record: *const GpmRecord,
    out: *mut f64,
    len: usize,
) -> GpmStatus {
    unsafe { copy_series(record, |r| &r.fidelity, out, len) }
}

/// Heralding probability of each round. Copies into `out[0..len)`.
///
/// # Safety
/// `record` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn gpm_record_success_probs(
    record: *const GpmRecord,
    out: *mut f64,
    len: usize,
) -> GpmStatus {
    unsafe { copy_series(record, |r| &r.success, out, len) }
}

/// Running product of success probabilities. Copies into `out[0..len)`.
///
/// # Safety
/// `record` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn gpm_record_cumulative_probs(
    record: *const GpmRecord,
    out: *mut f64,
    len: usize,
) -> GpmStatus {
    unsafe { copy_series(record, |r| &r.cumulative, out, len) }
}

/// Duration of each round in seconds. Copies into `out[0..len)`.
///
/// # Safety
/// `record` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn gpm_record_durations(
    record: *const GpmRecord,
    out: *mut f64,
    len: usize,
) -> GpmStatus {
    unsafe { copy_series(record, |r| &r.duration, out, len) }
}

/// Length of the final population vector, or 0 for NULL.
///
/// # Safety
/// `record` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn gpm_record_population_len(record: *const GpmRecord) -> usize {
    unsafe { record.as_ref() }.map_or(0, |r| r.final_populations.len())
}

/// Populations of the final (mode or spin) state. Copies into `out[0..len)`.
///
/// # Safety
/// `record` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn gpm_record_final_populations(
    record: *const GpmRecord,
    out: *mut f64,
    len: usize,
) -> GpmStatus {
    unsafe { copy_series(record, |r| &r.final_populations, out, len) }
}

/// Copy of the final pure state of a closed-system run.
///
/// # Safety
/// `record` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn gpm_record_final_state(
    record: *const GpmRecord,
    out: *mut *mut GpmState,
) -> GpmStatus {
    guard(|| {
        let record = unsafe { borrow(record, "record") }?;
        let state = record.final_state.as_ref().ok_or((
            GpmStatus::InvalidArgument,
            "open-system records carry populations only".to_string(),
        ))?;
        unsafe {
            emit(
                out,
                GpmState {
                    state: state.state.clone(),
                    spins: state.spins,
                },
            )
        }
    })
}
