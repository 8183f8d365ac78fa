//! Ramsey-type parity filtering with a dispersively coupled ancilla: Hadamard,
//! free evolution under `Δ|e⟩⟨e| − χ a†a |e⟩⟨e|`, Hadamard, measure `|g⟩`.
//! With `Δ = χ n_t` and `τ_k = π/(χ 2^{k-1})` the `k`-th round removes every
//! Fock component whose offset from `n_t` is not a multiple of `2^k`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{apply_filter, DiagonalFilter, PureState, C64};
use crate::record::RunRecord;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersiveSchedule {
    n_t: usize,
    chi: f64,
    delta: f64,
    durations: Vec<f64>,
}

impl DispersiveSchedule {
    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Detuning, always `chi · n_t`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn rounds(&self) -> usize {
        self.durations.len()
    }

    pub fn total_time(&self) -> f64 {
        self.durations.iter().sum()
    }
}

pub fn build_dispersive_schedule(
    n_t: usize,
    rounds: usize,
    chi: f64,
) -> Result<DispersiveSchedule> {
    if rounds < 1 {
        return Err(Error::invalid("schedule needs at least one round"));
    }
    if !(chi > 0.0) {
        return Err(Error::invalid("dispersive strength chi must be positive"));
    }
    let durations = (0..rounds)
        .map(|k| PI / (chi * 2f64.powi(k as i32)))
        .collect();
    Ok(DispersiveSchedule {
        n_t,
        chi,
        delta: chi * n_t as f64,
        durations,
    })
}

/// Ground-outcome filter of round `k` (1-based):
/// `e^{-iθₙ} cos θₙ` with `θₙ = (Δ − χn) τ_k / 2`.
pub fn dispersive_filter(
    schedule: &DispersiveSchedule,
    k: usize,
    dim: usize,
) -> Result<DiagonalFilter> {
    if k < 1 || k > schedule.rounds() {
        return Err(Error::invalid(format!(
            "round {k} outside 1..={}",
            schedule.rounds()
        )));
    }
    let tau = schedule.durations[k - 1];
    let coefficients = (0..dim)
        .map(|n| {
            let theta = (schedule.delta - schedule.chi * n as f64) * tau / 2.0;
            C64::from_polar(1.0, -theta) * theta.cos()
        })
        .collect();
    DiagonalFilter::new(coefficients, tau)
}

/// Runs every round with ideal, instantaneous Hadamards and `|g⟩` outcomes.
pub fn run_dispersive_protocol(
    initial: &PureState,
    schedule: &DispersiveSchedule,
) -> Result<RunRecord> {
    if initial.basis_offset() != 0 {
        return Err(Error::invalid(
            "mode state must use Fock labels starting at 0",
        ));
    }
    if schedule.n_t >= initial.dim() {
        return Err(Error::invalid(format!(
            "target {} outside truncated basis of size {}",
            schedule.n_t,
            initial.dim()
        )));
    }
    let mut record = RunRecord::new(initial.clone());
    let mut state = initial.clone();
    for k in 1..=schedule.rounds() {
        let filter = dispersive_filter(schedule, k, state.dim()).map_err(|e| e.in_round(k))?;
        let (next, prob) = apply_filter(&state, &filter).map_err(|e| e.in_round(k))?;
        let fidelity = next.amplitudes()[schedule.n_t].norm_sqr();
        state = next;
        record.push_round(fidelity, prob, filter.elapsed_time(), state.clone());
    }
    Ok(record)
}
