//! Dicke-state preparation in the spin-star model: a central ancilla spin
//! exchange-coupled to `M` peripheral spins in the symmetric subspace
//! `J = M/2`. Measuring the ancilla after each free evolution filters the
//! collective `J_z` distribution towards `|J, 0⟩`.
//!
//! Round 1 measures `|e⟩`; later rounds flip the ancilla and measure `|g⟩`,
//! which resolves the `m(m±1)` degeneracy of either branch on its own.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{sinc, Rounding};
use crate::hilbert::{
    apply_filter, persistent_weight, Ancilla, CouplingParams, DiagonalFilter, PureState, C64,
};
use crate::record::RunRecord;

/// Symmetric-subspace state of `M` spins over `m = −J..=J`.
#[derive(Debug, Clone, PartialEq)]
pub struct DickeEnsemble {
    spins: usize,
    state: PureState,
}

impl DickeEnsemble {
    /// Wraps a state labelled `−J..=J`; it must be normalized within 1e−12.
    pub fn new(spins: usize, state: PureState) -> Result<Self> {
        check_spins(spins)?;
        let j = (spins / 2) as i64;
        if state.dim() != spins + 1 {
            return Err(Error::DimensionMismatch {
                expected: spins + 1,
                actual: state.dim(),
            });
        }
        if state.basis_offset() != -j {
            return Err(Error::invalid(format!(
                "Dicke state must be labelled from m = {}, got {}",
                -j,
                state.basis_offset()
            )));
        }
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "Dicke state is not normalized (norm² = {norm})"
            )));
        }
        Ok(Self { spins, state })
    }

    /// `|J, m⟩`.
    pub fn basis(spins: usize, m: i64) -> Result<Self> {
        check_spins(spins)?;
        let j = (spins / 2) as i64;
        Self::new(spins, PureState::basis(spins + 1, -j, m)?)
    }

    pub fn spins(&self) -> usize {
        self.spins
    }

    /// Total spin `J = M/2`.
    pub fn total_spin(&self) -> f64 {
        self.spins as f64 / 2.0
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn into_state(self) -> PureState {
        self.state
    }

    /// `|⟨J, m|ψ⟩|²`.
    pub fn population(&self, m: i64) -> Result<f64> {
        Ok(self.state.amplitude(m)?.norm_sqr())
    }
}

fn check_spins(spins: usize) -> Result<()> {
    if spins < 2 || !spins.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "spin count must be even and at least 2, got {spins}"
        )));
    }
    Ok(())
}

/// `J(J+1) − m(m±1)`, with `+` for the `|e⟩` branch.
fn ladder_weight(m: f64, ancilla: Ancilla, j: f64) -> f64 {
    let shift = match ancilla {
        Ancilla::Excited => 1.0,
        Ancilla::Ground => -1.0,
    };
    j * (j + 1.0) - m * (m + shift)
}

/// Block frequency `Λ_m = √(Δ²/4 + 4g²[J(J+1) − m(m±1)])`.
pub fn block_frequency(m: f64, ancilla: Ancilla, j: f64, params: &CouplingParams) -> f64 {
    let w = ladder_weight(m, ancilla, j).max(0.0);
    (params.delta * params.delta / 4.0 + 4.0 * params.g * params.g * w).sqrt()
}

/// `⟨i, m| exp(−iH′τ) |i, m⟩` for `H′ = (Δ/2)σ_z + 2g(σ₊J₋ + σ₋J₊)`.
///
/// The `|e,m⟩` block couples to `|g,m+1⟩` and the `|g,m⟩` block to
/// `|e,m−1⟩`; edge states with no partner (`Λ = |Δ|/2`) come out as the pure
/// phase `e^{∓iΔτ/2}`.
pub fn lambda_coefficient(
    m: f64,
    ancilla: Ancilla,
    tau: f64,
    j: f64,
    params: &CouplingParams,
) -> C64 {
    assert!(m.abs() <= j + 1e-9, "m = {m} outside −J..=J for J = {j}");
    let lambda = block_frequency(m, ancilla, j, params);
    let half_delta = params.delta / 2.0;
    // Diagonal energy of |i,m⟩ in the 2×2 block is ±Δ/2.
    let energy = match ancilla {
        Ancilla::Excited => half_delta,
        Ancilla::Ground => -half_delta,
    };
    C64::new((lambda * tau).cos(), -energy * tau * sinc(lambda * tau))
}

/// Round filter of duration `ξπ/Λ_{m_t}` at resonance, over `m = −J..=J`:
/// `cos(ξπ√([J(J+1) − m(m±1)] / [J(J+1) − m_t(m_t±1)]))`.
pub fn dicke_filter(
    ancilla: Ancilla,
    xi: u64,
    m_t: i64,
    spins: usize,
    g: f64,
) -> Result<DiagonalFilter> {
    check_spins(spins)?;
    if xi < 1 {
        return Err(Error::invalid("ξ must be at least 1"));
    }
    if !(g > 0.0) {
        return Err(Error::invalid("coupling g must be positive"));
    }
    let j = (spins / 2) as i64;
    if m_t.abs() > j {
        return Err(Error::IndexOutOfRange {
            label: m_t,
            first: -j,
            last: j,
        });
    }
    let jf = j as f64;
    let target = ladder_weight(m_t as f64, ancilla, jf);
    if target <= 0.0 {
        return Err(Error::invalid(format!(
            "target m = {m_t} is dark in the {} branch",
            ancilla.label()
        )));
    }
    let coefficients = (-j..=j)
        .map(|m| {
            let ratio = ladder_weight(m as f64, ancilla, jf) / target;
            C64::new((xi as f64 * PI * ratio.max(0.0).sqrt()).cos(), 0.0)
        })
        .collect();
    DiagonalFilter::new(coefficients, xi as f64 * PI / (2.0 * g * target.sqrt()))
}

/// Which `ξ` the `|g⟩` rounds use.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum XiIndexing {
    /// Round `k ≥ 2` uses `ξ_{k−1}`, so rounds 1 and 2 share `ξ_1`.
    #[default]
    Literal,
    /// Round `k ≥ 2` uses `ξ_k`.
    Shifted,
}

impl std::str::FromStr for XiIndexing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(Self::Literal),
            "shifted" => Ok(Self::Shifted),
            other => Err(Error::invalid(format!(
                "unknown ξ indexing '{other}' (expected literal or shifted)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DickeRound {
    /// Ancilla preparation and heralded outcome.
    pub ancilla: Ancilla,
    pub xi: u64,
    /// Seconds.
    pub duration: f64,
}

/// Hybrid schedule targeting `m_t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DickeSchedule {
    spins: usize,
    g: f64,
    rounding: Rounding,
    indexing: XiIndexing,
    rounds: Vec<DickeRound>,
}

impl DickeSchedule {
    pub fn spins(&self) -> usize {
        self.spins
    }

    pub fn m_t(&self) -> i64 {
        0
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    pub fn indexing(&self) -> XiIndexing {
        self.indexing
    }

    pub fn rounds(&self) -> &[DickeRound] {
        &self.rounds
    }

    pub fn total_time(&self) -> f64 {
        self.rounds.iter().map(|r| r.duration).sum()
    }

    /// Filter of 0-based round `k`.
    pub fn filter(&self, k: usize) -> Result<DiagonalFilter> {
        let round = self
            .rounds
            .get(k)
            .ok_or_else(|| Error::invalid(format!("schedule has no round {}", k + 1)))?;
        dicke_filter(round.ancilla, round.xi, 0, self.spins, self.g)
    }
}

/// Round 1 is `(e, ξ_1)`, round `k ≥ 2` is `(g, ξ_{k−1})` (or `ξ_k` when
/// shifted), with `ξ_k = round(J(J+1)/2^k)` clamped at 1.
pub fn build_dicke_schedule(
    spins: usize,
    rounds: usize,
    g: f64,
    rounding: Rounding,
    indexing: XiIndexing,
) -> Result<DickeSchedule> {
    check_spins(spins)?;
    if rounds < 1 {
        return Err(Error::invalid("schedule needs at least one round"));
    }
    if !(g > 0.0) {
        return Err(Error::invalid("coupling g must be positive"));
    }
    let j = (spins / 2) as u64;
    let jj = j * (j + 1);
    let mut clamped = 0;
    let mut xi = |k: usize| {
        let raw = rounding.halve(jj, k as u32);
        if raw < 1 {
            clamped += 1;
            1
        } else {
            raw
        }
    };
    let mut out = Vec::with_capacity(rounds);
    for k in 1..=rounds {
        let (ancilla, xi) = match (k, indexing) {
            (1, _) => (Ancilla::Excited, xi(1)),
            (_, XiIndexing::Literal) => (Ancilla::Ground, xi(k - 1)),
            (_, XiIndexing::Shifted) => (Ancilla::Ground, xi(k)),
        };
        let duration = dicke_filter(ancilla, xi, 0, spins, g)?.elapsed_time();
        out.push(DickeRound {
            ancilla,
            xi,
            duration,
        });
    }
    if clamped > 0 {
        log::warn!("M = {spins}: {clamped} round(s) past ξ = 1 clamped to ξ = 1");
    }
    Ok(DickeSchedule {
        spins,
        g,
        rounding,
        indexing,
        rounds: out,
    })
}

/// Number of rounds after which the literal schedule reaches `ξ = 1`.
pub fn rounds_to_unit_xi(spins: usize) -> usize {
    let j = (spins / 2) as u64;
    let jj = (j * (j + 1)).max(1);
    // ξ_{k−1} = 1 first at k − 1 = ⌊log₂ J(J+1)⌋.
    (63 - jj.leading_zeros()) as usize + 1
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

/// Product state with every spin at polar angle `φ`:
/// `p(m) = √C(M, m+J) cos^{J−m}(φ/2) sin^{J+m}(φ/2)`.
pub fn initial_product_state(spins: usize, phi: f64) -> Result<DickeEnsemble> {
    check_spins(spins)?;
    if !phi.is_finite() {
        return Err(Error::invalid("φ must be finite"));
    }
    let (c, s) = ((phi / 2.0).cos(), (phi / 2.0).sin());
    let amplitudes: Vec<f64> = (0..=spins)
        .map(|k| {
            // k = m + J excited spins.
            let (down, up) = ((spins - k) as f64, k as f64);
            let mut ln = 0.5 * ln_binomial(spins, k);
            let mut sign = 1.0;
            for (base, power) in [(c, down), (s, up)] {
                if power == 0.0 {
                    continue;
                }
                if base == 0.0 {
                    return 0.0;
                }
                ln += power * base.abs().ln();
                if base < 0.0 && (power as u64) % 2 == 1 {
                    sign = -sign;
                }
            }
            sign * ln.exp()
        })
        .collect();
    let j = (spins / 2) as i64;
    let state =
        PureState::new(amplitudes.iter().map(|&a| C64::new(a, 0.0)).collect(), -j)?.normalized()?;
    DickeEnsemble::new(spins, state)
}

/// `arccos(−2m_t/M)`, which maximizes `|p(m_t)|²`.
pub fn optimal_phi(m_t: i64, spins: usize) -> Result<f64> {
    if 2 * m_t.unsigned_abs() as usize > spins {
        return Err(Error::invalid(format!(
            "|2m_t| = {} exceeds M = {spins}",
            2 * m_t.abs()
        )));
    }
    Ok((-2.0 * m_t as f64 / spins as f64).acos())
}

fn check_match(initial: &DickeEnsemble, schedule: &DickeSchedule) -> Result<()> {
    if initial.spins != schedule.spins {
        return Err(Error::DimensionMismatch {
            expected: schedule.spins + 1,
            actual: initial.spins + 1,
        });
    }
    Ok(())
}

/// Applies each round's filter with renormalization; fidelity is `|⟨J,0|ψ⟩|²`.
pub fn run_dicke_protocol(initial: &DickeEnsemble, schedule: &DickeSchedule) -> Result<RunRecord> {
    check_match(initial, schedule)?;
    let mut record = RunRecord::new(initial.state.clone());
    let mut state = initial.state.clone();
    for k in 0..schedule.rounds.len() {
        let filter = schedule.filter(k).map_err(|e| e.in_round(k + 1))?;
        let (next, prob) = apply_filter(&state, &filter).map_err(|e| e.in_round(k + 1))?;
        let fidelity = next.amplitude(0)?.norm_sqr();
        state = next;
        record.push_round(fidelity, prob, filter.elapsed_time(), state.clone());
    }
    Ok(record)
}

/// Limit of the cumulative success probability when the schedule is
/// continued indefinitely with `(g, ξ = 1)` rounds.
pub fn steady_state_success(initial: &DickeEnsemble, schedule: &DickeSchedule) -> Result<f64> {
    let record = run_dicke_protocol(initial, schedule)?;
    let terminal = dicke_filter(Ancilla::Ground, 1, 0, schedule.spins, schedule.g)?;
    Ok(record.cumulative_success() * persistent_weight(record.final_state(), &terminal)?)
}

/// Idealized comb over `m = −J..=J`: ones at `m = 2^{N+1}j` and at
/// `m = 2^{N+1}j − 1` (`|e⟩`) or `2^{N+1}j + 1` (`|g⟩`).
pub fn dicke_gpm_operator(ancilla: Ancilla, rounds: usize, spins: usize) -> Result<DiagonalFilter> {
    check_spins(spins)?;
    if rounds < 1 {
        return Err(Error::invalid("GPM needs at least one round"));
    }
    let j = (spins / 2) as i64;
    let side = match ancilla {
        Ancilla::Excited => -1,
        Ancilla::Ground => 1,
    };
    let coefficients = (-j..=j)
        .map(|m| {
            let on = if rounds >= 62 {
                m == 0 || m == side
            } else {
                let period = 1i64 << (rounds + 1);
                let r = m.rem_euclid(period);
                r == 0 || r == side.rem_euclid(period)
            };
            C64::new(if on { 1.0 } else { 0.0 }, 0.0)
        })
        .collect();
    DiagonalFilter::new(coefficients, 0.0)
}

/// Pure-state quantum Fisher information for rotations about `x`:
/// `4⟨J_x²⟩ − 4⟨J_x⟩²`.
pub fn qfi_x(ensemble: &DickeEnsemble) -> f64 {
    let j = ensemble.total_spin();
    let amps = ensemble.state.amplitudes();
    let first = ensemble.state.basis_offset() as f64;
    // J_x ψ from ⟨m+1|J₊|m⟩ = √(J(J+1) − m(m+1)).
    let mut jx = vec![C64::new(0.0, 0.0); amps.len()];
    for i in 0..amps.len().saturating_sub(1) {
        let m = first + i as f64;
        let c = 0.5 * (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt();
        jx[i + 1] += amps[i] * c;
        jx[i] += amps[i + 1] * c;
    }
    let mean: C64 = amps.iter().zip(&jx).map(|(a, b)| a.conj() * b).sum();
    let second: f64 = jx.iter().map(|z| z.norm_sqr()).sum();
    4.0 * (second - mean.re * mean.re)
}

impl fmt::Display for DickeSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .rounds
            .iter()
            .map(|r| format!("({}, {})", r.ancilla.label(), r.xi))
            .collect();
        write!(f, "M={} [{}]", self.spins, parts.join(", "))
    }
}
