//! Fock-state preparation through a resonantly coupled ancilla that is
//! re-measured in `|e⟩` after each free evolution. With durations that are
//! integer multiples of the target's vacuum-Rabi half period, each round is a
//! diagonal filter on the mode that approximates one step of a generalized
//! parity measurement.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{
    apply_filter, persistent_weight, CouplingParams, DiagonalFilter, PureState, C64,
};
use crate::record::RunRecord;

/// How `(size)/2^k` is turned into an integer round multiplier.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rounding {
    #[default]
    Floor,
    Ceil,
}

impl Rounding {
    /// `numerator / 2^shift` rounded, exact in integers.
    pub fn halve(self, numerator: u64, shift: u32) -> u64 {
        if shift >= 64 {
            return match self {
                Rounding::Floor => 0,
                Rounding::Ceil => u64::from(numerator > 0),
            };
        }
        let floor = numerator >> shift;
        match self {
            Rounding::Floor => floor,
            Rounding::Ceil if floor << shift == numerator => floor,
            Rounding::Ceil => floor + 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Rounding::Floor => "floor",
            Rounding::Ceil => "ceil",
        }
    }
}

impl std::str::FromStr for Rounding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "floor" => Ok(Rounding::Floor),
            "ceil" => Ok(Rounding::Ceil),
            other => Err(Error::invalid(format!("unknown rounding '{other}'"))),
        }
    }
}

/// `n`-photon Rabi frequency `√(Δ²/4 + (n+1)g²)`.
pub fn rabi_frequency(n: usize, params: &CouplingParams) -> f64 {
    (params.delta * params.delta / 4.0 + (n as f64 + 1.0) * params.g * params.g).sqrt()
}

/// `sin(x)/x` with the removable singularity filled in.
pub(crate) fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `⟨e, n| exp(-i H_JC τ) |e, n⟩` for `H_JC = Δ|e⟩⟨e| + g(|e⟩⟨g|a + h.c.)`.
pub fn beta_coefficient(n: usize, tau: f64, params: &CouplingParams) -> C64 {
    let omega = rabi_frequency(n, params);
    let half_delta = params.delta / 2.0;
    let bracket = C64::new((omega * tau).cos(), -half_delta * tau * sinc(omega * tau));
    C64::from_polar(1.0, -half_delta * tau) * bracket
}

/// Round filter at resonance for a duration of `l` target half periods:
/// coefficients `cos(lπ√((n+1)/(n_t+1)))` for labels `0..dim`.
pub fn resonant_filter(n_t: usize, l: u64, g: f64, dim: usize) -> Result<DiagonalFilter> {
    if l < 1 {
        return Err(Error::invalid("round multiplier must be at least 1"));
    }
    if n_t >= dim {
        return Err(Error::invalid(format!(
            "target {n_t} outside truncated basis of size {dim}"
        )));
    }
    if !(g > 0.0) {
        return Err(Error::invalid("resonant coupling g must be positive"));
    }
    let target = n_t as f64 + 1.0;
    let coefficients = (0..dim)
        .map(|n| {
            let phase = l as f64 * PI * ((n as f64 + 1.0) / target).sqrt();
            C64::new(phase.cos(), 0.0)
        })
        .collect();
    DiagonalFilter::new(coefficients, l as f64 * PI / (target.sqrt() * g))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockRound {
    pub multiplier: u64,
    /// Seconds.
    pub duration: f64,
}

/// Round multipliers `l_k = round((n_t+1)/2^{k-1})`, clamped at 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockSchedule {
    n_t: usize,
    g: f64,
    rounding: Rounding,
    rounds: Vec<FockRound>,
}

impl FockSchedule {
    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn rounding(&self) -> Rounding {
        self.rounding
    }

    pub fn rounds(&self) -> &[FockRound] {
        &self.rounds
    }

    pub fn multipliers(&self) -> Vec<u64> {
        self.rounds.iter().map(|r| r.multiplier).collect()
    }

    /// Target half period `π/Ω_{n_t}` at resonance.
    pub fn half_period(&self) -> f64 {
        PI / (((self.n_t + 1) as f64).sqrt() * self.g)
    }

    pub fn total_time(&self) -> f64 {
        self.rounds.iter().map(|r| r.duration).sum()
    }

    /// Filter of 0-based round `k` on a basis of size `dim`.
    pub fn filter(&self, k: usize, dim: usize) -> Result<DiagonalFilter> {
        let round = self
            .rounds
            .get(k)
            .ok_or_else(|| Error::invalid(format!("schedule has no round {}", k + 1)))?;
        resonant_filter(self.n_t, round.multiplier, self.g, dim)
    }
}

pub fn build_fock_schedule(
    n_t: usize,
    rounds: usize,
    g: f64,
    rounding: Rounding,
) -> Result<FockSchedule> {
    if rounds < 1 {
        return Err(Error::invalid("schedule needs at least one round"));
    }
    if !(g > 0.0) {
        return Err(Error::invalid("resonant coupling g must be positive"));
    }
    let half_period = PI / (((n_t + 1) as f64).sqrt() * g);
    let mut clamped = 0;
    let rounds = (0..rounds)
        .map(|k| {
            let raw = rounding.halve(n_t as u64 + 1, k as u32);
            let multiplier = if raw < 1 {
                clamped += 1;
                1
            } else {
                raw
            };
            FockRound {
                multiplier,
                duration: multiplier as f64 * half_period,
            }
        })
        .collect();
    if clamped > 0 {
        log::warn!("n_t = {n_t}: {clamped} round(s) past l = 1 clamped to l = 1");
    }
    Ok(FockSchedule {
        n_t,
        g,
        rounding,
        rounds,
    })
}

fn check_mode_state(initial: &PureState, n_t: usize) -> Result<()> {
    if initial.basis_offset() != 0 {
        return Err(Error::invalid(
            "mode state must use Fock labels starting at 0",
        ));
    }
    if n_t >= initial.dim() {
        return Err(Error::invalid(format!(
            "target {n_t} outside truncated basis of size {}",
            initial.dim()
        )));
    }
    Ok(())
}

/// Runs the schedule on a closed system, measuring `|e⟩` every round.
pub fn run_ideal_protocol(initial: &PureState, schedule: &FockSchedule) -> Result<RunRecord> {
    check_mode_state(initial, schedule.n_t)?;
    let mut record = RunRecord::new(initial.clone());
    let mut state = initial.clone();
    for k in 0..schedule.rounds.len() {
        let filter = schedule
            .filter(k, state.dim())
            .map_err(|e| e.in_round(k + 1))?;
        let (next, prob) = apply_filter(&state, &filter).map_err(|e| e.in_round(k + 1))?;
        let fidelity = next.amplitudes()[schedule.n_t].norm_sqr();
        state = next;
        record.push_round(fidelity, prob, filter.elapsed_time(), state.clone());
    }
    Ok(record)
}

/// Limit of the cumulative success probability when the schedule is continued
/// indefinitely with `l = 1` rounds.
pub fn steady_state_success(initial: &PureState, schedule: &FockSchedule) -> Result<f64> {
    let record = run_ideal_protocol(initial, schedule)?;
    let terminal = resonant_filter(schedule.n_t, 1, schedule.g, initial.dim())?;
    Ok(record.cumulative_success() * persistent_weight(record.final_state(), &terminal)?)
}

/// Idealized projector onto the comb `{n_t + 2^N j} ∩ [0, dim)`.
pub fn gpm_operator(n_t: usize, rounds: usize, dim: usize) -> Result<DiagonalFilter> {
    if rounds < 1 {
        return Err(Error::invalid("GPM needs at least one round"));
    }
    let coefficients = (0..dim)
        .map(|n| {
            let on_comb = if rounds >= 63 {
                n == n_t
            } else {
                let period = 1u64 << rounds;
                (n as u64) % period == (n_t as u64) % period
            };
            C64::new(if on_comb { 1.0 } else { 0.0 }, 0.0)
        })
        .collect();
    DiagonalFilter::new(coefficients, 0.0)
}

/// Gaussian-model success probability after `N` comb rounds on a coherent
/// state with mean `n_t`.
pub fn success_prob_theory(n_t: usize, rounds: usize) -> Result<f64> {
    if n_t < 1 {
        return Err(Error::invalid("n_t must be at least 1"));
    }
    let nt = n_t as f64;
    let spacing = 2f64.powi(rounds.min(1000) as i32);
    let j_min = -((nt / spacing).floor());
    // exp(-x) underflows past x ≈ 745
    let j_max = ((2.0 * nt * 750.0).sqrt() / spacing).ceil();
    let mut sum = 0.0;
    let mut j = j_min;
    while j <= j_max {
        let x = j * spacing;
        sum += (-x * x / (2.0 * nt)).exp();
        j += 1.0;
    }
    Ok(sum / (2.0 * PI * nt).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{coherent_cutoff, coherent_state};

    fn coherent(n_t: usize) -> PureState {
        coherent_state(
            C64::new((n_t as f64).sqrt(), 0.0),
            coherent_cutoff(n_t as f64),
        )
        .unwrap()
    }

    #[test]
    fn beta_at_target_half_period() {
        let p = CouplingParams::resonant(1e8);
        let tau = PI / rabi_frequency(100, &p);
        let b = beta_coefficient(100, tau, &p);
        assert!((b - C64::new(-1.0, 0.0)).norm() < 1e-12);
        assert_eq!(beta_coefficient(7, 0.0, &p), C64::new(1.0, 0.0));
    }

    #[test]
    fn beta_magnitude_bounded_detuned() {
        let p = CouplingParams {
            g: 1.0,
            chi: 0.0,
            delta: 2.0,
        };
        for n in 0..20 {
            for t in [0.1, 0.7, 3.3] {
                assert!(beta_coefficient(n, t, &p).norm() <= 1.0 + 1e-14);
            }
        }
    }

    #[test]
    fn filter_unit_at_target() {
        for l in [1, 2, 3, 50, 101] {
            let f = resonant_filter(100, l, 1e8, 200).unwrap();
            assert!((f.coefficients()[100].norm() - 1.0).abs() < 1e-12);
        }
        let f = resonant_filter(100, 101, 1e8, 200).unwrap();
        assert!((f.coefficients()[100].re + 1.0).abs() < 1e-12);
        assert!(resonant_filter(100, 0, 1e8, 200).is_err());
        assert!(resonant_filter(200, 1, 1e8, 200).is_err());
    }

    #[test]
    fn filter_matches_small_offset_expansion() {
        // first-order expansion of the square root; the remainder bounds the gap
        let n_t = 100usize;
        let target = n_t as f64 + 1.0;
        for l in [101u64, 50, 12, 3] {
            let f = resonant_filter(n_t, l, 1e8, 200).unwrap();
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            for n in (n_t - 10)..=(n_t + 10) {
                let d = n as f64 - n_t as f64;
                let x = d / target;
                let approx = sign * (l as f64 * PI * d / (2.0 * target)).cos();
                let remainder = l as f64 * PI * x * x / (8.0 * (1.0 + x.min(0.0)).powf(1.5));
                let gap = (f.coefficients()[n].re - approx).abs();
                assert!(gap <= remainder + 1e-12, "l = {l}, n = {n}");
                if d.abs() <= 3.0 || l <= 12 {
                    assert!(gap < 0.05, "l = {l}, n = {n}: {gap}");
                }
            }
        }
    }

    #[test]
    fn schedule_for_100_floor() {
        let s = build_fock_schedule(100, 5, 1e8, Rounding::Floor).unwrap();
        assert_eq!(s.multipliers(), vec![101, 50, 25, 12, 6]);
        let ns = s.total_time() * 1e9;
        assert!((ns - 606.0).abs() < 0.01 * 606.0, "{ns}");
        let expected = 194.0 * PI / (101f64.sqrt() * 1e8);
        assert!((s.total_time() - expected).abs() < 1e-20);
    }

    #[test]
    fn schedule_for_100_ceil() {
        let s = build_fock_schedule(100, 5, 1e8, Rounding::Ceil).unwrap();
        assert_eq!(s.multipliers(), vec![101, 51, 26, 13, 7]);
        let expected = 198.0 * PI / (101f64.sqrt() * 1e8);
        assert!((s.total_time() - expected).abs() < 1e-20);
    }

    #[test]
    fn schedule_single_round_and_clamp() {
        let s = build_fock_schedule(1, 1, 1e8, Rounding::Floor).unwrap();
        assert_eq!(s.multipliers(), vec![2]);
        assert!((s.rounds()[0].duration - 2.0 * PI / (2f64.sqrt() * 1e8)).abs() < 1e-22);
        let s = build_fock_schedule(5, 6, 1.0, Rounding::Floor).unwrap();
        assert_eq!(s.multipliers(), vec![6, 3, 1, 1, 1, 1]);
        let s = build_fock_schedule(5, 70, 1.0, Rounding::Ceil).unwrap();
        assert!(s.multipliers()[3..].iter().all(|&l| l == 1));
        assert!(build_fock_schedule(5, 0, 1.0, Rounding::Floor).is_err());
    }

    #[test]
    fn multipliers_strictly_decrease_until_one() {
        for n_t in [3usize, 64, 100, 777, 2000] {
            for rounding in [Rounding::Floor, Rounding::Ceil] {
                let l = build_fock_schedule(n_t, 16, 1.0, rounding)
                    .unwrap()
                    .multipliers();
                for w in l.windows(2) {
                    assert!(w[1] < w[0] || (w[0] == 1 && w[1] == 1), "{l:?}");
                }
            }
        }
    }

    #[test]
    fn target_state_untouched() {
        let s = build_fock_schedule(30, 6, 1e8, Rounding::Floor).unwrap();
        let psi = PureState::basis(60, 0, 30).unwrap();
        let r = run_ideal_protocol(&psi, &s).unwrap();
        for (f, p) in r
            .fidelity_per_round()
            .iter()
            .zip(r.success_prob_per_round())
        {
            assert!((f - 1.0).abs() < 1e-12);
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn protocol_rejects_offset_basis() {
        let s = build_fock_schedule(2, 2, 1.0, Rounding::Floor).unwrap();
        let psi = PureState::basis(5, -2, 0).unwrap();
        assert!(run_ideal_protocol(&psi, &s).is_err());
    }

    #[test]
    fn zero_probability_names_round() {
        // n_t = 15, l = 16, 8, 4, 2: vacuum coefficients cos(lπ/4) vanish at l = 2
        let s = build_fock_schedule(15, 4, 1.0, Rounding::Floor).unwrap();
        assert_eq!(s.multipliers()[3], 2);
        let mut amps = vec![0.0; 20];
        amps[0] = 1.0;
        let psi = PureState::from_real(&amps).unwrap();
        let err = run_ideal_protocol(&psi, &s).unwrap_err();
        assert!(matches!(err, Error::Round { round: 4, .. }), "{err}");
        assert!(matches!(err.root(), Error::ZeroProbability { .. }));
    }

    #[test]
    fn gpm_combs() {
        let ones = |f: &DiagonalFilter| -> Vec<usize> {
            f.coefficients()
                .iter()
                .enumerate()
                .filter(|(_, c)| c.re == 1.0)
                .map(|(i, _)| i)
                .collect()
        };
        assert_eq!(ones(&gpm_operator(4, 1, 9).unwrap()), vec![0, 2, 4, 6, 8]);
        assert_eq!(
            ones(&gpm_operator(100, 8, 700).unwrap()),
            vec![100, 356, 612]
        );
        assert_eq!(ones(&gpm_operator(5, 4, 12).unwrap()), vec![5]);
        assert_eq!(ones(&gpm_operator(5, 80, 12).unwrap()), vec![5]);
    }

    #[test]
    fn theory_probability_limits() {
        assert!((success_prob_theory(100, 1).unwrap() - 0.5).abs() < 1e-3);
        let asymptote = 1.0 / (2.0 * PI * 1600.0).sqrt();
        assert!((success_prob_theory(1600, 30).unwrap() - asymptote).abs() < 1e-15);
        assert!((asymptote - 0.00997).abs() < 1e-5);
        assert!(success_prob_theory(0, 3).is_err());
    }

    #[test]
    fn steady_state_is_target_overlap() {
        let psi = coherent(100);
        let s = build_fock_schedule(100, 10, 1e8, Rounding::Floor).unwrap();
        let p = steady_state_success(&psi, &s).unwrap();
        let overlap = psi.amplitudes()[100].norm_sqr();
        assert!((p - overlap).abs() < 1e-9, "{p} vs {overlap}");
    }

    #[test]
    fn rounding_halve_exact() {
        assert_eq!(Rounding::Floor.halve(101, 0), 101);
        assert_eq!(Rounding::Floor.halve(101, 3), 12);
        assert_eq!(Rounding::Ceil.halve(101, 3), 13);
        assert_eq!(Rounding::Ceil.halve(64, 3), 8);
        assert_eq!(Rounding::Ceil.halve(5, 90), 1);
        assert_eq!(Rounding::Floor.halve(5, 90), 0);
        assert_eq!("ceil".parse::<Rounding>().unwrap(), Rounding::Ceil);
        assert!("round".parse::<Rounding>().is_err());
    }
}
