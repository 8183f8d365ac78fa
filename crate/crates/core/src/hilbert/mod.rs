//! States, diagonal filters and the numerical plumbing shared by every
//! protocol: truncated number-basis pure states, composite ancilla⊗mode
//! density matrices, and an adaptive Runge-Kutta integrator.

mod density;
mod ode;

pub use density::{DensityMatrix, SparseOp};
pub use ode::{integrate_ode, Dopri5, IntegratorOptions, IntegratorStats};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Norm² below which a measurement outcome is treated as impossible.
pub const ZERO_PROBABILITY: f64 = 1e-15;

/// Largest tail mass a truncated coherent state may discard.
pub const TRUNCATION_TAIL_LIMIT: f64 = 1e-12;

/// Filters may exceed unit magnitude by at most this much (rounding).
const FILTER_MAGNITUDE_SLACK: f64 = 1e-12;

/// State of the two-level ancilla.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ancilla {
    Ground,
    Excited,
}

impl Ancilla {
    /// Position of the ancilla level in the composite basis.
    pub fn index(self) -> usize {
        match self {
            Ancilla::Ground => 0,
            Ancilla::Excited => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Ancilla::Ground => Ancilla::Excited,
            Ancilla::Excited => Ancilla::Ground,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Ancilla::Ground => "g",
            Ancilla::Excited => "e",
        }
    }
}

/// Coupling constants, all angular rates in s⁻¹.
///
/// `delta` is the ancilla detuning in the rotating frame; bare frequencies
/// never enter the model.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CouplingParams {
    pub g: f64,
    pub chi: f64,
    pub delta: f64,
}

impl CouplingParams {
    /// Exchange coupling `g` at resonance.
    pub fn resonant(g: f64) -> Self {
        Self {
            g,
            chi: 0.0,
            delta: 0.0,
        }
    }

    /// Dispersive shift `chi` with detuning `delta`.
    pub fn dispersive(chi: f64, delta: f64) -> Self {
        Self { g: 0.0, chi, delta }
    }
}

impl Default for CouplingParams {
    fn default() -> Self {
        Self {
            g: 1e8,
            chi: 2e6,
            delta: 0.0,
        }
    }
}

/// Pure state over a truncated number basis.
///
/// Basis labels run from `basis_offset` to `basis_offset + dim - 1`: Fock
/// states use offset 0, Dicke states `|J, m⟩` use offset `-J`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
    basis_offset: i64,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>, basis_offset: i64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("state dimension must be at least 1"));
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::invalid("state amplitudes must be finite"));
        }
        Ok(Self {
            amplitudes,
            basis_offset,
        })
    }

    /// Real amplitudes, offset 0.
    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| C64::new(a, 0.0)).collect(), 0)
    }

    /// The basis state carrying `label` in a basis of size `dim`.
    pub fn basis(dim: usize, basis_offset: i64, label: i64) -> Result<Self> {
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim.max(1)];
        let mut state = Self::new(std::mem::take(&mut amplitudes), basis_offset)?;
        let i = state.position(label)?;
        state.amplitudes[i] = C64::new(1.0, 0.0);
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn basis_offset(&self) -> i64 {
        self.basis_offset
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    /// Inclusive label range.
    pub fn label_range(&self) -> (i64, i64) {
        (
            self.basis_offset,
            self.basis_offset + self.amplitudes.len() as i64 - 1,
        )
    }

    /// Array position of a basis label.
    pub fn position(&self, label: i64) -> Result<usize> {
        let (first, last) = self.label_range();
        if label < first || label > last {
            return Err(Error::IndexOutOfRange { label, first, last });
        }
        Ok((label - first) as usize)
    }

    pub fn amplitude(&self, label: i64) -> Result<C64> {
        Ok(self.amplitudes[self.position(label)?])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Unit-norm copy; fails on the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let norm_sqr = self.norm_sqr();
        if norm_sqr < ZERO_PROBABILITY {
            return Err(Error::ZeroProbability {
                probability: norm_sqr,
            });
        }
        let scale = 1.0 / norm_sqr.sqrt();
        Ok(Self {
            amplitudes: self.amplitudes.iter().map(|a| a * scale).collect(),
            basis_offset: self.basis_offset,
        })
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// |⟨self|other⟩|² for normalized states.
    pub fn overlap(&self, other: &PureState) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }
}

/// Cutoff for coherent inputs of mean `n`: `ceil(n + 8√n)`, raised where the
/// Poisson tail above it still exceeds [`TRUNCATION_TAIL_LIMIT`] (small `n`).
pub fn coherent_cutoff(mean_excitation: f64) -> usize {
    let start = (mean_excitation + 8.0 * mean_excitation.sqrt())
        .ceil()
        .max(1.0) as usize;
    raise_cutoff(start, mean_excitation, TRUNCATION_TAIL_LIMIT)
}

/// Smallest cutoff `≥ start` whose Poisson tail is at most `limit`.
pub(crate) fn raise_cutoff(start: usize, mean: f64, limit: f64) -> usize {
    let mut n_max = start;
    while poisson_tail(n_max, mean) > limit {
        n_max += 1;
    }
    n_max
}

/// Natural log of the Poisson weight `e^{-μ} μⁿ / n!`.
fn ln_poisson(n: usize, mean: f64) -> f64 {
    if mean == 0.0 {
        return if n == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -mean + n as f64 * mean.ln() - libm::lgamma(n as f64 + 1.0)
}

/// Poisson mass strictly above `n_max`.
fn poisson_tail(n_max: usize, mean: f64) -> f64 {
    if mean == 0.0 {
        return 0.0;
    }
    if (n_max as f64) < mean {
        let head: f64 = (0..=n_max).map(|n| ln_poisson(n, mean).exp()).sum();
        return (1.0 - head).max(0.0);
    }
    // terms decrease monotonically past the mean
    let mut tail = 0.0;
    let mut n = n_max + 1;
    loop {
        let term = ln_poisson(n, mean).exp();
        tail += term;
        if term <= tail * 1e-17 || term == 0.0 {
            break;
        }
        n += 1;
    }
    tail
}

/// Coherent state |α⟩ truncated to labels `0..=n_max`, renormalized.
pub fn coherent_state(alpha: C64, n_max: usize) -> Result<PureState> {
    coherent_state_with_tail_limit(alpha, n_max, TRUNCATION_TAIL_LIMIT)
}

/// [`coherent_state`] with a caller-chosen bound on the discarded tail mass.
pub fn coherent_state_with_tail_limit(alpha: C64, n_max: usize, limit: f64) -> Result<PureState> {
    if n_max < 1 {
        return Err(Error::invalid("coherent state needs n_max >= 1"));
    }
    let mean = alpha.norm_sqr();
    let tail = poisson_tail(n_max, mean);
    if tail > limit {
        return Err(Error::TruncationTooSmall { n_max, tail, limit });
    }
    let phase = alpha.arg();
    let amplitudes = (0..=n_max)
        .map(|n| {
            let magnitude = (0.5 * ln_poisson(n, mean)).exp();
            C64::from_polar(magnitude, phase * n as f64)
        })
        .collect();
    PureState::new(amplitudes, 0)?.normalized()
}

/// |⟨label|ψ⟩|².
pub fn fidelity_with_basis_state(state: &PureState, label: i64) -> Result<f64> {
    Ok(state.amplitude(label)?.norm_sqr())
}

/// Diagonal non-unitary evolution: the ancilla-conditioned block ⟨i|U(τ)|i⟩
/// of a joint unitary, or an idealized projector comb.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalFilter {
    coefficients: Vec<C64>,
    elapsed_time: f64,
}

impl DiagonalFilter {
    pub fn new(coefficients: Vec<C64>, elapsed_time: f64) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::invalid("filter dimension must be at least 1"));
        }
        if !(elapsed_time >= 0.0) || !elapsed_time.is_finite() {
            return Err(Error::invalid(
                "filter duration must be finite and non-negative",
            ));
        }
        if let Some((i, c)) = coefficients
            .iter()
            .enumerate()
            .find(|(_, c)| !(c.norm() <= 1.0 + FILTER_MAGNITUDE_SLACK))
        {
            return Err(Error::invalid(format!(
                "filter coefficient {i} has magnitude {} > 1",
                c.norm()
            )));
        }
        Ok(Self {
            coefficients,
            elapsed_time,
        })
    }

    pub fn from_real(coefficients: &[f64], elapsed_time: f64) -> Result<Self> {
        Self::new(
            coefficients.iter().map(|&c| C64::new(c, 0.0)).collect(),
            elapsed_time,
        )
    }

    /// All-ones filter.
    pub fn identity(dim: usize) -> Self {
        Self {
            coefficients: vec![C64::new(1.0, 0.0); dim.max(1)],
            elapsed_time: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.coefficients
    }

    pub fn elapsed_time(&self) -> f64 {
        self.elapsed_time
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.norm()).collect()
    }

    /// Filter equal to applying `self` then `next`.
    pub fn then(&self, next: &DiagonalFilter) -> Result<Self> {
        if self.dim() != next.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: next.dim(),
            });
        }
        Ok(Self {
            coefficients: self
                .coefficients
                .iter()
                .zip(&next.coefficients)
                .map(|(a, b)| a * b)
                .collect(),
            elapsed_time: self.elapsed_time + next.elapsed_time,
        })
    }
}

/// Applies a filter, returning the renormalized state and the norm² of the
/// filtered vector (the outcome probability).
pub fn apply_filter(state: &PureState, filter: &DiagonalFilter) -> Result<(PureState, f64)> {
    if state.dim() != filter.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            actual: filter.dim(),
        });
    }
    let filtered: Vec<C64> = state
        .amplitudes
        .iter()
        .zip(&filter.coefficients)
        .map(|(a, c)| a * c)
        .collect();
    let probability: f64 = filtered.iter().map(|a| a.norm_sqr()).sum();
    if probability < ZERO_PROBABILITY {
        return Err(Error::ZeroProbability { probability });
    }
    let scale = 1.0 / probability.sqrt();
    let amplitudes = filtered.into_iter().map(|a| a * scale).collect();
    Ok((
        PureState {
            amplitudes,
            basis_offset: state.basis_offset,
        },
        probability,
    ))
}

/// Weight that survives infinitely many applications of `filter`:
/// `lim_{k→∞} ‖filterᵏ ψ‖²`, i.e. the population on entries of unit magnitude.
pub fn persistent_weight(state: &PureState, filter: &DiagonalFilter) -> Result<f64> {
    if state.dim() != filter.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            actual: filter.dim(),
        });
    }
    Ok(state
        .amplitudes
        .iter()
        .zip(&filter.coefficients)
        .filter(|(_, c)| c.norm() >= 1.0 - FILTER_MAGNITUDE_SLACK)
        .map(|(a, _)| a.norm_sqr())
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ln n! by direct summation, independent of lgamma.
    fn ln_factorial(n: usize) -> f64 {
        (1..=n).map(|k| (k as f64).ln()).sum()
    }

    #[test]
    fn vacuum_from_zero_amplitude() {
        let psi = coherent_state(C64::new(0.0, 0.0), 10).unwrap();
        assert_eq!(psi.dim(), 11);
        assert!((psi.amplitude(0).unwrap().norm_sqr() - 1.0).abs() < 1e-15);
        assert!(psi.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn coherent_population_at_mean_100() {
        let psi = coherent_state(C64::new(10.0, 0.0), coherent_cutoff(100.0)).unwrap();
        let p = fidelity_with_basis_state(&psi, 100).unwrap();
        let expected = (-100.0 + 100.0 * 100f64.ln() - ln_factorial(100)).exp();
        assert!((p - expected).abs() < 1e-13);
        assert!((p - 0.04).abs() < 0.002, "{p}");
    }

    #[test]
    fn coherent_population_at_mean_200() {
        let psi = coherent_state(C64::new(200f64.sqrt(), 0.0), coherent_cutoff(200.0)).unwrap();
        let p = fidelity_with_basis_state(&psi, 200).unwrap();
        let expected = (-200.0 + 200.0 * 200f64.ln() - ln_factorial(200)).exp();
        assert!((p - expected).abs() < 1e-13);
        assert!((p - 0.0282).abs() < 1e-4, "{p}");
    }

    #[test]
    fn cutoff_grows_for_small_means() {
        assert_eq!(coherent_cutoff(100.0), 180);
        assert!(coherent_cutoff(16.0) > 48);
        for mean in [0.5, 4.0, 16.0, 100.0, 2000.0] {
            assert!(poisson_tail(coherent_cutoff(mean), mean) <= TRUNCATION_TAIL_LIMIT);
        }
        assert!(coherent_state_with_tail_limit(C64::new(10.0, 0.0), 160, 1e-6).is_ok());
    }

    #[test]
    fn coherent_phase_is_carried() {
        let alpha = C64::from_polar(2.0, 0.3);
        let psi = coherent_state(alpha, 40).unwrap();
        let a3 = psi.amplitude(3).unwrap();
        assert!((a3.arg() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn coherent_truncation_too_small() {
        let err = coherent_state(C64::new(10.0, 0.0), 120).unwrap_err();
        assert!(matches!(err, Error::TruncationTooSmall { n_max: 120, .. }));
        assert!(coherent_state(C64::new(1.0, 0.0), 0).is_err());
    }

    #[test]
    fn basis_and_superposition_fidelity() {
        let five = PureState::basis(10, 0, 5).unwrap();
        assert_eq!(fidelity_with_basis_state(&five, 5).unwrap(), 1.0);
        let s = 0.5f64.sqrt();
        let plus = PureState::from_real(&[s, s]).unwrap();
        assert!((fidelity_with_basis_state(&plus, 0).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            fidelity_with_basis_state(&plus, 2),
            Err(Error::IndexOutOfRange {
                label: 2,
                first: 0,
                last: 1
            })
        ));
    }

    #[test]
    fn dicke_offset_labels() {
        let psi = PureState::basis(5, -2, -1).unwrap();
        assert_eq!(psi.label_range(), (-2, 2));
        assert_eq!(psi.position(-1).unwrap(), 1);
        assert!(psi.amplitude(3).is_err());
    }

    #[test]
    fn identity_filter_keeps_state() {
        let psi = coherent_state(C64::new(2.0, 0.0), 40).unwrap();
        let (out, p) = apply_filter(&psi, &DiagonalFilter::identity(psi.dim())).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        assert!((out.overlap(&psi).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn filter_killing_vacuum_is_impossible() {
        let vacuum = PureState::basis(4, 0, 0).unwrap();
        let filter = DiagonalFilter::from_real(&[0.0, 1.0, 1.0, 1.0], 0.0).unwrap();
        assert!(matches!(
            apply_filter(&vacuum, &filter),
            Err(Error::ZeroProbability { .. })
        ));
    }

    #[test]
    fn single_resonant_round_halves_coherent_state() {
        // direct summation of |c_n|² cos²(101π√((n+1)/101))
        let psi = coherent_state(C64::new(10.0, 0.0), coherent_cutoff(100.0)).unwrap();
        let coefs: Vec<f64> = (0..psi.dim())
            .map(|n| (101.0 * std::f64::consts::PI * ((n as f64 + 1.0) / 101.0).sqrt()).cos())
            .collect();
        let expected: f64 = psi
            .populations()
            .iter()
            .zip(&coefs)
            .map(|(p, c)| p * c * c)
            .sum();
        let (_, p) = apply_filter(&psi, &DiagonalFilter::from_real(&coefs, 0.0).unwrap()).unwrap();
        assert!((p - expected).abs() < 1e-14);
        assert!((p - 0.5).abs() < 0.01, "{p}");
    }

    #[test]
    fn rejects_amplifying_filter() {
        assert!(DiagonalFilter::from_real(&[1.0, 1.01], 0.0).is_err());
        assert!(DiagonalFilter::from_real(&[1.0], -1.0).is_err());
    }

    #[test]
    fn mismatched_dims() {
        let psi = PureState::basis(3, 0, 0).unwrap();
        assert!(matches!(
            apply_filter(&psi, &DiagonalFilter::identity(4)),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 4
            })
        ));
    }

    #[test]
    fn persistent_weight_counts_unit_entries() {
        let psi = PureState::from_real(&[0.6, 0.8]).unwrap();
        let f = DiagonalFilter::from_real(&[-1.0, 0.999], 0.0).unwrap();
        assert!((persistent_weight(&psi, &f).unwrap() - 0.36).abs() < 1e-15);
    }
}
