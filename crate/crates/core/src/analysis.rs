//! Round-count searches, scaling fits and the sweeps that feed them.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dicke::{self, build_dicke_schedule, initial_product_state, optimal_phi, XiIndexing};
use crate::error::{Error, Result};
use crate::fock::{build_fock_schedule, Rounding};
use crate::hilbert::{apply_filter, coherent_cutoff, coherent_state, CouplingParams, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Fock,
    Dicke,
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Fock => "fock",
            Self::Dicke => "dicke",
        })
    }
}

/// Knobs for [`min_rounds_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub cap: usize,
    pub rounding: Rounding,
    pub indexing: XiIndexing,
    pub g: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            cap: 20,
            rounding: Rounding::Floor,
            indexing: XiIndexing::Literal,
            g: CouplingParams::default().g,
        }
    }
}

/// Smallest `N` for which the ideal protocol reaches `threshold`, starting
/// from a coherent state `|√n_t⟩` (Fock) or the `φ = π/2` product state
/// (Dicke). `size` is `n_t` or `M`.
pub fn min_rounds(kind: TargetKind, size: usize, threshold: f64) -> Result<usize> {
    min_rounds_with(kind, size, threshold, &SearchOptions::default())
}

pub fn min_rounds_with(
    kind: TargetKind,
    size: usize,
    threshold: f64,
    options: &SearchOptions,
) -> Result<usize> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::invalid(format!(
            "threshold must lie in (0, 1), got {threshold}"
        )));
    }
    if options.cap < 1 {
        return Err(Error::invalid("round cap must be at least 1"));
    }
    let not_reached = Error::NotReached {
        threshold,
        cap: options.cap,
    };
    // Round k's filter does not depend on the total N, so one pass over a
    // cap-length schedule visits every candidate N in order.
    match kind {
        TargetKind::Fock => {
            let schedule = build_fock_schedule(size, options.cap, options.g, options.rounding)?;
            let mut state = coherent_state(
                C64::new((size as f64).sqrt(), 0.0),
                coherent_cutoff(size as f64),
            )?;
            for k in 0..options.cap {
                let filter = schedule.filter(k, state.dim())?;
                state = apply_filter(&state, &filter)
                    .map_err(|e| e.in_round(k + 1))?
                    .0;
                if state.amplitudes()[size].norm_sqr() >= threshold {
                    return Ok(k + 1);
                }
            }
            Err(not_reached)
        }
        TargetKind::Dicke => {
            let schedule = build_dicke_schedule(
                size,
                options.cap,
                options.g,
                options.rounding,
                options.indexing,
            )?;
            let mut state = initial_product_state(size, optimal_phi(0, size)?)?.into_state();
            for k in 0..options.cap {
                let filter = schedule.filter(k)?;
                state = apply_filter(&state, &filter)
                    .map_err(|e| e.in_round(k + 1))?
                    .0;
                if state.amplitude(0)?.norm_sqr() >= threshold {
                    return Ok(k + 1);
                }
            }
            Err(not_reached)
        }
    }
}

/// [`min_rounds_with`] over many sizes in parallel; results keep input order.
pub fn min_rounds_sweep(
    kind: TargetKind,
    sizes: &[usize],
    threshold: f64,
    options: &SearchOptions,
) -> Vec<Result<usize>> {
    sizes
        .par_iter()
        .map(|&s| min_rounds_with(kind, s, threshold, options))
        .collect()
}

/// `points` sizes spaced evenly in `log` between `lo` and `hi`, rounded to
/// a multiple of `step` and deduplicated.
pub fn log_grid(lo: usize, hi: usize, points: usize, step: usize) -> Result<Vec<usize>> {
    if lo < 1 || hi < lo || points < 2 || step < 1 {
        return Err(Error::invalid(format!(
            "bad grid: lo={lo}, hi={hi}, points={points}, step={step}"
        )));
    }
    let (a, b) = ((lo as f64).ln(), (hi as f64).ln());
    let mut out: Vec<usize> = (0..points)
        .map(|i| {
            let x = (a + (b - a) * i as f64 / (points - 1) as f64).exp();
            (((x / step as f64).round() as usize) * step).max(step)
        })
        .collect();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingModel {
    /// `N = log₂√s + c`; coefficients `[c]`.
    LogSqrtOffset,
    /// `N = a·log₂√s + c`; coefficients `[a, c]`.
    LogSqrtFree,
    /// `F = a·M² + b·M`; coefficients `[a, b]`.
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub model: ScalingModel,
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual.
    pub residual: f64,
}

impl ScalingFit {
    pub fn predict(&self, size: f64) -> f64 {
        let c = &self.coefficients;
        match self.model {
            ScalingModel::LogSqrtOffset => log2_sqrt(size) + c[0],
            ScalingModel::LogSqrtFree => c[0] * log2_sqrt(size) + c[1],
            ScalingModel::Quadratic => c[0] * size * size + c[1] * size,
        }
    }

    fn with_residual(model: ScalingModel, coefficients: Vec<f64>, points: &[(f64, f64)]) -> Self {
        let mut fit = Self {
            model,
            coefficients,
            residual: 0.0,
        };
        let sq: f64 = points
            .iter()
            .map(|&(x, y)| (y - fit.predict(x)).powi(2))
            .sum();
        fit.residual = (sq / points.len() as f64).sqrt();
        fit
    }
}

fn log2_sqrt(size: f64) -> f64 {
    0.5 * size.log2()
}

fn check_points(points: &[(f64, f64)], needed: usize) -> Result<()> {
    if points.len() < needed {
        return Err(Error::DegenerateInput {
            needed,
            got: points.len(),
        });
    }
    if points
        .iter()
        .any(|&(x, y)| !(x > 0.0 && x.is_finite() && y.is_finite()))
    {
        return Err(Error::invalid(
            "fit points need positive finite sizes and finite values",
        ));
    }
    Ok(())
}

/// Offset `c` of `N = log₂√s + c` by least squares (slope fixed at ½ in log₂).
pub fn fit_log_scaling(points: &[(f64, f64)]) -> Result<ScalingFit> {
    check_points(points, 3)?;
    let c = points.iter().map(|&(s, n)| n - log2_sqrt(s)).sum::<f64>() / points.len() as f64;
    Ok(ScalingFit::with_residual(
        ScalingModel::LogSqrtOffset,
        vec![c],
        points,
    ))
}

/// Slope and offset of `N = a·log₂√s + c`.
pub fn fit_log_scaling_free(points: &[(f64, f64)]) -> Result<ScalingFit> {
    check_points(points, 3)?;
    let xs: Vec<f64> = points.iter().map(|&(s, _)| log2_sqrt(s)).collect();
    let [a, c] = solve_least_squares(points.iter().zip(&xs).map(|(&(_, n), &x)| ([x, 1.0], n)))
        .ok_or(Error::DegenerateInput { needed: 2, got: 1 })?;
    Ok(ScalingFit::with_residual(
        ScalingModel::LogSqrtFree,
        vec![a, c],
        points,
    ))
}

/// `(a, b)` of `F = a·M² + b·M` by least squares, no constant term.
pub fn fit_qfi_quadratic(points: &[(f64, f64)]) -> Result<ScalingFit> {
    check_points(points, 2)?;
    // Scale columns to keep the normal equations well conditioned.
    let scale = points.iter().map(|p| p.0).fold(0.0, f64::max);
    let [a, b] = solve_least_squares(points.iter().map(|&(m, f)| {
        let x = m / scale;
        ([x * x, x], f)
    }))
    .ok_or(Error::DegenerateInput { needed: 2, got: 1 })?;
    let coefficients = vec![a / (scale * scale), b / scale];
    Ok(ScalingFit::with_residual(
        ScalingModel::Quadratic,
        coefficients,
        points,
    ))
}

/// Two-parameter linear least squares via the normal equations; `None` when
/// the design is rank deficient.
fn solve_least_squares(rows: impl Iterator<Item = ([f64; 2], f64)>) -> Option<[f64; 2]> {
    let (mut s00, mut s01, mut s11, mut t0, mut t1) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ([x0, x1], y) in rows {
        s00 += x0 * x0;
        s01 += x0 * x1;
        s11 += x1 * x1;
        t0 += x0 * y;
        t1 += x1 * y;
    }
    let det = s00 * s11 - s01 * s01;
    if !(det.abs() > 1e-12 * (s00 * s11).max(f64::MIN_POSITIVE)) {
        return None;
    }
    Some([(t0 * s11 - t1 * s01) / det, (s00 * t1 - s01 * t0) / det])
}

/// QFI of the `N`-round protocol output for each `M`, in parallel.
pub fn qfi_sweep(
    spins: &[usize],
    rounds: usize,
    options: &SearchOptions,
) -> Result<Vec<(usize, f64)>> {
    spins
        .par_iter()
        .map(|&m| {
            let schedule =
                build_dicke_schedule(m, rounds, options.g, options.rounding, options.indexing)?;
            let init = initial_product_state(m, optimal_phi(0, m)?)?;
            let record = dicke::run_dicke_protocol(&init, &schedule)?;
            let out = dicke::DickeEnsemble::new(m, record.into_final_state())?;
            Ok((m, dicke::qfi_x(&out)))
        })
        .collect()
}

/// Exact `|⟨n_t|α⟩|²` for `|α|² = n_t`.
pub fn poisson_peak(n_t: usize) -> f64 {
    let n = n_t as f64;
    if n_t == 0 {
        return 1.0;
    }
    (n * n.ln() - n - libm::lgamma(n + 1.0)).exp()
}

/// Exact `C(M, M/2) 2^{−M}`.
pub fn central_binomial(spins: usize) -> f64 {
    let m = spins as f64;
    (libm::lgamma(m + 1.0) - 2.0 * libm::lgamma(m / 2.0 + 1.0) - m * 2f64.ln()).exp()
}

/// Large-`M` asymptote `√(2/(πM))` of [`central_binomial`].
pub fn central_binomial_asymptote(spins: usize) -> f64 {
    (2.0 / (PI * spins as f64)).sqrt()
}
