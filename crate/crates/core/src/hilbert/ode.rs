//! Dormand–Prince 5(4) with embedded error control, acting on flat complex
//! buffers. The systems integrated here are autonomous, so the stage
//! abscissae never appear.

use super::{DensityMatrix, C64};
use crate::error::{Error, Result};

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Steps shorter than this abort with [`Error::StepUnderflow`].
    pub min_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-12,
            min_step: 1e-18,
            max_steps: 50_000_000,
        }
    }
}

impl IntegratorOptions {
    /// Relative tolerance `tol` with absolute tolerance `tol · 1e-4`.
    pub fn with_tolerance(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol * 1e-4,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::invalid("integrator tolerances must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Adaptive integrator with reusable work buffers. The last accepted step
/// size carries over between calls so repeated segments start well-sized.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    options: IntegratorOptions,
    k: [Vec<C64>; 7],
    stage: Vec<C64>,
    next: Vec<C64>,
    step_hint: Option<f64>,
}

impl Dopri5 {
    pub fn new(options: IntegratorOptions) -> Result<Self> {
        options.validate()?;
        Ok(Self {
            options,
            k: Default::default(),
            stage: Vec::new(),
            next: Vec::new(),
            step_hint: None,
        })
    }

    pub fn options(&self) -> &IntegratorOptions {
        &self.options
    }

    fn resize(&mut self, n: usize) {
        let zero = C64::new(0.0, 0.0);
        for k in &mut self.k {
            k.resize(n, zero);
        }
        self.stage.resize(n, zero);
        self.next.resize(n, zero);
    }

    fn error_norm(&self, y: &[C64], err: &[C64]) -> f64 {
        let IntegratorOptions { rtol, atol, .. } = self.options;
        let sum: f64 = y
            .iter()
            .zip(&self.next)
            .zip(err)
            .map(|((a, b), e)| {
                let scale = atol + rtol * a.norm().max(b.norm());
                (e.norm() / scale).powi(2)
            })
            .sum();
        (sum / y.len().max(1) as f64).sqrt()
    }

    /// Advances `y` by `duration` under `dy/dt = rhs(y)`.
    pub fn integrate<F>(
        &mut self,
        mut rhs: F,
        y: &mut [C64],
        duration: f64,
    ) -> Result<IntegratorStats>
    where
        F: FnMut(&[C64], &mut [C64]),
    {
        if !(duration >= 0.0) || !duration.is_finite() {
            return Err(Error::invalid(
                "integration duration must be finite and non-negative",
            ));
        }
        let mut stats = IntegratorStats::default();
        if duration == 0.0 || y.is_empty() {
            return Ok(stats);
        }
        let n = y.len();
        self.resize(n);

        rhs(y, &mut self.k[0]);
        stats.rhs_evals += 1;

        let mut h = match self.step_hint {
            Some(h) => h,
            None => {
                let d0 = rms(y);
                let d1 = rms(&self.k[0]);
                if d0 < 1e-5 || d1 < 1e-5 {
                    1e-6 * duration
                } else {
                    0.01 * d0 / d1
                }
            }
        }
        .min(duration);

        let mut t = 0.0;
        let mut err = vec![C64::new(0.0, 0.0); n];
        while duration - t > duration * 1e-14 {
            if stats.accepted + stats.rejected >= self.options.max_steps {
                return Err(Error::TooManySteps {
                    max_steps: self.options.max_steps,
                });
            }
            let remaining = duration - t;
            let last = h >= remaining;
            let step = if last { remaining } else { h };
            if step < self.options.min_step && !last {
                return Err(Error::StepUnderflow { time: t, step });
            }

            self.stages(&mut rhs, y, step);
            stats.rhs_evals += 6;

            for i in 0..n {
                let k = &self.k;
                err[i] = (k[0][i] * E1
                    + k[2][i] * E3
                    + k[3][i] * E4
                    + k[4][i] * E5
                    + k[5][i] * E6
                    + k[6][i] * E7)
                    * step;
            }
            let norm = self.error_norm(y, &err);
            if norm <= 1.0 {
                t = if last { duration } else { t + step };
                y.copy_from_slice(&self.next);
                self.k.swap(0, 6);
                stats.accepted += 1;
                let factor = if norm == 0.0 {
                    MAX_FACTOR
                } else {
                    (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
                };
                if !last {
                    h = step * factor;
                } else {
                    h = h.max(step);
                }
            } else {
                stats.rejected += 1;
                let factor = if norm.is_finite() {
                    (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, 1.0)
                } else {
                    MIN_FACTOR
                };
                h = step * factor;
                if h < self.options.min_step {
                    return Err(Error::StepUnderflow { time: t, step: h });
                }
            }
        }
        self.step_hint = Some(h);
        Ok(stats)
    }

    /// Fills k[1..7] and `next` for a step of size `h` from `y` (k[0] = f(y)).
    fn stages<F>(&mut self, rhs: &mut F, y: &[C64], h: f64)
    where
        F: FnMut(&[C64], &mut [C64]),
    {
        let n = y.len();
        macro_rules! stage {
            ($out:expr, [$($coef:expr => $idx:expr),*]) => {{
                for i in 0..n {
                    let mut acc = y[i];
                    $( acc += self.k[$idx][i] * ($coef * h); )*
                    self.stage[i] = acc;
                }
                let (stage, k) = (&self.stage, &mut self.k);
                rhs(stage, &mut k[$out]);
            }};
        }
        stage!(1, [A21 => 0]);
        stage!(2, [A31 => 0, A32 => 1]);
        stage!(3, [A41 => 0, A42 => 1, A43 => 2]);
        stage!(4, [A51 => 0, A52 => 1, A53 => 2, A54 => 3]);
        stage!(5, [A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4]);
        for i in 0..n {
            let k = &self.k;
            self.next[i] = y[i]
                + (k[0][i] * A71 + k[2][i] * A73 + k[3][i] * A74 + k[4][i] * A75 + k[5][i] * A76)
                    * h;
        }
        let (next, k) = (&self.next, &mut self.k);
        rhs(next, &mut k[6]);
    }
}

fn rms(v: &[C64]) -> f64 {
    (v.iter().map(|x| x.norm_sqr()).sum::<f64>() / v.len().max(1) as f64).sqrt()
}

/// Propagates a density matrix for `duration` seconds at relative tolerance
/// `tol`. The right-hand side receives and fills column-major entry buffers.
pub fn integrate_ode<F>(
    rhs: F,
    initial: &DensityMatrix,
    duration: f64,
    tol: f64,
) -> Result<DensityMatrix>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let mut solver = Dopri5::new(IntegratorOptions::with_tolerance(tol))?;
    let mut out = initial.clone();
    solver.integrate(rhs, out.entries_mut(), duration)?;
    Ok(out)
}
