//! Lindblad simulation of the resonant and dispersive protocols.
//!
//! Both generators commute with a U(1) charge (`n + [ancilla = e]` for the
//! exchange coupling, `n` for the dispersive one), and so do projections,
//! resets and Hadamards. Density-matrix entries whose row and column carry
//! equal charge therefore evolve on their own, and every population lives
//! there. [`Representation::Sector`] propagates only that block;
//! [`Representation::Dense`] propagates the whole matrix.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dispersive::DispersiveSchedule;
use crate::error::{Error, Result};
use crate::fock::FockSchedule;
use crate::hilbert::{
    coherent_state_with_tail_limit, raise_cutoff, Ancilla, CouplingParams, DensityMatrix, Dopri5,
    IntegratorOptions, PureState, SparseOp, C64,
};
use crate::record::RunRecord;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Tail mass tolerated when truncating coherent inputs for noisy runs.
pub const NOISY_TAIL_LIMIT: f64 = 1e-6;

/// Dissipation rates in s⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub kappa: f64,
    pub gamma: f64,
    pub gamma_phi: f64,
}

impl NoiseParams {
    pub fn new(kappa: f64, gamma: f64, gamma_phi: f64) -> Result<Self> {
        let noise = Self {
            kappa,
            gamma,
            gamma_phi,
        };
        noise.validate()?;
        Ok(noise)
    }

    /// All rates zero.
    pub fn none() -> Self {
        Self {
            kappa: 0.0,
            gamma: 0.0,
            gamma_phi: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("gamma_phi", self.gamma_phi),
        ] {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must be a finite rate >= 0, got {rate}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Resonant,
    Dispersive,
}

impl ProtocolKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Resonant => "resonant",
            Self::Dispersive => "dispersive",
        }
    }

    /// Conserved charge of composite index `anc * mode_dim + n`.
    fn charge(self, index: usize, mode_dim: usize) -> usize {
        let (anc, n) = (index / mode_dim, index % mode_dim);
        match self {
            Self::Resonant => n + anc,
            Self::Dispersive => n,
        }
    }

    /// Ancilla state the mode is heralded with.
    pub fn heralded(self) -> Ancilla {
        match self {
            Self::Resonant => Ancilla::Excited,
            Self::Dispersive => Ancilla::Ground,
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Dense,
    #[default]
    Sector,
}

fn composite(anc: Ancilla, n: usize, mode_dim: usize) -> usize {
    anc.index() * mode_dim + n
}

/// `Δ|e⟩⟨e| + g Σ √(n+1) (|e,n⟩⟨g,n+1| + h.c.)`.
pub fn jc_hamiltonian(mode_dim: usize, params: &CouplingParams) -> SparseOp {
    let mut h = SparseOp::new(2 * mode_dim);
    for n in 0..mode_dim {
        let e = composite(Ancilla::Excited, n, mode_dim);
        h.push(e, e, C64::new(params.delta, 0.0));
        if n + 1 < mode_dim {
            let g = composite(Ancilla::Ground, n + 1, mode_dim);
            let c = C64::new(params.g * ((n + 1) as f64).sqrt(), 0.0);
            h.push(e, g, c);
            h.push(g, e, c);
        }
    }
    h
}

/// `(Δ − χ a†a) |e⟩⟨e|`.
pub fn dispersive_hamiltonian(mode_dim: usize, params: &CouplingParams) -> SparseOp {
    let mut h = SparseOp::new(2 * mode_dim);
    for n in 0..mode_dim {
        let e = composite(Ancilla::Excited, n, mode_dim);
        h.push(e, e, C64::new(params.delta - params.chi * n as f64, 0.0));
    }
    h
}

/// Mode lowering operator `I ⊗ a`.
pub fn annihilation(mode_dim: usize) -> SparseOp {
    let mut a = SparseOp::new(2 * mode_dim);
    for anc in [Ancilla::Ground, Ancilla::Excited] {
        for n in 1..mode_dim {
            a.push(
                composite(anc, n - 1, mode_dim),
                composite(anc, n, mode_dim),
                C64::new((n as f64).sqrt(), 0.0),
            );
        }
    }
    a
}

/// `|g⟩⟨e| ⊗ I`.
pub fn ancilla_lowering(mode_dim: usize) -> SparseOp {
    let mut s = SparseOp::new(2 * mode_dim);
    for n in 0..mode_dim {
        s.push(
            composite(Ancilla::Ground, n, mode_dim),
            composite(Ancilla::Excited, n, mode_dim),
            C64::new(1.0, 0.0),
        );
    }
    s
}

/// `|e⟩⟨e| ⊗ I`.
pub fn excited_projector(mode_dim: usize) -> SparseOp {
    let mut p = SparseOp::new(2 * mode_dim);
    for n in 0..mode_dim {
        let e = composite(Ancilla::Excited, n, mode_dim);
        p.push(e, e, C64::new(1.0, 0.0));
    }
    p
}

/// Lindblad generator in the form `−i(H_eff ρ − ρ H_eff†) + Σ r oρo†`
/// with `H_eff = H − (i/2) Σ r o†o`.
#[derive(Debug, Clone)]
pub struct LindbladGenerator {
    mode_dim: usize,
    h_eff: SparseOp,
    h_eff_adj: SparseOp,
    jumps: Vec<(f64, SparseOp)>,
}

impl LindbladGenerator {
    pub fn new(
        mode_dim: usize,
        params: &CouplingParams,
        noise: &NoiseParams,
        kind: ProtocolKind,
    ) -> Self {
        let h = match kind {
            ProtocolKind::Resonant => jc_hamiltonian(mode_dim, params),
            ProtocolKind::Dispersive => dispersive_hamiltonian(mode_dim, params),
        };
        let jumps = vec![
            (noise.kappa, annihilation(mode_dim)),
            (noise.gamma, ancilla_lowering(mode_dim)),
            (noise.gamma_phi, excited_projector(mode_dim)),
        ];
        Self::from_parts(mode_dim, h, jumps)
    }

    /// Generator for an arbitrary Hamiltonian and `(rate, jump)` list.
    pub fn from_parts(mode_dim: usize, hamiltonian: SparseOp, jumps: Vec<(f64, SparseOp)>) -> Self {
        assert_eq!(hamiltonian.dim(), 2 * mode_dim, "hamiltonian dimension");
        let jumps: Vec<_> = jumps.into_iter().filter(|(r, _)| *r != 0.0).collect();
        let mut entries: Vec<(usize, usize, C64)> = hamiltonian.entries().to_vec();
        for (rate, op) in &jumps {
            assert_eq!(op.dim(), 2 * mode_dim, "jump dimension");
            let odo = op.adjoint().compose(op);
            entries.extend(
                odo.entries()
                    .iter()
                    .map(|&(r, c, v)| (r, c, v * C64::new(0.0, -0.5 * rate))),
            );
        }
        let mut merged = std::collections::BTreeMap::new();
        for (r, c, v) in entries {
            *merged.entry((r, c)).or_insert(ZERO) += v;
        }
        let mut h_eff = SparseOp::new(2 * mode_dim);
        for ((r, c), v) in merged {
            h_eff.push(r, c, v);
        }
        let h_eff_adj = h_eff.adjoint();
        Self {
            mode_dim,
            h_eff,
            h_eff_adj,
            jumps,
        }
    }

    pub fn mode_dim(&self) -> usize {
        self.mode_dim
    }

    pub fn dim(&self) -> usize {
        2 * self.mode_dim
    }

    pub fn effective_hamiltonian(&self) -> &SparseOp {
        &self.h_eff
    }

    /// Nonzero-rate jump operators.
    pub fn jumps(&self) -> &[(f64, SparseOp)] {
        &self.jumps
    }

    /// Overwrites `out` with the derivative at the column-major `rho`.
    pub fn apply_into(&self, rho: &[C64], out: &mut [C64]) {
        out.fill(ZERO);
        self.h_eff.left_mul_acc(rho, C64::new(0.0, -1.0), out);
        self.h_eff_adj.right_mul_acc(rho, C64::new(0.0, 1.0), out);
        for (rate, op) in &self.jumps {
            op.sandwich_acc(rho, *rate, out);
        }
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.mode_dim() != self.mode_dim {
            return Err(Error::DimensionMismatch {
                expected: self.mode_dim,
                actual: rho.mode_dim(),
            });
        }
        let mut out = vec![ZERO; rho.entries().len()];
        self.apply_into(rho.entries(), &mut out);
        DensityMatrix::from_entries(self.mode_dim, out)
    }
}

/// Time derivative of `rho` under the chosen protocol Hamiltonian and noise.
pub fn lindblad_rhs(
    rho: &DensityMatrix,
    params: &CouplingParams,
    noise: &NoiseParams,
    kind: ProtocolKind,
) -> DensityMatrix {
    LindbladGenerator::new(rho.mode_dim(), params, noise, kind)
        .apply(rho)
        .expect("generator built at the state's dimension")
}

/// Projects the ancilla onto `outcome`; see [`DensityMatrix::project_ancilla`].
pub fn project_ancilla(rho: &DensityMatrix, outcome: Ancilla) -> Result<(DensityMatrix, f64)> {
    rho.project_ancilla(outcome)
}

/// Generator restricted to equal-charge entries, stored as a CSR matrix
/// acting on the vector of those entries.
#[derive(Debug, Clone)]
pub struct SectorGenerator {
    mode_dim: usize,
    pairs: Vec<(usize, usize)>,
    position: Vec<u32>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<C64>,
}

impl SectorGenerator {
    /// Fails if `generator` couples equal-charge entries to any other entry.
    pub fn new(generator: &LindbladGenerator, kind: ProtocolKind) -> Result<Self> {
        let m = generator.mode_dim;
        let dim = 2 * m;
        let mut pairs = Vec::new();
        let mut position = vec![u32::MAX; dim * dim];
        for y in 0..dim {
            for x in 0..dim {
                if kind.charge(x, m) == kind.charge(y, m) {
                    position[y * dim + x] = pairs.len() as u32;
                    pairs.push((x, y));
                }
            }
        }
        let by_col = |op: &SparseOp| {
            let mut cols: Vec<Vec<(usize, C64)>> = vec![Vec::new(); dim];
            for &(r, c, v) in op.entries() {
                cols[c].push((r, v));
            }
            cols
        };
        let h_cols = by_col(&generator.h_eff);
        let jump_cols: Vec<_> = generator
            .jumps
            .iter()
            .map(|(r, op)| (*r, by_col(op)))
            .collect();

        let mut triplets: Vec<(u32, u32, C64)> = Vec::new();
        let mut push = |u: usize, v: usize, j: usize, c: C64| -> Result<()> {
            let p = position[v * dim + u];
            if p == u32::MAX {
                return Err(Error::invalid(
                    "generator does not conserve the protocol charge",
                ));
            }
            triplets.push((p, j as u32, c));
            Ok(())
        };
        for (j, &(x, y)) in pairs.iter().enumerate() {
            for &(u, h) in &h_cols[x] {
                push(u, y, j, C64::new(0.0, -1.0) * h)?;
            }
            for &(v, h) in &h_cols[y] {
                push(x, v, j, C64::new(0.0, 1.0) * h.conj())?;
            }
            for (rate, cols) in &jump_cols {
                for &(u, a) in &cols[x] {
                    for &(v, b) in &cols[y] {
                        push(u, v, j, a * b.conj() * *rate)?;
                    }
                }
            }
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; pairs.len() + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(u32, u32)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *vals.last_mut().expect("merged entry") += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r as usize + 1] += 1;
            cols.push(c);
            vals.push(v);
        }
        for i in 0..pairs.len() {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            mode_dim: m,
            pairs,
            position,
            row_ptr,
            cols,
            vals,
        })
    }

    /// Number of retained matrix entries.
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn apply_into(&self, v: &[C64], out: &mut [C64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * v[self.cols[k] as usize];
            }
            *o = acc;
        }
    }

    /// Equal-charge entries of `rho`.
    pub fn gather(&self, rho: &DensityMatrix) -> Vec<C64> {
        self.pairs.iter().map(|&(x, y)| rho.get(x, y)).collect()
    }

    /// Density matrix holding `v` on the equal-charge entries, zero elsewhere.
    pub fn scatter(&self, v: &[C64]) -> DensityMatrix {
        let mut rho = DensityMatrix::zeros(self.mode_dim);
        for (&(x, y), &val) in self.pairs.iter().zip(v) {
            rho.set(x, y, val);
        }
        rho
    }

    /// Largest magnitude `rho` carries outside the sector.
    pub fn leakage(&self, rho: &DensityMatrix) -> f64 {
        let dim = 2 * self.mode_dim;
        let mut worst = 0.0f64;
        for y in 0..dim {
            for x in 0..dim {
                if self.position[y * dim + x] == u32::MAX {
                    worst = worst.max(rho.get(x, y).norm());
                }
            }
        }
        worst
    }
}

/// Schedule of either protocol.
#[derive(Debug, Clone, PartialEq)]
pub enum NoisySchedule {
    Resonant(FockSchedule),
    Dispersive(DispersiveSchedule),
}

impl NoisySchedule {
    pub fn kind(&self) -> ProtocolKind {
        match self {
            Self::Resonant(_) => ProtocolKind::Resonant,
            Self::Dispersive(_) => ProtocolKind::Dispersive,
        }
    }

    pub fn n_t(&self) -> usize {
        match self {
            Self::Resonant(s) => s.n_t(),
            Self::Dispersive(s) => s.n_t(),
        }
    }

    pub fn rounds(&self) -> usize {
        match self {
            Self::Resonant(s) => s.rounds().len(),
            Self::Dispersive(s) => s.rounds(),
        }
    }

    pub fn durations(&self) -> Vec<f64> {
        match self {
            Self::Resonant(s) => s.rounds().iter().map(|r| r.duration).collect(),
            Self::Dispersive(s) => s.durations().to_vec(),
        }
    }

    pub fn coupling(&self) -> CouplingParams {
        match self {
            Self::Resonant(s) => CouplingParams::resonant(s.g()),
            Self::Dispersive(s) => CouplingParams::dispersive(s.chi(), s.delta()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyOptions {
    /// Relative integrator tolerance.
    pub tolerance: f64,
    pub representation: Representation,
}

impl Default for NoisyOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            representation: Representation::Sector,
        }
    }
}

/// `ceil(n_t + 6√n_t)`, raised for small `n_t` until the Poisson tail is
/// within [`NOISY_TAIL_LIMIT`].
pub fn noisy_cutoff(n_t: usize) -> usize {
    let n = n_t as f64;
    raise_cutoff(
        (n + 6.0 * n.sqrt()).ceil().max(1.0) as usize,
        n,
        NOISY_TAIL_LIMIT,
    )
}

/// Coherent input with mean `n_t` truncated at [`noisy_cutoff`].
pub fn noisy_coherent_state(n_t: usize) -> Result<PureState> {
    coherent_state_with_tail_limit(
        C64::new((n_t as f64).sqrt(), 0.0),
        noisy_cutoff(n_t),
        NOISY_TAIL_LIMIT,
    )
}

const HADAMARD: [[C64; 2]; 2] = {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        [C64 { re: s, im: 0.0 }, C64 { re: s, im: 0.0 }],
        [C64 { re: s, im: 0.0 }, C64 { re: -s, im: 0.0 }],
    ]
};

/// Runs the protocol from a pure mode state; records mode populations.
pub fn run_noisy_protocol(
    initial: &PureState,
    schedule: &NoisySchedule,
    noise: &NoiseParams,
    options: &NoisyOptions,
) -> Result<RunRecord<Vec<f64>>> {
    let rho = DensityMatrix::from_product(schedule.kind().heralded(), initial)?;
    run_noisy_protocol_mixed(&rho, schedule, noise, options)
}

/// Runs the protocol from a composite density matrix; the ancilla is first
/// reset to the heralded state of the protocol.
pub fn run_noisy_protocol_mixed(
    initial: &DensityMatrix,
    schedule: &NoisySchedule,
    noise: &NoiseParams,
    options: &NoisyOptions,
) -> Result<RunRecord<Vec<f64>>> {
    noise.validate()?;
    let kind = schedule.kind();
    let n_t = schedule.n_t();
    let m = initial.mode_dim();
    if n_t >= m {
        return Err(Error::IndexOutOfRange {
            label: n_t as i64,
            first: 0,
            last: m as i64 - 1,
        });
    }
    let generator = LindbladGenerator::new(m, &schedule.coupling(), noise, kind);
    let mut propagator = Propagator::new(generator, kind, options)?;
    let heralded = kind.heralded();
    let mut rho = initial.reset_ancilla(heralded);
    let mut record = RunRecord::new(rho.mode_populations());

    for (k, tau) in schedule.durations().into_iter().enumerate() {
        let round = k + 1;
        let mut step = |rho: DensityMatrix| -> Result<(DensityMatrix, f64)> {
            let rho = match kind {
                ProtocolKind::Resonant => rho,
                ProtocolKind::Dispersive => rho
                    .reset_ancilla(Ancilla::Ground)
                    .apply_ancilla_unitary(HADAMARD),
            };
            let mut rho = propagator.propagate(&rho, tau)?;
            if kind == ProtocolKind::Dispersive {
                rho = rho.apply_ancilla_unitary(HADAMARD);
            }
            rho.project_ancilla(heralded)
        };
        let (next, p) = step(rho).map_err(|e| e.in_round(round))?;
        let fidelity = next.fidelity_with_mode_state(n_t)?;
        log::debug!("{kind} round {round}: fidelity {fidelity:.6}, probability {p:.6}");
        record.push_round(fidelity, p, tau, next.mode_populations());
        rho = next;
    }
    Ok(record)
}

struct Propagator {
    generator: LindbladGenerator,
    sector: Option<SectorGenerator>,
    integrator: Dopri5,
}

impl Propagator {
    fn new(
        generator: LindbladGenerator,
        kind: ProtocolKind,
        options: &NoisyOptions,
    ) -> Result<Self> {
        let sector = match options.representation {
            Representation::Sector => Some(SectorGenerator::new(&generator, kind)?),
            Representation::Dense => None,
        };
        let integrator = Dopri5::new(IntegratorOptions::with_tolerance(options.tolerance))?;
        Ok(Self {
            generator,
            sector,
            integrator,
        })
    }

    fn propagate(&mut self, rho: &DensityMatrix, duration: f64) -> Result<DensityMatrix> {
        match &self.sector {
            Some(sector) => {
                let mut v = sector.gather(rho);
                let stats = self.integrator.integrate(
                    |y, dy| sector.apply_into(y, dy),
                    &mut v,
                    duration,
                )?;
                log::trace!("sector propagation: {stats:?}");
                Ok(sector.scatter(&v))
            }
            None => {
                let generator = &self.generator;
                let mut y = rho.entries().to_vec();
                let stats = self.integrator.integrate(
                    |y, dy| generator.apply_into(y, dy),
                    &mut y,
                    duration,
                )?;
                log::trace!("dense propagation: {stats:?}");
                DensityMatrix::from_entries(generator.mode_dim(), y)
            }
        }
    }
}
