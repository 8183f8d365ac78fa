//! Dense reference implementations built directly from the Hamiltonians,
//! independent of the library's sparse and diagonal machinery.
#![allow(dead_code)]

use gpm_core::hilbert::C64;
use nalgebra::DMatrix;

pub type CMat = DMatrix<C64>;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `exp(−i H t)`.
pub fn propagator(h: &CMat, t: f64) -> CMat {
    (h * C64::new(0.0, -t)).exp()
}

/// Composite index `anc * mode_dim + n`, with `anc` 0 for g and 1 for e.
pub fn idx(anc: usize, n: usize, mode_dim: usize) -> usize {
    anc * mode_dim + n
}

/// `Δ|e⟩⟨e| + g Σ √(n+1)(|e,n⟩⟨g,n+1| + h.c.)` on `2·mode_dim` states.
pub fn jc_dense(mode_dim: usize, g: f64, delta: f64) -> CMat {
    let mut h = CMat::zeros(2 * mode_dim, 2 * mode_dim);
    for n in 0..mode_dim {
        h[(idx(1, n, mode_dim), idx(1, n, mode_dim))] = c(delta);
        if n + 1 < mode_dim {
            let v = c(g * ((n + 1) as f64).sqrt());
            h[(idx(1, n, mode_dim), idx(0, n + 1, mode_dim))] = v;
            h[(idx(0, n + 1, mode_dim), idx(1, n, mode_dim))] = v;
        }
    }
    h
}

/// `(Δ − χn)|e⟩⟨e|`.
pub fn dispersive_dense(mode_dim: usize, chi: f64, delta: f64) -> CMat {
    let mut h = CMat::zeros(2 * mode_dim, 2 * mode_dim);
    for n in 0..mode_dim {
        h[(idx(1, n, mode_dim), idx(1, n, mode_dim))] = c(delta - chi * n as f64);
    }
    h
}

/// Hadamard on the ancilla, identity on the mode.
pub fn hadamard_dense(mode_dim: usize) -> CMat {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = CMat::zeros(2 * mode_dim, 2 * mode_dim);
    for n in 0..mode_dim {
        u[(idx(0, n, mode_dim), idx(0, n, mode_dim))] = c(s);
        u[(idx(0, n, mode_dim), idx(1, n, mode_dim))] = c(s);
        u[(idx(1, n, mode_dim), idx(0, n, mode_dim))] = c(s);
        u[(idx(1, n, mode_dim), idx(1, n, mode_dim))] = c(-s);
    }
    u
}

/// Spin-star `(Δ/2)σ_z + 2g(σ₊J₋ + σ₋J₊)` over `(anc, m)` with
/// `m = −J..=J` at position `m + J`.
pub fn spin_star_dense(spins: usize, g: f64, delta: f64) -> CMat {
    let d = spins + 1;
    let j = spins as f64 / 2.0;
    let mut h = CMat::zeros(2 * d, 2 * d);
    for k in 0..d {
        h[(idx(1, k, d), idx(1, k, d))] = c(delta / 2.0);
        h[(idx(0, k, d), idx(0, k, d))] = c(-delta / 2.0);
        if k >= 1 {
            // ⟨m−1|J₋|m⟩ with m = k − J.
            let m = k as f64 - j;
            let v = c(2.0 * g * (j * (j + 1.0) - m * (m - 1.0)).sqrt());
            h[(idx(1, k - 1, d), idx(0, k, d))] = v;
            h[(idx(0, k, d), idx(1, k - 1, d))] = v;
        }
    }
    h
}

/// Mode lowering `I ⊗ a`.
pub fn lowering_dense(mode_dim: usize) -> CMat {
    let mut a = CMat::zeros(2 * mode_dim, 2 * mode_dim);
    for anc in 0..2 {
        for n in 1..mode_dim {
            a[(idx(anc, n - 1, mode_dim), idx(anc, n, mode_dim))] = c((n as f64).sqrt());
        }
    }
    a
}

pub fn sigma_minus_dense(mode_dim: usize) -> CMat {
    let mut s = CMat::zeros(2 * mode_dim, 2 * mode_dim);
    for n in 0..mode_dim {
        s[(idx(0, n, mode_dim), idx(1, n, mode_dim))] = c(1.0);
    }
    s
}

pub fn excited_dense(mode_dim: usize) -> CMat {
    let mut p = CMat::zeros(2 * mode_dim, 2 * mode_dim);
    for n in 0..mode_dim {
        p[(idx(1, n, mode_dim), idx(1, n, mode_dim))] = c(1.0);
    }
    p
}

fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Lindblad superoperator acting on column-major `vec(ρ)`:
/// `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.
pub fn lindblad_superoperator(h: &CMat, jumps: &[(f64, CMat)]) -> CMat {
    let d = h.nrows();
    let id = CMat::identity(d, d);
    let i = C64::new(0.0, 1.0);
    let mut l = (kron(&id, h) - kron(&h.transpose(), &id)) * (-i);
    for (rate, o) in jumps {
        let odo = o.adjoint() * o;
        l += (kron(&o.conjugate(), o) - (kron(&id, &odo) + kron(&odo.transpose(), &id)) * c(0.5))
            * c(*rate);
    }
    l
}

/// Column-major flattening.
pub fn vectorize(m: &CMat) -> Vec<C64> {
    m.as_slice().to_vec()
}

pub fn unvectorize(v: &[C64], d: usize) -> CMat {
    CMat::from_column_slice(d, d, v)
}

pub fn max_abs_diff(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    let sym = (m + m.adjoint()) * c(0.5);
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Deterministic xorshift stream for randomized trials.
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self(seed.max(1))
    }

    pub fn uniform(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        (self.0 >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    /// Random density matrix `AA†/tr(AA†)`.
    pub fn density(&mut self, d: usize) -> CMat {
        self.density_with_rank(d, d)
    }

    /// Random density matrix of rank at most `rank`; rank 1 is pure, which
    /// puts the spectrum on the positivity boundary.
    pub fn density_with_rank(&mut self, d: usize, rank: usize) -> CMat {
        let a = CMat::from_fn(d, rank, |_, _| C64::new(self.symmetric(), self.symmetric()));
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        rho / tr
    }
}
