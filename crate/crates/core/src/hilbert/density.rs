use super::{Ancilla, PureState, C64, ZERO_PROBABILITY};
use crate::error::{Error, Result};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Square sparse operator stored as coordinate triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    /// Adds `value` at `(row, col)`; zero values are dropped.
    pub fn push(&mut self, row: usize, col: usize, value: C64) {
        assert!(row < self.dim && col < self.dim, "entry outside operator");
        if value != ZERO {
            self.entries.push((row, col, value));
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|&(r, c, v)| (c, r, v.conj()))
                .collect(),
        }
    }

    /// `self · other`, merged so every (row, col) appears once.
    pub fn compose(&self, other: &SparseOp) -> Self {
        let mut by_row: Vec<Vec<(usize, C64)>> = vec![Vec::new(); other.dim];
        for &(r, c, v) in &other.entries {
            by_row[r].push((c, v));
        }
        let mut acc = std::collections::BTreeMap::new();
        for &(i, k, a) in &self.entries {
            for &(j, b) in &by_row[k] {
                *acc.entry((i, j)).or_insert(ZERO) += a * b;
            }
        }
        let mut out = Self::new(self.dim);
        for ((i, j), v) in acc {
            out.push(i, j, v);
        }
        out
    }

    /// Dense column-major copy.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut m = vec![ZERO; self.dim * self.dim];
        for &(r, c, v) in &self.entries {
            m[c * self.dim + r] += v;
        }
        m
    }

    /// `out += scale · self · a` for a column-major dense `a`.
    pub fn left_mul_acc(&self, a: &[C64], scale: C64, out: &mut [C64]) {
        let d = self.dim;
        for &(i, k, v) in &self.entries {
            let sv = scale * v;
            for j in 0..d {
                out[j * d + i] += sv * a[j * d + k];
            }
        }
    }

    /// `out += scale · a · self` for a column-major dense `a`.
    pub fn right_mul_acc(&self, a: &[C64], scale: C64, out: &mut [C64]) {
        let d = self.dim;
        for &(k, j, v) in &self.entries {
            let sv = scale * v;
            let src = &a[k * d..(k + 1) * d];
            let dst = &mut out[j * d..(j + 1) * d];
            for (o, x) in dst.iter_mut().zip(src) {
                *o += sv * x;
            }
        }
    }

    /// `out += scale · self · a · self†`.
    pub fn sandwich_acc(&self, a: &[C64], scale: f64, out: &mut [C64]) {
        let d = self.dim;
        // (O A O†)[i,j] = Σ O[i,k] A[k,l] conj(O[j,l])
        for &(j, l, w) in &self.entries {
            let wc = w.conj() * scale;
            for &(i, k, v) in &self.entries {
                out[j * d + i] += v * a[l * d + k] * wc;
            }
        }
    }
}

/// Density matrix on the composite ancilla ⊗ mode space.
///
/// Composite index of `|a, n⟩` is `a.index() * mode_dim + n`; storage is
/// dense and column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mode_dim: usize,
    entries: Vec<C64>,
}

impl DensityMatrix {
    pub fn zeros(mode_dim: usize) -> Self {
        let dim = 2 * mode_dim;
        Self {
            mode_dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn from_entries(mode_dim: usize, entries: Vec<C64>) -> Result<Self> {
        let dim = 2 * mode_dim;
        if mode_dim == 0 || entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                actual: entries.len(),
            });
        }
        Ok(Self { mode_dim, entries })
    }

    /// `|a⟩⟨a| ⊗ |ψ⟩⟨ψ|` for a mode state with labels starting at 0.
    pub fn from_product(ancilla: Ancilla, mode: &PureState) -> Result<Self> {
        if mode.basis_offset() != 0 {
            return Err(Error::invalid(
                "mode state must use Fock labels starting at 0",
            ));
        }
        let mut rho = Self::zeros(mode.dim());
        let amps = mode.amplitudes();
        let base = ancilla.index() * mode.dim();
        for (j, aj) in amps.iter().enumerate() {
            for (i, ai) in amps.iter().enumerate() {
                rho.set(base + i, base + j, ai * aj.conj());
            }
        }
        Ok(rho)
    }

    pub fn mode_dim(&self) -> usize {
        self.mode_dim
    }

    pub fn dim(&self) -> usize {
        2 * self.mode_dim
    }

    pub fn index(&self, ancilla: Ancilla, n: usize) -> usize {
        ancilla.index() * self.mode_dim + n
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [C64] {
        &mut self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[col * self.dim() + row]
    }

    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        let d = self.dim();
        self.entries[col * d + row] = value;
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    /// Largest elementwise deviation `|ρᵢⱼ − ρⱼᵢ*|`.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// ⟨n| Tr_anc ρ |n⟩.
    pub fn mode_population(&self, n: usize) -> f64 {
        let g = self.index(Ancilla::Ground, n);
        let e = self.index(Ancilla::Excited, n);
        self.get(g, g).re + self.get(e, e).re
    }

    pub fn mode_populations(&self) -> Vec<f64> {
        (0..self.mode_dim)
            .map(|n| self.mode_population(n))
            .collect()
    }

    pub fn ancilla_population(&self, ancilla: Ancilla) -> f64 {
        (0..self.mode_dim)
            .map(|n| {
                let i = self.index(ancilla, n);
                self.get(i, i).re
            })
            .sum()
    }

    /// Mode-basis fidelity `⟨n|Tr_anc ρ|n⟩ / Tr ρ`.
    pub fn fidelity_with_mode_state(&self, n: usize) -> Result<f64> {
        if n >= self.mode_dim {
            return Err(Error::IndexOutOfRange {
                label: n as i64,
                first: 0,
                last: self.mode_dim as i64 - 1,
            });
        }
        Ok(self.mode_population(n) / self.trace().re)
    }

    /// Reduced mode density matrix (column-major, `mode_dim²`).
    pub fn reduced_mode(&self) -> Vec<C64> {
        let m = self.mode_dim;
        let mut out = vec![ZERO; m * m];
        for a in [Ancilla::Ground, Ancilla::Excited] {
            for j in 0..m {
                for i in 0..m {
                    out[j * m + i] += self.get(self.index(a, i), self.index(a, j));
                }
            }
        }
        out
    }

    /// `(M_a ⊗ I) ρ (M_a ⊗ I)` renormalized, with the outcome probability.
    pub fn project_ancilla(&self, outcome: Ancilla) -> Result<(Self, f64)> {
        let m = self.mode_dim;
        let keep = outcome.index() * m..(outcome.index() + 1) * m;
        let probability: f64 = keep.clone().map(|i| self.get(i, i).re).sum();
        if !(probability >= ZERO_PROBABILITY) {
            return Err(Error::ZeroProbability { probability });
        }
        let mut out = Self::zeros(m);
        let scale = 1.0 / probability;
        for j in keep.clone() {
            for i in keep.clone() {
                out.set(i, j, self.get(i, j) * scale);
            }
        }
        Ok((out, probability))
    }

    /// `(U ⊗ I) ρ (U ⊗ I)†` for a 2×2 ancilla unitary `u[row][col]`.
    pub fn apply_ancilla_unitary(&self, u: [[C64; 2]; 2]) -> Self {
        let m = self.mode_dim;
        let mut out = Self::zeros(m);
        for a in 0..2 {
            for b in 0..2 {
                for i in 0..m {
                    for j in 0..m {
                        let mut acc = ZERO;
                        for c in 0..2 {
                            for d in 0..2 {
                                acc += u[a][c] * self.get(c * m + i, d * m + j) * u[b][d].conj();
                            }
                        }
                        out.set(a * m + i, b * m + j, acc);
                    }
                }
            }
        }
        out
    }

    /// `|a⟩⟨a| ⊗ Tr_anc ρ`.
    pub fn reset_ancilla(&self, ancilla: Ancilla) -> Self {
        let m = self.mode_dim;
        let reduced = self.reduced_mode();
        let mut out = Self::zeros(m);
        let base = ancilla.index() * m;
        for j in 0..m {
            for i in 0..m {
                out.set(base + i, base + j, reduced[j * m + i]);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn product_state_layout() {
        let mode = PureState::from_real(&[0.6, 0.8]).unwrap();
        let rho = DensityMatrix::from_product(Ancilla::Excited, &mode).unwrap();
        assert_eq!(rho.dim(), 4);
        assert!((rho.trace().re - 1.0).abs() < 1e-15);
        assert!((rho.get(2, 3).re - 0.48).abs() < 1e-15);
        assert!((rho.mode_population(1) - 0.64).abs() < 1e-15);
        assert_eq!(rho.ancilla_population(Ancilla::Ground), 0.0);
    }

    #[test]
    fn project_onto_held_outcome() {
        let mode = PureState::from_real(&[0.6, 0.8]).unwrap();
        let rho = DensityMatrix::from_product(Ancilla::Excited, &mode).unwrap();
        let (out, p) = rho.project_ancilla(Ancilla::Excited).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
        assert_eq!(out, rho);
        assert!(matches!(
            rho.project_ancilla(Ancilla::Ground),
            Err(Error::ZeroProbability { .. })
        ));
    }

    #[test]
    fn mixed_ancilla_projects_with_half() {
        let mode = PureState::from_real(&[0.6, 0.8]).unwrap();
        let mut rho = DensityMatrix::from_product(Ancilla::Excited, &mode).unwrap();
        let g = DensityMatrix::from_product(Ancilla::Ground, &mode).unwrap();
        for (a, b) in rho.entries_mut().iter_mut().zip(g.entries()) {
            *a = (*a + b) * 0.5;
        }
        let (out, p) = rho.project_ancilla(Ancilla::Excited).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!((out.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hadamard_twice_is_identity() {
        let s = 0.5f64.sqrt();
        let h = [[c(s), c(s)], [c(s), c(-s)]];
        let mode = PureState::from_real(&[0.6, 0.8]).unwrap();
        let rho = DensityMatrix::from_product(Ancilla::Ground, &mode).unwrap();
        let once = rho.apply_ancilla_unitary(h);
        assert!((once.ancilla_population(Ancilla::Excited) - 0.5).abs() < 1e-15);
        let twice = once.apply_ancilla_unitary(h);
        for (a, b) in twice.entries().iter().zip(rho.entries()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn sparse_products_match_dense() {
        let mut op = SparseOp::new(2);
        op.push(0, 1, C64::new(1.0, 2.0));
        op.push(1, 1, c(3.0));
        let a = vec![c(1.0), C64::new(0.0, 1.0), c(2.0), c(-1.0)];
        let dense = op.to_dense();
        let mul = |x: &[C64], y: &[C64]| {
            let mut o = vec![ZERO; 4];
            for i in 0..2 {
                for j in 0..2 {
                    for k in 0..2 {
                        o[j * 2 + i] += x[k * 2 + i] * y[j * 2 + k];
                    }
                }
            }
            o
        };
        let mut left = vec![ZERO; 4];
        op.left_mul_acc(&a, c(1.0), &mut left);
        assert_eq!(left, mul(&dense, &a));
        let mut right = vec![ZERO; 4];
        op.right_mul_acc(&a, c(1.0), &mut right);
        assert_eq!(right, mul(&a, &dense));
        let mut sw = vec![ZERO; 4];
        op.sandwich_acc(&a, 1.0, &mut sw);
        let expected = mul(&mul(&dense, &a), &op.adjoint().to_dense());
        for (x, y) in sw.iter().zip(&expected) {
            assert!((x - y).norm() < 1e-14);
        }
        let oo = op.adjoint().compose(&op).to_dense();
        assert_eq!(oo, mul(&op.adjoint().to_dense(), &dense));
    }
}
