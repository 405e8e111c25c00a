//! Dense complex linear algebra.
//!
//! Matrices are stored row-major. Qubit 0 is the most significant bit of every
//! basis index, so `kron(a, b)` places `a` on the leading qubits.

use std::ops::{Index, IndexMut};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default per-axis cap on dense matrices (`2^14`).
pub const DEFAULT_DENSE_CAP: usize = 1 << 14;

/// Largest qubit count for which full circuit unitaries are materialized.
pub const DENSE_UNITARY_MAX_QUBITS: usize = 7;

const SVD_MAX_SWEEPS: usize = 80;

#[inline]
pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

#[derive(Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl TryFrom<RawMatrix> for ComplexMatrix {
    type Error = Error;

    fn try_from(raw: RawMatrix) -> Result<Self> {
        ComplexMatrix::new(raw.rows, raw.cols, raw.data)
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::default(); rows * cols],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = Self::zeros(d, d);
        for i in 0..d {
            m[(i, i)] = c(1.0, 0.0);
        }
        m
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| c(x, 0.0)).collect())
    }

    pub fn diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// Outer product `u v†`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, a) in u.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                m[(i, j)] = a * b.conj();
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)];
            }
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == C64::default() {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.cols {
            return Err(Error::Dimension(format!(
                "cannot apply {}x{} matrix to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.data[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!(
                "shape {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Commutator `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    /// `max |U†U − I|` entrywise.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let gram = self.adjoint().matmul(self).expect("square");
        gram.max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }

    pub fn spectral_norm(&self) -> Result<f64> {
        Ok(svd_values(self)?.first().copied().unwrap_or(0.0))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

pub mod pauli {
    use super::{c, ComplexMatrix};

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::new(2, 2, vec![c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap()
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::new(2, 2, vec![c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)]).unwrap()
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::new(2, 2, vec![c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]).unwrap()
    }
}

/// Kronecker product under the default dense cap.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    kron_capped(a, b, DEFAULT_DENSE_CAP)
}

pub fn kron_capped(a: &ComplexMatrix, b: &ComplexMatrix, cap: usize) -> Result<ComplexMatrix> {
    let rows = a.rows.checked_mul(b.rows).unwrap_or(usize::MAX);
    let cols = a.cols.checked_mul(b.cols).unwrap_or(usize::MAX);
    let dim = rows.max(cols);
    if dim > cap {
        return Err(Error::DenseCap { dim, cap });
    }
    let mut out = ComplexMatrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let s = a[(i, j)];
            if s == C64::default() {
                continue;
            }
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = s * b[(k, l)];
                }
            }
        }
    }
    Ok(out)
}

/// Swap operator `F` on `C^d ⊗ C^d`: `F (u ⊗ v) = v ⊗ u`.
pub fn swap_operator(d: usize) -> ComplexMatrix {
    let mut f = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            f[(j * d + i, i * d + j)] = c(1.0, 0.0);
        }
    }
    f
}

/// Singular values in descending order, via one-sided Jacobi rotations.
pub fn svd_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    // Orthogonalize the shorter side.
    let work = if m.rows < m.cols { m.adjoint() } else { m.clone() };
    let (rows, cols) = (work.rows, work.cols);
    if cols == 0 || rows == 0 {
        return Ok(Vec::new());
    }
    let mut columns: Vec<Vec<C64>> = (0..cols).map(|j| work.column(j)).collect();
    let scale = m.frobenius_norm();
    if scale == 0.0 {
        return Ok(vec![0.0; cols]);
    }
    let eps = 1e-15;

    let mut converged = false;
    for _ in 0..SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let (alpha, beta, gamma) = {
                    let (a, b) = (&columns[p], &columns[q]);
                    let alpha: f64 = a.iter().map(|z| z.norm_sqr()).sum();
                    let beta: f64 = b.iter().map(|z| z.norm_sqr()).sum();
                    let gamma: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
                    (alpha, beta, gamma)
                };
                let g = gamma.norm();
                if g <= eps * (alpha * beta).sqrt() || g <= f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                let phase_conj = phase.conj();
                let (left, right) = columns.split_at_mut(q);
                let (a, b) = (&mut left[p], &mut right[0]);
                for (x, y) in a.iter_mut().zip(b.iter_mut()) {
                    let yp = *y * phase_conj;
                    let xn = *x * cs - yp * sn;
                    let yn = *x * sn + yp * cs;
                    *x = xn;
                    *y = yn;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(SVD_MAX_SWEEPS));
    }
    let mut values: Vec<f64> = columns
        .iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Unitary factor of the QR decomposition with a positive real `R` diagonal.
///
/// Gram–Schmidt with one re-orthogonalization pass yields `R_jj = ‖v_j‖ > 0`
/// directly, so the phase ambiguity of the factorization is fixed and a
/// complex Ginibre input produces a Haar-distributed `Q`.
pub fn qr_unitary(g: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !g.is_square() {
        return Err(Error::Dimension(format!(
            "QR of non-square {}x{} matrix",
            g.rows, g.cols
        )));
    }
    let d = g.rows;
    let scale = g.frobenius_norm().max(f64::MIN_POSITIVE);
    let mut q_cols: Vec<Vec<C64>> = Vec::with_capacity(d);
    for j in 0..d {
        let mut v = g.column(j);
        for _ in 0..2 {
            for u in &q_cols {
                let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, a) in v.iter_mut().zip(u) {
                    *x -= proj * a;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm <= 1e-12 * scale {
            return Err(Error::RankDeficient(j));
        }
        v.iter_mut().for_each(|x| *x /= norm);
        q_cols.push(v);
    }
    let mut q = ComplexMatrix::zeros(d, d);
    for (j, col) in q_cols.iter().enumerate() {
        for (i, &z) in col.iter().enumerate() {
            q[(i, j)] = z;
        }
    }
    Ok(q)
}

/// A normalized pure state on `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    /// Checks the norm within `1e-10`.
    pub fn new(n_qubits: usize, amplitudes: Vec<C64>) -> Result<Self> {
        check_len(n_qubits, amplitudes.len())?;
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = norm(&amplitudes);
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn from_unnormalized(n_qubits: usize, mut amplitudes: Vec<C64>) -> Result<Self> {
        check_len(n_qubits, amplitudes.len())?;
        let norm = norm(&amplitudes);
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::NotNormalized(norm));
        }
        amplitudes.iter_mut().for_each(|z| *z /= norm);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn zero(n_qubits: usize) -> Self {
        Self::basis(n_qubits, 0)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let mut amplitudes = vec![C64::default(); 1 << n_qubits];
        amplitudes[index] = c(1.0, 0.0);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Mutable amplitude access for gate kernels, which must preserve the norm.
    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        norm(&self.amplitudes)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn density_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    /// Amplitudes reshaped to a `2^|A| × 2^|B|` matrix across `cut`.
    pub fn reshape_across(&self, cut: &Bipartition) -> Result<ComplexMatrix> {
        if cut.n_qubits() != self.n_qubits {
            return Err(Error::Dimension(format!(
                "bipartition over {} qubits applied to {}-qubit state",
                cut.n_qubits(),
                self.n_qubits
            )));
        }
        let (a, b) = (cut.block_a(), cut.block_b());
        let mut m = ComplexMatrix::zeros(1 << a.len(), 1 << b.len());
        for (idx, &amp) in self.amplitudes.iter().enumerate() {
            let i = gather_bits(idx, self.n_qubits, a);
            let j = gather_bits(idx, self.n_qubits, b);
            m[(i, j)] = amp;
        }
        Ok(m)
    }

    /// Schmidt coefficients across `cut`, descending.
    pub fn schmidt_coefficients(&self, cut: &Bipartition) -> Result<Vec<f64>> {
        svd_values(&self.reshape_across(cut)?)
    }
}

fn check_len(n_qubits: usize, len: usize) -> Result<()> {
    if n_qubits >= usize::BITS as usize || len != 1usize << n_qubits {
        return Err(Error::Dimension(format!(
            "{n_qubits}-qubit state needs 2^{n_qubits} amplitudes, got {len}"
        )));
    }
    Ok(())
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Bits of `index` at the given qubit positions, packed with the first listed
/// qubit most significant.
#[inline]
pub(crate) fn gather_bits(index: usize, n_qubits: usize, qubits: &[usize]) -> usize {
    qubits.iter().fold(0, |acc, &q| {
        (acc << 1) | ((index >> (n_qubits - 1 - q)) & 1)
    })
}

/// Applies a 2×2 matrix `[[a, b], [c, d]]` to qubit `q`.
pub(crate) fn apply_single(amps: &mut [C64], n_qubits: usize, q: usize, m: [[C64; 2]; 2]) {
    let bit = 1usize << (n_qubits - 1 - q);
    let dim = amps.len();
    let mut base = 0;
    while base < dim {
        for i in base..base + bit {
            let j = i | bit;
            let (x, y) = (amps[i], amps[j]);
            amps[i] = m[0][0] * x + m[0][1] * y;
            amps[j] = m[1][0] * x + m[1][1] * y;
        }
        base += bit << 1;
    }
}

pub(crate) fn apply_cz(amps: &mut [C64], n_qubits: usize, a: usize, b: usize) {
    let mask = (1usize << (n_qubits - 1 - a)) | (1usize << (n_qubits - 1 - b));
    for (i, z) in amps.iter_mut().enumerate() {
        if i & mask == mask {
            *z = -*z;
        }
    }
}

/// Applies a `2^k × 2^k` matrix to the listed qubits (first listed = most
/// significant bit of the local index).
pub(crate) fn apply_on_qubits(
    amps: &mut [C64],
    n_qubits: usize,
    targets: &[usize],
    m: &ComplexMatrix,
) {
    let k = targets.len();
    let local = 1usize << k;
    debug_assert_eq!(m.rows(), local);
    let target_mask: usize = targets
        .iter()
        .map(|&q| 1usize << (n_qubits - 1 - q))
        .sum();
    // Offsets of each local basis state inside the full index.
    let offsets: Vec<usize> = (0..local)
        .map(|l| {
            targets.iter().enumerate().fold(0, |acc, (pos, &q)| {
                if (l >> (k - 1 - pos)) & 1 == 1 {
                    acc | (1usize << (n_qubits - 1 - q))
                } else {
                    acc
                }
            })
        })
        .collect();
    let mut buf = vec![C64::default(); local];
    for base in 0..amps.len() {
        if base & target_mask != 0 {
            continue;
        }
        for (l, off) in offsets.iter().enumerate() {
            buf[l] = amps[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let row = &m.data()[r * local..(r + 1) * local];
            amps[base | off] = row.iter().zip(&buf).map(|(a, b)| a * b).sum();
        }
    }
}

/// A split of `{0, …, n−1}` into two nonempty sorted blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    block_a: Vec<usize>,
    block_b: Vec<usize>,
}

impl Bipartition {
    pub fn new(n_qubits: usize, block_a: &[usize]) -> Result<Self> {
        let mut a = block_a.to_vec();
        a.sort_unstable();
        a.dedup();
        if a.len() != block_a.len() {
            return Err(Error::QubitSet("duplicate qubit in block".into()));
        }
        if let Some(&q) = a.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::QubitSet(format!("qubit {q} out of range for n={n_qubits}")));
        }
        if a.is_empty() || a.len() == n_qubits {
            return Err(Error::QubitSet("both blocks must be nonempty".into()));
        }
        let b = (0..n_qubits).filter(|q| !a.contains(q)).collect();
        Ok(Self {
            block_a: a,
            block_b: b,
        })
    }

    /// Contiguous cut `{0, …, ⌊n/2⌋−1} | rest`.
    pub fn balanced(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, &(0..n_qubits / 2).collect::<Vec<_>>())
    }

    pub fn block_a(&self) -> &[usize] {
        &self.block_a
    }

    pub fn block_b(&self) -> &[usize] {
        &self.block_b
    }

    pub fn n_qubits(&self) -> usize {
        self.block_a.len() + self.block_b.len()
    }
}

/// Reduced density matrix on the qubits in `keep` (sorted ascending).
pub fn partial_trace(state: &StateVector, keep: &[usize]) -> Result<ComplexMatrix> {
    let n = state.n_qubits();
    if keep.is_empty() {
        return Err(Error::QubitSet("partial trace needs a nonempty keep set".into()));
    }
    if keep.len() == n {
        let mut sorted = keep.to_vec();
        sorted.sort_unstable();
        if sorted != (0..n).collect::<Vec<_>>() {
            return Err(Error::QubitSet(format!("invalid keep set {keep:?}")));
        }
        return Ok(state.density_matrix());
    }
    let cut = Bipartition::new(n, keep)?;
    let m = state.reshape_across(&cut)?;
    m.matmul(&m.adjoint())
}

/// Purity `Tr(ρ²)` of a density matrix.
pub fn purity(rho: &ComplexMatrix) -> f64 {
    // Tr(ρ²) = Σ_ij ρ_ij ρ_ji = Σ_ij |ρ_ij|² for Hermitian ρ.
    rho.data().iter().map(|z| z.norm_sqr()).sum()
}
