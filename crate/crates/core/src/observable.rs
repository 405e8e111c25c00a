//! Bounded Hermitian observables acting on a few qubits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, pauli, ComplexMatrix, StateVector, DEFAULT_DENSE_CAP};

/// A Hermitian operator `M_S ⊗ I` with `‖M_S‖₂ ≤ 1`, stored on its support `S`.
///
/// Only the local matrix is kept, so observables on large registers cost
/// `O(4^|S|)` memory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawObservable")]
pub struct Observable {
    n_qubits: usize,
    support: Vec<usize>,
    local: ComplexMatrix,
}

#[derive(Deserialize)]
struct RawObservable {
    n_qubits: usize,
    support: Vec<usize>,
    local: ComplexMatrix,
}

impl TryFrom<RawObservable> for Observable {
    type Error = Error;

    fn try_from(raw: RawObservable) -> Result<Self> {
        Observable::local(raw.n_qubits, raw.support, raw.local)
    }
}

impl Observable {
    pub fn local(n_qubits: usize, support: Vec<usize>, local: ComplexMatrix) -> Result<Self> {
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::QubitSet(format!(
                "support {support:?} must be strictly increasing"
            )));
        }
        if let Some(&q) = support.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::QubitSet(format!("qubit {q} out of range for n={n_qubits}")));
        }
        let dim = 1usize << support.len();
        if local.rows() != dim || local.cols() != dim {
            return Err(Error::Dimension(format!(
                "support of size {} needs a {dim}x{dim} matrix",
                support.len()
            )));
        }
        let dev = local.hermitian_deviation();
        if dev > 1e-10 {
            return Err(Error::NotHermitian(dev));
        }
        let norm = local.spectral_norm()?;
        if norm > 1.0 + 1e-9 {
            return Err(Error::NormTooLarge(norm));
        }
        Ok(Self {
            n_qubits,
            support,
            local,
        })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            support: Vec::new(),
            local: ComplexMatrix::identity(1),
        }
    }

    pub fn pauli_z(n_qubits: usize, qubit: usize) -> Result<Self> {
        Self::local(n_qubits, vec![qubit], pauli::z())
    }

    pub fn pauli_x(n_qubits: usize, qubit: usize) -> Result<Self> {
        Self::local(n_qubits, vec![qubit], pauli::x())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn local_matrix(&self) -> &ComplexMatrix {
        &self.local
    }

    /// `Tr(O)` over the full register.
    pub fn trace(&self) -> f64 {
        self.local.trace().re * (1u64 << (self.n_qubits - self.support.len())) as f64
    }

    /// `Tr(O²)` over the full register.
    pub fn trace_of_square(&self) -> f64 {
        linalg::purity(&self.local) * (1u64 << (self.n_qubits - self.support.len())) as f64
    }

    /// `O|ψ⟩` as raw amplitudes.
    pub fn apply(&self, state: &StateVector) -> Result<Vec<linalg::C64>> {
        self.check(state)?;
        let mut out = state.amplitudes().to_vec();
        if !self.support.is_empty() {
            linalg::apply_on_qubits(&mut out, self.n_qubits, &self.support, &self.local);
        }
        Ok(out)
    }

    /// `⟨ψ|O|ψ⟩`.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        let applied = self.apply(state)?;
        Ok(state
            .amplitudes()
            .iter()
            .zip(&applied)
            .map(|(a, b)| (a.conj() * b).re)
            .sum())
    }

    /// Full `2^n × 2^n` matrix.
    pub fn dense(&self) -> Result<ComplexMatrix> {
        let dim = 1usize << self.n_qubits;
        if dim > DEFAULT_DENSE_CAP {
            return Err(Error::DenseCap {
                dim,
                cap: DEFAULT_DENSE_CAP,
            });
        }
        let mut m = ComplexMatrix::zeros(dim, dim);
        for j in 0..dim {
            let col = self.apply(&StateVector::basis(self.n_qubits, j))?;
            for (i, z) in col.into_iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        Ok(m)
    }

    fn check(&self, state: &StateVector) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::Dimension(format!(
                "{}-qubit observable on {}-qubit state",
                self.n_qubits,
                state.n_qubits()
            )));
        }
        Ok(())
    }
}

/// Named observables usable from configuration files.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    /// `Z` on qubit 0.
    #[default]
    Z0,
    /// `X` on qubit 0.
    X0,
    /// `Z₀ Z₁`.
    Z0Z1,
    Identity,
}

impl ObservableKind {
    pub fn build(self, n_qubits: usize) -> Result<Observable> {
        match self {
            ObservableKind::Z0 => Observable::pauli_z(n_qubits, 0),
            ObservableKind::X0 => Observable::pauli_x(n_qubits, 0),
            ObservableKind::Z0Z1 => {
                Observable::local(n_qubits, vec![0, 1], linalg::kron(&pauli::z(), &pauli::z())?)
            }
            ObservableKind::Identity => Ok(Observable::identity(n_qubits)),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ObservableKind::Z0 => "z0",
            ObservableKind::X0 => "x0",
            ObservableKind::Z0Z1 => "z0z1",
            ObservableKind::Identity => "identity",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, kron};

    #[test]
    fn z0_traces() {
        let z = Observable::pauli_z(4, 0).unwrap();
        assert_eq!(z.trace(), 0.0);
        assert_eq!(z.trace_of_square(), 16.0);
        assert_eq!(Observable::identity(3).trace(), 8.0);
    }

    #[test]
    fn dense_matches_kron() {
        let z1 = Observable::pauli_z(3, 1).unwrap().dense().unwrap();
        let i2 = ComplexMatrix::identity(2);
        let expected = kron(&kron(&i2, &pauli::z()).unwrap(), &i2).unwrap();
        assert_eq!(z1, expected);
    }

    #[test]
    fn rejects_non_hermitian_and_large_norm() {
        let m = ComplexMatrix::new(2, 2, vec![c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]).unwrap();
        assert!(matches!(Observable::local(1, vec![0], m), Err(Error::NotHermitian(_))));
        let m = ComplexMatrix::identity(2).scale(c(2., 0.));
        assert!(matches!(Observable::local(1, vec![0], m), Err(Error::NormTooLarge(_))));
        assert!(Observable::local(2, vec![1, 0], ComplexMatrix::identity(4)).is_err());
    }

    #[test]
    fn expectation_on_basis_states() {
        let z = Observable::pauli_z(2, 0).unwrap();
        assert_eq!(z.expectation(&StateVector::zero(2)).unwrap(), 1.0);
        assert_eq!(z.expectation(&StateVector::basis(2, 2)).unwrap(), -1.0);
        assert_eq!(z.expectation(&StateVector::basis(2, 1)).unwrap(), 1.0);
    }
}
