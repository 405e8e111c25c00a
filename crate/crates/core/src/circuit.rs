//! Gate set, layered ansätze, angle encoding and exact statevector simulation.
//!
//! A model output is `f(θ, x) = ⟨0…0| U(x)† W(θ)† O W(θ) U(x) |0…0⟩`, where
//! `U(x)` is the encoding and `W(θ)` a [`CircuitLayout`] bound to a
//! [`ParameterVector`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    self, apply_cz, apply_on_qubits, apply_single, c, ComplexMatrix, StateVector, C64,
    DENSE_UNITARY_MAX_QUBITS,
};
use crate::observable::Observable;
use crate::tensor::TTMatrixMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> ComplexMatrix {
        match self {
            Axis::X => linalg::pauli::x(),
            Axis::Y => linalg::pauli::y(),
            Axis::Z => linalg::pauli::z(),
        }
    }

    /// `exp(-i θ P / 2)`.
    pub fn rotation(self, theta: f64) -> [[C64; 2]; 2] {
        let (s, co) = (theta / 2.0).sin_cos();
        match self {
            Axis::X => [[c(co, 0.), c(0., -s)], [c(0., -s), c(co, 0.)]],
            Axis::Y => [[c(co, 0.), c(-s, 0.)], [c(s, 0.), c(co, 0.)]],
            Axis::Z => [[c(co, -s), c(0., 0.)], [c(0., 0.), c(co, s)]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    Rotation { axis: Axis, target: usize, slot: usize },
    Cz { control: usize, target: usize },
    Fixed { matrix: ComplexMatrix, targets: Vec<usize> },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Gate::Rotation { target, .. } => vec![*target],
            Gate::Cz { control, target } => vec![*control, *target],
            Gate::Fixed { targets, .. } => targets.clone(),
        }
    }

    pub fn slot(&self) -> Option<usize> {
        match self {
            Gate::Rotation { slot, .. } => Some(*slot),
            _ => None,
        }
    }

    fn apply(&self, amps: &mut [C64], n: usize, params: &[f64]) {
        match self {
            Gate::Rotation { axis, target, slot } => {
                apply_single(amps, n, *target, axis.rotation(params[*slot]))
            }
            Gate::Cz { control, target } => apply_cz(amps, n, *control, *target),
            Gate::Fixed { matrix, targets } => apply_on_qubits(amps, n, targets, matrix),
        }
    }

    fn apply_adjoint(&self, amps: &mut [C64], n: usize, params: &[f64]) {
        match self {
            Gate::Rotation { axis, target, slot } => {
                apply_single(amps, n, *target, axis.rotation(-params[*slot]))
            }
            Gate::Cz { control, target } => apply_cz(amps, n, *control, *target),
            Gate::Fixed { matrix, targets } => {
                apply_on_qubits(amps, n, targets, &matrix.adjoint())
            }
        }
    }
}

/// An ordered gate list over `n_qubits` with `param_count` symbolic slots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLayout")]
pub struct CircuitLayout {
    n_qubits: usize,
    gates: Vec<Gate>,
    param_count: usize,
}

#[derive(Deserialize)]
struct RawLayout {
    n_qubits: usize,
    gates: Vec<Gate>,
    param_count: usize,
}

impl TryFrom<RawLayout> for CircuitLayout {
    type Error = Error;

    fn try_from(raw: RawLayout) -> Result<Self> {
        CircuitLayout::new(raw.n_qubits, raw.gates, raw.param_count)
    }
}

impl CircuitLayout {
    pub fn new(n_qubits: usize, gates: Vec<Gate>, param_count: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits >= 31 {
            return Err(Error::Layout(format!("unsupported qubit count {n_qubits}")));
        }
        let mut used = vec![false; param_count];
        for (i, gate) in gates.iter().enumerate() {
            let qubits = gate.qubits();
            if let Some(&q) = qubits.iter().find(|&&q| q >= n_qubits) {
                return Err(Error::Layout(format!("gate {i} targets qubit {q} >= {n_qubits}")));
            }
            let mut sorted = qubits.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != qubits.len() {
                return Err(Error::Layout(format!("gate {i} repeats a qubit")));
            }
            match gate {
                Gate::Rotation { slot, .. } => {
                    if *slot >= param_count {
                        return Err(Error::Layout(format!(
                            "gate {i} uses slot {slot} >= {param_count}"
                        )));
                    }
                    used[*slot] = true;
                }
                Gate::Fixed { matrix, targets } => {
                    let dim = 1usize << targets.len();
                    if matrix.rows() != dim || matrix.cols() != dim {
                        return Err(Error::Layout(format!(
                            "gate {i}: {}x{} matrix on {} qubits",
                            matrix.rows(),
                            matrix.cols(),
                            targets.len()
                        )));
                    }
                    let dev = matrix.unitarity_deviation();
                    if dev > 1e-10 {
                        return Err(Error::NotUnitary(dev));
                    }
                }
                Gate::Cz { .. } => {}
            }
        }
        if let Some(slot) = used.iter().position(|u| !u) {
            return Err(Error::Layout(format!("parameter slot {slot} is never used")));
        }
        Ok(Self {
            n_qubits,
            gates,
            param_count,
        })
    }

    /// Layout without gates.
    pub fn empty(n_qubits: usize) -> Result<Self> {
        Self::new(n_qubits, Vec::new(), 0)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Indices of the gates driven by `slot`.
    pub fn gates_for_slot(&self, slot: usize) -> Vec<usize> {
        self.gates
            .iter()
            .enumerate()
            .filter(|(_, g)| g.slot() == Some(slot))
            .map(|(i, _)| i)
            .collect()
    }

    /// `self` followed by `next`, with `next`'s slots shifted past ours.
    pub fn concat(&self, next: &CircuitLayout) -> Result<Self> {
        if self.n_qubits != next.n_qubits {
            return Err(Error::Dimension(format!(
                "cannot concatenate {}- and {}-qubit layouts",
                self.n_qubits, next.n_qubits
            )));
        }
        let offset = self.param_count;
        let shifted = next.gates.iter().cloned().map(|g| match g {
            Gate::Rotation { axis, target, slot } => Gate::Rotation {
                axis,
                target,
                slot: slot + offset,
            },
            other => other,
        });
        let gates = self.gates.iter().cloned().chain(shifted).collect();
        Self::new(self.n_qubits, gates, self.param_count + next.param_count)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Hardware-efficient ansatz: each layer applies `R_Y` then `R_Z` on every
/// qubit (fresh slots) followed by a ring of CZ gates `(i, i+1 mod n)`.
pub fn build_hea(n: usize, depth: usize) -> Result<CircuitLayout> {
    if n < 2 || depth < 1 {
        return Err(Error::Layout(format!("HEA needs n >= 2 and depth >= 1, got n={n}, depth={depth}")));
    }
    layered(n, depth, (0..n).map(|i| (i, (i + 1) % n)).collect())
}

/// Layered ansatz with the same rotations as [`build_hea`] but an open chain
/// of CZ gates `(i, i+1)`, `i < n−1`. Each layer crosses any contiguous cut at
/// most once, so a depth-`L` circuit has operator Schmidt rank at most `2^L`
/// across such cuts and a light cone that widens by one qubit per layer.
pub fn build_chain_hea(n: usize, depth: usize) -> Result<CircuitLayout> {
    if n < 2 || depth < 1 {
        return Err(Error::Layout(format!("chain ansatz needs n >= 2 and depth >= 1, got n={n}, depth={depth}")));
    }
    layered(n, depth, (0..n - 1).map(|i| (i, i + 1)).collect())
}

fn layered(n: usize, depth: usize, entanglers: Vec<(usize, usize)>) -> Result<CircuitLayout> {
    let mut gates = Vec::with_capacity(depth * (2 * n + entanglers.len()));
    let mut slot = 0;
    for _ in 0..depth {
        for q in 0..n {
            for axis in [Axis::Y, Axis::Z] {
                gates.push(Gate::Rotation {
                    axis,
                    target: q,
                    slot,
                });
                slot += 1;
            }
        }
        gates.extend(entanglers.iter().map(|&(control, target)| Gate::Cz { control, target }));
    }
    CircuitLayout::new(n, gates, slot)
}

/// Circuit parameters `θ` in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite parameter value".into()));
        }
        Ok(Self(values))
    }

    pub fn zeros(p: usize) -> Self {
        Self(vec![0.0; p])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Copy with `values[k] += delta`.
    pub fn shifted(&self, k: usize, delta: f64) -> Self {
        let mut v = self.0.clone();
        v[k] += delta;
        Self(v)
    }
}

impl TryFrom<Vec<f64>> for ParameterVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ParameterVector> for Vec<f64> {
    fn from(p: ParameterVector) -> Self {
        p.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncodingKind {
    /// `R_Y(x_i)` on qubit `i`.
    Angle,
    /// `R_Y(T(x)_i)` on qubit `i`, with `T` a tensor-train feature map.
    FeatureMap { map: Box<TTMatrixMap> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodingSpec {
    pub kind: EncodingKind,
    pub input_dim: usize,
}

impl EncodingSpec {
    pub fn angle(n_qubits: usize) -> Self {
        Self {
            kind: EncodingKind::Angle,
            input_dim: n_qubits,
        }
    }

    pub fn feature_map(map: TTMatrixMap) -> Self {
        Self {
            input_dim: map.input_dim(),
            kind: EncodingKind::FeatureMap { map: Box::new(map) },
        }
    }

    /// Number of qubits the encoding acts on.
    pub fn n_qubits(&self) -> usize {
        match &self.kind {
            EncodingKind::Angle => self.input_dim,
            EncodingKind::FeatureMap { map } => map.output_dim(),
        }
    }
}

/// The product of `R_Y` rotations that prepares an encoded input.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleEncoding {
    angles: Vec<f64>,
}

impl AngleEncoding {
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        if state.n_qubits() != self.angles.len() {
            return Err(Error::Dimension(format!(
                "{}-angle encoding on {}-qubit state",
                self.angles.len(),
                state.n_qubits()
            )));
        }
        let n = state.n_qubits();
        for (q, &a) in self.angles.iter().enumerate() {
            if a != 0.0 {
                apply_single(state.amplitudes_mut(), n, q, Axis::Y.rotation(a));
            }
        }
        Ok(())
    }

    /// `U(x)|0…0⟩`.
    pub fn prepare(&self) -> StateVector {
        let mut state = StateVector::zero(self.angles.len());
        self.apply(&mut state).expect("sizes agree");
        state
    }
}

pub fn encode_input(spec: &EncodingSpec, x: &[f64]) -> Result<AngleEncoding> {
    if x.len() != spec.input_dim {
        return Err(Error::Dimension(format!(
            "input of length {} for encoding of dimension {}",
            x.len(),
            spec.input_dim
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter("non-finite input".into()));
    }
    let angles = match &spec.kind {
        EncodingKind::Angle => x.to_vec(),
        EncodingKind::FeatureMap { map } => map.apply(x)?,
    };
    Ok(AngleEncoding { angles })
}

fn check_bind(layout: &CircuitLayout, params: &ParameterVector, state: &StateVector) -> Result<()> {
    if params.len() != layout.param_count {
        return Err(Error::Dimension(format!(
            "layout has {} slots, got {} parameters",
            layout.param_count,
            params.len()
        )));
    }
    if state.n_qubits() != layout.n_qubits {
        return Err(Error::Dimension(format!(
            "{}-qubit layout on {}-qubit state",
            layout.n_qubits,
            state.n_qubits()
        )));
    }
    Ok(())
}

/// Gate application on raw amplitudes, which need not be normalized.
pub(crate) fn apply_gates_raw(
    layout: &CircuitLayout,
    params: &ParameterVector,
    amps: &mut [C64],
    range: std::ops::Range<usize>,
    adjoint: bool,
) {
    let n = layout.n_qubits;
    let gates = &layout.gates[range];
    if adjoint {
        gates
            .iter()
            .rev()
            .for_each(|g| g.apply_adjoint(amps, n, params.values()));
    } else {
        gates.iter().for_each(|g| g.apply(amps, n, params.values()));
    }
}

/// Applies the gates with indices in `range` in place.
pub fn apply_gates(
    layout: &CircuitLayout,
    params: &ParameterVector,
    state: &mut StateVector,
    range: std::ops::Range<usize>,
) -> Result<()> {
    check_bind(layout, params, state)?;
    let n = layout.n_qubits;
    let amps = state.amplitudes_mut();
    for gate in &layout.gates[range] {
        gate.apply(amps, n, params.values());
    }
    Ok(())
}

/// Applies the adjoint of the gates in `range` (last gate first) in place.
pub fn apply_gates_adjoint(
    layout: &CircuitLayout,
    params: &ParameterVector,
    state: &mut StateVector,
    range: std::ops::Range<usize>,
) -> Result<()> {
    check_bind(layout, params, state)?;
    let n = layout.n_qubits;
    let amps = state.amplitudes_mut();
    for gate in layout.gates[range].iter().rev() {
        gate.apply_adjoint(amps, n, params.values());
    }
    Ok(())
}

/// `W(θ)|state⟩`.
pub fn apply_circuit(
    layout: &CircuitLayout,
    params: &ParameterVector,
    state: &StateVector,
) -> Result<StateVector> {
    let mut out = state.clone();
    apply_gates(layout, params, &mut out, 0..layout.gates.len())?;
    Ok(out)
}

/// Dense `W(θ)`, built column by column from basis states.
pub fn circuit_unitary(layout: &CircuitLayout, params: &ParameterVector) -> Result<ComplexMatrix> {
    let n = layout.n_qubits;
    if n > DENSE_UNITARY_MAX_QUBITS {
        return Err(Error::DenseCap {
            dim: 1 << n,
            cap: 1 << DENSE_UNITARY_MAX_QUBITS,
        });
    }
    let dim = 1usize << n;
    let mut u = ComplexMatrix::zeros(dim, dim);
    for j in 0..dim {
        let col = apply_circuit(layout, params, &StateVector::basis(n, j))?;
        for (i, &z) in col.amplitudes().iter().enumerate() {
            u[(i, j)] = z;
        }
    }
    Ok(u)
}

/// The state `W(θ) U(x) |0…0⟩`.
pub fn prepare_state(
    layout: &CircuitLayout,
    params: &ParameterVector,
    encoding: &EncodingSpec,
    x: &[f64],
) -> Result<StateVector> {
    let enc = encode_input(encoding, x)?;
    if enc.angles.len() != layout.n_qubits {
        return Err(Error::Dimension(format!(
            "encoding prepares {} qubits, layout has {}",
            enc.angles.len(),
            layout.n_qubits
        )));
    }
    let mut state = enc.prepare();
    apply_gates(layout, params, &mut state, 0..layout.gates.len())?;
    Ok(state)
}

/// `f(θ, x) = ⟨ψ|O|ψ⟩` with `ψ = W(θ) U(x) |0…0⟩`.
pub fn expectation(
    layout: &CircuitLayout,
    params: &ParameterVector,
    encoding: &EncodingSpec,
    x: &[f64],
    obs: &Observable,
) -> Result<f64> {
    let state = prepare_state(layout, params, encoding, x)?;
    obs.expectation(&state)
}

/// Scaled `π·tanh`, the bounded odd squashing used by the tensor maps.
pub(crate) fn squash(z: f64) -> f64 {
    PI * z.tanh()
}
