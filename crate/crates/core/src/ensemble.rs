//! Seeded randomness: Haar states and unitaries, parameter initializations,
//! and samplable circuit ensembles.
//!
//! Every sampler takes its generator from a [`SeedSpec`]. Trials derive their
//! own stream from the experiment name and trial index, so parallel workers
//! never share generator state and reruns are bit-identical.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::circuit::{self, CircuitLayout, EncodingSpec, ParameterVector};
use crate::design::BoundedCutWidthFamily;
use crate::error::{Error, Result};
use crate::linalg::{c, qr_unitary, ComplexMatrix, StateVector, C64, DENSE_UNITARY_MAX_QUBITS};
use crate::tensor::ModelSpec;

pub type StreamRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    /// Stream for trial `index` of the experiment called `name`.
    pub fn for_trial(master_seed: u64, name: &str, index: u64) -> Self {
        Self::new(master_seed, stream_hash(name, index))
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// FNV-1a over the name, folded with the index through splitmix64.
pub fn stream_hash(name: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix64(h ^ splitmix64(index))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Complex Gaussian with `E|z|² = 1`.
pub(crate) fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    c(standard_normal(rng) * s, standard_normal(rng) * s)
}

/// Haar-random pure state: a normalized complex Gaussian vector.
pub fn haar_state<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> StateVector {
    let amps = (0..1usize << n_qubits).map(|_| complex_normal(rng)).collect();
    StateVector::from_unnormalized(n_qubits, amps).expect("nonzero with probability one")
}

pub fn sample_haar_state(n_qubits: usize, seed: &SeedSpec) -> StateVector {
    haar_state(n_qubits, &mut seed.rng())
}

/// Haar-random unitary on `2^n_qubits` dimensions from the QR factor of a
/// complex Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<ComplexMatrix> {
    haar_unitary_dim(1 << n_qubits, rng)
}

pub(crate) fn haar_unitary_dim<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<ComplexMatrix> {
    let g = ComplexMatrix::new(d, d, (0..d * d).map(|_| complex_normal(rng)).collect())?;
    qr_unitary(&g)
}

pub fn sample_haar_unitary(n_qubits: usize, seed: &SeedSpec) -> Result<ComplexMatrix> {
    if n_qubits > DENSE_UNITARY_MAX_QUBITS {
        return Err(Error::DenseCap {
            dim: 1 << n_qubits,
            cap: 1 << DENSE_UNITARY_MAX_QUBITS,
        });
    }
    haar_unitary(n_qubits, &mut seed.rng())
}

/// Initialization distribution for circuit parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamDist {
    Uniform { low: f64, high: f64 },
    Gaussian { mean: f64, std: f64 },
}

impl ParamDist {
    /// Uniform on `[-π, π)`.
    pub fn uniform_angle() -> Self {
        ParamDist::Uniform { low: -PI, high: PI }
    }

    pub fn gaussian(std: f64) -> Result<Self> {
        if !(std > 0.0 && std.is_finite()) {
            return Err(Error::Parameter(format!("gaussian stddev must be positive, got {std}")));
        }
        Ok(ParamDist::Gaussian { mean: 0.0, std })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ParamDist::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            ParamDist::Gaussian { mean, std } => mean + std * standard_normal(rng),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, p: usize, rng: &mut R) -> ParameterVector {
        ParameterVector::new((0..p).map(|_| self.draw(rng)).collect()).expect("finite draws")
    }
}

/// `p` i.i.d. parameters from `dist`.
pub fn sample_params(dist: &ParamDist, p: usize, seed: &SeedSpec) -> Result<ParameterVector> {
    if p == 0 {
        return Err(Error::Parameter("parameter count must be positive".into()));
    }
    if let ParamDist::Gaussian { std, .. } = dist {
        if !(*std > 0.0) {
            return Err(Error::Parameter(format!("gaussian stddev must be positive, got {std}")));
        }
    }
    Ok(dist.sample(p, &mut seed.rng()))
}

/// A distribution over states and (where defined) unitaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleSpec {
    HaarState {
        n_qubits: usize,
    },
    HaarUnitary {
        n_qubits: usize,
    },
    /// `W(θ) U(x) |0…0⟩` with `θ ~ params` and a fixed input `x`.
    Circuit {
        layout: CircuitLayout,
        encoding: EncodingSpec,
        input: Vec<f64>,
        params: ParamDist,
    },
    /// A model family (tensor-structured or the naive baseline) with fresh
    /// cores and parameters per sample.
    TensorStructured {
        model: ModelSpec,
        input: Vec<f64>,
    },
    BoundedCutWidth(BoundedCutWidthFamily),
}

impl EnsembleSpec {
    /// Circuit ensemble on `|0…0⟩` (zero input, angle encoding).
    pub fn circuit(layout: CircuitLayout, params: ParamDist) -> Self {
        let n = layout.n_qubits();
        EnsembleSpec::Circuit {
            layout,
            encoding: EncodingSpec::angle(n),
            input: vec![0.0; n],
            params,
        }
    }

    pub fn n_qubits(&self) -> usize {
        match self {
            EnsembleSpec::HaarState { n_qubits } | EnsembleSpec::HaarUnitary { n_qubits } => {
                *n_qubits
            }
            EnsembleSpec::Circuit { layout, .. } => layout.n_qubits(),
            EnsembleSpec::TensorStructured { model, .. } => model.n_qubits,
            EnsembleSpec::BoundedCutWidth(f) => f.n_qubits,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            EnsembleSpec::HaarState { .. } => "haar_state",
            EnsembleSpec::HaarUnitary { .. } => "haar_unitary",
            EnsembleSpec::Circuit { .. } => "circuit",
            EnsembleSpec::TensorStructured { .. } => "tensor_structured",
            EnsembleSpec::BoundedCutWidth(_) => "bounded_cut_width",
        }
    }

    pub fn sample_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<StateVector> {
        match self {
            EnsembleSpec::HaarState { n_qubits } => Ok(haar_state(*n_qubits, rng)),
            EnsembleSpec::HaarUnitary { n_qubits } => {
                let u = haar_unitary(*n_qubits, rng)?;
                StateVector::new(*n_qubits, u.column(0))
            }
            EnsembleSpec::Circuit {
                layout,
                encoding,
                input,
                params,
            } => {
                let theta = params.sample(layout.param_count(), rng);
                circuit::prepare_state(layout, &theta, encoding, input)
            }
            EnsembleSpec::TensorStructured { model, input } => model.sample(rng)?.state(input),
            EnsembleSpec::BoundedCutWidth(f) => {
                let u = f.sample_unitary(rng)?;
                StateVector::new(f.n_qubits, u.column(0))
            }
        }
    }

    /// Dense unitary draw; the fixed encoding is omitted since it cancels in
    /// every unitary diagnostic.
    pub fn sample_unitary<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ComplexMatrix> {
        let n = self.n_qubits();
        if n > DENSE_UNITARY_MAX_QUBITS {
            return Err(Error::DenseCap {
                dim: 1 << n,
                cap: 1 << DENSE_UNITARY_MAX_QUBITS,
            });
        }
        match self {
            EnsembleSpec::HaarState { .. } => Err(Error::Parameter(
                "a Haar state ensemble has no unitary draws".into(),
            )),
            EnsembleSpec::HaarUnitary { n_qubits } => haar_unitary(*n_qubits, rng),
            EnsembleSpec::Circuit { layout, params, .. } => {
                let theta = params.sample(layout.param_count(), rng);
                circuit::circuit_unitary(layout, &theta)
            }
            EnsembleSpec::TensorStructured { model, .. } => model.sample(rng)?.unitary(),
            EnsembleSpec::BoundedCutWidth(f) => f.sample_unitary(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observable::Observable;
    use crate::stats;

    #[test]
    fn haar_state_norms() {
        let mut rng = SeedSpec::new(1, 0).rng();
        for n in 1..6 {
            let s = haar_state(n, &mut rng);
            assert!((s.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn haar_state_single_qubit_mean_z() {
        let mut rng = SeedSpec::new(2, 0).rng();
        let z = Observable::pauli_z(1, 0).unwrap();
        let vals: Vec<f64> = (0..20000)
            .map(|_| z.expectation(&haar_state(1, &mut rng)).unwrap())
            .collect();
        assert!(stats::mean(&vals).abs() <= 3.0 / (20000f64).sqrt());
    }

    #[test]
    fn params_deterministic_and_moments() {
        let seed = SeedSpec::for_trial(11, "params", 0);
        let a = sample_params(&ParamDist::uniform_angle(), 100_000, &seed).unwrap();
        let b = sample_params(&ParamDist::uniform_angle(), 100_000, &seed).unwrap();
        assert_eq!(a, b);
        assert!(stats::mean(a.values()).abs() < 0.02);
        let g = sample_params(&ParamDist::gaussian(1.0).unwrap(), 100_000, &seed).unwrap();
        assert!((stats::variance(g.values()) - 1.0).abs() < 0.02);
    }

    #[test]
    fn invalid_distributions() {
        assert!(ParamDist::gaussian(0.0).is_err());
        assert!(ParamDist::gaussian(-1.0).is_err());
        let bad = ParamDist::Gaussian { mean: 0.0, std: 0.0 };
        assert!(sample_params(&bad, 3, &SeedSpec::new(0, 0)).is_err());
        assert!(sample_params(&ParamDist::uniform_angle(), 0, &SeedSpec::new(0, 0)).is_err());
    }

    #[test]
    fn distinct_streams_differ() {
        let a = SeedSpec::for_trial(5, "exp", 0).rng().random::<u64>();
        let b = SeedSpec::for_trial(5, "exp", 1).rng().random::<u64>();
        let c = SeedSpec::for_trial(5, "other", 0).rng().random::<u64>();
        assert!(a != b && a != c && b != c);
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let u = sample_haar_unitary(3, &SeedSpec::new(9, 9)).unwrap();
        assert!(u.is_unitary(1e-10));
        assert!(sample_haar_unitary(9, &SeedSpec::new(9, 9)).is_err());
    }
}
