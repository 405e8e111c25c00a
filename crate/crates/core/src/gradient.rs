//! Exact and finite-difference gradients, the generator observable, and
//! gradient statistics over random parameter draws.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{self, CircuitLayout, EncodingSpec, Gate, ParameterVector};
use crate::ensemble::{EnsembleSpec, SeedSpec};
use crate::error::{Error, Result};
use crate::linalg::{apply_single, c, ComplexMatrix, StateVector, DENSE_UNITARY_MAX_QUBITS};
use crate::observable::Observable;
use crate::stats;
use crate::tensor::{ModelDraw, ModelFamily, ModelSpec};

/// Index of the single rotation gate driven by slot `k`.
fn driven_gate(layout: &CircuitLayout, k: usize) -> Result<usize> {
    if k >= layout.param_count() {
        return Err(Error::Parameter(format!(
            "slot {k} out of range for {} parameters",
            layout.param_count()
        )));
    }
    match layout.gates_for_slot(k).as_slice() {
        [g] => Ok(*g),
        gates => Err(Error::Parameter(format!(
            "slot {k} drives {} gates; the two-point shift rule needs exactly one",
            gates.len()
        ))),
    }
}

/// `[f(θ_k + π/2) − f(θ_k − π/2)] / 2`.
pub fn parameter_shift_gradient(
    layout: &CircuitLayout,
    params: &ParameterVector,
    encoding: &EncodingSpec,
    x: &[f64],
    obs: &Observable,
    k: usize,
) -> Result<f64> {
    driven_gate(layout, k)?;
    let plus = circuit::expectation(layout, &params.shifted(k, FRAC_PI_2), encoding, x, obs)?;
    let minus = circuit::expectation(layout, &params.shifted(k, -FRAC_PI_2), encoding, x, obs)?;
    Ok(0.5 * (plus - minus))
}

/// Central difference with step `h ∈ [1e-6, 1e-2]`.
pub fn finite_difference_gradient(
    layout: &CircuitLayout,
    params: &ParameterVector,
    encoding: &EncodingSpec,
    x: &[f64],
    obs: &Observable,
    k: usize,
    h: f64,
) -> Result<f64> {
    if !(1e-6..=1e-2).contains(&h) {
        return Err(Error::Parameter(format!("step {h} outside [1e-6, 1e-2]")));
    }
    if k >= params.len() {
        return Err(Error::Parameter(format!("slot {k} out of range")));
    }
    let plus = circuit::expectation(layout, &params.shifted(k, h), encoding, x, obs)?;
    let minus = circuit::expectation(layout, &params.shifted(k, -h), encoding, x, obs)?;
    Ok((plus - minus) / (2.0 * h))
}

/// The gradient of slot `k` written as an expectation in the frame of gate `k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    /// `G̃_k = (i/2)[P_k, B†OB]`, with `B` the gates after gate `k`.
    pub matrix: ComplexMatrix,
    /// The state right after gate `k`.
    pub chi: StateVector,
}

impl Generator {
    /// `⟨χ|G̃_k|χ⟩`.
    pub fn gradient(&self) -> Result<f64> {
        let g = self.matrix.matvec(self.chi.amplitudes())?;
        Ok(self
            .chi
            .amplitudes()
            .iter()
            .zip(&g)
            .map(|(a, b)| (a.conj() * b).re)
            .sum())
    }
}

/// Builds `G̃_k` densely (at most 7 qubits) for the circuit applied to `input`.
pub fn generator_observable(
    layout: &CircuitLayout,
    params: &ParameterVector,
    input: &StateVector,
    obs: &Observable,
    k: usize,
) -> Result<Generator> {
    let n = layout.n_qubits();
    if n > DENSE_UNITARY_MAX_QUBITS {
        return Err(Error::DenseCap {
            dim: 1 << n,
            cap: 1 << DENSE_UNITARY_MAX_QUBITS,
        });
    }
    if obs.n_qubits() != n {
        return Err(Error::Dimension(format!(
            "{}-qubit observable for {n}-qubit layout",
            obs.n_qubits()
        )));
    }
    let g = driven_gate(layout, k)?;
    let Gate::Rotation { axis, target, .. } = &layout.gates()[g] else {
        return Err(Error::Parameter(format!("slot {k} does not drive a rotation")));
    };
    let end = layout.gates().len();
    let mut chi = input.clone();
    circuit::apply_gates(layout, params, &mut chi, 0..g + 1)?;

    // Column j of B†OB is B† O B |j⟩.
    let dim = 1usize << n;
    let mut conj = ComplexMatrix::zeros(dim, dim);
    for j in 0..dim {
        let mut s = StateVector::basis(n, j);
        circuit::apply_gates(layout, params, &mut s, g + 1..end)?;
        let mut col = obs.apply(&s)?;
        circuit::apply_gates_raw(layout, params, &mut col, g + 1..end, true);
        for (i, z) in col.into_iter().enumerate() {
            conj[(i, j)] = z;
        }
    }

    // P·M column by column, then (i/2)(PM − (PM)†) since M and P are Hermitian.
    let p = axis.pauli();
    let p2 = [[p[(0, 0)], p[(0, 1)]], [p[(1, 0)], p[(1, 1)]]];
    let mut pm = ComplexMatrix::zeros(dim, dim);
    let mut col = vec![c(0., 0.); dim];
    for j in 0..dim {
        for (i, z) in col.iter_mut().enumerate() {
            *z = conj[(i, j)];
        }
        apply_single(&mut col, n, *target, p2);
        for (i, z) in col.iter().enumerate() {
            pm[(i, j)] = *z;
        }
    }
    let matrix = pm.sub(&pm.adjoint())?.scale(c(0., 0.5));
    Ok(Generator { matrix, chi })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientStats {
    pub trials: usize,
    pub mean: f64,
    pub mean_stderr: f64,
    pub variance: f64,
    /// Bootstrap standard error of the variance.
    pub variance_stderr: f64,
}

const BOOTSTRAP_RESAMPLES: usize = 400;

impl GradientStats {
    pub fn from_samples(samples: &[f64], bootstrap_seed: SeedSpec) -> Self {
        let mut rng = bootstrap_seed.rng();
        Self {
            trials: samples.len(),
            mean: stats::mean(samples),
            mean_stderr: stats::bootstrap_stderr(samples, stats::mean, BOOTSTRAP_RESAMPLES, &mut rng),
            variance: stats::variance(samples),
            variance_stderr: stats::bootstrap_stderr(
                samples,
                stats::variance,
                BOOTSTRAP_RESAMPLES,
                &mut rng,
            ),
        }
    }
}

/// Slot `k` gradient of one draw from `ensemble`.
fn sample_gradient(
    ensemble: &EnsembleSpec,
    obs: &Observable,
    k: usize,
    seed: SeedSpec,
) -> Result<f64> {
    let mut rng = seed.rng();
    match ensemble {
        EnsembleSpec::Circuit {
            layout,
            encoding,
            input,
            params,
        } => {
            let theta = params.sample(layout.param_count(), &mut rng);
            parameter_shift_gradient(layout, &theta, encoding, input, obs, k)
        }
        EnsembleSpec::TensorStructured { model, input } => match model.sample(&mut rng)? {
            ModelDraw::Tensor { .. } if model.family == ModelFamily::TensorHyper => {
                Err(Error::Variant {
                    expected: "model with free circuit parameters",
                    found: "tensor_hyper",
                })
            }
            draw => {
                let (encoding, theta) = draw.bind()?;
                parameter_shift_gradient(draw.layout(), &theta, &encoding, input, obs, k)
            }
        },
        other => Err(Error::Variant {
            expected: "circuit or tensor_structured",
            found: other.label(),
        }),
    }
}

/// Mean and variance of `∂f/∂θ_k` over fresh parameter draws.
pub fn gradient_statistics(
    ensemble: &EnsembleSpec,
    obs: &Observable,
    k: usize,
    trials: usize,
    master_seed: u64,
) -> Result<GradientStats> {
    if trials < 30 {
        return Err(Error::Parameter(format!(
            "gradient statistics need at least 30 trials, got {trials}"
        )));
    }
    let name = format!("gradient/{}/n{}/k{k}", ensemble.label(), ensemble.n_qubits());
    let samples: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            sample_gradient(
                ensemble,
                obs,
                k,
                SeedSpec::for_trial(master_seed, &name, t as u64),
            )
        })
        .collect::<Result<_>>()?;
    Ok(GradientStats::from_samples(
        &samples,
        SeedSpec::for_trial(master_seed, &format!("{name}/bootstrap"), 0),
    ))
}

/// Finite-difference step for tensor-core gradients.
pub const CORE_FD_STEP: f64 = 1e-4;

/// Per-entry statistics of `∂f/∂φ_j` over fresh model draws, for every
/// tensor-map parameter `j`.
pub fn core_gradient_statistics(
    spec: &ModelSpec,
    x: &[f64],
    obs: &Observable,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<GradientStats>> {
    if spec.family == ModelFamily::NaiveHea {
        return Err(Error::Variant {
            expected: "tensor-structured model",
            found: "naive_hea",
        });
    }
    if trials < 30 {
        return Err(Error::Parameter(format!(
            "gradient statistics need at least 30 trials, got {trials}"
        )));
    }
    let name = format!("core_gradient/{}/n{}", spec.family.name(), spec.n_qubits);
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = SeedSpec::for_trial(master_seed, &name, t as u64).rng();
            let draw = spec.sample(&mut rng)?;
            (0..draw.core_parameter_count())
                .map(|j| draw.core_gradient_fd(j, x, obs, CORE_FD_STEP))
                .collect()
        })
        .collect::<Result<_>>()?;
    let entries = per_trial[0].len();
    Ok((0..entries)
        .map(|j| {
            let samples: Vec<f64> = per_trial.iter().map(|row| row[j]).collect();
            GradientStats::from_samples(
                &samples,
                SeedSpec::for_trial(master_seed, &format!("{name}/bootstrap"), j as u64),
            )
        })
        .collect())
}
