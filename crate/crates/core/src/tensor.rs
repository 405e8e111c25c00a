//! Bounded-rank tensor trains and the tensor-structured model families.
//!
//! A [`TTMatrixMap`] is a linear map in tensor-train matrix format followed by
//! the odd squashing `z ↦ π·tanh(z)`, so every output is a valid rotation
//! angle. Two model families use it:
//!
//! * **TN-VQC** encodes `T(x; φ)` as angles, then applies `W(θ)`;
//! * **TensorHyper-VQC** generates all circuit parameters `θ = T(σ; φ)` from a
//!   Gaussian seed vector `σ`, then evaluates `W(θ) U(x)`.
//!
//! Both run their circuit on [`build_chain_hea`], a constant-depth
//! nearest-neighbour ansatz whose cut rank and light cone do not grow with
//! the qubit count. The naive baseline is the ring ansatz [`build_hea`].

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    self, build_chain_hea, build_hea, squash, CircuitLayout, EncodingSpec, ParameterVector,
};
use crate::ensemble::{standard_normal, ParamDist, SeedSpec};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, StateVector};
use crate::observable::{Observable, ObservableKind};
use crate::stats;

/// One 3-index core `(left rank, mode, right rank)`, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TtCore {
    pub left: usize,
    pub mode: usize,
    pub right: usize,
    pub data: Vec<f64>,
}

impl TtCore {
    #[inline]
    fn at(&self, a: usize, i: usize, b: usize) -> f64 {
        self.data[(a * self.mode + i) * self.right + b]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<TtCore>", into = "Vec<TtCore>")]
pub struct TensorTrain {
    cores: Vec<TtCore>,
}

impl TensorTrain {
    pub fn new(cores: Vec<TtCore>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::Dimension("tensor train needs at least one core".into()));
        }
        if cores[0].left != 1 || cores[cores.len() - 1].right != 1 {
            return Err(Error::Dimension("boundary ranks must be 1".into()));
        }
        for (l, core) in cores.iter().enumerate() {
            if core.data.len() != core.left * core.mode * core.right {
                return Err(Error::Dimension(format!("core {l} has wrong entry count")));
            }
            if core.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        if let Some(l) = cores.windows(2).position(|w| w[0].right != w[1].left) {
            return Err(Error::Dimension(format!("rank mismatch between cores {l} and {}", l + 1)));
        }
        Ok(Self { cores })
    }

    pub fn cores(&self) -> &[TtCore] {
        &self.cores
    }

    /// Bond dimensions including the two boundary ones.
    pub fn ranks(&self) -> Vec<usize> {
        std::iter::once(1)
            .chain(self.cores.iter().map(|c| c.right))
            .collect()
    }

    pub fn max_rank(&self) -> usize {
        self.ranks().into_iter().max().unwrap_or(1)
    }

    pub fn parameter_count(&self) -> usize {
        self.cores.iter().map(|c| c.data.len()).sum()
    }

    /// `(core, offset)` of flat parameter `j`.
    fn locate(&self, mut j: usize) -> (usize, usize) {
        for (l, core) in self.cores.iter().enumerate() {
            if j < core.data.len() {
                return (l, j);
            }
            j -= core.data.len();
        }
        panic!("parameter index out of range");
    }
}

impl TryFrom<Vec<TtCore>> for TensorTrain {
    type Error = Error;

    fn try_from(cores: Vec<TtCore>) -> Result<Self> {
        Self::new(cores)
    }
}

impl From<TensorTrain> for Vec<TtCore> {
    fn from(t: TensorTrain) -> Self {
        t.cores
    }
}

/// Smallest product of 2s and 3s that is `>= target`, as a descending list of
/// factors (`[1]` for `target <= 1`).
pub fn factor_modes(target: usize) -> Vec<usize> {
    if target <= 1 {
        return vec![1];
    }
    let mut best = usize::MAX;
    let mut p3 = 1usize;
    while p3 < best {
        let mut v = p3;
        while v < target {
            v *= 2;
        }
        best = best.min(v);
        match p3.checked_mul(3) {
            Some(next) => p3 = next,
            None => break,
        }
    }
    let mut modes = Vec::new();
    let mut v = best;
    while v % 3 == 0 {
        modes.push(3);
        v /= 3;
    }
    while v % 2 == 0 {
        modes.push(2);
        v /= 2;
    }
    modes
}

/// Pads the shorter mode list with 1s so both have one entry per core.
fn align_modes(mut a: Vec<usize>, mut b: Vec<usize>) -> (Vec<usize>, Vec<usize>) {
    let len = a.len().max(b.len());
    a.resize(len, 1);
    b.resize(len, 1);
    (a, b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    /// `π·tanh(z)`: odd, bounded to `(−π, π)`.
    ScaledTanh,
}

/// Linear map `ℝ^input_dim → ℝ^output_dim` in tensor-train matrix format,
/// followed by an elementwise activation. Inputs are zero-padded to the
/// product of the input modes and outputs truncated to `output_dim`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TTMatrixMap {
    train: TensorTrain,
    in_modes: Vec<usize>,
    out_modes: Vec<usize>,
    input_dim: usize,
    output_dim: usize,
    activation: Activation,
}

impl TTMatrixMap {
    /// Core `l` has mode index `i·out_modes[l] + j`.
    pub fn from_train(
        train: TensorTrain,
        in_modes: Vec<usize>,
        out_modes: Vec<usize>,
        input_dim: usize,
        output_dim: usize,
    ) -> Result<Self> {
        let d = train.cores().len();
        if in_modes.len() != d || out_modes.len() != d {
            return Err(Error::Dimension(format!(
                "{d} cores but {} input and {} output modes",
                in_modes.len(),
                out_modes.len()
            )));
        }
        for (l, core) in train.cores().iter().enumerate() {
            if core.mode != in_modes[l] * out_modes[l] {
                return Err(Error::Dimension(format!(
                    "core {l} mode {} != {}·{}",
                    core.mode, in_modes[l], out_modes[l]
                )));
            }
        }
        let n_in: usize = in_modes.iter().product();
        let n_out: usize = out_modes.iter().product();
        if input_dim == 0 || input_dim > n_in || output_dim == 0 || output_dim > n_out {
            return Err(Error::Dimension(format!(
                "dims {input_dim}->{output_dim} do not fit padded {n_in}->{n_out}"
            )));
        }
        Ok(Self {
            train,
            in_modes,
            out_modes,
            input_dim,
            output_dim,
            activation: Activation::ScaledTanh,
        })
    }

    /// Random map with bond rank `rank` and cores drawn i.i.d. from
    /// `N(0, 1/(rank · in_mode))`.
    pub fn random<R: Rng + ?Sized>(
        input_dim: usize,
        output_dim: usize,
        rank: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if rank == 0 {
            return Err(Error::Parameter("rank must be positive".into()));
        }
        let (in_modes, out_modes) = align_modes(factor_modes(input_dim), factor_modes(output_dim));
        let d = in_modes.len();
        let cores = (0..d)
            .map(|l| {
                let left = if l == 0 { 1 } else { rank };
                let right = if l + 1 == d { 1 } else { rank };
                let mode = in_modes[l] * out_modes[l];
                let std = 1.0 / ((rank * in_modes[l]) as f64).sqrt();
                TtCore {
                    left,
                    mode,
                    right,
                    data: (0..left * mode * right)
                        .map(|_| std * standard_normal(rng))
                        .collect(),
                }
            })
            .collect();
        Self::from_train(TensorTrain::new(cores)?, in_modes, out_modes, input_dim, output_dim)
    }

    /// Scales the first core by `gain`, which multiplies the pre-activation by
    /// `gain`. Used to keep pre-activations `O(1)` for unit-norm inputs, whose
    /// coordinates have variance `1/input_dim` rather than 1.
    pub fn with_input_gain(mut self, gain: f64) -> Self {
        self.train.cores[0].data.iter_mut().for_each(|v| *v *= gain);
        self
    }

    /// Rank-1 map acting as the identity on `dim` coordinates.
    pub fn identity(dim: usize) -> Result<Self> {
        let modes = factor_modes(dim);
        let cores = modes
            .iter()
            .map(|&m| {
                let mut data = vec![0.0; m * m];
                for i in 0..m {
                    data[i * m + i] = 1.0;
                }
                TtCore {
                    left: 1,
                    mode: m * m,
                    right: 1,
                    data,
                }
            })
            .collect();
        Self::from_train(TensorTrain::new(cores)?, modes.clone(), modes, dim, dim)
    }

    pub fn train(&self) -> &TensorTrain {
        &self.train
    }

    pub fn in_modes(&self) -> &[usize] {
        &self.in_modes
    }

    pub fn out_modes(&self) -> &[usize] {
        &self.out_modes
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn max_rank(&self) -> usize {
        self.train.max_rank()
    }

    pub fn parameter_count(&self) -> usize {
        self.train.parameter_count()
    }

    /// Copy with flat core parameter `j` shifted by `delta`.
    pub fn perturbed(&self, j: usize, delta: f64) -> Self {
        let mut out = self.clone();
        let (l, off) = out.train.locate(j);
        out.train.cores[l].data[off] += delta;
        out
    }

    /// The pre-activation TT-matrix product, truncated to `output_dim`.
    pub fn linear(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.input_dim {
            return Err(Error::Dimension(format!(
                "input of length {} for map with input_dim {}",
                v.len(),
                self.input_dim
            )));
        }
        let n_in: usize = self.in_modes.iter().product();
        // Working tensor laid out as [out prefix J][bond a][remaining input R].
        let mut t = vec![0.0; n_in];
        t[..v.len()].copy_from_slice(v);
        let (mut outer, mut bond, mut rest) = (1usize, 1usize, n_in);
        for (l, core) in self.train.cores().iter().enumerate() {
            let (ni, nj) = (self.in_modes[l], self.out_modes[l]);
            let rest_next = rest / ni;
            let mut next = vec![0.0; outer * nj * core.right * rest_next];
            for jo in 0..outer {
                for a in 0..bond {
                    for i in 0..ni {
                        let src = &t[((jo * bond + a) * ni + i) * rest_next..][..rest_next];
                        for j in 0..nj {
                            for b in 0..core.right {
                                let g = core.at(a, i * nj + j, b);
                                if g == 0.0 {
                                    continue;
                                }
                                let dst = &mut next
                                    [(((jo * nj + j) * core.right) + b) * rest_next..][..rest_next];
                                for (d, s) in dst.iter_mut().zip(src) {
                                    *d += g * s;
                                }
                            }
                        }
                    }
                }
            }
            t = next;
            outer *= nj;
            bond = core.right;
            rest = rest_next;
        }
        t.truncate(self.output_dim);
        Ok(t)
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut y = self.linear(v)?;
        match self.activation {
            Activation::ScaledTanh => y.iter_mut().for_each(|z| *z = squash(*z)),
        }
        Ok(y)
    }
}

/// Exact TT-matrix product followed by the activation.
pub fn tt_contract(map: &TTMatrixMap, v: &[f64]) -> Result<Vec<f64>> {
    map.apply(v)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum TensorStructuredModel {
    TnVqc {
        encoder: TTMatrixMap,
        circuit: CircuitLayout,
    },
    TensorHyper {
        generator: TTMatrixMap,
        sigma_dim: usize,
        circuit: CircuitLayout,
    },
}

impl TensorStructuredModel {
    pub fn tn_vqc(encoder: TTMatrixMap, circuit: CircuitLayout) -> Result<Self> {
        if encoder.output_dim() != circuit.n_qubits() {
            return Err(Error::Dimension(format!(
                "encoder output {} must equal qubit count {}",
                encoder.output_dim(),
                circuit.n_qubits()
            )));
        }
        Ok(Self::TnVqc { encoder, circuit })
    }

    pub fn tensor_hyper(generator: TTMatrixMap, circuit: CircuitLayout) -> Result<Self> {
        if generator.output_dim() != circuit.param_count() {
            return Err(Error::Dimension(format!(
                "generator output {} must equal parameter count {}",
                generator.output_dim(),
                circuit.param_count()
            )));
        }
        Ok(Self::TensorHyper {
            sigma_dim: generator.input_dim(),
            generator,
            circuit,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::TnVqc { .. } => "tn_vqc",
            Self::TensorHyper { .. } => "tensor_hyper",
        }
    }

    pub fn circuit(&self) -> &CircuitLayout {
        match self {
            Self::TnVqc { circuit, .. } | Self::TensorHyper { circuit, .. } => circuit,
        }
    }

    pub fn tensor_map(&self) -> &TTMatrixMap {
        match self {
            Self::TnVqc { encoder, .. } => encoder,
            Self::TensorHyper { generator, .. } => generator,
        }
    }

    /// `θ = T(σ; φ)`.
    pub fn generated_params(&self, sigma: &[f64]) -> Result<ParameterVector> {
        match self {
            Self::TensorHyper {
                generator,
                sigma_dim,
                ..
            } => {
                if sigma.len() != *sigma_dim {
                    return Err(Error::Dimension(format!(
                        "sigma of length {} for sigma_dim {sigma_dim}",
                        sigma.len()
                    )));
                }
                ParameterVector::new(generator.apply(sigma)?)
            }
            other => Err(Error::Variant {
                expected: "tensor_hyper",
                found: other.name(),
            }),
        }
    }

    /// Copy with flat tensor-map parameter `j` shifted by `delta`.
    pub fn perturbed(&self, j: usize, delta: f64) -> Self {
        match self {
            Self::TnVqc { encoder, circuit } => Self::TnVqc {
                encoder: encoder.perturbed(j, delta),
                circuit: circuit.clone(),
            },
            Self::TensorHyper {
                generator,
                sigma_dim,
                circuit,
            } => Self::TensorHyper {
                generator: generator.perturbed(j, delta),
                sigma_dim: *sigma_dim,
                circuit: circuit.clone(),
            },
        }
    }
}

/// `W(θ) U(T(x; φ)) |0…0⟩` measured with `obs`.
pub fn tn_vqc_forward(
    model: &TensorStructuredModel,
    x: &[f64],
    params: &ParameterVector,
    obs: &Observable,
) -> Result<f64> {
    match model {
        TensorStructuredModel::TnVqc { encoder, circuit } => circuit::expectation(
            circuit,
            params,
            &EncodingSpec::feature_map(encoder.clone()),
            x,
            obs,
        ),
        other => Err(Error::Variant {
            expected: "tn_vqc",
            found: other.name(),
        }),
    }
}

/// `W(T(σ; φ)) U(x) |0…0⟩` measured with `obs`.
pub fn tensor_hyper_forward(
    model: &TensorStructuredModel,
    x: &[f64],
    sigma: &[f64],
    obs: &Observable,
) -> Result<f64> {
    match model {
        TensorStructuredModel::TensorHyper { circuit, .. } => {
            let theta = model.generated_params(sigma)?;
            circuit::expectation(circuit, &theta, &EncodingSpec::angle(circuit.n_qubits()), x, obs)
        }
        other => Err(Error::Variant {
            expected: "tensor_hyper",
            found: other.name(),
        }),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelFamily {
    /// Ring ansatz with i.i.d. uniform parameters and angle encoding.
    NaiveHea,
    TnVqc,
    TensorHyper,
}

impl ModelFamily {
    pub fn name(self) -> &'static str {
        match self {
            ModelFamily::NaiveHea => "naive_hea",
            ModelFamily::TnVqc => "tn_vqc",
            ModelFamily::TensorHyper => "tensor_hyper",
        }
    }
}

/// Width of the TN-VQC raw input relative to the qubit count.
pub const TN_INPUT_FACTOR: usize = 4;

/// Everything needed to draw one model instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub n_qubits: usize,
    pub depth: usize,
    pub rank: usize,
}

impl ModelSpec {
    pub fn new(family: ModelFamily, n_qubits: usize, depth: usize, rank: usize) -> Self {
        Self {
            family,
            n_qubits,
            depth,
            rank,
        }
    }

    /// Length of the classical input `x`.
    pub fn input_dim(&self) -> usize {
        match self.family {
            ModelFamily::TnVqc => TN_INPUT_FACTOR * self.n_qubits,
            _ => self.n_qubits,
        }
    }

    /// Depth 0 gives the empty circuit `W = I`.
    pub fn layout(&self) -> Result<CircuitLayout> {
        if self.depth == 0 {
            return CircuitLayout::empty(self.n_qubits);
        }
        match self.family {
            ModelFamily::NaiveHea => build_hea(self.n_qubits, self.depth),
            _ => build_chain_hea(self.n_qubits, self.depth),
        }
    }

    /// Draws `θ` (naive, TN-VQC) or `σ` (TensorHyper) together with fresh cores.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ModelDraw> {
        let layout = self.layout()?;
        match self.family {
            ModelFamily::NaiveHea => {
                let theta = ParamDist::uniform_angle().sample(layout.param_count(), rng);
                Ok(ModelDraw::Naive { layout, theta })
            }
            ModelFamily::TnVqc => {
                let dim = self.input_dim();
                let encoder = TTMatrixMap::random(dim, self.n_qubits, self.rank, rng)?
                    .with_input_gain((dim as f64).sqrt());
                let theta = ParamDist::uniform_angle().sample(layout.param_count(), rng);
                Ok(ModelDraw::Tensor {
                    model: TensorStructuredModel::tn_vqc(encoder, layout)?,
                    aux: theta.into(),
                })
            }
            ModelFamily::TensorHyper => {
                let p = layout.param_count();
                let sigma_dim: usize = factor_modes(p).iter().product();
                let generator = TTMatrixMap::random(sigma_dim, p, self.rank, rng)?;
                let sigma = (0..sigma_dim).map(|_| standard_normal(rng)).collect();
                Ok(ModelDraw::Tensor {
                    model: TensorStructuredModel::tensor_hyper(generator, layout)?,
                    aux: sigma,
                })
            }
        }
    }
}

/// One sampled model: its structure plus the per-draw vector (`θ` for the
/// naive and TN-VQC families, `σ` for TensorHyper).
#[derive(Clone, Debug, PartialEq)]
pub enum ModelDraw {
    Naive {
        layout: CircuitLayout,
        theta: ParameterVector,
    },
    Tensor {
        model: TensorStructuredModel,
        aux: Vec<f64>,
    },
}

impl ModelDraw {
    pub fn layout(&self) -> &CircuitLayout {
        match self {
            ModelDraw::Naive { layout, .. } => layout,
            ModelDraw::Tensor { model, .. } => model.circuit(),
        }
    }

    /// Encoding and bound circuit parameters for this draw.
    pub fn bind(&self) -> Result<(EncodingSpec, ParameterVector)> {
        match self {
            ModelDraw::Naive { layout, theta } => {
                Ok((EncodingSpec::angle(layout.n_qubits()), theta.clone()))
            }
            ModelDraw::Tensor { model, aux } => match model {
                TensorStructuredModel::TnVqc { encoder, .. } => Ok((
                    EncodingSpec::feature_map(encoder.clone()),
                    ParameterVector::new(aux.clone())?,
                )),
                TensorStructuredModel::TensorHyper { circuit, .. } => Ok((
                    EncodingSpec::angle(circuit.n_qubits()),
                    model.generated_params(aux)?,
                )),
            },
        }
    }

    pub fn state(&self, x: &[f64]) -> Result<StateVector> {
        let (encoding, theta) = self.bind()?;
        circuit::prepare_state(self.layout(), &theta, &encoding, x)
    }

    pub fn output(&self, x: &[f64], obs: &Observable) -> Result<f64> {
        obs.expectation(&self.state(x)?)
    }

    /// Outputs on many inputs with the encoding bound once.
    pub fn outputs(&self, xs: &[Vec<f64>], obs: &Observable) -> Result<Vec<f64>> {
        let (encoding, theta) = self.bind()?;
        xs.iter()
            .map(|x| {
                let s = circuit::prepare_state(self.layout(), &theta, &encoding, x)?;
                obs.expectation(&s)
            })
            .collect()
    }

    pub fn unitary(&self) -> Result<ComplexMatrix> {
        let (_, theta) = self.bind()?;
        circuit::circuit_unitary(self.layout(), &theta)
    }

    /// Number of tensor-map parameters (zero for the naive family).
    pub fn core_parameter_count(&self) -> usize {
        match self {
            ModelDraw::Naive { .. } => 0,
            ModelDraw::Tensor { model, .. } => model.tensor_map().parameter_count(),
        }
    }

    /// Central finite difference of the output in tensor-map parameter `j`.
    pub fn core_gradient_fd(&self, j: usize, x: &[f64], obs: &Observable, h: f64) -> Result<f64> {
        let ModelDraw::Tensor { model, aux } = self else {
            return Err(Error::Variant {
                expected: "tensor-structured model",
                found: "naive_hea",
            });
        };
        let eval = |delta: f64| {
            ModelDraw::Tensor {
                model: model.perturbed(j, delta),
                aux: aux.clone(),
            }
            .output(x, obs)
        };
        Ok((eval(h)? - eval(-h)?) / (2.0 * h))
    }
}

/// How the circuit depth depends on the qubit count in a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum DepthRule {
    Fixed(usize),
    PerQubit(usize),
}

impl DepthRule {
    pub fn depth(self, n: usize) -> usize {
        match self {
            DepthRule::Fixed(d) => d,
            DepthRule::PerQubit(k) => k * n,
        }
    }
}

/// Distribution of classical inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputDist {
    /// Standard normal, normalized to unit Euclidean norm.
    UnitNormal,
    /// I.i.d. uniform on `[-π, π)`.
    UniformAngle,
}

impl InputDist {
    pub fn draw<R: Rng + ?Sized>(self, dim: usize, rng: &mut R) -> Vec<f64> {
        match self {
            InputDist::UnitNormal => {
                let v: Vec<f64> = (0..dim).map(|_| standard_normal(rng)).collect();
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                v.into_iter().map(|a| a / norm).collect()
            }
            InputDist::UniformAngle => {
                let d = ParamDist::uniform_angle();
                (0..dim).map(|_| d.draw(rng)).collect()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    pub family: ModelFamily,
    pub n_values: Vec<usize>,
    pub depth: DepthRule,
    pub rank: usize,
    pub trials: usize,
    pub observable: ObservableKind,
    pub input: InputDist,
    pub master_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: usize,
    pub mean: f64,
    pub mean_stderr: f64,
    pub variance: f64,
    pub variance_stderr: f64,
    /// Bootstrap 95% interval for the variance.
    pub ci_low: f64,
    pub ci_high: f64,
}

const BOOTSTRAP_RESAMPLES: usize = 400;

/// Output variance over fresh model draws at a fixed input, per qubit count.
pub fn anti_concentration_scan(settings: &ScanSettings) -> Result<Vec<ScanRow>> {
    if settings.trials < 100 {
        return Err(Error::Parameter(format!(
            "anti-concentration scan needs at least 100 trials, got {}",
            settings.trials
        )));
    }
    let tag = format!("scan/{}", settings.family.name());
    settings
        .n_values
        .iter()
        .map(|&n| {
            let spec = ModelSpec::new(settings.family, n, settings.depth.depth(n), settings.rank);
            let obs = settings.observable.build(n)?;
            let x = settings.input.draw(
                spec.input_dim(),
                &mut SeedSpec::for_trial(settings.master_seed, &format!("{tag}/input"), n as u64).rng(),
            );
            let outputs: Vec<f64> = (0..settings.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = SeedSpec::for_trial(
                        settings.master_seed,
                        &format!("{tag}/n{n}"),
                        t as u64,
                    )
                    .rng();
                    spec.sample(&mut rng)?.output(&x, &obs)
                })
                .collect::<Result<_>>()?;
            let variance = stats::variance(&outputs);
            let mut boot_rng =
                SeedSpec::for_trial(settings.master_seed, &format!("{tag}/bootstrap"), n as u64).rng();
            let variance_stderr =
                stats::bootstrap_stderr(&outputs, stats::variance, BOOTSTRAP_RESAMPLES, &mut boot_rng);
            Ok(ScanRow {
                n,
                mean: stats::mean(&outputs),
                mean_stderr: stats::stderr_of_mean(&outputs),
                variance,
                variance_stderr,
                ci_low: (variance - 1.96 * variance_stderr).max(0.0),
                ci_high: variance + 1.96 * variance_stderr,
            })
        })
        .collect()
}
