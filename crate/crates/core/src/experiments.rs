//! Experiment drivers: configuration, runners, result tables and output files.
//!
//! Every runner is a pure function of its [`ExperimentConfig`]. Trials draw
//! from per-trial streams and are collected in index order, so the emitted
//! CSV is byte-identical across reruns and thread counts.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{build_chain_hea, build_hea, encode_input, EncodingSpec};
use crate::design::{design_report, BoundedCutWidthFamily, DiagnosticSettings};
use crate::ensemble::{haar_state, EnsembleSpec, ParamDist, SeedSpec};
use crate::error::{Error, Result};
use crate::gradient::{
    core_gradient_statistics, generator_observable, gradient_statistics, parameter_shift_gradient,
};
use crate::observable::{Observable, ObservableKind};
use crate::stats::{self, linear_fit};
use crate::tensor::{anti_concentration_scan, DepthRule, InputDist, ModelFamily, ModelSpec, ScanSettings};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Fig4,
    Concentration,
    Tail,
    Spread,
    Gradients,
    Design,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Fig4,
        ExperimentKind::Concentration,
        ExperimentKind::Tail,
        ExperimentKind::Spread,
        ExperimentKind::Gradients,
        ExperimentKind::Design,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Fig4 => "fig4",
            ExperimentKind::Concentration => "concentration",
            ExperimentKind::Tail => "tail",
            ExperimentKind::Spread => "spread",
            ExperimentKind::Gradients => "gradients",
            ExperimentKind::Design => "design",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthMode {
    /// `depth` layers at every `n`.
    Fixed,
    /// `depth · n` layers.
    PerQubit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSource {
    Circuit,
    HaarState,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Svg => "svg",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "svg" => Ok(OutputFormat::Svg),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

/// Flat experiment configuration. Keys not used by an experiment are
/// ignored by its runner but still echoed in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n_values: Vec<usize>,
    /// Depth of the naive ring ansatz, interpreted through `depth_mode`.
    pub depth: usize,
    pub depth_mode: DepthMode,
    /// Depth of the chain ansatz under the tensor-structured models.
    pub tensor_depth: usize,
    pub models: Vec<ModelFamily>,
    pub observable: ObservableKind,
    pub m_values: Vec<usize>,
    pub trials: usize,
    /// Draws per qubit count for the tensor-core gradient statistics.
    pub core_trials: usize,
    pub seeds: usize,
    pub rank: usize,
    pub master_seed: u64,
    pub input: InputDist,
    pub source: SampleSource,
    /// From this qubit count on, the tail experiment samples Haar states
    /// even when `source = "circuit"`.
    pub haar_state_min_n: usize,
    pub epsilons: Vec<f64>,
    pub gradient_slot: usize,
    pub generator_checks: usize,
    pub frame_pairs: usize,
    pub moment_samples: usize,
    pub purity_samples: usize,
    pub shallow_depth: usize,
    pub cut_width_depth: usize,
    pub max_cut_crossings: usize,
    pub out_dir: String,
    pub format: OutputFormat,
}

/// Largest register simulated gate by gate.
pub const MAX_STATE_QUBITS: usize = 14;

impl ExperimentConfig {
    pub fn defaults(kind: ExperimentKind) -> Self {
        let mut c = ExperimentConfig {
            experiment: kind,
            n_values: (4..=9).collect(),
            depth: 4,
            depth_mode: DepthMode::PerQubit,
            tensor_depth: 3,
            models: vec![ModelFamily::NaiveHea],
            observable: ObservableKind::Z0,
            m_values: vec![32],
            trials: 1000,
            core_trials: 300,
            seeds: 10,
            rank: 2,
            master_seed: 2025,
            input: InputDist::UnitNormal,
            source: SampleSource::Circuit,
            haar_state_min_n: 10,
            epsilons: vec![0.1, 0.2, 0.5, 2.0],
            gradient_slot: 0,
            generator_checks: 20,
            frame_pairs: 500,
            moment_samples: 1000,
            purity_samples: 200,
            shallow_depth: 1,
            cut_width_depth: 4,
            max_cut_crossings: 1,
            out_dir: "results".into(),
            format: OutputFormat::Csv,
        };
        match kind {
            ExperimentKind::Fig4 => {
                c.n_values = vec![12];
                c.depth = 6;
                c.depth_mode = DepthMode::Fixed;
                c.tensor_depth = 6;
                c.models = vec![ModelFamily::NaiveHea, ModelFamily::TnVqc, ModelFamily::TensorHyper];
                c.m_values = (3..=8).map(|k| 1 << k).collect();
            }
            ExperimentKind::Concentration => {}
            ExperimentKind::Tail => {
                c.source = SampleSource::HaarState;
                c.trials = 5000;
            }
            ExperimentKind::Spread => {
                c.n_values = (4..=10).collect();
                c.models = vec![ModelFamily::NaiveHea, ModelFamily::TnVqc];
                c.seeds = 20;
                c.input = InputDist::UniformAngle;
            }
            ExperimentKind::Gradients => {
                c.models = vec![ModelFamily::NaiveHea, ModelFamily::TnVqc, ModelFamily::TensorHyper];
            }
            ExperimentKind::Design => {
                c.n_values = (3..=6).collect();
            }
        }
        c
    }

    /// Parses a TOML document over the defaults for `kind`. When `kind` is
    /// `None` the document must name the experiment.
    pub fn from_toml_str(text: &str, kind: Option<ExperimentKind>) -> Result<Self> {
        let user: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let named = match user.get("experiment") {
            Some(v) => Some(
                v.as_str()
                    .ok_or_else(|| Error::Config("`experiment` must be a string".into()))?
                    .parse::<ExperimentKind>()?,
            ),
            None => None,
        };
        let kind = match (kind, named) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::Config(format!(
                    "config is for `{}` but `{}` was requested",
                    b.name(),
                    a.name()
                )))
            }
            (Some(k), _) | (None, Some(k)) => k,
            (None, None) => return Err(Error::Config("config must set `experiment`".into())),
        };
        let mut table = toml::Table::try_from(Self::defaults(kind))
            .map_err(|e| Error::Config(e.to_string()))?;
        table.extend(user);
        let config: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, kind: Option<ExperimentKind>) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, kind)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.master_seed > i64::MAX as u64 {
            return bad(format!("master_seed must be at most {}", i64::MAX));
        }
        if self.n_values.is_empty() {
            return bad("n_values must not be empty".into());
        }
        let (lo, hi) = match self.experiment {
            ExperimentKind::Concentration => (3, 12),
            ExperimentKind::Design => (2, crate::linalg::DENSE_UNITARY_MAX_QUBITS),
            _ => (2, MAX_STATE_QUBITS),
        };
        if let Some(n) = self.n_values.iter().find(|&&n| n < lo || n > hi) {
            return bad(format!(
                "n={n} outside [{lo}, {hi}] for `{}`",
                self.experiment.name()
            ));
        }
        for (key, v) in [
            ("depth", self.depth),
            ("tensor_depth", self.tensor_depth),
            ("rank", self.rank),
            ("trials", self.trials),
            ("seeds", self.seeds),
            ("shallow_depth", self.shallow_depth),
            ("cut_width_depth", self.cut_width_depth),
            ("purity_samples", self.purity_samples),
        ] {
            if v == 0 {
                return bad(format!("`{key}` must be positive"));
            }
        }
        if self.m_values.is_empty() || self.m_values.contains(&0) {
            return bad("m_values must be nonempty and positive".into());
        }
        if self.models.is_empty() && self.experiment != ExperimentKind::Design {
            return bad("models must not be empty".into());
        }
        match self.experiment {
            ExperimentKind::Concentration if self.trials < 100 => {
                bad("concentration needs trials >= 100".into())
            }
            ExperimentKind::Gradients if self.trials < 30 || self.core_trials < 30 => {
                bad("gradients need trials and core_trials >= 30".into())
            }
            ExperimentKind::Spread if self.m_values.contains(&1) => {
                bad("spread needs m >= 2".into())
            }
            ExperimentKind::Tail
                if self.epsilons.is_empty()
                    || self.epsilons.iter().any(|e| !(e.is_finite() && *e > 0.0)) =>
            {
                bad("epsilons must be nonempty, finite and positive".into())
            }
            ExperimentKind::Design if self.frame_pairs < 100 || self.moment_samples < 2 => {
                bad("design needs frame_pairs >= 100 and moment_samples >= 2".into())
            }
            _ => Ok(()),
        }
    }

    pub fn depth_rule(&self) -> DepthRule {
        match self.depth_mode {
            DepthMode::Fixed => DepthRule::Fixed(self.depth),
            DepthMode::PerQubit => DepthRule::PerQubit(self.depth),
        }
    }

    /// Ring depth for the naive family, chain depth for the tensor families.
    pub fn model_spec(&self, family: ModelFamily, n: usize) -> ModelSpec {
        let depth = match family {
            ModelFamily::NaiveHea => self.depth_rule().depth(n),
            _ => self.tensor_depth,
        };
        ModelSpec::new(family, n, depth, self.rank)
    }
}

/// One CSV row. `None` in `n`/`m` prints as an empty field and `None` in
/// `seed` as `all`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: String,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub model: String,
    pub seed: Option<usize>,
    pub statistic: String,
    pub value: f64,
    pub stderr: f64,
}

pub const CSV_HEADER: &str = "experiment,n,m,model,seed,statistic,value,stderr";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub master_seed: u64,
    pub config: ExperimentConfig,
    /// Choices the experiment makes where the source material is silent.
    pub decisions: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub manifest: Manifest,
    pub rows: Vec<ResultRow>,
}

/// Row coordinates: `(n, m, model, seed)`.
type Key<'a> = (Option<usize>, Option<usize>, &'a str, Option<usize>);

impl ResultTable {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self {
            manifest: Manifest {
                experiment: config.experiment.name().into(),
                version: env!("CARGO_PKG_VERSION").into(),
                master_seed: config.master_seed,
                config: config.clone(),
                decisions: decisions(config.experiment)
                    .iter()
                    .map(|s| s.to_string())
                    .collect(),
            },
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, key: Key<'_>, statistic: &str, value: f64, stderr: f64) -> Result<()> {
        if !(stderr >= 0.0) {
            return Err(Error::Invariant(format!(
                "stderr {stderr} for `{statistic}` is not a nonnegative number"
            )));
        }
        let (n, m, model, seed) = key;
        self.rows.push(ResultRow {
            experiment: self.manifest.experiment.clone(),
            n,
            m,
            model: model.into(),
            seed,
            statistic: statistic.into(),
            value,
            stderr,
        });
        Ok(())
    }

    /// Rows with the given statistic, in table order.
    pub fn select<'a>(&'a self, statistic: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.statistic == statistic)
    }

    /// The single aggregate row `(model, n, m, statistic)`, if present.
    pub fn find(&self, model: &str, n: Option<usize>, m: Option<usize>, statistic: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| {
            r.model == model && r.n == n && r.m == m && r.seed.is_none() && r.statistic == statistic
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.experiment,
                opt(r.n),
                opt(r.m),
                r.model,
                r.seed.map_or_else(|| "all".to_string(), |s| s.to_string()),
                r.statistic,
                r.value,
                r.stderr
            );
        }
        out
    }
}

fn decisions(kind: ExperimentKind) -> &'static [&'static str] {
    const COMMON: &str = "observable default Z on qubit 0; naive ansatz = R_Y,R_Z layers with a CZ ring, parameters uniform(-pi, pi)";
    match kind {
        ExperimentKind::Fig4 => &[
            COMMON,
            "tensor-structured models run on an open-chain CZ ansatz of the same depth",
            "TT maps: rank 2, modes padded to 2/3-smooth sizes, activation pi*tanh",
            "TN-VQC input dimension 4n; encoder first core scaled by sqrt(input_dim) for unit-norm inputs",
            "TensorHyper seed sigma ~ N(0,1), redrawn with the cores per seed",
            "datasets are nested prefixes of one input pool per seed; one model draw per seed",
        ],
        ExperimentKind::Concentration => &[
            COMMON,
            "input x fixed per n, drawn once from the configured input distribution",
        ],
        ExperimentKind::Tail => &[
            COMMON,
            "exact Haar states replace circuits from haar_state_min_n qubits on",
        ],
        ExperimentKind::Spread => &[
            COMMON,
            "inputs i.i.d. uniform(-pi, pi) per coordinate; one model draw per seed",
        ],
        ExperimentKind::Gradients => &[
            COMMON,
            "parameter-shift gradients on slot `gradient_slot` (default 0, the first R_Y on qubit 0)",
            "TensorHyper: central differences (h=1e-4) on every core entry; max per-entry variance reported",
        ],
        ExperimentKind::Design => &[
            COMMON,
            "balanced contiguous cut {0..floor(n/2)-1}; OSR threshold 1e-10 relative",
            "tensor family = brickwork of Haar two-qubit gates keeping max_cut_crossings gates across the cut",
            "deep_chain_hea added as a reference: the CZ-ring ansatz preserves the form Y^n and cannot approach a 2-design",
        ],
    }
}

pub fn run(config: &ExperimentConfig) -> Result<ResultTable> {
    config.validate()?;
    match config.experiment {
        ExperimentKind::Fig4 => run_fig4(config),
        ExperimentKind::Concentration => run_output_concentration(config),
        ExperimentKind::Tail => run_tail_probability(config),
        ExperimentKind::Spread => run_spread_scan(config),
        ExperimentKind::Gradients => run_gradient_scan(config),
        ExperimentKind::Design => run_design_diagnostics(config),
    }
}

fn check_outputs(values: &[f64], context: &str) -> Result<()> {
    match values.iter().find(|v| !(v.abs() <= 1.0 + 1e-9)) {
        Some(v) => Err(Error::Invariant(format!(
            "{context}: output {v} outside [-1, 1] for a norm-1 observable"
        ))),
        None => Ok(()),
    }
}

fn input_pool(config: &ExperimentConfig, tag: &str, dim: usize, index: u64, count: usize) -> Vec<Vec<f64>> {
    let mut rng = SeedSpec::for_trial(config.master_seed, &format!("{tag}/inputs/d{dim}"), index).rng();
    (0..count).map(|_| config.input.draw(dim, &mut rng)).collect()
}

/// Standard error of an unbiased sample variance under normal theory.
fn variance_stderr(var: f64, m: usize) -> f64 {
    if m < 2 {
        0.0
    } else {
        var * (2.0 / (m - 1) as f64).sqrt()
    }
}

/// Least-squares slope of `log2(y)` against `x`; `None` unless every `y > 0`.
fn log2_slope(points: &[(f64, f64)]) -> Option<stats::LinearFit> {
    if points.len() < 2 || points.iter().any(|p| !(p.1 > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.log2()).collect();
    Some(linear_fit(&xs, &ys))
}

pub fn run_fig4(config: &ExperimentConfig) -> Result<ResultTable> {
    let mut table = ResultTable::new(config);
    let max_m = *config.m_values.iter().max().expect("validated");
    for &n in &config.n_values {
        let obs = config.observable.build(n)?;
        for &family in &config.models {
            let spec = config.model_spec(family, n);
            let name = format!("fig4/model/{}/n{n}", family.name());
            let per_seed: Vec<Vec<f64>> = (0..config.seeds)
                .into_par_iter()
                .map(|s| {
                    let draw = spec.sample(&mut SeedSpec::for_trial(config.master_seed, &name, s as u64).rng())?;
                    let xs = input_pool(config, "fig4", spec.input_dim(), s as u64, max_m);
                    let out = draw.outputs(&xs, &obs)?;
                    check_outputs(&out, "fig4")?;
                    Ok(config.m_values.iter().map(|&m| stats::variance(&out[..m])).collect())
                })
                .collect::<Result<_>>()?;
            let model = family.name();
            for (s, vars) in per_seed.iter().enumerate() {
                for (&m, &v) in config.m_values.iter().zip(vars) {
                    table.push((Some(n), Some(m), model, Some(s)), "variance", v, variance_stderr(v, m))?;
                }
            }
            let mut means = Vec::new();
            for (i, &m) in config.m_values.iter().enumerate() {
                let vals: Vec<f64> = per_seed.iter().map(|v| v[i]).collect();
                let mean = stats::mean(&vals);
                table.push((Some(n), Some(m), model, None), "variance_mean", mean, stats::stderr_of_mean(&vals))?;
                table.push((Some(n), Some(m), model, None), "variance_std", stats::std_dev(&vals), 0.0)?;
                if m >= 2 {
                    means.push(mean);
                }
            }
            if !means.is_empty() {
                let hi = means.iter().copied().fold(f64::MIN, f64::max);
                let lo = means.iter().copied().fold(f64::MAX, f64::min);
                let ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
                table.push((Some(n), None, model, None), "stability_ratio", ratio, 0.0)?;
            }
        }
    }
    Ok(table)
}

/// `Tr(O)/2^n` and `Tr(O²)/(d(d+1)) − Tr(O)²/(d²(d+1))`.
pub fn haar_output_moments(obs: &Observable) -> (f64, f64) {
    let d = (1u64 << obs.n_qubits()) as f64;
    let (t1, t2) = (obs.trace(), obs.trace_of_square());
    (t1 / d, t2 / (d * (d + 1.0)) - t1 * t1 / (d * d * (d + 1.0)))
}

fn haar_outputs(config: &ExperimentConfig, tag: &str, obs: &Observable, n: usize) -> Result<Vec<f64>> {
    let name = format!("{tag}/haar_state/n{n}");
    (0..config.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = SeedSpec::for_trial(config.master_seed, &name, t as u64).rng();
            obs.expectation(&haar_state(n, &mut rng))
        })
        .collect()
}

pub fn run_output_concentration(config: &ExperimentConfig) -> Result<ResultTable> {
    let mut table = ResultTable::new(config);
    let emit = |table: &mut ResultTable, model: &str, rows: Vec<(usize, f64, f64, f64, f64)>| -> Result<()> {
        for &(n, mean, mean_se, var, var_se) in &rows {
            let obs = config.observable.build(n)?;
            let (haar_mean, haar_var) = haar_output_moments(&obs);
            if mean.abs() > 1.0 + 1e-9 {
                return Err(Error::Invariant(format!("mean output {mean} outside [-1, 1]")));
            }
            let key = (Some(n), None, model, None);
            table.push(key, "mean", mean, mean_se)?;
            table.push(key, "variance", var, var_se)?;
            table.push(key, "haar_mean", haar_mean, 0.0)?;
            table.push(key, "haar_variance", haar_var, 0.0)?;
        }
        let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.0 as f64, r.3)).collect();
        if let Some(fit) = log2_slope(&points) {
            table.push((None, None, model, None), "log2_variance_slope", fit.slope, fit.slope_stderr)?;
        }
        let hi = points.iter().map(|p| p.1).fold(f64::MIN, f64::max);
        let lo = points.iter().map(|p| p.1).fold(f64::MAX, f64::min);
        if hi > 0.0 {
            table.push((None, None, model, None), "variance_min_over_max", lo / hi, 0.0)?;
        }
        Ok(())
    };
    match config.source {
        SampleSource::HaarState => {
            let mut rows = Vec::new();
            for &n in &config.n_values {
                let obs = config.observable.build(n)?;
                let out = haar_outputs(config, "concentration", &obs, n)?;
                check_outputs(&out, "concentration")?;
                let stats = crate::gradient::GradientStats::from_samples(
                    &out,
                    SeedSpec::for_trial(config.master_seed, "concentration/bootstrap", n as u64),
                );
                rows.push((n, stats.mean, stats.mean_stderr, stats.variance, stats.variance_stderr));
            }
            emit(&mut table, "haar_state", rows)?;
        }
        SampleSource::Circuit => {
            for &family in &config.models {
                let depth = match family {
                    ModelFamily::NaiveHea => config.depth_rule(),
                    _ => DepthRule::Fixed(config.tensor_depth),
                };
                let scan = anti_concentration_scan(&ScanSettings {
                    family,
                    n_values: config.n_values.clone(),
                    depth,
                    rank: config.rank,
                    trials: config.trials,
                    observable: config.observable,
                    input: config.input,
                    master_seed: config.master_seed,
                })?;
                let rows = scan
                    .iter()
                    .map(|r| (r.n, r.mean, r.mean_stderr, r.variance, r.variance_stderr))
                    .collect();
                emit(&mut table, family.name(), rows)?;
            }
        }
    }
    Ok(table)
}

pub fn run_tail_probability(config: &ExperimentConfig) -> Result<ResultTable> {
    let mut table = ResultTable::new(config);
    // (model, n, per-epsilon frequencies)
    let mut freqs: Vec<(&str, usize, Vec<f64>)> = Vec::new();
    for &n in &config.n_values {
        let obs = config.observable.build(n)?;
        let use_haar = config.source == SampleSource::HaarState || n >= config.haar_state_min_n;
        let (model, out) = if use_haar {
            ("haar_state", haar_outputs(config, "tail", &obs, n)?)
        } else {
            let spec = config.model_spec(ModelFamily::NaiveHea, n);
            let x = input_pool(config, "tail", spec.input_dim(), n as u64, 1).remove(0);
            let name = format!("tail/naive_hea/n{n}");
            let out = (0..config.trials)
                .into_par_iter()
                .map(|t| {
                    let mut rng = SeedSpec::for_trial(config.master_seed, &name, t as u64).rng();
                    spec.sample(&mut rng)?.output(&x, &obs)
                })
                .collect::<Result<Vec<f64>>>()?;
            ("naive_hea", out)
        };
        check_outputs(&out, "tail")?;
        let center = obs.trace() / (1u64 << n) as f64;
        let total = out.len() as f64;
        let mut per_eps = Vec::new();
        for &eps in &config.epsilons {
            let p = out.iter().filter(|f| (*f - center).abs() > eps).count() as f64 / total;
            table.push(
                (Some(n), None, model, None),
                &format!("exceedance_eps_{eps}"),
                p,
                (p * (1.0 - p) / total).sqrt(),
            )?;
            per_eps.push(p);
        }
        freqs.push((model, n, per_eps));
    }
    for (i, &eps) in config.epsilons.iter().enumerate() {
        let seq: Vec<f64> = freqs.iter().map(|f| f.2[i]).collect();
        let monotone = seq.windows(2).all(|w| w[1] <= w[0]);
        table.push(
            (None, None, "all", None),
            &format!("monotone_eps_{eps}"),
            f64::from(u8::from(monotone)),
            0.0,
        )?;
    }
    Ok(table)
}

pub fn run_spread_scan(config: &ExperimentConfig) -> Result<ResultTable> {
    let mut table = ResultTable::new(config);
    let max_m = *config.m_values.iter().max().expect("validated");
    for &family in &config.models {
        let model = family.name();
        // mean spread per (m, n)
        let mut means: Vec<Vec<(f64, f64)>> = vec![Vec::new(); config.m_values.len()];
        for &n in &config.n_values {
            let obs = config.observable.build(n)?;
            let spec = config.model_spec(family, n);
            let name = format!("spread/model/{model}/n{n}");
            let per_seed: Vec<Vec<f64>> = (0..config.seeds)
                .into_par_iter()
                .map(|s| {
                    let draw = spec.sample(&mut SeedSpec::for_trial(config.master_seed, &name, s as u64).rng())?;
                    let xs = input_pool(config, &format!("spread/n{n}"), spec.input_dim(), s as u64, max_m);
                    let out = draw.outputs(&xs, &obs)?;
                    check_outputs(&out, "spread")?;
                    Ok(config
                        .m_values
                        .iter()
                        .map(|&m| {
                            let hi = out[..m].iter().copied().fold(f64::MIN, f64::max);
                            let lo = out[..m].iter().copied().fold(f64::MAX, f64::min);
                            hi - lo
                        })
                        .collect())
                })
                .collect::<Result<_>>()?;
            for (s, spreads) in per_seed.iter().enumerate() {
                for (&m, &v) in config.m_values.iter().zip(spreads) {
                    table.push((Some(n), Some(m), model, Some(s)), "spread", v, 0.0)?;
                }
            }
            for (i, &m) in config.m_values.iter().enumerate() {
                let vals: Vec<f64> = per_seed.iter().map(|v| v[i]).collect();
                let mean = stats::mean(&vals);
                table.push((Some(n), Some(m), model, None), "spread_mean", mean, stats::stderr_of_mean(&vals))?;
                means[i].push((n as f64, mean));
            }
        }
        for (i, &m) in config.m_values.iter().enumerate() {
            if let Some(fit) = log2_slope(&means[i]) {
                let ratio = fit.slope.exp2();
                table.push(
                    (None, Some(m), model, None),
                    "spread_ratio_per_qubit",
                    ratio,
                    ratio * std::f64::consts::LN_2 * fit.slope_stderr,
                )?;
            }
            let decreasing = means[i].windows(2).all(|w| w[1].1 < w[0].1);
            table.push(
                (None, Some(m), model, None),
                "strictly_decreasing",
                f64::from(u8::from(decreasing)),
                0.0,
            )?;
        }
    }
    Ok(table)
}

/// Maximum `|Tr G̃|`, `|⟨χ|G̃|χ⟩ − shift gradient|` and `‖G̃‖₂` over
/// `generator_checks` fresh draws, each at a uniformly drawn slot.
fn generator_checks(
    config: &ExperimentConfig,
    spec: &ModelSpec,
    x: &[f64],
    obs: &Observable,
) -> Result<(f64, f64, f64)> {
    let name = format!("gradients/generator/{}/n{}", spec.family.name(), spec.n_qubits);
    let results: Vec<(f64, f64, f64)> = (0..config.generator_checks)
        .into_par_iter()
        .map(|c| {
            let mut rng = SeedSpec::for_trial(config.master_seed, &name, c as u64).rng();
            let draw = spec.sample(&mut rng)?;
            let (encoding, theta) = draw.bind()?;
            let k = rng.random_range(0..theta.len());
            let input = encode_input(&encoding, x)?.prepare();
            let generator = generator_observable(draw.layout(), &theta, &input, obs, k)?;
            let shift = parameter_shift_gradient(draw.layout(), &theta, &encoding, x, obs, k)?;
            Ok((
                generator.matrix.trace().norm(),
                (generator.gradient()? - shift).abs(),
                generator.matrix.spectral_norm()?,
            ))
        })
        .collect::<Result<_>>()?;
    let max = |f: fn(&(f64, f64, f64)) -> f64| results.iter().map(f).fold(0.0, f64::max);
    let out = (max(|r| r.0), max(|r| r.1), max(|r| r.2));
    if out.0 > 1e-9 || out.1 > 1e-9 || out.2 > 1.0 + 1e-9 {
        return Err(Error::Invariant(format!(
            "generator check failed at n={}: |Tr G|={:e}, mismatch={:e}, norm={}",
            spec.n_qubits, out.0, out.1, out.2
        )));
    }
    Ok(out)
}

pub fn run_gradient_scan(config: &ExperimentConfig) -> Result<ResultTable> {
    let mut table = ResultTable::new(config);
    for &family in &config.models {
        let model = family.name();
        let mut points = Vec::new();
        for &n in &config.n_values {
            let obs = config.observable.build(n)?;
            let spec = config.model_spec(family, n);
            let x = input_pool(config, "gradients", spec.input_dim(), n as u64, 1).remove(0);
            let key = (Some(n), None, model, None);
            let variance = match family {
                ModelFamily::TensorHyper => {
                    let per_entry = core_gradient_statistics(&spec, &x, &obs, config.core_trials, config.master_seed)?;
                    let best = per_entry
                        .iter()
                        .max_by(|a, b| a.variance.total_cmp(&b.variance))
                        .expect("models have core parameters");
                    let mut vars: Vec<f64> = per_entry.iter().map(|g| g.variance).collect();
                    vars.sort_by(f64::total_cmp);
                    table.push(key, "core_gradient_variance_max", best.variance, best.variance_stderr)?;
                    table.push(key, "core_gradient_variance_median", vars[vars.len() / 2], 0.0)?;
                    table.push(key, "core_gradient_entries", per_entry.len() as f64, 0.0)?;
                    best.variance
                }
                _ => {
                    let ensemble = match family {
                        ModelFamily::NaiveHea => EnsembleSpec::Circuit {
                            layout: build_hea(n, spec.depth)?,
                            encoding: EncodingSpec::angle(n),
                            input: x.clone(),
                            params: ParamDist::uniform_angle(),
                        },
                        _ => EnsembleSpec::TensorStructured {
                            model: spec.clone(),
                            input: x.clone(),
                        },
                    };
                    let g = gradient_statistics(&ensemble, &obs, config.gradient_slot, config.trials, config.master_seed)?;
                    table.push(key, "gradient_mean", g.mean, g.mean_stderr)?;
                    table.push(key, "gradient_variance", g.variance, g.variance_stderr)?;
                    if n <= crate::linalg::DENSE_UNITARY_MAX_QUBITS && config.generator_checks > 0 {
                        let (tr, mismatch, norm) = generator_checks(config, &spec, &x, &obs)?;
                        table.push(key, "generator_trace_max", tr, 0.0)?;
                        table.push(key, "generator_mismatch_max", mismatch, 0.0)?;
                        table.push(key, "generator_norm_max", norm, 0.0)?;
                    }
                    g.variance
                }
            };
            points.push((n as f64, variance));
        }
        if let Some(fit) = log2_slope(&points) {
            table.push((None, None, model, None), "log2_variance_slope", fit.slope, fit.slope_stderr)?;
        }
    }
    Ok(table)
}

pub fn run_design_diagnostics(config: &ExperimentConfig) -> Result<ResultTable> {
    let mut table = ResultTable::new(config);
    let settings = DiagnosticSettings {
        frame_pairs: config.frame_pairs,
        moment_samples: config.moment_samples,
        purity_samples: config.purity_samples,
        master_seed: config.master_seed,
    };
    let names = ["haar", "deep_hea", "deep_chain_hea", "shallow_hea", "bounded_cut_width"];
    let mut purities: Vec<Vec<(f64, f64)>> = vec![Vec::new(); names.len()];
    for &n in &config.n_values {
        let ensembles = [
            EnsembleSpec::HaarUnitary { n_qubits: n },
            EnsembleSpec::circuit(build_hea(n, config.depth_rule().depth(n))?, ParamDist::uniform_angle()),
            EnsembleSpec::circuit(build_chain_hea(n, config.depth_rule().depth(n))?, ParamDist::uniform_angle()),
            EnsembleSpec::circuit(build_hea(n, config.shallow_depth)?, ParamDist::uniform_angle()),
            EnsembleSpec::BoundedCutWidth(BoundedCutWidthFamily::new(
                n,
                config.cut_width_depth,
                config.max_cut_crossings,
            )?),
        ];
        for (i, (name, ensemble)) in names.iter().zip(&ensembles).enumerate() {
            let report = design_report(name, ensemble, &settings)?;
            if report.min_choi_purity < 1.0 / report.max_osr as f64 - 1e-9 {
                return Err(Error::Invariant(format!(
                    "{name} n={n}: Choi purity {} below 1/OSR = 1/{}",
                    report.min_choi_purity, report.max_osr
                )));
            }
            let key = (Some(n), None, *name, None);
            table.push(key, "frame_potential_2", report.frame_potential_2.value, report.frame_potential_2.stderr)?;
            table.push(key, "haar_frame_potential_2", report.haar_frame_potential_2, 0.0)?;
            if let Some(sm) = report.second_moment {
                table.push(key, "second_moment_distance", sm.distance, sm.max_stderr)?;
            }
            table.push(key, "avg_choi_purity", report.avg_choi_purity.value, report.avg_choi_purity.stderr)?;
            table.push(key, "haar_choi_purity", report.haar_choi_purity, 0.0)?;
            table.push(key, "min_choi_purity", report.min_choi_purity, 0.0)?;
            table.push(key, "max_osr", report.max_osr as f64, 0.0)?;
            purities[i].push((n as f64, report.avg_choi_purity.value));
        }
    }
    for (name, points) in names.iter().zip(&purities) {
        if let Some(fit) = log2_slope(points) {
            let factor = (-fit.slope).exp2();
            table.push(
                (None, None, name, None),
                "purity_decay_factor",
                factor,
                factor * std::f64::consts::LN_2 * fit.slope_stderr,
            )?;
        }
    }
    Ok(table)
}

/// Writes `<experiment>.<format>` and `<experiment>.manifest.json` into `dir`.
pub fn emit_outputs(table: &ResultTable, format: OutputFormat, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stem = &table.manifest.experiment;
    let main = dir.join(format!("{stem}.{}", format.extension()));
    let body = match format {
        OutputFormat::Csv => table.to_csv(),
        OutputFormat::Json => serde_json::to_string_pretty(table)? + "\n",
        OutputFormat::Svg => render_svg(table),
    };
    std::fs::write(&main, body)?;
    let manifest = dir.join(format!("{stem}.manifest.json"));
    std::fs::write(&manifest, serde_json::to_string_pretty(&table.manifest)? + "\n")?;
    Ok(vec![main, manifest])
}

struct Series {
    label: String,
    points: Vec<(f64, f64, f64)>,
}

/// Statistic(s) plotted per experiment and whether the x axis is `m`.
fn plot_choice(experiment: &str) -> (&'static [&'static str], bool, &'static str) {
    match experiment {
        "fig4" => (&["variance_mean"], true, "Var over dataset"),
        "concentration" => (&["variance"], false, "Var over draws"),
        "tail" => (&["exceedance_eps_"], false, "exceedance frequency"),
        "spread" => (&["spread_mean"], false, "mean max pairwise spread"),
        "gradients" => (
            &["gradient_variance", "core_gradient_variance_max"],
            false,
            "gradient variance",
        ),
        _ => (&["avg_choi_purity"], false, "mean Choi purity"),
    }
}

fn collect_series(table: &ResultTable) -> (Vec<Series>, bool, &'static str) {
    let (stats_wanted, x_is_m, y_label) = plot_choice(&table.manifest.experiment);
    let mut series: Vec<Series> = Vec::new();
    for r in &table.rows {
        if r.seed.is_some() || !stats_wanted.iter().any(|s| r.statistic.starts_with(s)) {
            continue;
        }
        let x = if x_is_m { r.m } else { r.n };
        let Some(x) = x else { continue };
        let err = if r.statistic == "variance_mean" {
            table
                .rows
                .iter()
                .find(|o| {
                    o.statistic == "variance_std" && o.model == r.model && o.n == r.n && o.m == r.m && o.seed.is_none()
                })
                .map_or(r.stderr, |o| o.value)
        } else {
            r.stderr
        };
        let label = match (stats_wanted.len() > 1 || r.statistic.starts_with("exceedance"), r.m, x_is_m) {
            (true, _, _) => format!("{} {}", r.model, r.statistic),
            (false, Some(m), false) => format!("{} m={m}", r.model),
            _ => r.model.clone(),
        };
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((x as f64, r.value, err)),
            None => series.push(Series {
                label,
                points: vec![(x as f64, r.value, err)],
            }),
        }
    }
    (series, x_is_m, y_label)
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Line chart of the experiment's headline statistic with error bars.
pub fn render_svg(table: &ResultTable) -> String {
    let (series, x_is_m, y_label) = collect_series(table);
    let (w, h) = (720.0, 460.0);
    let (left, right, top, bottom) = (80.0, 200.0, 40.0, 60.0);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        w / 2.0,
        table.manifest.experiment
    );
    let all: Vec<(f64, f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    if all.is_empty() {
        svg.push_str("</svg>\n");
        return svg;
    }
    let tx = |x: f64| if x_is_m { x.log2() } else { x };
    let (x0, x1) = all.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(tx(p.0)), b.max(tx(p.0))));
    let positive = all.iter().all(|p| p.1 > 0.0 && p.1 - p.2 > 0.0);
    let (ymin, ymax) = all
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p.1 - p.2), b.max(p.1 + p.2)));
    let log_y = positive && ymax / ymin > 20.0;
    let ty = |y: f64| if log_y { y.max(f64::MIN_POSITIVE).log10() } else { y };
    let (mut y0, mut y1) = (ty(ymin.max(if log_y { f64::MIN_POSITIVE } else { f64::MIN })), ty(ymax));
    if (y1 - y0).abs() < 1e-300 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let (mut xa, mut xb) = (x0, x1);
    if (xb - xa).abs() < 1e-300 {
        xa -= 0.5;
        xb += 0.5;
    }
    let pw = w - left - right;
    let ph = h - top - bottom;
    let px = |x: f64| left + (tx(x) - xa) / (xb - xa) * pw;
    let py = |y: f64| top + ph - (ty(y) - y0) / (y1 - y0) * ph;
    let _ = writeln!(
        svg,
        "<rect x=\"{left}\" y=\"{top}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>"
    );
    for i in 0..=4 {
        let f = f64::from(i) / 4.0;
        let yv = y0 + f * (y1 - y0);
        let label = if log_y { format!("{:.1e}", 10f64.powf(yv)) } else { format!("{yv:.3}") };
        let yp = top + ph - f * ph;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{yp}\" x2=\"{left}\" y2=\"{yp}\" stroke=\"black\"/><text x=\"{}\" y=\"{}\" text-anchor=\"end\">{label}</text>",
            left - 5.0,
            left - 8.0,
            yp + 4.0
        );
    }
    let mut xs: Vec<f64> = all.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    for &x in &xs {
        let xp = px(x);
        let _ = writeln!(
            svg,
            "<line x1=\"{xp}\" y1=\"{}\" x2=\"{xp}\" y2=\"{}\" stroke=\"black\"/><text x=\"{xp}\" y=\"{}\" text-anchor=\"middle\">{x}</text>",
            top + ph,
            top + ph + 5.0,
            top + ph + 20.0
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
        left + pw / 2.0,
        h - 15.0,
        if x_is_m { "dataset size m" } else { "qubits n" }
    );
    let _ = writeln!(
        svg,
        "<text x=\"18\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{y_label}</text>",
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts = s.points.clone();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", px(p.0), py(p.1))).collect();
        let _ = writeln!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            path.join(" ")
        );
        for p in &pts {
            let (x, yl, yh) = (px(p.0), py((p.1 - p.2).max(if log_y { ymin } else { f64::MIN })), py(p.1 + p.2));
            let _ = writeln!(
                svg,
                "<line x1=\"{x:.2}\" y1=\"{yl:.2}\" x2=\"{x:.2}\" y2=\"{yh:.2}\" stroke=\"{color}\"/><circle cx=\"{x:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                py(p.1)
            );
        }
        let ly = top + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            "<line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/><text x=\"{}\" y=\"{}\">{}</text>",
            w - right + 15.0,
            w - right + 35.0,
            w - right + 40.0,
            ly + 4.0,
            s.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        for kind in ExperimentKind::ALL {
            let c = ExperimentConfig::defaults(kind);
            c.validate().unwrap();
            let text = c.to_toml_string().unwrap();
            assert_eq!(ExperimentConfig::from_toml_str(&text, None).unwrap(), c);
        }
    }

    #[test]
    fn overlay_and_errors() {
        let c = ExperimentConfig::from_toml_str("n_values = [3, 4]\ntrials = 200", Some(ExperimentKind::Concentration)).unwrap();
        assert_eq!(c.n_values, vec![3, 4]);
        assert_eq!(c.trials, 200);
        for bad in ["bogus_key = 1", "trials = 0", "n_values = [13]", "experiment = \"tail\"", "trials = \"x\""] {
            let e = ExperimentConfig::from_toml_str(bad, Some(ExperimentKind::Concentration)).unwrap_err();
            assert!(matches!(e, Error::Config(_)), "{bad}: {e:?}");
            assert_eq!(e.exit_code(), 2);
        }
        assert!(ExperimentConfig::from_toml_str("trials = 5", None).is_err());
    }

    #[test]
    fn empty_table_csv_is_header_only() {
        let t = ResultTable::new(&ExperimentConfig::defaults(ExperimentKind::Fig4));
        assert_eq!(t.to_csv(), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn negative_stderr_is_an_invariant_violation() {
        let mut t = ResultTable::new(&ExperimentConfig::defaults(ExperimentKind::Fig4));
        let e = t.push((None, None, "x", None), "s", 1.0, -1.0).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(t.push((None, None, "x", None), "s", 1.0, f64::NAN).is_err());
    }

    #[test]
    fn haar_moments_for_z0() {
        let (m, v) = haar_output_moments(&Observable::pauli_z(6, 0).unwrap());
        assert_eq!(m, 0.0);
        assert!((v - 1.0 / 65.0).abs() < 1e-15);
    }
}
