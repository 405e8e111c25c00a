//! Randomized invariants.

mod common;

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::Rng;

use vqc_typicality::circuit::{
    apply_circuit, build_chain_hea, build_hea, circuit_unitary, expectation, CircuitLayout, EncodingSpec,
};
use vqc_typicality::design::{choi_purity, choi_schmidt_rank, operator_schmidt_rank, BoundedCutWidthFamily};
use vqc_typicality::ensemble::{haar_state, haar_unitary, ParamDist, SeedSpec, StreamRng};
use vqc_typicality::experiments::{haar_output_moments, ExperimentConfig, ExperimentKind, OutputFormat};
use vqc_typicality::gradient::{finite_difference_gradient, generator_observable, parameter_shift_gradient};
use vqc_typicality::linalg::{partial_trace, svd_values, swap_operator, kron};
use vqc_typicality::observable::ObservableKind;
use vqc_typicality::tensor::{ModelFamily, ModelSpec, TTMatrixMap};
use vqc_typicality::{Bipartition, ComplexMatrix, Observable, StateVector};

fn rng(seed: u64) -> StreamRng {
    SeedSpec::new(seed, 7).rng()
}

fn random_layout(n: usize, depth: usize, chain: bool) -> CircuitLayout {
    if chain {
        build_chain_hea(n, depth).unwrap()
    } else {
        build_hea(n, depth).unwrap()
    }
}

/// Hermitian operator on `k` qubits rescaled to spectral norm `scale`.
fn random_local(k: usize, scale: f64, rng: &mut StreamRng) -> ComplexMatrix {
    let d = 1 << k;
    let mut data = vec![C::new(0.0, 0.0); d * d];
    for i in 0..d {
        for j in i..d {
            let z = C::new(rng.random::<f64>() - 0.5, if i == j { 0.0 } else { rng.random::<f64>() - 0.5 });
            data[i * d + j] = z;
            data[j * d + i] = z.conj();
        }
    }
    let h = ComplexMatrix::new(d, d, data).unwrap();
    let norm = h.spectral_norm().unwrap();
    h.scale(C::new(scale / norm, 0.0))
}

fn random_observable(n: usize, rng: &mut StreamRng) -> Observable {
    let k = rng.random_range(1..=n.min(2));
    let first = rng.random_range(0..=n - k);
    let support: Vec<usize> = (first..first + k).collect();
    Observable::local(n, support, random_local(k, 1.0, rng)).unwrap()
}

fn hermitian_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let a: DMatrix<C> = common::to_na(m);
    a.symmetric_eigenvalues().iter().copied().collect()
}

fn random_cut(n: usize, rng: &mut StreamRng) -> Bipartition {
    loop {
        let a: Vec<usize> = (0..n).filter(|_| rng.random::<bool>()).collect();
        if !a.is_empty() && a.len() < n {
            return Bipartition::new(n, &a).unwrap();
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn circuits_preserve_the_norm(seed: u64, n in 2usize..=6, depth in 1usize..=4, chain: bool) {
        let mut r = rng(seed);
        let layout = random_layout(n, depth, chain);
        let params = ParamDist::uniform_angle().sample(layout.param_count(), &mut r);
        let input = haar_state(n, &mut r);
        let out = apply_circuit(&layout, &params, &input).unwrap();
        prop_assert!((out.norm() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn expectations_are_bounded_by_the_spectral_norm(seed: u64, n in 2usize..=6, depth in 1usize..=4) {
        let mut r = rng(seed);
        let layout = random_layout(n, depth, false);
        let params = ParamDist::uniform_angle().sample(layout.param_count(), &mut r);
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        let obs = random_observable(n, &mut r);
        let f = expectation(&layout, &params, &EncodingSpec::angle(n), &x, &obs).unwrap();
        prop_assert!(f.abs() <= 1.0 + 1e-9, "{}", f);
    }

    #[test]
    fn circuit_unitaries_are_unitary(seed: u64, n in 2usize..=6, depth in 1usize..=3, chain: bool) {
        let mut r = rng(seed);
        let layout = random_layout(n, depth, chain);
        let params = ParamDist::uniform_angle().sample(layout.param_count(), &mut r);
        let u = circuit_unitary(&layout, &params).unwrap();
        prop_assert!(u.unitarity_deviation() <= 1e-9);
    }

    #[test]
    fn concatenation_composes(seed: u64, n in 2usize..=5, d1 in 1usize..=3, d2 in 1usize..=3) {
        let mut r = rng(seed);
        let a = random_layout(n, d1, false);
        let b = random_layout(n, d2, true);
        let ab = a.concat(&b).unwrap();
        let pa = ParamDist::uniform_angle().sample(a.param_count(), &mut r);
        let pb = ParamDist::uniform_angle().sample(b.param_count(), &mut r);
        let joint = vqc_typicality::circuit::ParameterVector::new(
            pa.values().iter().chain(pb.values()).copied().collect(),
        ).unwrap();
        let input = haar_state(n, &mut r);
        let lhs = apply_circuit(&ab, &joint, &input).unwrap();
        let rhs = apply_circuit(&b, &pb, &apply_circuit(&a, &pa, &input).unwrap()).unwrap();
        prop_assert!(common::max_diff(lhs.amplitudes(), rhs.amplitudes()) <= 1e-10);
    }

    #[test]
    fn every_ansatz_slot_is_used(n in 2usize..=8, depth in 1usize..=5) {
        for layout in [build_hea(n, depth).unwrap(), build_chain_hea(n, depth).unwrap()] {
            prop_assert_eq!(layout.param_count(), 2 * n * depth);
            for k in 0..layout.param_count() {
                prop_assert_eq!(layout.gates_for_slot(k).len(), 1);
            }
        }
    }

    #[test]
    fn shift_rule_matches_finite_differences(seed: u64, n in 2usize..=4, depth in 1usize..=3) {
        let mut r = rng(seed);
        let layout = random_layout(n, depth, false);
        let params = ParamDist::uniform_angle().sample(layout.param_count(), &mut r);
        let x: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
        let obs = random_observable(n, &mut r);
        let enc = EncodingSpec::angle(n);
        let k = r.random_range(0..layout.param_count());
        let ps = parameter_shift_gradient(&layout, &params, &enc, &x, &obs, k).unwrap();
        let fd = finite_difference_gradient(&layout, &params, &enc, &x, &obs, k, 1e-4).unwrap();
        prop_assert!((ps - fd).abs() <= 1e-6, "{} vs {}", ps, fd);
    }

    #[test]
    fn generators_are_traceless_and_bounded(seed: u64, n in 2usize..=5, depth in 1usize..=3) {
        let mut r = rng(seed);
        let layout = random_layout(n, depth, false);
        let params = ParamDist::uniform_angle().sample(layout.param_count(), &mut r);
        let obs = random_observable(n, &mut r);
        let input = haar_state(n, &mut r);
        let k = r.random_range(0..layout.param_count());
        let g = generator_observable(&layout, &params, &input, &obs, k).unwrap();
        prop_assert!(g.matrix.trace().norm() <= 1e-9);
        prop_assert!(g.matrix.is_hermitian(1e-10));
        let bound = obs.local_matrix().spectral_norm().unwrap();
        prop_assert!(g.matrix.spectral_norm().unwrap() <= bound + 1e-9);
    }

    #[test]
    fn partial_traces_are_density_matrices(seed: u64, n in 2usize..=7) {
        let mut r = rng(seed);
        let state = haar_state(n, &mut r);
        let cut = random_cut(n, &mut r);
        let rho = partial_trace(&state, cut.block_a()).unwrap();
        prop_assert!(rho.hermitian_deviation() <= 1e-10);
        prop_assert!((rho.trace() - C::new(1.0, 0.0)).norm() <= 1e-10);
        let min = hermitian_eigenvalues(&rho).into_iter().fold(f64::MAX, f64::min);
        prop_assert!(min >= -1e-10, "{}", min);
    }

    #[test]
    fn schmidt_weights_sum_to_one(seed: u64, n in 2usize..=8) {
        let mut r = rng(seed);
        let state = haar_state(n, &mut r);
        let cut = random_cut(n, &mut r);
        let s = svd_values(&state.reshape_across(&cut).unwrap()).unwrap();
        prop_assert!((s.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn swap_trick_holds(seed: u64, k in 1usize..=3) {
        let mut r = rng(seed);
        let o = random_local(k, 1.0, &mut r);
        let f = swap_operator(1 << k);
        let lhs = kron(&o, &o).unwrap().matmul(&f).unwrap().trace();
        let rhs = o.matmul(&o).unwrap().trace();
        prop_assert!((lhs - rhs).norm() <= 1e-9);
    }

    #[test]
    fn choi_purity_respects_the_rank_bound(seed: u64, n in 2usize..=4, which in 0usize..3) {
        let mut r = rng(seed);
        let u = match which {
            0 => haar_unitary(n, &mut r).unwrap(),
            1 => {
                let layout = random_layout(n, 2, false);
                circuit_unitary(&layout, &ParamDist::uniform_angle().sample(layout.param_count(), &mut r)).unwrap()
            }
            _ => BoundedCutWidthFamily::new(n, 4, 1).unwrap().sample_unitary(&mut r).unwrap(),
        };
        let cut = random_cut(n, &mut r);
        let k = operator_schmidt_rank(&u, &cut, 1e-10).unwrap();
        prop_assert_eq!(k, choi_schmidt_rank(&u, &cut, 1e-10).unwrap());
        prop_assert!(choi_purity(&u, &cut).unwrap() >= 1.0 / k as f64 - 1e-12);
    }

    #[test]
    fn tensor_maps_respect_the_rank_cap(seed: u64, input_dim in 1usize..=60, output_dim in 1usize..=60, rank in 1usize..=4) {
        let mut r = rng(seed);
        let map = TTMatrixMap::random(input_dim, output_dim, rank, &mut r).unwrap();
        prop_assert!(map.max_rank() <= rank);
        prop_assert_eq!(map.in_modes().iter().product::<usize>() >= input_dim, true);
        prop_assert_eq!(map.out_modes().iter().product::<usize>() >= output_dim, true);
        let ranks = map.train().ranks();
        prop_assert_eq!(ranks.first().copied(), Some(1));
        prop_assert_eq!(ranks.last().copied(), Some(1));
    }

    #[test]
    fn model_draws_keep_rank_fixed_across_n(seed: u64, n in 2usize..=10, rank in 1usize..=3) {
        let mut r = rng(seed);
        for family in [ModelFamily::TnVqc, ModelFamily::TensorHyper] {
            let draw = ModelSpec::new(family, n, 2, rank).sample(&mut r).unwrap();
            prop_assert!(draw.core_parameter_count() > 0);
            let out = draw.outputs(&[vec![0.3; ModelSpec::new(family, n, 2, rank).input_dim()]], &Observable::pauli_z(n, 0).unwrap()).unwrap();
            prop_assert!(out[0].abs() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn haar_output_variance_is_bounded(seed: u64, n in 1usize..=6) {
        let mut r = rng(seed);
        let obs = random_observable(n, &mut r);
        let d = (1u64 << n) as f64;
        let (mean, var) = haar_output_moments(&obs);
        prop_assert!((mean - obs.trace() / d).abs() <= 1e-12);
        prop_assert!(var >= -1e-15);
        prop_assert!(var <= 1.0 / (d + 1.0) + 1e-12);
    }

    #[test]
    fn configs_round_trip_through_toml(
        kind in prop::sample::select(ExperimentKind::ALL.to_vec()),
        seed in 0u64..=i64::MAX as u64,
        trials in 1000usize..10_000,
        ns in prop::collection::vec(4usize..=7, 1..5),
        eps in prop::collection::vec(prop::sample::select(vec![0.05, 0.1, 0.125, 0.2, 0.3, 1.5]), 1..4),
        observable in prop::sample::select(vec![ObservableKind::Z0, ObservableKind::X0, ObservableKind::Z0Z1, ObservableKind::Identity]),
        format in prop::sample::select(vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Svg]),
    ) {
        let mut c = ExperimentConfig::defaults(kind);
        c.master_seed = seed;
        c.trials = trials;
        c.n_values = ns;
        c.epsilons = eps;
        c.observable = observable;
        c.format = format;
        let text = c.to_toml_string().unwrap();
        prop_assert_eq!(ExperimentConfig::from_toml_str(&text, None).unwrap(), c);
    }
}

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn haar_states_are_unitarily_invariant() {
    let n = 3;
    let samples = 4000;
    let obs = Observable::pauli_z(n, 0).unwrap();
    let v = haar_unitary(n, &mut SeedSpec::new(1, 99).rng()).unwrap();
    let mut r1 = SeedSpec::new(2, 0).rng();
    let mut r2 = SeedSpec::new(2, 1).rng();
    let plain: Vec<f64> = (0..samples).map(|_| obs.expectation(&haar_state(n, &mut r1)).unwrap()).collect();
    let rotated: Vec<f64> = (0..samples)
        .map(|_| {
            let s = haar_state(n, &mut r2);
            let amps = v.matvec(s.amplitudes()).unwrap();
            obs.expectation(&StateVector::new(n, amps).unwrap()).unwrap()
        })
        .collect();
    // Critical value at p = 0.01 for two samples of equal size.
    let crit = 1.628 * (2.0 / samples as f64).sqrt();
    let d = ks_statistic(plain, rotated);
    assert!(d < crit, "KS statistic {d} >= {crit}");
}

#[test]
fn distinct_streams_are_uncorrelated() {
    let mut a = SeedSpec::new(5, 0).rng();
    let mut b = SeedSpec::new(5, 1).rng();
    let xs: Vec<f64> = (0..10_000).map(|_| a.random()).collect();
    let ys: Vec<f64> = (0..10_000).map(|_| b.random()).collect();
    let (mx, my) = (vqc_typicality::stats::mean(&xs), vqc_typicality::stats::mean(&ys));
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.len() as f64;
    let corr = cov / (vqc_typicality::stats::std_dev(&xs) * vqc_typicality::stats::std_dev(&ys));
    assert!(corr.abs() <= 0.05, "{corr}");
}

#[test]
fn deep_ansatz_gradient_variance_respects_the_generator_bound() {
    let n = 5;
    let layout = build_hea(n, 4 * n).unwrap();
    let obs = Observable::pauli_z(n, 0).unwrap();
    let input = StateVector::zero(n);
    let k = 0;
    let mut grads = Vec::new();
    let mut max_norm = 0.0f64;
    for t in 0..400 {
        let mut r = SeedSpec::for_trial(11, "gradient-bound", t).rng();
        let params = ParamDist::uniform_angle().sample(layout.param_count(), &mut r);
        let g = generator_observable(&layout, &params, &input, &obs, k).unwrap();
        max_norm = max_norm.max(g.matrix.spectral_norm().unwrap());
        grads.push(g.gradient().unwrap());
    }
    let d = (1u64 << n) as f64;
    let var = vqc_typicality::stats::variance(&grads);
    assert!(var <= 3.0 * max_norm * max_norm / (d + 1.0), "{var}");
}
