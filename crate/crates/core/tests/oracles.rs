//! Crate results against independent dense and brute-force references.

mod common;

use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::Rng;
use vqc_typicality::circuit::{
    apply_circuit, build_hea, circuit_unitary, expectation, Axis, CircuitLayout, EncodingSpec, Gate,
    ParameterVector,
};
use vqc_typicality::design::{choi_purity, choi_state, haar_choi_purity, operator_schmidt_rank, OSR_TOL};
use vqc_typicality::ensemble::{haar_state, haar_unitary, ParamDist, SeedSpec};
use vqc_typicality::linalg::{kron, partial_trace, svd_values, swap_operator};
use vqc_typicality::stats;
use vqc_typicality::tensor::{tensor_hyper_forward, tn_vqc_forward, TTMatrixMap, TensorStructuredModel};
use vqc_typicality::{Bipartition, ComplexMatrix, Observable, StateVector};

fn rng(i: u64) -> vqc_typicality::ensemble::StreamRng {
    SeedSpec::new(424242, i).rng()
}

fn random_layout(n: usize, gates: usize, r: &mut impl Rng) -> CircuitLayout {
    let axes = [Axis::X, Axis::Y, Axis::Z];
    let mut list = Vec::new();
    let mut slot = 0;
    for _ in 0..gates {
        match r.random_range(0..3) {
            0 => {
                list.push(Gate::Rotation { axis: axes[r.random_range(0..3)], target: r.random_range(0..n), slot });
                slot += 1;
            }
            1 => {
                let a = r.random_range(0..n);
                let b = (a + r.random_range(1..n)) % n;
                list.push(Gate::Cz { control: a, target: b });
            }
            _ => {
                let a = r.random_range(0..n);
                let b = (a + r.random_range(1..n)) % n;
                list.push(Gate::Fixed { matrix: haar_unitary(2, r).unwrap(), targets: vec![b, a] });
            }
        }
    }
    CircuitLayout::new(n, list, slot).unwrap()
}

#[test]
fn statevector_simulation_matches_dense_product() {
    let mut r = rng(1);
    for _ in 0..10 {
        let layout = random_layout(4, 30, &mut r);
        let theta = ParamDist::uniform_angle().sample(layout.param_count(), &mut r);
        let psi = haar_state(4, &mut r);
        let out = apply_circuit(&layout, &theta, &psi).unwrap();
        let u = dense_circuit(&layout, theta.values());
        let reference = &u * nalgebra::DVector::from_column_slice(psi.amplitudes());
        assert!(max_diff(out.amplitudes(), reference.as_slice()) <= 1e-10);
        let dense = circuit_unitary(&layout, &theta).unwrap();
        assert!((to_na(&dense) - u).camax() <= 1e-10);
    }
}

#[test]
fn expectation_matches_dense_conjugation() {
    let mut r = rng(2);
    for n in [2, 3] {
        let layout = build_hea(n, 3).unwrap();
        for _ in 0..10 {
            let theta = ParamDist::uniform_angle().sample(layout.param_count(), &mut r);
            let x: Vec<f64> = (0..n).map(|_| r.random_range(-3.0..3.0)).collect();
            let obs = Observable::pauli_z(n, n - 1).unwrap();
            let f = expectation(&layout, &theta, &EncodingSpec::angle(n), &x, &obs).unwrap();
            let w = dense_circuit(&layout, theta.values());
            let u_x = (0..n).fold(DMatrix::identity(1 << n, 1 << n), |acc, q| embed_single(n, q, &rotation(Axis::Y, x[q])) * acc);
            let o = embed_single(n, n - 1, &pauli(Axis::Z));
            let zero = nalgebra::DVector::from_fn(1 << n, |i, _| C::new(if i == 0 { 1. } else { 0. }, 0.));
            let reference = (zero.adjoint() * u_x.adjoint() * w.adjoint() * o * &w * &u_x * &zero)[(0, 0)];
            assert!((f - reference.re).abs() <= 1e-10);
            assert!(reference.im.abs() <= 1e-12);
        }
    }
}

#[test]
fn angle_encoding_matches_product_state() {
    let x = [0.4, -1.2, 2.9];
    let layout = CircuitLayout::empty(3).unwrap();
    let s = vqc_typicality::circuit::prepare_state(&layout, &ParameterVector::zeros(0), &EncodingSpec::angle(3), &x).unwrap();
    assert!(max_diff(s.amplitudes(), &angle_state(&x)) <= 1e-14);
}

#[test]
fn partial_trace_matches_index_sum() {
    let mut r = rng(3);
    for keep in [vec![0, 2], vec![1], vec![2, 0], vec![0, 1, 2]] {
        let psi = haar_state(3, &mut r);
        let rho = partial_trace(&psi, &keep).unwrap();
        // The kept qubits form a set; the reduced matrix is ordered by ascending index.
        let mut sorted = keep.clone();
        sorted.sort_unstable();
        let reference = brute_partial_trace(psi.amplitudes(), 3, &sorted);
        assert!((to_na(&rho) - reference).camax() <= 1e-12, "keep {keep:?}");
    }
}

#[test]
fn kron_matches_nalgebra() {
    let mut r = rng(4);
    let a = haar_unitary(1, &mut r).unwrap();
    let b = haar_unitary(2, &mut r).unwrap();
    let k = kron(&a, &b).unwrap();
    assert!((to_na(&k) - to_na(&a).kronecker(&to_na(&b))).camax() <= 1e-15);
}

#[test]
fn singular_values_match_nalgebra() {
    let mut r = rng(5);
    for (rows, cols) in [(4, 4), (6, 3), (3, 7), (16, 16), (1, 5)] {
        let data: Vec<C> = (0..rows * cols).map(|_| C::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0))).collect();
        let m = ComplexMatrix::new(rows, cols, data).unwrap();
        let ours = svd_values(&m).unwrap();
        let mut theirs: Vec<f64> = to_na(&m).singular_values().iter().copied().collect();
        theirs.sort_by(|a, b| b.total_cmp(a));
        assert_eq!(ours.len(), theirs.len());
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() <= 1e-10, "{rows}x{cols}: {a} vs {b}");
        }
    }
}

#[test]
fn swap_trick_reproduces_trace_of_square() {
    let mut r = rng(6);
    for _ in 0..20 {
        let d = 4;
        let g = M::from_fn(d, d, |_, _| C::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)));
        let o = (&g + g.adjoint()) * C::new(0.5, 0.);
        let f = to_na(&swap_operator(d));
        let lhs = (o.kronecker(&o) * f).trace();
        let rhs = (&o * &o).trace();
        assert!((lhs - rhs).norm() <= 1e-9);
    }
}

#[test]
fn tt_contraction_matches_densified_map() {
    let mut r = rng(7);
    for (din, dout, rank) in [(4, 4, 2), (24, 6, 2), (10, 7, 3), (5, 18, 1), (48, 12, 4)] {
        let map = TTMatrixMap::random(din, dout, rank, &mut r).unwrap();
        let w = densify(&map);
        let v: Vec<f64> = (0..din).map(|_| r.random_range(-1.0..1.0)).collect();
        let ours = map.linear(&v).unwrap();
        for (a, b) in ours.iter().zip(matvec(&w, &v)) {
            assert!((a - b).abs() <= 1e-10);
        }
        for (a, b) in map.apply(&v).unwrap().iter().zip(matvec(&w, &v)) {
            assert!((a - std::f64::consts::PI * b.tanh()).abs() <= 1e-10);
        }
    }
}

#[test]
fn hypernetwork_output_matches_densified_generator() {
    let mut r = rng(8);
    let layout = build_hea(4, 2).unwrap();
    let p = layout.param_count();
    let sigma_dim = 18;
    let generator = TTMatrixMap::random(sigma_dim, p, 2, &mut r).unwrap();
    let w = densify(&generator);
    let model = TensorStructuredModel::tensor_hyper(generator, layout.clone()).unwrap();
    let sigma: Vec<f64> = (0..sigma_dim).map(|_| r.random_range(-2.0..2.0)).collect();
    let x = [0.1, 0.5, -0.3, 1.0];
    let obs = Observable::pauli_z(4, 0).unwrap();
    let ours = tensor_hyper_forward(&model, &x, &sigma, &obs).unwrap();
    let theta: Vec<f64> = matvec(&w, &sigma).iter().map(|z| std::f64::consts::PI * z.tanh()).collect();
    let dense = dense_circuit(&layout, &theta);
    let psi = &dense * nalgebra::DVector::from_column_slice(&angle_state(&x));
    let o = embed_single(4, 0, &pauli(Axis::Z));
    let reference = (psi.adjoint() * o * &psi)[(0, 0)].re;
    assert!((ours - reference).abs() <= 1e-10);
}

#[test]
fn identity_encoder_reproduces_angle_encoding() {
    let mut r = rng(9);
    let layout = build_hea(3, 2).unwrap();
    let model = TensorStructuredModel::tn_vqc(TTMatrixMap::identity(3).unwrap(), layout.clone()).unwrap();
    let theta = ParamDist::uniform_angle().sample(layout.param_count(), &mut r);
    let obs = Observable::pauli_z(3, 1).unwrap();
    let x = [0.2f64, -0.4, 0.9];
    let squashed: Vec<f64> = x.iter().map(|v| std::f64::consts::PI * v.tanh()).collect();
    let tn = tn_vqc_forward(&model, &x, &theta, &obs).unwrap();
    let plain = expectation(&layout, &theta, &EncodingSpec::angle(3), &squashed, &obs).unwrap();
    assert!((tn - plain).abs() <= 1e-12);
}

/// Choi state built from `vec(U)/√d` and reduced by the brute-force partial trace.
fn oracle_choi_purity(u: &ComplexMatrix, n: usize, a: &[usize]) -> f64 {
    let d = 1usize << n;
    // Register order: system qubits 0..n, then copies n..2n; row index of U on the system register.
    let amps: Vec<C> = (0..d * d).map(|k| u[(k / d, k % d)] / (d as f64).sqrt()).collect();
    let keep: Vec<usize> = a.iter().copied().chain(a.iter().map(|q| q + n)).collect();
    let rho = brute_partial_trace(&amps, 2 * n, &keep);
    (&rho * &rho).trace().re
}

#[test]
fn choi_purity_matches_brute_force() {
    let mut r = rng(10);
    for n in [2, 3, 4] {
        let cut = Bipartition::balanced(n).unwrap();
        for _ in 0..3 {
            let u = haar_unitary(n, &mut r).unwrap();
            let ours = choi_purity(&u, &cut).unwrap();
            assert!((ours - oracle_choi_purity(&u, n, cut.block_a())).abs() <= 1e-12);
        }
    }
    let u = haar_unitary(3, &mut r).unwrap();
    let psi = choi_state(&u).unwrap();
    assert!((psi.state().norm() - 1.0).abs() <= 1e-12);
}

/// Average Choi purity of Haar unitaries is `(a² + b² − 2)/(a²b² − 1)`, not the
/// random-state value `(a² + b²)/(a²b² + 1)`; at two qubits these are 0.4 and
/// 8/17 ≈ 0.47, far apart at 20000 samples.
#[test]
fn haar_choi_purity_reference_is_the_unitary_average() {
    let cut = Bipartition::balanced(2).unwrap();
    let mut r = rng(11);
    let purities: Vec<f64> = (0..20000)
        .map(|_| oracle_choi_purity(&haar_unitary(2, &mut r).unwrap(), 2, cut.block_a()))
        .collect();
    let (m, se) = (stats::mean(&purities), stats::stderr_of_mean(&purities));
    assert!((m - 0.4).abs() <= 4.0 * se, "{m} ± {se}");
    assert!((m - 8.0 / 17.0).abs() > 20.0 * se);
    assert!((haar_choi_purity(&cut) - 0.4).abs() < 1e-15);
}

#[test]
fn osr_counts_singular_values_of_hand_realigned_matrix() {
    let mut r = rng(12);
    for n in [2, 3, 4] {
        let cut = Bipartition::balanced(n).unwrap();
        let (na, nb) = (cut.block_a().len(), cut.block_b().len());
        // Contiguous cut: U = Σ_k A_k ⊗ B_k; R[(a,a'),(b,b')] = U[(a,b),(a',b')].
        let u = haar_unitary(n, &mut r).unwrap();
        let (da, db) = (1usize << na, 1usize << nb);
        let realigned = M::from_fn(da * da, db * db, |row, col| {
            let (a, a2) = (row / da, row % da);
            let (b, b2) = (col / db, col % db);
            u[(a * db + b, a2 * db + b2)]
        });
        let sv = realigned.singular_values();
        let top = sv.max();
        let rank = sv.iter().filter(|s| **s > OSR_TOL * top).count();
        assert_eq!(operator_schmidt_rank(&u, &cut, OSR_TOL).unwrap(), rank);
    }
    let product = kron(&haar_unitary(1, &mut r).unwrap(), &haar_unitary(1, &mut r).unwrap()).unwrap();
    assert_eq!(operator_schmidt_rank(&product, &Bipartition::balanced(2).unwrap(), OSR_TOL).unwrap(), 1);
}

#[test]
fn haar_state_first_moment_is_maximally_mixed() {
    let mut r = rng(13);
    let samples = 20000;
    let d = 8;
    let mut sum = M::zeros(d, d);
    let mut sq = DMatrix::<f64>::zeros(d, d);
    for _ in 0..samples {
        let psi: StateVector = haar_state(3, &mut r);
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        let p = &v * v.adjoint();
        sq += p.map(|z| z.norm_sqr());
        sum += p;
    }
    let m = samples as f64;
    for i in 0..d {
        for j in 0..d {
            let mean = sum[(i, j)] / m;
            let se = ((sq[(i, j)] / m - mean.norm_sqr()) / m).sqrt();
            let target = if i == j { 1.0 / d as f64 } else { 0.0 };
            assert!((mean - C::new(target, 0.)).norm() <= 5.0 * se, "({i},{j})");
        }
    }
}
