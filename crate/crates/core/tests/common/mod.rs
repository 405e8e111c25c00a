//! Independent reference implementations used as test oracles. Nothing here
//! calls into the crate's own linear algebra.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use vqc_typicality::circuit::{Axis, CircuitLayout, Gate};
use vqc_typicality::tensor::TTMatrixMap;
use vqc_typicality::ComplexMatrix;

pub type M = DMatrix<C>;

pub fn to_na(m: &ComplexMatrix) -> M {
    M::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub fn pauli(axis: Axis) -> M {
    let (z, o, i) = (C::new(0., 0.), C::new(1., 0.), C::new(0., 1.));
    match axis {
        Axis::X => M::from_row_slice(2, 2, &[z, o, o, z]),
        Axis::Y => M::from_row_slice(2, 2, &[z, -i, i, z]),
        Axis::Z => M::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// `cos(θ/2) I − i sin(θ/2) P`.
pub fn rotation(axis: Axis, theta: f64) -> M {
    M::identity(2, 2) * C::new((theta / 2.0).cos(), 0.) - pauli(axis) * C::new(0., (theta / 2.0).sin())
}

/// `I ⊗ … ⊗ g ⊗ … ⊗ I` with `g` on `target` and qubit 0 leftmost.
pub fn embed_single(n: usize, target: usize, g: &M) -> M {
    let mut out = M::identity(1, 1);
    for q in 0..n {
        let f = if q == target { g.clone() } else { M::identity(2, 2) };
        out = out.kronecker(&f);
    }
    out
}

/// Embeds a gate on arbitrary ordered targets by explicit index mapping.
pub fn embed(n: usize, targets: &[usize], g: &M) -> M {
    let d = 1usize << n;
    let bit = |x: usize, q: usize| (x >> (n - 1 - q)) & 1;
    M::from_fn(d, d, |r, c| {
        for q in 0..n {
            if !targets.contains(&q) && bit(r, q) != bit(c, q) {
                return C::new(0., 0.);
            }
        }
        let local = |x: usize| targets.iter().fold(0, |acc, &q| (acc << 1) | bit(x, q));
        g[(local(r), local(c))]
    })
}

pub fn cz(n: usize, a: usize, b: usize) -> M {
    let d = 1usize << n;
    let bit = |x: usize, q: usize| (x >> (n - 1 - q)) & 1;
    M::from_fn(d, d, |r, c| {
        if r != c {
            C::new(0., 0.)
        } else if bit(r, a) == 1 && bit(r, b) == 1 {
            C::new(-1., 0.)
        } else {
            C::new(1., 0.)
        }
    })
}

/// Dense product of all gates, last gate leftmost.
pub fn dense_circuit(layout: &CircuitLayout, params: &[f64]) -> M {
    let n = layout.n_qubits();
    let mut u = M::identity(1 << n, 1 << n);
    for g in layout.gates() {
        let m = match g {
            Gate::Rotation { axis, target, slot } => embed_single(n, *target, &rotation(*axis, params[*slot])),
            Gate::Cz { control, target } => cz(n, *control, *target),
            Gate::Fixed { matrix, targets } => embed(n, targets, &to_na(matrix)),
        };
        u = m * u;
    }
    u
}

/// `⊗_q R_Y(x_q) |0…0⟩`.
pub fn angle_state(x: &[f64]) -> Vec<C> {
    let mut psi = vec![C::new(1., 0.)];
    for &a in x {
        let (s, c) = (a / 2.0).sin_cos();
        psi = psi.iter().flat_map(|z| [z * c, z * s]).collect();
    }
    psi
}

/// `ρ_keep` by a direct double sum over the traced indices.
pub fn brute_partial_trace(amps: &[C], n: usize, keep: &[usize]) -> M {
    let k = keep.len();
    let bit = |x: usize, q: usize| (x >> (n - 1 - q)) & 1;
    let local = |x: usize| keep.iter().fold(0, |acc, &q| (acc << 1) | bit(x, q));
    let traced = |x: usize| (0..n).filter(|q| !keep.contains(q)).fold(0, |acc, q| (acc << 1) | bit(x, q));
    let mut rho = M::zeros(1 << k, 1 << k);
    for x in 0..1usize << n {
        for y in 0..1usize << n {
            if traced(x) == traced(y) {
                rho[(local(x), local(y))] += amps[x] * amps[y].conj();
            }
        }
    }
    rho
}

/// Full `output_dim × input_dim` matrix of the TT-matrix map, entry by entry.
pub fn densify(map: &TTMatrixMap) -> Vec<Vec<f64>> {
    let (ins, outs) = (map.in_modes(), map.out_modes());
    let cores = map.train().cores();
    let digits = |mut x: usize, modes: &[usize]| {
        let mut d = vec![0; modes.len()];
        for l in (0..modes.len()).rev() {
            d[l] = x % modes[l];
            x /= modes[l];
        }
        d
    };
    (0..map.output_dim())
        .map(|jj| {
            let j = digits(jj, outs);
            (0..map.input_dim())
                .map(|ii| {
                    let i = digits(ii, ins);
                    let mut v = vec![1.0];
                    for (l, core) in cores.iter().enumerate() {
                        let m = i[l] * outs[l] + j[l];
                        v = (0..core.right)
                            .map(|b| {
                                (0..core.left)
                                    .map(|a| v[a] * core.data[(a * core.mode + m) * core.right + b])
                                    .sum()
                            })
                            .collect();
                    }
                    v[0]
                })
                .collect()
        })
        .collect()
}

pub fn matvec(w: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    w.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn max_diff(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
