//! Diagnostics for Haar-like typicality of circuit ensembles.
//!
//! * Choi-state purity across a doubled cut `AA'|BB'`, which for a Haar
//!   unitary decays like `2^{-n}` and for a bounded-cut-width circuit stays
//!   above `1/K` with `K` the operator Schmidt rank;
//! * the operator Schmidt rank itself, from the realigned unitary;
//! * the order-`t` frame potential `E|Tr(U†V)|^{2t}` (Haar value `t!`);
//! * the max-entry distance of the state fourth moment from `(I+F)/(d(d+1))`.
//!
//! The Choi register lists the `n` output (row) qubits first, then the `n`
//! input (column) qubits, so amplitude `y·2^n + z` equals `U_{yz}/2^{n/2}`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{self, CircuitLayout, Gate, ParameterVector};
use crate::ensemble::{haar_unitary_dim, stream_hash, EnsembleSpec, SeedSpec};
use crate::error::{Error, Result};
use crate::linalg::{
    gather_bits, partial_trace, purity, svd_values, swap_operator, Bipartition, ComplexMatrix,
    StateVector, C64, DENSE_UNITARY_MAX_QUBITS,
};
use crate::stats::Estimate;

/// Default relative singular-value threshold for rank counting.
pub const OSR_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiState {
    n_qubits: usize,
    state: StateVector,
}

impl ChoiState {
    /// Qubit count of the underlying unitary (half the register).
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    /// `A ∪ A'` as a cut of the doubled register.
    pub fn doubled_cut(&self, cut: &Bipartition) -> Result<Bipartition> {
        check_cut(self.n_qubits, cut)?;
        let a: Vec<usize> = cut
            .block_a()
            .iter()
            .copied()
            .chain(cut.block_a().iter().map(|q| q + self.n_qubits))
            .collect();
        Bipartition::new(2 * self.n_qubits, &a)
    }

    /// Reduced state on `AA'`.
    pub fn reduced(&self, cut: &Bipartition) -> Result<ComplexMatrix> {
        partial_trace(&self.state, self.doubled_cut(cut)?.block_a())
    }

    pub fn schmidt_coefficients(&self, cut: &Bipartition) -> Result<Vec<f64>> {
        self.state.schmidt_coefficients(&self.doubled_cut(cut)?)
    }
}

fn check_cut(n: usize, cut: &Bipartition) -> Result<()> {
    if cut.n_qubits() != n {
        return Err(Error::Dimension(format!(
            "cut over {} qubits for a {n}-qubit unitary",
            cut.n_qubits()
        )));
    }
    Ok(())
}

fn unitary_qubits(u: &ComplexMatrix) -> Result<usize> {
    if !u.is_square() || !u.rows().is_power_of_two() {
        return Err(Error::Dimension(format!(
            "expected a 2^n square matrix, got {}x{}",
            u.rows(),
            u.cols()
        )));
    }
    let n = u.rows().trailing_zeros() as usize;
    if n > DENSE_UNITARY_MAX_QUBITS {
        return Err(Error::DenseCap {
            dim: u.rows(),
            cap: 1 << DENSE_UNITARY_MAX_QUBITS,
        });
    }
    Ok(n)
}

pub fn choi_state(u: &ComplexMatrix) -> Result<ChoiState> {
    let n = unitary_qubits(u)?;
    let dev = u.unitarity_deviation();
    if dev > 1e-10 {
        return Err(Error::NotUnitary(dev));
    }
    let s = 1.0 / ((1usize << n) as f64).sqrt();
    let amps = u.data().iter().map(|z| z * s).collect();
    Ok(ChoiState {
        n_qubits: n,
        state: StateVector::new(2 * n, amps)?,
    })
}

/// `Tr(ρ_{AA'}²)` of the Choi state.
pub fn choi_purity(u: &ComplexMatrix, cut: &Bipartition) -> Result<f64> {
    Ok(purity(&choi_state(u)?.reduced(cut)?))
}

/// Number of Schmidt coefficients of the Choi state above `tol` times the largest.
pub fn choi_schmidt_rank(u: &ComplexMatrix, cut: &Bipartition, tol: f64) -> Result<usize> {
    Ok(count_above(&choi_state(u)?.schmidt_coefficients(cut)?, tol))
}

fn count_above(values: &[f64], tol: f64) -> usize {
    let top = values.first().copied().unwrap_or(0.0);
    values.iter().filter(|&&v| v > tol * top).count()
}

/// `U` rearranged so that row `(a, a')` and column `(b, b')` hold
/// `⟨a b| U |a' b'⟩`. Its singular values are the operator Schmidt
/// coefficients across `A|B`.
pub fn realign(u: &ComplexMatrix, cut: &Bipartition) -> Result<ComplexMatrix> {
    let n = unitary_qubits(u)?;
    check_cut(n, cut)?;
    let (a, b) = (cut.block_a(), cut.block_b());
    let (da, db) = (1usize << a.len(), 1usize << b.len());
    let mut r = ComplexMatrix::zeros(da * da, db * db);
    for i in 0..u.rows() {
        let (ia, ib) = (gather_bits(i, n, a), gather_bits(i, n, b));
        for j in 0..u.cols() {
            let (ja, jb) = (gather_bits(j, n, a), gather_bits(j, n, b));
            r[(ia * da + ja, ib * db + jb)] = u[(i, j)];
        }
    }
    Ok(r)
}

pub fn operator_schmidt_rank(u: &ComplexMatrix, cut: &Bipartition, tol: f64) -> Result<usize> {
    Ok(count_above(&svd_values(&realign(u, cut)?)?, tol))
}

/// Mean Choi purity of a Haar unitary across `A|B`:
/// `(d_{AA'} + d_{BB'} − 2) / (d_{AA'} d_{BB'} − 1)` with `d_{AA'} = 4^{|A|}`.
///
/// This is the second-moment Weingarten average. The Haar random-state value
/// [`haar_state_purity`] of the same dimensions is slightly larger.
pub fn haar_choi_purity(cut: &Bipartition) -> f64 {
    let da = 4f64.powi(cut.block_a().len() as i32);
    let db = 4f64.powi(cut.block_b().len() as i32);
    (da + db - 2.0) / (da * db - 1.0)
}

/// Mean purity of the `d_a`-dimensional marginal of a Haar random state on
/// `d_a · d_b` dimensions.
pub fn haar_state_purity(da: f64, db: f64) -> f64 {
    (da + db) / (da * db + 1.0)
}

/// `t!`, the Haar frame potential for `d ≥ t`.
pub fn haar_frame_potential(t: u32) -> f64 {
    (1..=t).map(f64::from).product()
}

/// Monte-Carlo estimate of `E|Tr(U†V)|^{2t}` over independent pairs.
pub fn frame_potential(
    ensemble: &EnsembleSpec,
    t: u32,
    pairs: usize,
    master_seed: u64,
) -> Result<Estimate> {
    if pairs < 100 {
        return Err(Error::Parameter(format!(
            "frame potential needs at least 100 pairs, got {pairs}"
        )));
    }
    if t == 0 {
        return Err(Error::Parameter("frame potential order must be positive".into()));
    }
    let name = format!("frame_potential/{}/n{}", ensemble.label(), ensemble.n_qubits());
    let values: Vec<f64> = (0..pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeedSpec::for_trial(master_seed, &name, i as u64).rng();
            let u = ensemble.sample_unitary(&mut rng)?;
            let v = ensemble.sample_unitary(&mut rng)?;
            let overlap: C64 = u.data().iter().zip(v.data()).map(|(a, b)| a.conj() * b).sum();
            Ok(overlap.norm_sqr().powi(t as i32))
        })
        .collect::<Result<_>>()?;
    Ok(Estimate::of_mean(&values))
}

/// Result of comparing the sampled state fourth moment against Haar.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondMoment {
    /// `max |M̂ − (I+F)/(d(d+1))|` over entries.
    pub distance: f64,
    /// Largest per-entry standard error of `M̂`.
    pub max_stderr: f64,
}

const SECOND_MOMENT_MAX_QUBITS: usize = 5;
const SECOND_MOMENT_CHUNKS: usize = 8;

/// Estimates `E[|ψ⟩⟨ψ| ⊗ |ψ⟩⟨ψ|]` from `samples` states and compares it to
/// the Haar value entry by entry.
pub fn second_moment_distance(
    ensemble: &EnsembleSpec,
    samples: usize,
    master_seed: u64,
) -> Result<SecondMoment> {
    let n = ensemble.n_qubits();
    if n > SECOND_MOMENT_MAX_QUBITS {
        return Err(Error::DenseCap {
            dim: 1 << (2 * n),
            cap: 1 << (2 * SECOND_MOMENT_MAX_QUBITS),
        });
    }
    if samples < 2 {
        return Err(Error::Parameter("second moment needs at least 2 samples".into()));
    }
    let d = 1usize << n;
    let dd = d * d;
    let name = format!("second_moment/{}/n{n}", ensemble.label());
    let chunk = samples.div_ceil(SECOND_MOMENT_CHUNKS);
    let partials: Vec<(Vec<C64>, Vec<f64>)> = (0..SECOND_MOMENT_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut sum = vec![C64::default(); dd * dd];
            let mut sum_sq = vec![0.0; dd * dd];
            let mut v = vec![C64::default(); dd];
            for i in (c * chunk)..((c + 1) * chunk).min(samples) {
                let mut rng = SeedSpec::for_trial(master_seed, &name, i as u64).rng();
                let psi = ensemble.sample_state(&mut rng)?;
                let a = psi.amplitudes();
                for (k, slot) in v.iter_mut().enumerate() {
                    *slot = a[k / d] * a[k % d];
                }
                for (r, vr) in v.iter().enumerate() {
                    let row = r * dd;
                    for (s, vs) in v.iter().enumerate() {
                        let z = vr * vs.conj();
                        sum[row + s] += z;
                        sum_sq[row + s] += z.norm_sqr();
                    }
                }
            }
            Ok((sum, sum_sq))
        })
        .collect::<Result<_>>()?;
    let mut sum = vec![C64::default(); dd * dd];
    let mut sum_sq = vec![0.0; dd * dd];
    for (s, q) in &partials {
        for k in 0..dd * dd {
            sum[k] += s[k];
            sum_sq[k] += q[k];
        }
    }
    let f = swap_operator(d);
    let norm = 1.0 / (d * (d + 1)) as f64;
    let m = samples as f64;
    let mut distance = 0.0f64;
    let mut max_stderr = 0.0f64;
    for r in 0..dd {
        for s in 0..dd {
            let k = r * dd + s;
            let mean = sum[k] / m;
            let identity = if r == s { 1.0 } else { 0.0 };
            let haar = (f[(r, s)].re + identity) * norm;
            distance = distance.max((mean - C64::new(haar, 0.0)).norm());
            let var = ((sum_sq[k] - m * mean.norm_sqr()) / (m - 1.0)).max(0.0);
            max_stderr = max_stderr.max((var / m).sqrt());
        }
    }
    Ok(SecondMoment {
        distance,
        max_stderr,
    })
}

/// Brickwork of Haar-random two-qubit gates in which only the first
/// `max_cut_crossings` gates straddling the balanced cut are kept. Every
/// draw has operator Schmidt rank at most `4^max_cut_crossings` across that
/// cut, whatever `n_qubits` is.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundedCutWidthFamily {
    pub n_qubits: usize,
    pub depth: usize,
    pub max_cut_crossings: usize,
}

impl BoundedCutWidthFamily {
    pub fn new(n_qubits: usize, depth: usize, max_cut_crossings: usize) -> Result<Self> {
        if n_qubits < 2 || depth == 0 {
            return Err(Error::Parameter(format!(
                "bounded-cut-width family needs n >= 2 and depth >= 1, got n={n_qubits}, depth={depth}"
            )));
        }
        Ok(Self {
            n_qubits,
            depth,
            max_cut_crossings,
        })
    }

    /// Upper bound on the operator Schmidt rank across the balanced cut.
    pub fn rank_bound(&self) -> usize {
        4usize.saturating_pow(self.max_cut_crossings as u32)
    }

    pub fn sample_layout<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CircuitLayout> {
        let n = self.n_qubits;
        let h = n / 2;
        let mut gates = Vec::new();
        let mut crossings = 0;
        for layer in 0..self.depth {
            let mut q = layer % 2;
            while q + 1 < n {
                let straddles = q + 1 == h;
                if !straddles || crossings < self.max_cut_crossings {
                    crossings += usize::from(straddles);
                    gates.push(Gate::Fixed {
                        matrix: haar_unitary_dim(4, rng)?,
                        targets: vec![q, q + 1],
                    });
                }
                q += 2;
            }
        }
        CircuitLayout::new(n, gates, 0)
    }

    pub fn sample_unitary<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<ComplexMatrix> {
        circuit::circuit_unitary(&self.sample_layout(rng)?, &ParameterVector::zeros(0))
    }
}

/// Diagnostic settings shared by every ensemble in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticSettings {
    pub frame_pairs: usize,
    pub moment_samples: usize,
    pub purity_samples: usize,
    pub master_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub ensemble: String,
    pub n_qubits: usize,
    pub frame_potential_2: Estimate,
    pub haar_frame_potential_2: f64,
    /// `None` above the dense fourth-moment limit.
    pub second_moment: Option<SecondMoment>,
    pub avg_choi_purity: Estimate,
    pub haar_choi_purity: f64,
    /// Largest operator Schmidt rank seen across the balanced cut.
    pub max_osr: usize,
    /// Smallest Choi purity seen.
    pub min_choi_purity: f64,
}

/// Choi purities and operator Schmidt ranks across the balanced cut.
pub fn purity_samples(
    ensemble: &EnsembleSpec,
    samples: usize,
    master_seed: u64,
) -> Result<Vec<(f64, usize)>> {
    let cut = Bipartition::balanced(ensemble.n_qubits())?;
    let name = format!("choi_purity/{}/n{}", ensemble.label(), ensemble.n_qubits());
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = SeedSpec::for_trial(master_seed, &name, i as u64).rng();
            let u = ensemble.sample_unitary(&mut rng)?;
            Ok((choi_purity(&u, &cut)?, operator_schmidt_rank(&u, &cut, OSR_TOL)?))
        })
        .collect()
}

pub fn design_report(
    name: &str,
    ensemble: &EnsembleSpec,
    settings: &DiagnosticSettings,
) -> Result<DesignReport> {
    let n = ensemble.n_qubits();
    let cut = Bipartition::balanced(n)?;
    // Ensembles sharing a label (two circuit depths, say) still get distinct streams.
    let seed = stream_hash(name, settings.master_seed);
    let frame = frame_potential(ensemble, 2, settings.frame_pairs, seed)?;
    let second_moment = if n <= SECOND_MOMENT_MAX_QUBITS {
        Some(second_moment_distance(
            ensemble,
            settings.moment_samples,
            seed,
        )?)
    } else {
        None
    };
    let samples = purity_samples(ensemble, settings.purity_samples, seed)?;
    let purities: Vec<f64> = samples.iter().map(|s| s.0).collect();
    Ok(DesignReport {
        ensemble: name.to_string(),
        n_qubits: n,
        frame_potential_2: frame,
        haar_frame_potential_2: haar_frame_potential(2),
        second_moment,
        avg_choi_purity: Estimate::of_mean(&purities),
        haar_choi_purity: haar_choi_purity(&cut),
        max_osr: samples.iter().map(|s| s.1).max().unwrap_or(0),
        min_choi_purity: purities.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    fn cnot() -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(4, 4);
        for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
            m[(i, j)] = c(1., 0.);
        }
        m
    }

    #[test]
    fn identity_choi_is_bell() {
        let choi = choi_state(&ComplexMatrix::identity(2)).unwrap();
        let a = choi.state().amplitudes();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((a[0].re - s).abs() < 1e-15 && (a[3].re - s).abs() < 1e-15);
        assert!(a[1].norm() == 0.0 && a[2].norm() == 0.0);
    }

    #[test]
    fn identity_purity_and_rank() {
        for n in 2..5 {
            let id = ComplexMatrix::identity(1 << n);
            let cut = Bipartition::balanced(n).unwrap();
            assert!((choi_purity(&id, &cut).unwrap() - 1.0).abs() < 1e-12);
            assert_eq!(operator_schmidt_rank(&id, &cut, OSR_TOL).unwrap(), 1);
        }
    }

    #[test]
    fn cnot_rank_two() {
        let cut = Bipartition::new(2, &[0]).unwrap();
        assert_eq!(operator_schmidt_rank(&cnot(), &cut, OSR_TOL).unwrap(), 2);
        assert_eq!(choi_schmidt_rank(&cnot(), &cut, OSR_TOL).unwrap(), 2);
        assert!((choi_purity(&cnot(), &cut).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_unitary() {
        let m = ComplexMatrix::identity(2).scale(c(2., 0.));
        assert!(matches!(choi_state(&m), Err(Error::NotUnitary(_))));
    }

    #[test]
    fn bounded_family_crossings() {
        let fam = BoundedCutWidthFamily::new(6, 6, 1).unwrap();
        let mut rng = SeedSpec::new(1, 1).rng();
        let layout = fam.sample_layout(&mut rng).unwrap();
        let straddle = layout
            .gates()
            .iter()
            .filter(|g| g.qubits() == vec![2, 3])
            .count();
        assert_eq!(straddle, 1);
        let u = fam.sample_unitary(&mut rng).unwrap();
        let cut = Bipartition::balanced(6).unwrap();
        assert!(operator_schmidt_rank(&u, &cut, OSR_TOL).unwrap() <= 4);
    }

    #[test]
    fn haar_reference_values() {
        let p4 = haar_choi_purity(&Bipartition::balanced(4).unwrap());
        assert!((p4 - 30.0 / 255.0).abs() < 1e-15);
        assert!((haar_state_purity(16.0, 16.0) - 32.0 / 257.0).abs() < 1e-15);
        assert_eq!(haar_frame_potential(2), 2.0);
        assert_eq!(haar_frame_potential(3), 6.0);
    }

    #[test]
    fn frame_potential_needs_pairs() {
        let e = EnsembleSpec::HaarUnitary { n_qubits: 1 };
        assert!(frame_potential(&e, 2, 10, 0).is_err());
    }
}
