//! Operator Schmidt ranks of standard gates and a design report per ensemble.

use vqc_typicality::circuit::build_hea;
use vqc_typicality::design::{
    design_report, operator_schmidt_rank, BoundedCutWidthFamily, DiagnosticSettings, OSR_TOL,
};
use vqc_typicality::ensemble::{EnsembleSpec, ParamDist};
use vqc_typicality::linalg::swap_operator;
use vqc_typicality::{Bipartition, ComplexMatrix};

fn main() -> vqc_typicality::Result<()> {
    let cut = Bipartition::balanced(2)?;
    let mut cnot = ComplexMatrix::zeros(4, 4);
    for (i, j) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        cnot[(i, j)] = 1.0.into();
    }
    println!(
        "OSR: identity {}, CNOT {}, SWAP {}",
        operator_schmidt_rank(&ComplexMatrix::identity(4), &cut, OSR_TOL)?,
        operator_schmidt_rank(&cnot, &cut, OSR_TOL)?,
        operator_schmidt_rank(&swap_operator(2), &cut, OSR_TOL)?
    );

    let settings = DiagnosticSettings {
        frame_pairs: 300,
        moment_samples: 300,
        purity_samples: 100,
        master_seed: 1,
    };
    let n = 4;
    let ensembles = [
        ("haar", EnsembleSpec::HaarUnitary { n_qubits: n }),
        ("deep_hea", EnsembleSpec::circuit(build_hea(n, 4 * n)?, ParamDist::uniform_angle())),
        ("shallow_hea", EnsembleSpec::circuit(build_hea(n, 1)?, ParamDist::uniform_angle())),
        ("bounded_cut_width", EnsembleSpec::BoundedCutWidth(BoundedCutWidthFamily::new(n, 4, 1)?)),
    ];
    println!("\nensemble           F2              moment dist  purity (Haar {:.4})  max OSR", {
        vqc_typicality::design::haar_choi_purity(&Bipartition::balanced(n)?)
    });
    for (name, e) in &ensembles {
        let r = design_report(name, e, &settings)?;
        println!(
            "{name:<18} {:.3} ± {:.3}  {:.5}      {:.4} ± {:.4}      {}",
            r.frame_potential_2.value,
            r.frame_potential_2.stderr,
            r.second_moment.map_or(f64::NAN, |s| s.distance),
            r.avg_choi_purity.value,
            r.avg_choi_purity.stderr,
            r.max_osr
        );
    }
    Ok(())
}
