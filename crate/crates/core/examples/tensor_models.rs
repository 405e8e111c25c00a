//! Tensor-train maps and the two tensor-structured model families.

use vqc_typicality::ensemble::SeedSpec;
use vqc_typicality::observable::ObservableKind;
use vqc_typicality::tensor::{
    anti_concentration_scan, factor_modes, DepthRule, InputDist, ModelFamily, ModelSpec, ScanSettings,
    TTMatrixMap,
};

fn main() -> vqc_typicality::Result<()> {
    println!("modes of 48: {:?}, of 10: {:?}", factor_modes(48), factor_modes(10));
    let mut rng = SeedSpec::new(3, 0).rng();
    let map = TTMatrixMap::random(24, 6, 2, &mut rng)?;
    println!(
        "24 -> 6 map: in modes {:?}, out modes {:?}, max rank {}, {} parameters",
        map.in_modes(),
        map.out_modes(),
        map.max_rank(),
        map.parameter_count()
    );
    let x = InputDist::UnitNormal.draw(24, &mut rng);
    println!("angles: {:?}", map.apply(&x)?.iter().map(|a| format!("{a:.3}")).collect::<Vec<_>>());

    for family in [ModelFamily::TnVqc, ModelFamily::TensorHyper] {
        let spec = ModelSpec::new(family, 6, 3, 2);
        let draw = spec.sample(&mut rng)?;
        let input = InputDist::UnitNormal.draw(spec.input_dim(), &mut rng);
        println!(
            "{}: input dim {}, {} core parameters, f(x) = {:+.4}",
            family.name(),
            spec.input_dim(),
            draw.core_parameter_count(),
            draw.output(&input, &ObservableKind::Z0.build(6)?)?
        );
        let rows = anti_concentration_scan(&ScanSettings {
            family,
            n_values: (4..=8).collect(),
            depth: DepthRule::Fixed(3),
            rank: 2,
            trials: 200,
            observable: ObservableKind::Z0,
            input: InputDist::UnitNormal,
            master_seed: 5,
        })?;
        for r in rows {
            println!("  n={}  Var={:.4} [{:.4}, {:.4}]", r.n, r.variance, r.ci_low, r.ci_high);
        }
    }
    Ok(())
}
