//! Parameter-shift gradients: exactness against finite differences, the
//! generator identity, and variance decay for the deep ring ansatz.

use vqc_typicality::circuit::{build_hea, encode_input, EncodingSpec};
use vqc_typicality::ensemble::{EnsembleSpec, ParamDist, SeedSpec};
use vqc_typicality::gradient::{
    finite_difference_gradient, generator_observable, gradient_statistics, parameter_shift_gradient,
};
use vqc_typicality::Observable;

fn main() -> vqc_typicality::Result<()> {
    let n = 4;
    let layout = build_hea(n, 3)?;
    let encoding = EncodingSpec::angle(n);
    let x = vec![0.3, -0.7, 1.1, 0.2];
    let obs = Observable::pauli_z(n, 0)?;
    let theta = ParamDist::uniform_angle().sample(layout.param_count(), &mut SeedSpec::new(1, 0).rng());
    let k = 8;
    let shift = parameter_shift_gradient(&layout, &theta, &encoding, &x, &obs, k)?;
    let fd = finite_difference_gradient(&layout, &theta, &encoding, &x, &obs, k, 1e-4)?;
    let input = encode_input(&encoding, &x)?.prepare();
    let generator = generator_observable(&layout, &theta, &input, &obs, k)?;
    println!("slot {k}: shift {shift:+.8}  finite difference {fd:+.8}  <chi|G|chi> {:+.8}", generator.gradient()?);
    println!("Tr G = {:.2e}, ||G|| = {:.4}", generator.matrix.trace().norm(), generator.matrix.spectral_norm()?);

    println!("\nn  mean       variance   log2 variance");
    for n in 4..=8 {
        let ensemble = EnsembleSpec::Circuit {
            layout: build_hea(n, 4 * n)?,
            encoding: EncodingSpec::angle(n),
            input: vec![0.3; n],
            params: ParamDist::uniform_angle(),
        };
        let g = gradient_statistics(&ensemble, &Observable::pauli_z(n, 0)?, 0, 300, 11)?;
        println!("{n}  {:+.5}  {:.6}   {:.3}", g.mean, g.variance, g.variance.log2());
    }
    Ok(())
}
