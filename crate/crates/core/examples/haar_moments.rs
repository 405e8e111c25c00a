//! Mean and variance of `⟨ψ|Z₀|ψ⟩` over Haar-random states against the closed forms.

use vqc_typicality::ensemble::{haar_state, SeedSpec};
use vqc_typicality::experiments::haar_output_moments;
use vqc_typicality::{stats, Observable};

fn main() -> vqc_typicality::Result<()> {
    let samples = 5000;
    println!("n  mean       stderr     variance   closed form");
    for n in 2..=8 {
        let obs = Observable::pauli_z(n, 0)?;
        let mut rng = SeedSpec::new(7, n as u64).rng();
        let values: Vec<f64> = (0..samples)
            .map(|_| obs.expectation(&haar_state(n, &mut rng)))
            .collect::<Result<_, _>>()?;
        let (_, var) = haar_output_moments(&obs);
        println!(
            "{n}  {:+.6}  {:.6}  {:.6}   {:.6}",
            stats::mean(&values),
            stats::stderr_of_mean(&values),
            stats::variance(&values),
            var
        );
    }
    Ok(())
}
