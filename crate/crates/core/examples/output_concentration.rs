//! Output variance of a deep ring ansatz over parameter draws, n = 4..8.

use vqc_typicality::experiments::{run_output_concentration, ExperimentConfig, ExperimentKind};

fn main() -> vqc_typicality::Result<()> {
    let mut config = ExperimentConfig::defaults(ExperimentKind::Concentration);
    config.n_values = (4..=8).collect();
    config.trials = 400;
    let table = run_output_concentration(&config)?;
    for row in table.select("variance") {
        let haar = table
            .find(&row.model, row.n, None, "haar_variance")
            .map_or(f64::NAN, |r| r.value);
        println!("n={}  Var={:.5} ± {:.5}  Haar {:.5}", row.n.unwrap_or(0), row.value, row.stderr, haar);
    }
    if let Some(fit) = table.select("log2_variance_slope").next() {
        println!("log2 Var slope per qubit: {:.3} ± {:.3}", fit.value, fit.stderr);
    }
    Ok(())
}
