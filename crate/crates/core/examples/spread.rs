//! Largest pairwise output gap over a 32-point dataset as qubits are added.

use vqc_typicality::experiments::{run_spread_scan, ExperimentConfig, ExperimentKind};

fn main() -> vqc_typicality::Result<()> {
    let mut config = ExperimentConfig::defaults(ExperimentKind::Spread);
    config.n_values = (4..=8).collect();
    config.seeds = 8;
    let table = run_spread_scan(&config)?;
    for row in table.select("spread_mean") {
        println!("{:<10} n={}  {:.4} ± {:.4}", row.model, row.n.unwrap_or(0), row.value, row.stderr);
    }
    for row in table.select("spread_ratio_per_qubit") {
        println!("{}: ratio per qubit {:.3}", row.model, row.value);
    }
    Ok(())
}
