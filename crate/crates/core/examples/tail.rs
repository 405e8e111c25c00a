//! Exceedance frequencies `Pr(|f − Tr(O)/2^n| > ε)` for Haar states.

use vqc_typicality::experiments::{run_tail_probability, ExperimentConfig, ExperimentKind};

fn main() -> vqc_typicality::Result<()> {
    let mut config = ExperimentConfig::defaults(ExperimentKind::Tail);
    config.n_values = (4..=10).collect();
    config.trials = 2000;
    let table = run_tail_probability(&config)?;
    for row in table.rows.iter().filter(|r| r.statistic.starts_with("exceedance")) {
        println!("n={:<3} {:<22} {:.4}", row.n.unwrap_or(0), row.statistic, row.value);
    }
    Ok(())
}
