//! Dataset-variance comparison of the naive, TN-VQC and TensorHyper models,
//! written as CSV and SVG under `target/fig4-example`.

use std::path::Path;

use vqc_typicality::experiments::{emit_outputs, run_fig4, ExperimentConfig, ExperimentKind, OutputFormat};

fn main() -> vqc_typicality::Result<()> {
    let mut config = ExperimentConfig::defaults(ExperimentKind::Fig4);
    // A smaller register keeps this quick; `vqc-lab fig4` runs the full n = 12 setting.
    config.n_values = vec![8];
    config.seeds = 5;
    let table = run_fig4(&config)?;
    for row in table.select("variance_mean") {
        println!("{:<13} m={:<4} {:.4e} ± {:.1e}", row.model, row.m.unwrap_or(0), row.value, row.stderr);
    }
    let dir = Path::new("target/fig4-example");
    for format in [OutputFormat::Csv, OutputFormat::Svg] {
        for path in emit_outputs(&table, format, dir)? {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}
