//! Score a small (rho_s, rho_mc) grid over two synthetic repetitions.
//!
//!     cargo run --release --example grid_search

use recagglo::metrics::best_row;
use recagglo::pipeline::run::{grid_search_datasets, write_grid};
use recagglo::pipeline::PipelineConfig;
use recagglo::synthgen::{generate, GeneratorConfig};
use recagglo::{AttributeSchema, RecAggloParams};

fn main() -> recagglo::Result<()> {
    let schema = AttributeSchema::default_orders();
    let runs = (0..2)
        .map(|seed| {
            let gen = GeneratorConfig {
                seed,
                ..GeneratorConfig::default().scaled_to(4000)
            };
            generate(&gen, &schema).map(|(d, _)| d)
        })
        .collect::<recagglo::Result<Vec<_>>>()?;

    let cfg = PipelineConfig {
        grid_rho_s: vec![0.25, 0.5, 1.0],
        grid_rho_mc: vec![1.5, 3.0, 6.0],
        params: RecAggloParams {
            delta_a: 500,
            ..RecAggloParams::default()
        },
        ..PipelineConfig::default()
    };
    let rows = grid_search_datasets(&cfg, &runs)?;
    write_grid(&rows, std::io::stdout())?;
    if let Some(best) = best_row(&rows) {
        println!(
            "best: rho_s={} rho_mc={}",
            rows[best].rho_s, rows[best].rho_mc
        );
    }
    Ok(())
}
