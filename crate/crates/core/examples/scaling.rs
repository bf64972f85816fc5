//! Clustering time on growing subsamples of one synthetic source.
//!
//!     cargo run --release --example scaling [max_size]

use recagglo::pipeline::run::{bench_datasets, write_bench};
use recagglo::pipeline::PipelineConfig;
use recagglo::synthgen::{generate, GeneratorConfig};
use recagglo::AttributeSchema;

fn main() -> recagglo::Result<()> {
    let max: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20_000);
    let (source, _) = generate(
        &GeneratorConfig::default().scaled_to(max),
        &AttributeSchema::default_orders(),
    )?;
    let cfg = PipelineConfig {
        bench_sizes: vec![max / 4, max / 2, max],
        bench_repeats: 2,
        ..PipelineConfig::default()
    };
    write_bench(&bench_datasets(&cfg, &source)?, std::io::stdout())
}
