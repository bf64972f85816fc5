//! One sampling split of a large set: landmarks, distance evaluations and
//! the resulting cluster sizes.
//!
//!     cargo run --release --example landmark_sampling

use recagglo::sample::{landmark_count, max_clusters, sample_clust, SampleParams};
use recagglo::synthgen::{generate, GeneratorConfig};
use recagglo::{AttributeSchema, HammingMetric};

fn main() -> recagglo::Result<()> {
    let (data, _) = generate(
        &GeneratorConfig::default().scaled_to(8000),
        &AttributeSchema::default_orders(),
    )?;
    let all: Vec<usize> = (0..data.n()).collect();
    let metric = HammingMetric::unit(data.schema().d());

    for (rho_s, rho_mc) in [(0.25, 6.0), (0.5, 6.0), (1.0, 2.0)] {
        let params = SampleParams::new(rho_s, rho_mc, 42)?;
        metric.reset_evaluations();
        let start = std::time::Instant::now();
        let split = sample_clust(&all, &data, &metric, &params)?;
        let mut sizes: Vec<usize> = split.iter().map(|c| c.len()).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        println!(
            "rho_s={rho_s} rho_mc={rho_mc}: {} landmarks, {} distances, {} of at most {} clusters, {:.2} s",
            landmark_count(all.len(), rho_s),
            metric.evaluations(),
            split.len(),
            max_clusters(all.len(), rho_mc),
            start.elapsed().as_secs_f64()
        );
        println!("  largest: {:?}", &sizes[..sizes.len().min(8)]);
    }
    Ok(())
}
