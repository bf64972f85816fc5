//! Generate a small order history, cluster it and print the metrics.
//!
//!     cargo run --release --example quickstart

use recagglo::metrics::{cfr, clr, impurity};
use recagglo::synthgen::{generate, GeneratorConfig};
use recagglo::{rec_agglo_all, AttributeSchema, HammingMetric, RecAggloParams};

fn main() -> recagglo::Result<()> {
    let gen = GeneratorConfig::default().scaled_to(3000);
    let (data, truth) = generate(&gen, &AttributeSchema::default_orders())?;
    println!(
        "{} orders, {} planted campaigns",
        data.n(),
        truth.campaign_count()
    );

    let metric = HammingMetric::unit(data.schema().d());
    let params = RecAggloParams::default();
    let (clustering, stats) = rec_agglo_all(&data, &metric, &params)?;

    let labels = data.labels();
    println!(
        "{} clusters ({} singletons), depth {}, {} sampling splits",
        clustering.len(),
        clustering.singleton_count(),
        stats.max_depth,
        stats.sample_calls
    );
    println!("impurity {}", impurity(&clustering, &labels)?);
    println!("clustered frauds {}", cfr(&clustering, &labels));
    println!("clustered legitimate {}", clr(&clustering, &labels, None));

    let biggest = clustering.iter().max_by_key(|c| c.len()).expect("nonempty");
    println!("largest cluster: {} orders", biggest.len());
    for &i in biggest.members.iter().take(3) {
        let r = data.record(i);
        println!("  {} {:?} {:?}", r.record_id, r.label, &r.values[..3]);
    }
    Ok(())
}
