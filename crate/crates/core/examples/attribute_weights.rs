//! Cardinality-driven and label-driven attribute weights on synthetic data,
//! and their effect on clustering.
//!
//!     cargo run --release --example attribute_weights

use recagglo::metrics::{cfr, impurity};
use recagglo::synthgen::{generate, GeneratorConfig};
use recagglo::weights::{cardinality_weights, label_weights, training_params};
use recagglo::{rec_agglo_all, AttributeSchema, HammingMetric, RecAggloParams, WeightVector};

fn main() -> recagglo::Result<()> {
    let schema = AttributeSchema::default_orders();
    let train = generate(
        &GeneratorConfig {
            seed: 1,
            ..GeneratorConfig::default().scaled_to(6000)
        },
        &schema,
    )?
    .0;
    let test = generate(
        &GeneratorConfig {
            seed: 2,
            ..GeneratorConfig::default().scaled_to(6000)
        },
        &schema,
    )?
    .0;

    let card = cardinality_weights(&train)?;
    let (label, profile) = label_weights(&train, &training_params(0))?;
    println!(
        "training clusters: {} fraud, {} legitimate, {} mixed",
        profile.fraud_clusters, profile.legit_clusters, profile.mixed_clusters
    );
    println!("{:<22} {:>11} {:>6}", "attribute", "cardinality", "label");
    for (i, a) in schema.attributes().iter().enumerate() {
        println!(
            "{:<22} {:>11.3} {:>6.3}",
            a.id,
            card.as_slice()[i],
            label.as_slice()[i]
        );
    }

    let labels = test.labels();
    for (name, w) in [
        ("unit", WeightVector::unit(schema.d())),
        ("cardinality", card),
        ("label", label),
    ] {
        let metric = HammingMetric::with_weights(w);
        let (cl, _) = rec_agglo_all(&test, &metric, &RecAggloParams::default())?;
        println!(
            "{name:<12} impurity {} cfr {}",
            impurity(&cl, &labels)?,
            cfr(&cl, &labels)
        );
    }
    Ok(())
}
