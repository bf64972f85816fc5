//! Configure the order generator, inspect a campaign and write the files
//! the command line tool reads.
//!
//!     cargo run --example synthetic_data [out_dir]

use recagglo::pipeline::run::run_gen;
use recagglo::synthgen::{AttributeProfile, GeneratorConfig};
use recagglo::{AttributeCategory, AttributeSchema, HammingMetric};

fn main() -> recagglo::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "synthetic-orders".into());
    let mut gen = GeneratorConfig {
        seed: 5,
        n_legit: 2000,
        n_fraud: 600,
        n_campaigns: 12,
        campaign_size_range: (20, 90),
        ..GeneratorConfig::default()
    };
    // looser shipping reuse inside campaigns, tighter card reuse
    gen.set_overlap(AttributeCategory::Shipping, 0.6);
    gen.set_overlap(AttributeCategory::Payment, 0.8);
    gen.profiles.insert(
        "card_country".into(),
        AttributeProfile::pool(12).with_nulls(0.1),
    );

    let schema = AttributeSchema::default_orders();
    let (data, truth) = run_gen(&gen, &schema, out.as_ref())?;
    println!(
        "wrote {} orders in {} campaigns to {out}/",
        data.n(),
        truth.campaign_count()
    );

    let metric = HammingMetric::unit(schema.d());
    let campaign = &truth.campaigns()[0];
    let (a, b) = (campaign[0], campaign[1]);
    println!("campaign 0 has {} orders; two of them:", campaign.len());
    for i in [a, b] {
        let r = data.record(i);
        println!(
            "  {} at {}: {:?}",
            r.record_id,
            r.timestamp,
            &r.values[9..16]
        );
    }
    println!("  distance {:.3}", metric.between(&data, a, b));
    Ok(())
}
