//! Daily screening: cluster one unlabelled day together with the labelled
//! frauds of the previous weeks and flag orders that join a known fraud.
//!
//!     cargo run --release --example fraud_screening

use recagglo::detect::cluster_report;
use recagglo::pipeline::run::cluster_dataset;
use recagglo::pipeline::window::DAY_SECONDS;
use recagglo::pipeline::{PipelineConfig, WindowSpec};
use recagglo::synthgen::{generate, GeneratorConfig};
use recagglo::AttributeSchema;

fn main() -> recagglo::Result<()> {
    let gen = GeneratorConfig {
        span_days: 30,
        ..GeneratorConfig::default().scaled_to(9000)
    };
    let (history, _) = generate(&gen, &AttributeSchema::default_orders())?;

    for day in [10, 20, 29] {
        let cfg = PipelineConfig {
            window: Some(WindowSpec {
                start: gen.start + day * DAY_SECONDS,
                span_days: 1.0,
                background_days: 60.0,
                label_delay_days: 1.0,
            }),
            ..PipelineConfig::default()
        };
        let out = cluster_dataset(&cfg, &history)?;
        let verdicts = out.verdicts.as_deref().unwrap_or_default();
        let det = out.report.detection.expect("window configured");
        println!(
            "day {day}: {} new orders, {} flagged, cfr_u {}, recall {}, precision {}, fpr {}",
            verdicts.len(),
            verdicts.iter().filter(|v| v.flagged).count(),
            out.report.cfr_u.expect("window configured"),
            det.recall_final,
            det.precision,
            det.fpr
        );
        for row in cluster_report(&out.clustering, &out.data, verdicts)
            .iter()
            .take(3)
        {
            println!(
                "  cluster {}: {} orders, {} known frauds, {} flagged",
                row.cluster_id, row.size, row.known_fraud_count, row.flagged_count
            );
        }
    }
    Ok(())
}
