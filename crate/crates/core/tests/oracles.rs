mod common;

use common::checks;

fn run_all<T>(
    name: &str,
    seeds: std::ops::Range<u64>,
    check: fn(u64) -> Result<T, String>,
) -> Vec<T> {
    let mut out = Vec::new();
    let mut failures = Vec::new();
    for s in seeds {
        match check(s) {
            Ok(v) => out.push(v),
            Err(e) => failures.push(format!("seed {s}: {e}")),
        }
    }
    assert!(failures.is_empty(), "{name}:\n{}", failures.join("\n"));
    out
}

#[test]
fn agglomerative_matches_naive_reference() {
    run_all("agglo", 10_000..10_040, checks::agglo_fixture);
}

#[test]
fn metrics_match_direct_counts() {
    run_all("metrics", 20_000..20_100, checks::metrics_fixture);
}

#[test]
fn label_propagation_matches_two_pass_reference() {
    let flagged = run_all("propagation", 30_000..30_100, checks::propagation_fixture);
    // the planted campaigns must actually be picked up most of the time
    assert!(flagged.iter().filter(|&&f| f > 0).count() >= 90);
}

#[test]
fn sampling_evaluates_landmarks_times_records() {
    run_all("sampling", 40_000..40_010, checks::sampling_count_fixture);
}

#[test]
fn confusion_matrix_example() {
    use recagglo::metrics::detection_metrics;
    use recagglo::Label;

    // TP=5, FN=15, FP=10, TN=970
    let mut truth = vec![Label::Fraud; 20];
    truth.extend(vec![Label::Legitimate; 980]);
    let mut predicted = vec![false; 1000];
    predicted[..5].fill(true);
    predicted[20..30].fill(true);
    let clustered = vec![true; 1000];
    let d = detection_metrics(&predicted, &truth, &clustered).unwrap();
    assert_eq!(d.recall_final.value(), Some(0.25));
    assert_eq!(d.precision.value(), Some(1.0 / 3.0));
    assert!((d.fpr.value().unwrap() - 10.0 / 980.0).abs() < 1e-15);
}
