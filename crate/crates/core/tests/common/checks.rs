//! One randomized fixture per call, compared against the brute-force
//! references. Each check returns a description of the first mismatch.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recagglo::agglo::{agglo_clust, linkage, DistanceParams, Linkage};
use recagglo::detect::label_propagation;
use recagglo::distance::distance_matrix;
use recagglo::metrics::{cfr, cfr_u, clr, detection_metrics, impurity, Ratio};
use recagglo::pipeline::run::cluster_dataset;
use recagglo::pipeline::{PipelineConfig, WindowSpec};
use recagglo::sample::{max_clusters, sample_clust, SampleParams};
use recagglo::synthgen::{generate, GeneratorConfig};
use recagglo::{
    AttributeSchema, Clustering, HammingMetric, Label, Provenance, RecAggloParams, WeightVector,
};

use super::*;

fn ratio_eq(name: &str, got: Ratio, (num, den): (u64, u64)) -> Result<(), String> {
    if got == Ratio::new(num, den) {
        Ok(())
    } else {
        Err(format!(
            "{name}: got {}/{}, expected {num}/{den}",
            got.num, got.den
        ))
    }
}

/// Single and complete linkage on a tie-free fixture of at most 64
/// records against [`naive_agglomerate`]: fusion heights and the flat
/// clusters at a random `d_max` must agree exactly.
pub fn agglo_fixture(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 24;
    for _attempt in 0..100 {
        let m = rng.gen_range(2..=64);
        let pool = m + rng.gen_range(0..16);
        let data = random_dataset(&mut rng, pool, d, 3, 0.1);
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(0.5..3.0)).collect();
        let mut c: Vec<usize> = (0..pool).collect();
        for i in (1..pool).rev() {
            c.swap(i, rng.gen_range(0..=i));
        }
        c.truncate(m);

        let dist = pairwise(&data, &c, &w);
        if !tie_free(&dist, 1e-9) {
            continue;
        }
        let d_max = rng.gen_range(0.2..0.8);
        if dist.iter().flatten().any(|&x| (x - d_max).abs() < 1e-9) {
            continue;
        }
        let metric = HammingMetric::with_weights(WeightVector::new(w.clone()).unwrap());
        for (link, method) in [
            (Link::Single, Linkage::Single),
            (Link::Complete, Linkage::Complete),
        ] {
            let (heights, groups) = naive_agglomerate(&dist, link, d_max);
            let expected = canonical_groups(
                groups
                    .into_iter()
                    .map(|g| g.into_iter().map(|i| c[i]).collect())
                    .collect(),
            );
            let params = DistanceParams {
                metric: metric.clone(),
                linkage: method,
                d_max,
            };
            let got = agglo_clust(&c, &data, &params).map_err(|e| e.to_string())?;
            if groups_of(&got) != expected {
                return Err(format!(
                    "{method:?} m={m}: flat clusters differ at d_max={d_max}"
                ));
            }
            let dm = distance_matrix(&c, &c, &data, &metric).map_err(|e| e.to_string())?;
            let lm = linkage(&dm, method).map_err(|e| e.to_string())?;
            let got_heights: Vec<f64> = lm.merges().iter().map(|mg| mg.distance).collect();
            if got_heights != heights {
                return Err(format!("{method:?} m={m}: fusion heights differ"));
            }
        }
        return Ok(());
    }
    Err("no tie-free fixture found".into())
}

/// Impurity, CFR, CFR_u, CLR and the detection ratios of a random
/// clustering against direct counts.
pub fn metrics_fixture(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=300);
    let max_size = rng.gen_range(1..=8);
    let groups = random_partition(&mut rng, n, max_size);
    let unlabeled = rng.gen_bool(0.5);
    let labels = random_labels(&mut rng, n, unlabeled);
    let window: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.4)).collect();
    let cl = Clustering::from_groups(groups.clone(), Provenance::Agglo);

    let got = impurity(&cl, &labels).map_err(|e| e.to_string())?;
    ratio_eq("impurity", got, brute_impurity(&groups, &labels))?;
    ratio_eq(
        "cfr",
        cfr(&cl, &labels),
        brute_clustered(&groups, &labels, Label::Fraud, None),
    )?;
    ratio_eq(
        "cfr_u",
        cfr_u(&cl, &labels, &window),
        brute_clustered(&groups, &labels, Label::Fraud, Some(&window)),
    )?;
    ratio_eq(
        "clr",
        clr(&cl, &labels, None),
        brute_clustered(&groups, &labels, Label::Legitimate, None),
    )?;
    ratio_eq(
        "clr masked",
        clr(&cl, &labels, Some(&window)),
        brute_clustered(&groups, &labels, Label::Legitimate, Some(&window)),
    )?;

    let member = membership(&groups, n);
    let predicted: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.3)).collect();
    let clustered: Vec<bool> = member.iter().map(|&(_, s)| s > 1).collect();
    let det = detection_metrics(&predicted, &labels, &clustered).map_err(|e| e.to_string())?;
    let (mut tp, mut fp, mut tn, mut fnn, mut cf, mut ctp) = (0, 0, 0, 0, 0, 0);
    for i in 0..n {
        let is_fraud = labels[i] == Label::Fraud;
        let is_legit = labels[i] == Label::Legitimate;
        tp += u64::from(is_fraud && predicted[i]);
        fnn += u64::from(is_fraud && !predicted[i]);
        fp += u64::from(is_legit && predicted[i]);
        tn += u64::from(is_legit && !predicted[i]);
        cf += u64::from(is_fraud && clustered[i]);
        ctp += u64::from(is_fraud && clustered[i] && predicted[i]);
    }
    ratio_eq("recall_final", det.recall_final, (tp, tp + fnn))?;
    ratio_eq("recall_clust", det.recall_clust, (ctp, cf))?;
    ratio_eq("precision", det.precision, (tp, tp + fp))?;
    ratio_eq("fpr", det.fpr, (fp, fp + tn))
}

fn window_config(seed: u64, delta_a: usize, window: WindowSpec) -> PipelineConfig {
    PipelineConfig {
        params: RecAggloParams {
            delta_a,
            seed,
            ..RecAggloParams::default()
        },
        window: Some(window),
        workers: 1,
        ..PipelineConfig::default()
    }
}

/// A synthetic order history with a one-day window placed inside a random
/// campaign, so the campaign straddles the labelled background and the
/// window. Verdicts must match [`brute_propagation`] and the recall
/// identity `recall_final = recall_clust * cfr_u` must hold exactly.
/// Returns the number of flagged orders.
pub fn propagation_fixture(seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(300..=1500);
    let gen = GeneratorConfig {
        seed,
        span_days: 10,
        campaign_days: 2,
        ..GeneratorConfig::default().scaled_to(n)
    };
    let (all, truth) =
        generate(&gen, &AttributeSchema::default_orders()).map_err(|e| e.to_string())?;

    let mut campaigns = truth.campaigns();
    campaigns.retain(|c| c.len() >= 4);
    if campaigns.is_empty() {
        return Err("generator produced no campaign".into());
    }
    let camp = &campaigns[rng.gen_range(0..campaigns.len())];
    let mut times: Vec<i64> = camp.iter().map(|&i| all.record(i).timestamp).collect();
    times.sort_unstable();
    let start = times[times.len() / 2].max(times[0] + 1);
    let spec = WindowSpec {
        start,
        span_days: 1.0,
        background_days: 60.0,
        label_delay_days: 1.0,
    };
    let delta_a = [40, 150, 1000][rng.gen_range(0..3)];
    let out =
        cluster_dataset(&window_config(seed, delta_a, spec), &all).map_err(|e| e.to_string())?;
    let in_window = out.window.as_ref().expect("window configured");

    let campaign_of: HashMap<&str, i64> = truth
        .record_ids
        .iter()
        .map(String::as_str)
        .zip(truth.campaign_id.iter().copied())
        .collect();
    let straddles = (0..out.data.n()).any(|i| {
        let c = campaign_of[out.data.record(i).record_id.as_str()];
        c >= 0
            && in_window[i]
            && (0..out.data.n())
                .any(|j| !in_window[j] && campaign_of[out.data.record(j).record_id.as_str()] == c)
    });
    if !straddles {
        return Err("no campaign crosses the window boundary".into());
    }

    let verdicts = label_propagation(&out.clustering, &out.data);
    if out.verdicts.as_ref() != Some(&verdicts) {
        return Err("pipeline verdicts differ from label_propagation".into());
    }
    let expected = brute_propagation(&out.clustering.groups(), &out.data.labels());
    let got: Vec<(usize, bool, usize, usize)> = verdicts
        .iter()
        .map(|v| (v.index, v.flagged, v.cluster_id, v.known_fraud_count))
        .collect();
    if got != expected {
        return Err(format!(
            "verdicts differ from the two-pass reference (n={})",
            out.data.n()
        ));
    }
    for v in &verdicts {
        if out.data.record(v.index).record_id != v.record_id {
            return Err("verdict record id does not match its row".into());
        }
    }

    let det = out.report.detection.ok_or("no detection metrics")?;
    let cu = out.report.cfr_u.ok_or("no cfr_u")?;
    // tp / F_u == (ctp / cf) * (cf / F_u), cross-multiplied
    let (rf, rc) = (det.recall_final, det.recall_clust);
    let identity = if rc.is_defined() && cu.is_defined() {
        rf.num as u128 * rc.den as u128 * cu.den as u128
            == rc.num as u128 * cu.num as u128 * rf.den as u128
    } else {
        rf.num == 0
    };
    if !identity {
        return Err(format!("recall identity fails: {rf} vs {rc} * {cu}"));
    }
    Ok(verdicts.iter().filter(|v| v.flagged).count())
}

/// `sample_clust` on `m` random records must evaluate exactly
/// `landmarks * m` distances and return at most `floor(m / rho_mc)`
/// clusters covering its input.
pub fn sampling_count_fixture(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m: usize = rng.gen_range(2..=3000);
    let rho_s: f64 = rng.gen_range(0.1..3.0);
    let rho_mc: f64 = rng.gen_range(1.05..12.0);
    let pool = m + rng.gen_range(0..50);
    let data = random_dataset(&mut rng, pool, 12, 5, 0.05);
    let c: Vec<usize> = (pool - m..pool).collect();
    let metric = HammingMetric::unit(12);
    let params = SampleParams::new(rho_s, rho_mc, seed).map_err(|e| e.to_string())?;
    let cl = sample_clust(&c, &data, &metric, &params).map_err(|e| e.to_string())?;

    let landmarks = ((rho_s * (m as f64).sqrt() + 0.5).floor() as usize).clamp(1, m);
    let expected = (landmarks * m) as u64;
    if metric.evaluations() != expected {
        return Err(format!(
            "m={m} rho_s={rho_s}: {} evaluations, expected {expected}",
            metric.evaluations()
        ));
    }
    if cl.len() > max_clusters(m, rho_mc) {
        return Err(format!("{} clusters exceed the limit", cl.len()));
    }
    cl.validate_partition(&c).map_err(|e| e.to_string())
}
