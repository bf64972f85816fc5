//! Attribute weighting strategies.
//!
//! * Cardinality-driven: `w_i = 1 + 2 * (1 - r_i / (median(r) + r_i))`
//!   with `r_i = n_i / card_i` the inverse richness of attribute `i`, so
//!   high-cardinality attributes weigh up to 3 and near-constant ones 1.
//! * Label-driven: cluster labelled data with unit weights, measure how
//!   concentrated each attribute is (Simpson index) inside pure-fraud,
//!   pure-legitimate and mixed clusters, and turn the contrasts into
//!   weights in `[1, 3]`.

use std::collections::HashSet;

use crate::clustering::Clustering;
use crate::distance::{HammingMetric, WeightVector};
use crate::error::{Error, Result};
use crate::recagglo::{rec_agglo_all, RecAggloParams};
use crate::schema::{Dataset, Label, NULL_CODE};

/// Fusion distance used when clustering the training set for label weights.
pub const TRAINING_D_MAX: f64 = 0.56;

/// Floor for the advantage normalizer.
const NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeCardinality {
    /// Distinct non-null values.
    pub card: usize,
    /// Non-null instances.
    pub non_null: usize,
    /// `non_null / card`, absent when the attribute is always null.
    pub r_inv: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CardinalityStats {
    pub attributes: Vec<AttributeCardinality>,
    /// Median of `r_inv` over attributes with at least one value.
    pub median_r_inv: f64,
    pub n: usize,
}

pub fn cardinality_stats(data: &Dataset) -> Result<CardinalityStats> {
    if data.is_empty() {
        return Err(Error::InvalidParameter(
            "cardinality weights need a nonempty dataset".into(),
        ));
    }
    let d = data.schema().d();
    let mut distinct: Vec<HashSet<u32>> = vec![HashSet::new(); d];
    let mut non_null = vec![0usize; d];
    for r in 0..data.n() {
        for (i, &code) in data.row(r).iter().enumerate() {
            if code != NULL_CODE {
                distinct[i].insert(code);
                non_null[i] += 1;
            }
        }
    }
    let attributes: Vec<AttributeCardinality> = distinct
        .iter()
        .zip(&non_null)
        .map(|(set, &n_i)| AttributeCardinality {
            card: set.len(),
            non_null: n_i,
            r_inv: (n_i > 0).then(|| n_i as f64 / set.len() as f64),
        })
        .collect();
    let mut present: Vec<f64> = attributes.iter().filter_map(|a| a.r_inv).collect();
    if present.is_empty() {
        return Err(Error::InvalidParameter("every attribute is null".into()));
    }
    present.sort_by(f64::total_cmp);
    Ok(CardinalityStats {
        attributes,
        median_r_inv: median_sorted(&present),
        n: data.n(),
    })
}

fn median_sorted(v: &[f64]) -> f64 {
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        (v[k / 2 - 1] + v[k / 2]) / 2.0
    }
}

/// Weight of one attribute given its inverse richness and the median.
pub fn cardinality_weight(r_inv: f64, median_r_inv: f64) -> f64 {
    1.0 + 2.0 * (1.0 - r_inv / (median_r_inv + r_inv))
}

/// Cardinality-driven weights; attributes that are always null get 1.
pub fn cardinality_weights(data: &Dataset) -> Result<WeightVector> {
    let stats = cardinality_stats(data)?;
    Ok(cardinality_weights_from(&stats))
}

pub fn cardinality_weights_from(stats: &CardinalityStats) -> WeightVector {
    let w = stats
        .attributes
        .iter()
        .map(|a| {
            a.r_inv
                .map_or(1.0, |r| cardinality_weight(r, stats.median_r_inv))
        })
        .collect();
    WeightVector::new(w).expect("cardinality weights lie in [1, 3]")
}

/// `sum_j p_j^2` over the value frequencies of attribute `attribute`
/// among `cluster`; nulls count as one more value.
pub fn simpson_index(cluster: &[usize], attribute: usize, data: &Dataset) -> f64 {
    assert!(!cluster.is_empty(), "Simpson index of an empty cluster");
    let mut codes: Vec<u32> = cluster.iter().map(|&r| data.row(r)[attribute]).collect();
    codes.sort_unstable();
    let total = codes.len() as f64;
    codes
        .chunk_by(|a, b| a == b)
        .map(|run| {
            let p = run.len() as f64 / total;
            p * p
        })
        .sum()
}

/// Simpson index by attribute id.
pub fn simpson_index_by_id(cluster: &[usize], attribute_id: &str, data: &Dataset) -> Result<f64> {
    let pos = data
        .schema()
        .position(attribute_id)
        .ok_or_else(|| Error::Schema(format!("unknown attribute `{attribute_id}`")))?;
    Ok(simpson_index(cluster, pos, data))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterKind {
    PureFraud,
    PureLegitimate,
    Mixed,
}

/// Kind of a cluster judged on its labelled members; `None` when fewer
/// than two members carry a label.
pub fn classify(members: &[usize], data: &Dataset) -> Option<ClusterKind> {
    let (mut f, mut l) = (0usize, 0usize);
    for &m in members {
        match data.record(m).label {
            Label::Fraud => f += 1,
            Label::Legitimate => l += 1,
            Label::Unlabeled => {}
        }
    }
    match (f, l) {
        _ if f + l < 2 => None,
        (_, 0) => Some(ClusterKind::PureFraud),
        (0, _) => Some(ClusterKind::PureLegitimate),
        _ => Some(ClusterKind::Mixed),
    }
}

/// Per-attribute Simpson statistics behind the label-driven weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpsonProfile {
    pub fraud_clusters: usize,
    pub legit_clusters: usize,
    pub mixed_clusters: usize,
    /// Mean Simpson index over pure-fraud clusters.
    pub mean_fraud: Vec<f64>,
    /// Mean over pure-legitimate clusters; `None` when there are none.
    pub mean_legit: Option<Vec<f64>>,
    /// Mean over mixed clusters; `None` when there are none.
    pub mean_mixed: Option<Vec<f64>>,
    /// `mean_fraud - mean_legit`.
    pub raw_fl: Vec<f64>,
    /// `mean_fraud + mean_legit - 2 * mean_mixed`.
    pub raw_pm: Vec<f64>,
    pub norm_adv: f64,
    pub adv_fl: Vec<f64>,
    pub adv_pm: Vec<f64>,
}

/// Turns raw advantages into weights. The normalizer is the largest of
/// `|raw_fl_j|` and `|raw_pm_j| / 2` over all attributes, so each advantage
/// lies in `[-1, 1]`; their sum is clamped to `[0, 2]`.
pub fn advantage_weights(
    raw_fl: &[f64],
    raw_pm: &[f64],
) -> (WeightVector, f64, Vec<f64>, Vec<f64>) {
    let norm_adv = raw_fl
        .iter()
        .zip(raw_pm)
        .map(|(fl, pm)| fl.abs().max(pm.abs() / 2.0))
        .fold(0.0, f64::max)
        .max(NORM_FLOOR);
    let adv_fl: Vec<f64> = raw_fl.iter().map(|v| v / norm_adv).collect();
    let adv_pm: Vec<f64> = raw_pm.iter().map(|v| v / (2.0 * norm_adv)).collect();
    let w = adv_fl
        .iter()
        .zip(&adv_pm)
        .map(|(a, b)| 1.0 + (a + b).clamp(0.0, 2.0))
        .collect();
    (
        WeightVector::new(w).expect("label weights lie in [1, 3]"),
        norm_adv,
        adv_fl,
        adv_pm,
    )
}

/// Label-driven weights from an existing clustering of labelled data.
/// Unlabelled members are ignored; clusters with fewer than two labelled
/// members carry no signal and are skipped.
pub fn label_weights_from_clustering(
    cl: &Clustering,
    data: &Dataset,
) -> Result<(WeightVector, SimpsonProfile)> {
    let d = data.schema().d();
    let mut sums = [vec![0.0; d], vec![0.0; d], vec![0.0; d]];
    let mut counts = [0usize; 3];
    for c in cl {
        let labelled: Vec<usize> = c
            .members
            .iter()
            .copied()
            .filter(|&m| data.record(m).label.is_labeled())
            .collect();
        let Some(kind) = classify(&labelled, data) else {
            continue;
        };
        let k = kind as usize;
        counts[k] += 1;
        for (i, s) in sums[k].iter_mut().enumerate() {
            *s += simpson_index(&labelled, i, data);
        }
    }
    let [fraud_n, legit_n, mixed_n] = counts;
    if fraud_n == 0 {
        return Err(Error::Training(
            "no pure-fraud clusters formed; use a larger labelled training set or a larger d_max"
                .into(),
        ));
    }
    if legit_n == 0 && mixed_n == 0 {
        return Err(Error::Training(
            "only pure-fraud clusters formed; training needs legitimate orders to contrast".into(),
        ));
    }
    let mean = |k: usize| -> Option<Vec<f64>> {
        (counts[k] > 0).then(|| sums[k].iter().map(|s| s / counts[k] as f64).collect())
    };
    let mean_fraud = mean(0).expect("fraud clusters present");
    let mean_legit = mean(1);
    let mean_mixed = mean(2);

    let mut raw_fl = Vec::with_capacity(d);
    let mut raw_pm = Vec::with_capacity(d);
    for i in 0..d {
        let f = mean_fraud[i];
        // a missing kind is imputed so that the contrast it enters vanishes
        let l = mean_legit.as_ref().map_or(f, |v| v[i]);
        let m = mean_mixed.as_ref().map_or((f + l) / 2.0, |v| v[i]);
        raw_fl.push(f - l);
        raw_pm.push(f + l - 2.0 * m);
    }
    let (weights, norm_adv, adv_fl, adv_pm) = advantage_weights(&raw_fl, &raw_pm);
    Ok((
        weights,
        SimpsonProfile {
            fraud_clusters: fraud_n,
            legit_clusters: legit_n,
            mixed_clusters: mixed_n,
            mean_fraud,
            mean_legit,
            mean_mixed,
            raw_fl,
            raw_pm,
            norm_adv,
            adv_fl,
            adv_pm,
        },
    ))
}

/// Clusters `data` with unit weights under `params` (typically
/// `d_max = TRAINING_D_MAX`) and derives label-driven weights.
pub fn label_weights(
    data: &Dataset,
    params: &RecAggloParams,
) -> Result<(WeightVector, SimpsonProfile)> {
    let labels = data.labels();
    if !labels.contains(&Label::Fraud) || !labels.contains(&Label::Legitimate) {
        return Err(Error::Training(
            "training data needs both fraud and legitimate labels".into(),
        ));
    }
    let metric = HammingMetric::unit(data.schema().d());
    let (clustering, _) = rec_agglo_all(data, &metric, params)?;
    label_weights_from_clustering(&clustering, data)
}

/// Default parameters for weight training.
pub fn training_params(seed: u64) -> RecAggloParams {
    RecAggloParams {
        d_max: TRAINING_D_MAX,
        seed,
        ..Default::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::Provenance;
    use crate::schema::{Attribute, AttributeCategory, AttributeSchema, Record};
    use proptest::prelude::*;

    fn dataset(rows: &[(&str, Label)]) -> Dataset {
        let d = rows[0].0.len();
        let schema = AttributeSchema::new(
            (0..d)
                .map(|i| Attribute::new(format!("a{i}"), AttributeCategory::Payment))
                .collect(),
        )
        .unwrap();
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, (r, label))| Record {
                record_id: i.to_string(),
                timestamp: 0,
                label: *label,
                values: r
                    .chars()
                    .map(|c| (c != '_').then(|| c.to_string()))
                    .collect(),
            })
            .collect();
        Dataset::new(schema, records).unwrap()
    }

    #[test]
    fn cardinality_anchor_values() {
        assert_eq!(cardinality_weight(149.0, 149.0), 2.0);
        let w = cardinality_weight(1_000_000.0, 149.0);
        assert!((w - 1.000298).abs() < 1e-6, "{w}");
        assert!((cardinality_weight(1e-12, 149.0) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn cardinality_weights_on_data() {
        // a0 constant (r = 4), a1 all distinct (r = 1), a2 two values (r = 2), a3 always null
        let ds = dataset(&[
            ("aaa_", Label::Unlabeled),
            ("abb_", Label::Unlabeled),
            ("aca_", Label::Unlabeled),
            ("adb_", Label::Unlabeled),
        ]);
        let stats = cardinality_stats(&ds).unwrap();
        assert_eq!(stats.attributes[0].card, 1);
        assert_eq!(stats.attributes[1].r_inv, Some(1.0));
        assert_eq!(stats.attributes[3].r_inv, None);
        assert_eq!(stats.median_r_inv, 2.0);
        let w = cardinality_weights(&ds).unwrap();
        let expect = [
            1.0 + 2.0 * (1.0 - 4.0 / 6.0),
            1.0 + 2.0 * (1.0 - 1.0 / 3.0),
            2.0,
            1.0,
        ];
        for (a, b) in w.as_slice().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(cardinality_weights(&Dataset::empty(ds.shared_schema())).is_err());
    }

    #[test]
    fn simpson_examples() {
        let ds = dataset(&[
            ("a", Label::Unlabeled),
            ("a", Label::Unlabeled),
            ("b", Label::Unlabeled),
            ("c", Label::Unlabeled),
            ("_", Label::Unlabeled),
            ("_", Label::Unlabeled),
        ]);
        assert_eq!(simpson_index(&[0, 1], 0, &ds), 1.0);
        assert_eq!(simpson_index(&[0, 2, 3, 4], 0, &ds), 0.25);
        assert!((simpson_index(&[0, 1, 2], 0, &ds) - 5.0 / 9.0).abs() < 1e-15);
        // nulls are one more value
        assert_eq!(simpson_index(&[4, 5], 0, &ds), 1.0);
        assert_eq!(simpson_index_by_id(&[0, 1], "a0", &ds).unwrap(), 1.0);
        assert!(simpson_index_by_id(&[0], "zz", &ds).is_err());
    }

    /// Three clusters over three attributes, evaluated by hand:
    ///
    /// | cluster      | a0      | a1      | a2      |
    /// |--------------|---------|---------|---------|
    /// | fraud {F,F}  | x x: 1  | p q: .5 | k k: 1  |
    /// | legit {L,L}  | y z: .5 | r r: 1  | k k: 1  |
    /// | mixed {F,L,L}| u u v:5/9 | s t s:5/9 | k k k: 1 |
    ///
    /// raw_fl = (.5, -.5, 0); raw_pm = (1.5 - 10/9, 1.5 - 10/9, 0) = (7/18, 7/18, 0)
    /// norm = max(.5, 7/36) = .5; adv_fl = (1, -1, 0); adv_pm = (7/18, 7/18, 0)
    /// w = (1 + 25/18, 1 + 0, 1)
    #[test]
    fn label_weights_toy_fixture() {
        let ds = dataset(&[
            ("xpk", Label::Fraud),
            ("xqk", Label::Fraud),
            ("yrk", Label::Legitimate),
            ("zrk", Label::Legitimate),
            ("usk", Label::Fraud),
            ("utk", Label::Legitimate),
            ("vsk", Label::Legitimate),
            ("mmm", Label::Unlabeled),
        ]);
        let cl = Clustering::from_groups(
            vec![vec![0, 1], vec![2, 3], vec![4, 5, 6, 7]],
            Provenance::Agglo,
        );
        let (w, profile) = label_weights_from_clustering(&cl, &ds).unwrap();
        assert_eq!(
            (
                profile.fraud_clusters,
                profile.legit_clusters,
                profile.mixed_clusters
            ),
            (1, 1, 1)
        );
        let expected = [1.0 + 25.0 / 18.0, 1.0, 1.0];
        for (a, b) in w.as_slice().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        assert!((profile.norm_adv - 0.5).abs() < 1e-15);
        assert_eq!(profile.raw_fl[2], 0.0);
        assert_eq!(profile.raw_pm[2], 0.0);
    }

    #[test]
    fn constant_attribute_gets_unit_weight() {
        let ds = dataset(&[
            ("ak", Label::Fraud),
            ("ak", Label::Fraud),
            ("bk", Label::Legitimate),
            ("ck", Label::Legitimate),
        ]);
        let cl = Clustering::from_groups(vec![vec![0, 1], vec![2, 3]], Provenance::Agglo);
        let (w, _) = label_weights_from_clustering(&cl, &ds).unwrap();
        assert_eq!(w.as_slice()[1], 1.0);
        assert!(w.as_slice()[0] > 1.0);
    }

    #[test]
    fn maximal_advantages_reach_three() {
        // attribute 0 attains both normalizer bounds
        let (w, norm, fl, pm) = advantage_weights(&[0.4, 0.1, -0.2], &[0.8, 0.2, 0.3]);
        assert_eq!(norm, 0.4);
        assert_eq!((fl[0], pm[0]), (1.0, 1.0));
        assert_eq!(w.as_slice()[0], 3.0);
        assert_eq!(w.as_slice()[2], 1.0);
    }

    #[test]
    fn training_errors() {
        let ds = dataset(&[
            ("ab", Label::Legitimate),
            ("ab", Label::Legitimate),
            ("cd", Label::Fraud),
        ]);
        let cl = Clustering::from_groups(vec![vec![0, 1], vec![2]], Provenance::Agglo);
        assert!(matches!(
            label_weights_from_clustering(&cl, &ds),
            Err(Error::Training(_))
        ));

        let ds = dataset(&[
            ("ab", Label::Fraud),
            ("ab", Label::Fraud),
            ("cd", Label::Legitimate),
        ]);
        let cl = Clustering::from_groups(vec![vec![0, 1], vec![2]], Provenance::Agglo);
        assert!(matches!(
            label_weights_from_clustering(&cl, &ds),
            Err(Error::Training(_))
        ));

        let only_legit = dataset(&[("ab", Label::Legitimate), ("ab", Label::Legitimate)]);
        assert!(label_weights(&only_legit, &training_params(0)).is_err());
    }

    #[test]
    fn label_weights_end_to_end() {
        // fraud pairs share a0/a1; legit pairs share a2/a3
        let ds = dataset(&[
            ("xyab", Label::Fraud),
            ("xycd", Label::Fraud),
            ("pqef", Label::Legitimate),
            ("rsef", Label::Legitimate),
            ("ttgh", Label::Fraud),
            ("ttij", Label::Legitimate),
        ]);
        let (w, profile) = label_weights(&ds, &training_params(1)).unwrap();
        assert!(profile.fraud_clusters >= 1);
        let w = w.as_slice();
        assert!(w[0] > w[2] && w[1] > w[3], "{w:?}");
    }

    proptest! {
        #[test]
        fn cardinality_weight_range_and_monotonicity(
            r in 1e-6f64..1e7, median in 1e-3f64..1e6, bump in 1e-3f64..1e3
        ) {
            let w = cardinality_weight(r, median);
            prop_assert!((1.0..3.0).contains(&w));
            prop_assert!(cardinality_weight(r + bump, median) <= w);
        }

        #[test]
        fn advantage_weights_range_and_ranking(
            raw in prop::collection::vec((-1.0f64..1.0, -2.0f64..2.0), 1..12),
            scale in 0.01f64..100.0,
        ) {
            let fl: Vec<f64> = raw.iter().map(|r| r.0).collect();
            let pm: Vec<f64> = raw.iter().map(|r| r.1).collect();
            let (w, _, afl, apm) = advantage_weights(&fl, &pm);
            for ((wi, a), b) in w.as_slice().iter().zip(&afl).zip(&apm) {
                prop_assert!((1.0..=3.0).contains(wi));
                prop_assert!(a.abs() <= 1.0 + 1e-12 && b.abs() <= 1.0 + 1e-12);
            }
            let fl2: Vec<f64> = fl.iter().map(|v| v * scale).collect();
            let pm2: Vec<f64> = pm.iter().map(|v| v * scale).collect();
            let (w2, ..) = advantage_weights(&fl2, &pm2);
            for (a, b) in w.as_slice().iter().zip(w2.as_slice()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn simpson_bounds_and_relabel_invariance(values in prop::collection::vec(0u8..5, 1..30)) {
            let rows: Vec<(String, Label)> =
                values.iter().map(|v| (((b'a' + v) as char).to_string(), Label::Unlabeled)).collect();
            let shifted: Vec<(String, Label)> =
                values.iter().map(|v| (((b'k' + 4 - v) as char).to_string(), Label::Unlabeled)).collect();
            let as_ref = |r: &[(String, Label)]| -> Dataset {
                dataset(&r.iter().map(|(s, l)| (s.as_str(), *l)).collect::<Vec<_>>())
            };
            let members: Vec<usize> = (0..values.len()).collect();
            let s = simpson_index(&members, 0, &as_ref(&rows));
            prop_assert!(s >= 1.0 / values.len() as f64 - 1e-12 && s <= 1.0 + 1e-12);
            let t = simpson_index(&members, 0, &as_ref(&shifted));
            prop_assert!((s - t).abs() < 1e-12);
        }
    }
}
