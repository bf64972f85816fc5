//! Clustering and detection metrics.
//!
//! Every fraction is kept as an exact integer [`Ratio`]; a zero
//! denominator yields an undefined ratio rather than a silent zero. A
//! record counts as clustered when its cluster has at least two members.

use std::fmt;

use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::recagglo::RETRY_RHO_MC;
use crate::schema::Label;

/// Exact fraction `num / den`; undefined when `den == 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        Ratio { num, den }
    }

    pub fn value(self) -> Option<f64> {
        (self.den > 0).then(|| self.num as f64 / self.den as f64)
    }

    pub fn is_defined(self) -> bool {
        self.den > 0
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.value() {
            Some(v) => write!(f, "{v:.6}"),
            None => f.write_str("undefined"),
        }
    }
}

/// Majority label of a cluster with `fraud` and `legit` labelled members;
/// ties go to fraud.
pub fn majority_label(fraud: u64, legit: u64) -> Label {
    if fraud >= legit {
        Label::Fraud
    } else {
        Label::Legitimate
    }
}

/// Share of labelled records outside their cluster's majority class:
/// `sum_i (s_i - m_i) / sum_i s_i`, counting only fraud/legitimate labels.
pub fn impurity(cl: &Clustering, labels: &[Label]) -> Result<Ratio> {
    if cl.is_empty() {
        return Err(Error::InvalidParameter(
            "impurity of an empty clustering".into(),
        ));
    }
    let mut num = 0;
    let mut den = 0;
    for c in cl {
        let (mut f, mut l) = (0u64, 0u64);
        for &m in &c.members {
            match labels[m] {
                Label::Fraud => f += 1,
                Label::Legitimate => l += 1,
                Label::Unlabeled => {}
            }
        }
        let majority = if majority_label(f, l) == Label::Fraud {
            f
        } else {
            l
        };
        num += f + l - majority;
        den += f + l;
    }
    Ok(Ratio::new(num, den))
}

/// Share of records with label `class` (and `mask` set, if given) that sit
/// in clusters of size at least two.
pub fn clustered_ratio(
    cl: &Clustering,
    labels: &[Label],
    class: Label,
    mask: Option<&[bool]>,
) -> Ratio {
    let mut r = Ratio::default();
    for c in cl {
        let clustered = c.len() >= 2;
        for &m in &c.members {
            if labels[m] == class && mask.is_none_or(|mk| mk[m]) {
                r.den += 1;
                if clustered {
                    r.num += 1;
                }
            }
        }
    }
    r
}

/// Clustered fraud rate over every record.
pub fn cfr(cl: &Clustering, labels: &[Label]) -> Ratio {
    clustered_ratio(cl, labels, Label::Fraud, None)
}

/// Clustered fraud rate restricted to the records flagged in `window`.
pub fn cfr_u(cl: &Clustering, labels: &[Label], window: &[bool]) -> Ratio {
    clustered_ratio(cl, labels, Label::Fraud, Some(window))
}

/// Clustered legitimate rate, optionally restricted to `mask`.
pub fn clr(cl: &Clustering, labels: &[Label], mask: Option<&[bool]>) -> Ratio {
    clustered_ratio(cl, labels, Label::Legitimate, mask)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
    /// Frauds that were clustered.
    pub clustered_frauds: u64,
    /// True positives among clustered frauds.
    pub clustered_tp: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DetectionMetrics {
    pub confusion: Confusion,
    /// True positives over clustered frauds.
    pub recall_clust: Ratio,
    /// True positives over all frauds.
    pub recall_final: Ratio,
    pub precision: Ratio,
    pub fpr: Ratio,
}

/// Confusion-matrix ratios over the unlabelled window. `truth` holds the
/// evaluation labels, `clustered` whether each record sits in a cluster of
/// two or more. Records with unknown truth are skipped.
pub fn detection_metrics(
    predicted: &[bool],
    truth: &[Label],
    clustered: &[bool],
) -> Result<DetectionMetrics> {
    if predicted.len() != truth.len() || clustered.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            found: predicted.len().min(clustered.len()),
        });
    }
    let mut c = Confusion::default();
    for ((&p, &t), &cl) in predicted.iter().zip(truth).zip(clustered) {
        match (t, p) {
            (Label::Fraud, true) => {
                c.tp += 1;
                if cl {
                    c.clustered_tp += 1;
                }
            }
            (Label::Fraud, false) => c.fn_ += 1,
            (Label::Legitimate, true) => c.fp += 1,
            (Label::Legitimate, false) => c.tn += 1,
            (Label::Unlabeled, _) => {}
        }
        if t == Label::Fraud && cl {
            c.clustered_frauds += 1;
        }
    }
    Ok(DetectionMetrics {
        confusion: c,
        recall_clust: Ratio::new(c.clustered_tp, c.clustered_frauds),
        recall_final: Ratio::new(c.tp, c.tp + c.fn_),
        precision: Ratio::new(c.tp, c.tp + c.fp),
        fpr: Ratio::new(c.fp, c.fp + c.tn),
    })
}

/// Everything reported for one clustering run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub impurity: Ratio,
    pub cfr: Ratio,
    pub cfr_u: Option<Ratio>,
    pub clr: Ratio,
    pub detection: Option<DetectionMetrics>,
    pub wall_time_s: f64,
    pub cluster_count: usize,
    pub singleton_count: usize,
    pub record_count: usize,
}

impl MetricsReport {
    /// Flat `(key, value)` pairs in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |r: Option<Ratio>| r.map_or_else(|| "undefined".to_owned(), |r| r.to_string());
        let mut out = vec![
            ("records", self.record_count.to_string()),
            ("clusters", self.cluster_count.to_string()),
            ("singletons", self.singleton_count.to_string()),
            ("impurity", self.impurity.to_string()),
            ("cfr", self.cfr.to_string()),
            ("cfr_u", opt(self.cfr_u)),
            ("clr", self.clr.to_string()),
        ];
        let det = self.detection;
        out.extend([
            ("recall_clust", opt(det.map(|d| d.recall_clust))),
            ("recall_final", opt(det.map(|d| d.recall_final))),
            ("precision", opt(det.map(|d| d.precision))),
            ("fpr", opt(det.map(|d| d.fpr))),
            ("wall_time_s", format!("{:.3}", self.wall_time_s)),
        ]);
        out
    }

    /// `key=value` lines.
    pub fn to_key_value(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn csv_header() -> String {
        MetricsReport::default()
            .entries()
            .into_iter()
            .map(|(k, _)| k)
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn csv_row(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(_, v)| v)
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Averaged outcome of one hyperparameter combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSearchRow {
    pub rho_mc: f64,
    pub rho_s: f64,
    pub impurity: f64,
    pub cfr: f64,
    pub time_s: f64,
    pub score: f64,
}

fn min_max(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    values.fold(None, |acc, v| match acc {
        None => Some((v, v)),
        Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
    })
}

fn normalized(x: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        (x - lo) / (hi - lo)
    } else {
        0.0
    }
}

/// Fills `score = I_hat + CFR_hat + t_hat` for every row, each term
/// min-max normalized (CFR reversed, so lower scores are better). The
/// ranges come from rows with `rho_mc != 1.01` only; those retry rows are
/// scored against the same ranges, so their terms may leave `[0, 1]`, and
/// their total is floored at 0. When every row is a retry row all rows
/// form the range. A metric that is constant over the range contributes 0.
pub fn performance_score(rows: &mut [GridSearchRow]) -> Result<()> {
    if rows.len() < 2 {
        return Err(Error::InvalidParameter(
            "performance score needs at least two rows".into(),
        ));
    }
    let is_retry = |r: &GridSearchRow| r.rho_mc == RETRY_RHO_MC;
    let all_retry = rows.iter().all(is_retry);
    let in_range: Vec<GridSearchRow> = rows
        .iter()
        .filter(|r| all_retry || !is_retry(r))
        .copied()
        .collect();
    let i_range = min_max(in_range.iter().map(|r| r.impurity)).expect("nonempty");
    let cfr_range = min_max(in_range.iter().map(|r| r.cfr)).expect("nonempty");
    let t_range = min_max(in_range.iter().map(|r| r.time_s)).expect("nonempty");
    for r in rows.iter_mut() {
        let i_hat = normalized(r.impurity, i_range);
        let cfr_hat = if cfr_range.1 > cfr_range.0 {
            (cfr_range.1 - r.cfr) / (cfr_range.1 - cfr_range.0)
        } else {
            0.0
        };
        let t_hat = normalized(r.time_s, t_range);
        r.score = (i_hat + cfr_hat + t_hat).max(0.0);
    }
    Ok(())
}

/// Index of the lowest-scoring row; ties keep the earliest.
pub fn best_row(rows: &[GridSearchRow]) -> Option<usize> {
    rows.iter()
        .enumerate()
        .min_by(|a, b| a.1.score.total_cmp(&b.1.score))
        .map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::Provenance;
    use Label::{Fraud as F, Legitimate as L, Unlabeled as U};

    fn groups(g: Vec<Vec<usize>>) -> Clustering {
        Clustering::from_groups(g, Provenance::Agglo)
    }

    #[test]
    fn impurity_examples() {
        let labels = [F, F, L, L, L];
        assert_eq!(
            impurity(&groups(vec![vec![0, 1], vec![2, 3, 4]]), &labels)
                .unwrap()
                .num,
            0
        );
        assert_eq!(
            impurity(&groups(vec![vec![0, 1, 2], vec![3, 4]]), &labels).unwrap(),
            Ratio::new(1, 5)
        );
        let tie = impurity(&groups(vec![vec![0, 2]]), &[F, F, L]).unwrap();
        assert_eq!(tie.value(), Some(0.5));
        assert!(impurity(&Clustering::default(), &labels).is_err());
        // unlabelled members are ignored
        let r = impurity(&groups(vec![vec![0, 1, 2]]), &[F, U, L]).unwrap();
        assert_eq!(r, Ratio::new(1, 2));
        assert_eq!(majority_label(2, 2), F);
    }

    #[test]
    fn cfr_examples() {
        let labels = [F, F, F, F, F, L];
        let all_single = Clustering::singletons(0..6, Provenance::Agglo);
        assert_eq!(cfr(&all_single, &labels).value(), Some(0.0));
        assert_eq!(
            cfr(&groups(vec![(0..6).collect()]), &labels).value(),
            Some(1.0)
        );
        let three_of_five = groups(vec![vec![0, 1], vec![2, 5], vec![3], vec![4]]);
        assert_eq!(cfr(&three_of_five, &labels), Ratio::new(3, 5));
        assert_eq!(clr(&three_of_five, &labels, None), Ratio::new(1, 1));
        let window = [true, true, false, true, false, false];
        assert_eq!(cfr_u(&three_of_five, &labels, &window), Ratio::new(2, 3));
        assert!(!cfr(&all_single, &[L; 6]).is_defined());
        assert_eq!(Ratio::new(0, 0).to_string(), "undefined");
    }

    #[test]
    fn detection_examples() {
        let truth = [F, F, L, L];
        let clustered = [true, true, true, false];
        let perfect = detection_metrics(&[true, true, false, false], &truth, &clustered).unwrap();
        assert_eq!(perfect.recall_final.value(), Some(1.0));
        assert_eq!(perfect.precision.value(), Some(1.0));
        assert_eq!(perfect.fpr.value(), Some(0.0));

        let none = detection_metrics(&[false; 4], &truth, &clustered).unwrap();
        assert_eq!(none.recall_final.value(), Some(0.0));
        assert_eq!(none.fpr.value(), Some(0.0));
        assert_eq!(none.precision.value(), None);

        assert!(detection_metrics(&[true], &truth, &clustered).is_err());
    }

    #[test]
    fn detection_hand_confusion_matrix() {
        // TP = 5, FP = 10, FN = 15, TN = 970; 8 frauds clustered
        let mut predicted = Vec::new();
        let mut truth = Vec::new();
        let mut clustered = Vec::new();
        let mut push = |n: usize, p: bool, t: Label, c: bool| {
            for _ in 0..n {
                predicted.push(p);
                truth.push(t);
                clustered.push(c);
            }
        };
        push(5, true, F, true);
        push(3, false, F, true);
        push(12, false, F, false);
        push(10, true, L, true);
        push(970, false, L, false);
        let m = detection_metrics(&predicted, &truth, &clustered).unwrap();
        assert_eq!(m.recall_final.value(), Some(0.25));
        assert_eq!(m.precision, Ratio::new(5, 15));
        assert_eq!(m.fpr, Ratio::new(10, 980));
        assert!((m.fpr.value().unwrap() - 0.0102).abs() < 1e-4);
        assert_eq!(m.recall_clust, Ratio::new(5, 8));
    }

    fn row(rho_mc: f64, i: f64, c: f64, t: f64) -> GridSearchRow {
        GridSearchRow {
            rho_mc,
            rho_s: 0.5,
            impurity: i,
            cfr: c,
            time_s: t,
            score: f64::NAN,
        }
    }

    #[test]
    fn score_endpoints() {
        let mut rows = vec![
            row(2.0, 0.01, 0.5, 10.0),
            row(3.0, 0.05, 0.2, 30.0),
            row(4.0, 0.03, 0.3, 20.0),
        ];
        performance_score(&mut rows).unwrap();
        assert_eq!(rows[0].score, 0.0);
        assert_eq!(rows[1].score, 3.0);
        assert_eq!(best_row(&rows), Some(0));
    }

    #[test]
    fn score_constant_metrics_and_errors() {
        let mut rows = vec![row(2.0, 0.1, 0.3, 5.0); 3];
        performance_score(&mut rows).unwrap();
        assert!(rows.iter().all(|r| r.score == 0.0));
        assert!(performance_score(&mut rows[..1]).is_err());
    }

    #[test]
    fn retry_rows_leave_the_ranges() {
        let mut rows = vec![
            row(1.01, 0.04, 0.3, 100.0),
            row(2.0, 0.02, 0.3, 10.0),
            row(6.0, 0.03, 0.3, 20.0),
        ];
        performance_score(&mut rows).unwrap();
        assert_eq!(rows[1].score, 0.0);
        assert_eq!(rows[2].score, 2.0);
        assert_eq!(rows[0].score, 2.0 + 9.0);

        // better than every ranged row on all three: floored at zero
        rows[0] = row(1.01, 0.0, 0.9, 1.0);
        performance_score(&mut rows).unwrap();
        assert_eq!(rows[0].score, 0.0);
    }

    #[test]
    fn report_serializes_flat() {
        let r = MetricsReport {
            impurity: Ratio::new(1, 4),
            cfr: Ratio::new(1, 2),
            ..Default::default()
        };
        let text = r.to_key_value();
        assert!(text.contains("impurity=0.250000\n"));
        assert!(text.contains("cfr_u=undefined\n"));
        assert_eq!(
            MetricsReport::csv_header().split(',').count(),
            r.csv_row().split(',').count()
        );
    }
}
