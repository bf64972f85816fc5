//! Selection of the unlabelled window and its labelled fraud background.

use std::collections::HashSet;

use super::config::WindowSpec;
use crate::error::{Error, Result};
use crate::schema::{Dataset, Label};

pub const DAY_SECONDS: i64 = 86_400;

fn days(d: f64) -> i64 {
    (d * DAY_SECONDS as f64).round() as i64
}

/// Time bounds in epoch seconds, all half-open.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowBounds {
    pub window_start: i64,
    pub window_end: i64,
    pub background_start: i64,
    pub background_end: i64,
}

impl WindowBounds {
    pub fn new(spec: &WindowSpec) -> Self {
        let window_end = spec.start + days(spec.span_days);
        let background_end = window_end - days(spec.label_delay_days);
        WindowBounds {
            window_start: spec.start,
            window_end,
            background_start: background_end - days(spec.background_days),
            background_end,
        }
    }
}

/// Records to cluster: the labelled fraud background and the unlabelled
/// window, in input order.
#[derive(Debug, Clone)]
pub struct WindowedData {
    /// Window records carry [`Label::Unlabeled`].
    pub data: Dataset,
    /// Input labels of every selected record, for evaluation.
    pub truth: Vec<Label>,
    /// Whether each selected record belongs to the unlabelled window.
    pub in_window: Vec<bool>,
    pub bounds: WindowBounds,
}

impl WindowedData {
    pub fn window_count(&self) -> usize {
        self.in_window.iter().filter(|&&w| w).count()
    }

    pub fn background_count(&self) -> usize {
        self.in_window.len() - self.window_count()
    }
}

/// Picks records timestamped inside the window and fraud-labelled records
/// inside the background. A record id seen more than once keeps its first
/// labelled copy, or its first copy if none is labelled.
pub fn select_windows(all: &Dataset, spec: &WindowSpec) -> Result<WindowedData> {
    let b = WindowBounds::new(spec);
    let in_background = |i: usize| {
        let r = all.record(i);
        r.label == Label::Fraud && (b.background_start..b.background_end).contains(&r.timestamp)
    };
    let in_window = |i: usize| (b.window_start..b.window_end).contains(&all.record(i).timestamp);

    let mut taken: HashSet<&str> = HashSet::new();
    let mut keep = vec![None; all.n()];
    for i in (0..all.n()).filter(|&i| in_background(i)) {
        if taken.insert(&all.record(i).record_id) {
            keep[i] = Some(false);
        }
    }
    for i in (0..all.n()).filter(|&i| !in_background(i) && in_window(i)) {
        if taken.insert(&all.record(i).record_id) {
            keep[i] = Some(true);
        }
    }

    let mut indices = Vec::new();
    let mut flags = Vec::new();
    for (i, k) in keep.iter().enumerate() {
        if let Some(w) = *k {
            indices.push(i);
            flags.push(w);
        }
    }
    for (&i, &w) in indices.iter().zip(&flags) {
        if !w && all.record(i).timestamp >= b.window_start {
            return Err(Error::Config(format!(
                "labelled record `{}` does not precede the unlabelled window",
                all.record(i).record_id
            )));
        }
    }

    let subset = all.subset(&indices)?;
    let truth = subset.labels();
    let data = subset.relabel(|i, r| if flags[i] { Label::Unlabeled } else { r.label });
    Ok(WindowedData {
        data,
        truth,
        in_window: flags,
        bounds: b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{Attribute, AttributeCategory, AttributeSchema, Record};

    fn rec(id: &str, day: f64, label: Label) -> Record {
        Record {
            record_id: id.into(),
            timestamp: days(day),
            label,
            values: vec![Some("x".into())],
        }
    }

    fn data(records: Vec<Record>) -> Dataset {
        let schema =
            AttributeSchema::new(vec![Attribute::new("a", AttributeCategory::Billing)]).unwrap();
        Dataset::new(schema, records).unwrap()
    }

    fn spec(delay: f64) -> WindowSpec {
        WindowSpec {
            start: days(100.0),
            span_days: 1.0,
            background_days: 60.0,
            label_delay_days: delay,
        }
    }

    #[test]
    fn one_day_delay() {
        let ds = data(vec![
            rec("old", 30.0, Label::Fraud),
            rec("f1", 40.5, Label::Fraud),
            rec("l1", 50.0, Label::Legitimate),
            rec("f2", 99.9, Label::Fraud),
            rec("u1", 100.2, Label::Fraud),
            rec("u2", 100.9, Label::Legitimate),
            rec("late", 101.0, Label::Fraud),
        ]);
        let w = select_windows(&ds, &spec(1.0)).unwrap();
        let ids: Vec<&str> = w
            .data
            .records()
            .iter()
            .map(|r| r.record_id.as_str())
            .collect();
        assert_eq!(ids, ["f1", "f2", "u1", "u2"]);
        assert_eq!(w.in_window, [false, false, true, true]);
        assert_eq!(
            w.truth,
            [Label::Fraud, Label::Fraud, Label::Fraud, Label::Legitimate]
        );
        assert_eq!(w.data.record(2).label, Label::Unlabeled);
        assert_eq!(w.bounds.background_end, w.bounds.window_start);
    }

    #[test]
    fn thirty_day_delay_shifts_background() {
        let ds = data(vec![
            rec("f1", 50.0, Label::Fraud),
            rec("f2", 80.0, Label::Fraud),
            rec("u1", 100.5, Label::Legitimate),
        ]);
        let w = select_windows(&ds, &spec(30.0)).unwrap();
        let ids: Vec<&str> = w
            .data
            .records()
            .iter()
            .map(|r| r.record_id.as_str())
            .collect();
        assert_eq!(ids, ["f1", "u1"]);
        assert_eq!(w.bounds.background_end, days(71.0));
    }

    #[test]
    fn duplicates_keep_labelled_copy() {
        let ds = data(vec![
            rec("u1", 100.5, Label::Fraud),
            rec("u1", 99.0, Label::Fraud),
            rec("u2", 100.5, Label::Legitimate),
            rec("u2", 100.6, Label::Legitimate),
        ]);
        let w = select_windows(&ds, &spec(1.0)).unwrap();
        assert_eq!(w.data.n(), 2);
        assert_eq!(w.data.record(0).timestamp, days(99.0));
        assert_eq!(w.background_count(), 1);
        assert_eq!(w.window_count(), 1);
    }

    #[test]
    fn overlapping_background_is_rejected() {
        let ds = data(vec![
            rec("f", 100.2, Label::Fraud),
            rec("u", 100.6, Label::Legitimate),
        ]);
        assert!(select_windows(&ds, &spec(0.5)).is_err());
    }
}
