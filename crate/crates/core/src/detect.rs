//! Label propagation over a clustering: an unlabelled record is flagged
//! when it shares a cluster of two or more records with a known fraud.
//! Legitimate labels in the cluster do not prevent flagging.

use std::io::Write;
use std::path::Path;

use crate::clustering::Clustering;
use crate::error::{Error, Result};
use crate::schema::{Dataset, Label};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub record_id: String,
    /// Row of the record in the dataset.
    pub index: usize,
    pub flagged: bool,
    /// Ordinal of the record's cluster in the clustering.
    pub cluster_id: usize,
    /// Fraud-labelled records in that cluster.
    pub known_fraud_count: usize,
}

/// One verdict per unlabelled record covered by `cl`, in dataset order.
/// Labelled records receive no verdict.
pub fn label_propagation(cl: &Clustering, data: &Dataset) -> Vec<Verdict> {
    let mut verdicts = Vec::new();
    for (k, c) in cl.iter().enumerate() {
        let frauds = c
            .members
            .iter()
            .filter(|&&m| data.record(m).label == Label::Fraud)
            .count();
        let flag = c.len() >= 2 && frauds > 0;
        for &m in &c.members {
            let r = data.record(m);
            if r.label == Label::Unlabeled {
                verdicts.push(Verdict {
                    record_id: r.record_id.clone(),
                    index: m,
                    flagged: flag,
                    cluster_id: k,
                    known_fraud_count: frauds,
                });
            }
        }
    }
    verdicts.sort_by_key(|v| v.index);
    verdicts
}

pub fn write_verdicts<W: Write>(verdicts: &[Verdict], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["record_id", "flagged", "cluster_id", "known_fraud_count"])
        .map_err(csv_error)?;
    for v in verdicts {
        w.write_record([
            v.record_id.as_str(),
            if v.flagged { "true" } else { "false" },
            &v.cluster_id.to_string(),
            &v.known_fraud_count.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_verdicts(verdicts: &[Verdict], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
    write_verdicts(verdicts, std::io::BufWriter::new(f))
}

/// Summary line of the screening queue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterReportRow {
    pub cluster_id: usize,
    pub size: usize,
    pub known_fraud_count: usize,
    pub known_legit_count: usize,
    pub flagged_count: usize,
}

/// Non-singleton clusters holding at least one flagged record, ordered by
/// known fraud count then size, both descending; ties by cluster id.
pub fn cluster_report(
    cl: &Clustering,
    data: &Dataset,
    verdicts: &[Verdict],
) -> Vec<ClusterReportRow> {
    let mut flagged = vec![0usize; cl.len()];
    for v in verdicts.iter().filter(|v| v.flagged) {
        flagged[v.cluster_id] += 1;
    }
    let mut rows: Vec<ClusterReportRow> = cl
        .iter()
        .enumerate()
        .filter(|&(k, _)| flagged[k] > 0)
        .map(|(k, c)| {
            let count = |l: Label| {
                c.members
                    .iter()
                    .filter(|&&m| data.record(m).label == l)
                    .count()
            };
            ClusterReportRow {
                cluster_id: k,
                size: c.len(),
                known_fraud_count: count(Label::Fraud),
                known_legit_count: count(Label::Legitimate),
                flagged_count: flagged[k],
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.known_fraud_count
            .cmp(&a.known_fraud_count)
            .then(b.size.cmp(&a.size))
            .then(a.cluster_id.cmp(&b.cluster_id))
    });
    rows
}

pub fn write_cluster_report<W: Write>(rows: &[ClusterReportRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "cluster_id",
        "size",
        "known_fraud_count",
        "known_legit_count",
        "flagged_count",
    ])
    .map_err(csv_error)?;
    for r in rows {
        w.write_record(
            [
                r.cluster_id,
                r.size,
                r.known_fraud_count,
                r.known_legit_count,
                r.flagged_count,
            ]
            .map(|v| v.to_string()),
        )
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
