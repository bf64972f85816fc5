//! Fixture builders and brute-force reference implementations shared by
//! the integration tests. The references never call the library's
//! algorithms; `checks` pits the two against each other.
#![allow(dead_code)]

pub mod checks;

use std::collections::BTreeSet;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use recagglo::schema::Attribute;
use recagglo::{AttributeCategory, AttributeSchema, Clustering, Dataset, Label, Record};

pub fn schema(d: usize) -> AttributeSchema {
    AttributeSchema::new(
        (0..d)
            .map(|i| Attribute::new(format!("a{i}"), AttributeCategory::Payment))
            .collect(),
    )
    .unwrap()
}

fn random_label(rng: &mut ChaCha8Rng, unlabeled: bool) -> Label {
    match rng.gen_range(0..if unlabeled { 3 } else { 2 }) {
        0 => Label::Fraud,
        1 => Label::Legitimate,
        _ => Label::Unlabeled,
    }
}

/// `m` records over `d` attributes with values drawn from `card` symbols,
/// each value null with probability `null_prob`.
pub fn random_dataset(
    rng: &mut ChaCha8Rng,
    m: usize,
    d: usize,
    card: u32,
    null_prob: f64,
) -> Dataset {
    let records = (0..m)
        .map(|i| Record {
            record_id: format!("r{i}"),
            timestamp: i as i64,
            label: random_label(rng, false),
            values: (0..d)
                .map(|_| (!rng.gen_bool(null_prob)).then(|| format!("s{}", rng.gen_range(0..card))))
                .collect(),
        })
        .collect();
    Dataset::new(schema(d), records).unwrap()
}

/// Weighted Hamming distance straight from the string values: null is
/// never equal to anything, the sum is divided by the attribute count.
pub fn hamming(a: &Record, b: &Record, w: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (k, wk) in w.iter().enumerate() {
        let equal = matches!((&a.values[k], &b.values[k]), (Some(x), Some(y)) if x == y);
        if !equal {
            acc += wk;
        }
    }
    acc / w.len() as f64
}

pub fn pairwise(data: &Dataset, idx: &[usize], w: &[f64]) -> Vec<Vec<f64>> {
    idx.iter()
        .map(|&i| {
            idx.iter()
                .map(|&j| hamming(data.record(i), data.record(j), w))
                .collect()
        })
        .collect()
}

/// True when all off-diagonal distances differ by more than `eps`.
pub fn tie_free(dist: &[Vec<f64>], eps: f64) -> bool {
    let mut all: Vec<f64> = Vec::new();
    for (i, row) in dist.iter().enumerate() {
        all.extend(&row[i + 1..]);
    }
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.windows(2).all(|p| p[1] - p[0] > eps)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Link {
    Single,
    Complete,
}

/// Textbook agglomeration: repeatedly scan every pair of active clusters,
/// recompute their linkage from the raw distances and fuse the closest.
/// Returns the fusion heights in order and the groups left after the last
/// fusion not above `cut`.
pub fn naive_agglomerate(dist: &[Vec<f64>], link: Link, cut: f64) -> (Vec<f64>, Vec<Vec<usize>>) {
    let m = dist.len();
    let mut clusters: Vec<Vec<usize>> = (0..m).map(|i| vec![i]).collect();
    let mut heights = Vec::new();
    let mut at_cut = None;
    while clusters.len() > 1 {
        let mut best = (f64::INFINITY, 0, 0);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut v = match link {
                    Link::Single => f64::INFINITY,
                    Link::Complete => f64::NEG_INFINITY,
                };
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        v = match link {
                            Link::Single => v.min(dist[i][j]),
                            Link::Complete => v.max(dist[i][j]),
                        };
                    }
                }
                if v < best.0 {
                    best = (v, a, b);
                }
            }
        }
        let (h, a, b) = best;
        if h > cut && at_cut.is_none() {
            at_cut = Some(clusters.clone());
        }
        let moved = clusters.remove(b);
        clusters[a].extend(moved);
        heights.push(h);
    }
    let groups = at_cut.unwrap_or(clusters);
    (heights, canonical_groups(groups))
}

pub fn canonical_groups(mut groups: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for g in &mut groups {
        g.sort_unstable();
    }
    groups.sort();
    groups
}

pub fn groups_of(cl: &Clustering) -> Vec<Vec<usize>> {
    canonical_groups(cl.groups())
}

/// Random partition of `0..n` into clusters of sizes 1 to `max_size`.
pub fn random_partition(rng: &mut ChaCha8Rng, n: usize, max_size: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut out = Vec::new();
    let mut rest = &order[..];
    while !rest.is_empty() {
        let k = rng.gen_range(1..=max_size.min(rest.len()));
        out.push(rest[..k].to_vec());
        rest = &rest[k..];
    }
    out
}

pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, unlabeled: bool) -> Vec<Label> {
    (0..n).map(|_| random_label(rng, unlabeled)).collect()
}

/// Cluster index and cluster size of every record.
pub fn membership(groups: &[Vec<usize>], n: usize) -> Vec<(usize, usize)> {
    let mut out = vec![(usize::MAX, 0); n];
    for (k, g) in groups.iter().enumerate() {
        for &i in g {
            out[i] = (k, g.len());
        }
    }
    out
}

/// `(mismatched, labelled)` counts for impurity, built per cluster from a
/// sorted multiset of labels.
pub fn brute_impurity(groups: &[Vec<usize>], labels: &[Label]) -> (u64, u64) {
    let (mut num, mut den) = (0u64, 0u64);
    for g in groups {
        let tags: Vec<u8> = g
            .iter()
            .filter_map(|&i| match labels[i] {
                Label::Fraud => Some(1),
                Label::Legitimate => Some(0),
                Label::Unlabeled => None,
            })
            .collect();
        let ones = tags.iter().filter(|&&t| t == 1).count() as u64;
        let zeros = tags.len() as u64 - ones;
        num += ones.min(zeros);
        den += tags.len() as u64;
    }
    (num, den)
}

/// `(clustered, total)` records of `class` among those with `mask` set.
pub fn brute_clustered(
    groups: &[Vec<usize>],
    labels: &[Label],
    class: Label,
    mask: Option<&[bool]>,
) -> (u64, u64) {
    let member = membership(groups, labels.len());
    let (mut num, mut den) = (0, 0);
    for i in 0..labels.len() {
        if labels[i] != class || mask.is_some_and(|m| !m[i]) || member[i].0 == usize::MAX {
            continue;
        }
        den += 1;
        if member[i].1 > 1 {
            num += 1;
        }
    }
    (num, den)
}

/// Two-pass label propagation: first collect every cluster holding a
/// fraud label, then flag the unlabelled members of those clusters that
/// have company. Yields `(index, flagged, cluster, frauds in cluster)`.
pub fn brute_propagation(
    groups: &[Vec<usize>],
    labels: &[Label],
) -> Vec<(usize, bool, usize, usize)> {
    let n = labels.len();
    let member = membership(groups, n);
    let mut frauds = vec![0usize; groups.len()];
    for i in 0..n {
        if labels[i] == Label::Fraud && member[i].0 != usize::MAX {
            frauds[member[i].0] += 1;
        }
    }
    let hot: BTreeSet<usize> = (0..groups.len())
        .filter(|&k| frauds[k] > 0 && groups[k].len() > 1)
        .collect();
    (0..n)
        .filter(|&i| labels[i] == Label::Unlabeled && member[i].0 != usize::MAX)
        .map(|i| {
            (
                i,
                hot.contains(&member[i].0),
                member[i].0,
                frauds[member[i].0],
            )
        })
        .collect()
}
