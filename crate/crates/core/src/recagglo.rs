//! Recursive agglomerative clustering.
//!
//! Large clusters are split with landmark sampling until they are small
//! enough for plain agglomerative clustering, which is what finally forms
//! every non-singleton output cluster. Each of those therefore has a
//! single-linkage diameter of at most `d_max` (the goodness criterion).

use rayon::prelude::*;

use crate::agglo::{agglo_with, mst_prim, Linkage};
use crate::clustering::{Cluster, Clustering, Provenance};
use crate::distance::HammingMetric;
use crate::error::{Error, Result};
use crate::sample::{sample_clust, SampleParams};
use crate::schema::Dataset;

/// `rho_mc` used when a sampling split fails to separate a cluster.
pub const RETRY_RHO_MC: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecAggloParams {
    /// Clusters larger than this are split by sampling.
    pub delta_a: usize,
    /// Maximum fusion distance for the agglomerative steps.
    pub d_max: f64,
    pub rho_s: f64,
    pub rho_mc: f64,
    pub seed: u64,
    pub max_recursion_guard: usize,
    pub linkage: Linkage,
}

impl Default for RecAggloParams {
    fn default() -> Self {
        RecAggloParams {
            delta_a: 1000,
            d_max: 0.5,
            rho_s: 0.5,
            rho_mc: 6.0,
            seed: 0,
            max_recursion_guard: 512,
            linkage: Linkage::Single,
        }
    }
}

impl RecAggloParams {
    pub fn validate(&self) -> Result<()> {
        if self.delta_a < 2 {
            return Err(Error::InvalidParameter(format!(
                "delta_a must be at least 2, got {}",
                self.delta_a
            )));
        }
        if !(self.d_max.is_finite() && self.d_max >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "d_max must be nonnegative, got {}",
                self.d_max
            )));
        }
        SampleParams::new(self.rho_s, self.rho_mc, self.seed).map(|_| ())
    }

    /// Size below which a cluster that sampling cannot split falls back to
    /// plain agglomerative clustering.
    pub fn max_agglo_size(&self) -> usize {
        4 * self.delta_a
    }
}

/// Counters describing one run of [`rec_agglo`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecursionStats {
    /// Deepest nested call reached; the initial call is depth 0.
    pub max_depth: usize,
    pub sample_calls: usize,
    pub agglo_calls: usize,
    /// Sampling splits retried with [`RETRY_RHO_MC`].
    pub retries: usize,
    /// Unsplittable clusters handed to plain agglomerative clustering.
    pub fallbacks: usize,
    /// Failed splits of the leftover set that ended as singletons.
    pub failed_remain_splits: usize,
}

impl RecursionStats {
    fn absorb(&mut self, other: RecursionStats) {
        self.max_depth = self.max_depth.max(other.max_depth);
        self.sample_calls += other.sample_calls;
        self.agglo_calls += other.agglo_calls;
        self.retries += other.retries;
        self.fallbacks += other.fallbacks;
        self.failed_remain_splits += other.failed_remain_splits;
    }
}

/// Deterministic child seed for the `ordinal`-th sub-task of a call.
pub fn derive_seed(parent: u64, ordinal: u64) -> u64 {
    splitmix64(parent ^ splitmix64(ordinal.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Clusters every member of `initial` and returns the final clustering in
/// canonical order.
pub fn rec_agglo(
    initial: &Clustering,
    data: &Dataset,
    metric: &HammingMetric,
    params: &RecAggloParams,
) -> Result<Clustering> {
    rec_agglo_traced(initial, data, metric, params).map(|(c, _)| c)
}

/// [`rec_agglo`] plus recursion counters.
pub fn rec_agglo_traced(
    initial: &Clustering,
    data: &Dataset,
    metric: &HammingMetric,
    params: &RecAggloParams,
) -> Result<(Clustering, RecursionStats)> {
    params.validate()?;
    if metric.d() != data.schema().d() {
        return Err(Error::LengthMismatch {
            expected: data.schema().d(),
            found: metric.d(),
        });
    }
    for c in initial {
        if c.is_empty() {
            return Err(Error::InvalidParameter(
                "initial clustering has an empty cluster".into(),
            ));
        }
        for &i in &c.members {
            data.check_index(i)?;
        }
    }
    let run = Run {
        data,
        metric,
        params,
    };
    let groups = initial.groups();
    let (clusters, stats) = run.recurse(&groups, params.rho_mc, params.seed, 0)?;
    Ok((Clustering::new(clusters).canonical(), stats))
}

/// Convenience wrapper: one initial cluster holding every record.
pub fn rec_agglo_all(
    data: &Dataset,
    metric: &HammingMetric,
    params: &RecAggloParams,
) -> Result<(Clustering, RecursionStats)> {
    if data.is_empty() {
        return Ok((Clustering::default(), RecursionStats::default()));
    }
    let initial = Clustering::whole((0..data.n()).collect(), Provenance::Sample);
    rec_agglo_traced(&initial, data, metric, params)
}

struct Run<'a> {
    data: &'a Dataset,
    metric: &'a HammingMetric,
    params: &'a RecAggloParams,
}

enum Outcome {
    Clusters(Vec<Cluster>, RecursionStats),
    Remain(Vec<usize>, RecursionStats),
}

impl Run<'_> {
    fn recurse(
        &self,
        clusters: &[Vec<usize>],
        rho_mc: f64,
        seed: u64,
        depth: usize,
    ) -> Result<(Vec<Cluster>, RecursionStats)> {
        if depth > self.params.max_recursion_guard {
            let worst = clusters
                .iter()
                .max_by_key(|c| c.len())
                .cloned()
                .unwrap_or_default();
            return Err(Error::RecursionLimit {
                depth,
                size: worst.len(),
                head: worst.into_iter().take(8).collect(),
            });
        }

        let outcomes = clusters
            .par_iter()
            .enumerate()
            .map(|(i, c)| self.split(c, rho_mc, seed, i as u64, depth))
            .collect::<Result<Vec<_>>>()?;

        let mut stats = RecursionStats {
            max_depth: depth,
            ..Default::default()
        };
        let mut result = Vec::new();
        let mut remain = Vec::new();
        for outcome in outcomes {
            match outcome {
                Outcome::Clusters(c, s) => {
                    result.extend(c);
                    stats.absorb(s);
                }
                Outcome::Remain(members, s) => {
                    remain.extend(members);
                    stats.absorb(s);
                }
            }
        }

        let end_seed = derive_seed(seed, u64::MAX);
        let delta_a = self.params.delta_a;
        if remain.len() > delta_a {
            let split = self.sample(&remain, rho_mc, derive_seed(end_seed, 0))?;
            stats.sample_calls += 1;
            if split.len() > 1 {
                let (c, s) =
                    self.recurse(&split.groups(), rho_mc, derive_seed(end_seed, 1), depth + 1)?;
                result.extend(c);
                stats.absorb(s);
            } else {
                stats.failed_remain_splits += 1;
                result
                    .extend(Clustering::singletons(remain, Provenance::Singleton).into_clusters());
            }
        } else if remain.len() > 1 {
            result.extend(self.agglo(&remain)?.into_clusters());
            stats.agglo_calls += 1;
        } else {
            result.extend(Clustering::singletons(remain, Provenance::Singleton).into_clusters());
        }
        Ok((result, stats))
    }

    fn split(
        &self,
        c: &[usize],
        rho_mc: f64,
        seed: u64,
        ordinal: u64,
        depth: usize,
    ) -> Result<Outcome> {
        let mut stats = RecursionStats::default();
        let delta_a = self.params.delta_a;
        if c.len() > delta_a {
            let split = self.sample(c, rho_mc, derive_seed(seed, 2 * ordinal))?;
            stats.sample_calls += 1;
            let child_seed = derive_seed(seed, 2 * ordinal + 1);
            if split.len() > 1 {
                let (out, s) = self.recurse(&split.groups(), rho_mc, child_seed, depth + 1)?;
                stats.absorb(s);
                Ok(Outcome::Clusters(out, stats))
            } else if rho_mc > RETRY_RHO_MC {
                stats.retries += 1;
                let (out, s) =
                    self.recurse(&split.groups(), RETRY_RHO_MC, child_seed, depth + 1)?;
                stats.absorb(s);
                Ok(Outcome::Clusters(out, stats))
            } else if c.len() < self.params.max_agglo_size() {
                stats.fallbacks += 1;
                stats.agglo_calls += 1;
                Ok(Outcome::Clusters(self.agglo(c)?.into_clusters(), stats))
            } else {
                Ok(Outcome::Remain(c.to_vec(), stats))
            }
        } else if c.len() > 1 {
            stats.agglo_calls += 1;
            Ok(Outcome::Clusters(self.agglo(c)?.into_clusters(), stats))
        } else {
            Ok(Outcome::Remain(c.to_vec(), stats))
        }
    }

    fn sample(&self, c: &[usize], rho_mc: f64, seed: u64) -> Result<Clustering> {
        let p = SampleParams {
            rho_s: self.params.rho_s,
            rho_mc,
            seed,
        };
        sample_clust(c, self.data, self.metric, &p)
    }

    fn agglo(&self, c: &[usize]) -> Result<Clustering> {
        agglo_with(
            c,
            self.data,
            self.metric,
            self.params.linkage,
            self.params.d_max,
        )
    }
}

/// A non-singleton cluster whose single-linkage diameter exceeds `d_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct GoodnessViolation {
    /// Position of the cluster in the checked clustering.
    pub cluster: usize,
    /// Final single-linkage merge distance over the cluster's members.
    pub max_merge_distance: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoodnessReport {
    pub checked: usize,
    pub violations: Vec<GoodnessViolation>,
}

impl GoodnessReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Largest single-linkage merge distance among `members`, i.e. the
/// heaviest edge of their minimum spanning tree.
pub fn single_linkage_diameter(members: &[usize], data: &Dataset, metric: &HammingMetric) -> f64 {
    mst_prim(members.len(), |i, j| {
        metric.between(data, members[i], members[j])
    })
    .iter()
    .map(|e| e.2)
    .fold(0.0, f64::max)
}

/// Re-runs single linkage on every non-singleton cluster and reports those
/// whose final merge distance exceeds `d_max`.
pub fn goodness_check(
    cl: &Clustering,
    data: &Dataset,
    metric: &HammingMetric,
    d_max: f64,
) -> GoodnessReport {
    let candidates: Vec<(usize, &Cluster)> = cl
        .iter()
        .enumerate()
        .filter(|(_, c)| c.len() >= 2)
        .collect();
    let violations = candidates
        .par_iter()
        .filter_map(|&(k, c)| {
            let diameter = single_linkage_diameter(&c.members, data, metric);
            (diameter > d_max).then_some(GoodnessViolation {
                cluster: k,
                max_merge_distance: diameter,
            })
        })
        .collect();
    GoodnessReport {
        checked: candidates.len(),
        violations,
    }
}
