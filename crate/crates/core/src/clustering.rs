use std::collections::HashSet;

use crate::error::{Error, Result};

/// Which algorithm produced a cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// Cut of a plain agglomerative dendrogram at `d_max`.
    Agglo,
    /// Maxclust split by landmark sampling; carries no goodness guarantee.
    Sample,
    /// Element left over by the recursive driver.
    Singleton,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Agglo => "agglo",
            Provenance::Sample => "sample",
            Provenance::Singleton => "recagglo-singleton",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    /// Record indices into the clustered dataset.
    pub members: Vec<usize>,
    pub provenance: Provenance,
}

impl Cluster {
    pub fn new(members: Vec<usize>, provenance: Provenance) -> Self {
        Cluster {
            members,
            provenance,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_singleton(&self) -> bool {
        self.members.len() == 1
    }
}

/// A partition of record indices into clusters, singletons included.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Clustering {
    clusters: Vec<Cluster>,
}

impl Clustering {
    pub fn new(clusters: Vec<Cluster>) -> Self {
        Clustering { clusters }
    }

    /// One cluster holding every given index.
    pub fn whole(members: Vec<usize>, provenance: Provenance) -> Self {
        Clustering::new(vec![Cluster::new(members, provenance)])
    }

    pub fn singletons(indices: impl IntoIterator<Item = usize>, provenance: Provenance) -> Self {
        Clustering::new(
            indices
                .into_iter()
                .map(|i| Cluster::new(vec![i], provenance))
                .collect(),
        )
    }

    /// Builds a clustering from plain member lists.
    pub fn from_groups(groups: Vec<Vec<usize>>, provenance: Provenance) -> Self {
        Clustering::new(
            groups
                .into_iter()
                .map(|g| Cluster::new(g, provenance))
                .collect(),
        )
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn into_clusters(self) -> Vec<Cluster> {
        self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Cluster> {
        self.clusters.iter()
    }

    pub fn element_count(&self) -> usize {
        self.clusters.iter().map(Cluster::len).sum()
    }

    pub fn singleton_count(&self) -> usize {
        self.clusters.iter().filter(|c| c.is_singleton()).count()
    }

    pub fn non_singletons(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.iter().filter(|c| c.len() >= 2)
    }

    pub fn groups(&self) -> Vec<Vec<usize>> {
        self.clusters.iter().map(|c| c.members.clone()).collect()
    }

    /// Sorts members within clusters and clusters by smallest member.
    pub fn canonicalize(&mut self) {
        for c in &mut self.clusters {
            c.members.sort_unstable();
        }
        self.clusters
            .sort_by_key(|c| c.members.first().copied().unwrap_or(usize::MAX));
    }

    pub fn canonical(mut self) -> Self {
        self.canonicalize();
        self
    }

    /// Applies `f` to every member index.
    pub fn map_members(self, f: impl Fn(usize) -> usize) -> Self {
        Clustering::new(
            self.clusters
                .into_iter()
                .map(|c| Cluster::new(c.members.into_iter().map(&f).collect(), c.provenance))
                .collect(),
        )
    }

    /// Cluster ordinal of every record `0..n`; `None` for records not
    /// covered by the clustering.
    pub fn assignments(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for (k, c) in self.clusters.iter().enumerate() {
            for &m in &c.members {
                if m < n {
                    out[m] = Some(k);
                }
            }
        }
        out
    }

    /// Checks that clusters are nonempty and cover `universe` exactly once.
    pub fn validate_partition(&self, universe: &[usize]) -> Result<()> {
        let expected: HashSet<usize> = universe.iter().copied().collect();
        let mut seen = HashSet::with_capacity(expected.len());
        for c in &self.clusters {
            if c.is_empty() {
                return Err(Error::InvalidParameter(
                    "clustering has an empty cluster".into(),
                ));
            }
            for &m in &c.members {
                if !expected.contains(&m) {
                    return Err(Error::InvalidParameter(format!(
                        "index {m} is outside the clustered set"
                    )));
                }
                if !seen.insert(m) {
                    return Err(Error::InvalidParameter(format!(
                        "index {m} appears in more than one cluster"
                    )));
                }
            }
        }
        if seen.len() != expected.len() {
            return Err(Error::InvalidParameter(format!(
                "clustering covers {} of {} indices",
                seen.len(),
                expected.len()
            )));
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a Clustering {
    type Item = &'a Cluster;
    type IntoIter = std::slice::Iter<'a, Cluster>;

    fn into_iter(self) -> Self::IntoIter {
        self.clusters.iter()
    }
}
