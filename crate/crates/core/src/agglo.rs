//! Plain agglomerative clustering: linkage construction from a full
//! distance matrix and flat dendrogram cuts.
//!
//! Linkage matrices follow the usual convention: original elements are
//! nodes `0..m`, merge `i` creates node `m + i`, and every merge lists the
//! smaller node id first.

use std::cmp::Ordering;

use crate::clustering::{Clustering, Provenance};
use crate::distance::{distance_matrix, DistanceMatrix, HammingMetric};
use crate::error::{Error, Result};
use crate::schema::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Linkage {
    /// Minimum distance between members.
    #[default]
    Single,
    /// Maximum distance between members.
    Complete,
}

impl Linkage {
    pub fn as_str(self) -> &'static str {
        match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
        }
    }
}

impl std::str::FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Linkage::Single),
            "complete" => Ok(Linkage::Complete),
            other => Err(Error::InvalidParameter(format!(
                "unknown linkage `{other}`"
            ))),
        }
    }
}

/// One fusion step of a dendrogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    /// Number of original elements under the new node.
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkageMatrix {
    observations: usize,
    merges: Vec<Merge>,
}

impl LinkageMatrix {
    pub fn new(observations: usize, merges: Vec<Merge>) -> Result<Self> {
        if merges.len() != observations.saturating_sub(1) {
            return Err(Error::InvalidParameter(format!(
                "{observations} observations need {} merges, got {}",
                observations.saturating_sub(1),
                merges.len()
            )));
        }
        for (i, m) in merges.iter().enumerate() {
            if m.left >= observations + i || m.right >= observations + i || m.left == m.right {
                return Err(Error::InvalidParameter(format!(
                    "merge {i} references an unknown node"
                )));
            }
        }
        Ok(LinkageMatrix {
            observations,
            merges,
        })
    }

    pub fn observations(&self) -> usize {
        self.observations
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Flat clustering after applying the first `count` merges. Members are
    /// local element indices `0..m`.
    fn flatten(&self, count: usize) -> Clustering {
        let m = self.observations;
        let mut uf = UnionFind::new(m);
        let mut rep: Vec<usize> = (0..m).collect();
        rep.reserve(self.merges.len());
        for merge in &self.merges[..count] {
            let r = uf.union(rep[merge.left], rep[merge.right]);
            rep.push(r);
        }
        Clustering::from_groups(uf.groups(), Provenance::Agglo)
    }
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Joins the sets of `a` and `b` and returns the new root.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> usize {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        ra
    }

    pub(crate) fn set_size(&mut self, x: usize) -> usize {
        let r = self.find(x);
        self.size[r]
    }

    /// Member lists ordered by smallest member, members ascending.
    pub(crate) fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut slot = vec![usize::MAX; n];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for x in 0..n {
            let r = self.find(x);
            if slot[r] == usize::MAX {
                slot[r] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[r]].push(x);
        }
        groups
    }
}

/// Spanning-tree edge `(u, v, weight)`.
pub type Edge = (usize, usize, f64);

/// Minimum spanning tree of the complete graph on `0..m` by Prim's
/// algorithm in `O(m^2)` evaluations of `dist`. Ties pick the smallest
/// vertex index. Edges are returned in insertion order.
pub fn mst_prim(m: usize, dist: impl Fn(usize, usize) -> f64) -> Vec<Edge> {
    let mut edges = Vec::with_capacity(m.saturating_sub(1));
    if m < 2 {
        return edges;
    }
    let mut key = vec![f64::INFINITY; m];
    let mut parent = vec![0usize; m];
    // remaining vertices, kept ascending so ties resolve to the smallest id
    let mut remaining: Vec<usize> = (1..m).collect();
    let mut current = 0;
    while !remaining.is_empty() {
        let mut best = usize::MAX;
        let mut best_key = f64::INFINITY;
        for (pos, &v) in remaining.iter().enumerate() {
            let d = dist(current, v);
            if d < key[v] {
                key[v] = d;
                parent[v] = current;
            }
            if best == usize::MAX || key[v] < best_key {
                best = pos;
                best_key = key[v];
            }
        }
        let next = remaining.remove(best);
        edges.push((parent[next], next, key[next]));
        current = next;
    }
    edges
}

fn edge_order(a: &Edge, b: &Edge) -> Ordering {
    a.2.total_cmp(&b.2)
        .then_with(|| a.0.min(a.1).cmp(&b.0.min(b.1)))
        .then_with(|| a.0.max(a.1).cmp(&b.0.max(b.1)))
}

/// Single-linkage dendrogram from the edges of a minimum spanning tree
/// (or forest) over `0..m`. Edges are fused in ascending weight; equal
/// weights resolve by the smaller endpoint pair.
pub fn linkage_from_tree(m: usize, mut edges: Vec<Edge>) -> Result<LinkageMatrix> {
    if edges.len() != m.saturating_sub(1) {
        return Err(Error::InvalidParameter(format!(
            "a spanning tree over {m} elements has {} edges, got {}",
            m.saturating_sub(1),
            edges.len()
        )));
    }
    edges.sort_by(edge_order);
    let mut uf = UnionFind::new(m);
    let mut node_of: Vec<usize> = (0..m).collect();
    let mut merges = Vec::with_capacity(edges.len());
    for (t, &(u, v, w)) in edges.iter().enumerate() {
        let (ru, rv) = (uf.find(u), uf.find(v));
        if ru == rv {
            return Err(Error::InvalidParameter("edges contain a cycle".into()));
        }
        let (a, b) = (node_of[ru], node_of[rv]);
        let root = uf.union(ru, rv);
        node_of[root] = m + t;
        merges.push(Merge {
            left: a.min(b),
            right: a.max(b),
            distance: w,
            size: uf.set_size(root),
        });
    }
    LinkageMatrix::new(m, merges)
}

/// Hierarchical clustering of a square, symmetric, zero-diagonal matrix.
pub fn linkage(d: &DistanceMatrix, method: Linkage) -> Result<LinkageMatrix> {
    if !d.is_square() {
        return Err(Error::NotSquare {
            rows: d.rows(),
            cols: d.cols(),
        });
    }
    let m = d.rows();
    match method {
        Linkage::Single => linkage_from_tree(m, mst_prim(m, |i, j| d.get(i, j))),
        Linkage::Complete => Ok(complete_linkage(d)),
    }
}

/// Complete linkage with a cached nearest neighbour per active cluster.
/// Merged distances never decrease, so only rows whose neighbour took part
/// in a merge need a rescan.
fn complete_linkage(d: &DistanceMatrix) -> LinkageMatrix {
    let m = d.rows();
    let mut dist = d.values().to_vec();
    let mut active = vec![true; m];
    let mut node: Vec<usize> = (0..m).collect();
    let mut size = vec![1usize; m];
    let mut nn = vec![usize::MAX; m];
    let mut nn_dist = vec![f64::INFINITY; m];

    let rescan = |i: usize,
                  dist: &[f64],
                  active: &[bool],
                  node: &[usize],
                  nn: &mut [usize],
                  nn_dist: &mut [f64]| {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for j in 0..m {
            if j == i || !active[j] {
                continue;
            }
            let dj = dist[i * m + j];
            if best == usize::MAX || dj < best_d || (dj == best_d && node[j] < node[best]) {
                best = j;
                best_d = dj;
            }
        }
        nn[i] = best;
        nn_dist[i] = best_d;
    };

    for i in 0..m {
        rescan(i, &dist, &active, &node, &mut nn, &mut nn_dist);
    }

    let mut merges = Vec::with_capacity(m.saturating_sub(1));
    for t in 0..m.saturating_sub(1) {
        let pair_key = |i: usize| {
            let (x, y) = (node[i], node[nn[i]]);
            (nn_dist[i], x.min(y), x.max(y))
        };
        let mut a = usize::MAX;
        for i in (0..m).filter(|&i| active[i]) {
            if a == usize::MAX {
                a = i;
                continue;
            }
            let (ki, ka) = (pair_key(i), pair_key(a));
            let better = match ki.0.total_cmp(&ka.0) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => (ki.1, ki.2) < (ka.1, ka.2),
            };
            if better {
                a = i;
            }
        }
        let b = nn[a];
        let (x, y) = (node[a], node[b]);
        merges.push(Merge {
            left: x.min(y),
            right: x.max(y),
            distance: nn_dist[a],
            size: size[a] + size[b],
        });

        for k in 0..m {
            if active[k] && k != a && k != b {
                let v = dist[a * m + k].max(dist[b * m + k]);
                dist[a * m + k] = v;
                dist[k * m + a] = v;
            }
        }
        active[b] = false;
        node[a] = m + t;
        size[a] += size[b];
        for k in 0..m {
            if active[k] && (k == a || nn[k] == a || nn[k] == b) {
                rescan(k, &dist, &active, &node, &mut nn, &mut nn_dist);
            }
        }
    }
    LinkageMatrix {
        observations: m,
        merges,
    }
}

/// Flat clusters after removing every fusion above `d_max`. Members are
/// local element indices.
pub fn cut_distance(lm: &LinkageMatrix, d_max: f64) -> Clustering {
    let count = lm.merges.iter().take_while(|m| m.distance <= d_max).count();
    lm.flatten(count)
}

/// Flat clusters at the smallest cut height that leaves at most `c_max`
/// clusters. Members are local element indices.
pub fn cut_maxclust(lm: &LinkageMatrix, c_max: usize) -> Clustering {
    let m = lm.observations;
    let c_max = c_max.max(1);
    if c_max >= m {
        return lm.flatten(0);
    }
    let height = lm.merges[m - c_max - 1].distance;
    let count = lm
        .merges
        .iter()
        .take_while(|mg| mg.distance <= height)
        .count();
    lm.flatten(count)
}

/// Distance settings for plain agglomerative clustering.
#[derive(Debug, Clone)]
pub struct DistanceParams {
    pub metric: HammingMetric,
    pub linkage: Linkage,
    /// Maximum fusion distance.
    pub d_max: f64,
}

impl DistanceParams {
    pub fn new(metric: HammingMetric, d_max: f64) -> Self {
        DistanceParams {
            metric,
            linkage: Linkage::Single,
            d_max,
        }
    }
}

/// Distance matrix, linkage and `d_max` cut over the records `c`.
/// Returned members are record indices from `c`.
pub fn agglo_clust(c: &[usize], data: &Dataset, params: &DistanceParams) -> Result<Clustering> {
    agglo_with(c, data, &params.metric, params.linkage, params.d_max)
}

pub(crate) fn agglo_with(
    c: &[usize],
    data: &Dataset,
    metric: &HammingMetric,
    method: Linkage,
    d_max: f64,
) -> Result<Clustering> {
    match c.len() {
        0 => Err(Error::TooFewElements {
            needed: 1,
            found: 0,
        }),
        1 => {
            data.check_index(c[0])?;
            Ok(Clustering::singletons([c[0]], Provenance::Agglo))
        }
        _ => {
            let d = distance_matrix(c, c, data, metric)?;
            let lm = linkage(&d, method)?;
            Ok(cut_distance(&lm, d_max).map_members(|i| c[i]))
        }
    }
}
