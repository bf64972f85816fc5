//! Agglomerative clustering with landmark sampling.
//!
//! A set of `m` records is split into at most `c_max = floor(m / rho_mc)`
//! clusters using only its distances to `n = round(rho_s * sqrt(m))`
//! randomly drawn landmarks. Every record is embedded as the vector of its
//! weighted Hamming distances to the landmarks; the embedded points are
//! clustered by Euclidean single linkage and the dendrogram is cut with the
//! maxclust criterion. No goodness guarantee holds for the result.
//!
//! An exact Euclidean spanning tree costs `O(m^2 * n)`, which dominates
//! the whole recursion on large inputs. Above [`EXACT_MST_LIMIT`] distinct
//! points the tree is built from a random projection forest instead, in
//! roughly `O(m * n)`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rayon::prelude::*;

use crate::agglo::{cut_maxclust, linkage_from_tree, mst_prim, Edge, UnionFind};
use crate::clustering::{Clustering, Provenance};
use crate::distance::{distance_matrix, HammingMetric};
use crate::error::{Error, Result};
use crate::schema::Dataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleParams {
    /// Multiplier on `sqrt(m)` for the landmark count.
    pub rho_s: f64,
    /// Divisor of `m` for the maximum cluster count.
    pub rho_mc: f64,
    pub seed: u64,
}

impl SampleParams {
    pub fn new(rho_s: f64, rho_mc: f64, seed: u64) -> Result<Self> {
        let p = SampleParams {
            rho_s,
            rho_mc,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_s.is_finite() && self.rho_s > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "rho_s must be positive, got {}",
                self.rho_s
            )));
        }
        if !(self.rho_mc.is_finite() && self.rho_mc > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rho_mc must exceed 1, got {}",
                self.rho_mc
            )));
        }
        Ok(())
    }
}

/// `clamp(round_half_up(rho_s * sqrt(m)), 1, m)`.
pub fn landmark_count(m: usize, rho_s: f64) -> usize {
    let n = (rho_s * (m as f64).sqrt() + 0.5).floor();
    (n.max(1.0) as usize).min(m.max(1))
}

/// `max(1, floor(m / rho_mc))`.
pub fn max_clusters(m: usize, rho_mc: f64) -> usize {
    ((m as f64 / rho_mc).floor() as usize).max(1)
}

/// Number of pairwise distance evaluations [`sample_clust`] performs on a
/// set of `m` records.
pub fn count_distance_computations(m: usize, p: &SampleParams) -> usize {
    landmark_count(m, p.rho_s) * m
}

/// Draws `n` distinct positions from `0..m` by a partial Fisher-Yates
/// shuffle driven by ChaCha8 seeded with `seed`. Positions come back in
/// draw order. The draw sequence for a given `(m, n, seed)` is stable.
pub fn draw_landmarks(m: usize, n: usize, seed: u64) -> Vec<usize> {
    let n = n.min(m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<usize> = (0..m).collect();
    for i in 0..n {
        let j = rng.gen_range(i as u64..m as u64) as usize;
        pos.swap(i, j);
    }
    pos.truncate(n);
    pos
}

/// Splits the records `c` into at most `max_clusters(|c|, rho_mc)`
/// clusters. Returned members are record indices from `c`.
pub fn sample_clust(
    c: &[usize],
    data: &Dataset,
    metric: &HammingMetric,
    p: &SampleParams,
) -> Result<Clustering> {
    p.validate()?;
    let m = c.len();
    if m < 2 {
        return Err(Error::TooFewElements {
            needed: 2,
            found: m,
        });
    }
    let n = landmark_count(m, p.rho_s);
    let landmarks: Vec<usize> = draw_landmarks(m, n, p.seed)
        .into_iter()
        .map(|i| c[i])
        .collect();

    // n x m; column e holds the embedding of element e
    let d = distance_matrix(&landmarks, c, data, metric)?;
    let mut embedding = vec![0.0; m * n];
    for l in 0..n {
        for (e, &v) in d.row(l).iter().enumerate() {
            embedding[e * n + l] = v;
        }
    }
    drop(d);

    let edges = embedding_mst(&embedding, m, n, p.seed);
    let lm = linkage_from_tree(m, edges)?;
    let groups = cut_maxclust(&lm, max_clusters(m, p.rho_mc));
    let out = groups.map_members(|i| c[i]);
    Ok(Clustering::new(
        out.into_clusters()
            .into_iter()
            .map(|mut cl| {
                cl.provenance = Provenance::Sample;
                cl
            })
            .collect(),
    ))
}

/// Point sets up to this size get an exact Euclidean minimum spanning
/// tree; larger ones use the random projection forest.
pub const EXACT_MST_LIMIT: usize = 4096;

const FOREST_TREES: usize = 8;
const FOREST_LEAF: usize = 32;

/// Spanning tree of `m` points of dimension `dim` for single linkage.
///
/// Points with bit-identical coordinates are joined to their first
/// occurrence by zero-weight edges. Up to [`EXACT_MST_LIMIT`] distinct
/// points the tree is the exact Euclidean minimum spanning tree; above it
/// the tree is the minimum spanning tree of a candidate graph holding all
/// pairs that share a leaf in some tree of a random projection forest.
fn embedding_mst(points: &[f64], m: usize, dim: usize, seed: u64) -> Vec<Edge> {
    let row = |i: usize| &points[i * dim..(i + 1) * dim];

    let mut edges = Vec::with_capacity(m.saturating_sub(1));
    let mut first: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut unique = Vec::new();
    for e in 0..m {
        let bits: Vec<u64> = row(e).iter().map(|v| v.to_bits()).collect();
        match first.get(&bits) {
            Some(&rep) => edges.push((rep, e, 0.0)),
            None => {
                first.insert(bits, e);
                unique.push(e);
            }
        }
    }
    drop(first);

    if unique.len() < 2 {
        return edges;
    }
    let view = Points {
        data: points,
        dim,
        ids: &unique,
    };
    let tree = if unique.len() <= EXACT_MST_LIMIT {
        exact_mst(&view)
    } else {
        forest_mst(&view, seed)
    };
    edges.extend(
        tree.into_iter()
            .map(|(a, b, d2)| (unique[a], unique[b], d2.sqrt())),
    );
    edges
}

/// Distinct points addressed by position in `ids`.
struct Points<'a> {
    data: &'a [f64],
    dim: usize,
    ids: &'a [usize],
}

impl Points<'_> {
    fn len(&self) -> usize {
        self.ids.len()
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        let e = self.ids[i];
        &self.data[e * self.dim..(e + 1) * self.dim]
    }

    fn squared(&self, i: usize, j: usize) -> f64 {
        squared_below(self.row(i), self.row(j), f64::INFINITY).expect("finite coordinates")
    }
}

/// Prim's algorithm; edges carry squared lengths. Candidate updates are
/// pruned with `(sum(a) - sum(b))^2 / dim <= |a - b|^2` and by abandoning
/// partial sums that already exceed the candidate's key.
fn exact_mst(p: &Points) -> Vec<Edge> {
    let u = p.len();
    let sums: Vec<f64> = (0..u).map(|i| p.row(i).iter().sum()).collect();
    let inv_dim = 1.0 / p.dim as f64;
    // guards the bound against rounding in the sums
    let slack = 1.0 - 1e-9;

    let mut edges = Vec::with_capacity(u - 1);
    let mut key = vec![f64::INFINITY; u];
    let mut parent = vec![0usize; u];
    let mut remaining: Vec<usize> = (1..u).collect();
    let mut current = 0usize;
    while !remaining.is_empty() {
        let a = p.row(current);
        let sa = sums[current];
        let mut best = usize::MAX;
        let mut best_key = f64::INFINITY;
        for (pos, &v) in remaining.iter().enumerate() {
            let k = key[v];
            let ds = sa - sums[v];
            if ds * ds * inv_dim * slack < k {
                if let Some(d2) = squared_below(a, p.row(v), k) {
                    key[v] = d2;
                    parent[v] = current;
                }
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

/// Minimum spanning tree of the random projection forest candidate graph,
/// with leftover components joined by an exact tree over one
/// representative each. Edges carry squared lengths.
fn forest_mst(p: &Points, seed: u64) -> Vec<Edge> {
    let u = p.len();
    let mut candidates: Vec<Edge> = (0..FOREST_TREES)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1 + t as u64);
            projection_tree_pairs(p, &mut rng)
        })
        .collect::<Vec<_>>()
        .concat();
    candidates
        .par_sort_unstable_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));

    let mut uf = UnionFind::new(u);
    let mut tree = Vec::with_capacity(u - 1);
    for (a, b, d2) in candidates {
        if uf.find(a) != uf.find(b) {
            uf.union(a, b);
            tree.push((a, b, d2));
        }
    }
    if tree.len() < u - 1 {
        let reps: Vec<usize> = uf.groups().into_iter().map(|g| g[0]).collect();
        let sub = mst_prim(reps.len(), |i, j| p.squared(reps[i], reps[j]));
        tree.extend(sub.into_iter().map(|(i, j, d2)| (reps[i], reps[j], d2)));
    }
    tree
}

/// Pairs of points sharing a leaf of one random projection tree, as
/// `(i, j, squared distance)` with `i < j`.
fn projection_tree_pairs(p: &Points, rng: &mut ChaCha8Rng) -> Vec<Edge> {
    let mut idx: Vec<usize> = (0..p.len()).collect();
    let mut out = Vec::new();
    let mut stack = vec![(0, idx.len())];
    let mut proj = Vec::new();
    while let Some((lo, hi)) = stack.pop() {
        let len = hi - lo;
        if len <= FOREST_LEAF {
            let leaf = &mut idx[lo..hi];
            leaf.sort_unstable();
            for (k, &i) in leaf.iter().enumerate() {
                for &j in &leaf[k + 1..] {
                    out.push((i, j, p.squared(i, j)));
                }
            }
            continue;
        }
        // hyperplane bisecting two random members
        let a = idx[lo + rng.gen_range(0..len)];
        let b = loop {
            let b = idx[lo + rng.gen_range(0..len)];
            if b != a {
                break b;
            }
        };
        let (ra, rb) = (p.row(a), p.row(b));
        proj.clear();
        proj.extend(idx[lo..hi].iter().map(|&i| {
            p.row(i)
                .iter()
                .zip(ra.iter().zip(rb))
                .map(|(x, (y, z))| (y - z) * (x - 0.5 * (y + z)))
                .sum::<f64>()
        }));
        let mut order: Vec<usize> = (0..len).collect();
        order.sort_unstable_by(|&x, &y| proj[x].total_cmp(&proj[y]).then(x.cmp(&y)));
        let zeros = proj.iter().filter(|&&v| v <= 0.0).count();
        // degenerate hyperplanes fall back to halving the projection order
        let split = if zeros == 0 || zeros == len {
            len / 2
        } else {
            zeros
        };
        let sorted: Vec<usize> = order.iter().map(|&o| idx[lo + o]).collect();
        idx[lo..hi].copy_from_slice(&sorted);
        stack.push((lo + split, hi));
        stack.push((lo, lo + split));
    }
    out
}

/// `|a - b|^2` if it is strictly below `limit`.
#[inline]
fn squared_below(a: &[f64], b: &[f64], limit: f64) -> Option<f64> {
    let mut acc = 0.0;
    let mut chunks_a = a.chunks_exact(8);
    let mut chunks_b = b.chunks_exact(8);
    for (ca, cb) in (&mut chunks_a).zip(&mut chunks_b) {
        for i in 0..8 {
            let t = ca[i] - cb[i];
            acc += t * t;
        }
        if acc >= limit {
            return None;
        }
    }
    for (x, y) in chunks_a.remainder().iter().zip(chunks_b.remainder()) {
        let t = x - y;
        acc += t * t;
    }
    (acc < limit).then_some(acc)
}
