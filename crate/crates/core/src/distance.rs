//! Weighted Hamming distance and dense distance matrices.
//!
//! `hamming(u, v) = (1/d) * sum_i w_i * [u_i != v_i]`. The denominator is
//! the attribute count, so weighted distances may exceed 1. The optional
//! [`Normalization::WeightSum`] mode divides by `sum_i w_i` instead.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::schema::{AttributeSchema, Dataset, Record, NULL_CODE};

/// Default ceiling on the number of cells a single distance matrix may hold.
pub const DEFAULT_CELL_BUDGET: u128 = 1_000_000_000;

/// Per-attribute nonnegative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "weights must be finite and nonnegative, got {w}"
            )));
        }
        Ok(WeightVector(weights))
    }

    pub fn unit(d: usize) -> Self {
        WeightVector(vec![1.0; d])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// `attribute_id=weight` lines in schema order.
    pub fn to_text(&self, schema: &AttributeSchema) -> Result<String> {
        if schema.d() != self.len() {
            return Err(Error::LengthMismatch {
                expected: schema.d(),
                found: self.len(),
            });
        }
        let mut out = String::new();
        for (id, w) in schema.ids().zip(&self.0) {
            // `{}` on f64 prints the shortest string that round-trips.
            let _ = writeln!(out, "{id}={w}");
        }
        Ok(out)
    }

    /// Parses `attribute_id=weight` lines; every schema attribute must be
    /// present exactly once, in any order.
    pub fn parse(text: &str, schema: &AttributeSchema) -> Result<Self> {
        let mut weights = vec![None; schema.d()];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = lineno as u64 + 1;
            let (id, w) = line.split_once('=').ok_or_else(|| {
                Error::parse(lineno, format!("expected `id=weight`, got `{line}`"))
            })?;
            let pos = schema.position(id.trim()).ok_or_else(|| {
                Error::parse(lineno, format!("unknown attribute `{}`", id.trim()))
            })?;
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid weight `{}`", w.trim())))?;
            if weights[pos].replace(w).is_some() {
                return Err(Error::parse(
                    lineno,
                    format!("duplicate attribute `{}`", id.trim()),
                ));
            }
        }
        let weights = weights
            .into_iter()
            .zip(schema.ids())
            .map(|(w, id)| w.ok_or_else(|| Error::Schema(format!("missing weight for `{id}`"))))
            .collect::<Result<Vec<_>>>()?;
        WeightVector::new(weights)
    }

    pub fn load(path: impl AsRef<Path>, schema: &AttributeSchema) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        WeightVector::parse(&text, schema)
    }

    pub fn save(&self, path: impl AsRef<Path>, schema: &AttributeSchema) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text(schema)?).map_err(|e| Error::file(path, e))
    }
}

/// How missing values compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NullPolicy {
    /// Null against anything, including another null, is a mismatch.
    #[default]
    Mismatch,
    /// Positions where either side is null contribute nothing.
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// Divide by the attribute count `d`.
    #[default]
    AttributeCount,
    /// Divide by the weight total, keeping distances in `[0, 1]`.
    WeightSum,
}

/// Weighted Hamming kernel with an evaluation counter.
#[derive(Debug)]
pub struct HammingMetric {
    weights: WeightVector,
    nulls: NullPolicy,
    normalization: Normalization,
    denominator: f64,
    evaluations: AtomicU64,
}

impl Clone for HammingMetric {
    fn clone(&self) -> Self {
        HammingMetric {
            weights: self.weights.clone(),
            nulls: self.nulls,
            normalization: self.normalization,
            denominator: self.denominator,
            evaluations: AtomicU64::new(0),
        }
    }
}

impl HammingMetric {
    pub fn new(weights: WeightVector, nulls: NullPolicy, normalization: Normalization) -> Self {
        let denominator = match normalization {
            Normalization::AttributeCount => weights.len() as f64,
            Normalization::WeightSum => weights.sum().max(f64::MIN_POSITIVE),
        };
        HammingMetric {
            weights,
            nulls,
            normalization,
            denominator,
            evaluations: AtomicU64::new(0),
        }
    }

    /// Unit weights, nulls as mismatches, `1/d` normalization.
    pub fn unit(d: usize) -> Self {
        Self::with_weights(WeightVector::unit(d))
    }

    pub fn with_weights(weights: WeightVector) -> Self {
        Self::new(weights, NullPolicy::default(), Normalization::default())
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn nulls(&self) -> NullPolicy {
        self.nulls
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn d(&self) -> usize {
        self.weights.len()
    }

    /// Number of pairwise evaluations performed by the matrix builders
    /// since construction or the last [`reset_evaluations`](Self::reset_evaluations).
    pub fn evaluations(&self) -> u64 {
        self.evaluations.load(Ordering::Relaxed)
    }

    pub fn reset_evaluations(&self) {
        self.evaluations.store(0, Ordering::Relaxed);
    }

    pub(crate) fn count(&self, n: usize) {
        self.evaluations.fetch_add(n as u64, Ordering::Relaxed);
    }

    /// Distance between two interned rows. Not counted.
    #[inline]
    pub fn distance(&self, a: &[u32], b: &[u32]) -> f64 {
        let w = self.weights.as_slice();
        let mut acc = 0.0;
        match self.nulls {
            NullPolicy::Mismatch => {
                for i in 0..w.len() {
                    if a[i] != b[i] || a[i] == NULL_CODE {
                        acc += w[i];
                    }
                }
            }
            NullPolicy::Ignore => {
                for i in 0..w.len() {
                    if a[i] != b[i] && a[i] != NULL_CODE && b[i] != NULL_CODE {
                        acc += w[i];
                    }
                }
            }
        }
        acc / self.denominator
    }

    /// Distance between two records of `data`. Not counted.
    #[inline]
    pub fn between(&self, data: &Dataset, i: usize, j: usize) -> f64 {
        self.distance(data.row(i), data.row(j))
    }

    /// Distance between two raw records, comparing values as strings.
    pub fn records(&self, u: &Record, v: &Record) -> Result<f64> {
        let d = self.d();
        for r in [u, v] {
            if r.values.len() != d {
                return Err(Error::LengthMismatch {
                    expected: d,
                    found: r.values.len(),
                });
            }
        }
        let w = self.weights.as_slice();
        let mut acc = 0.0;
        for ((x, y), &wi) in u.values.iter().zip(&v.values).zip(w) {
            let mismatch = match (x, y, self.nulls) {
                (Some(a), Some(b), _) => a != b,
                (_, _, NullPolicy::Mismatch) => true,
                (_, _, NullPolicy::Ignore) => false,
            };
            if mismatch {
                acc += wi;
            }
        }
        Ok(acc / self.denominator)
    }
}

/// Weighted Hamming distance between two records.
pub fn hamming(u: &Record, v: &Record, w: &WeightVector, nulls: NullPolicy) -> Result<f64> {
    HammingMetric::new(w.clone(), nulls, Normalization::AttributeCount).records(u, v)
}

/// Dense row-major matrix of distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        Ok(DistanceMatrix { rows, cols, values })
    }

    /// Builds a symmetric matrix from `f(i, j)` evaluated for `i < j`.
    pub fn symmetric(m: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = vec![0.0; m * m];
        for i in 0..m {
            for j in i + 1..m {
                let v = f(i, j);
                values[i * m + j] = v;
                values[j * m + i] = v;
            }
        }
        DistanceMatrix {
            rows: m,
            cols: m,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn distance_matrix(
    rows: &[usize],
    cols: &[usize],
    data: &Dataset,
    metric: &HammingMetric,
) -> Result<DistanceMatrix> {
    distance_matrix_with_budget(rows, cols, data, metric, DEFAULT_CELL_BUDGET)
}

/// `values[i][j] = hamming(rows[i], cols[j])`. Rows are computed in
/// parallel; every cell is evaluated independently so the result does not
/// depend on the worker count.
pub fn distance_matrix_with_budget(
    rows: &[usize],
    cols: &[usize],
    data: &Dataset,
    metric: &HammingMetric,
    cell_budget: u128,
) -> Result<DistanceMatrix> {
    if data.schema().d() != metric.d() {
        return Err(Error::LengthMismatch {
            expected: data.schema().d(),
            found: metric.d(),
        });
    }
    let cells = rows.len() as u128 * cols.len() as u128;
    if cells > cell_budget {
        return Err(Error::MatrixTooLarge {
            cells,
            budget: cell_budget,
        });
    }
    for &i in rows.iter().chain(cols) {
        data.check_index(i)?;
    }
    let ncols = cols.len();
    let mut values = vec![0.0; rows.len() * ncols];
    if ncols > 0 {
        values
            .par_chunks_mut(ncols)
            .zip(rows.par_iter())
            .for_each(|(out, &r)| {
                let a = data.row(r);
                for (slot, &c) in out.iter_mut().zip(cols) {
                    *slot = metric.distance(a, data.row(c));
                }
                metric.count(ncols);
            });
    }
    Ok(DistanceMatrix {
        rows: rows.len(),
        cols: ncols,
        values,
    })
}
