//! Lloyd's algorithm on scalars.
//!
//! Values are sorted once; with sorted centroids every cluster is a contiguous
//! run of the sorted values, so an iteration is `O(k log n)` using prefix sums.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Clone, Debug)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iterations: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 256,
            max_iterations: 50,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KMeans<T> {
    /// Strictly ascending.
    pub centroids: Vec<T>,
    /// Within-cluster sum of squared errors of the final assignment.
    pub sse: f64,
    /// SSE after every assignment step.
    pub sse_history: Vec<f64>,
    pub iterations: usize,
}

/// `true` when `v` is at least as close to `lo` as to `hi` (`lo <= hi`).
/// Shared by training and index assignment so both agree on ties.
#[inline]
pub(crate) fn closer_to_lower(v: f64, lo: f64, hi: f64) -> bool {
    v - lo <= hi - v
}

struct Sorted {
    values: Vec<f64>,
    s1: Vec<f64>,
}

impl Sorted {
    fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        let mut s1 = Vec::with_capacity(values.len() + 1);
        let mut acc = 0.0;
        s1.push(0.0);
        for &v in &values {
            acc += v;
            s1.push(acc);
        }
        Self { values, s1 }
    }

    /// Cluster boundaries: cluster `j` is `values[b[j]..b[j+1]]`.
    fn assign(&self, c: &[f64]) -> Vec<usize> {
        let mut b = Vec::with_capacity(c.len() + 1);
        b.push(0);
        for w in c.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let start = *b.last().unwrap();
            let end = start + self.values[start..].partition_point(|&v| closer_to_lower(v, lo, hi));
            b.push(end);
        }
        b.push(self.values.len());
        b
    }

    fn sse(&self, c: &[f64], b: &[usize]) -> f64 {
        c.iter()
            .enumerate()
            .map(|(j, &cj)| {
                let (s, e) = (b[j], b[j + 1]);
                // direct sum keeps this exact enough for monotonicity checks
                self.values[s..e]
                    .iter()
                    .map(|v| (v - cj) * (v - cj))
                    .sum::<f64>()
            })
            .sum()
    }

    fn mean(&self, s: usize, e: usize) -> f64 {
        let m = (self.s1[e] - self.s1[s]) / (e - s) as f64;
        // prefix-sum cancellation can push the mean a hair outside the run
        m.clamp(self.values[s], self.values[e - 1])
    }

    /// Value with the largest distance to its centroid; lowest index on ties.
    fn farthest(&self, c: &[f64], b: &[usize]) -> Option<f64> {
        let mut best: Option<(f64, usize)> = None;
        for (j, &cj) in c.iter().enumerate() {
            let (s, e) = (b[j], b[j + 1]);
            if s == e {
                continue;
            }
            for idx in [s, e - 1] {
                let d = (self.values[idx] - cj).abs();
                if d > 0.0 && best.map_or(true, |(bd, bi)| d > bd || (d == bd && idx < bi)) {
                    best = Some((d, idx));
                }
            }
        }
        best.map(|(_, i)| self.values[i])
    }
}

fn insert_sorted(c: &mut Vec<f64>, v: f64) {
    let at = c.partition_point(|&x| x < v);
    if c.get(at) != Some(&v) {
        c.insert(at, v);
    }
}

/// Drops centroids with empty clusters and refills up to `k` with the farthest values.
fn reseed(data: &Sorted, c: &mut Vec<f64>, k: usize) -> Vec<usize> {
    let mut b = data.assign(c);
    loop {
        let empty = (0..c.len()).any(|j| b[j] == b[j + 1]);
        if !empty && c.len() >= k {
            return b;
        }
        if empty {
            let keep: Vec<f64> = (0..c.len())
                .filter(|&j| b[j] < b[j + 1])
                .map(|j| c[j])
                .collect();
            *c = keep;
            b = data.assign(c);
        }
        match data.farthest(c, &b) {
            Some(v) if c.len() < k => {
                insert_sorted(c, v);
                b = data.assign(c);
            }
            _ => return b,
        }
    }
}

/// Scalar k-means.
///
/// Initialized at `k` evenly spaced sample quantiles; stops after
/// `max_iterations` Lloyd steps or when the assignment no longer changes. When
/// the input has at most `k` distinct values the centroids are exactly those
/// values.
pub fn kmeans_1d<T: Real>(values: &[T], config: &KMeansConfig) -> Result<KMeans<T>> {
    if values.is_empty() {
        return Err(Error::InvalidInput("k-means on an empty value list".into()));
    }
    if config.k == 0 {
        return Err(Error::InvalidInput("k-means with k = 0".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("k-means input".into()));
    }
    let data = Sorted::new(values.iter().map(|v| v.as_f64()).collect());
    let mut distinct = data.values.clone();
    distinct.dedup();
    if distinct.len() <= config.k {
        return Ok(KMeans {
            centroids: distinct.into_iter().map(T::lit).collect(),
            sse: 0.0,
            sse_history: vec![0.0],
            iterations: 0,
        });
    }

    let n = data.values.len();
    let k = config.k;
    let mut c: Vec<f64> = (0..k)
        .map(|j| data.values[(((j as f64 + 0.5) * n as f64 / k as f64) as usize).min(n - 1)])
        .collect();
    c.dedup();

    let mut history = Vec::new();
    let mut prev: Option<Vec<usize>> = None;
    let mut iterations = 0;
    let mut bounds;
    loop {
        bounds = reseed(&data, &mut c, k);
        history.push(data.sse(&c, &bounds));
        if prev.as_ref() == Some(&bounds) || iterations >= config.max_iterations {
            break;
        }
        iterations += 1;
        c = (0..c.len())
            .map(|j| data.mean(bounds[j], bounds[j + 1]))
            .collect();
        c.dedup();
        prev = Some(bounds);
    }
    let sse = *history.last().unwrap();
    Ok(KMeans {
        centroids: c.into_iter().map(T::lit).collect(),
        sse,
        sse_history: history,
        iterations,
    })
}
